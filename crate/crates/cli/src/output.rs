//! CSV and JSON emission. Numbers use 17 significant digits in scientific
//! notation so every double round-trips.

use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.root.join(name);
        let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let path = self.root.join(name);
        let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        s.push('\n');
        fs::write(&path, s)?;
        self.written.push(path);
        Ok(())
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// File-name fragment for an excitation ratio, e.g. 0.1 → "0.1".
pub fn ratio_tag(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn writes_files() {
        let d = tempfile::tempdir().unwrap();
        let mut o = OutDir::create(d.path()).unwrap();
        o.csv("a.csv", &header(&["x", "y"]), vec![vec![num(1.0), num(2.0)]]).unwrap();
        o.json("b.json", &vec![1, 2]).unwrap();
        let a = std::fs::read_to_string(d.path().join("a.csv")).unwrap();
        assert_eq!(a.lines().count(), 2);
        assert_eq!(o.written().len(), 2);
    }
}
