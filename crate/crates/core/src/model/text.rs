//! Matrix text formats.
//!
//! Dense: whitespace-separated rows, one per line.
//! Coordinate: a header `coordinate <n> [symmetric]` followed by `row col value`
//! triples with 0-based indices. `#` starts a comment in both formats.

use crate::error::{Error, Result};
use ndarray::Array2;

pub fn parse_matrix(source: &str) -> Result<Array2<f64>> {
    let lines: Vec<(usize, &str)> = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let Some(&(first_line, first)) = lines.first() else {
        return Err(Error::Parse {
            line: 0,
            message: "empty matrix".into(),
        });
    };
    let mut head = first.split_whitespace();
    if head.next().map(|t| t.eq_ignore_ascii_case("coordinate")) == Some(true) {
        let n: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: first_line,
                message: "coordinate header needs a dimension".into(),
            })?;
        let symmetric = match head.next() {
            None => false,
            Some(t) if t.eq_ignore_ascii_case("symmetric") => true,
            Some(t) => {
                return Err(Error::Parse {
                    line: first_line,
                    message: format!("unknown header token '{t}'"),
                })
            }
        };
        parse_coordinate(n, symmetric, &lines[1..])
    } else {
        parse_dense(&lines)
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let x: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: '{tok}'"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite entry '{tok}'"),
        });
    }
    Ok(x)
}

fn parse_dense(lines: &[(usize, &str)]) -> Result<Array2<f64>> {
    let rows = lines
        .iter()
        .map(|&(ln, l)| l.split_whitespace().map(|t| parse_number(t, ln)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let n = rows.len();
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: r,
                cols: row.len(),
            });
        }
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

fn parse_coordinate(n: usize, symmetric: bool, lines: &[(usize, &str)]) -> Result<Array2<f64>> {
    let mut a = Array2::<f64>::zeros((n, n));
    let mut seen = vec![false; n * n];
    for &(ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                message: "expected 'row col value'".into(),
            });
        }
        let idx = |t: &str| -> Result<usize> {
            let i: usize = t.parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("bad index '{t}'"),
            })?;
            if i >= n {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("index {i} out of range for dimension {n}"),
                });
            }
            Ok(i)
        };
        let (i, j) = (idx(toks[0])?, idx(toks[1])?);
        let x = parse_number(toks[2], ln)?;
        let mut put = |i: usize, j: usize| -> Result<()> {
            if seen[i * n + j] {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("duplicate entry ({i}, {j})"),
                });
            }
            seen[i * n + j] = true;
            a[[i, j]] = x;
            Ok(())
        };
        put(i, j)?;
        if symmetric && i != j {
            put(j, i)?;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_with_comments() {
        let a = parse_matrix("# toy\n1 2\n\n2 3 # trailing\n").unwrap();
        assert_eq!(a, ndarray::arr2(&[[1.0, 2.0], [2.0, 3.0]]));
    }

    #[test]
    fn coordinate_symmetric() {
        let a = parse_matrix("coordinate 3 symmetric\n0 0 1\n0 2 -1.5\n").unwrap();
        assert_eq!(a[[2, 0]], -1.5);
        assert_eq!(a[[0, 2]], -1.5);
        assert_eq!(a[[1, 1]], 0.0);
    }

    #[test]
    fn coordinate_general_and_duplicates() {
        let a = parse_matrix("coordinate 2\n0 1 4\n1 0 4\n").unwrap();
        assert_eq!(a[[1, 0]], 4.0);
        assert!(parse_matrix("coordinate 2 symmetric\n0 1 4\n1 0 4\n").is_err());
        assert!(parse_matrix("coordinate 2\n0 2 4\n").is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            parse_matrix("1 2\n3\n").unwrap_err(),
            Error::NotSquare { rows: 2, row: 1, cols: 1 }
        ));
        assert!(matches!(parse_matrix("1 2 3\n4 5 6\n").unwrap_err(), Error::NotSquare { .. }));
        assert!(parse_matrix("1 x\n2 3").is_err());
        assert!(parse_matrix("  \n# nothing\n").is_err());
    }
}
