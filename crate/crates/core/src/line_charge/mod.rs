//! Line distribution of degeneracies ρ(μ) = (p+1) μ^p / μ_max^(p+1) on
//! [0, μ_max] and the divergence pattern of C(δ) at δ = 0.

mod quadrature;

pub use quadrature::{integrate, integrate_pieces};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineChargeModel {
    pub p: f64,
    pub mu_max: f64,
}

impl LineChargeModel {
    pub fn new(p: f64, mu_max: f64) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent p must be >= 0, got {p}")));
        }
        if !(mu_max > 0.0) || !mu_max.is_finite() {
            return Err(Error::InvalidArgument(format!("mu_max must be positive, got {mu_max}")));
        }
        Ok(Self { p, mu_max })
    }

    pub fn density(&self, mu: f64) -> f64 {
        if mu < 0.0 || mu > self.mu_max {
            0.0
        } else {
            (self.p + 1.0) * mu.powf(self.p) / self.mu_max.powf(self.p + 1.0)
        }
    }

    /// ∫ρ over the support.
    pub fn normalization(&self) -> Result<f64> {
        integrate(&|m| self.density(m), 0.0, self.mu_max, 1e-12, 0.0)
    }

    /// Breakpoints: cutoff, decades around |δ| (or the cutoff) and μ_max.
    fn breakpoints(&self, delta: f64, mu_min: f64) -> Vec<f64> {
        let mut pts = vec![mu_min, self.mu_max];
        let anchor = if delta != 0.0 { delta.abs() } else { mu_min };
        if anchor > 0.0 {
            for k in -4..=24 {
                let x = anchor * 10f64.powi(k);
                if x > mu_min && x < self.mu_max {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn check_cutoff(&self, mu_min: f64) -> Result<()> {
        if !(mu_min >= 0.0) || mu_min >= self.mu_max {
            return Err(Error::InvalidArgument(format!(
                "cutoff must lie in [0, mu_max), got {mu_min}"
            )));
        }
        Ok(())
    }
}

/// C(δ) = ∫ρ (μ²−δ²)/(μ²+δ²)² dμ over [mu_min, μ_max].
pub fn line_c(model: &LineChargeModel, delta: f64, mu_min: f64) -> Result<f64> {
    model.check_cutoff(mu_min)?;
    if delta == 0.0 && mu_min == 0.0 && model.p <= 1.0 {
        return Err(Error::InvalidArgument(
            "C(0) diverges for p <= 1 without a cutoff".into(),
        ));
    }
    let d2 = delta * delta;
    let f = |m: f64| {
        let m2 = m * m;
        model.density(m) * (m2 - d2) / ((m2 + d2) * (m2 + d2))
    };
    integrate_pieces(&f, &model.breakpoints(delta, mu_min), QUAD_REL_TOL, 0.0)
}

/// F(δ) = ∫ρ δ/(δ²+μ²) dμ over [mu_min, μ_max].
pub fn line_f(model: &LineChargeModel, delta: f64, mu_min: f64) -> Result<f64> {
    model.check_cutoff(mu_min)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let f = |m: f64| model.density(m) * delta / (delta * delta + m * m);
    integrate_pieces(&f, &model.breakpoints(delta, mu_min), QUAD_REL_TOL, 0.0)
}

/// F(δ) − F(−δ).
pub fn f_jump(model: &LineChargeModel, delta: f64) -> Result<f64> {
    Ok(line_f(model, delta.abs(), 0.0)? - line_f(model, -delta.abs(), 0.0)?)
}

/// Single charge at distance μ: (μ²−δ²)/(μ²+δ²)².
pub fn point_charge_c(mu: f64, delta: f64) -> f64 {
    let (m2, d2) = (mu * mu, delta * delta);
    (m2 - d2) / ((m2 + d2) * (m2 + d2))
}

fn require_finite_c0(model: &LineChargeModel) -> Result<()> {
    if model.p <= 1.0 {
        return Err(Error::InvalidArgument("difference kernels need p > 1".into()));
    }
    Ok(())
}

/// C(δ) − C(0) from the combined kernel −δ²(3μ²+δ²)/(μ²(μ²+δ²)²).
pub fn c_minus_c0(model: &LineChargeModel, delta: f64) -> Result<f64> {
    require_finite_c0(model)?;
    let d2 = delta * delta;
    let f = |m: f64| {
        let m2 = m * m;
        -model.density(m) * d2 * (3.0 * m2 + d2) / (m2 * (m2 + d2) * (m2 + d2))
    };
    integrate_pieces(&f, &model.breakpoints(delta, 0.0), QUAD_REL_TOL, 0.0)
}

/// 2(C(δ) − C(0))/δ², which tends to C''(0).
pub fn d2_probe(model: &LineChargeModel, delta: f64) -> Result<f64> {
    require_finite_c0(model)?;
    let d2 = delta * delta;
    let f = |m: f64| {
        let m2 = m * m;
        -2.0 * model.density(m) * (3.0 * m2 + d2) / (m2 * (m2 + d2) * (m2 + d2))
    };
    integrate_pieces(&f, &model.breakpoints(delta, 0.0), QUAD_REL_TOL, 0.0)
}

/// (2(C(2δ)−C(0)) − 8(C(δ)−C(0)))/δ⁴, which tends to C''''(0); the kernel is
/// combined in closed form so nothing cancels.
pub fn d4_probe(model: &LineChargeModel, delta: f64) -> Result<f64> {
    require_finite_c0(model)?;
    let d2 = delta * delta;
    let f = |m: f64| {
        let m2 = m * m;
        let a = m2 + d2;
        let b = m2 + 4.0 * d2;
        24.0 * model.density(m) * (4.0 * d2 * d2 + 15.0 * d2 * m2 + 5.0 * m2 * m2)
            / (m2 * a * a * b * b)
    };
    integrate_pieces(&f, &model.breakpoints(delta, 0.0), QUAD_REL_TOL, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "C(0)")]
    C0,
    #[serde(rename = "d2C(0)")]
    D2C,
    #[serde(rename = "d4C(0)")]
    D4C,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quantity::Q => "Q",
            Quantity::C0 => "C(0)",
            Quantity::D2C => "d2C(0)",
            Quantity::D4C => "d4C(0)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Finite,
    Divergent,
    FinitePositive,
    Zero,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub scale: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityVerdict {
    pub quantity: Quantity,
    pub label: Label,
    pub predicted: Label,
    pub agrees: bool,
    /// Set when the label follows from a lower derivative diverging.
    pub implied: bool,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub p: f64,
    pub mu_max: f64,
    pub verdicts: Vec<QuantityVerdict>,
}

impl Classification {
    pub fn verdict(&self, q: Quantity) -> &QuantityVerdict {
        self.verdicts.iter().find(|v| v.quantity == q).unwrap()
    }

    pub fn all_agree(&self) -> bool {
        self.verdicts.iter().all(|v| v.agrees)
    }
}

/// The published table: Q finite only for p = 0; C(0) divergent for p ≤ 1;
/// C'' divergent for p ≤ 3; C'''' divergent for p ≤ 7.
pub fn predicted_label(q: Quantity, p: f64) -> Label {
    let div = |bound: f64| if p <= bound { Label::Divergent } else { Label::Finite };
    match q {
        Quantity::Q => {
            if p == 0.0 {
                Label::FinitePositive
            } else {
                Label::Zero
            }
        }
        Quantity::C0 => div(1.0),
        Quantity::D2C => div(3.0),
        Quantity::D4C => div(7.0),
    }
}

/// Cutoff sequence μ_min = 10⁻²…10⁻⁸ (relative to μ_max).
pub const CUTOFF_DECADES: std::ops::RangeInclusive<i32> = 2..=8;
/// Shrinking-δ sequence 10⁻¹…10⁻⁶ (relative to μ_max).
pub const DELTA_DECADES: std::ops::RangeInclusive<i32> = 1..=6;

/// Growth ratio per decade above which a sequence is divergent.
pub const GROWTH_DIVERGENT: f64 = 1.5;
/// Successive-increment ratio at or below which a sequence is Cauchy-converging.
pub const CAUCHY_FINITE: f64 = 0.2;
/// Increment ratio at or above which constant increments signal a log divergence.
pub const LOG_DIVERGENT: f64 = 0.9;

/// Judge a sequence sampled once per decade towards the singular limit.
pub fn judge_sequence(values: &[f64]) -> Label {
    let n = values.len();
    if n < 4 || values.iter().any(|v| !v.is_finite()) {
        return Label::Undetermined;
    }
    let a = |i: usize| values[i].abs();
    let growth = a(n - 1) / a(n - 2);
    if growth > GROWTH_DIVERGENT && a(n - 2) / a(n - 3) > GROWTH_DIVERGENT {
        return Label::Divergent;
    }
    let d = |i: usize| values[i + 1] - values[i];
    let scale = (0..n).map(a).fold(0.0_f64, f64::max);
    if d(n - 2).abs() <= 1e-8 * scale {
        return Label::Finite;
    }
    let r1 = d(n - 2).abs() / d(n - 3).abs();
    let r0 = d(n - 3).abs() / d(n - 4).abs();
    let same_sign = d(n - 2).signum() == d(n - 3).signum() && d(n - 3).signum() == d(n - 4).signum();
    if same_sign && r1 >= LOG_DIVERGENT && r0 >= LOG_DIVERGENT {
        return Label::Divergent;
    }
    if r1 <= CAUCHY_FINITE && r0 <= CAUCHY_FINITE {
        return Label::Finite;
    }
    Label::Undetermined
}

fn probe_seq(
    decades: std::ops::RangeInclusive<i32>,
    mu_max: f64,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<Probe>> {
    decades
        .map(|k| {
            let scale = mu_max * 10f64.powi(-k);
            Ok(Probe {
                scale,
                value: f(scale)?,
            })
        })
        .collect()
}

fn values(p: &[Probe]) -> Vec<f64> {
    p.iter().map(|x| x.value).collect()
}

fn verdict(q: Quantity, p: f64, label: Label, implied: bool, probes: Vec<Probe>) -> QuantityVerdict {
    let predicted = predicted_label(q, p);
    QuantityVerdict {
        quantity: q,
        label,
        predicted,
        agrees: label == predicted,
        implied,
        probes,
    }
}

/// Probe Q, C(0), C''(0) and C''''(0) numerically and set the published
/// labels alongside.
pub fn classify_divergence(model: &LineChargeModel) -> Result<Classification> {
    let p = model.p;
    let mm = model.mu_max;

    let q_probes = probe_seq(DELTA_DECADES, mm, |d| f_jump(model, d))?;
    let qv = values(&q_probes);
    let q_label = {
        let n = qv.len();
        let decaying = (1..n).all(|i| qv[i].abs() <= LOG_DIVERGENT * qv[i - 1].abs());
        match judge_sequence(&qv) {
            _ if decaying => Label::Zero,
            Label::Finite if qv[n - 1] > 0.0 => Label::FinitePositive,
            _ => Label::Undetermined,
        }
    };

    let c0_probes = probe_seq(CUTOFF_DECADES, mm, |m| line_c(model, 0.0, m))?;
    let c0_label = judge_sequence(&values(&c0_probes));

    let (d2_label, d2_implied, d2_probes) = if c0_label == Label::Divergent {
        (Label::Divergent, true, Vec::new())
    } else if p <= 1.0 {
        (Label::Undetermined, false, Vec::new())
    } else {
        let pr = probe_seq(DELTA_DECADES, mm, |d| d2_probe(model, d))?;
        (judge_sequence(&values(&pr)), false, pr)
    };

    let (d4_label, d4_implied, d4_probes) = if d2_label == Label::Divergent {
        (Label::Divergent, true, Vec::new())
    } else if p <= 1.0 {
        (Label::Undetermined, false, Vec::new())
    } else {
        let pr = probe_seq(DELTA_DECADES, mm, |d| d4_probe(model, d))?;
        (judge_sequence(&values(&pr)), false, pr)
    };

    Ok(Classification {
        p,
        mu_max: mm,
        verdicts: vec![
            verdict(Quantity::Q, p, q_label, false, q_probes),
            verdict(Quantity::C0, p, c0_label, false, c0_probes),
            verdict(Quantity::D2C, p, d2_label, d2_implied, d2_probes),
            verdict(Quantity::D4C, p, d4_label, d4_implied, d4_probes),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        for p in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let m = LineChargeModel::new(p, 1.7).unwrap();
            assert!((m.normalization().unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn elementary_integrals() {
        let m = LineChargeModel::new(0.0, 1.0).unwrap();
        let c = line_c(&m, 0.0, 1e-8).unwrap();
        assert!((c - (1e8 - 1.0)).abs() / 1e8 < 1e-10);
        let m = LineChargeModel::new(2.0, 1.0).unwrap();
        assert!((line_c(&m, 0.0, 0.0).unwrap() - 3.0).abs() < 1e-9);
        // p = 0 closed form: C(δ) = −μ/(μ²+δ²) |₀¹ = −1/(1+δ²)... plus the δ → 0 pole
        let m = LineChargeModel::new(0.0, 1.0).unwrap();
        let d: f64 = 0.3;
        assert!((line_c(&m, d, 0.0).unwrap() + 1.0 / (1.0 + d * d)).abs() < 1e-9);
    }

    #[test]
    fn jump_for_flat_density() {
        let m = LineChargeModel::new(0.0, 2.0).unwrap();
        let j = f_jump(&m, 1e-9).unwrap();
        assert!((j - std::f64::consts::PI / 2.0).abs() < 1e-6);
        assert_eq!(line_f(&m, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_of_f_is_c() {
        let m = LineChargeModel::new(1.0, 1.0).unwrap();
        let h = 1e-5;
        let fd = (line_f(&m, 0.3 + h, 0.0).unwrap() - line_f(&m, 0.3 - h, 0.0).unwrap()) / (2.0 * h);
        assert!((fd - line_c(&m, 0.3, 0.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn difference_kernels_match_direct_values() {
        let m = LineChargeModel::new(5.0, 1.0).unwrap();
        let d = 0.2;
        let direct = line_c(&m, d, 0.0).unwrap() - line_c(&m, 0.0, 0.0).unwrap();
        assert!((c_minus_c0(&m, d).unwrap() - direct).abs() < 1e-9);
        let d2 = 2.0 * direct / (d * d);
        assert!((d2_probe(&m, d).unwrap() - d2).abs() < 1e-7);
        let direct2 = line_c(&m, 2.0 * d, 0.0).unwrap() - line_c(&m, 0.0, 0.0).unwrap();
        let d4 = (2.0 * direct2 - 8.0 * direct) / d.powi(4);
        assert!((d4_probe(&m, d).unwrap() - d4).abs() < 1e-5 * d4.abs());
    }

    #[test]
    fn symmetric_in_delta() {
        let m = LineChargeModel::new(0.5, 1.0).unwrap();
        for d in [0.01, 0.3, 2.0] {
            let a = line_c(&m, d, 0.0).unwrap();
            let b = line_c(&m, -d, 0.0).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn judge_rules() {
        let power: Vec<f64> = (0..6).map(|k| 10f64.powf(0.5 * k as f64)).collect();
        assert_eq!(judge_sequence(&power), Label::Divergent);
        let log: Vec<f64> = (0..6).map(|k| 1.0 + k as f64).collect();
        assert_eq!(judge_sequence(&log), Label::Divergent);
        let conv: Vec<f64> = (0..6).map(|k| 3.0 - 10f64.powi(-k)).collect();
        assert_eq!(judge_sequence(&conv), Label::Finite);
        let slow: Vec<f64> = (0..6).map(|k| 3.0 - 0.5f64.powi(k)).collect();
        assert_eq!(judge_sequence(&slow), Label::Undetermined);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LineChargeModel::new(-0.5, 1.0).is_err());
        assert!(LineChargeModel::new(1.0, 0.0).is_err());
        let m = LineChargeModel::new(1.0, 1.0).unwrap();
        assert!(line_c(&m, 0.0, 0.0).is_err());
        assert!(line_c(&m, 0.1, 2.0).is_err());
    }
}
