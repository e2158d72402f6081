//! Sequences of chaos vectors modulo negligible ones.
//!
//! Growth classes are decided numerically on the finite range `m <= M`: a
//! log-linear fit over the upper half of the levels plus decayed-sequence
//! probes. Nothing here is an asymptotic proof; every report carries its
//! fit residual.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::chaos::ChaosVector;
use crate::error::{Error, Result};
use crate::products;

/// Minimal `M` for a sequence `m = 0..=M`.
pub const MIN_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSequence {
    terms: Vec<ChaosVector>,
    label: String,
}

impl GenSequence {
    pub fn new(terms: Vec<ChaosVector>, label: impl Into<String>) -> Result<Self> {
        if terms.len() < MIN_LEVELS + 1 {
            return Err(Error::InvalidArgument(format!(
                "sequence needs levels 0..=M with M >= {MIN_LEVELS}, got {} terms",
                terms.len()
            )));
        }
        let dim = terms[0].layout().dim();
        if let Some(t) = terms.iter().find(|t| t.layout().dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: t.layout().dim(),
            });
        }
        Ok(Self {
            terms,
            label: label.into(),
        })
    }

    /// `F, F, ..., F` over `m = 0..=M`.
    pub fn constant(f: &ChaosVector, levels: usize) -> Result<Self> {
        Self::new(vec![f.clone(); levels + 1], format!("const({})", short(f)))
    }

    pub fn terms(&self) -> &[ChaosVector] {
        &self.terms
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest level `M`.
    pub fn levels(&self) -> usize {
        self.terms.len() - 1
    }

    fn zip_with(
        &self,
        other: &Self,
        label: String,
        op: impl Fn(&ChaosVector, &ChaosVector) -> Result<ChaosVector>,
    ) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| op(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, label)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, format!("{}+{}", self.label, other.label), ChaosVector::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, format!("{}-{}", self.label, other.label), ChaosVector::sub)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.scale(a)).collect(),
            label: format!("{a}*{}", self.label),
        }
    }

    /// Pointwise product level by level.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, format!("{}*{}", self.label, other.label), products::mul)
    }

    pub fn wick(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, format!("wick({},{})", self.label, other.label), products::wick)
    }

    /// `log ||phi_m||_p` for every level.
    pub fn log_norms(&self, p: i32) -> Vec<f64> {
        self.terms.iter().map(|t| t.norm(p).log_value).collect()
    }
}

fn short(f: &ChaosVector) -> String {
    format!("{} terms", f.len())
}

/// Real sequence representing an element of the generalized-number ring.
#[derive(Debug, Clone, PartialEq)]
pub struct GenNumber {
    values: Vec<f64>,
    label: String,
}

impl GenNumber {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() < MIN_LEVELS + 1 {
            return Err(Error::InvalidArgument(format!(
                "sequence needs levels 0..=M with M >= {MIN_LEVELS}, got {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("generalized number entries must be finite".into()));
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            format!("{}-{}", self.label, other.label),
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            format!("{}*{}", self.label, other.label),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Negligible,
    Moderate,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Negligible => "negligible",
            Self::Moderate => "moderate",
            Self::Unknown => "unknown",
        })
    }
}

/// Thresholds for [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    /// Rates `a` probed with `e^{aM} ||phi_M|| <= decay_threshold`.
    pub probes: Vec<f64>,
    pub decay_threshold: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            probes: vec![1.0, 2.0, 4.0, 8.0],
            decay_threshold: 1e-8,
        }
    }
}

/// Fitted growth `log ||phi_m|| ~ rate * m + log C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub label: String,
    /// Norm index; `None` for scalar sequences.
    pub p: Option<i32>,
    pub rate: f64,
    /// Smallest `C` with `||phi_m|| <= C e^{rate m}` on every level.
    pub c: f64,
    pub residual: f64,
    pub verdict: Verdict,
}

impl GrowthReport {
    pub const CSV_HEADER: [&'static str; 6] = ["label", "p", "rate", "C", "residual", "verdict"];

    pub fn csv_record(&self) -> [String; 6] {
        [
            self.label.clone(),
            self.p.map(|p| p.to_string()).unwrap_or_default(),
            self.rate.to_string(),
            self.c.to_string(),
            self.residual.to_string(),
            self.verdict.to_string(),
        ]
    }
}

/// Writes reports as CSV with a header row.
pub fn write_reports_csv<W: Write>(reports: &[GrowthReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GrowthReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// `terms[m] = Pi_m F` for `m = 0..=M`.
pub fn embed(f: &ChaosVector, levels: usize) -> Result<GenSequence> {
    let terms = (0..=levels).map(|m| f.project_order(m)).collect();
    GenSequence::new(terms, "iota(F)")
}

/// One report per norm index in `p_grid`.
pub fn classify(s: &GenSequence, p_grid: &[i32], cfg: &ClassifyConfig) -> Vec<GrowthReport> {
    p_grid
        .iter()
        .map(|&p| classify_log_sequence(s.label(), Some(p), &s.log_norms(p), cfg))
        .collect()
}

pub fn gen_number_classify(x: &GenNumber, cfg: &ClassifyConfig) -> GrowthReport {
    let logs: Vec<f64> = x.values.iter().map(|v| v.abs().ln()).collect();
    classify_log_sequence(x.label(), None, &logs, cfg)
}

/// `values[m] = E(phi_m)`.
pub fn gen_expectation(s: &GenSequence) -> GenNumber {
    GenNumber {
        values: s.terms.iter().map(ChaosVector::expectation).collect(),
        label: format!("E({})", s.label),
    }
}

/// Last pairing `<<phi_m - psi_m, test>>` and whether the pairings have
/// settled at zero: the final quarter has max pairwise gap `<= tol` and the
/// last value is within `tol` of zero.
pub fn associated_limit(s: &GenSequence, t: &GenSequence, test: &ChaosVector, tol: f64) -> Result<(f64, bool)> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = s.terms.len().min(t.terms.len());
    let pairings = (0..n)
        .map(|m| s.terms[m].sub(&t.terms[m])?.pairing(test))
        .collect::<Result<Vec<_>>>()?;
    let start = (3 * (n - 1)) / 4;
    let window = &pairings[start..];
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = pairings[n - 1];
    Ok((last, hi - lo <= tol && last.abs() <= tol))
}

/// Shared fit for vector and scalar sequences; `logs[m]` may be `-inf` for
/// zero entries.
pub fn classify_log_sequence(label: &str, p: Option<i32>, logs: &[f64], cfg: &ClassifyConfig) -> GrowthReport {
    let big_m = logs.len() - 1;
    let report = |rate: f64, c: f64, residual: f64, verdict: Verdict| GrowthReport {
        label: label.to_string(),
        p,
        rate,
        c,
        residual,
        verdict,
    };
    if logs.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return report(f64::NAN, f64::NAN, f64::NAN, Verdict::Unknown);
    }
    let upper: Vec<(f64, f64)> = (big_m / 2..=big_m)
        .filter(|&m| logs[m].is_finite())
        .map(|m| (m as f64, logs[m]))
        .collect();
    let last = logs[big_m];
    if last == f64::NEG_INFINITY {
        // Eventually zero (or identically zero): every decayed probe vanishes.
        let (rate, _, residual) = fit(&upper).unwrap_or((f64::NEG_INFINITY, 0.0, 0.0));
        return report(rate, 0.0, residual, Verdict::Negligible);
    }
    let Some((rate, _, residual)) = fit(&upper) else {
        return report(f64::NAN, f64::NAN, f64::NAN, Verdict::Unknown);
    };
    let a_max = cfg.probes.iter().copied().fold(0.0, f64::max);
    let log_threshold = cfg.decay_threshold.ln();
    let decayed = cfg.probes.iter().all(|a| a * big_m as f64 + last <= log_threshold);
    let log_c = logs
        .iter()
        .enumerate()
        .map(|(m, l)| l - rate * m as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = log_c.exp();
    if rate <= -a_max && decayed {
        return report(rate, c, residual, Verdict::Negligible);
    }
    if superexponential(&upper) {
        return report(rate, c, residual, Verdict::Unknown);
    }
    report(rate, c, residual, Verdict::Moderate)
}

/// Least squares `y = a x + b`; returns `(a, b, rms)`.
fn fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (points.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms))
}

/// Slope over the second half of the window clearly exceeds the first.
fn superexponential(points: &[(f64, f64)]) -> bool {
    if points.len() < 4 {
        return false;
    }
    let mid = points.len() / 2;
    let (Some((a1, _, _)), Some((a2, _, _))) = (fit(&points[..=mid]), fit(&points[mid..])) else {
        return false;
    };
    a2 > 0.0 && a2 > a1 + f64::max(0.5, 0.25 * a1.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{BasisLayout, MultiIndex};
    use std::sync::Arc;

    fn layout() -> Arc<BasisLayout> {
        BasisLayout::new(1, 6, 40).unwrap()
    }

    fn scalars(values: impl Fn(usize) -> f64, levels: usize) -> GenNumber {
        GenNumber::new((0..=levels).map(values).collect(), "x").unwrap()
    }

    #[test]
    fn rejects_short_sequences() {
        let z = ChaosVector::zero(&layout());
        assert!(GenSequence::new(vec![z.clone(); 4], "s").is_err());
        assert!(GenSequence::new(vec![z; 5], "s").is_ok());
    }

    #[test]
    fn zero_sequence_negligible() {
        let s = GenSequence::constant(&ChaosVector::zero(&layout()), 16).unwrap();
        for r in classify(&s, &[0, 1, 2], &ClassifyConfig::default()) {
            assert_eq!(r.verdict, Verdict::Negligible);
        }
    }

    #[test]
    fn superexponential_unknown() {
        let l = layout();
        let terms = (0..=16)
            .map(|m| ChaosVector::constant(&l, ((m * m) as f64).exp()))
            .collect();
        let s = GenSequence::new(terms, "e^{m^2}").unwrap();
        assert_eq!(classify(&s, &[0], &ClassifyConfig::default())[0].verdict, Verdict::Unknown);
    }

    #[test]
    fn scalar_examples() {
        let cfg = ClassifyConfig::default();
        let r = gen_number_classify(&scalars(|_| 3.0, 16), &cfg);
        assert_eq!(r.verdict, Verdict::Moderate);
        assert!(r.rate.abs() < 1e-12);
        let r = gen_number_classify(&scalars(|m| (-((m * m) as f64)).exp(), 16), &cfg);
        assert_eq!(r.verdict, Verdict::Negligible);
        let r = gen_number_classify(&scalars(|m| m as f64, 16), &cfg);
        assert_eq!(r.verdict, Verdict::Moderate);
        // moderate bound holds on every level
        let x = scalars(|m| m as f64, 16);
        for (m, v) in x.values().iter().enumerate() {
            assert!(v.abs() <= r.c * (r.rate * m as f64).exp() * (1.0 + 1e-12));
        }
        // slow exponential decay is not negligible
        let r = gen_number_classify(&scalars(|m| (-(m as f64)).exp(), 16), &cfg);
        assert_eq!(r.verdict, Verdict::Moderate);
    }

    #[test]
    fn embed_examples() {
        let l = layout();
        let one = ChaosVector::constant(&l, 1.0);
        let s = embed(&one, 8).unwrap();
        assert!(s.terms().iter().all(|t| *t == one));
        assert_eq!(gen_expectation(&s).values(), &[1.0; 9]);

        // The default probes certify decay only for small |g| at M = 24; a
        // moderate-size exponential decays superexponentially but too late.
        let cfg = ClassifyConfig::default();
        let w = ChaosVector::wick_exp(&l, &[1e-4, -5e-5]).unwrap();
        let diff = embed(&w, 24).unwrap().sub(&GenSequence::constant(&w, 24).unwrap()).unwrap();
        for r in classify(&diff, &[0, 1], &cfg) {
            assert_eq!(r.verdict, Verdict::Negligible, "{r:?}");
        }
        let w = ChaosVector::wick_exp(&l, &[0.3, -0.2]).unwrap();
        let diff = embed(&w, 24).unwrap().sub(&GenSequence::constant(&w, 24).unwrap()).unwrap();
        let r = &classify(&diff, &[0], &cfg)[0];
        assert_eq!(r.verdict, Verdict::Moderate);
        assert!(r.rate < -1.0);
    }

    #[test]
    fn embed_growth_rate() {
        // c_{n e_0} = e^{qn}/(n+1)/sqrt(n!) has ||Pi_m F||_p ~ e^{(p+q)m}.
        let q = 1.0;
        let l = layout();
        let f = ChaosVector::from_coeffs(
            &l,
            (0..=40u32).map(|n| {
                let c = (q * n as f64 - 0.5 * crate::chaos::ln_factorial(n as usize)).exp() / (n as f64 + 1.0);
                (MultiIndex::single(0, n), c)
            }),
        )
        .unwrap();
        let s = embed(&f, 40).unwrap();
        for p in [0, 1, 2] {
            let r = &classify(&s, &[p], &ClassifyConfig::default())[0];
            assert!((r.rate - (p as f64 + q)).abs() < 0.1, "p={p} {r:?}");
        }
    }

    #[test]
    fn embed_is_linear() {
        let l = layout();
        let f = ChaosVector::wick_exp(&l, &[0.5]).unwrap();
        let g = ChaosVector::from_first_order(&l, &[1.0, 2.0]).unwrap();
        let lhs = embed(&f.linear_combination(2.0, &g, -1.0).unwrap(), 6).unwrap();
        let rhs = embed(&f, 6).unwrap().scale(2.0).add(&embed(&g, 6).unwrap().scale(-1.0)).unwrap();
        assert_eq!(lhs.terms(), rhs.terms());
    }

    #[test]
    fn association_examples() {
        let l = layout();
        let f = ChaosVector::from_coeffs(&l, [(MultiIndex::unit(0), 1.0), (MultiIndex::single(1, 2), 0.5)]).unwrap();
        let g = ChaosVector::from_coeffs(&l, [(MultiIndex::unit(0), 1.0)]).unwrap();
        let s = embed(&f, 8).unwrap();
        assert_eq!(associated_limit(&s, &s, &f, 1e-12).unwrap(), (0.0, true));
        let t = embed(&g, 8).unwrap();
        let test = ChaosVector::basis(&l, MultiIndex::single(1, 2)).unwrap();
        assert!(!associated_limit(&s, &t, &test, 1e-6).unwrap().1);

        // stage products against the exact product
        let stages = GenSequence::new(
            (0..=8)
                .map(|m| products::product_seq(&f, &g, products::ProductKind::Sym, m))
                .collect::<Result<Vec<_>>>()
                .unwrap(),
            "stages",
        )
        .unwrap();
        let exact = GenSequence::constant(&products::mul(&f, &g).unwrap(), 8).unwrap();
        for test in [f.clone(), g.clone(), test] {
            assert!(associated_limit(&stages, &exact, &test, 1e-12).unwrap().1);
        }
    }

    #[test]
    fn quotient_consistency_and_ideal() {
        let l = layout();
        let cfg = ClassifyConfig::default();
        let w = ChaosVector::wick_exp(&l, &[1e-4]).unwrap();
        let s = embed(&w, 24).unwrap();
        let t = GenSequence::constant(&w, 24).unwrap();
        let n = s.sub(&t).unwrap();
        assert_eq!(classify(&n, &[0], &cfg)[0].verdict, Verdict::Negligible);
        let de = gen_expectation(&s).sub(&gen_expectation(&t)).unwrap();
        assert_eq!(gen_number_classify(&de, &cfg).verdict, Verdict::Negligible);

        let moderate = GenSequence::constant(&ChaosVector::from_first_order(&l, &[1.0, 1.0]).unwrap(), 24).unwrap();
        let prod = moderate.mul(&n).unwrap();
        assert_eq!(classify(&prod, &[0], &cfg)[0].verdict, Verdict::Negligible);
    }

    #[test]
    fn csv_rows() {
        let r = gen_number_classify(&scalars(|_| 1.0, 8), &ClassifyConfig::default());
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,p,rate,C,residual,verdict\nx,,"));
        assert!(text.trim_end().ends_with(",moderate"));
    }
}
