use serde::Serialize;

use super::{csv_table, fmt, slope, Report, Tolerances};
use crate::chaos::{ln_factorial, BasisLayout, ChaosVector};
use crate::colombeau::{classify, embed, ClassifyConfig, GenSequence, GrowthReport, Verdict};
use crate::error::{Error, Result};
use crate::noise::{
    brownian, brownian_coefficients, brownian_coefficients_recurrence, donsker_delta, gaussian_density,
    mollified_delta_oracle, white_noise,
};

fn reports_csv(reports: &[GrowthReport]) -> Result<String> {
    csv_table(
        &GrowthReport::CSV_HEADER,
        reports.iter().map(|r| r.csv_record().to_vec()),
    )
}

/// `ln sum_{lo < n <= hi} x^n / n!`.
fn ln_exp_series_window(x: f64, lo: usize, hi: usize) -> f64 {
    let terms: Vec<f64> = (lo + 1..=hi).map(|n| n as f64 * x.ln() - ln_factorial(n)).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedConfig {
    /// Only `wexp` (Wick exponential of a first-order element).
    pub element: String,
    pub f: Vec<f64>,
    pub levels: usize,
    pub order_cap: usize,
    pub a_grid: Vec<f64>,
    pub p_grid: Vec<i32>,
    pub classify: ClassifyConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            element: "wexp".into(),
            f: vec![0.3, 0.4],
            levels: 24,
            order_cap: 80,
            a_grid: vec![1.0, 2.0, 3.0, 4.0],
            p_grid: vec![0, 1, 2],
            classify: ClassifyConfig::default(),
        }
    }
}

/// Weighted tails `e^{a m} ||phi - Pi_m phi||_p` of a Wick exponential.
pub fn embed_study(cfg: &EmbedConfig, tol: &Tolerances) -> Result<Report> {
    if cfg.element != "wexp" {
        return Err(Error::Config(format!("unknown element `{}`; expected `wexp`", cfg.element)));
    }
    if cfg.f.is_empty() || cfg.levels >= cfg.order_cap {
        return Err(Error::Config("need a nonempty f and levels below the order cap".into()));
    }
    let mut report = Report::new("embed-study", cfg)?;
    let layout = BasisLayout::new(1, cfg.f.len(), cfg.order_cap)?;
    let phi = ChaosVector::wick_exp(&layout, &cfg.f)?;
    let f2: f64 = cfg.f.iter().map(|v| v * v).sum();

    let mut rows = Vec::new();
    let mut worst_oracle = 0.0f64;
    let mut violations = 0usize;
    let mut worst_final = f64::NEG_INFINITY;
    // logs[p][m] = ln ||phi - Pi_m phi||_p
    let mut logs = vec![Vec::with_capacity(cfg.levels + 1); cfg.p_grid.len()];
    for m in 0..=cfg.levels {
        let rest = phi.sub(&phi.project_order(m))?;
        for (pi, &p) in cfg.p_grid.iter().enumerate() {
            let ln = rest.norm(p).log_value;
            let exact = 0.5 * ln_exp_series_window((2.0 * p as f64).exp() * f2, m, cfg.order_cap);
            worst_oracle = worst_oracle.max((2.0 * (ln - exact)).exp_m1().abs());
            logs[pi].push(ln);
        }
    }
    let mut good = Vec::new();
    for (pi, &p) in cfg.p_grid.iter().enumerate() {
        for &a in &cfg.a_grid {
            let mut prev = f64::INFINITY;
            let mut bad = 0;
            for m in 0..=cfg.levels {
                let w = a * m as f64 + logs[pi][m];
                if !(w < prev) {
                    bad += 1;
                }
                prev = w;
                rows.push(vec![fmt(a), p.to_string(), m.to_string(), fmt(w), fmt(w.exp())]);
            }
            if bad == 0 && prev.exp() <= 1e-8 {
                good.push(format!("(a={a}, p={p})"));
            }
            violations += bad;
            worst_final = worst_final.max(prev);
        }
    }
    let good = if good.is_empty() { "none".to_string() } else { good.join(" ") };
    report.push_artifact(
        "embed.csv",
        csv_table(&["a", "p", "m", "log_weighted_tail", "weighted_tail"], rows)?,
    );
    report.check_le(
        tol,
        "embed_tail_oracle",
        worst_oracle,
        1e-10,
        "relative gap to the closed-form exponential series",
    );
    report.check_le(
        tol,
        "embed_strictly_decreasing",
        violations as f64,
        0.0,
        format!("count of non-decreasing steps; (a, p) decreasing and below 1e-8 at M: {good}"),
    );
    report.check_le(
        tol,
        "embed_decay_at_levels",
        worst_final.exp(),
        1e-8,
        format!(
            "max over a, p of e^(a M) ||phi - Pi_M phi||_p at M = {}; ln = {worst_final:.3}",
            cfg.levels
        ),
    );

    // the embedded sequence minus the constant sequence
    let diff = embed(&phi, cfg.levels)?
        .sub(&GenSequence::constant(&phi, cfg.levels + 1)?)?
        .with_label("iota(phi) - phi");
    let reports = classify(&diff, &cfg.p_grid, &cfg.classify);
    report.push_artifact("classification.csv", reports_csv(&reports)?);
    report.finish(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseGrowthConfig {
    pub xs: Vec<f64>,
    pub levels: usize,
    pub p_grid: Vec<i32>,
    pub classify: ClassifyConfig,
}

impl Default for NoiseGrowthConfig {
    fn default() -> Self {
        Self {
            xs: vec![0.0, 0.8, -1.5],
            levels: 40,
            p_grid: vec![0, 1, 2],
            classify: ClassifyConfig::default(),
        }
    }
}

/// Growth classification of `m -> W_m(x)` and of the zero sequence.
pub fn noise_growth(cfg: &NoiseGrowthConfig, tol: &Tolerances) -> Result<Report> {
    if cfg.xs.is_empty() || cfg.p_grid.is_empty() {
        return Err(Error::Config("need at least one point and one norm index".into()));
    }
    let mut report = Report::new("noise-growth", cfg)?;
    let layout = BasisLayout::new(1, cfg.levels + 1, 1)?;
    let mut all = Vec::new();
    for &x in &cfg.xs {
        let terms = (0..=cfg.levels)
            .map(|m| white_noise(&layout, &[x], m))
            .collect::<Result<Vec<_>>>()?;
        let seq = GenSequence::new(terms, format!("W(x={x})"))?;
        all.extend(classify(&seq, &cfg.p_grid, &cfg.classify));
    }
    let not_moderate = all.iter().filter(|r| r.verdict != Verdict::Moderate).count();
    let max_rate = all.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    report.check_le(tol, "white_noise_moderate", not_moderate as f64, 0.0, "count of non-moderate verdicts");
    report.check_le(tol, "white_noise_rate", max_rate, 0.1, "fitted exponential rate");

    let zero = GenSequence::new(vec![ChaosVector::zero(&layout); cfg.levels + 1], "0")?;
    let zr = classify(&zero, &cfg.p_grid, &cfg.classify);
    let not_negligible = zr.iter().filter(|r| r.verdict != Verdict::Negligible).count();
    report.check_le(tol, "zero_negligible", not_negligible as f64, 0.0, "count of non-negligible verdicts");
    all.extend(zr);
    report.push_artifact("growth.csv", reports_csv(&all)?);
    report.finish(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonskerConfig {
    pub seed: u64,
    /// `(a, t)` pairs.
    pub points: Vec<(f64, f64)>,
    pub n: usize,
    pub eps: f64,
    pub order: usize,
    pub modes: usize,
    pub t: f64,
    pub s: f64,
    pub j_grid: Vec<usize>,
}

impl Default for DonskerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            points: vec![(0.0, 1.0), (1.0, 1.0), (0.5, 0.25)],
            n: 1_000_000,
            eps: 0.05,
            order: 4,
            modes: 16,
            t: 1.0,
            s: 0.4,
            j_grid: vec![8, 16, 32, 64, 128, 256],
        }
    }
}

/// Brownian chaos coefficients and the Donsker delta against independent
/// oracles.
pub fn donsker_check(cfg: &DonskerConfig, tol: &Tolerances) -> Result<Report> {
    if cfg.j_grid.len() < 2 || cfg.j_grid.windows(2).any(|w| w[0] >= w[1]) || cfg.j_grid[0] == 0 {
        return Err(Error::Config("j grid must be increasing, positive, with two or more entries".into()));
    }
    if !(cfg.t > 0.0 && cfg.s > 0.0 && cfg.eps > 0.0) || cfg.n == 0 {
        return Err(Error::Config("t, s, eps and n must be positive".into()));
    }
    let mut report = Report::new("donsker-check", cfg)?;
    let jmax = *cfg.j_grid.last().unwrap();
    let b = brownian_coefficients(cfg.t, jmax)?;
    let oracle = brownian_coefficients_recurrence(cfg.t, jmax);
    let layout = BasisLayout::new(1, jmax, 1)?;
    let mut rows = Vec::new();
    let (mut decreases, mut worst_tail) = (0usize, 0.0f64);
    let (mut log_j, mut log_err) = (Vec::new(), Vec::new());
    let (mut sum, mut sum_oracle, mut prev) = (0.0, 0.0, 0.0);
    let mut next = cfg.j_grid.iter().peekable();
    for j in 0..jmax {
        sum += b[j] * b[j];
        sum_oracle += oracle[j] * oracle[j];
        if sum < prev {
            decreases += 1;
        }
        prev = sum;
        if next.peek() == Some(&&(j + 1)) {
            next.next();
            let big_j = j + 1;
            let tail_gap = ((cfg.t - sum) - (cfg.t - sum_oracle)).abs();
            worst_tail = worst_tail.max(tail_gap);
            let bt = brownian(&layout, cfg.t, big_j)?;
            let bs = brownian(&layout, cfg.s, big_j)?;
            let pair = bt.pairing(&bs)?;
            let err = (pair - cfg.t.min(cfg.s)).abs();
            log_j.push((big_j as f64).ln());
            log_err.push(err.ln());
            rows.push(vec![big_j.to_string(), fmt(sum), fmt(cfg.t - sum), fmt(cfg.t - sum_oracle), fmt(pair), fmt(err)]);
        }
    }
    report.push_artifact(
        "brownian.csv",
        csv_table(&["J", "sum_b_sq", "tail", "tail_oracle", "pairing_t_s", "pairing_error"], rows)?,
    );
    report.check_le(tol, "brownian_monotone", decreases as f64, 0.0, "count of decreases of sum b_j^2");
    report.check_le(tol, "brownian_tail_oracle", worst_tail, 1e-6, "gap to the recurrence oracle");
    let trend = slope(&log_j, &log_err);
    report.check_le(
        tol,
        "brownian_pairing_trend",
        trend,
        0.0,
        "log-log slope of |<<B(t),B(s)>> - min(s,t)| against J",
    );

    let dl = BasisLayout::new(1, cfg.modes, cfg.order)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (i, &(a, t)) in cfg.points.iter().enumerate() {
        let d = donsker_delta(&dl, a, t, cfg.order, cfg.modes)?;
        let e = d.expectation();
        let (est, se) = mollified_delta_oracle(a, t, cfg.eps, cfg.n, cfg.seed.wrapping_add(i as u64));
        let z = (e - est).abs() / se;
        worst = worst.max(z);
        rows.push(vec![fmt(a), fmt(t), fmt(e), fmt(gaussian_density(a, t)), fmt(est), fmt(se), fmt(z)]);
    }
    report.push_artifact(
        "donsker.csv",
        csv_table(&["a", "t", "expectation", "density", "mc_estimate", "mc_se", "z"], rows)?,
    );
    report.check_le(
        tol,
        "donsker_expectation",
        worst,
        3.0,
        format!("standard errors against the mollified oracle, n = {}, eps = {}", cfg.n, cfg.eps),
    );
    report.finish(tol)
}
