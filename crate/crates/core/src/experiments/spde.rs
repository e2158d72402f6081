use serde::Serialize;

use super::{csv_table, fmt, Report, Tolerances};
use crate::chaos::{write_chaos, BasisLayout, ChaosVector, MultiIndex};
use crate::colombeau::{classify, gen_expectation, gen_number_classify, ClassifyConfig, GenSequence, Verdict};
use crate::error::{Error, Result};
use crate::products::max_abs_diff;
use crate::spde::{
    compare_wick_vs_generalized, fk_from_ensemble, fk_solve, order0_ratio, residual, simulate_paths,
    uniqueness_probe, FkSolution, McParams, ProductChoice, ResidualConfig, SdeSpec, SolutionKind,
};

fn mc_params(n_paths: usize, dt: f64, seed: u64) -> McParams {
    McParams::new(n_paths, dt, seed)
}

fn layout_for(m: Option<usize>, order: usize) -> Result<std::sync::Arc<BasisLayout>> {
    BasisLayout::new(2, m.map_or(1, |m| m + 1), order)
}

fn coefficient_rows(u: &FkSolution) -> Vec<Vec<String>> {
    let m = u.m.map(|m| m.to_string()).unwrap_or_else(|| "none".into());
    u.value
        .iter()
        .map(|(alpha, c)| {
            vec![
                fmt(u.t),
                fmt(u.x),
                m.clone(),
                alpha.order().to_string(),
                alpha.to_string(),
                fmt(c),
                fmt(u.se(alpha)),
            ]
        })
        .collect()
}

const COEFF_HEADER: [&str; 7] = ["t", "x", "m", "order", "alpha", "coeff", "stderr"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub preset: String,
    pub t: f64,
    pub xs: Vec<f64>,
    /// Noise levels; `None` switches the noise off.
    pub ms: Option<Vec<usize>>,
    pub order: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub p_grid: Vec<i32>,
    pub classify: ClassifyConfig,
}

impl SolveConfig {
    /// Preset defaults: levels `0..=8` for noisy presets, noise off otherwise.
    pub fn for_preset(preset: &str) -> Result<Self> {
        let spec = SdeSpec::preset(preset)?;
        Ok(Self {
            preset: preset.to_string(),
            t: 0.25,
            xs: vec![0.0, 1.0],
            ms: spec.noisy.then(|| (0..=8).collect()),
            order: 2,
            n_paths: 100_000,
            dt: 1e-3,
            seed: 0,
            p_grid: vec![0, 1],
            classify: ClassifyConfig::default(),
        })
    }
}

/// Chaos coefficients of `u_m(t, x)` per point and level.
pub fn spde_solve(cfg: &SolveConfig, tol: &Tolerances) -> Result<Report> {
    let spec = SdeSpec::preset(&cfg.preset)?;
    if cfg.xs.is_empty() {
        return Err(Error::Config("need at least one x".into()));
    }
    if let Some(ms) = &cfg.ms {
        if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("noise levels must be nonempty and increasing".into()));
        }
    }
    let mut report = Report::new("spde-solve", cfg)?;
    let params = mc_params(cfg.n_paths, cfg.dt, cfg.seed);
    let m_max = cfg.ms.as_ref().map(|ms| *ms.last().unwrap());
    let layout = layout_for(m_max, cfg.order)?;
    let levels: Vec<Option<usize>> = match &cfg.ms {
        Some(ms) => ms.iter().map(|&m| Some(m)).collect(),
        None => vec![None],
    };

    let mut rows = Vec::new();
    let mut init_gap = 0.0f64;
    let mut degenerate = 0usize;
    let mut worst_z = 0.0f64;
    let mut not_moderate = 0usize;
    let mut growth = Vec::new();
    for (i, &x) in cfg.xs.iter().enumerate() {
        let u0 = fk_solve(&spec, &layout, 0.0, x, m_max, cfg.order, &params)?;
        let exact = ChaosVector::constant(&layout, spec.initial.eval(x));
        init_gap = init_gap
            .max(max_abs_diff(&u0.value, &exact))
            .max(u0.stderr.norm_value(0));

        let ens = simulate_paths(&spec, cfg.t, x, m_max, &params)?;
        let mut sols = Vec::new();
        for &m in &levels {
            let u = fk_from_ensemble(&ens, &spec, &layout, m, cfg.order, SolutionKind::Generalized)?;
            degenerate += u.degenerate as usize;
            rows.extend(coefficient_rows(&u));
            let tag = m.map(|m| m.to_string()).unwrap_or_else(|| "none".into());
            report.push_artifact(&format!("u_x{i}_m{tag}.chaos"), write_chaos(&u.value));
            sols.push(u);
        }
        if cfg.ms.is_none() {
            if let Some(exact) = spec.heat_closed_form(cfg.t, x) {
                let u = &sols[0];
                let se = u.se(&MultiIndex::zero());
                worst_z = worst_z.max((u.value.expectation() - exact).abs() / se);
            }
        } else if sols.len() >= crate::colombeau::MIN_LEVELS + 1 {
            let seq = GenSequence::new(sols.iter().map(|u| u.value.clone()).collect(), format!("u(x={x})"))?;
            let reports = classify(&seq, &cfg.p_grid, &cfg.classify);
            not_moderate += reports.iter().filter(|r| r.verdict != Verdict::Moderate).count();
            growth.extend(reports);
            growth.push(gen_number_classify(&gen_expectation(&seq), &cfg.classify));
        }
    }
    report.push_artifact("coefficients.csv", csv_table(&COEFF_HEADER, rows)?);
    report.check_le(tol, "initial_exact", init_gap, 0.0, "u(0, x) = f(x) H_0");
    report.check_le(tol, "ess_nondegenerate", degenerate as f64, 0.0, "count of runs with ESS below 1%");
    if cfg.ms.is_none() && spec.heat_closed_form(cfg.t, 0.0).is_some() {
        report.check_le(tol, "closed_form", worst_z, 3.0, "standard errors from the noise-free closed form");
    }
    if !growth.is_empty() {
        report.check_le(tol, "solution_moderate", not_moderate as f64, 0.0, "count of non-moderate verdicts");
        report.push_artifact(
            "growth.csv",
            csv_table(
                &crate::colombeau::GrowthReport::CSV_HEADER,
                growth.iter().map(|r| r.csv_record().to_vec()),
            )?,
        );
    }
    report.finish(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRunConfig {
    pub preset: String,
    pub t: f64,
    pub x: f64,
    pub m: Option<usize>,
    pub order: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub h_t: f64,
    pub h_x: f64,
    pub batches: usize,
}

impl ResidualRunConfig {
    pub fn for_preset(preset: &str) -> Result<Self> {
        let spec = SdeSpec::preset(preset)?;
        Ok(Self {
            preset: preset.to_string(),
            t: 0.25,
            x: 0.5,
            m: spec.noisy.then_some(4),
            order: 2,
            n_paths: 100_000,
            dt: 1e-3,
            seed: 0,
            h_t: 0.01,
            h_x: 0.1,
            batches: 20,
        })
    }
}

/// Finite-difference residual of the generalized solution, with the Wick
/// coupling as a negative control.
pub fn spde_residual(cfg: &ResidualRunConfig, tol: &Tolerances) -> Result<Report> {
    let spec = SdeSpec::preset(&cfg.preset)?;
    let mut report = Report::new("spde-residual", cfg)?;
    let layout = layout_for(cfg.m, cfg.order)?;
    let mut rc = ResidualConfig::new(cfg.t, cfg.x, cfg.m, mc_params(cfg.n_paths, cfg.dt, cfg.seed));
    rc.order = cfg.order;
    rc.h_t = cfg.h_t;
    rc.h_x = cfg.h_x;
    rc.batches = cfg.batches;
    rc.p_grid = vec![0, 1];
    let r = residual(&spec, &layout, &rc)?;
    let rows = r.norms.iter().map(|n| {
        vec![
            n.p.to_string(),
            serde_json::to_value(n.product).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default(),
            fmt(n.residual),
            fmt(n.budget),
            fmt(n.mc),
            fmt(n.fd),
            fmt(n.dt),
            n.within.to_string(),
        ]
    });
    report.push_artifact(
        "residual.csv",
        csv_table(&["p", "product", "residual", "budget", "mc", "fd", "dt", "within"], rows)?,
    );
    let point = r
        .get(0, ProductChoice::Pointwise)
        .ok_or_else(|| Error::Config("residual report lacks p = 0".into()))?;
    let wick = r
        .get(0, ProductChoice::Wick)
        .ok_or_else(|| Error::Config("residual report lacks p = 0".into()))?;
    let pathwise = matches!(spec.diffusion, crate::spde::Diffusion::Constant { sigma } if sigma == 0.0);
    if pathwise {
        report.check_le(tol, "pathwise_residual", point.residual, 2.0 * cfg.dt, "p = 0, bound 2 dt");
    } else {
        report.check_le(
            tol,
            "residual_within_budget",
            point.residual / point.budget,
            1.0,
            format!("p = 0, residual {:.4e} against budget {:.4e}", point.residual, point.budget),
        );
        report.check_le(
            tol,
            "fd_below_mc",
            point.fd / point.mc,
            1.0,
            "stencil error estimate against three standard errors",
        );
    }
    if cfg.m.is_some() {
        report.check_le(
            tol,
            "wick_control_exceeds_budget",
            point.budget.max(point.residual) / wick.residual,
            1.0,
            format!("Wick-coupled residual {:.4e} must exceed the budget", wick.residual),
        );
    }
    report.finish(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareConfig {
    pub preset: String,
    pub t: f64,
    pub x: f64,
    pub ms: Vec<usize>,
    /// Levels over which `max |g|^2 / m` should be stable.
    pub stable_ms: Vec<usize>,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Constant test function coefficient for the S-transforms.
    pub h: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            preset: "heat-plus-noise".into(),
            t: 0.25,
            x: 0.0,
            ms: vec![0, 1, 2, 4, 8, 16],
            stable_ms: vec![4, 8, 16],
            n_paths: 100_000,
            dt: 1e-3,
            seed: 0,
            h: 0.1,
        }
    }
}

/// Generalized against Wick solutions on one shared path ensemble.
pub fn spde_compare_wick(cfg: &CompareConfig, tol: &Tolerances) -> Result<Report> {
    let spec = SdeSpec::preset(&cfg.preset)?;
    if cfg.ms.len() < 2 || cfg.ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("need two or more increasing noise levels".into()));
    }
    if cfg.stable_ms.iter().any(|m| *m == 0 || !cfg.ms.contains(m)) {
        return Err(Error::Config("stable levels must be positive members of the level list".into()));
    }
    let mut report = Report::new("spde-compare-wick", cfg)?;
    let m_max = *cfg.ms.last().unwrap();
    let layout = layout_for(Some(m_max), 1)?;
    let ens = simulate_paths(&spec, cfg.t, cfg.x, Some(m_max), &mc_params(cfg.n_paths, cfg.dt, cfg.seed))?;
    let zero = MultiIndex::zero();
    let mut rows = Vec::new();
    let mut wick0 = Vec::new();
    let mut gen0 = Vec::new();
    let mut worst_ratio_gap = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut bound = Vec::new();
    for &m in &cfg.ms {
        let u = fk_from_ensemble(&ens, &spec, &layout, Some(m), 1, SolutionKind::Generalized)?;
        let v = fk_from_ensemble(&ens, &spec, &layout, Some(m), 1, SolutionKind::Wick)?;
        let h = vec![cfg.h; m + 1];
        let c = compare_wick_vs_generalized(&u, &v, &h)?;
        let direct = order0_ratio(&ens, &spec, Some(m));
        worst_ratio_gap = worst_ratio_gap.max((c.ratio / direct - 1.0).abs());
        min_ratio = min_ratio.min(c.ratio);
        let g_bound = if m > 0 { ens.max_noise_sq_ratio(m) } else { f64::NAN };
        if cfg.stable_ms.contains(&m) {
            bound.push(g_bound);
        }
        rows.push(vec![
            m.to_string(),
            fmt(u.value.get(&zero)),
            fmt(u.se(&zero)),
            fmt(v.value.get(&zero)),
            fmt(v.se(&zero)),
            fmt(c.ratio),
            fmt(c.s_generalized),
            fmt(c.s_wick),
            fmt(c.outside_factor),
            fmt(u.mean_noise_sq),
            fmt(g_bound),
        ]);
        wick0.push((v.value.get(&zero), v.se(&zero)));
        gen0.push(u.value.get(&zero));
    }
    report.push_artifact(
        "compare.csv",
        csv_table(
            &[
                "m",
                "generalized_order0",
                "generalized_se",
                "wick_order0",
                "wick_se",
                "ratio",
                "s_generalized",
                "s_wick",
                "outside_factor",
                "mean_noise_sq",
                "max_noise_sq_over_m",
            ],
            rows,
        )?,
    );
    let (w_ref, se_ref) = wick0[0];
    let wick_drift = wick0
        .iter()
        .map(|&(w, se)| (w - w_ref).abs() / (3.0 * (se * se + se_ref * se_ref).sqrt()))
        .fold(0.0, f64::max);
    report.check_le(tol, "wick_order0_invariant", wick_drift, 1.0, "largest drift in units of 3 combined SE");
    let decreases = gen0.windows(2).filter(|w| w[1] < w[0]).count();
    report.check_le(tol, "generalized_order0_nondecreasing", decreases as f64, 0.0, "count of decreases over m");
    report.check_le(tol, "ratio_at_least_one", 1.0 - min_ratio, 0.0, format!("min ratio {min_ratio:.6}"));
    report.check_le(tol, "ratio_pathwise_identity", worst_ratio_gap, 1e-12, "against the per-path reweighting");
    let (lo, hi) = bound.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &b| (lo.min(b), hi.max(b)));
    report.check_le(
        tol,
        "noise_bound_stable",
        (hi - lo) / hi,
        0.2,
        format!("relative spread of max |g|^2 / m over m in {:?}: {lo:.4e} .. {hi:.4e}", cfg.stable_ms),
    );
    report.finish(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessConfig {
    pub preset: String,
    pub t: f64,
    pub x: f64,
    pub ms: (usize, usize),
    pub order: usize,
    pub seeds: (u64, u64),
    pub n_paths: usize,
    pub dt: f64,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self {
            preset: "heat-plus-noise".into(),
            t: 0.25,
            x: 0.0,
            ms: (4, 4),
            order: 1,
            seeds: (1, 2),
            n_paths: 100_000,
            dt: 1e-3,
        }
    }
}

/// Association of solution sequences from two independent seeds.
pub fn uniqueness(cfg: &UniquenessConfig, tol: &Tolerances) -> Result<Report> {
    let spec = SdeSpec::preset(&cfg.preset)?;
    if cfg.seeds.0 == cfg.seeds.1 {
        return Err(Error::Config("the two seeds must differ".into()));
    }
    let mut report = Report::new("uniqueness", cfg)?;
    let layout = layout_for(Some(cfg.ms.0.max(cfg.ms.1)), cfg.order)?;
    let r = uniqueness_probe(
        &spec,
        &layout,
        cfg.t,
        cfg.x,
        cfg.ms,
        cfg.order,
        &mc_params(cfg.n_paths, cfg.dt, 0),
        cfg.seeds,
    )?;
    let failing = r.tests.iter().filter(|t| !t.3).count();
    report.push_artifact(
        "uniqueness.csv",
        csv_table(
            &["test", "last_pairing", "tolerance", "associated"],
            r.tests
                .iter()
                .map(|(name, last, tol, ok)| vec![name.clone(), fmt(*last), fmt(*tol), ok.to_string()]),
        )?,
    );
    report.check_le(tol, "associated", failing as f64, 0.0, "count of test elements failing at 3 combined SE");
    report.finish(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_heat_solve() {
        let mut cfg = SolveConfig::for_preset("heat-gaussian").unwrap();
        cfg.n_paths = 4000;
        cfg.dt = 0.01;
        let r = spde_solve(&cfg, &Tolerances::new()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!(r.artifact("coefficients.csv").unwrap().content.starts_with("t,x,m,order,alpha,coeff,stderr\n"));
        assert!(r.artifact("u_x1_mnone.chaos").is_some());
    }

    #[test]
    fn noisy_solve_has_growth_table() {
        let mut cfg = SolveConfig::for_preset("heat-plus-noise").unwrap();
        cfg.n_paths = 2000;
        cfg.dt = 0.01;
        cfg.xs = vec![0.0];
        let r = spde_solve(&cfg, &Tolerances::new()).unwrap();
        assert!(r.check("solution_moderate").is_some());
        assert!(r.artifact("growth.csv").is_some());
    }

    #[test]
    fn compare_small() {
        let cfg = CompareConfig {
            n_paths: 2000,
            dt: 0.01,
            ..Default::default()
        };
        let r = spde_compare_wick(&cfg, &Tolerances::new()).unwrap();
        for name in ["wick_order0_invariant", "generalized_order0_nondecreasing", "ratio_at_least_one", "ratio_pathwise_identity"] {
            assert!(r.check(name).unwrap().pass, "{}", r.summary());
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let cfg = CompareConfig {
            stable_ms: vec![3],
            ..Default::default()
        };
        assert!(spde_compare_wick(&cfg, &Tolerances::new()).is_err());
        let cfg = UniquenessConfig {
            seeds: (1, 1),
            ..Default::default()
        };
        assert!(uniqueness(&cfg, &Tolerances::new()).is_err());
        assert!(SolveConfig::for_preset("nope").is_err());
    }
}
