use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{csv_table, fmt, Report, Tolerances};
use crate::chaos::{BasisLayout, ChaosVector, MultiIndex};
use crate::error::{Error, Result};
use crate::noise::white_noise_squared;
use crate::products::{max_abs_diff, mul, mul_contraction_oracle, wick};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraConfig {
    pub seed: u64,
    pub modes: usize,
    pub order: usize,
    pub triples: usize,
    pub pairs: usize,
    /// Orders of the random factors in the product checks.
    pub pair_order: usize,
    pub sample_points: usize,
    pub s_points: usize,
    pub noise_mmax: usize,
    pub noise_points: Vec<f64>,
    /// Order cap of the Wick-exponential norm and pairing checks.
    pub exp_order: usize,
    pub exp_vectors: Vec<Vec<f64>>,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            modes: 8,
            order: 5,
            triples: 100,
            pairs: 50,
            pair_order: 3,
            sample_points: 50,
            s_points: 20,
            noise_mmax: 16,
            noise_points: vec![-2.0, -0.5, 0.0, 0.7, 1.9],
            exp_order: 40,
            exp_vectors: vec![
                vec![0.6, 0.8],
                vec![0.5],
                vec![0.3, -0.2, 0.1],
                vec![-0.1, 0.2, 0.3, -0.4],
                vec![0.05, -0.7],
            ],
        }
    }
}

/// Random sparse vector with small dyadic coefficients (so sums are exact)
/// and orders at most `order`.
fn dyadic_vector(rng: &mut ChaCha8Rng, layout: &Arc<BasisLayout>, order: usize) -> Result<ChaosVector> {
    let terms = rng.random_range(1..=4);
    let entries = (0..terms).map(|_| {
        let n = rng.random_range(0..=order);
        let alpha = MultiIndex::from_pairs((0..n).map(|_| (rng.random_range(0..layout.mode_cap() as u32), 1)));
        let c = rng.random_range(-8i32..=8) as f64 / 4.0;
        (alpha, c)
    });
    let entries: Vec<_> = entries.collect();
    ChaosVector::from_coeffs(layout, entries)
}

fn real_vector(rng: &mut ChaCha8Rng, layout: &Arc<BasisLayout>, order: usize) -> Result<ChaosVector> {
    let terms = rng.random_range(1..=6);
    let entries: Vec<_> = (0..terms)
        .map(|_| {
            let n = rng.random_range(0..=order);
            let alpha = MultiIndex::from_pairs((0..n).map(|_| (rng.random_range(0..layout.mode_cap() as u32), 1)));
            (alpha, rng.random_range(-1.0..1.0))
        })
        .collect();
    ChaosVector::from_coeffs(layout, entries)
}

/// Splits `total` into three random nonnegative parts.
fn split3(rng: &mut ChaCha8Rng, total: usize) -> [usize; 3] {
    let a = rng.random_range(0..=total);
    let b = rng.random_range(0..=total - a);
    [a, b, total - a - b]
}

pub fn algebra_suite(cfg: &AlgebraConfig, tol: &Tolerances) -> Result<Report> {
    if cfg.pairs == 0 || cfg.triples == 0 {
        return Err(Error::Config("pairs and triples must be positive".into()));
    }
    if cfg.modes == 0 || cfg.modes > 8 || 2 * cfg.pair_order > 6 {
        return Err(Error::Config(
            "the contraction oracle needs at most 8 modes and factor orders summing to at most 6".into(),
        ));
    }
    let mut report = Report::new("algebra-suite", cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layout = BasisLayout::new(1, cfg.modes, cfg.order)?;
    let mut cases = Vec::new();

    // Wick algebra laws on dyadic triples
    let (mut unit, mut comm, mut assoc, mut tail) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let one = ChaosVector::constant(&layout, 1.0);
    for i in 0..cfg.triples {
        let [a, b, c] = split3(&mut rng, cfg.order);
        let f = dyadic_vector(&mut rng, &layout, a)?;
        let g = dyadic_vector(&mut rng, &layout, b)?;
        let h = dyadic_vector(&mut rng, &layout, c)?;
        let e_unit = max_abs_diff(&wick(&f, &one)?, &f);
        let fg = wick(&f, &g)?;
        let e_comm = max_abs_diff(&fg, &wick(&g, &f)?);
        let left = wick(&fg, &h)?;
        let right = wick(&f, &wick(&g, &h)?)?;
        let e_assoc = max_abs_diff(&left, &right);
        let t = left.tail_mass().max(right.tail_mass());
        unit = unit.max(e_unit);
        comm = comm.max(e_comm);
        assoc = assoc.max(e_assoc);
        tail = tail.max(t);
        cases.push(vec!["wick_laws".into(), i.to_string(), fmt(e_unit.max(e_comm).max(e_assoc))]);
    }
    report.check_le(tol, "wick_unit", unit, 0.0, "exact");
    report.check_le(tol, "wick_commutative", comm, 0.0, "exact");
    report.check_le(tol, "wick_associative", assoc, 0.0, "exact");
    report.check_le(tol, "wick_tail_mass", tail, 0.0, "");

    // pointwise product: contraction oracle, polynomial evaluation, S-transform
    // caps large enough that products stay exact
    let pl = BasisLayout::new(1, cfg.modes, 2 * cfg.pair_order)?;
    let pairs: Vec<(ChaosVector, ChaosVector)> = (0..cfg.pairs)
        .map(|_| Ok((real_vector(&mut rng, &pl, cfg.pair_order)?, real_vector(&mut rng, &pl, cfg.pair_order)?)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (i, (f, g)) in pairs.iter().enumerate() {
        let e = max_abs_diff(&mul(f, g)?, &mul_contraction_oracle(f, g)?);
        worst = worst.max(e);
        cases.push(vec!["mul_vs_contraction".into(), i.to_string(), fmt(e)]);
    }
    report.check_le(tol, "mul_contraction_oracle", worst, 1e-10, format!("{} pairs", cfg.pairs));

    let mut worst = 0.0f64;
    for i in 0..cfg.sample_points {
        let (f, g) = &pairs[i % pairs.len()];
        let xi: Vec<f64> = (0..cfg.modes).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = (f.evaluate_at(&xi) * g.evaluate_at(&xi) - mul(f, g)?.evaluate_at(&xi)).abs();
        worst = worst.max(e);
        cases.push(vec!["mul_vs_evaluation".into(), i.to_string(), fmt(e)]);
    }
    report.check_le(tol, "mul_evaluation_oracle", worst, 1e-9, format!("{} Gaussian points", cfg.sample_points));

    let mut worst = 0.0f64;
    for i in 0..cfg.s_points {
        let (f, g) = &pairs[i % pairs.len()];
        let phi: Vec<f64> = (0..cfg.modes).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.5 * z }).collect();
        let e = (wick(f, g)?.s_transform(&phi) - f.s_transform(&phi) * g.s_transform(&phi)).abs();
        worst = worst.max(e);
        cases.push(vec!["s_multiplicative".into(), i.to_string(), fmt(e)]);
    }
    report.check_le(tol, "s_transform_multiplicative", worst, 1e-10, format!("{} test functions", cfg.s_points));

    // W_m(x)^2 = W <> W + sum eta_j(x)^2
    let wl = BasisLayout::new(1, cfg.noise_mmax + 1, 2)?;
    let mut worst = 0.0f64;
    for m in 0..=cfg.noise_mmax {
        for &x in &cfg.noise_points {
            let (_, rep) = white_noise_squared(&wl, &[x], m)?;
            worst = worst.max(rep.residual);
            cases.push(vec![format!("white_noise_square x={x}"), m.to_string(), fmt(rep.residual)]);
        }
    }
    report.check_le(tol, "white_noise_square", worst, 0.0, format!("m <= {}", cfg.noise_mmax));

    // Wick exponentials: norm identity and pairing
    let mut norm_rows = Vec::new();
    let mut worst_norm = 0.0f64;
    let mut worst_pair = 0.0f64;
    let mut exps = Vec::new();
    for f in &cfg.exp_vectors {
        let f2: f64 = f.iter().map(|v| v * v).sum();
        if f2 > 1.0 + 1e-12 {
            return Err(Error::Config(format!("exponential vector {f:?} has |f| > 1")));
        }
        let l = BasisLayout::new(1, f.len(), cfg.exp_order)?;
        let e = ChaosVector::wick_exp(&l, f)?;
        for p in [0, 1] {
            let log_exact = 0.5 * (2.0 * p as f64).exp() * f2;
            let n = e.norm(p);
            let rel = ((n.log_value - log_exact) * 2.0).exp_m1().abs();
            worst_norm = worst_norm.max(rel);
            norm_rows.push(vec![format!("{f:?}"), p.to_string(), fmt(n.log_value), fmt(log_exact), fmt(rel)]);
        }
        exps.push((f.clone(), e));
    }
    for (f, ef) in &exps {
        for (g, eg) in &exps {
            let fg: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
            let pair = ef.pairing(eg)?;
            let rel = (pair / fg.exp() - 1.0).abs();
            worst_pair = worst_pair.max(rel);
            cases.push(vec![format!("exp_pairing {f:?} {g:?}"), "0".into(), fmt(rel)]);
        }
    }
    report.push_artifact(
        "wick_exp_norms.csv",
        csv_table(&["f", "p", "log_norm", "log_norm_exact", "relative_error"], norm_rows)?,
    );
    report.check_le(tol, "wick_exp_norm_identity", worst_norm, 1e-6, format!("p in {{0, 1}}, order cap {}", cfg.exp_order));
    report.check_le(tol, "wick_exp_pairing", worst_pair, 1e-6, "");

    report.push_artifact("algebra.csv", csv_table(&["case", "index", "error"], cases)?);
    report.finish(tol)
}
