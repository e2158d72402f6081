use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::sim::{simulate_paths, McParams, PathEnsemble};
use super::{pairwise_reduce, SdeSpec};
use crate::chaos::{exp_series_tail, BasisLayout, ChaosVector, MultiIndex};
use crate::colombeau::{associated_limit, GenSequence};
use crate::error::{Error, Result};

const SUM_CHUNK: usize = 512;

/// Which Feynman-Kac functional is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    /// Pointwise coupling: weights `f(X_t) e^{|g|^2/2}`.
    Generalized,
    /// Wick coupling: weights `f(X_t)`.
    Wick,
}

/// Multi-indices over `modes` modes up to `order`, each linked to a parent
/// `alpha - e_j` so that `g^alpha / alpha!` costs one multiply per entry.
#[derive(Debug, Clone)]
pub struct CoefficientPlan {
    alphas: Vec<MultiIndex>,
    parent: Vec<usize>,
    mode: Vec<usize>,
    divisor: Vec<f64>,
}

impl CoefficientPlan {
    pub fn new(modes: usize, order: usize) -> Self {
        let mut plan = Self {
            alphas: vec![MultiIndex::zero()],
            parent: vec![0],
            mode: vec![0],
            divisor: vec![1.0],
        };
        plan.grow(0, 0, modes, order);
        plan
    }

    fn grow(&mut self, idx: usize, first_mode: usize, modes: usize, order: usize) {
        if self.alphas[idx].order() == order {
            return;
        }
        for j in first_mode..modes {
            let child = self.alphas[idx].add(&MultiIndex::unit(j as u32));
            let power = child.power(j as u32) as f64;
            self.alphas.push(child);
            self.parent.push(idx);
            self.mode.push(j);
            self.divisor.push(power);
            let c = self.alphas.len() - 1;
            self.grow(c, j, modes, order);
        }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[MultiIndex] {
        &self.alphas
    }

    /// Writes `g^alpha / alpha!` for every planned index.
    pub fn values(&self, g: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        for i in 1..self.alphas.len() {
            out[i] = out[self.parent[i]] * g[self.mode[i]] / self.divisor[i];
        }
    }
}

/// Chaos coefficients of `u_m(t, x)` (or of the Wick solution) with Monte-
/// Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkSolution {
    pub t: f64,
    pub x: f64,
    pub m: Option<usize>,
    pub kind: SolutionKind,
    pub order: usize,
    #[serde(skip)]
    pub value: ChaosVector,
    #[serde(skip)]
    pub stderr: ChaosVector,
    pub ess: f64,
    pub degenerate: bool,
    pub mean_noise_sq: f64,
    pub mean_noise_norm: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl FkSolution {
    fn exact_initial(spec: &SdeSpec, layout: &Arc<BasisLayout>, x: f64, m: Option<usize>, order: usize, kind: SolutionKind, params: &McParams) -> Self {
        Self {
            t: 0.0,
            x,
            m,
            kind,
            order,
            value: ChaosVector::constant(layout, spec.initial.eval(x)),
            stderr: ChaosVector::zero(layout),
            ess: params.n_paths as f64,
            degenerate: false,
            mean_noise_sq: 0.0,
            mean_noise_norm: 0.0,
            n_paths: params.n_paths,
            dt: params.dt,
            seed: params.seed,
        }
    }

    /// Standard error of the coefficient at `alpha`.
    pub fn se(&self, alpha: &MultiIndex) -> f64 {
        self.stderr.get(alpha)
    }
}

fn check_layout(layout: &BasisLayout, m: Option<usize>, order: usize, ens_modes: usize) -> Result<usize> {
    if layout.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: layout.dim(),
        });
    }
    let modes = m.map_or(0, |m| m + 1);
    let order = if modes == 0 { 0 } else { order };
    if modes > ens_modes {
        return Err(Error::InvalidArgument(format!(
            "noise level needs {modes} modes, ensemble carries {ens_modes}"
        )));
    }
    if modes > layout.mode_cap() || order > layout.order_cap() {
        return Err(Error::CapOverflow(format!(
            "{modes} modes / order {order} exceed caps {} / {}",
            layout.mode_cap(),
            layout.order_cap()
        )));
    }
    Ok(modes)
}

/// Per-coefficient sums `[sum; sum of squares]` plus `[sum |w|, sum w^2,
/// log-shift, tail, |g|^2, |g|]` over `range`, in a fixed reduction order.
struct Sums {
    coeff: Vec<f64>,
    coeff_sq: Vec<f64>,
    ess_num: f64,
    ess_den: f64,
    tail: f64,
    noise_sq: f64,
    noise_norm: f64,
}

fn weighted_sums(
    ens: &PathEnsemble,
    spec: &SdeSpec,
    plan: &CoefficientPlan,
    modes: usize,
    order: usize,
    kind: SolutionKind,
    range: Range<usize>,
) -> Sums {
    let n = plan.len();
    let width = 2 * n + 5;
    // Weights are formed in log space relative to a shared shift so the ESS
    // ratio survives e^{|g|^2/2} overflow.
    let log_weight = |i: usize| -> f64 {
        let f = spec.initial.eval(ens.final_states[i]).abs().ln();
        match kind {
            SolutionKind::Generalized => f + 0.5 * ens.noise_sq(i, modes),
            SolutionKind::Wick => f,
        }
    };
    let shift = range
        .clone()
        .map(log_weight)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let starts: Vec<usize> = range.clone().step_by(SUM_CHUNK).collect();
    let parts: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + SUM_CHUNK).min(range.end);
            let mut acc = vec![0.0; width];
            let mut vals = vec![0.0; n];
            for i in lo..hi {
                let g = &ens.noise_integral(i)[..modes];
                let g2: f64 = g.iter().map(|v| v * v).sum();
                let f = spec.initial.eval(ens.final_states[i]);
                let w = match kind {
                    SolutionKind::Generalized => f * (0.5 * g2).exp(),
                    SolutionKind::Wick => f,
                };
                plan.values(g, &mut vals);
                for k in 0..n {
                    let c = w * vals[k];
                    acc[k] += c;
                    acc[n + k] += c * c;
                }
                let rel = (log_weight(i) - shift).exp();
                acc[2 * n] += rel;
                acc[2 * n + 1] += rel * rel;
                acc[2 * n + 2] += w * w * exp_series_tail(g2, order);
                acc[2 * n + 3] += g2;
                acc[2 * n + 4] += g2.sqrt();
            }
            acc
        })
        .collect();
    let total = pairwise_reduce(parts, width);
    Sums {
        coeff: total[..n].to_vec(),
        coeff_sq: total[n..2 * n].to_vec(),
        ess_num: total[2 * n] * total[2 * n],
        ess_den: total[2 * n + 1],
        tail: total[2 * n + 2],
        noise_sq: total[2 * n + 3],
        noise_norm: total[2 * n + 4],
    }
}

/// Estimates the solution at the ensemble's `(t, x)` from its first `m + 1`
/// noise modes.
pub fn fk_from_ensemble(
    ens: &PathEnsemble,
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    m: Option<usize>,
    order: usize,
    kind: SolutionKind,
) -> Result<FkSolution> {
    let modes = check_layout(layout, m, order, ens.modes)?;
    let order = if modes == 0 { 0 } else { order };
    let plan = CoefficientPlan::new(modes, order);
    let n = ens.n_paths as f64;
    let s = weighted_sums(ens, spec, &plan, modes, order, kind, 0..ens.n_paths);
    let mut value = Vec::with_capacity(plan.len());
    let mut stderr = Vec::with_capacity(plan.len());
    for (k, alpha) in plan.alphas().iter().enumerate() {
        let mean = s.coeff[k] / n;
        let var = ((s.coeff_sq[k] - n * mean * mean) / (n - 1.0)).max(0.0);
        if !mean.is_finite() || !var.is_finite() {
            return Err(Error::DegenerateWeights {
                ess: s.ess_num / s.ess_den,
                n: ens.n_paths,
            });
        }
        value.push((alpha.clone(), mean));
        stderr.push((alpha.clone(), (var / n).sqrt()));
    }
    let ess = s.ess_num / s.ess_den;
    Ok(FkSolution {
        t: ens.t,
        x: ens.x,
        m,
        kind,
        order,
        value: ChaosVector::from_coeffs(layout, value)?.with_tail_mass(s.tail / n),
        stderr: ChaosVector::from_coeffs(layout, stderr)?,
        ess,
        degenerate: ess < 0.01 * n,
        mean_noise_sq: s.noise_sq / n,
        mean_noise_norm: s.noise_norm / n,
        n_paths: ens.n_paths,
        dt: ens.dt,
        seed: ens.seed,
    })
}

/// Batch means of the coefficients over `batches` contiguous path blocks.
pub(crate) fn batch_means(
    ens: &PathEnsemble,
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    m: Option<usize>,
    order: usize,
    kind: SolutionKind,
    batches: usize,
) -> Result<Vec<ChaosVector>> {
    let modes = check_layout(layout, m, order, ens.modes)?;
    let order = if modes == 0 { 0 } else { order };
    let plan = CoefficientPlan::new(modes, order);
    (0..batches)
        .map(|b| {
            let lo = b * ens.n_paths / batches;
            let hi = (b + 1) * ens.n_paths / batches;
            let s = weighted_sums(ens, spec, &plan, modes, order, kind, lo..hi);
            let count = (hi - lo) as f64;
            ChaosVector::from_coeffs(
                layout,
                plan.alphas().iter().cloned().zip(s.coeff.iter().map(|c| c / count)),
            )
        })
        .collect()
}

fn solve(
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    t: f64,
    x: f64,
    m: Option<usize>,
    order: usize,
    params: &McParams,
    kind: SolutionKind,
) -> Result<FkSolution> {
    if t == 0.0 {
        check_layout(layout, m, order, m.map_or(0, |m| m + 1))?;
        return Ok(FkSolution::exact_initial(spec, layout, x, m, order, kind, params));
    }
    let ens = simulate_paths(spec, t, x, m, params)?;
    fk_from_ensemble(&ens, spec, layout, m, order, kind)
}

/// Generalized (pointwise-coupled) solution `u_m(t, x)`.
pub fn fk_solve(
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    t: f64,
    x: f64,
    m: Option<usize>,
    order: usize,
    params: &McParams,
) -> Result<FkSolution> {
    solve(spec, layout, t, x, m, order, params, SolutionKind::Generalized)
}

/// Wick solution `v_m(t, x)`.
pub fn fk_solve_wick(
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    t: f64,
    x: f64,
    m: Option<usize>,
    order: usize,
    params: &McParams,
) -> Result<FkSolution> {
    solve(spec, layout, t, x, m, order, params, SolutionKind::Wick)
}

/// S-transforms and order-0 ratio of the two solutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub s_generalized: f64,
    pub s_wick: f64,
    /// `E[f e^{|g|^2/2}] / E[f]`, the reweighting inside the path expectation.
    pub ratio: f64,
    /// `e^{E|g|}`: the factor as it appears outside the expectation in the
    /// alternative (remark) form; reported, not used.
    pub outside_factor: f64,
}

pub fn compare_wick_vs_generalized(u: &FkSolution, v: &FkSolution, h: &[f64]) -> Result<CompareReport> {
    if u.t != v.t || u.x != v.x || u.m != v.m {
        return Err(Error::InvalidArgument("solutions must share t, x and m".into()));
    }
    Ok(CompareReport {
        s_generalized: u.value.s_transform(h),
        s_wick: v.value.s_transform(h),
        ratio: u.value.expectation() / v.value.expectation(),
        outside_factor: u.mean_noise_norm.exp(),
    })
}

/// `E[f e^{|g|^2/2}] / E[f]` recomputed path by path.
pub fn order0_ratio(ens: &PathEnsemble, spec: &SdeSpec, m: Option<usize>) -> f64 {
    let modes = m.map_or(0, |m| m + 1);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..ens.n_paths {
        let f = spec.initial.eval(ens.final_states[i]);
        num += f * (0.5 * ens.noise_sq(i, modes)).exp();
        den += f;
    }
    num / den
}

/// Association check between solution sequences from two seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// `(test index, last pairing, tolerance, verdict)`
    pub tests: Vec<(String, f64, f64, bool)>,
    pub associated: bool,
}

/// Runs the solver under two seeds (and possibly two noise levels) and tests
/// whether the level sequences `k -> u_{min(k, m)}` are associated against
/// `H_0` and every `H_{e_j}`, at three combined standard errors.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_probe(
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    t: f64,
    x: f64,
    ms: (usize, usize),
    order: usize,
    params: &McParams,
    seeds: (u64, u64),
) -> Result<UniquenessReport> {
    let levels = ms.0.max(ms.1).max(crate::colombeau::MIN_LEVELS);
    let run = |m: usize, seed: u64| -> Result<Vec<FkSolution>> {
        let p = McParams { seed, ..params.clone() };
        let ens = simulate_paths(spec, t, x, Some(m), &p)?;
        (0..=levels)
            .map(|k| fk_from_ensemble(&ens, spec, layout, Some(k.min(m)), order, SolutionKind::Generalized))
            .collect()
    };
    let a = run(ms.0, seeds.0)?;
    let b = run(ms.1, seeds.1)?;
    let seq = |s: &[FkSolution], label: &str| GenSequence::new(s.iter().map(|u| u.value.clone()).collect(), label);
    let sa = seq(&a, "u(seed a)")?;
    let sb = seq(&b, "u(seed b)")?;
    let mut tests = Vec::new();
    let mut probes = vec![MultiIndex::zero()];
    probes.extend((0..=ms.0.max(ms.1)).map(|j| MultiIndex::unit(j as u32)));
    for alpha in probes {
        let tol = a
            .iter()
            .zip(&b)
            .map(|(u, v)| 3.0 * (u.se(&alpha).powi(2) + v.se(&alpha).powi(2)).sqrt())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let test = ChaosVector::basis(layout, alpha.clone())?;
        let (last, ok) = associated_limit(&sa, &sb, &test, tol)?;
        tests.push((format!("H[{alpha}]"), last, tol, ok));
    }
    let associated = tests.iter().all(|t| t.3);
    Ok(UniquenessReport { tests, associated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(modes: usize, order: usize) -> Arc<BasisLayout> {
        BasisLayout::new(2, modes, order).unwrap()
    }

    #[test]
    fn plan_enumerates_each_index_once() {
        let plan = CoefficientPlan::new(3, 3);
        assert_eq!(plan.len() as u128, crate::chaos::count_multi_indices(3, 3));
        let mut sorted = plan.alphas().to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), plan.len());
        let g = [0.3, -1.2, 2.0];
        let mut out = vec![0.0; plan.len()];
        plan.values(&g, &mut out);
        for (a, v) in plan.alphas().iter().zip(&out) {
            let direct = a.monomial(&g) / a.factorial();
            assert!((v - direct).abs() < 1e-14 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn initial_condition_is_exact() {
        let spec = SdeSpec::preset("heat-plus-noise").unwrap();
        let l = layout(8, 2);
        let u = fk_solve(&spec, &l, 0.0, 0.7, Some(4), 2, &McParams::new(100, 1e-3, 1)).unwrap();
        assert_eq!(u.value, ChaosVector::constant(&l, (-0.49f64 / 2.0).exp()));
        assert_eq!(u.stderr.len(), 0);
    }

    #[test]
    fn heat_closed_form_within_three_se() {
        let spec = SdeSpec::preset("heat-gaussian").unwrap();
        let l = layout(1, 2);
        for x in [0.0, 1.0] {
            let u = fk_solve(&spec, &l, 0.25, x, None, 2, &McParams::new(20_000, 1e-2 / 4.0, 3)).unwrap();
            let exact = spec.heat_closed_form(0.25, x).unwrap();
            let se = u.se(&MultiIndex::zero());
            assert!((u.value.expectation() - exact).abs() < 3.0 * se, "{} {exact} {se}", u.value.expectation());
            assert_eq!(u.value.len(), 1);
        }
    }

    #[test]
    fn s_transform_of_wick_solution() {
        let spec = SdeSpec::preset("heat-plus-noise").unwrap();
        let l = layout(6, 6);
        let params = McParams::new(4_000, 5e-3, 11);
        let ens = simulate_paths(&spec, 0.5, 0.2, Some(5), &params).unwrap();
        let v = fk_from_ensemble(&ens, &spec, &l, Some(5), 6, SolutionKind::Wick).unwrap();
        let h = [0.4, -0.3, 0.2, 0.5, -0.1, 0.3];
        let mut vals = Vec::with_capacity(ens.n_paths);
        for i in 0..ens.n_paths {
            let g = ens.noise_integral(i);
            let hg: f64 = h.iter().zip(g).map(|(a, b)| a * b).sum();
            vals.push(spec.initial.eval(ens.final_states[i]) * hg.exp());
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let s = v.value.s_transform(&h);
        assert!((s - mean).abs() < 3.0 * se, "{s} {mean} {se}");
    }

    #[test]
    fn wick_order0_ignores_noise_and_ratio_grows() {
        let spec = SdeSpec::preset("heat-plus-noise").unwrap();
        let l = layout(17, 1);
        let ens = simulate_paths(&spec, 0.5, 0.0, Some(16), &McParams::new(2_000, 5e-3, 2)).unwrap();
        let mut last_ratio = 1.0;
        let v_none = fk_from_ensemble(&ens, &spec, &l, None, 1, SolutionKind::Wick).unwrap();
        let u_none = fk_from_ensemble(&ens, &spec, &l, None, 1, SolutionKind::Generalized).unwrap();
        assert_eq!(compare_wick_vs_generalized(&u_none, &v_none, &[]).unwrap().ratio, 1.0);
        for m in [0, 2, 4, 8, 16] {
            let u = fk_from_ensemble(&ens, &spec, &l, Some(m), 1, SolutionKind::Generalized).unwrap();
            let v = fk_from_ensemble(&ens, &spec, &l, Some(m), 1, SolutionKind::Wick).unwrap();
            assert_eq!(v.value.expectation(), v_none.value.expectation());
            let r = compare_wick_vs_generalized(&u, &v, &[0.0]).unwrap();
            assert!(r.ratio >= last_ratio);
            assert!((r.ratio - order0_ratio(&ens, &spec, Some(m))).abs() < 1e-12 * r.ratio);
            last_ratio = r.ratio;
        }
        assert!(last_ratio > 1.0);
    }

    #[test]
    fn uniqueness_same_seed_exact() {
        let spec = SdeSpec::preset("heat-plus-noise").unwrap();
        let l = layout(6, 1);
        let p = McParams::new(500, 1e-2, 0);
        let r = uniqueness_probe(&spec, &l, 0.2, 0.0, (4, 4), 1, &p, (5, 5)).unwrap();
        assert!(r.associated);
        assert!(r.tests.iter().all(|t| t.1 == 0.0));
    }

    #[test]
    fn batch_means_average_to_full_mean() {
        let spec = SdeSpec::preset("heat-plus-noise").unwrap();
        let l = layout(4, 2);
        let ens = simulate_paths(&spec, 0.2, 0.1, Some(3), &McParams::new(1_000, 1e-2, 4)).unwrap();
        let full = fk_from_ensemble(&ens, &spec, &l, Some(3), 2, SolutionKind::Generalized).unwrap();
        let batches = batch_means(&ens, &spec, &l, Some(3), 2, SolutionKind::Generalized, 10).unwrap();
        for (alpha, c) in full.value.iter() {
            let avg = batches.iter().map(|b| b.get(alpha)).sum::<f64>() / 10.0;
            assert!((avg - c).abs() < 1e-12 * (1.0 + c.abs()));
        }
    }
}
