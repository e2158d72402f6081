use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::SdeSpec;
use crate::chaos::BasisLayout;
use crate::error::{Error, Result};
use crate::hermite::{adaptive_integrate, gauss_legendre, hermite_fn_all_into};

const PATH_CHUNK: usize = 256;
const STEP_RULE: usize = 8;

/// Monte-Carlo controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McParams {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Normals drawn per step and merged as `sum z / sqrt(r)`; a power of
    /// two lets a run at `dt` share Brownian paths with a run at `dt / r`.
    pub normals_per_step: usize,
    pub record_states: bool,
}

impl McParams {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        Self {
            n_paths,
            dt,
            seed,
            normals_per_step: 1,
            record_states: false,
        }
    }
}

/// Euler-Maruyama paths of the auxiliary diffusion with their noise
/// integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub t: f64,
    pub x: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub n_paths: usize,
    /// Number of noise modes per path (`m + 1`, or 0 with noise off).
    pub modes: usize,
    pub final_states: Vec<f64>,
    /// Row-major `n_paths x modes`.
    pub noise: Vec<f64>,
    /// Row-major `n_paths x (n_steps + 1)` when recorded.
    pub states: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub fn noise_integral(&self, path: usize) -> &[f64] {
        &self.noise[path * self.modes..(path + 1) * self.modes]
    }

    /// `|g|^2` over the first `modes` noise modes.
    pub fn noise_sq(&self, path: usize, modes: usize) -> f64 {
        self.noise_integral(path)[..modes.min(self.modes)]
            .iter()
            .map(|v| v * v)
            .sum()
    }

    /// `max_paths |g|^2 / m` at noise level `m >= 1`.
    pub fn max_noise_sq_ratio(&self, m: usize) -> f64 {
        (0..self.n_paths)
            .map(|i| self.noise_sq(i, m + 1))
            .fold(0.0, f64::max)
            / m as f64
    }

    pub fn path_states(&self, path: usize) -> Option<&[f64]> {
        let w = self.n_steps + 1;
        self.states.as_ref().map(|s| &s[path * w..(path + 1) * w])
    }
}

/// Flat noise modes `0..modes` as `(time degree, space degree)`.
pub(crate) fn mode_pairs(modes: usize) -> Result<Vec<(usize, usize)>> {
    let layout = BasisLayout::new(2, modes, 0)?;
    Ok(layout
        .enumeration()
        .iter()
        .map(|a| (a[0] as usize, a[1] as usize))
        .collect())
}

pub(crate) fn step_count(t: f64, dt: f64) -> Result<usize> {
    let n = (t / dt).round();
    if !(dt > 0.0) || (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {t} is not a whole number of steps of {dt}"
        )));
    }
    Ok(n as usize)
}

/// Simulates `params.n_paths` paths on `[0, t]` from `x`, with noise
/// integrals for `m + 1` modes (`None` disables the noise).
///
/// Path `i` draws from ChaCha8 stream `i` of `params.seed`, so results do not
/// depend on the thread count.
pub fn simulate_paths(spec: &SdeSpec, t: f64, x: f64, m: Option<usize>, params: &McParams) -> Result<PathEnsemble> {
    if !(t > 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite t > 0 and x, got t = {t}, x = {x}")));
    }
    if params.dt > t / 10.0 + 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "dt = {} must be <= t/10 = {}",
            params.dt,
            t / 10.0
        )));
    }
    if params.n_paths < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 paths, got {}", params.n_paths)));
    }
    if params.normals_per_step == 0 || !params.normals_per_step.is_power_of_two() {
        return Err(Error::InvalidArgument("normals_per_step must be a power of two".into()));
    }
    let n_steps = step_count(t, params.dt)?;
    let modes = m.map_or(0, |m| m + 1);
    let pairs = mode_pairs(modes)?;
    let time_deg = pairs.iter().map(|p| p.0).max().map_or(0, |d| d + 1);
    let space_deg = pairs.iter().map(|p| p.1).max().map_or(0, |d| d + 1);
    let time_table = step_integrals(t, params.dt, n_steps, time_deg);

    let ctx = PathContext {
        spec,
        x,
        dt: params.dt,
        n_steps,
        seed: params.seed,
        normals: params.normals_per_step,
        pairs: &pairs,
        time_table: &time_table,
        time_deg,
        space_deg,
        record: params.record_states,
    };
    let chunks: Vec<ChunkOut> = (0..params.n_paths.div_ceil(PATH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * PATH_CHUNK;
            let hi = (lo + PATH_CHUNK).min(params.n_paths);
            ctx.run_chunk(lo, hi)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut final_states = Vec::with_capacity(params.n_paths);
    let mut noise = Vec::with_capacity(params.n_paths * modes);
    let mut states = params.record_states.then(|| Vec::with_capacity(params.n_paths * (n_steps + 1)));
    for c in chunks {
        final_states.extend(c.finals);
        noise.extend(c.noise);
        if let Some(s) = states.as_mut() {
            s.extend(c.states);
        }
    }
    Ok(PathEnsemble {
        t,
        x,
        dt: params.dt,
        n_steps,
        seed: params.seed,
        n_paths: params.n_paths,
        modes,
        final_states,
        noise,
        states,
    })
}

/// `int_{s_k}^{s_k + dt} eta_i(t - s) ds` for every step `k` and `i < degrees`.
fn step_integrals(t: f64, dt: f64, n_steps: usize, degrees: usize) -> Vec<f64> {
    let mut table = vec![0.0; n_steps * degrees];
    if degrees == 0 {
        return table;
    }
    let (nodes, weights) = gauss_legendre(STEP_RULE);
    let mut buf = vec![0.0; degrees];
    for k in 0..n_steps {
        let s0 = k as f64 * dt;
        let row = &mut table[k * degrees..(k + 1) * degrees];
        for (z, w) in nodes.iter().zip(&weights) {
            let s = s0 + 0.5 * dt * (z + 1.0);
            hermite_fn_all_into(t - s, &mut buf);
            for (r, b) in row.iter_mut().zip(&buf) {
                *r += 0.5 * dt * w * b;
            }
        }
    }
    table
}

struct PathContext<'a> {
    spec: &'a SdeSpec,
    x: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
    normals: usize,
    pairs: &'a [(usize, usize)],
    time_table: &'a [f64],
    time_deg: usize,
    space_deg: usize,
    record: bool,
}

struct ChunkOut {
    finals: Vec<f64>,
    noise: Vec<f64>,
    states: Vec<f64>,
}

impl PathContext<'_> {
    fn run_chunk(&self, lo: usize, hi: usize) -> Result<ChunkOut> {
        let modes = self.pairs.len();
        let mut out = ChunkOut {
            finals: Vec::with_capacity(hi - lo),
            noise: vec![0.0; (hi - lo) * modes],
            states: Vec::with_capacity(if self.record { (hi - lo) * (self.n_steps + 1) } else { 0 }),
        };
        let mut space = vec![0.0; self.space_deg];
        let sqrt_dt = self.dt.sqrt();
        let merge = 1.0 / (self.normals as f64).sqrt();
        for path in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(path as u64);
            let g = &mut out.noise[(path - lo) * modes..(path - lo + 1) * modes];
            let mut x = self.x;
            if self.record {
                out.states.push(x);
            }
            for k in 0..self.n_steps {
                if modes > 0 {
                    hermite_fn_all_into(x, &mut space);
                    let row = &self.time_table[k * self.time_deg..(k + 1) * self.time_deg];
                    for (gj, &(a, b)) in g.iter_mut().zip(self.pairs) {
                        *gj += row[a] * space[b];
                    }
                }
                let mut z = 0.0;
                for _ in 0..self.normals {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    z += n;
                }
                x += self.spec.drift.eval(x) * self.dt + self.spec.diffusion.eval(x) * sqrt_dt * z * merge;
                if !x.is_finite() {
                    return Err(Error::NonFiniteState {
                        path,
                        step: k + 1,
                        detail: format!("state became {x} under preset `{}`", self.spec.name),
                    });
                }
                if self.record {
                    out.states.push(x);
                }
            }
            out.finals.push(x);
        }
        Ok(out)
    }
}

/// Noise integrals of the frozen path `X = x` by adaptive quadrature in time.
pub fn noise_integral_frozen(t: f64, x: f64, m: usize) -> Result<Vec<f64>> {
    let pairs = mode_pairs(m + 1)?;
    let tdeg = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let sdeg = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let time = adaptive_integrate(|s, out| hermite_fn_all_into(s, out), 0.0, t, tdeg, 1e-12)?;
    let mut space = vec![0.0; sdeg];
    hermite_fn_all_into(x, &mut space);
    Ok(pairs.iter().map(|&(a, b)| time[a] * space[b]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spde::{Diffusion, Drift};

    fn spec(name: &str) -> SdeSpec {
        SdeSpec::preset(name).unwrap()
    }

    #[test]
    fn deterministic_drift() {
        let mut s = spec("pathwise");
        s.drift = Drift::Constant { b: 0.5 };
        let mut p = McParams::new(100, 0.01, 1);
        p.record_states = true;
        let e = simulate_paths(&s, 0.5, 0.2, None, &p).unwrap();
        let path = e.path_states(3).unwrap();
        for (k, v) in path.iter().enumerate() {
            assert!((v - (0.2 + 0.5 * k as f64 * 0.01)).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_determinism() {
        let s = spec("heat-plus-noise");
        let p = McParams::new(300, 0.01, 42);
        let a = simulate_paths(&s, 0.2, 0.0, Some(5), &p).unwrap();
        let b = simulate_paths(&s, 0.2, 0.0, Some(5), &p).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&s, 0.2, 0.0, Some(5), &McParams::new(300, 0.01, 43)).unwrap();
        assert_ne!(a.final_states, c.final_states);
    }

    #[test]
    fn ou_moments() {
        let s = spec("ou");
        let (t, x, n) = (1.0, 1.5, 100_000);
        let e = simulate_paths(&s, t, x, None, &McParams::new(n, 1e-3, 9)).unwrap();
        let mean = e.final_states.iter().sum::<f64>() / n as f64;
        let var = e.final_states.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m_true = (-t as f64).exp() * x;
        let v_true = (1.0 - (-2.0 * t as f64).exp()) / 2.0;
        let se_mean = (v_true / n as f64).sqrt();
        let se_var = v_true * (2.0 / n as f64).sqrt();
        // Euler-Maruyama bias at dt = 1e-3 is far below these errors
        assert!((mean - m_true).abs() < 3.0 * se_mean, "{mean} {m_true}");
        assert!((var - v_true).abs() < 3.0 * se_var, "{var} {v_true}");
    }

    #[test]
    fn frozen_path_noise_integral() {
        let s = spec("pathwise");
        let (t, x) = (0.5, 0.3);
        let e = simulate_paths(&s, t, x, Some(9), &McParams::new(100, 1e-2, 0)).unwrap();
        let oracle = noise_integral_frozen(t, x, 9).unwrap();
        for (a, b) in e.noise_integral(17).iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn coupled_refinement() {
        // a run at dt with two normals per step sees the Brownian path of the
        // run at dt / 2 sampled every other step
        let s = spec("heat-gaussian");
        let mut coarse = McParams::new(100, 0.02, 5);
        coarse.normals_per_step = 2;
        coarse.record_states = true;
        let mut fine = McParams::new(100, 0.01, 5);
        fine.record_states = true;
        let a = simulate_paths(&s, 0.2, 0.0, None, &coarse).unwrap();
        let b = simulate_paths(&s, 0.2, 0.0, None, &fine).unwrap();
        let pa = a.path_states(7).unwrap();
        let pb = b.path_states(7).unwrap();
        for k in 0..pa.len() {
            assert!((pa[k] - pb[2 * k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = spec("heat-gaussian");
        assert!(simulate_paths(&s, 0.1, 0.0, None, &McParams::new(100, 0.02, 0)).is_err());
        assert!(simulate_paths(&s, 1.0, 0.0, None, &McParams::new(10, 0.01, 0)).is_err());
        let mut blow = s.clone();
        blow.drift = Drift::Linear { theta: -1e6 };
        blow.diffusion = Diffusion::Constant { sigma: 1.0 };
        assert!(matches!(
            simulate_paths(&blow, 1.0, 1.0, None, &McParams::new(100, 0.01, 0)),
            Err(Error::NonFiniteState { .. })
        ));
    }
}
