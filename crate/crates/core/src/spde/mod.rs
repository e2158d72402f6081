//! Feynman-Kac solution of `u_t = L u + u W_m(t, x)`, `u(0) = f`, with
//! `L = sigma(x)^2/2 d^2 + b(x) d` on a 1-D space axis and truncated
//! space-time white noise `W_m(t, x) = sum_{j <= m} eta_j(t, x) H_{e_j}`.
//!
//! Along a path of `dX = sigma(X) dB + b(X) dt` started at `x`, the noise
//! integrals `g_j = int_0^t eta_j(t - s, X_s) ds` give
//!
//! ```text
//! u_m(t, x) = E[ f(X_t) exp(I_1(g)) ] = E[ f(X_t) e^{|g|^2/2} wexp(g) ]
//! ```
//!
//! so the chaos coefficients are `E[f e^{|g|^2/2} g^alpha] / alpha!`. The
//! Wick solution drops the `e^{|g|^2/2}` factor.

mod fk;
mod residual;

mod sim;

pub use fk::{
    compare_wick_vs_generalized, fk_from_ensemble, order0_ratio, fk_solve, fk_solve_wick, uniqueness_probe, CoefficientPlan,
    CompareReport, FkSolution, SolutionKind, UniquenessReport,
};

pub use residual::{residual, ProductChoice, ResidualConfig, ResidualNorm, ResidualReport};
pub use sim::{noise_integral_frozen, simulate_paths, McParams, PathEnsemble};

use serde::Serialize;

use crate::error::{Error, Result};

/// Drift `b(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Drift {
    Zero,
    Constant { b: f64 },
    /// `b(x) = -theta x`
    Linear { theta: f64 },
}

impl Drift {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { b } => b,
            Self::Linear { theta } => -theta * x,
        }
    }
}

/// Diffusion `sigma(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Diffusion {
    Constant { sigma: f64 },
    /// `sigma(x) = base (1 + amp sin x)`, `|amp| < 1`
    Modulated { base: f64, amp: f64 },
}

impl Diffusion {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { sigma } => sigma,
            Self::Modulated { base, amp } => base * (1.0 + amp * x.sin()),
        }
    }
}

/// Initial datum `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Initial {
    /// `e^{-x^2 / (2 w^2)}`
    Gaussian { width: f64 },
    /// `cos(k x)`
    Trig { k: f64 },
    Constant { c: f64 },
}

impl Initial {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { width } => (-x * x / (2.0 * width * width)).exp(),
            Self::Trig { k } => (k * x).cos(),
            Self::Constant { c } => c,
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            Self::Gaussian { .. } | Self::Trig { .. } => 1.0,
            Self::Constant { c } => c.abs(),
        }
    }
}

/// Auxiliary diffusion and initial datum of the Cauchy problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeSpec {
    pub name: String,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub initial: Initial,
    /// Whether the preset is meant to run with noise switched on.
    pub noisy: bool,
}

impl SdeSpec {
    pub const PRESETS: [&'static str; 4] = ["heat-gaussian", "pathwise", "ou", "heat-plus-noise"];

    pub fn preset(name: &str) -> Result<Self> {
        let gaussian = Initial::Gaussian { width: 1.0 };
        let unit = Diffusion::Constant { sigma: 1.0 };
        let (drift, diffusion, noisy) = match name {
            "heat-gaussian" => (Drift::Zero, unit, false),
            "pathwise" => (Drift::Zero, Diffusion::Constant { sigma: 0.0 }, true),
            "ou" => (Drift::Linear { theta: 1.0 }, unit, false),
            "heat-plus-noise" => (Drift::Zero, unit, true),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}`; expected one of {}",
                    Self::PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            drift,
            diffusion,
            initial: gaussian,
            noisy,
        })
    }

    /// Spatial dimension `l`; the noise lives on `1 + l` variables.
    pub fn dim_space(&self) -> usize {
        1
    }

    /// `a(x) = sigma(x)^2`; a 1x1 matrix is PSD iff it is nonnegative.
    pub fn check_ellipticity(&self, samples: &[f64]) -> Result<()> {
        for &x in samples {
            let a = self.diffusion.eval(x).powi(2);
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::Config(format!("a(x) = {a} at x = {x} is not PSD")));
            }
        }
        Ok(())
    }

    /// `(L u)(x)` from central differences of `u` at `x - k, x, x + k`.
    pub fn generator_fd(&self, x: f64, k: f64, minus: f64, centre: f64, plus: f64) -> f64 {
        let s = self.diffusion.eval(x);
        0.5 * s * s * (plus - 2.0 * centre + minus) / (k * k) + self.drift.eval(x) * (plus - minus) / (2.0 * k)
    }

    /// Closed-form noise-free solution when `b = 0`, `sigma` constant.
    pub fn heat_closed_form(&self, t: f64, x: f64) -> Option<f64> {
        let (Drift::Zero, Diffusion::Constant { sigma }) = (self.drift, self.diffusion) else {
            return None;
        };
        let v = sigma * sigma * t;
        Some(match self.initial {
            Initial::Gaussian { width } => {
                let w2 = width * width;
                (w2 / (w2 + v)).sqrt() * (-x * x / (2.0 * (w2 + v))).exp()
            }
            Initial::Trig { k } => (-0.5 * k * k * v).exp() * (k * x).cos(),
            Initial::Constant { c } => c,
        })
    }
}

/// Fixed-shape pairwise sum of equally sized vectors.
pub(crate) fn pairwise_reduce(mut parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; len];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}
