//! Truncated white noise, Brownian motion coefficients and the Donsker delta.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::chaos::{for_each_multi_index, wick_exp_coefficient, Accumulator, BasisLayout, ChaosVector, MultiIndex};
use crate::error::{Error, Result};
use crate::hermite::{adaptive_integrate, gauss_legendre, hermite_fn_all_into, hermite_fn_multi, hermite_poly};
use crate::products;

/// Per-coefficient tolerance for the indicator-function coefficients.
pub const BROWNIAN_TOL: f64 = 1e-10;

/// `W_m(x) = sum_{j <= m} eta_j(x) H_{e_j}`, with d-variate modes taken from
/// the layout's enumeration.
pub fn white_noise(layout: &Arc<BasisLayout>, x: &[f64], m: usize) -> Result<ChaosVector> {
    if x.len() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            found: x.len(),
        });
    }
    if m >= layout.mode_cap() {
        return Err(Error::CapOverflow(format!(
            "white noise level {m} needs mode cap > {m}, layout has {}",
            layout.mode_cap()
        )));
    }
    let g = white_noise_coefficients(layout, x, m)?;
    ChaosVector::from_first_order(layout, &g)
}

/// `eta_{alpha_j}(x)` for flat modes `j = 0..=m`.
pub fn white_noise_coefficients(layout: &BasisLayout, x: &[f64], m: usize) -> Result<Vec<f64>> {
    (0..=m)
        .map(|j| {
            let alpha: Vec<usize> = layout
                .mode_index(j)
                .ok_or_else(|| Error::CapOverflow(format!("mode {j} beyond layout")))?
                .iter()
                .map(|&a| a as usize)
                .collect();
            hermite_fn_multi(&alpha, x)
        })
        .collect()
}

/// How `W_m(x)^2` splits into its Wick square and a constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareReport {
    /// `sum_{j <= m} eta_j(x)^2`
    pub constant: f64,
    /// Max coefficient gap between `W W` and `W <> W + constant`.
    pub residual: f64,
    pub expectation: f64,
}

/// `W_m(x)^2` together with the check `W^2 = W <> W + sum_j eta_j(x)^2`.
pub fn white_noise_squared(layout: &Arc<BasisLayout>, x: &[f64], m: usize) -> Result<(ChaosVector, SquareReport)> {
    if layout.order_cap() < 2 {
        return Err(Error::CapOverflow("white noise square needs order cap >= 2".into()));
    }
    let w = white_noise(layout, x, m)?;
    let square = products::mul(&w, &w)?;
    let constant: f64 = w.iter().map(|(_, c)| c * c).sum();
    let wick = products::wick(&w, &w)?;
    let expected = wick.add(&ChaosVector::constant(layout, constant))?;
    let report = SquareReport {
        constant,
        residual: products::max_abs_diff(&square, &expected),
        expectation: square.expectation(),
    };
    Ok((square, report))
}

/// `B(t) = sum_{j < J} (int_0^t eta_j) H_{e_j}`; `tail_mass` carries the
/// missing variance `t - sum b_j^2`.
pub fn brownian(layout: &Arc<BasisLayout>, t: f64, modes: usize) -> Result<ChaosVector> {
    let b = brownian_coefficients(t, modes)?;
    if layout.dim() != 1 {
        return Err(Error::InvalidArgument("Brownian motion lives on a 1-D time axis".into()));
    }
    if modes > layout.mode_cap() {
        return Err(Error::CapOverflow(format!(
            "{modes} Brownian modes exceed mode cap {}",
            layout.mode_cap()
        )));
    }
    let captured: f64 = b.iter().map(|v| v * v).sum();
    Ok(ChaosVector::from_first_order(layout, &b)?.with_tail_mass((t - captured).max(0.0)))
}

/// `int_0^t eta_j(s) ds` for `j < modes` by adaptive Gauss-Kronrod.
pub fn brownian_coefficients(t: f64, modes: usize) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(vec![0.0; modes]);
    }
    adaptive_integrate(|s, out| hermite_fn_all_into(s, out), 0.0, t, modes, BROWNIAN_TOL)
}

/// Independent route to [`brownian_coefficients`]: `eta_j' = (sqrt(j)
/// eta_{j-1} - sqrt(j+1) eta_{j+1}) / 2` integrates to a two-step recurrence
/// seeded by a high-order Gauss-Legendre rule for `j = 0, 1`.
pub fn brownian_coefficients_recurrence(t: f64, modes: usize) -> Vec<f64> {
    let mut out = vec![0.0; modes];
    if modes == 0 || t == 0.0 {
        return out;
    }
    let (nodes, weights) = gauss_legendre(64);
    let mut seed = [0.0; 2];
    let mut buf = [0.0; 2];
    for (x, w) in nodes.iter().zip(&weights) {
        hermite_fn_all_into(0.5 * t * (x + 1.0), &mut buf);
        seed[0] += 0.5 * t * w * buf[0];
        seed[1] += 0.5 * t * w * buf[1];
    }
    out[0] = seed[0];
    if modes > 1 {
        out[1] = seed[1];
    }
    let mut at_t = vec![0.0; modes];
    let mut at_0 = vec![0.0; modes];
    hermite_fn_all_into(t, &mut at_t);
    hermite_fn_all_into(0.0, &mut at_0);
    for j in 1..modes.saturating_sub(1) {
        out[j + 1] = ((j as f64).sqrt() * out[j - 1] - 2.0 * (at_t[j] - at_0[j])) / ((j + 1) as f64).sqrt();
    }
    out
}

/// `p_t(a) = (2 pi t)^{-1/2} e^{-a^2 / (2t)}`.
pub fn gaussian_density(a: f64, t: f64) -> f64 {
    (-a * a / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Chaos expansion of `delta_a(B_t)` up to the given order over the first
/// `modes` time modes:
/// `c_alpha = p_t(a) t^{-n/2} h_n(a / sqrt t) g^alpha / alpha!`, `n = |alpha|`,
/// with `g` the coefficients of `1_{[0,t]}`.
pub fn donsker_delta(layout: &Arc<BasisLayout>, a: f64, t: f64, order: usize, modes: usize) -> Result<ChaosVector> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("Donsker delta needs t > 0, got {t}")));
    }
    if order > layout.order_cap() || modes > layout.mode_cap() {
        return Err(Error::CapOverflow(format!(
            "order {order} / modes {modes} exceed caps {} / {}",
            layout.order_cap(),
            layout.mode_cap()
        )));
    }
    let g = brownian_coefficients(t, modes)?;
    let density = gaussian_density(a, t);
    let radial: Vec<f64> = (0..=order)
        .map(|n| density * t.powf(-(n as f64) / 2.0) * hermite_poly(n, a / t.sqrt()))
        .collect();
    let mode_ids: Vec<u32> = (0..modes as u32).collect();
    let mut acc = Accumulator::new(Arc::clone(layout));
    for_each_multi_index(&mode_ids, order, |alpha: &MultiIndex| {
        acc.add(alpha.clone(), radial[alpha.order()] * wick_exp_coefficient(alpha, &g));
    });
    Ok(acc.finish())
}

/// Monte-Carlo estimate of `E[1_{|B_t - a| < eps}] / (2 eps)` with its
/// standard error.
pub fn mollified_delta_oracle(a: f64, t: f64, eps: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = t.sqrt();
    let mut hits = 0usize;
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        if (sd * z - a).abs() < eps {
            hits += 1;
        }
    }
    let q = hits as f64 / n as f64;
    let scale = 1.0 / (2.0 * eps);
    (q * scale, scale * (q * (1.0 - q) / n as f64).sqrt())
}
