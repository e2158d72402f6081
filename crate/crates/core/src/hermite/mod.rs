//! Hermite polynomials and Hermite functions.
//!
//! Probabilists' convention throughout:
//!
//! ```text
//! h_{j+1}(x) = x h_j(x) - j h_{j-1}(x),        h_0 = 1, h_1 = x
//! eta_j(x)   = (sqrt(2 pi) j!)^{-1/2} e^{-x^2/4} h_j(x)
//! ```
//!
//! The functions `eta_j` form an orthonormal basis of `L^2(R)`. They are
//! evaluated with the normalized three-term recurrence
//! `eta_{j+1} = (x eta_j - sqrt(j) eta_{j-1}) / sqrt(j+1)`, which never forms
//! `j!`.

mod quadrature;

pub use quadrature::{adaptive_integrate, gauss_legendre, Quadrature};

use crate::error::{Error, Result};

/// `(2 pi)^{-1/4}`, the value of `eta_0(0)`.
pub const ETA0_AT_ZERO: f64 = 0.631_618_777_746_065_6;

/// Radius below which `kernel_sum` falls back to the direct sum.
pub const CD_SWITCH_RADIUS: f64 = 0.05;

/// Largest `x^2 / 4` for which `e^{-x^2/4}` is a normal double.
const DIRECT_EXPONENT_LIMIT: f64 = 700.0;

/// Probabilists' Hermite polynomial `h_j(x)` by the three-term recurrence.
pub fn hermite_poly(j: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if j == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..j {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite function `eta_j(x)`.
pub fn hermite_fn(j: usize, x: f64) -> f64 {
    let mut out = vec![0.0; j + 1];
    hermite_fn_all_into(x, &mut out);
    out[j]
}

/// `eta_0(x), ..., eta_n(x)`.
pub fn hermite_fn_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    hermite_fn_all_into(x, &mut out);
    out
}

/// Fills `out[j] = eta_j(x)` for `j < out.len()`.
pub fn hermite_fn_all_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let exponent = 0.25 * x * x;
    if exponent < DIRECT_EXPONENT_LIMIT {
        out[0] = ETA0_AT_ZERO * (-exponent).exp();
        if out.len() > 1 {
            out[1] = x * out[0];
        }
        for j in 1..out.len() - 1 {
            let jf = j as f64;
            out[j + 1] = (x * out[j] - jf.sqrt() * out[j - 1]) / (jf + 1.0).sqrt();
        }
        return;
    }
    // Far tail: run the recurrence on rescaled values and carry the scale
    // in log space so that nothing underflows before it has to.
    let mut log_scale = ETA0_AT_ZERO.ln() - exponent;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = from_log(cur, log_scale);
    for j in 0..out.len() - 1 {
        let jf = j as f64;
        let next = (x * cur - jf.sqrt() * prev) / (jf + 1.0).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e200 {
            prev /= 1e200;
            cur /= 1e200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
        out[j + 1] = from_log(cur, log_scale);
    }
}

fn from_log(v: f64, log_scale: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    v.signum() * (v.abs().ln() + log_scale).exp()
}

/// Derivative `eta_j'(x) = sqrt(j) eta_{j-1}(x) - (x/2) eta_j(x)`.
pub fn hermite_fn_deriv(j: usize, x: f64) -> f64 {
    let vals = hermite_fn_all(j, x);
    let lower = if j == 0 { 0.0 } else { (j as f64).sqrt() * vals[j - 1] };
    lower - 0.5 * x * vals[j]
}

/// d-variate Hermite function `eta_alpha(x) = prod_i eta_{alpha_i}(x_i)`.
pub fn hermite_fn_multi(alpha: &[usize], x: &[f64]) -> Result<f64> {
    if alpha.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            found: x.len(),
        });
    }
    Ok(alpha
        .iter()
        .zip(x)
        .map(|(&a, &xi)| hermite_fn(a, xi))
        .product())
}

/// Relative residual of `(-d^2/dx^2 + x^2/4 + 1/2) eta_j = (j + 1) eta_j` with
/// a central second difference of step `h`, scaled by `max(|(j+1) eta_j|, 1e-3)`.
pub fn eigen_residual(j: usize, x: f64, h: f64) -> f64 {
    let f = |y: f64| hermite_fn(j, y);
    let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    let lhs = -d2 + (0.25 * x * x + 0.5) * f(x);
    let rhs = (j as f64 + 1.0) * f(x);
    (lhs - rhs).abs() / rhs.abs().max(1e-3)
}

/// `sum_{j=0}^{n} eta_j(t) eta_j(x)`.
///
/// Uses the Christoffel-Darboux closed form away from the diagonal and the
/// direct sum when `|x - t| < CD_SWITCH_RADIUS`.
pub fn kernel_sum(n: usize, x: f64, t: f64) -> f64 {
    // canonical argument order keeps the result exactly symmetric
    let (x, t) = if x <= t { (x, t) } else { (t, x) };
    if n == 0 || (x - t).abs() < CD_SWITCH_RADIUS {
        kernel_sum_direct(n, x, t)
    } else {
        kernel_sum_christoffel_darboux(n, x, t)
    }
}

pub fn kernel_sum_direct(n: usize, x: f64, t: f64) -> f64 {
    let ex = hermite_fn_all(n, x);
    let et = hermite_fn_all(n, t);
    // symmetric in (x, t) term by term
    ex.iter().zip(&et).map(|(a, b)| a * b).sum()
}

/// Closed form `sqrt(n+1) (eta_{n+1}(x) eta_n(t) - eta_{n+1}(t) eta_n(x)) / (x - t)`.
/// Undefined at `x == t`.
pub fn kernel_sum_christoffel_darboux(n: usize, x: f64, t: f64) -> f64 {
    let ex = hermite_fn_all(n + 1, x);
    let et = hermite_fn_all(n + 1, t);
    ((n + 1) as f64).sqrt() * (ex[n + 1] * et[n] - et[n + 1] * ex[n]) / (x - t)
}

/// Evaluation abscissae with a maximal degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteGrid {
    points: Vec<f64>,
    max_degree: usize,
}

impl HermiteGrid {
    pub fn new(points: Vec<f64>, max_degree: usize) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "grid points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points, max_degree })
    }

    /// `n` equispaced points on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize, max_degree: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs n >= 2 and lo < hi (n={n}, lo={lo}, hi={hi})"
            )));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + h * i as f64).collect(), max_degree)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Row `i` holds `eta_0..=eta_max_degree` at `points[i]`.
    pub fn hermite_table(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|&x| hermite_fn_all(self.max_degree, x))
            .collect()
    }

    /// `sup_i |eta_j(points[i])|` for every `j <= max_degree`.
    pub fn sup_abs(&self) -> Vec<f64> {
        let mut sup = vec![0.0f64; self.max_degree + 1];
        let mut row = vec![0.0; self.max_degree + 1];
        for &x in &self.points {
            hermite_fn_all_into(x, &mut row);
            for (s, v) in sup.iter_mut().zip(&row) {
                *s = s.max(v.abs());
            }
        }
        sup
    }
}
