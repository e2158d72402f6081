//! Quadrature rules used for `L^2` pairings.

use nalgebra::DMatrix;

use super::{hermite_fn_all, hermite_fn_all_into};
use crate::error::{Error, Result};

/// Gauss-Hermite rule for the weight `e^{-x^2/2}` on the real line.
///
/// `scaled_weights[i] = weights[i] * e^{x_i^2/2}` integrates functions that
/// already carry their own Gaussian decay, e.g. products of Hermite functions.
#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scaled_weights: Vec<f64>,
    order: usize,
}

impl Quadrature {
    pub const DEFAULT_ORDER: usize = 200;

    /// Nodes are the zeros of `eta_order`; Golub-Welsch seeds, Newton polish.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let mut row = vec![0.0; order + 1];
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                hermite_fn_all_into(*x, &mut row);
                let value = row[order];
                let deriv = (order as f64).sqrt() * row[order - 1] - 0.5 * *x * value;
                if deriv == 0.0 {
                    break;
                }
                let step = value / deriv;
                *x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
        }

        // Christoffel numbers: 1 / sum_{k<n} p_k(x)^2, with p_k = eta_k e^{x^2/4}.
        let scaled_weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let vals = hermite_fn_all(order - 1, x);
                1.0 / vals.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        let weights = nodes
            .iter()
            .zip(&scaled_weights)
            .map(|(&x, &w)| w * (-0.5 * x * x).exp())
            .collect();
        Ok(Self {
            nodes,
            weights,
            scaled_weights,
            order,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `int f(x) e^{-x^2/2} dx`.
    pub fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `int g(x) dx` for `g` with Gaussian decay.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// Gram matrix `G[j][k] = int eta_j eta_k dx` for `j, k <= n`.
    pub fn hermite_gram(&self, n: usize) -> Vec<Vec<f64>> {
        let mut gram = vec![vec![0.0; n + 1]; n + 1];
        let mut row = vec![0.0; n + 1];
        for (&x, &w) in self.nodes.iter().zip(&self.scaled_weights) {
            hermite_fn_all_into(x, &mut row);
            for j in 0..=n {
                let wj = w * row[j];
                for k in 0..=n {
                    gram[j][k] += wj * row[k];
                }
            }
        }
        gram
    }
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 48;

/// Adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued integrand.
///
/// `f(x, out)` writes `dim` values into `out`. A panel is accepted when the
/// Gauss/Kronrod difference of every component is below its share of `tol`.
pub fn adaptive_integrate<F>(f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    let mut total = vec![0.0; dim];
    if a == b || dim == 0 {
        return Ok(total);
    }
    let width = b - a;
    let mut stack = vec![(a, b, 0usize)];
    let mut buf = vec![0.0; dim];
    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    while let Some((lo, hi, depth)) = stack.pop() {
        let centre = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        kronrod.iter_mut().for_each(|v| *v = 0.0);
        gauss.iter_mut().for_each(|v| *v = 0.0);
        for (i, (&node, &wk)) in GK15_NODES.iter().zip(&GK15_WEIGHTS).enumerate() {
            let gauss_weight = if i % 2 == 1 { G7_WEIGHTS[i / 2] } else { 0.0 };
            let points: &[f64] = if node == 0.0 {
                &[0.0]
            } else {
                &[-1.0, 1.0]
            };
            for &sign in points {
                f(centre + sign * half * node, &mut buf);
                for k in 0..dim {
                    kronrod[k] += wk * buf[k];
                    gauss[k] += gauss_weight * buf[k];
                }
            }
        }
        let local_tol = tol * (hi - lo).abs() / width.abs();
        let err = kronrod
            .iter()
            .zip(&gauss)
            .map(|(k, g)| (half * (k - g)).abs())
            .fold(0.0f64, f64::max);
        if err <= local_tol || (err <= 1e-15 && depth > 4) {
            for k in 0..dim {
                total[k] += half * kronrod[k];
            }
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNonConvergence(format!(
                "panel [{lo}, {hi}] error {err:.3e} exceeds {local_tol:.3e} at depth {depth}"
            )));
        } else {
            stack.push((centre, hi, depth + 1));
            stack.push((lo, centre, depth + 1));
        }
    }
    Ok(total)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            deriv = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let step = pn / deriv;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial_odd(k: usize) -> f64 {
        (1..=k).step_by(2).fold(1.0, |a, v| a * v as f64)
    }

    #[test]
    fn gauss_hermite_monomials() {
        let q = Quadrature::gauss_hermite(20).unwrap();
        assert_eq!(q.nodes().len(), 20);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        let norm = std::f64::consts::TAU.sqrt();
        for deg in 0usize..40 {
            let got = q.integrate_weighted(|x| x.powi(deg as i32));
            let want = if deg % 2 == 1 {
                0.0
            } else {
                norm * double_factorial_odd(deg.saturating_sub(1))
            };
            // odd moments cancel; compare against the size of |x|^deg
            let scale = norm * double_factorial_odd(deg + 1).max(1.0);
            assert!((got - want).abs() <= 1e-10 * scale, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn orthonormal_gram_200() {
        let q = Quadrature::gauss_hermite(Quadrature::DEFAULT_ORDER).unwrap();
        let gram = q.hermite_gram(40);
        for (j, row) in gram.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-8, "({j},{k}) = {v}");
            }
        }
    }

    #[test]
    fn adaptive_matches_closed_forms() {
        let v = adaptive_integrate(
            |x, out| {
                out[0] = x.sin();
                out[1] = (-x * x).exp();
            },
            0.0,
            3.0,
            2,
            1e-12,
        )
        .unwrap();
        assert!((v[0] - (1.0 - 3f64.cos())).abs() < 1e-12);
        let erf3 = 0.999_977_909_503_001_4;
        assert!((v[1] - 0.5 * std::f64::consts::PI.sqrt() * erf3).abs() < 1e-12);
        assert_eq!(adaptive_integrate(|_, o| o[0] = 1.0, 2.0, 2.0, 1, 1e-9).unwrap(), vec![0.0]);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = adaptive_integrate(|x, o| o[0] = 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1, 1e-14);
        assert!(r.is_err());
    }

    #[test]
    fn legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(12);
        for deg in 0..24 {
            let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg)).sum();
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-13, "deg {deg}");
        }
    }
}
