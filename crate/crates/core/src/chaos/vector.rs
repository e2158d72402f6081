use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{for_each_multi_index, BasisLayout, MultiIndex};
use crate::error::{Error, Result};
use crate::hermite::hermite_poly;

/// A weighted norm `||F||_p` with overflow reported instead of hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norm {
    /// `||F||_p`, or `f64::MAX` when saturated.
    pub value: f64,
    /// `ln ||F||_p` (`-inf` for the zero vector); finite even when saturated.
    pub log_value: f64,
    pub saturated: bool,
}

/// Truncated chaos expansion `F = sum_alpha c_alpha H_alpha`.
///
/// Coefficients are stored sparsely in lexicographic multi-index order, which
/// fixes the order of every reduction. `tail_mass` accumulates the `(L^2)`
/// mass `sum alpha! c_alpha^2` of content that fell outside the caps.
#[derive(Debug, Clone)]
pub struct ChaosVector {
    layout: Arc<BasisLayout>,
    coeffs: BTreeMap<MultiIndex, f64>,
    tail_mass: f64,
}

impl PartialEq for ChaosVector {
    fn eq(&self, other: &Self) -> bool {
        self.layout.dim() == other.layout.dim()
            && self.coeffs == other.coeffs
            && self.tail_mass == other.tail_mass
    }
}

impl ChaosVector {
    pub fn zero(layout: &Arc<BasisLayout>) -> Self {
        Self {
            layout: Arc::clone(layout),
            coeffs: BTreeMap::new(),
            tail_mass: 0.0,
        }
    }

    /// `c * H_0`.
    pub fn constant(layout: &Arc<BasisLayout>, c: f64) -> Self {
        let mut v = Self::zero(layout);
        if c != 0.0 {
            v.coeffs.insert(MultiIndex::zero(), c);
        }
        v
    }

    /// `H_alpha`.
    pub fn basis(layout: &Arc<BasisLayout>, alpha: MultiIndex) -> Result<Self> {
        Self::from_coeffs(layout, [(alpha, 1.0)])
    }

    /// Fails if any index violates the caps; repeated indices add up.
    pub fn from_coeffs<I>(layout: &Arc<BasisLayout>, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut map = BTreeMap::new();
        for (alpha, c) in coeffs {
            if !fits(layout, &alpha) {
                return Err(Error::CapOverflow(format!(
                    "index `{alpha}` outside caps J={} N={}",
                    layout.mode_cap(),
                    layout.order_cap()
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient at `{alpha}`")));
            }
            *map.entry(alpha).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self {
            layout: Arc::clone(layout),
            coeffs: map,
            tail_mass: 0.0,
        })
    }

    /// `I_1(g) = sum_j g_j H_{e_j}`.
    pub fn from_first_order(layout: &Arc<BasisLayout>, g: &[f64]) -> Result<Self> {
        check_mode_vector(layout, g)?;
        if layout.order_cap() < 1 && g.iter().any(|&v| v != 0.0) {
            return Err(Error::CapOverflow("order cap 0 cannot hold a first-order term".into()));
        }
        Self::from_coeffs(
            layout,
            g.iter()
                .enumerate()
                .map(|(j, &c)| (MultiIndex::unit(j as u32), c)),
        )
    }

    /// Wick exponential of `I_1(g)`, `c_alpha = g^alpha / alpha!` for
    /// `|alpha| <= order_cap`. The dropped `(L^2)` mass
    /// `sum_{n > N} |g|^{2n} / n!` is recorded in `tail_mass`.
    pub fn wick_exp(layout: &Arc<BasisLayout>, g: &[f64]) -> Result<Self> {
        check_mode_vector(layout, g)?;
        let modes: Vec<u32> = g
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j as u32)
            .collect();
        let mut coeffs = BTreeMap::new();
        for_each_multi_index(&modes, layout.order_cap(), |alpha| {
            let c = wick_exp_coefficient(alpha, g);
            if c != 0.0 {
                coeffs.insert(alpha.clone(), c);
            }
        });
        let g2: f64 = g.iter().map(|v| v * v).sum();
        Ok(Self {
            layout: Arc::clone(layout),
            coeffs,
            tail_mass: exp_series_tail(g2, layout.order_cap()),
        })
    }

    pub(crate) fn from_parts(
        layout: Arc<BasisLayout>,
        coeffs: BTreeMap<MultiIndex, f64>,
        tail_mass: f64,
    ) -> Self {
        Self {
            layout,
            coeffs,
            tail_mass,
        }
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn with_tail_mass(mut self, tail: f64) -> Self {
        self.tail_mass = tail.max(0.0);
        self
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn max_order(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    /// Hermite modes that appear in at least one stored index.
    pub fn support_modes(&self) -> BTreeSet<u32> {
        self.coeffs.keys().flat_map(|a| a.modes()).collect()
    }

    /// `E[F] = c_0`.
    pub fn expectation(&self) -> f64 {
        self.get(&MultiIndex::zero())
    }

    /// `||F||_p = (sum alpha! e^{2p|alpha|} c_alpha^2)^{1/2}`, accumulated in
    /// log space; any integer `p`, negative giving the dual norms.
    pub fn norm(&self, p: i32) -> Norm {
        log_norm(self.coeffs.iter().map(|(a, &c)| (a, c)), p)
    }

    /// `norm(p).value`.
    pub fn norm_value(&self, p: i32) -> f64 {
        self.norm(p).value
    }

    /// `n! |F_n|_0^2 = sum_{|alpha| = n} alpha! c_alpha^2` for `n = 0..=max_order`.
    pub fn order_masses(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.max_order() + 1];
        for (a, &c) in &self.coeffs {
            out[a.order()] += a.factorial() * c * c;
        }
        out
    }

    /// `Pi_m F`: drops every index of order above `m`.
    pub fn project_order(&self, m: usize) -> Self {
        self.filtered(|a| a.order() <= m)
    }

    /// Drops every index with a mode outside `0..modes`.
    pub fn project_modes(&self, modes: usize) -> Self {
        self.filtered(|a| a.max_mode().map_or(true, |mm| (mm as usize) < modes))
    }

    fn filtered(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        Self {
            layout: Arc::clone(&self.layout),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| keep(a))
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
            tail_mass: self.tail_mass,
        }
    }

    /// Duality pairing `<<F, f>> = sum alpha! c_alpha d_alpha`.
    pub fn pairing(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(small
            .coeffs
            .iter()
            .filter_map(|(a, &c)| large.coeffs.get(a).map(|&d| a.factorial() * c * d))
            .sum())
    }

    /// `S(F)(phi) = sum_alpha c_alpha phi^alpha` for Hermite coefficients `phi`.
    pub fn s_transform(&self, phi: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, &c)| c * a.monomial(phi)).sum()
    }

    /// Evaluates `F` as a polynomial in the Gaussian coordinates
    /// `xi_j = <omega, eta_j>`: `sum_alpha c_alpha prod_j h_{alpha_j}(xi_j)`.
    pub fn evaluate_at(&self, xi: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(a, &c)| {
                c * a
                    .pairs()
                    .iter()
                    .map(|&(m, p)| hermite_poly(p as usize, xi.get(m as usize).copied().unwrap_or(0.0)))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        if a == 0.0 {
            return Self::zero(&self.layout);
        }
        Self {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|(k, &c)| (k.clone(), a * c)).collect(),
            tail_mass: a * a * self.tail_mass,
        }
    }

    /// `a F + b G`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let layout = BasisLayout::join(&self.layout, &other.layout)?;
        let mut coeffs: BTreeMap<MultiIndex, f64> =
            self.coeffs.iter().map(|(k, &c)| (k.clone(), a * c)).collect();
        for (k, &d) in &other.coeffs {
            *coeffs.entry(k.clone()).or_insert(0.0) += b * d;
        }
        coeffs.retain(|_, c| *c != 0.0);
        let tail = (a.abs() * self.tail_mass.sqrt() + b.abs() * other.tail_mass.sqrt()).powi(2);
        Ok(Self {
            layout,
            coeffs,
            tail_mass: tail,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Same coefficients under a different layout of the same dimension.
    pub fn relayout(&self, layout: &Arc<BasisLayout>) -> Result<Self> {
        if layout.dim() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: self.layout.dim(),
            });
        }
        let mut acc = Accumulator::new(Arc::clone(layout));
        for (a, &c) in &self.coeffs {
            acc.add(a.clone(), c);
        }
        let mut out = acc.finish();
        out.tail_mass += self.tail_mass;
        Ok(out)
    }

    pub(crate) fn check_dim(&self, other: &Self) -> Result<()> {
        if self.layout.dim() != other.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: other.layout.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn fits(layout: &BasisLayout, alpha: &MultiIndex) -> bool {
    alpha.order() <= layout.order_cap()
        && alpha.max_mode().map_or(true, |m| (m as usize) < layout.mode_cap())
}

fn check_mode_vector(layout: &BasisLayout, g: &[f64]) -> Result<()> {
    if g.len() > layout.mode_cap() {
        return Err(Error::CapOverflow(format!(
            "mode vector of length {} exceeds mode cap {}",
            g.len(),
            layout.mode_cap()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("mode vector must be finite".into()));
    }
    Ok(())
}

/// `g^alpha / alpha!` evaluated in log space.
pub(crate) fn wick_exp_coefficient(alpha: &MultiIndex, g: &[f64]) -> f64 {
    let mut log = -alpha.ln_factorial();
    let mut negative = false;
    for &(m, p) in alpha.pairs() {
        let v = g.get(m as usize).copied().unwrap_or(0.0);
        if v == 0.0 {
            return 0.0;
        }
        log += p as f64 * v.abs().ln();
        if v < 0.0 && p % 2 == 1 {
            negative = !negative;
        }
    }
    let c = log.exp();
    if negative {
        -c
    } else {
        c
    }
}

/// `sum_{n > order} x^n / n!` for `x >= 0`.
pub(crate) fn exp_series_tail(x: f64, order: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut n = order + 1;
    let mut term = ((n as f64) * x.ln() - super::ln_factorial(n)).exp();
    let mut sum = 0.0;
    while term > 0.0 {
        sum += term;
        n += 1;
        term *= x / n as f64;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

pub(crate) fn log_norm<'a, I>(entries: I, p: i32) -> Norm
where
    I: Iterator<Item = (&'a MultiIndex, f64)>,
{
    let logs: Vec<f64> = entries
        .filter(|(_, c)| *c != 0.0)
        .map(|(a, c)| a.ln_factorial() + 2.0 * p as f64 * a.order() as f64 + 2.0 * c.abs().ln())
        .collect();
    let Some(max) = logs.iter().copied().reduce(f64::max) else {
        return Norm {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            saturated: false,
        };
    };
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    let log_value = 0.5 * (max + sum.ln());
    let value = log_value.exp();
    if value.is_finite() {
        Norm {
            value,
            log_value,
            saturated: false,
        }
    } else {
        Norm {
            value: f64::MAX,
            log_value,
            saturated: true,
        }
    }
}

/// Collects coefficients under a layout, diverting indices beyond the caps
/// into the tail mass.
pub(crate) struct Accumulator {
    layout: Arc<BasisLayout>,
    kept: BTreeMap<MultiIndex, f64>,
    dropped: BTreeMap<MultiIndex, f64>,
}

impl Accumulator {
    pub(crate) fn new(layout: Arc<BasisLayout>) -> Self {
        Self {
            layout,
            kept: BTreeMap::new(),
            dropped: BTreeMap::new(),
        }
    }

    pub(crate) fn add(&mut self, alpha: MultiIndex, c: f64) {
        let target = if fits(&self.layout, &alpha) {
            &mut self.kept
        } else {
            &mut self.dropped
        };
        *target.entry(alpha).or_insert(0.0) += c;
    }

    pub(crate) fn finish(self) -> ChaosVector {
        let tail: f64 = self
            .dropped
            .iter()
            .map(|(a, &c)| a.factorial() * c * c)
            .sum();
        let mut kept = self.kept;
        kept.retain(|_, c| *c != 0.0);
        ChaosVector::from_parts(self.layout, kept, tail)
    }
}
