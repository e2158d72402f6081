//! Wick product, pointwise product and the chaos-approximation products.
//!
//! The pointwise product has two independent implementations: per-mode
//! Hermite linearization
//!
//! ```text
//! h_a h_b = sum_k k! C(a,k) C(b,k) h_{a+b-2k}
//! ```
//!
//! applied coordinate-wise to `H_alpha H_beta` (fast path), and the kernel
//! contraction formula
//!
//! ```text
//! H_j = sum_{j=m+n} sum_k k! C(n+k,k) C(m+k,k) phi_{n+k} (x)_k F_{m+k}
//! ```
//!
//! evaluated on dense kernels (reference path, small instances only).

use std::collections::BTreeMap;

use crate::chaos::tensor::{canonical_sequence, SymTensor};
use crate::chaos::{factorial, for_each_multi_index, Accumulator, BasisLayout, ChaosVector, MultiIndex};
use crate::error::{Error, Result};

/// Largest input order accepted by [`mul_contraction_oracle`].
pub const ORACLE_MAX_ORDER: usize = 6;
/// Largest number of distinct modes accepted by [`mul_contraction_oracle`].
pub const ORACLE_MAX_MODES: usize = 8;

/// Wick product: `(F <> G)_gamma = sum_{alpha + beta = gamma} c_alpha d_beta`.
pub fn wick(f: &ChaosVector, g: &ChaosVector) -> Result<ChaosVector> {
    let layout = BasisLayout::join(f.layout(), g.layout())?;
    let mut acc = Accumulator::new(layout);
    for (a, c) in f.iter() {
        for (b, d) in g.iter() {
            acc.add(a.add(b), c * d);
        }
    }
    Ok(with_input_tails(acc.finish(), f, g))
}

/// Pointwise product by per-mode Hermite linearization.
pub fn mul(f: &ChaosVector, g: &ChaosVector) -> Result<ChaosVector> {
    let layout = BasisLayout::join(f.layout(), g.layout())?;
    let max_power = f
        .iter()
        .chain(g.iter())
        .flat_map(|(a, _)| a.pairs().iter().map(|&(_, p)| p as usize))
        .max()
        .unwrap_or(0);
    let table = LinearizationTable::new(max_power);
    let mut acc = Accumulator::new(layout);
    let mut pairs = Vec::new();
    for (a, c) in f.iter() {
        for (b, d) in g.iter() {
            let factors = mode_factors(a, b);
            pairs.clear();
            expand(&factors, 0, &table, &mut pairs, c * d, &mut acc);
        }
    }
    Ok(with_input_tails(acc.finish(), f, g))
}

fn with_input_tails(v: ChaosVector, f: &ChaosVector, g: &ChaosVector) -> ChaosVector {
    let tail = v.tail_mass() + f.tail_mass() + g.tail_mass();
    v.with_tail_mass(tail)
}

/// `(mode, a, b)` for every mode in either support.
fn mode_factors(a: &MultiIndex, b: &MultiIndex) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::with_capacity(a.pairs().len() + b.pairs().len());
    let (pa, pb) = (a.pairs(), b.pairs());
    let (mut i, mut j) = (0, 0);
    while i < pa.len() || j < pb.len() {
        let ma = pa.get(i).map(|p| p.0).unwrap_or(u32::MAX);
        let mb = pb.get(j).map(|p| p.0).unwrap_or(u32::MAX);
        if ma < mb {
            out.push((ma, pa[i].1, 0));
            i += 1;
        } else if mb < ma {
            out.push((mb, 0, pb[j].1));
            j += 1;
        } else {
            out.push((ma, pa[i].1, pb[j].1));
            i += 1;
            j += 1;
        }
    }
    out
}

fn expand(
    factors: &[(u32, u32, u32)],
    pos: usize,
    table: &LinearizationTable,
    pairs: &mut Vec<(u32, u32)>,
    coeff: f64,
    acc: &mut Accumulator,
) {
    if pos == factors.len() {
        acc.add(MultiIndex::from_pairs(pairs.iter().copied()), coeff);
        return;
    }
    let (mode, a, b) = factors[pos];
    for k in 0..=a.min(b) {
        let power = a + b - 2 * k;
        let c = table.get(a as usize, b as usize, k as usize);
        let pushed = power > 0;
        if pushed {
            pairs.push((mode, power));
        }
        expand(factors, pos + 1, table, pairs, coeff * c, acc);
        if pushed {
            pairs.pop();
        }
    }
}

/// `k! C(a,k) C(b,k)` for `a, b <= max`, exact in `u128` where it fits.
#[derive(Debug, Clone)]
pub struct LinearizationTable {
    max: usize,
    values: Vec<f64>,
}

impl LinearizationTable {
    pub fn new(max: usize) -> Self {
        let n = max + 1;
        let mut values = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for k in 0..=a.min(b) {
                    values[(a * n + b) * n + k] = linearization_coefficient(a, b, k);
                }
            }
        }
        Self { max, values }
    }

    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        let n = self.max + 1;
        self.values[(a * n + b) * n + k]
    }
}

/// `k! C(a,k) C(b,k)`.
pub fn linearization_coefficient(a: usize, b: usize, k: usize) -> f64 {
    if k > a.min(b) {
        return 0.0;
    }
    let exact = (|| {
        let kf = (1..=k as u128).try_fold(1u128, |acc, v| acc.checked_mul(v))?;
        let ca = binomial_u128(a, k)?;
        let cb = binomial_u128(b, k)?;
        kf.checked_mul(ca)?.checked_mul(cb)
    })();
    match exact {
        Some(v) => v as f64,
        None => (crate::chaos::ln_factorial(k) + ln_binomial(a, k) + ln_binomial(b, k)).exp(),
    }
}

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(c)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    use crate::chaos::ln_factorial;
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial_u128(n, k)
        .map(|v| v as f64)
        .unwrap_or_else(|| ln_binomial(n, k).exp())
}

/// Pointwise product through dense kernel contractions. Slow reference path
/// for inputs of order at most 6 over at most 8 modes.
pub fn mul_contraction_oracle(f: &ChaosVector, g: &ChaosVector) -> Result<ChaosVector> {
    let layout = BasisLayout::join(f.layout(), g.layout())?;
    let (nf, ng) = (f.max_order(), g.max_order());
    let modes = f
        .support_modes()
        .into_iter()
        .chain(g.support_modes())
        .max()
        .map_or(1, |m| m as usize + 1);
    if nf > ORACLE_MAX_ORDER || ng > ORACLE_MAX_ORDER || modes > ORACLE_MAX_MODES {
        return Err(Error::InstanceTooLarge(format!(
            "orders ({nf}, {ng}) over {modes} modes; envelope is order <= {ORACLE_MAX_ORDER}, \
             modes <= {ORACLE_MAX_MODES}"
        )));
    }
    let fk: Vec<SymTensor> = (0..=nf).map(|n| SymTensor::from_chaos(f, n, modes)).collect();
    let gk: Vec<SymTensor> = (0..=ng).map(|n| SymTensor::from_chaos(g, n, modes)).collect();
    let all_modes: Vec<u32> = (0..modes as u32).collect();

    let mut acc = Accumulator::new(layout);
    for j in 0..=nf + ng {
        let mut gammas = Vec::new();
        for_each_multi_index(&all_modes, j, |gamma| {
            if gamma.order() == j {
                gammas.push(gamma.clone());
            }
        });
        for gamma in &gammas {
            let mut c = 0.0;
            for n in 0..=j.min(nf) {
                let m = j - n;
                if m > ng {
                    continue;
                }
                let mut k = 0;
                while n + k <= nf && m + k <= ng {
                    let weight = factorial(k) * binomial_f64(n + k, k) * binomial_f64(m + k, k);
                    c += weight * split_sum(gamma, n, m, k, &fk[n + k], &gk[m + k]);
                    k += 1;
                }
            }
            if c != 0.0 {
                acc.add(gamma.clone(), c);
            }
        }
    }
    Ok(with_input_tails(acc.finish(), f, g))
}

/// `(j!/gamma!) sym(a (x)_k b)[seq(gamma)]` expanded over the ways to split
/// `gamma` into the `n` free indices of `a` and `m` free indices of `b`.
fn split_sum(gamma: &MultiIndex, n: usize, m: usize, k: usize, a: &SymTensor, b: &SymTensor) -> f64 {
    let gamma_modes: Vec<u32> = gamma.modes().collect();
    let mut total = 0.0;
    for_each_multi_index(&gamma_modes, n, |beta| {
        if beta.order() != n {
            return;
        }
        let Some(delta) = gamma.checked_sub(beta) else {
            return;
        };
        debug_assert_eq!(delta.order(), m);
        let weight = factorial(n) / beta.factorial() * factorial(m) / delta.factorial();
        total += weight * contract(&canonical_sequence(beta), &canonical_sequence(&delta), k, a, b);
    });
    total
}

/// `sum_{l in [M]^k} a[sa, l] b[sb, l]`.
fn contract(sa: &[usize], sb: &[usize], k: usize, a: &SymTensor, b: &SymTensor) -> f64 {
    let modes = a.modes();
    let mut ia: Vec<usize> = sa.to_vec();
    let mut ib: Vec<usize> = sb.to_vec();
    ia.extend(std::iter::repeat(0).take(k));
    ib.extend(std::iter::repeat(0).take(k));
    let count = modes.pow(k as u32);
    let mut sum = 0.0;
    for flat in 0..count {
        let mut r = flat;
        for slot in 0..k {
            let v = r % modes;
            r /= modes;
            ia[sa.len() + slot] = v;
            ib[sb.len() + slot] = v;
        }
        sum += a.get(&ia) * b.get(&ib);
    }
    sum
}

/// Which factor(s) are chaos-projected in [`product_seq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    /// `F (Pi_m G)`
    Right,
    /// `(Pi_m F) G`
    Left,
    /// `(Pi_m F)(Pi_m G)`
    Sym,
}

impl std::str::FromStr for ProductKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Self::Right),
            "left" => Ok(Self::Left),
            "sym" => Ok(Self::Sym),
            other => Err(Error::InvalidArgument(format!("unknown product kind `{other}`"))),
        }
    }
}

/// Level-`m` stage of the chaos-approximation products.
pub fn product_seq(f: &ChaosVector, g: &ChaosVector, kind: ProductKind, m: usize) -> Result<ChaosVector> {
    match kind {
        ProductKind::Right => mul(f, &g.project_order(m)),
        ProductKind::Left => mul(&f.project_order(m), g),
        ProductKind::Sym => mul(&f.project_order(m), &g.project_order(m)),
    }
}

/// True when no Hermite mode appears in both supports.
pub fn disjoint_mode_support(f: &ChaosVector, g: &ChaosVector) -> bool {
    f.support_modes().is_disjoint(&g.support_modes())
}

/// `||F G||_m / (||F||_r ||G||_s)`.
pub fn module_bound_ratio(f: &ChaosVector, g: &ChaosVector, m: i32, r: i32, s: i32) -> Result<f64> {
    let prod = mul(f, g)?;
    let denom = f.norm_value(r) * g.norm_value(s);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(prod.norm_value(m) / denom)
}

/// Smallest `C` with `||F G||_m <= C ||F||_r ||G||_s` over the given pairs.
pub fn fit_module_constant(pairs: &[(ChaosVector, ChaosVector)], m: i32, r: i32, s: i32) -> Result<f64> {
    pairs
        .iter()
        .map(|(f, g)| module_bound_ratio(f, g, m, r, s))
        .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

/// Coefficient-wise maximum absolute difference.
pub fn max_abs_diff(a: &ChaosVector, b: &ChaosVector) -> f64 {
    let mut keys: BTreeMap<&MultiIndex, ()> = BTreeMap::new();
    for (k, _) in a.iter().chain(b.iter()) {
        keys.insert(k, ());
    }
    keys.keys()
        .map(|k| (a.get(k) - b.get(k)).abs())
        .fold(0.0, f64::max)
}
