use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `n` with `n!` finite in `f64`.
const MAX_EXACT_FACTORIAL: usize = 170;

/// `n!` as a double; `+inf` beyond 170.
pub fn factorial(n: usize) -> f64 {
    if n > MAX_EXACT_FACTORIAL {
        return f64::INFINITY;
    }
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!`, exact summation up to 170 and Stirling's series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n <= MAX_EXACT_FACTORIAL {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * std::f64::consts::TAU.ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// Finitely supported sequence of nonnegative integers, stored sparsely as
/// `(mode, power)` pairs sorted by mode with every power positive.
///
/// The derived ordering is lexicographic on the sorted pairs, so iteration
/// over a `BTreeMap<MultiIndex, _>` is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<(u32, u32)>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// `e_mode`.
    pub fn unit(mode: u32) -> Self {
        Self(vec![(mode, 1)])
    }

    /// `power * e_mode`.
    pub fn single(mode: u32, power: u32) -> Self {
        if power == 0 {
            Self::zero()
        } else {
            Self(vec![(mode, power)])
        }
    }

    /// Builds from arbitrary `(mode, power)` pairs; repeated modes add up.
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut v: Vec<(u32, u32)> = pairs.into_iter().filter(|&(_, p)| p > 0).collect();
        v.sort_unstable();
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(v.len());
        for (m, p) in v {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += p,
                _ => out.push((m, p)),
            }
        }
        Self(out)
    }

    /// From a dense vector of powers indexed by mode.
    pub fn from_dense(powers: &[u32]) -> Self {
        Self(
            powers
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(m, &p)| (m as u32, p))
                .collect(),
        )
    }

    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut out = vec![0; len];
        for &(m, p) in &self.0 {
            if (m as usize) < len {
                out[m as usize] = p;
            }
        }
        out
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `|alpha| = sum_j alpha_j`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&(_, p)| p as usize).sum()
    }

    pub fn power(&self, mode: u32) -> u32 {
        self.0
            .binary_search_by_key(&mode, |&(m, _)| m)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn max_mode(&self) -> Option<u32> {
        self.0.last().map(|&(m, _)| m)
    }

    pub fn modes(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(m, _)| m)
    }

    /// `alpha! = prod_j alpha_j!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&(_, p)| factorial(p as usize)).product()
    }

    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&(_, p)| ln_factorial(p as usize)).sum()
    }

    /// `x^alpha = prod_j x_j^{alpha_j}`; modes beyond `x.len()` read as zero.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        let mut acc = 1.0;
        for &(m, p) in &self.0 {
            match x.get(m as usize) {
                Some(&v) => acc *= v.powi(p as i32),
                None => return 0.0,
            }
        }
        acc
    }

    /// Multi-index sum `alpha + beta`.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Self(out)
    }

    /// `alpha - beta` when `beta <= alpha` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for &(m, p) in &self.0 {
            let q = if j < other.0.len() && other.0[j].0 == m {
                j += 1;
                other.0[j - 1].1
            } else {
                0
            };
            if q > p {
                return None;
            }
            if p > q {
                out.push((m, p - q));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Self(out))
    }
}

impl fmt::Display for MultiIndex {
    /// Sparse `mode^power` tokens separated by single spaces; empty for zero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(m, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{m}^{p}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for tok in s.split_whitespace() {
            let (m, p) = match tok.split_once('^') {
                Some((m, p)) => (m, p),
                None => (tok, "1"),
            };
            let m: u32 = m
                .parse()
                .map_err(|_| Error::Parse(format!("bad mode in `{tok}`")))?;
            let p: u32 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad power in `{tok}`")))?;
            pairs.push((m, p));
        }
        let mi = Self::from_pairs(pairs.iter().copied());
        if mi.0.len() != pairs.iter().filter(|&&(_, p)| p > 0).count() {
            return Err(Error::Parse(format!("repeated mode in `{s}`")));
        }
        Ok(mi)
    }
}

/// Calls `visit` on every multi-index supported on `modes` with
/// `|alpha| <= max_order`, in a fixed depth-first order.
pub fn for_each_multi_index(modes: &[u32], max_order: usize, mut visit: impl FnMut(&MultiIndex)) {
    let mut powers = vec![0u32; modes.len()];
    fn rec(
        pos: usize,
        remaining: usize,
        modes: &[u32],
        powers: &mut Vec<u32>,
        visit: &mut dyn FnMut(&MultiIndex),
    ) {
        if pos == modes.len() {
            let mi = MultiIndex(
                modes
                    .iter()
                    .zip(powers.iter())
                    .filter(|(_, &p)| p > 0)
                    .map(|(&m, &p)| (m, p))
                    .collect(),
            );
            visit(&mi);
            return;
        }
        for p in 0..=remaining {
            powers[pos] = p as u32;
            rec(pos + 1, remaining - p, modes, powers, visit);
        }
        powers[pos] = 0;
    }
    let mut sorted = modes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    rec(0, max_order, &sorted, &mut powers, &mut visit);
}

/// Number of multi-indices on `k` modes with order at most `n`: `C(k+n, n)`.
pub fn count_multi_indices(k: usize, n: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=n as u128 {
        c = c * (k as u128 + i) / i;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_factorial() {
        let a = MultiIndex::from_pairs([(3, 2), (0, 1), (7, 3)]);
        assert_eq!(a.order(), 6);
        assert_eq!(a.factorial(), 12.0);
        assert!((a.ln_factorial() - 12f64.ln()).abs() < 1e-14);
        assert_eq!(a.power(3), 2);
        assert_eq!(a.power(4), 0);
        assert_eq!(a.max_mode(), Some(7));
    }

    #[test]
    fn factorials_wide() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert!(factorial(60).is_finite());
        assert!((ln_factorial(60) - factorial(60).ln()).abs() < 1e-10);
        // Stirling branch continues smoothly
        let step = ln_factorial(171) - ln_factorial(170);
        assert!((step - 171f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn add_sub_roundtrip() {
        let a = MultiIndex::from_pairs([(0, 2), (4, 1)]);
        let b = MultiIndex::from_pairs([(1, 1), (4, 2)]);
        let s = a.add(&b);
        assert_eq!(s, MultiIndex::from_pairs([(0, 2), (1, 1), (4, 3)]));
        assert_eq!(s.checked_sub(&b), Some(a.clone()));
        assert_eq!(a.checked_sub(&b), None);
        assert_eq!(a.checked_sub(&MultiIndex::zero()), Some(a.clone()));
    }

    #[test]
    fn text_form() {
        let a = MultiIndex::from_pairs([(2, 3), (0, 1)]);
        assert_eq!(a.to_string(), "0^1 2^3");
        assert_eq!("0^1 2^3".parse::<MultiIndex>().unwrap(), a);
        assert_eq!("".parse::<MultiIndex>().unwrap(), MultiIndex::zero());
        assert!("1^2 1^1".parse::<MultiIndex>().is_err());
        assert!("x^1".parse::<MultiIndex>().is_err());
    }

    #[test]
    fn enumeration_counts() {
        let mut n = 0;
        for_each_multi_index(&[0, 2, 5], 4, |mi| {
            assert!(mi.order() <= 4);
            n += 1;
        });
        assert_eq!(n as u128, count_multi_indices(3, 4));
        assert_eq!(count_multi_indices(0, 7), 1);
    }

    #[test]
    fn dense_roundtrip() {
        let a = MultiIndex::from_dense(&[0, 2, 0, 1]);
        assert_eq!(a.to_dense(5), vec![0, 2, 0, 1, 0]);
        assert_eq!(a.monomial(&[9.0, 2.0, 9.0, 3.0]), 12.0);
        assert_eq!(a.monomial(&[1.0]), 0.0);
    }
}
