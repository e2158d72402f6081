//! Dense symmetric kernels `f_n` of the multiple Wiener integrals
//! `I_n(f_n)`, reconstituted from chaos coefficients.
//!
//! `H_alpha = I_n(sym(eta^{(x) alpha}))`, so the order-`n` kernel of
//! `sum c_alpha H_alpha` has entry `c_alpha alpha! / n!` at every index
//! sequence whose multiset of modes is `alpha`.

use super::{factorial, ChaosVector, MultiIndex};

/// Order-`n` tensor over `modes` Hermite modes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    modes: usize,
    order: usize,
    data: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(modes: usize, order: usize) -> Self {
        Self {
            modes,
            order,
            data: vec![0.0; modes.pow(order as u32)],
        }
    }

    /// The order-`n` kernel of `f` restricted to the first `modes` modes.
    pub fn from_chaos(f: &ChaosVector, order: usize, modes: usize) -> Self {
        let mut t = Self::zeros(modes, order);
        let nfact = factorial(order);
        let mut seq = vec![0usize; order];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut seq);
            let alpha = multiset(&seq);
            let c = f.get(&alpha);
            if c != 0.0 {
                t.data[flat] = c * alpha.factorial() / nfact;
            }
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, seq: &[usize]) -> f64 {
        self.data[self.flatten(seq)]
    }

    /// `|f_n|_0^2 = sum f^2`.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Coefficients `c_alpha = f[seq(alpha)] n! / alpha!` read back from a
    /// symmetric tensor.
    pub fn to_coefficients(&self) -> Vec<(MultiIndex, f64)> {
        let nfact = factorial(self.order);
        let mut out = Vec::new();
        let mut seq = vec![0usize; self.order];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut seq);
            // canonical (nondecreasing) sequences only
            if seq.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            let v = self.data[flat];
            if v != 0.0 {
                let alpha = multiset(&seq);
                let c = v * nfact / alpha.factorial();
                out.push((alpha, c));
            }
        }
        out
    }

    pub(crate) fn flatten(&self, seq: &[usize]) -> usize {
        seq.iter().fold(0, |acc, &i| acc * self.modes + i)
    }

    pub(crate) fn unflatten(&self, mut flat: usize, seq: &mut [usize]) {
        for slot in seq.iter_mut().rev() {
            *slot = flat % self.modes;
            flat /= self.modes;
        }
    }
}

/// Multiset of modes of an index sequence.
pub fn multiset(seq: &[usize]) -> MultiIndex {
    MultiIndex::from_pairs(seq.iter().map(|&m| (m as u32, 1)))
}

/// A canonical index sequence for `alpha` (modes repeated, nondecreasing).
pub fn canonical_sequence(alpha: &MultiIndex) -> Vec<usize> {
    alpha
        .pairs()
        .iter()
        .flat_map(|&(m, p)| std::iter::repeat(m as usize).take(p as usize))
        .collect()
}
