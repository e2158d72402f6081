use std::sync::Arc;

use crate::error::{Error, Result};

/// Spatial dimension, truncation caps and the flat-mode enumeration of
/// d-variate Hermite functions.
///
/// Mode `k` corresponds to the d-variate index `enumeration[k]`. The order is
/// graded lexicographic: total degree first, then the first coordinate
/// descending, which makes it degree-monotone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLayout {
    dim: usize,
    mode_cap: usize,
    order_cap: usize,
    enumeration: Vec<Vec<u32>>,
}

impl BasisLayout {
    pub fn new(dim: usize, mode_cap: usize, order_cap: usize) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::InvalidArgument("spatial dimension must be >= 1".into()));
        }
        Ok(Arc::new(Self {
            dim,
            mode_cap,
            order_cap,
            enumeration: graded_enumeration(dim, mode_cap),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of retained Hermite modes `J`.
    pub fn mode_cap(&self) -> usize {
        self.mode_cap
    }

    /// Maximal chaos order `N`.
    pub fn order_cap(&self) -> usize {
        self.order_cap
    }

    /// d-variate Hermite index of flat mode `k`.
    pub fn mode_index(&self, k: usize) -> Option<&[u32]> {
        self.enumeration.get(k).map(Vec::as_slice)
    }

    pub fn enumeration(&self) -> &[Vec<u32>] {
        &self.enumeration
    }

    /// Total degree of flat mode `k`.
    pub fn mode_degree(&self, k: usize) -> Option<usize> {
        self.mode_index(k)
            .map(|a| a.iter().map(|&v| v as usize).sum())
    }

    /// Layout with the same dimension and caps at least those of both inputs.
    pub fn join(a: &Arc<Self>, b: &Arc<Self>) -> Result<Arc<Self>> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                found: b.dim,
            });
        }
        if Arc::ptr_eq(a, b) || (a.mode_cap >= b.mode_cap && a.order_cap >= b.order_cap) {
            return Ok(Arc::clone(a));
        }
        if b.mode_cap >= a.mode_cap && b.order_cap >= a.order_cap {
            return Ok(Arc::clone(b));
        }
        Self::new(
            a.dim,
            a.mode_cap.max(b.mode_cap),
            a.order_cap.max(b.order_cap),
        )
    }

    /// Same dimension and caps replaced.
    pub fn with_caps(&self, mode_cap: usize, order_cap: usize) -> Arc<Self> {
        Arc::new(Self {
            dim: self.dim,
            mode_cap,
            order_cap,
            enumeration: graded_enumeration(self.dim, mode_cap),
        })
    }
}

fn graded_enumeration(dim: usize, count: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    let mut degree = 0u32;
    while out.len() < count {
        let mut cur = vec![0u32; dim];
        push_degree(&mut cur, 0, degree, &mut out, count);
        degree += 1;
    }
    out
}

fn push_degree(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>, count: usize) {
    if out.len() >= count {
        return;
    }
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_degree(cur, pos + 1, remaining - v, out, count);
    }
    cur[pos] = 0;
}
