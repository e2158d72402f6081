//! Line-oriented text format for chaos vectors.
//!
//! ```text
//! dim J N
//! tail <mass>          (only when the tail mass is nonzero)
//! 0^2 3^1 : 1.5
//! : 0.25               (the empty multi-index, H_0)
//! ```
//!
//! Coefficients use Rust's shortest round-trip float formatting, so
//! `read(write(F)) == F` bit for bit.

use std::fmt::Write as _;

use super::{BasisLayout, ChaosVector, MultiIndex};
use crate::error::{Error, Result};

pub fn write_chaos(f: &ChaosVector) -> String {
    let l = f.layout();
    let mut out = format!("{} {} {}\n", l.dim(), l.mode_cap(), l.order_cap());
    if f.tail_mass() != 0.0 {
        let _ = writeln!(out, "tail {:?}", f.tail_mass());
    }
    for (a, c) in f.iter() {
        if a.is_zero() {
            let _ = writeln!(out, ": {c:?}");
        } else {
            let _ = writeln!(out, "{a} : {c:?}");
        }
    }
    out
}

pub fn read_chaos(text: &str) -> Result<ChaosVector> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Format {
        line: 1,
        msg: "missing header `dim J N`".into(),
    })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format {
            line: hline + 1,
            msg: format!("bad header: {e}"),
        })?;
    let [dim, j, n] = nums[..] else {
        return Err(Error::Format {
            line: hline + 1,
            msg: "header must be `dim J N`".into(),
        });
    };
    let layout = BasisLayout::new(dim, j, n)?;
    let mut tail = 0.0;
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let err = |msg: String| Error::Format { line: idx + 1, msg };
        if let Some(rest) = line.trim_start().strip_prefix("tail ") {
            tail = rest.trim().parse::<f64>().map_err(|e| err(format!("bad tail: {e}")))?;
            continue;
        }
        let (idx_part, coeff) = line
            .rsplit_once(':')
            .ok_or_else(|| err("row must be `index : coefficient`".into()))?;
        let alpha: MultiIndex = idx_part.parse().map_err(|e| err(format!("{e}")))?;
        let c: f64 = coeff
            .trim()
            .parse()
            .map_err(|e| err(format!("bad coefficient: {e}")))?;
        rows.push((alpha, c));
    }
    Ok(ChaosVector::from_coeffs(&layout, rows)?.with_tail_mass(tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_layout() {
        let l = BasisLayout::new(1, 4, 3).unwrap();
        let f = ChaosVector::from_coeffs(
            &l,
            [
                (MultiIndex::zero(), 0.25),
                (MultiIndex::from_pairs([(0, 2), (3, 1)]), 1.5),
            ],
        )
        .unwrap();
        let text = write_chaos(&f);
        assert_eq!(text, "1 4 3\n: 0.25\n0^2 3^1 : 1.5\n");
        assert_eq!(read_chaos(&text).unwrap(), f);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_chaos("").is_err());
        assert!(read_chaos("1 2\n").is_err());
        assert!(read_chaos("1 2 2\n0^1 1.0\n").is_err());
        assert!(read_chaos("1 2 2\n5^1 : 1.0\n").is_err());
        assert!(read_chaos("1 2 2\n0^1 : abc\n").is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_roundtrip(
            entries in proptest::collection::vec(
                (proptest::collection::vec(0u32..3, 0..6), -1e6f64..1e6), 0..20),
            tail in prop_oneof![Just(0.0), 0.0f64..1.0],
        ) {
            let l = BasisLayout::new(2, 6, 5).unwrap();
            let coeffs = entries.into_iter().map(|(dense, c)| (MultiIndex::from_dense(&dense), c))
                .filter(|(a, _)| a.order() <= 5);
            let f = ChaosVector::from_coeffs(&l, coeffs).unwrap().with_tail_mass(tail);
            let back = read_chaos(&write_chaos(&f)).unwrap();
            prop_assert_eq!(back.len(), f.len());
            for ((a, c), (b, d)) in f.iter().zip(back.iter()) {
                prop_assert_eq!(a, b);
                prop_assert_eq!(c.to_bits(), d.to_bits());
            }
            prop_assert_eq!(back.tail_mass().to_bits(), f.tail_mass().to_bits());
        }
    }
}
