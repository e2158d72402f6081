use serde::Serialize;

use super::{csv_table, fmt, Report, Tolerances};
use crate::error::{Error, Result};
use crate::hermite::{eigen_residual, kernel_sum_christoffel_darboux, kernel_sum_direct, HermiteGrid, Quadrature};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteConfig {
    /// Orthonormality checked for `j, k <= jmax`.
    pub jmax: usize,
    pub quadrature_order: usize,
    pub cd_nmax: usize,
    pub eigen_jmax: usize,
    pub eigen_step: f64,
    pub sup_jmax: usize,
    /// Spacing of the grid the supremum is taken over.
    pub sup_spacing: f64,
    /// Half-width of the compact set reported next to the global supremum.
    pub compact_radius: f64,
}

impl Default for HermiteConfig {
    fn default() -> Self {
        Self {
            jmax: 40,
            quadrature_order: 200,
            cd_nmax: 20,
            eigen_jmax: 30,
            eigen_step: 1e-3,
            sup_jmax: 256,
            sup_spacing: 1e-3,
            compact_radius: 5.0,
        }
    }
}

const CD_POINTS: [f64; 6] = [-3.0, -1.2, -0.3, 0.5, 1.7, 2.9];
const EIGEN_POINTS: [f64; 5] = [-3.1, -0.7, 0.45, 1.9, 4.2];

pub fn hermite_suite(cfg: &HermiteConfig, tol: &Tolerances) -> Result<Report> {
    if cfg.jmax >= cfg.quadrature_order {
        return Err(Error::Config(format!(
            "jmax {} must be below the quadrature order {}",
            cfg.jmax, cfg.quadrature_order
        )));
    }
    if !(cfg.sup_spacing > 0.0) || !(cfg.eigen_step > 0.0) {
        return Err(Error::Config("grid spacings must be positive".into()));
    }
    let mut report = Report::new("hermite-suite", cfg)?;

    // orthonormality
    let gram = Quadrature::gauss_hermite(cfg.quadrature_order)?.hermite_gram(cfg.jmax);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (j, row) in gram.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let err = (v - if j == k { 1.0 } else { 0.0 }).abs();
            worst = worst.max(err);
            rows.push(vec![j.to_string(), k.to_string(), fmt(v), fmt(err)]);
        }
    }
    report.push_artifact("orthonormality.csv", csv_table(&["j", "k", "integral", "error"], rows)?);
    report.check_le(tol, "orthonormality", worst, 1e-8, format!("j, k <= {}", cfg.jmax));

    // Christoffel-Darboux against the direct sum
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for n in 0..=cfg.cd_nmax {
        for &x in &CD_POINTS {
            for &t in &CD_POINTS {
                if x == t {
                    continue;
                }
                let direct = kernel_sum_direct(n, x, t);
                let cd = kernel_sum_christoffel_darboux(n, x, t);
                let err = (direct - cd).abs();
                worst = worst.max(err);
                rows.push(vec![n.to_string(), fmt(x), fmt(t), fmt(direct), fmt(cd), fmt(err)]);
            }
        }
    }
    report.push_artifact(
        "christoffel_darboux.csv",
        csv_table(&["n", "x", "t", "direct", "closed_form", "error"], rows)?,
    );
    report.check_le(tol, "christoffel_darboux", worst, 1e-10, format!("n <= {}", cfg.cd_nmax));

    // eigen-relation
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for j in 0..=cfg.eigen_jmax {
        for &x in &EIGEN_POINTS {
            let r = eigen_residual(j, x, cfg.eigen_step);
            worst = worst.max(r);
            rows.push(vec![j.to_string(), fmt(x), fmt(r)]);
        }
    }
    report.push_artifact("eigen.csv", csv_table(&["j", "x", "relative_residual"], rows)?);
    report.check_le(tol, "eigen_relation", worst, 1e-5, format!("j <= {}", cfg.eigen_jmax));

    // j^{1/4} sup |eta_j|; the functions are even or odd, so x >= 0 suffices.
    // Beyond the turning point 2 sqrt(j + 1/2) they decay like a Gaussian.
    let radius = 2.0 * (cfg.sup_jmax as f64 + 0.5).sqrt() + 10.0;
    let n = (radius / cfg.sup_spacing).ceil() as usize + 1;
    let global = HermiteGrid::uniform(0.0, radius, n, cfg.sup_jmax)?.sup_abs();
    let nc = (cfg.compact_radius / cfg.sup_spacing).ceil() as usize + 1;
    let compact = HermiteGrid::uniform(0.0, cfg.compact_radius, nc, cfg.sup_jmax)?.sup_abs();
    let mut rows = Vec::new();
    let (mut worst, mut worst_j, mut worst_compact) = (0.0f64, 0usize, 0.0f64);
    for j in 1..=cfg.sup_jmax {
        let w = (j as f64).powf(0.25);
        let (g, c) = (w * global[j], w * compact[j]);
        if g > worst {
            worst = g;
            worst_j = j;
        }
        worst_compact = worst_compact.max(c);
        rows.push(vec![j.to_string(), fmt(global[j]), fmt(g), fmt(compact[j]), fmt(c)]);
    }
    report.push_artifact(
        "sup_decay.csv",
        csv_table(&["j", "sup_abs", "scaled_sup", "sup_abs_compact", "scaled_sup_compact"], rows)?,
    );
    report.check_le(
        tol,
        "sup_decay",
        worst,
        1.2,
        format!(
            "max over 1 <= j <= {} at j = {worst_j}; the global sup scales like j^(-1/12), \
             so j^(1/4) sup grows like j^(1/6); on |x| <= {} the maximum is {worst_compact:.4}",
            cfg.sup_jmax, cfg.compact_radius
        ),
    );
    report.finish(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = HermiteConfig {
            jmax: 10,
            quadrature_order: 40,
            cd_nmax: 5,
            eigen_jmax: 5,
            sup_jmax: 8,
            sup_spacing: 1e-2,
            ..Default::default()
        };
        let r = hermite_suite(&cfg, &Tolerances::new()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.checks.len(), 4);
        assert!(hermite_suite(&HermiteConfig { jmax: 50, quadrature_order: 40, ..cfg }, &Tolerances::new()).is_err());
    }
}
