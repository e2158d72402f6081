//! Finite-difference check of `u_t = L u + u W_m(t, x)` on Monte-Carlo
//! solutions, with common random numbers across the stencil.

use std::sync::Arc;

use serde::Serialize;

use super::fk::{batch_means, SolutionKind};
use super::sim::{simulate_paths, McParams};
use super::SdeSpec;
use crate::chaos::{BasisLayout, ChaosVector};
use crate::error::{Error, Result};
use crate::noise::white_noise;
use crate::products;

/// How `u` couples to the noise in the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductChoice {
    Pointwise,
    /// Negative control: the generalized solution does not satisfy the
    /// Wick-coupled equation.
    Wick,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualConfig {
    pub t: f64,
    pub x: f64,
    pub m: Option<usize>,
    pub order: usize,
    /// Time step of the stencil; a multiple of `params.dt`.
    pub h_t: f64,
    pub h_x: f64,
    pub params: McParams,
    pub batches: usize,
    pub p_grid: Vec<i32>,
    /// Re-evaluate with `h -> 2h` to estimate the stencil error.
    pub fd_check: bool,
    /// Re-evaluate at `dt / 2` on the same Brownian paths.
    pub step_halving: bool,
}

impl ResidualConfig {
    pub fn new(t: f64, x: f64, m: Option<usize>, params: McParams) -> Self {
        let h_t = 10.0 * params.dt;
        Self {
            t,
            x,
            m,
            order: 2,
            h_t,
            h_x: 0.05,
            params,
            batches: 20,
            p_grid: vec![0, 1],
            fd_check: true,
            step_halving: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualNorm {
    pub p: i32,
    pub product: ProductChoice,
    pub residual: f64,
    /// `mc + fd + dt`
    pub budget: f64,
    /// Three standard errors of the residual.
    pub mc: f64,
    /// `||R_h - R_{2h}||`
    pub fd: f64,
    /// `||R_dt - R_{dt/2}||`
    pub dt: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub norms: Vec<ResidualNorm>,
    /// Orders kept in the check; the truncated product is exact below the
    /// order cap only.
    pub max_order: usize,
    /// Stencil error estimate below the Monte-Carlo term at every p.
    pub fd_below_mc: bool,
}

impl ResidualReport {
    pub fn get(&self, p: i32, product: ProductChoice) -> Option<&ResidualNorm> {
        self.norms.iter().find(|n| n.p == p && n.product == product)
    }
}

struct Stencil {
    pointwise: Vec<ChaosVector>,
    wick: Vec<ChaosVector>,
}

fn combine(terms: &[(f64, &ChaosVector)]) -> Result<ChaosVector> {
    let mut acc = terms[0].1.scale(terms[0].0);
    for &(a, v) in &terms[1..] {
        acc = acc.linear_combination(1.0, v, a)?;
    }
    Ok(acc)
}

fn stencil(
    spec: &SdeSpec,
    layout: &Arc<BasisLayout>,
    cfg: &ResidualConfig,
    params: &McParams,
    h_t: f64,
    h_x: f64,
    max_order: usize,
) -> Result<Stencil> {
    let (t, x) = (cfg.t, cfg.x);
    let points = [(t, x), (t + h_t, x), (t - h_t, x), (t, x + h_x), (t, x - h_x)];
    let mut means = Vec::with_capacity(points.len());
    for &(tp, xp) in &points {
        let ens = simulate_paths(spec, tp, xp, cfg.m, params)?;
        means.push(batch_means(
            &ens,
            spec,
            layout,
            cfg.m,
            cfg.order,
            SolutionKind::Generalized,
            cfg.batches,
        )?);
    }
    let noise = match cfg.m {
        Some(m) => white_noise(layout, &[t, x], m)?,
        None => ChaosVector::zero(layout),
    };
    let s = spec.diffusion.eval(x);
    let diff2 = 0.5 * s * s / (h_x * h_x);
    let drift = spec.drift.eval(x) / (2.0 * h_x);
    let mut out = Stencil {
        pointwise: Vec::with_capacity(cfg.batches),
        wick: Vec::with_capacity(cfg.batches),
    };
    for b in 0..cfg.batches {
        let [u, up, um, ux, uxm] = [0, 1, 2, 3, 4].map(|i| &means[i][b]);
        let base = combine(&[
            (1.0 / (2.0 * h_t), up),
            (-1.0 / (2.0 * h_t), um),
            (-(diff2 + drift), ux),
            (2.0 * diff2, u),
            (-(diff2 - drift), uxm),
        ])?;
        let pw = base.sub(&products::mul(u, &noise)?)?;
        let wk = base.sub(&products::wick(u, &noise)?)?;
        out.pointwise.push(pw.project_order(max_order).with_tail_mass(0.0));
        out.wick.push(wk.project_order(max_order).with_tail_mass(0.0));
    }
    Ok(out)
}

/// Mean and standard error of batch vectors, coefficient-wise.
fn mean_and_se(batches: &[ChaosVector], layout: &Arc<BasisLayout>) -> Result<(ChaosVector, ChaosVector)> {
    let n = batches.len() as f64;
    let mut keys = std::collections::BTreeSet::new();
    for b in batches {
        keys.extend(b.iter().map(|(a, _)| a.clone()));
    }
    let mut mean = Vec::new();
    let mut se = Vec::new();
    for k in keys {
        let vals: Vec<f64> = batches.iter().map(|b| b.get(&k)).collect();
        let mu = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
        mean.push((k.clone(), mu));
        se.push((k, (var / n).sqrt()));
    }
    Ok((ChaosVector::from_coeffs(layout, mean)?, ChaosVector::from_coeffs(layout, se)?))
}

/// `||u_t - L u - u W_m||_p` at `(t, x)` with its error budget.
///
/// Only orders below `order` are compared: the order-`order` part of the
/// product needs coefficients beyond the truncation.
pub fn residual(spec: &SdeSpec, layout: &Arc<BasisLayout>, cfg: &ResidualConfig) -> Result<ResidualReport> {
    if cfg.batches < 2 {
        return Err(Error::InvalidArgument("need at least two batches".into()));
    }
    if cfg.t - 2.0 * cfg.h_t <= 0.0 && cfg.fd_check || cfg.t - cfg.h_t <= 0.0 {
        return Err(Error::InvalidArgument("stencil reaches t <= 0".into()));
    }
    let steps = cfg.h_t / cfg.params.dt;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument("h_t must be a multiple of dt".into()));
    }
    let max_order = if cfg.m.is_some() { cfg.order.saturating_sub(1) } else { 0 };
    let base = stencil(spec, layout, cfg, &cfg.params, cfg.h_t, cfg.h_x, max_order)?;
    let (r_pw, se_pw) = mean_and_se(&base.pointwise, layout)?;
    let (r_wk, se_wk) = mean_and_se(&base.wick, layout)?;

    let fd = if cfg.fd_check {
        let wide = stencil(spec, layout, cfg, &cfg.params, 2.0 * cfg.h_t, 2.0 * cfg.h_x, max_order)?;
        Some((mean_and_se(&wide.pointwise, layout)?.0, mean_and_se(&wide.wick, layout)?.0))
    } else {
        None
    };
    let halved = if cfg.step_halving {
        // The coarse run merges two normals per step so both runs share paths.
        let coarse = McParams {
            normals_per_step: cfg.params.normals_per_step * 2,
            ..cfg.params.clone()
        };
        let fine = McParams {
            dt: cfg.params.dt / 2.0,
            ..cfg.params.clone()
        };
        let c = stencil(spec, layout, cfg, &coarse, cfg.h_t, cfg.h_x, max_order)?;
        let f = stencil(spec, layout, cfg, &fine, cfg.h_t, cfg.h_x, max_order)?;
        Some((
            mean_and_se(&c.pointwise, layout)?.0,
            mean_and_se(&f.pointwise, layout)?.0,
            mean_and_se(&c.wick, layout)?.0,
            mean_and_se(&f.wick, layout)?.0,
        ))
    } else {
        None
    };

    let mut norms = Vec::new();
    let mut fd_below_mc = true;
    for &p in &cfg.p_grid {
        for product in [ProductChoice::Pointwise, ProductChoice::Wick] {
            let (r, se) = match product {
                ProductChoice::Pointwise => (&r_pw, &se_pw),
                ProductChoice::Wick => (&r_wk, &se_wk),
            };
            let mc = 3.0 * se.norm_value(p);
            let fd_term = match &fd {
                Some((pw, wk)) => {
                    let wide = if product == ProductChoice::Pointwise { pw } else { wk };
                    r.sub(wide)?.norm_value(p)
                }
                None => 0.0,
            };
            let dt_term = match &halved {
                Some((cp, fp, cw, fw)) => {
                    let (c, f) = if product == ProductChoice::Pointwise { (cp, fp) } else { (cw, fw) };
                    c.sub(f)?.norm_value(p)
                }
                None => 0.0,
            };
            if product == ProductChoice::Pointwise && fd_term > mc {
                fd_below_mc = false;
            }
            let residual = r.norm_value(p);
            let budget = mc + fd_term + dt_term;
            norms.push(ResidualNorm {
                p,
                product,
                residual,
                budget,
                mc,
                fd: fd_term,
                dt: dt_term,
                within: residual <= budget,
            });
        }
    }
    Ok(ResidualReport {
        norms,
        max_order,
        fd_below_mc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pathwise_residual_is_stencil_error() {
        let spec = SdeSpec::preset("pathwise").unwrap();
        let layout = BasisLayout::new(2, 6, 3).unwrap();
        let dt = 1e-3;
        let mut cfg = ResidualConfig::new(0.25, 0.3, Some(5), McParams::new(100, dt, 0));
        cfg.order = 3;
        cfg.h_t = dt;
        cfg.step_halving = false;
        let r = residual(&spec, &layout, &cfg).unwrap();
        let pw = r.get(0, ProductChoice::Pointwise).unwrap();
        assert!(pw.residual <= 2.0 * dt, "{pw:?}");
        assert_eq!(pw.mc, 0.0);
        let wk = r.get(0, ProductChoice::Wick).unwrap();
        assert!(wk.residual > 10.0 * pw.residual, "{wk:?}");
    }

    #[test]
    fn noise_free_heat_residual_within_budget() {
        let spec = SdeSpec::preset("heat-gaussian").unwrap();
        let layout = BasisLayout::new(2, 1, 1).unwrap();
        let mut cfg = ResidualConfig::new(0.25, 0.5, None, McParams::new(4_000, 2e-3, 1));
        cfg.h_t = 0.02;
        cfg.h_x = 0.2;
        let r = residual(&spec, &layout, &cfg).unwrap();
        let pw = r.get(0, ProductChoice::Pointwise).unwrap();
        assert!(pw.within, "{pw:?}");
        assert_eq!(r.max_order, 0);
    }

    #[test]
    fn rejects_bad_stencils() {
        let spec = SdeSpec::preset("heat-gaussian").unwrap();
        let layout = BasisLayout::new(2, 1, 1).unwrap();
        let mut cfg = ResidualConfig::new(0.25, 0.0, None, McParams::new(100, 1e-2, 1));
        cfg.h_t = 0.015;
        assert!(residual(&spec, &layout, &cfg).is_err());
        cfg.h_t = 0.2;
        assert!(residual(&spec, &layout, &cfg).is_err());
    }
}
