use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::{BinOp, Expr, ExprKind, Func, Program};
use crate::chaos::{BasisLayout, ChaosVector, MultiIndex};
use crate::error::{Error, Result};
use crate::{noise, products};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Chaos(ChaosVector),
}

impl Value {
    /// Discarded mass carried by a chaos value.
    pub fn tail_mass(&self) -> f64 {
        match self {
            Value::Real(_) => 0.0,
            Value::Chaos(c) => c.tail_mass(),
        }
    }
}

/// Caps plus variable bindings.
#[derive(Debug, Clone)]
pub struct Env {
    pub layout: Arc<BasisLayout>,
    pub vars: BTreeMap<String, Value>,
}

impl Env {
    pub fn new(layout: Arc<BasisLayout>) -> Self {
        Self {
            layout,
            vars: BTreeMap::new(),
        }
    }

    pub fn bind(&mut self, name: impl Into<String>, v: Value) {
        self.vars.insert(name.into(), v);
    }
}

/// Evaluates the bindings in order, then the body.
pub fn eval_program(prog: &Program, env: &mut Env) -> Result<Value> {
    for l in &prog.lets {
        let v = eval(&l.value, env)?;
        env.bind(l.name.clone(), v);
    }
    eval(&prog.body, env)
}

pub fn eval(e: &Expr, env: &Env) -> Result<Value> {
    match &e.kind {
        ExprKind::Number(v) => Ok(Value::Real(*v)),
        ExprKind::Ident(name) => env
            .vars
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Eval(format!("unbound identifier `{name}` at byte {}", e.span.start))),
        ExprKind::Basis(pairs) => {
            let alpha = MultiIndex::from_pairs(pairs.iter().copied());
            Ok(Value::Chaos(ChaosVector::basis(&env.layout, alpha)?))
        }
        ExprKind::Neg(inner) => Ok(match eval(inner, env)? {
            Value::Real(v) => Value::Real(-v),
            Value::Chaos(c) => Value::Chaos(c.scale(-1.0)),
        }),
        ExprKind::Binary(op, a, b) => binary(*op, eval(a, env)?, eval(b, env)?, env),
        ExprKind::Pow(base, k) => match eval(base, env)? {
            Value::Real(v) => Ok(Value::Real(v.powi(*k as i32))),
            Value::Chaos(c) => {
                let mut acc = ChaosVector::constant(&env.layout, 1.0);
                for _ in 0..*k {
                    acc = products::mul(&acc, &c)?;
                }
                Ok(Value::Chaos(acc))
            }
        },
        ExprKind::Call(f, args) => {
            let vals = args.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>>>()?;
            call(*f, vals, env)
        }
    }
}

fn binary(op: BinOp, a: Value, b: Value, env: &Env) -> Result<Value> {
    if let (Value::Real(x), Value::Real(y)) = (&a, &b) {
        return Ok(Value::Real(match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
        }));
    }
    if op == BinOp::Mul {
        match (&a, &b) {
            (Value::Real(s), Value::Chaos(c)) | (Value::Chaos(c), Value::Real(s)) => {
                return Ok(Value::Chaos(c.scale(*s)));
            }
            _ => {}
        }
    }
    let (x, y) = (chaos(a, env), chaos(b, env));
    Ok(Value::Chaos(match op {
        BinOp::Add => x.add(&y)?,
        BinOp::Sub => x.sub(&y)?,
        BinOp::Mul => products::mul(&x, &y)?,
    }))
}

fn chaos(v: Value, env: &Env) -> ChaosVector {
    match v {
        Value::Real(r) => ChaosVector::constant(&env.layout, r),
        Value::Chaos(c) => c,
    }
}

fn real(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Real(r) => Ok(*r),
        Value::Chaos(_) => Err(Error::Eval(format!("{what} must be a real number"))),
    }
}

fn count(v: &Value, what: &str) -> Result<usize> {
    let r = real(v, what)?;
    if r < 0.0 || r.fract() != 0.0 || !r.is_finite() {
        return Err(Error::Eval(format!("{what} must be a nonnegative integer, got {r}")));
    }
    Ok(r as usize)
}

/// Mode coefficients of a first-order element.
fn mode_vector(v: Value, env: &Env, what: &str) -> Result<Vec<f64>> {
    let c = chaos(v, env);
    let mut g = Vec::new();
    for (alpha, value) in c.iter() {
        match alpha.pairs() {
            [(m, 1)] => {
                let m = *m as usize;
                if g.len() <= m {
                    g.resize(m + 1, 0.0);
                }
                g[m] = value;
            }
            _ => {
                return Err(Error::Eval(format!(
                    "{what} must be a first-order element, found term H[{alpha}]"
                )))
            }
        }
    }
    Ok(g)
}

fn call(f: Func, mut args: Vec<Value>, env: &Env) -> Result<Value> {
    let layout = &env.layout;
    match f {
        Func::Wick => {
            let b = chaos(args.pop().unwrap(), env);
            let a = chaos(args.pop().unwrap(), env);
            Ok(Value::Chaos(products::wick(&a, &b)?))
        }
        Func::Wexp => {
            let g = mode_vector(args.pop().unwrap(), env, "wexp argument")?;
            Ok(Value::Chaos(ChaosVector::wick_exp(layout, &g)?))
        }
        Func::W => {
            let d = layout.dim();
            let m = match args.len() {
                n if n == d => layout.mode_cap().checked_sub(1).ok_or_else(|| Error::Eval("mode cap is 0".into()))?,
                n if n == d + 1 => count(&args.pop().unwrap(), "noise level")?,
                n => return Err(Error::Eval(format!("W takes {d} coordinates and an optional level, got {n} arguments"))),
            };
            let x = args.iter().map(|a| real(a, "W coordinate")).collect::<Result<Vec<_>>>()?;
            Ok(Value::Chaos(noise::white_noise(layout, &x, m)?))
        }
        Func::B => {
            let modes = if args.len() == 2 {
                count(&args.pop().unwrap(), "mode count")?
            } else {
                layout.mode_cap()
            };
            let t = real(&args[0], "time")?;
            Ok(Value::Chaos(noise::brownian(layout, t, modes)?))
        }
        Func::Ddelta => {
            let t = real(&args[1], "time")?;
            let a = real(&args[0], "level")?;
            Ok(Value::Chaos(noise::donsker_delta(
                layout,
                a,
                t,
                layout.order_cap(),
                layout.mode_cap(),
            )?))
        }
        Func::Norm => {
            let p = real(&args[1], "norm index")?;
            if p.fract() != 0.0 || !p.is_finite() {
                return Err(Error::Eval(format!("norm index must be an integer, got {p}")));
            }
            let v = chaos(args.swap_remove(0), env);
            let n = v.norm(p as i32);
            if n.saturated {
                return Err(Error::Eval(format!("norm overflows f64 (log value {})", n.log_value)));
            }
            Ok(Value::Real(n.value))
        }
        Func::S => {
            let phi = mode_vector(args.pop().unwrap(), env, "S-transform direction")?;
            let v = chaos(args.pop().unwrap(), env);
            Ok(Value::Real(v.s_transform(&phi)))
        }
        Func::E => Ok(Value::Real(match args.pop().unwrap() {
            Value::Real(r) => r,
            Value::Chaos(c) => c.expectation(),
        })),
        Func::Proj => {
            let m = count(&args[1], "projection order")?;
            Ok(Value::Chaos(chaos(args.swap_remove(0), env).project_order(m)))
        }
    }
}
