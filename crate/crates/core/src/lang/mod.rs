//! Expression language over the chaos algebra.
//!
//! ```text
//! program := ('let' ident '=' expr ';')* expr
//! expr    := term (('+' | '-') term)*
//! term    := factor ('*' factor)*
//! factor  := '-' factor | primary ('^' uint)?
//! primary := number | ident | 'H[' modepow (',' modepow)* ']'
//!          | fn '(' args ')' | '(' expr ')'
//! modepow := uint (':' uint)?
//! ```
//!
//! `*` is always the pointwise product; the Wick product is `wick(a, b)`.
//! `#` starts a comment.

mod ast;
mod eval;
mod parse;
mod print;

pub use ast::{BinOp, Expr, ExprKind, Func, Let, Program, Span};
pub use eval::{eval, eval_program, Env, Value};
pub use parse::{parse, parse_program, ParseError, MAX_SOURCE};

use rand::Rng;

/// Random well-formed expression of bounded depth, for round-trip testing.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    let kind = if leaf {
        match rng.random_range(0..3) {
            0 => {
                let v = if rng.random_bool(0.5) {
                    rng.random_range(0..100) as f64
                } else {
                    rng.random::<f64>() * 10f64.powi(rng.random_range(-8..8))
                };
                ExprKind::Number(v)
            }
            1 => ExprKind::Ident(["f", "g", "phi", "x_1", "F2"][rng.random_range(0..5)].to_string()),
            _ => {
                let n = rng.random_range(1..4);
                ExprKind::Basis(
                    (0..n)
                        .map(|_| (rng.random_range(0..10), rng.random_range(1..4)))
                        .collect(),
                )
            }
        }
    } else {
        let sub = |rng: &mut R| Box::new(random_expr(rng, depth - 1));
        match rng.random_range(0..4) {
            0 => {
                let f = Func::ALL[rng.random_range(0..Func::ALL.len())];
                let (lo, hi) = f.arity();
                let n = rng.random_range(lo..=hi.min(lo + 2));
                ExprKind::Call(f, (0..n).map(|_| random_expr(rng, depth - 1)).collect())
            }
            1 => ExprKind::Neg(sub(rng)),
            2 => {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][rng.random_range(0..3)];
                ExprKind::Binary(op, sub(rng), sub(rng))
            }
            _ => ExprKind::Pow(sub(rng), rng.random_range(0..5)),
        }
    };
    Expr::new(kind, Span::default())
}

/// Parses and evaluates a program.
pub fn run(src: &str, env: &mut Env) -> crate::Result<Value> {
    let prog = parse_program(src)?;
    eval_program(&prog, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{BasisLayout, ChaosVector, MultiIndex};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env() -> Env {
        let layout = BasisLayout::new(1, 8, 6).unwrap();
        let mut env = Env::new(layout.clone());
        env.bind("f", Value::Chaos(ChaosVector::from_first_order(&layout, &[0.3, -0.2, 0.1]).unwrap()));
        env.bind("phi", Value::Chaos(ChaosVector::from_first_order(&layout, &[0.5, 0.4]).unwrap()));
        env.bind(
            "F",
            Value::Chaos(
                ChaosVector::from_coeffs(&layout, [(MultiIndex::zero(), 0.5), (MultiIndex::single(1, 2), 1.5)]).unwrap(),
            ),
        );
        env.bind("G", Value::Chaos(ChaosVector::from_first_order(&layout, &[1.0, 0.0, 2.0]).unwrap()));
        env
    }

    fn value(src: &str) -> Value {
        run(src, &mut env()).unwrap()
    }

    fn real(src: &str) -> f64 {
        match value(src) {
            Value::Real(r) => r,
            other => panic!("expected real, got {other:?}"),
        }
    }

    #[test]
    fn structure() {
        let e = parse("H[0]").unwrap();
        assert_eq!(e.kind, ExprKind::Basis(vec![(0, 1)]));
        let e = parse("wick(H[0], H[0]) + 1").unwrap();
        let ExprKind::Binary(BinOp::Add, lhs, _) = e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Call(Func::Wick, _)));
        let e = parse("-x^2").unwrap().without_spans();
        assert_eq!(e, parse("-(x^2)").unwrap().without_spans());
        let e = parse("a - b - c").unwrap().without_spans();
        assert_eq!(e, parse("(a - b) - c").unwrap().without_spans());
    }

    #[test]
    fn spans_cover_source() {
        let src = "1 + wick(H[0:2], f)";
        let e = parse(src).unwrap();
        assert_eq!((e.span.start, e.span.end), (0, src.len()));
        let ExprKind::Binary(_, _, rhs) = e.kind else { panic!() };
        assert_eq!(&src[rhs.span.start..rhs.span.end], "wick(H[0:2], f)");
    }

    #[test]
    fn errors_carry_position_and_expectations() {
        let err = parse("1 +\n  * 2").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(err.expected.iter().any(|s| s.contains("number")));
        let err = parse("H[0:]").unwrap_err();
        assert!(err.expected[0].contains("power"));
        assert!(parse("norm(H[0])").is_err());
        assert!(parse("foo(1)").is_err());
        assert!(parse("2 ^ 1.5").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse("let a = 1; a").is_err());
        assert!(parse("1 $ 2").is_err());
    }

    #[test]
    fn evaluation_examples() {
        let l = env().layout;
        let expected = ChaosVector::from_coeffs(&l, [(MultiIndex::single(0, 2), 1.0), (MultiIndex::zero(), 1.0)]).unwrap();
        assert_eq!(value("H[0] * H[0]"), Value::Chaos(expected.clone()));
        assert_eq!(value("H[0:2] + 1"), Value::Chaos(expected));
        assert_eq!(real("E(wexp(f))"), 1.0);
        assert_eq!(real("norm(H[0:1], 0)").powi(2), 1.0);
        assert!(real("S(wick(F, G), phi) - S(F, phi) * S(G, phi)").abs() < 1e-10);
        assert_eq!(real("let a = 2; let b = a ^ 3; b - 1"), 7.0);
        assert_eq!(real("E(proj(F, 1))"), 0.5);
        assert_eq!(real("E(W(0.5))"), 0.0);
        assert!(real("E(ddelta(0, 1))") > 0.39);
        assert_eq!(real("E(B(0))"), 0.0);
        assert!(matches!(run("nope + 1", &mut env()), Err(crate::Error::Eval(_))));
        assert!(run("wexp(H[0:2])", &mut env()).is_err());
        assert!(run("H[9]", &mut env()).is_err());
    }

    #[test]
    fn eval_is_deterministic() {
        let src = "let w = W(0.3, 5); norm(w * w - wick(w, w), 1) + S(ddelta(0.5, 1), phi)";
        assert_eq!(value(src), value(src));
    }

    #[test]
    fn generated_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2_000 {
            let e = random_expr(&mut rng, 4);
            let printed = e.to_string();
            let back = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
            assert_eq!(back.without_spans(), e, "{printed}");
        }
    }

    proptest! {
        #[test]
        fn program_round_trip(seed in any::<u64>(), lets in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prog = Program {
                lets: (0..lets).map(|i| Let {
                    name: format!("v{i}"),
                    value: random_expr(&mut rng, 3),
                    span: Span::default(),
                }).collect(),
                body: random_expr(&mut rng, 3),
            };
            let printed = prog.to_string();
            let back = parse_program(&printed).unwrap();
            prop_assert_eq!(back.without_spans(), prog);
        }
    }
}
