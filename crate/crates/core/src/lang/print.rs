use std::fmt::{self, Write};

use super::ast::{Expr, ExprKind};

/// Prints with the fewest parentheses that re-parse to the same tree.
pub(crate) fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Number(v) => write!(f, "{v:?}"),
        ExprKind::Ident(name) => f.write_str(name),
        ExprKind::Basis(pairs) => {
            f.write_str("H[")?;
            for (i, (m, p)) in pairs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                if *p == 1 {
                    write!(f, "{m}")?;
                } else {
                    write!(f, "{m}:{p}")?;
                }
            }
            f.write_str("]")
        }
        ExprKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, a)?;
            }
            f.write_str(")")
        }
        ExprKind::Neg(inner) => {
            f.write_str("-")?;
            match inner.kind {
                ExprKind::Binary(..) => paren(f, inner),
                _ => write_expr(f, inner),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            match &a.kind {
                ExprKind::Binary(inner, ..) if inner.precedence() < prec => paren(f, a)?,
                _ => write_expr(f, a)?,
            }
            write!(f, " {} ", op.symbol())?;
            match &b.kind {
                ExprKind::Binary(inner, ..) if inner.precedence() <= prec => paren(f, b),
                // `a - -b` would lex fine, but `a--b` is easy to misread
                ExprKind::Neg(_) => paren(f, b),
                _ => write_expr(f, b),
            }
        }
        ExprKind::Pow(base, k) => {
            match base.kind {
                ExprKind::Binary(..) | ExprKind::Neg(_) | ExprKind::Pow(..) => paren(f, base)?,
                _ => write_expr(f, base)?,
            }
            write!(f, "^{k}")
        }
    }
}

fn paren(f: &mut impl Write, e: &Expr) -> fmt::Result {
    f.write_str("(")?;
    write_expr(f, e)?;
    f.write_str(")")
}
