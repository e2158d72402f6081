use std::fmt;

/// Byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    /// Pointwise product; the Wick product is only reachable as `wick(.,.)`.
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Add => "+",
            Self::Sub => "-",
            Self::Mul => "*",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            Self::Add | Self::Sub => 1,
            Self::Mul => 2,
        }
    }
}

/// Built-in functions and their arities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Wick,
    Wexp,
    W,
    B,
    Ddelta,
    Norm,
    S,
    E,
    Proj,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Wick,
        Func::Wexp,
        Func::W,
        Func::B,
        Func::Ddelta,
        Func::Norm,
        Func::S,
        Func::E,
        Func::Proj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Wick => "wick",
            Self::Wexp => "wexp",
            Self::W => "W",
            Self::B => "B",
            Self::Ddelta => "ddelta",
            Self::Norm => "norm",
            Self::S => "S",
            Self::E => "E",
            Self::Proj => "proj",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Accepted argument counts (inclusive).
    pub fn arity(self) -> (usize, usize) {
        match self {
            Self::Wick | Self::Norm | Self::S | Self::Proj | Self::Ddelta => (2, 2),
            Self::Wexp | Self::E => (1, 1),
            Self::W => (1, 8),
            Self::B => (1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Ident(String),
    /// `H[j:k, ...]` as `(mode, power)` pairs in source order.
    Basis(Vec<(u32, u32)>),
    Call(Func, Vec<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Same tree with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Call(f, args) => ExprKind::Call(*f, args.iter().map(Expr::without_spans).collect()),
            ExprKind::Neg(e) => ExprKind::Neg(Box::new(e.without_spans())),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, Box::new(a.without_spans()), Box::new(b.without_spans())),
            ExprKind::Pow(e, k) => ExprKind::Pow(Box::new(e.without_spans()), *k),
            other => other.clone(),
        };
        Expr::new(kind, Span::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Let {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

/// `let` bindings followed by a result expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub lets: Vec<Let>,
    pub body: Expr,
}

impl Program {
    pub fn without_spans(&self) -> Program {
        Program {
            lets: self
                .lets
                .iter()
                .map(|l| Let {
                    name: l.name.clone(),
                    value: l.value.without_spans(),
                    span: Span::default(),
                })
                .collect(),
            body: self.body.without_spans(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::print::write_expr(f, self)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lets {
            write!(f, "let {} = ", l.name)?;
            super::print::write_expr(f, &l.value)?;
            f.write_str(";\n")?;
        }
        super::print::write_expr(f, &self.body)
    }
}
