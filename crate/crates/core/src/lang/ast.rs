//! Syntax trees for the modelling language.
//!
//! Trees carry no source positions so that structural equality is exactly
//! "same program"; positions for diagnostics live in [`super::SourceMap`].

use std::fmt;

use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_relational(self) -> bool {
        self.precedence() == 4
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Bool(bool),
    Num(Rational),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    pub fn int(v: i64) -> Self {
        Expr::Num(Rational::from_integer(v))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn not(e: Expr) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    /// `name = value`, the most common guard shape.
    pub fn var_eq(name: &str, value: i64) -> Self {
        Expr::binary(BinOp::Eq, Expr::ident(name), Expr::int(value))
    }

    /// Every identifier referenced, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Ident(n) => {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
            Expr::Unary(_, e) => e.collect_idents(out),
            Expr::Binary(_, a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Expr::Bool(_) | Expr::Num(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

impl ConstType {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstType::Int => "int",
            ConstType::Double => "double",
            ConstType::Bool => "bool",
        }
    }
}

/// Value of a folded constant expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Num(Rational),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Num(_) => None,
        }
    }

    pub fn as_num(self) -> Option<Rational> {
        match self {
            Value::Num(n) => Some(n),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => f.write_str(&super::printer::format_rational(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constant {
    pub name: String,
    pub ty: ConstType,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub var: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub action: Option<String>,
    pub guard: Expr,
    /// `None` means the implicit rate 1 of a synchronising partner.
    pub rate: Option<Expr>,
    pub updates: Vec<Update>,
    /// Reaction id from a `//@reaction` annotation.
    pub reaction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDef {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRewardItem {
    pub guard: Expr,
    pub value: Expr,
}

/// Transition reward. `action: None` matches unlabelled transitions only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransRewardItem {
    pub action: Option<String>,
    pub guard: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardBlock {
    pub name: String,
    pub state_items: Vec<StateRewardItem>,
    pub trans_items: Vec<TransRewardItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelAst {
    pub constants: Vec<Constant>,
    pub modules: Vec<ModuleDef>,
    pub rewards: Vec<RewardBlock>,
}

impl ModelAst {
    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn reward_block(&self, name: &str) -> Option<&RewardBlock> {
        self.rewards.iter().find(|r| r.name == name)
    }

    /// Variables in declaration order across all modules.
    pub fn variables(&self) -> impl Iterator<Item = (&ModuleDef, &VarDecl)> {
        self.modules
            .iter()
            .flat_map(|m| m.variables.iter().map(move |v| (m, v)))
    }

    /// Action labels in order of first appearance.
    pub fn action_labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = Vec::new();
        for cmd in self.modules.iter().flat_map(|m| &m.commands) {
            if let Some(a) = cmd.action.as_deref() {
                if !labels.contains(&a) {
                    labels.push(a);
                }
            }
        }
        labels
    }
}
