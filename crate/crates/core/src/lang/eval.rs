//! Constant folding and compiled expression evaluation.
//!
//! Arithmetic is exact over [`Rational`] with overflow checks; a compiled
//! expression resolves identifiers once into state slots or folded
//! constants so evaluation per explored state is a plain tree walk.

use num_traits::{CheckedAdd, CheckedMul, CheckedSub};
use thiserror::Error;

use super::ast::{BinOp, Expr, UnOp, Value};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("arithmetic overflow")]
    Overflow,
}

/// Static type of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Real,
}

impl Ty {
    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Real)
    }
}

fn unop(op: UnOp, v: Value) -> Result<Value, EvalError> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Num(n)) => Ok(Value::Num(-n)),
        (UnOp::Not, _) => Err(EvalError::Type("`!` applied to a number".into())),
        (UnOp::Neg, _) => Err(EvalError::Type("`-` applied to a boolean".into())),
    }
}

fn binop(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match (op, a, b) {
        (Or, Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x || y)),
        (And, Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x && y)),
        (Eq, x, y) if same_kind(x, y) => Ok(Value::Bool(x == y)),
        (Ne, x, y) if same_kind(x, y) => Ok(Value::Bool(x != y)),
        (Lt, Value::Num(x), Value::Num(y)) => Ok(Value::Bool(x < y)),
        (Le, Value::Num(x), Value::Num(y)) => Ok(Value::Bool(x <= y)),
        (Gt, Value::Num(x), Value::Num(y)) => Ok(Value::Bool(x > y)),
        (Ge, Value::Num(x), Value::Num(y)) => Ok(Value::Bool(x >= y)),
        (Add, Value::Num(x), Value::Num(y)) => x.checked_add(&y).map(Value::Num).ok_or(EvalError::Overflow),
        (Sub, Value::Num(x), Value::Num(y)) => x.checked_sub(&y).map(Value::Num).ok_or(EvalError::Overflow),
        (Mul, Value::Num(x), Value::Num(y)) => x.checked_mul(&y).map(Value::Num).ok_or(EvalError::Overflow),
        (op, _, _) => Err(EvalError::Type(format!("operands of `{}` have the wrong type", op.symbol()))),
    }
}

fn same_kind(a: Value, b: Value) -> bool {
    matches!((a, b), (Value::Bool(_), Value::Bool(_)) | (Value::Num(_), Value::Num(_)))
}

/// Evaluate an expression whose identifiers are all resolvable by `lookup`.
pub fn fold(expr: &Expr, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
    match expr {
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Num(n) => Ok(Value::Num(*n)),
        Expr::Ident(name) => lookup(name).ok_or_else(|| EvalError::UnknownIdentifier(name.clone())),
        Expr::Unary(op, e) => unop(*op, fold(e, lookup)?),
        Expr::Binary(op, a, b) => {
            let a = fold(a, lookup)?;
            // short-circuit keeps folding total for guards like `false & x=1`
            match (op, a) {
                (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                _ => {}
            }
            binop(*op, a, fold(b, lookup)?)
        }
    }
}

/// Infer the type of an expression; `lookup` gives identifier types.
pub fn type_of(expr: &Expr, lookup: &dyn Fn(&str) -> Option<Ty>) -> Result<Ty, EvalError> {
    use BinOp::*;
    match expr {
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::Num(n) => Ok(if n.is_integer() { Ty::Int } else { Ty::Real }),
        Expr::Ident(name) => lookup(name).ok_or_else(|| EvalError::UnknownIdentifier(name.clone())),
        Expr::Unary(UnOp::Not, e) => match type_of(e, lookup)? {
            Ty::Bool => Ok(Ty::Bool),
            _ => Err(EvalError::Type("`!` applied to a number".into())),
        },
        Expr::Unary(UnOp::Neg, e) => match type_of(e, lookup)? {
            Ty::Bool => Err(EvalError::Type("`-` applied to a boolean".into())),
            t => Ok(t),
        },
        Expr::Binary(op, a, b) => {
            let (ta, tb) = (type_of(a, lookup)?, type_of(b, lookup)?);
            match op {
                Or | And if ta == Ty::Bool && tb == Ty::Bool => Ok(Ty::Bool),
                Eq | Ne if (ta == Ty::Bool) == (tb == Ty::Bool) => Ok(Ty::Bool),
                Lt | Le | Gt | Ge if ta.numeric() && tb.numeric() => Ok(Ty::Bool),
                Add | Sub | Mul if ta.numeric() && tb.numeric() => {
                    Ok(if ta == Ty::Int && tb == Ty::Int { Ty::Int } else { Ty::Real })
                }
                _ => Err(EvalError::Type(format!(
                    "operands of `{}` have the wrong type",
                    op.symbol()
                ))),
            }
        }
    }
}

/// Expression with identifiers resolved to state slots or folded constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Compiled {
    Const(Value),
    Var(usize),
    Unary(UnOp, Box<Compiled>),
    Binary(BinOp, Box<Compiled>, Box<Compiled>),
}

/// How an identifier resolves during compilation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binding {
    Slot(usize),
    Const(Value),
}

impl Compiled {
    /// Resolve identifiers and fold every variable-free subtree.
    pub fn compile(expr: &Expr, resolve: &dyn Fn(&str) -> Option<Binding>) -> Result<Self, EvalError> {
        let c = match expr {
            Expr::Bool(b) => Compiled::Const(Value::Bool(*b)),
            Expr::Num(n) => Compiled::Const(Value::Num(*n)),
            Expr::Ident(name) => match resolve(name) {
                Some(Binding::Slot(i)) => Compiled::Var(i),
                Some(Binding::Const(v)) => Compiled::Const(v),
                None => return Err(EvalError::UnknownIdentifier(name.clone())),
            },
            Expr::Unary(op, e) => match Self::compile(e, resolve)? {
                Compiled::Const(v) => Compiled::Const(unop(*op, v)?),
                inner => Compiled::Unary(*op, Box::new(inner)),
            },
            Expr::Binary(op, a, b) => {
                match (Self::compile(a, resolve)?, Self::compile(b, resolve)?) {
                    (Compiled::Const(x), Compiled::Const(y)) => Compiled::Const(binop(*op, x, y)?),
                    (x, y) => Compiled::Binary(*op, Box::new(x), Box::new(y)),
                }
            }
        };
        Ok(c)
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Compiled::Const(_))
    }

    pub fn eval(&self, state: &[i64]) -> Result<Value, EvalError> {
        match self {
            Compiled::Const(v) => Ok(*v),
            Compiled::Var(i) => Ok(Value::Num(Rational::from_integer(state[*i]))),
            Compiled::Unary(op, e) => unop(*op, e.eval(state)?),
            Compiled::Binary(op, a, b) => {
                let a = a.eval(state)?;
                match (op, a) {
                    (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                    (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                binop(*op, a, b.eval(state)?)
            }
        }
    }

    pub fn eval_bool(&self, state: &[i64]) -> Result<bool, EvalError> {
        // fast path for the dominant `var = k` guard shape
        if let Compiled::Binary(BinOp::Eq, a, b) = self {
            if let (Compiled::Var(i), Compiled::Const(Value::Num(k))) = (a.as_ref(), b.as_ref()) {
                return Ok(k.is_integer() && *k.numer() == state[*i]);
            }
        }
        self.eval(state)?
            .as_bool()
            .ok_or_else(|| EvalError::Type("expected a boolean".into()))
    }

    pub fn eval_num(&self, state: &[i64]) -> Result<Rational, EvalError> {
        self.eval(state)?
            .as_num()
            .ok_or_else(|| EvalError::Type("expected a number".into()))
    }

    /// Integer value, for variable updates.
    pub fn eval_int(&self, state: &[i64]) -> Result<i64, EvalError> {
        let n = self.eval_num(state)?;
        if n.is_integer() {
            Ok(*n.numer())
        } else {
            Err(EvalError::Type(format!("update value {n} is not an integer")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn folding_is_exact() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::Num(r(1, 10)),
            Expr::binary(BinOp::Add, Expr::Num(r(3, 10)), Expr::ident("k")),
        );
        let look = |n: &str| (n == "k").then_some(Value::Num(r(7, 10)));
        assert_eq!(fold(&e, &look), Ok(Value::Num(r(1, 10))));
        // folding twice gives identical values
        assert_eq!(fold(&e, &look), fold(&e, &look));
    }

    #[test]
    fn overflow_is_reported() {
        let big = Expr::int(i64::MAX);
        let e = Expr::binary(BinOp::Add, big.clone(), big);
        assert_eq!(fold(&e, &|_| None), Err(EvalError::Overflow));
    }

    #[test]
    fn compile_folds_constants_and_evaluates_slots() {
        let e = Expr::binary(
            BinOp::And,
            Expr::ident("flag"),
            Expr::binary(BinOp::Ge, Expr::ident("x"), Expr::int(2)),
        );
        let c = Compiled::compile(&e, &|n| match n {
            "flag" => Some(Binding::Const(Value::Bool(true))),
            "x" => Some(Binding::Slot(1)),
            _ => None,
        })
        .unwrap();
        assert!(c.eval_bool(&[0, 2]).unwrap());
        assert!(!c.eval_bool(&[0, 1]).unwrap());
    }

    #[test]
    fn types_are_inferred() {
        let look = |n: &str| match n {
            "x" => Some(Ty::Int),
            "b" => Some(Ty::Bool),
            _ => None,
        };
        let guard = Expr::binary(BinOp::And, Expr::ident("b"), Expr::var_eq("x", 1));
        assert_eq!(type_of(&guard, &look), Ok(Ty::Bool));
        let bad = Expr::binary(BinOp::Add, Expr::ident("b"), Expr::int(1));
        assert!(matches!(type_of(&bad, &look), Err(EvalError::Type(_))));
        let rate = Expr::binary(BinOp::Mul, Expr::Num(r(1, 2)), Expr::ident("x"));
        assert_eq!(type_of(&rate, &look), Ok(Ty::Real));
    }
}
