//! CSL formulas extended with the reward operator.

use super::ast::Expr;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }
}

/// `=?` or a comparison `~ p` attached to P, S or R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Query,
    Compare(Comparison, Rational),
}

impl Bound {
    pub fn is_query(&self) -> bool {
        matches!(self, Bound::Query)
    }
}

/// Time interval `[lo, hi]`, or `[lo, ∞)` when `hi` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Option<Rational>,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: Rational::ZERO,
        hi: None,
    };

    pub fn upto(t: Rational) -> Self {
        Interval {
            lo: Rational::ZERO,
            hi: Some(t),
        }
    }

    pub fn point(t: Rational) -> Self {
        Interval { lo: t, hi: Some(t) }
    }

    pub fn between(lo: Rational, hi: Rational) -> Self {
        Interval { lo, hi: Some(hi) }
    }

    pub fn from(lo: Rational) -> Self {
        Interval { lo, hi: None }
    }
}

/// `left U^I right`; `F^I φ` is the special case `left = true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathFormula {
    pub left: Box<StateFormula>,
    pub right: Box<StateFormula>,
    pub interval: Interval,
}

impl PathFormula {
    pub fn eventually(interval: Interval, target: StateFormula) -> Self {
        PathFormula {
            left: Box::new(StateFormula::True),
            right: Box::new(target),
            interval,
        }
    }

    pub fn is_eventually(&self) -> bool {
        *self.left == StateFormula::True
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RewardKind {
    /// `I=t`: expected state reward at time t.
    Instantaneous(Rational),
    /// `C<=t`: expected reward accumulated up to t.
    Cumulative(Rational),
    /// `F φ`: expected reward accumulated before reaching φ.
    Reachability(Box<StateFormula>),
    /// `S`: long-run average reward.
    SteadyState,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateFormula {
    True,
    False,
    /// A boolean state expression over model variables and constants.
    Atom(Expr),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Prob {
        bound: Bound,
        path: PathFormula,
    },
    Steady {
        bound: Bound,
        inner: Box<StateFormula>,
    },
    Reward {
        structure: String,
        bound: Bound,
        kind: RewardKind,
    },
}

impl StateFormula {
    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: StateFormula) -> Self {
        StateFormula::Not(Box::new(a))
    }

    /// Bound of the top-level operator, if any.
    pub fn bound(&self) -> Option<&Bound> {
        match self {
            StateFormula::Prob { bound, .. }
            | StateFormula::Steady { bound, .. }
            | StateFormula::Reward { bound, .. } => Some(bound),
            _ => None,
        }
    }

    pub fn is_query(&self) -> bool {
        self.bound().is_some_and(Bound::is_query)
    }

    /// Visit this formula and every nested state formula, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a StateFormula)) {
        f(self);
        match self {
            StateFormula::True | StateFormula::False | StateFormula::Atom(_) => {}
            StateFormula::Not(a) => a.walk(f),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            StateFormula::Prob { path, .. } => {
                path.left.walk(f);
                path.right.walk(f);
            }
            StateFormula::Steady { inner, .. } => inner.walk(f),
            StateFormula::Reward { kind, .. } => {
                if let RewardKind::Reachability(target) = kind {
                    target.walk(f);
                }
            }
        }
    }
}
