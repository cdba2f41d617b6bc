use crate::lang::ast::{Constant, Expr};
use crate::lang::eval::{Binding, Compiled};
use crate::numerics::SparseMatrix;
use crate::Scalar;

use super::ComposeError;

/// A program variable as laid out in the state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub module: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

/// Named reward structure evaluated on the explicit chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardStructure<T> {
    pub name: String,
    /// Reward rate earned while residing in each state.
    pub state: Vec<T>,
    /// Reward per firing, aligned with the entries of the rate matrix.
    pub transition: Vec<T>,
    /// Reward rate contributed by dropped self-loop transitions.
    pub self_loop: Vec<T>,
}

impl<T: Scalar> RewardStructure<T> {
    pub fn has_transition_rewards(&self) -> bool {
        self.transition.iter().chain(&self.self_loop).any(|v| *v != T::zero())
    }
}

/// Set of state indices, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        Self { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        Self { mask: vec![true; n] }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for i in idx {
            s.mask[i] = true;
        }
        s
    }

    /// Size of the universe.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.mask[i] = true;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }
}

/// Explicit continuous-time Markov chain with sparse rate matrix.
///
/// Rows are sorted by target index, contain no self-loops and only
/// strictly positive rates.
#[derive(Debug, Clone)]
pub struct Ctmc<T> {
    pub(crate) vars: Vec<VarInfo>,
    pub(crate) constants: Vec<Constant>,
    pub(crate) states: Vec<i64>,
    pub(crate) initial: usize,
    pub(crate) rates: SparseMatrix<T>,
    pub(crate) exit: Vec<T>,
    pub(crate) rewards: Vec<RewardStructure<T>>,
}

impl<T: Scalar> Ctmc<T> {
    /// Flat chain over a single variable `s` in `0..n`, for fixtures and
    /// tests. Self-loops are dropped and parallel entries summed.
    pub fn from_rates(n: usize, initial: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(rows.len(), n, "need one row per state");
        assert!(initial < n.max(1));
        let mut rates = SparseMatrix::with_capacity(n, rows.iter().map(Vec::len).sum());
        let mut exit = Vec::with_capacity(n);
        for (s, mut row) in rows.into_iter().enumerate() {
            row.retain(|&(t, r)| t != s && r > T::zero());
            row.sort_by_key(|&(t, _)| t);
            let mut merged: Vec<(usize, T)> = Vec::with_capacity(row.len());
            for (t, r) in row {
                assert!(t < n, "target {t} out of range");
                match merged.last_mut() {
                    Some((lt, lr)) if *lt == t => *lr += r,
                    _ => merged.push((t, r)),
                }
            }
            exit.push(merged.iter().map(|&(_, r)| r).sum());
            rates.push_row(merged.into_iter());
        }
        Self {
            vars: vec![VarInfo {
                name: "s".into(),
                module: "chain".into(),
                lo: 0,
                hi: n.saturating_sub(1) as i64,
                init: initial as i64,
            }],
            constants: Vec::new(),
            states: (0..n as i64).collect(),
            initial,
            rates,
            exit,
            rewards: Vec::new(),
        }
    }

    /// Attach a state-reward structure (used with [`from_rates`](Self::from_rates)).
    pub fn with_state_reward(mut self, name: &str, state: Vec<T>) -> Self {
        assert_eq!(state.len(), self.num_states());
        self.rewards.retain(|r| r.name != name);
        self.rewards.push(RewardStructure {
            name: name.into(),
            state,
            transition: vec![T::zero(); self.rates.nnz()],
            self_loop: vec![T::zero(); self.num_states()],
        });
        self
    }

    pub fn num_states(&self) -> usize {
        self.exit.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.rates.nnz()
    }

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    /// Point mass on the initial state.
    pub fn initial_distribution(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.num_states()];
        d[self.initial] = T::one();
        d
    }

    pub fn variables(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn constants(&self) -> &[Constant] {
        &self.constants
    }

    /// Variable values of state `s`, in declaration order.
    pub fn state(&self, s: usize) -> &[i64] {
        let n = self.vars.len();
        &self.states[s * n..(s + 1) * n]
    }

    pub fn rate_matrix(&self) -> &SparseMatrix<T> {
        &self.rates
    }

    pub fn exit_rates(&self) -> &[T] {
        &self.exit
    }

    pub fn exit_rate(&self, s: usize) -> T {
        self.exit[s]
    }

    pub fn max_exit_rate(&self) -> T {
        self.exit.iter().copied().fold(T::zero(), T::max)
    }

    pub fn rate(&self, s: usize, t: usize) -> T {
        self.rates.get(s, t)
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.rates.row_iter(s)
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.exit[s] == T::zero()
    }

    /// States without outgoing transitions.
    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&s| self.is_absorbing(s)).collect()
    }

    /// Probability that the first jump out of `s` goes to `t`.
    pub fn jump_probability(&self, s: usize, t: usize) -> Result<T, ComposeError> {
        let n = self.num_states();
        if s >= n || t >= n {
            return Err(ComposeError::StateIndex(s.max(t)));
        }
        if self.is_absorbing(s) {
            return Err(ComposeError::Absorbing(s));
        }
        Ok(self.rate(s, t) / self.exit[s])
    }

    pub fn rewards(&self) -> &[RewardStructure<T>] {
        &self.rewards
    }

    pub fn reward(&self, name: &str) -> Result<&RewardStructure<T>, ComposeError> {
        self.rewards
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| ComposeError::UnknownReward(name.into()))
    }

    /// Total reward rate per state: state reward plus the expected
    /// transition reward per unit time, `Σ R(s,s')·r(s,s')`.
    pub fn reward_rate(&self, rs: &RewardStructure<T>) -> Vec<T> {
        (0..self.num_states())
            .map(|s| {
                let range = self.rates.row_range(s);
                let trans: T = range
                    .map(|k| self.rates.values()[k] * rs.transition[k])
                    .sum();
                rs.state[s] + trans + rs.self_loop[s]
            })
            .collect()
    }

    /// Index of the state with the given variable values.
    pub fn find_state(&self, values: &[i64]) -> Option<usize> {
        (0..self.num_states()).find(|&s| self.state(s) == values)
    }

    /// Compile `expr` against this chain's variables and constants.
    pub fn compile(&self, expr: &Expr) -> Result<Compiled, ComposeError> {
        let resolve = |name: &str| {
            if let Some(i) = self.vars.iter().position(|v| v.name == name) {
                Some(Binding::Slot(i))
            } else {
                self.constants
                    .iter()
                    .find(|c| c.name == name)
                    .map(|c| Binding::Const(c.value))
            }
        };
        Ok(Compiled::compile(expr, &resolve)?)
    }

    /// States whose variable values satisfy the boolean expression.
    pub fn sat_set(&self, expr: &Expr) -> Result<StateSet, ComposeError> {
        let c = self.compile(expr)?;
        let mut mask = Vec::with_capacity(self.num_states());
        for s in 0..self.num_states() {
            mask.push(c.eval_bool(self.state(s))?);
        }
        Ok(StateSet::from_mask(mask))
    }
}
