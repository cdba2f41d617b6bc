//! State-space construction: from a [`ModelAst`] to an explicit [`Ctmc`].
//!
//! Exploration is breadth-first from the all-init state with a FIFO queue,
//! so state `i` is the `i`-th state discovered. Successors are generated in
//! module/command order; a synchronised label fires at the position of its
//! first command in that order.

mod ctmc;
pub mod export;

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use num_traits::ToPrimitive;
use thiserror::Error;

pub use ctmc::{Ctmc, RewardStructure, StateSet, VarInfo};

use crate::lang::ast::{ModelAst, Value};
use crate::lang::eval::{Binding, Compiled, EvalError};
use crate::lang::LangError;
use crate::numerics::SparseMatrix;
use crate::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error(transparent)]
    Invalid(#[from] LangError),
    #[error("state space exceeds the limit of {limit} states")]
    TooManyStates { limit: usize },
    #[error("variable ranges too wide to index the state space: {0}")]
    StateEncoding(String),
    #[error("update sets `{var}` to {value}, outside [{lo}..{hi}], in state ({state})")]
    OutOfRange {
        var: String,
        value: i64,
        lo: i64,
        hi: i64,
        state: String,
    },
    #[error("negative reward {value} in \"{block}\" at state ({state})")]
    NegativeReward { block: String, value: f64, state: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("state {0} is absorbing")]
    Absorbing(usize),
    #[error("state index {0} out of range")]
    StateIndex(usize),
    #[error("unknown reward structure \"{0}\"")]
    UnknownReward(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Abort once more than this many states are discovered.
    pub max_states: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { max_states: 10_000_000 }
    }
}

/// Mixed-radix packing of a state vector into one integer key.
struct Encoder {
    lo: Vec<i64>,
    mult: Vec<u128>,
}

impl Encoder {
    fn new(ast: &ModelAst) -> Result<Self, ComposeError> {
        let mut lo = Vec::new();
        let mut mult = Vec::new();
        let mut acc: u128 = 1;
        for (_, v) in ast.variables() {
            let size = (i128::from(v.hi) - i128::from(v.lo) + 1) as u128;
            lo.push(v.lo);
            mult.push(acc);
            acc = acc
                .checked_mul(size)
                .ok_or_else(|| ComposeError::StateEncoding(format!("product of ranges overflows at `{}`", v.name)))?;
        }
        Ok(Self { lo, mult })
    }

    #[inline]
    fn key(&self, s: &[i64]) -> u128 {
        s.iter()
            .zip(self.lo.iter().zip(&self.mult))
            .map(|(&v, (&lo, &m))| (v - lo) as u128 * m)
            .sum()
    }
}

#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
    }

    fn write_u128(&mut self, v: u128) {
        let x = (v as u64) ^ ((v >> 64) as u64).rotate_left(29);
        let x = (x ^ (x >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
        self.0 = x ^ (x >> 33);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type KeyMap = HashMap<u128, u32, BuildHasherDefault<KeyHasher>>;

struct CmdPlan<T> {
    guard: Compiled,
    rate: T,
    updates: Vec<(usize, Compiled)>,
}

enum Firing {
    Single(usize),
    /// Label index; the participating modules' command lists.
    Sync(usize, Vec<Vec<usize>>),
}

struct RewardPlan {
    name: String,
    state_items: Vec<(Compiled, Compiled)>,
    trans_items: Vec<(Option<usize>, Compiled, Compiled)>,
}

struct Builder<'a, T> {
    vars: &'a [ctmc::VarInfo],
    encoder: Encoder,
    cmds: Vec<CmdPlan<T>>,
    rewards: Vec<RewardPlan>,
    max_states: usize,
    index: KeyMap,
    states: Vec<i64>,
    cur: Vec<i64>,
    next: Vec<i64>,
    /// (target, rate, offset into `entry_rewards`)
    entries: Vec<(u32, T, usize)>,
    entry_rewards: Vec<T>,
    self_loop_acc: Vec<T>,
}

fn describe(vars: &[ctmc::VarInfo], s: &[i64]) -> String {
    vars.iter()
        .zip(s)
        .map(|(v, x)| format!("{}={x}", v.name))
        .collect::<Vec<_>>()
        .join(",")
}

impl<T: Scalar> Builder<'_, T> {
    fn intern(&mut self, s_from_next: bool) -> Result<u32, ComposeError> {
        let s = if s_from_next { &self.next } else { &self.cur };
        let key = self.encoder.key(s);
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let n = self.index.len();
        if n >= self.max_states {
            return Err(ComposeError::TooManyStates { limit: self.max_states });
        }
        let id = u32::try_from(n).map_err(|_| ComposeError::TooManyStates { limit: u32::MAX as usize })?;
        self.index.insert(key, id);
        self.states.extend_from_slice(s);
        Ok(id)
    }

    fn trans_reward(&self, b: usize, label: Option<usize>) -> Result<T, ComposeError> {
        let mut total = Rational::ZERO;
        for (action, guard, value) in &self.rewards[b].trans_items {
            if *action == label && guard.eval_bool(&self.cur)? {
                total += value.eval_num(&self.cur)?;
            }
        }
        if total < Rational::ZERO {
            return Err(ComposeError::NegativeReward {
                block: self.rewards[b].name.clone(),
                value: total.to_f64().unwrap_or(f64::NAN),
                state: describe(self.vars, &self.cur),
            });
        }
        Ok(T::from_rational(&total))
    }

    /// Fire the commands in `combo` together.
    fn fire(&mut self, combo: &[usize], label: Option<usize>) -> Result<(), ComposeError> {
        self.next.copy_from_slice(&self.cur);
        let mut rate = T::one();
        for &ci in combo {
            let cmd = &self.cmds[ci];
            rate *= cmd.rate;
            for (slot, e) in &cmd.updates {
                let v = e.eval_int(&self.cur)?;
                let info = &self.vars[*slot];
                if v < info.lo || v > info.hi {
                    return Err(ComposeError::OutOfRange {
                        var: info.name.clone(),
                        value: v,
                        lo: info.lo,
                        hi: info.hi,
                        state: describe(self.vars, &self.cur),
                    });
                }
                self.next[*slot] = v;
            }
        }
        if self.next == self.cur {
            for b in 0..self.rewards.len() {
                let r = self.trans_reward(b, label)?;
                self.self_loop_acc[b] += rate * r;
            }
            return Ok(());
        }
        let target = self.intern(true)?;
        let offset = self.entry_rewards.len();
        for b in 0..self.rewards.len() {
            let r = self.trans_reward(b, label)?;
            self.entry_rewards.push(r);
        }
        self.entries.push((target, rate, offset));
        Ok(())
    }
}


/// Explore the reachable state space of a model.
pub fn build_state_space<T: Scalar>(ast: &ModelAst, opts: &BuildOptions) -> Result<Ctmc<T>, ComposeError> {
    crate::lang::validate(ast, None)?;
    let vars: Vec<ctmc::VarInfo> = ast
        .variables()
        .map(|(m, v)| ctmc::VarInfo {
            name: v.name.clone(),
            module: m.name.clone(),
            lo: v.lo,
            hi: v.hi,
            init: v.init,
        })
        .collect();
    let resolve = |name: &str| {
        if let Some(i) = vars.iter().position(|v| v.name == name) {
            Some(Binding::Slot(i))
        } else {
            ast.constant(name).map(|c| Binding::Const(c.value))
        }
    };
    let labels = ast.action_labels();
    let label_index = |a: &Option<String>| a.as_deref().map(|a| labels.iter().position(|l| *l == a).unwrap());

    let mut cmds = Vec::new();
    let mut plan = Vec::new();
    // per label, per participating module (in module order) its commands
    let mut sync: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); labels.len()];
    let mut label_seen = vec![false; labels.len()];
    for (mi, m) in ast.modules.iter().enumerate() {
        for c in &m.commands {
            let ci = cmds.len();
            let rate = match &c.rate {
                None => Rational::ONE,
                Some(r) => match Compiled::compile(r, &resolve)? {
                    Compiled::Const(Value::Num(r)) => r,
                    _ => unreachable!("validated rates are constant numbers"),
                },
            };
            let updates = c
                .updates
                .iter()
                .map(|u| {
                    let slot = vars.iter().position(|v| v.name == u.var).unwrap();
                    Ok((slot, Compiled::compile(&u.value, &resolve)?))
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            cmds.push(CmdPlan {
                guard: Compiled::compile(&c.guard, &resolve)?,
                rate: T::from_rational(&rate),
                updates,
            });
            match label_index(&c.action) {
                None => plan.push((ci, None)),
                Some(l) => {
                    // the label's participants are only known after all modules
                    if !label_seen[l] {
                        label_seen[l] = true;
                        plan.push((ci, Some(l)));
                    }
                    match sync[l].last_mut() {
                        Some((last, list)) if *last == mi => list.push(ci),
                        _ => sync[l].push((mi, vec![ci])),
                    }
                }
            }
        }
    }
    let plan: Vec<Firing> = plan
        .into_iter()
        .map(|(ci, l)| match l {
            None => Firing::Single(ci),
            Some(l) => Firing::Sync(l, sync[l].iter().map(|(_, list)| list.clone()).collect()),
        })
        .collect();

    let mut reward_plans = Vec::new();
    for rb in &ast.rewards {
        let state_items = rb
            .state_items
            .iter()
            .map(|it| Ok((Compiled::compile(&it.guard, &resolve)?, Compiled::compile(&it.value, &resolve)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        let mut trans_items = Vec::new();
        for it in &rb.trans_items {
            let action = match &it.action {
                None => None,
                // a label no command uses can never match
                Some(a) => match labels.iter().position(|l| l == a) {
                    Some(i) => Some(i),
                    None => continue,
                },
            };
            trans_items.push((
                action,
                Compiled::compile(&it.guard, &resolve)?,
                Compiled::compile(&it.value, &resolve)?,
            ));
        }
        reward_plans.push(RewardPlan {
            name: rb.name.clone(),
            state_items,
            trans_items,
        });
    }

    let nv = vars.len();
    let nb = reward_plans.len();
    let mut b = Builder {
        vars: &vars,
        encoder: Encoder::new(ast)?,
        cmds,
        rewards: reward_plans,
        max_states: opts.max_states,
        index: KeyMap::default(),
        states: Vec::new(),
        cur: vars.iter().map(|v| v.init).collect(),
        next: vec![0; nv],
        entries: Vec::new(),
        entry_rewards: Vec::new(),
        self_loop_acc: vec![T::zero(); nb],
    };
    b.intern(false)?;

    let mut rates = SparseMatrix::new();
    let mut exit = Vec::new();
    let mut state_rew: Vec<Vec<T>> = vec![Vec::new(); nb];
    let mut trans_rew: Vec<Vec<T>> = vec![Vec::new(); nb];
    let mut loop_rew: Vec<Vec<T>> = vec![Vec::new(); nb];
    let mut enabled = vec![false; b.cmds.len()];
    let mut enabled_lists: Vec<Vec<usize>> = Vec::new();
    let mut combo: Vec<usize> = Vec::new();
    let mut odometer: Vec<usize> = Vec::new();
    let mut row: Vec<(usize, T)> = Vec::new();

    let mut head = 0usize;
    while head < b.index.len() {
        b.cur.copy_from_slice(&b.states[head * nv..(head + 1) * nv]);
        head += 1;
        for (ci, c) in b.cmds.iter().enumerate() {
            enabled[ci] = c.guard.eval_bool(&b.cur)?;
        }
        b.entries.clear();
        b.entry_rewards.clear();
        b.self_loop_acc.iter_mut().for_each(|x| *x = T::zero());

        for f in &plan {
            match f {
                Firing::Single(ci) => {
                    if enabled[*ci] {
                        b.fire(&[*ci], None)?;
                    }
                }
                Firing::Sync(l, modules) => {
                    enabled_lists.clear();
                    for list in modules {
                        enabled_lists.push(list.iter().copied().filter(|&c| enabled[c]).collect());
                    }
                    if enabled_lists.iter().any(Vec::is_empty) {
                        continue;
                    }
                    odometer.clear();
                    odometer.resize(enabled_lists.len(), 0);
                    'product: loop {
                        combo.clear();
                        combo.extend(odometer.iter().zip(&enabled_lists).map(|(&i, list)| list[i]));
                        b.fire(&combo, Some(*l))?;
                        // advance the last module fastest
                        for k in (0..odometer.len()).rev() {
                            odometer[k] += 1;
                            if odometer[k] < enabled_lists[k].len() {
                                continue 'product;
                            }
                            odometer[k] = 0;
                        }
                        break;
                    }
                }
            }
        }

        b.entries.sort_by_key(|e| e.0);
        row.clear();
        let mut k = 0;
        while k < b.entries.len() {
            let target = b.entries[k].0;
            let mut rate = T::zero();
            let mut weighted = vec![T::zero(); nb];
            while k < b.entries.len() && b.entries[k].0 == target {
                let (_, r, off) = b.entries[k];
                rate += r;
                for (bi, w) in weighted.iter_mut().enumerate() {
                    *w += r * b.entry_rewards[off + bi];
                }
                k += 1;
            }
            row.push((target as usize, rate));
            for (bi, w) in weighted.into_iter().enumerate() {
                trans_rew[bi].push(if w == T::zero() { w } else { w / rate });
            }
        }
        exit.push(row.iter().map(|&(_, r)| r).sum());
        rates.push_row(row.iter().copied());

        for (bi, plan) in b.rewards.iter().enumerate() {
            let mut total = Rational::ZERO;
            for (g, v) in &plan.state_items {
                if g.eval_bool(&b.cur)? {
                    total += v.eval_num(&b.cur)?;
                }
            }
            if total < Rational::ZERO {
                return Err(ComposeError::NegativeReward {
                    block: plan.name.clone(),
                    value: total.to_f64().unwrap_or(f64::NAN),
                    state: describe(&vars, &b.cur),
                });
            }
            state_rew[bi].push(T::from_rational(&total));
            loop_rew[bi].push(b.self_loop_acc[bi]);
        }
    }

    let rewards = b
        .rewards
        .iter()
        .enumerate()
        .map(|(bi, p)| RewardStructure {
            name: p.name.clone(),
            state: std::mem::take(&mut state_rew[bi]),
            transition: std::mem::take(&mut trans_rew[bi]),
            self_loop: std::mem::take(&mut loop_rew[bi]),
        })
        .collect();
    Ok(Ctmc {
        vars: vars.clone(),
        constants: ast.constants.clone(),
        states: std::mem::take(&mut b.states),
        initial: 0,
        rates,
        exit,
        rewards,
    })
}

#[cfg(test)]
mod tests;
