//! CSL and reward-property evaluation on an explicit chain.
//!
//! Bounded operators (`P>=p`, `S<q`, `R{..}<r`) produce satisfaction sets;
//! a top-level `=?` produces a value per state and reports the one at the
//! initial state. Numeric operators are evaluated backward, so every query
//! yields the whole per-state vector at the cost of one propagation.

use std::sync::OnceLock;
use std::time::Instant;

use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::compose::{ComposeError, Ctmc, StateSet};
use crate::lang::print_formula;
use crate::lang::property::{Bound, Comparison, PathFormula, RewardKind, StateFormula};
use crate::numerics::{
    self, BsccDecomposition, NumericsError, Quantity, SolveInfo, SolverConfig, UnifConfig, UnifInfo,
};
use crate::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("`=?` is only allowed at the top level of a property")]
    NestedQuery,
    #[error(transparent)]
    Model(#[from] ComposeError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckConfig {
    pub unif: UnifConfig,
    pub solver: SolverConfig,
}

/// Work done while checking one property.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub solver_iterations: usize,
    pub uniformization_iterations: usize,
    /// Largest Fox–Glynn window `[left, right]` used.
    pub truncation_window: Option<[usize; 2]>,
    pub uniformization_rate: Option<f64>,
    pub wall_time_s: f64,
    /// States whose value lies within the solver epsilon of a bound.
    pub marginal_states: usize,
    /// Whether the initial state's comparison was marginal.
    pub marginal: bool,
}

impl Diagnostics {
    fn solve(&mut self, info: SolveInfo) {
        self.solver_iterations += info.iterations;
    }

    fn unif(&mut self, info: UnifInfo) {
        self.uniformization_iterations += info.iterations;
        if info.iterations > 0 {
            let wider = self.truncation_window.is_none_or(|[_, r]| info.right > r);
            if wider {
                self.truncation_window = Some([info.left, info.right]);
                self.uniformization_rate = Some(info.q);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    /// A boolean property: its satisfaction set.
    Satisfied { set: StateSet, initial: bool },
    /// A `=?` query: the value in every state.
    Value { initial: Quantity<T>, per_state: Vec<Quantity<T>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult<T> {
    pub formula: String,
    pub outcome: Outcome<T>,
    pub diagnostics: Diagnostics,
}

fn quantity_json<T: Scalar>(q: Quantity<T>) -> Json {
    match q {
        Quantity::Finite(v) => json!(v.as_f64()),
        Quantity::Infinite => json!("inf"),
    }
}

impl<T: Scalar> CheckResult<T> {
    /// Value at the initial state for a query.
    pub fn value(&self) -> Option<Quantity<T>> {
        match &self.outcome {
            Outcome::Value { initial, .. } => Some(*initial),
            Outcome::Satisfied { .. } => None,
        }
    }

    /// Finite value at the initial state, if any.
    pub fn scalar(&self) -> Option<T> {
        self.value().and_then(Quantity::finite)
    }

    /// `{formula, value | satisfying_count, diagnostics}`; with
    /// `all_states`, also the per-state vector or set.
    pub fn to_json(&self, all_states: bool) -> Json {
        let mut obj = json!({ "formula": self.formula });
        match &self.outcome {
            Outcome::Value { initial, per_state } => {
                obj["value"] = quantity_json(*initial);
                if all_states {
                    obj["values"] = Json::Array(per_state.iter().map(|q| quantity_json(*q)).collect());
                }
            }
            Outcome::Satisfied { set, initial } => {
                obj["satisfying_count"] = json!(set.count());
                obj["initial_satisfies"] = json!(initial);
                if all_states {
                    obj["states"] = json!(set.iter().collect::<Vec<_>>());
                }
            }
        }
        obj["diagnostics"] = serde_json::to_value(&self.diagnostics).expect("diagnostics serialise");
        obj
    }
}

/// Compare `value ~ bound`; the flag reports whether the value lies within
/// `epsilon` of the bound.
pub fn bound_compare(value: f64, cmp: Comparison, bound: f64, epsilon: f64) -> (bool, bool) {
    let holds = match cmp {
        Comparison::Lt => value < bound,
        Comparison::Le => value <= bound,
        Comparison::Ge => value >= bound,
        Comparison::Gt => value > bound,
    };
    (holds, (value - bound).abs() < epsilon)
}

fn time(t: &Rational) -> f64 {
    t.to_f64().unwrap_or(f64::NAN)
}

/// Reusable checker over one chain; caches the long-run decomposition.
pub struct Checker<'a, T> {
    ctmc: &'a Ctmc<T>,
    cfg: CheckConfig,
    long_run: OnceLock<Result<(BsccDecomposition, Vec<T>, SolveInfo), NumericsError>>,
}

impl<'a, T: Scalar> Checker<'a, T> {
    pub fn new(ctmc: &'a Ctmc<T>, cfg: CheckConfig) -> Self {
        Self {
            ctmc,
            cfg,
            long_run: OnceLock::new(),
        }
    }

    pub fn ctmc(&self) -> &Ctmc<T> {
        self.ctmc
    }

    pub fn check(&self, f: &StateFormula) -> Result<CheckResult<T>, CheckError> {
        let start = Instant::now();
        let mut d = Diagnostics::default();
        let init = self.ctmc.initial_state();
        let outcome = match f {
            StateFormula::Prob { bound: Bound::Query, .. }
            | StateFormula::Steady { bound: Bound::Query, .. }
            | StateFormula::Reward { bound: Bound::Query, .. } => {
                let per_state = self.values(f, &mut d)?;
                Outcome::Value {
                    initial: per_state[init],
                    per_state,
                }
            }
            _ => {
                let set = self.sat(f, &mut d)?;
                Outcome::Satisfied {
                    initial: set.contains(init),
                    set,
                }
            }
        };
        d.wall_time_s = start.elapsed().as_secs_f64();
        Ok(CheckResult {
            formula: print_formula(f),
            outcome,
            diagnostics: d,
        })
    }

    /// Satisfaction set of a formula without `=?`.
    pub fn sat(&self, f: &StateFormula, d: &mut Diagnostics) -> Result<StateSet, CheckError> {
        let n = self.ctmc.num_states();
        Ok(match f {
            StateFormula::True => StateSet::full(n),
            StateFormula::False => StateSet::empty(n),
            StateFormula::Atom(e) => self.ctmc.sat_set(e)?,
            StateFormula::Not(a) => self.sat(a, d)?.complement(),
            StateFormula::And(a, b) => self.sat(a, d)?.intersect(&self.sat(b, d)?),
            StateFormula::Or(a, b) => self.sat(a, d)?.union(&self.sat(b, d)?),
            StateFormula::Prob { bound, .. }
            | StateFormula::Steady { bound, .. }
            | StateFormula::Reward { bound, .. } => {
                let Bound::Compare(cmp, p) = *bound else {
                    return Err(CheckError::NestedQuery);
                };
                let values = self.values(f, d)?;
                let p = time(&p);
                let eps = self.cfg.solver.epsilon;
                let init = self.ctmc.initial_state();
                let mut mask = Vec::with_capacity(n);
                for (s, q) in values.iter().enumerate() {
                    let (holds, marginal) = match q {
                        Quantity::Finite(v) => bound_compare(v.as_f64(), cmp, p, eps),
                        Quantity::Infinite => (matches!(cmp, Comparison::Gt | Comparison::Ge), false),
                    };
                    if marginal {
                        d.marginal_states += 1;
                        if s == init {
                            d.marginal = true;
                        }
                    }
                    mask.push(holds);
                }
                StateSet::from_mask(mask)
            }
        })
    }

    /// Per-state value of a P, S or R operator, ignoring its bound.
    pub fn values(&self, f: &StateFormula, d: &mut Diagnostics) -> Result<Vec<Quantity<T>>, CheckError> {
        let finite = |v: Vec<T>| v.into_iter().map(Quantity::Finite).collect();
        match f {
            StateFormula::Prob { path, .. } => Ok(finite(self.path_probability(path, d)?)),
            StateFormula::Steady { inner, .. } => {
                let set = self.sat(inner, d)?;
                let ind = indicator::<T>(&set);
                Ok(finite(self.long_run_values(&ind, d)?))
            }
            StateFormula::Reward { structure, kind, .. } => self.reward_values(structure, kind, d),
            _ => Err(CheckError::NestedQuery),
        }
    }

    fn path_probability(&self, path: &PathFormula, d: &mut Diagnostics) -> Result<Vec<T>, CheckError> {
        let phi1 = self.sat(&path.left, d)?;
        let phi2 = self.sat(&path.right, d)?;
        let lo = time(&path.interval.lo);
        let hi = path.interval.hi.as_ref().map(time);
        let inner = match hi {
            Some(hi) => self.bounded_until(&phi1, &phi2, hi - lo, d)?,
            None => {
                let (x, info) = numerics::unbounded_until(self.ctmc, &phi1, &phi2, &self.cfg.solver)?;
                d.solve(info);
                x
            }
        };
        if lo == 0.0 {
            return Ok(inner);
        }
        // φ1 must hold throughout [0, lo): evolve with ¬φ1 absorbing from
        // the phase-two values restricted to φ1 states
        let masked: Vec<T> = inner
            .iter()
            .enumerate()
            .map(|(s, &x)| if phi1.contains(s) { x } else { T::zero() })
            .collect();
        let stop = phi1.complement();
        let (x, info) = numerics::transient_backward(self.ctmc, &masked, lo, Some(stop.mask()), &self.cfg.unif)?;
        d.unif(info);
        Ok(x)
    }

    /// `φ1 U[0,t] φ2` per state.
    fn bounded_until(&self, phi1: &StateSet, phi2: &StateSet, t: f64, d: &mut Diagnostics) -> Result<Vec<T>, CheckError> {
        let target = indicator::<T>(phi2);
        if t == 0.0 {
            return Ok(target);
        }
        let absorbing = phi2.union(&phi1.union(phi2).complement());
        let (x, info) = numerics::transient_backward(self.ctmc, &target, t, Some(absorbing.mask()), &self.cfg.unif)?;
        d.unif(info);
        Ok(x)
    }

    fn long_run(&self) -> Result<&(BsccDecomposition, Vec<T>, SolveInfo), CheckError> {
        let cached = self.long_run.get_or_init(|| {
            let dec = numerics::bscc_decompose(self.ctmc);
            let (pi, info) = numerics::bscc_stationary(self.ctmc, &dec, &self.cfg.solver)?;
            Ok((dec, pi, info))
        });
        cached.as_ref().map_err(|e| CheckError::Numerics(e.clone()))
    }

    /// Long-run average of the per-state rate `rho`, per starting state.
    fn long_run_values(&self, rho: &[T], d: &mut Diagnostics) -> Result<Vec<T>, CheckError> {
        let (dec, pi, info) = self.long_run()?;
        d.solve(*info);
        let per_bscc: Vec<T> = dec
            .bsccs
            .iter()
            .map(|b| b.iter().map(|&s| pi[s] * rho[s]).sum())
            .collect();
        let (v, info) = numerics::steady_state_values(self.ctmc, dec, &per_bscc, &self.cfg.solver)?;
        d.solve(info);
        Ok(v)
    }

    fn reward_values(&self, name: &str, kind: &RewardKind, d: &mut Diagnostics) -> Result<Vec<Quantity<T>>, CheckError> {
        let rs = self.ctmc.reward(name)?;
        let finite = |v: Vec<T>| v.into_iter().map(Quantity::Finite).collect();
        Ok(match kind {
            RewardKind::Instantaneous(t) => {
                let (x, info) = numerics::transient_backward(self.ctmc, &rs.state, time(t), None, &self.cfg.unif)?;
                d.unif(info);
                finite(x)
            }
            RewardKind::Cumulative(t) => {
                let rho = self.ctmc.reward_rate(rs);
                let (x, info) = numerics::cumulative_reward_backward(self.ctmc, &rho, time(t), &self.cfg.unif)?;
                d.unif(info);
                finite(x)
            }
            RewardKind::Reachability(target) => {
                let set = self.sat(target, d)?;
                let rho = self.ctmc.reward_rate(rs);
                let (x, info) = numerics::reachability_reward(self.ctmc, &rho, &set, &self.cfg.solver)?;
                d.solve(info);
                x
            }
            RewardKind::SteadyState => {
                let rho = self.ctmc.reward_rate(rs);
                finite(self.long_run_values(&rho, d)?)
            }
        })
    }
}

fn indicator<T: Scalar>(set: &StateSet) -> Vec<T> {
    set.mask().iter().map(|&b| if b { T::one() } else { T::zero() }).collect()
}

/// Check one property with a fresh [`Checker`].
pub fn check<T: Scalar>(ctmc: &Ctmc<T>, f: &StateFormula, cfg: &CheckConfig) -> Result<CheckResult<T>, CheckError> {
    Checker::new(ctmc, *cfg).check(f)
}
