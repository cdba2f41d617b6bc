//! Unbounded reachability: until probabilities and expected rewards
//! accumulated before reaching a target.

use serde::Serialize;

use super::solver::{iterate, SolveInfo, SolverConfig};
use super::NumericsError;
use crate::compose::{Ctmc, StateSet};
use crate::Scalar;

/// A non-negative quantity that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Quantity<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Quantity<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Quantity::Finite(v) => Some(v),
            Quantity::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Quantity::Infinite)
    }

    /// `inf` for the infinite case, shortest round-trip decimal otherwise.
    pub fn to_text(self) -> String {
        match self {
            Quantity::Finite(v) => format!("{v}"),
            Quantity::Infinite => "inf".into(),
        }
    }
}

/// States from which some path reaches `target` while staying in `through`
/// (the target states themselves included).
fn backward_closure<T: Scalar>(ctmc: &Ctmc<T>, through: &StateSet, target: &StateSet) -> StateSet {
    let n = ctmc.num_states();
    let pred = ctmc.rate_matrix().transpose(n);
    let mut seen = target.clone();
    let mut todo: Vec<usize> = target.iter().collect();
    while let Some(v) = todo.pop() {
        for &u in pred.row(v).0 {
            let u = u as usize;
            if !seen.contains(u) && through.contains(u) {
                seen.insert(u);
                todo.push(u);
            }
        }
    }
    seen
}

/// `(no, yes)`: states where `φ1 U φ2` holds with probability 0 and 1.
pub fn prob01<T: Scalar>(ctmc: &Ctmc<T>, phi1: &StateSet, phi2: &StateSet) -> (StateSet, StateSet) {
    let no = backward_closure(ctmc, phi1, phi2).complement();
    let waiting = phi1.intersect(&phi2.complement());
    let yes = backward_closure(ctmc, &waiting, &no).complement();
    (no, yes)
}

/// Per-state probability of `φ1 U φ2` without a time bound.
pub fn unbounded_until<T: Scalar>(
    ctmc: &Ctmc<T>,
    phi1: &StateSet,
    phi2: &StateSet,
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolveInfo), NumericsError> {
    let (no, yes) = prob01(ctmc, phi1, phi2);
    let mut x: Vec<T> = (0..ctmc.num_states())
        .map(|s| if yes.contains(s) { T::one() } else { T::zero() })
        .collect();
    let maybe: Vec<usize> = (0..ctmc.num_states())
        .filter(|&s| !yes.contains(s) && !no.contains(s))
        .collect();
    let info = iterate(&mut x, &maybe, cfg, false, "unbounded until", |i, x| {
        let s: T = ctmc.successors(i).map(|(j, r)| r * x[j]).sum();
        s / ctmc.exit_rate(i)
    })?;
    Ok((x, info))
}

/// Expected reward accumulated before first reaching `target`, where `rho`
/// is the per-state reward rate (transition rewards already folded in).
/// States that miss the target with positive probability get `Infinite`.
pub fn reachability_reward<T: Scalar>(
    ctmc: &Ctmc<T>,
    rho: &[T],
    target: &StateSet,
    cfg: &SolverConfig,
) -> Result<(Vec<Quantity<T>>, SolveInfo), NumericsError> {
    let n = ctmc.num_states();
    let (_, yes) = prob01(ctmc, &StateSet::full(n), target);
    let unknown: Vec<usize> = (0..n).filter(|&s| yes.contains(s) && !target.contains(s)).collect();
    let mut x = vec![T::zero(); n];
    let info = iterate(&mut x, &unknown, cfg, false, "reachability reward", |i, x| {
        let s: T = ctmc.successors(i).map(|(j, r)| r * x[j]).sum();
        (rho[i] + s) / ctmc.exit_rate(i)
    })?;
    let out = (0..n)
        .map(|s| {
            if yes.contains(s) {
                Quantity::Finite(x[s])
            } else {
                Quantity::Infinite
            }
        })
        .collect();
    Ok((out, info))
}
