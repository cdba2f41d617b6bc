//! Long-run behaviour: stationary distributions of bottom SCCs weighted by
//! the probability of reaching them.

use super::scc::BsccDecomposition;
use super::solver::{iterate, Method, SolveInfo, SolverConfig};
use super::{bscc_decompose, NumericsError};
use crate::compose::Ctmc;
use crate::Scalar;

/// Damping used by the Jacobi (power) form, as in uniformization.
const POWER_FACTOR: f64 = 1.02;

/// Under-relaxation for Gauss–Seidel. Plain sweeps (ω = 1) can cycle
/// forever on periodic BSCCs; any ω in (0, 1) converges.
const SOR_OMEGA: f64 = 0.9;

/// Stationary distribution of every BSCC, each normalised to one on its
/// own states and zero on transient states.
pub fn bscc_stationary<T: Scalar>(
    ctmc: &Ctmc<T>,
    dec: &BsccDecomposition,
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolveInfo), NumericsError> {
    let n = ctmc.num_states();
    let incoming = ctmc.rate_matrix().transpose(n);
    let mut pi = vec![T::zero(); n];
    let mut info = SolveInfo::default();
    for b in &dec.bsccs {
        if b.len() == 1 {
            pi[b[0]] = T::one();
            continue;
        }
        let init = T::one() / T::from_count(b.len());
        b.iter().for_each(|&s| pi[s] = init);
        let inflow = |j: usize, x: &[T]| -> T {
            let (cols, vals) = incoming.row(j);
            cols.iter().zip(vals).map(|(&i, &r)| x[i as usize] * r).sum()
        };
        let step = match cfg.method {
            Method::GaussSeidel => {
                let w = T::lit(SOR_OMEGA);
                iterate(&mut pi, b, cfg, true, "steady state", |j, x| {
                    x[j] * (T::one() - w) + inflow(j, x) / ctmc.exit_rate(j) * w
                })?
            }
            Method::Jacobi => {
                let max_e = b.iter().map(|&s| ctmc.exit_rate(s)).fold(T::zero(), T::max);
                let inv_q = T::one() / (max_e * T::lit(POWER_FACTOR));
                iterate(&mut pi, b, cfg, true, "steady state", |j, x| {
                    x[j] * (T::one() - ctmc.exit_rate(j) * inv_q) + inflow(j, x) * inv_q
                })?
            }
        };
        info.merge(step);
    }
    Ok((pi, info))
}

/// Probability of ending up in each BSCC from `init`, via the expected
/// number of visits to each transient state of the embedded jump chain.
pub fn bscc_reach_probabilities<T: Scalar>(
    ctmc: &Ctmc<T>,
    dec: &BsccDecomposition,
    init: &[T],
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolveInfo), NumericsError> {
    let n = ctmc.num_states();
    let mut reach = vec![T::zero(); dec.bsccs.len()];
    for s in 0..n {
        if let Some(b) = dec.bscc_of[s] {
            reach[b] += init[s];
        }
    }
    let transient_mass: T = dec.transient.iter().map(|&s| init[s]).sum();
    if transient_mass == T::zero() {
        return Ok((reach, SolveInfo::default()));
    }
    let incoming = ctmc.rate_matrix().transpose(n);
    let is_transient: Vec<bool> = dec.bscc_of.iter().map(Option::is_none).collect();
    let inv_e: Vec<T> = (0..n)
        .map(|s| {
            let e = ctmc.exit_rate(s);
            if e > T::zero() {
                T::one() / e
            } else {
                T::zero()
            }
        })
        .collect();
    let mut visits: Vec<T> = vec![T::zero(); n];
    let info = iterate(&mut visits, &dec.transient, cfg, false, "BSCC reachability", |j, x| {
        let (cols, vals) = incoming.row(j);
        let inflow: T = cols
            .iter()
            .zip(vals)
            .filter(|(&i, _)| is_transient[i as usize])
            .map(|(&i, &r)| x[i as usize] * r * inv_e[i as usize])
            .sum();
        init[j] + inflow
    })?;
    for &i in &dec.transient {
        for (j, r) in ctmc.successors(i) {
            if let Some(b) = dec.bscc_of[j] {
                reach[b] += visits[i] * r * inv_e[i];
            }
        }
    }
    // mass is conserved exactly in the limit; remove solver drift
    let total: T = reach.iter().copied().sum();
    if total > T::zero() {
        reach.iter_mut().for_each(|r| *r /= total);
    }
    Ok((reach, info))
}

/// Long-run distribution from `init`.
pub fn steady_state_distribution<T: Scalar>(
    ctmc: &Ctmc<T>,
    init: &[T],
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolveInfo), NumericsError> {
    if init.len() != ctmc.num_states() {
        return Err(NumericsError::InvalidArgument(format!(
            "distribution has {} entries for {} states",
            init.len(),
            ctmc.num_states()
        )));
    }
    let dec = bscc_decompose(ctmc);
    let (mut pi, mut info) = bscc_stationary(ctmc, &dec, cfg)?;
    let (reach, reach_info) = bscc_reach_probabilities(ctmc, &dec, init, cfg)?;
    info.merge(reach_info);
    for (s, p) in pi.iter_mut().enumerate() {
        *p = match dec.bscc_of[s] {
            Some(b) => *p * reach[b],
            None => T::zero(),
        };
    }
    super::transient::clamp_negative(&mut pi)?;
    Ok((pi, info))
}

/// Per-state long-run value when every state of BSCC `b` has value
/// `bscc_value[b]`: the value of a transient state is the reach-weighted
/// mix of the BSCC values.
pub fn steady_state_values<T: Scalar>(
    ctmc: &Ctmc<T>,
    dec: &BsccDecomposition,
    bscc_value: &[T],
    cfg: &SolverConfig,
) -> Result<(Vec<T>, SolveInfo), NumericsError> {
    let mut v: Vec<T> = dec
        .bscc_of
        .iter()
        .map(|b| b.map_or(T::zero(), |b| bscc_value[b]))
        .collect();
    let info = iterate(&mut v, &dec.transient, cfg, false, "steady-state values", |i, x| {
        let s: T = ctmc.successors(i).map(|(j, r)| r * x[j]).sum();
        s / ctmc.exit_rate(i)
    })?;
    Ok((v, info))
}

/// `max_B ‖π_B Q‖∞` with `π_B` the restriction of `pi` to `B`, renormalised.
pub fn steady_residual<T: Scalar>(ctmc: &Ctmc<T>, dec: &BsccDecomposition, pi: &[T]) -> f64 {
    let mut worst = 0.0f64;
    for b in &dec.bsccs {
        let mass: f64 = b.iter().map(|&s| pi[s].as_f64()).sum();
        if mass <= 0.0 {
            continue;
        }
        let mut flow = std::collections::HashMap::new();
        for &i in b {
            let p = pi[i].as_f64() / mass;
            *flow.entry(i).or_insert(0.0) -= p * ctmc.exit_rate(i).as_f64();
            for (j, r) in ctmc.successors(i) {
                *flow.entry(j).or_insert(0.0) += p * r.as_f64();
            }
        }
        worst = flow.values().fold(worst, |w, v: &f64| w.max(v.abs()));
    }
    worst
}
