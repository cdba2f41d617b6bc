//! Gillespie simulation on an explicit chain.
//!
//! Randomness comes from ChaCha8 seeded with `seed` and switched to stream
//! `run`, so run `k` of an experiment draws the same numbers whether runs
//! execute serially or in parallel, on any platform. Sojourn times use the
//! inverse CDF `-ln(1-u)/E`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::compose::{ComposeError, Ctmc};
use crate::lang::ast::Expr;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ComposeError),
}

/// Generator for run `run` of an experiment seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub run: u64,
    /// `(state, sojourn)` pairs; the last sojourn is cut at the horizon.
    pub segments: Vec<(usize, f64)>,
    pub horizon: f64,
}

impl Trajectory {
    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let mut clock = 0.0;
        for &(s, d) in &self.segments {
            clock += d;
            if t < clock {
                return s;
            }
        }
        self.segments.last().map_or(0, |&(s, _)| s)
    }
}

fn sojourn(rng: &mut ChaCha8Rng, exit: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        let d = -(1.0 - u).ln() / exit;
        if d > 0.0 {
            return d;
        }
    }
}

fn successor<T: Scalar>(ctmc: &Ctmc<T>, s: usize, rng: &mut ChaCha8Rng) -> usize {
    let exit = ctmc.exit_rate(s).as_f64();
    let target = rng.random::<f64>() * exit;
    let mut acc = 0.0;
    let mut last = s;
    for (t, r) in ctmc.successors(s) {
        acc += r.as_f64();
        last = t;
        if target < acc {
            return t;
        }
    }
    // rounding left `target` just above the accumulated sum
    last
}

fn check_horizon(h: f64) -> Result<(), SimError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!("horizon {h} must be finite and > 0")))
    }
}

/// Trajectory of run `run` up to `horizon`.
pub fn simulate_run<T: Scalar>(ctmc: &Ctmc<T>, seed: u64, run: u64, horizon: f64) -> Result<Trajectory, SimError> {
    check_horizon(horizon)?;
    let mut rng = run_rng(seed, run);
    let mut s = ctmc.initial_state();
    let mut clock = 0.0;
    let mut segments = Vec::new();
    loop {
        let exit = ctmc.exit_rate(s).as_f64();
        if exit == 0.0 {
            segments.push((s, horizon - clock));
            break;
        }
        let d = sojourn(&mut rng, exit);
        if clock + d >= horizon {
            segments.push((s, horizon - clock));
            break;
        }
        segments.push((s, d));
        clock += d;
        s = successor(ctmc, s, &mut rng);
    }
    Ok(Trajectory {
        seed,
        run,
        segments,
        horizon,
    })
}

/// Trajectory of run 0.
pub fn simulate<T: Scalar>(ctmc: &Ctmc<T>, seed: u64, horizon: f64) -> Result<Trajectory, SimError> {
    simulate_run(ctmc, seed, 0, horizon)
}

/// State at time `t` of run `run`, without recording the path.
pub fn state_at_time<T: Scalar>(ctmc: &Ctmc<T>, seed: u64, run: u64, t: f64) -> usize {
    let mut rng = run_rng(seed, run);
    let mut s = ctmc.initial_state();
    let mut clock = 0.0;
    loop {
        let exit = ctmc.exit_rate(s).as_f64();
        if exit == 0.0 {
            return s;
        }
        clock += sojourn(&mut rng, exit);
        if clock > t {
            return s;
        }
        s = successor(ctmc, s, &mut rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    /// Normal-approximation 95% half-width, `1.96·sqrt(p(1-p)/n)`.
    pub half_width: f64,
    pub runs: usize,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.estimate).abs() <= self.half_width
    }
}

/// Fraction of `runs` simulations in which `expr` holds at time `t`.
pub fn estimate_transient<T: Scalar>(
    ctmc: &Ctmc<T>,
    expr: &Expr,
    t: f64,
    runs: usize,
    seed: u64,
) -> Result<Estimate, SimError> {
    if runs == 0 {
        return Err(SimError::InvalidArgument("at least one run is required".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SimError::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    let sat = ctmc.sat_set(expr)?;
    let hits: usize = (0..runs as u64)
        .into_par_iter()
        .map(|run| usize::from(sat.contains(state_at_time(ctmc, seed, run, t))))
        .sum();
    let n = runs as f64;
    let p = hits as f64 / n;
    Ok(Estimate {
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / n).sqrt(),
        runs,
    })
}

/// Trajectory as CSV: `time,stateIndex,<variables...>`, one row per segment
/// giving its entry time.
pub fn write_trajectory_csv<T: Scalar, W: Write>(ctmc: &Ctmc<T>, traj: &Trajectory, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["time".to_string(), "stateIndex".to_string()];
    header.extend(ctmc.variables().iter().map(|v| v.name.clone()));
    out.write_record(&header)?;
    let mut clock = 0.0;
    for &(s, d) in &traj.segments {
        let mut row = vec![crate::harness::format_g12(clock), s.to_string()];
        row.extend(ctmc.state(s).iter().map(i64::to_string));
        out.write_record(&row)?;
        clock += d;
    }
    out.flush()
}
