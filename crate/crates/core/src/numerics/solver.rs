//! Fixpoint iteration for the linear systems behind steady-state and
//! unbounded-reachability quantities.

use rayon::prelude::*;
use serde::Serialize;

use super::NumericsError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    GaussSeidel,
    /// Updates from the previous iterate only; parallel and bitwise
    /// independent of the thread count.
    Jacobi,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gs" | "gauss-seidel" | "gaussseidel" => Ok(Method::GaussSeidel),
            "jacobi" => Ok(Method::Jacobi),
            _ => Err(format!("unknown solver `{s}` (expected gauss-seidel or jacobi)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative change between iterates at which iteration stops.
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::GaussSeidel,
            epsilon: 1e-9,
            max_iters: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.epsilon > 0.0 && self.epsilon.is_finite() && self.max_iters > 0 {
            Ok(())
        } else {
            Err(NumericsError::InvalidArgument(format!(
                "solver epsilon {} must be > 0 and max iterations {} >= 1",
                self.epsilon, self.max_iters
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveInfo {
    pub iterations: usize,
    /// Largest relative change in the final sweep.
    pub last_change: f64,
}

impl SolveInfo {
    pub(crate) fn merge(&mut self, other: SolveInfo) {
        self.iterations += other.iterations;
        self.last_change = self.last_change.max(other.last_change);
    }
}

fn rel_change<T: Scalar>(old: T, new: T) -> f64 {
    let d = (new - old).abs().as_f64();
    let scale = new.abs().as_f64();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Iterate `x[i] = update(i, x)` over `unknowns` until the largest relative
/// change drops below the configured epsilon. With `normalize`, the
/// unknowns are rescaled to sum to one after every sweep.
pub(crate) fn iterate<T: Scalar>(
    x: &mut [T],
    unknowns: &[usize],
    cfg: &SolverConfig,
    normalize: bool,
    what: &str,
    update: impl Fn(usize, &[T]) -> T + Sync,
) -> Result<SolveInfo, NumericsError> {
    cfg.validate()?;
    if unknowns.is_empty() {
        return Ok(SolveInfo::default());
    }
    let mut fresh: Vec<T> = Vec::new();
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        change = 0.0;
        match cfg.method {
            Method::GaussSeidel => {
                for &i in unknowns {
                    let new = update(i, x);
                    change = change.max(rel_change(x[i], new));
                    x[i] = new;
                }
            }
            Method::Jacobi => {
                let snapshot: &[T] = x;
                unknowns.par_iter().map(|&i| update(i, snapshot)).collect_into_vec(&mut fresh);
                for (&i, &new) in unknowns.iter().zip(&fresh) {
                    change = change.max(rel_change(x[i], new));
                    x[i] = new;
                }
            }
        }
        if normalize {
            let sum: T = unknowns.iter().map(|&i| x[i]).sum();
            if sum > T::zero() {
                unknowns.iter().for_each(|&i| x[i] /= sum);
            }
        }
        if !change.is_finite() {
            return Err(NumericsError::NotConverged {
                what: what.into(),
                iterations: it,
                residual: change,
            });
        }
        if change < cfg.epsilon {
            return Ok(SolveInfo {
                iterations: it,
                last_change: change,
            });
        }
    }
    Err(NumericsError::NotConverged {
        what: what.into(),
        iterations: cfg.max_iters,
        residual: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_contraction() {
        // x0 = 1 + x1/2, x1 = 1 + x0/2  =>  x = (2, 2)
        for method in [Method::GaussSeidel, Method::Jacobi] {
            let cfg = SolverConfig { method, ..Default::default() };
            let mut x = vec![0.0f64; 2];
            let info = iterate(&mut x, &[0, 1], &cfg, false, "test", |i, x| 1.0 + x[1 - i] / 2.0).unwrap();
            assert!((x[0] - 2.0).abs() < 1e-8 && (x[1] - 2.0).abs() < 1e-8);
            assert!(info.iterations > 1);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = SolverConfig {
            max_iters: 10,
            ..Default::default()
        };
        let mut x = vec![1.0f64];
        let err = iterate(&mut x, &[0], &cfg, false, "test", |_, x| x[0] + 1.0).unwrap_err();
        assert!(matches!(err, NumericsError::NotConverged { iterations: 10, .. }));
    }

    #[test]
    fn parses_method_names() {
        assert_eq!("jacobi".parse::<Method>(), Ok(Method::Jacobi));
        assert_eq!("gs".parse::<Method>(), Ok(Method::GaussSeidel));
        assert!("sor".parse::<Method>().is_err());
    }
}
