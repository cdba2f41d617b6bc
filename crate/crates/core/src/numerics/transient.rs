//! Uniformization: transient distributions, time-bounded expectations and
//! cumulative rewards.
//!
//! With `q >= max E(s)` and `P = I + Q/q`, `e^{Qt} = Σ_k Poisson(qt; k) P^k`.
//! Forward propagation (`π P^k`) yields distributions; backward
//! propagation (`P^k b`) yields per-state expectations of `b` at time `t`.

use rayon::prelude::*;
use serde::Serialize;

use super::{fox_glynn, FoxGlynnWeights, NumericsError, SparseMatrix};
use crate::compose::Ctmc;
use crate::Scalar;

/// Vectors at least this long are propagated in parallel.
const PAR_THRESHOLD: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnifConfig {
    /// `q = factor × max exit rate`.
    pub factor: f64,
    /// Omitted Poisson tail mass.
    pub accuracy: f64,
}

impl Default for UnifConfig {
    fn default() -> Self {
        Self {
            factor: 1.02,
            accuracy: 1e-12,
        }
    }
}

/// What a uniformization run did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UnifInfo {
    pub q: f64,
    pub left: usize,
    pub right: usize,
    /// Matrix-vector products performed.
    pub iterations: usize,
}

struct Uniformized<'a, T> {
    rates: &'a SparseMatrix<T>,
    transposed: Option<SparseMatrix<T>>,
    absorbing: Option<&'a [bool]>,
    diag: Vec<T>,
    inv_q: T,
    q: f64,
}

impl<'a, T: Scalar> Uniformized<'a, T> {
    fn new(
        ctmc: &'a Ctmc<T>,
        absorbing: Option<&'a [bool]>,
        cfg: &UnifConfig,
        forward: bool,
    ) -> Result<Self, NumericsError> {
        if !(cfg.factor >= 1.0 && cfg.factor.is_finite()) {
            return Err(NumericsError::InvalidArgument(format!(
                "uniformization factor {} must be >= 1",
                cfg.factor
            )));
        }
        let n = ctmc.num_states();
        let live = |s: usize| absorbing.is_none_or(|m| !m[s]);
        let max_e = (0..n)
            .filter(|&s| live(s))
            .map(|s| ctmc.exit_rate(s).as_f64())
            .fold(0.0, f64::max);
        let q = if max_e > 0.0 { cfg.factor * max_e } else { 1.0 };
        let inv_q = T::lit(1.0 / q);
        let diag = (0..n)
            .map(|s| if live(s) { T::one() - ctmc.exit_rate(s) * inv_q } else { T::one() })
            .collect();
        Ok(Self {
            rates: ctmc.rate_matrix(),
            transposed: forward.then(|| ctmc.rate_matrix().transpose(n)),
            absorbing,
            diag,
            inv_q,
            q,
        })
    }

    fn live(&self, s: usize) -> bool {
        self.absorbing.is_none_or(|m| !m[s])
    }

    /// `dst = src P`
    fn step_forward(&self, src: &[T], dst: &mut [T]) {
        let tr = self.transposed.as_ref().expect("forward operator");
        let cell = |j: usize| {
            let (cols, vals) = tr.row(j);
            let mut inflow = T::zero();
            for (&i, &r) in cols.iter().zip(vals) {
                if self.live(i as usize) {
                    inflow += src[i as usize] * r;
                }
            }
            src[j] * self.diag[j] + inflow * self.inv_q
        };
        if dst.len() >= PAR_THRESHOLD {
            dst.par_iter_mut().enumerate().for_each(|(j, d)| *d = cell(j));
        } else {
            dst.iter_mut().enumerate().for_each(|(j, d)| *d = cell(j));
        }
    }

    /// `dst = P src`
    fn step_backward(&self, src: &[T], dst: &mut [T]) {
        let cell = |i: usize| {
            if !self.live(i) {
                return src[i];
            }
            let (cols, vals) = self.rates.row(i);
            let mut out = T::zero();
            for (&j, &r) in cols.iter().zip(vals) {
                out += src[j as usize] * r;
            }
            src[i] * self.diag[i] + out * self.inv_q
        };
        if dst.len() >= PAR_THRESHOLD {
            dst.par_iter_mut().enumerate().for_each(|(i, d)| *d = cell(i));
        } else {
            dst.iter_mut().enumerate().for_each(|(i, d)| *d = cell(i));
        }
    }

    fn step(&self, forward: bool, src: &[T], dst: &mut [T]) {
        if forward {
            self.step_forward(src, dst)
        } else {
            self.step_backward(src, dst)
        }
    }

    fn weights(&self, t: f64, cfg: &UnifConfig) -> Result<FoxGlynnWeights<T>, NumericsError> {
        fox_glynn(self.q * t, cfg.accuracy)
    }

    fn info(&self, fg: &FoxGlynnWeights<T>, iterations: usize) -> UnifInfo {
        UnifInfo {
            q: self.q,
            left: fg.left,
            right: fg.right,
            iterations,
        }
    }
}

fn check_time(t: f64) -> Result<(), NumericsError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::InvalidArgument(format!("time {t} must be finite and >= 0")))
    }
}

fn check_distribution<T: Scalar>(d: &[T], n: usize) -> Result<(), NumericsError> {
    if d.len() != n {
        return Err(NumericsError::InvalidArgument(format!(
            "distribution has {} entries for {n} states",
            d.len()
        )));
    }
    let tol = 1e-12f64.max(4.0 * n as f64 * T::epsilon().as_f64());
    let sum: f64 = d.iter().map(|x| x.as_f64()).sum();
    if d.iter().any(|x| !(x.as_f64() >= 0.0)) || (sum - 1.0).abs() > tol {
        return Err(NumericsError::InvalidArgument(format!(
            "initial vector is not a distribution (sum {sum})"
        )));
    }
    Ok(())
}

/// Replace tiny negative round-off by zero; anything more negative is a bug.
pub(crate) fn clamp_negative<T: Scalar>(v: &mut [T]) -> Result<(), NumericsError> {
    let floor = T::lit(-1e-12);
    let mut clamped = 0usize;
    for (s, x) in v.iter_mut().enumerate() {
        if *x < T::zero() {
            if *x < floor {
                return Err(NumericsError::NegativeProbability { state: s, value: x.as_f64() });
            }
            *x = T::zero();
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} slightly negative entries to zero");
    }
    Ok(())
}

/// `Σ_k weight(k) · v_k` with `v_0 = start`, `v_{k+1} = v_k ∘ P`.
fn poisson_sum<T: Scalar>(
    u: &Uniformized<T>,
    forward: bool,
    start: Vec<T>,
    fg: &FoxGlynnWeights<T>,
) -> (Vec<T>, usize) {
    let n = start.len();
    let mut acc = vec![T::zero(); n];
    let mut v = start;
    let mut tmp = vec![T::zero(); n];
    let mut iterations = 0;
    for k in 0..=fg.right {
        if k >= fg.left {
            let w = fg.weights[k - fg.left] / fg.total_weight;
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += w * *x);
        }
        if k < fg.right {
            u.step(forward, &v, &mut tmp);
            std::mem::swap(&mut v, &mut tmp);
            iterations += 1;
        }
    }
    (acc, iterations)
}

/// Distribution at time `t` from `init`.
pub fn transient_distribution<T: Scalar>(
    ctmc: &Ctmc<T>,
    init: &[T],
    t: f64,
    cfg: &UnifConfig,
) -> Result<(Vec<T>, UnifInfo), NumericsError> {
    check_time(t)?;
    check_distribution(init, ctmc.num_states())?;
    let u = Uniformized::new(ctmc, None, cfg, true)?;
    if t == 0.0 {
        return Ok((init.to_vec(), UnifInfo { q: u.q, ..Default::default() }));
    }
    let fg = u.weights(t, cfg)?;
    let (mut out, it) = poisson_sum(&u, true, init.to_vec(), &fg);
    clamp_negative(&mut out)?;
    Ok((out, u.info(&fg, it)))
}

/// Per-state expectation `E_s[b(X_t)]`, i.e. `e^{Qt} b`, where states in
/// `absorbing` have their outgoing transitions removed.
pub fn transient_backward<T: Scalar>(
    ctmc: &Ctmc<T>,
    b: &[T],
    t: f64,
    absorbing: Option<&[bool]>,
    cfg: &UnifConfig,
) -> Result<(Vec<T>, UnifInfo), NumericsError> {
    check_time(t)?;
    let u = Uniformized::new(ctmc, absorbing, cfg, false)?;
    if t == 0.0 {
        return Ok((b.to_vec(), UnifInfo { q: u.q, ..Default::default() }));
    }
    let fg = u.weights(t, cfg)?;
    let (mut out, it) = poisson_sum(&u, false, b.to_vec(), &fg);
    clamp_negative(&mut out)?;
    Ok((out, u.info(&fg, it)))
}

/// `c_k = P(N > k) / q` for `k` in `0..=right`, from the window weights.
fn cumulative_coefficients<T: Scalar>(fg: &FoxGlynnWeights<T>, q: f64) -> Vec<T> {
    let mut c = vec![T::zero(); fg.right + 1];
    let mut tail = T::zero();
    for k in (0..fg.right).rev() {
        tail += fg.probability(k + 1);
        c[k] = tail;
    }
    let inv_q = T::lit(1.0 / q);
    c.iter_mut().for_each(|x| *x *= inv_q);
    c
}

fn cumulative_sum<T: Scalar>(
    u: &Uniformized<T>,
    forward: bool,
    start: Vec<T>,
    coeff: &[T],
    mut visit: impl FnMut(T, &[T]),
) -> usize {
    let mut v = start;
    let mut tmp = vec![T::zero(); v.len()];
    let mut iterations = 0;
    for (k, &c) in coeff.iter().enumerate() {
        visit(c, &v);
        if k + 1 < coeff.len() {
            u.step(forward, &v, &mut tmp);
            std::mem::swap(&mut v, &mut tmp);
            iterations += 1;
        }
    }
    iterations
}

/// Expected reward accumulated over `[0, t]` from `init`, where `rho` is
/// the per-state reward rate.
pub fn cumulative_reward<T: Scalar>(
    ctmc: &Ctmc<T>,
    init: &[T],
    rho: &[T],
    t: f64,
    cfg: &UnifConfig,
) -> Result<(T, UnifInfo), NumericsError> {
    check_time(t)?;
    check_distribution(init, ctmc.num_states())?;
    let u = Uniformized::new(ctmc, None, cfg, true)?;
    if t == 0.0 {
        return Ok((T::zero(), UnifInfo { q: u.q, ..Default::default() }));
    }
    let fg = u.weights(t, cfg)?;
    let coeff = cumulative_coefficients(&fg, u.q);
    let mut total = T::zero();
    let it = cumulative_sum(&u, true, init.to_vec(), &coeff, |c, v| {
        if c != T::zero() {
            total += c * v.iter().zip(rho).map(|(&p, &r)| p * r).sum::<T>();
        }
    });
    Ok((total, u.info(&fg, it)))
}

/// Per-state expected reward accumulated over `[0, t]`.
pub fn cumulative_reward_backward<T: Scalar>(
    ctmc: &Ctmc<T>,
    rho: &[T],
    t: f64,
    cfg: &UnifConfig,
) -> Result<(Vec<T>, UnifInfo), NumericsError> {
    check_time(t)?;
    let u = Uniformized::new(ctmc, None, cfg, false)?;
    let n = ctmc.num_states();
    if t == 0.0 {
        return Ok((vec![T::zero(); n], UnifInfo { q: u.q, ..Default::default() }));
    }
    let fg = u.weights(t, cfg)?;
    let coeff = cumulative_coefficients(&fg, u.q);
    let mut acc = vec![T::zero(); n];
    let it = cumulative_sum(&u, false, rho.to_vec(), &coeff, |c, v| {
        if c != T::zero() {
            acc.iter_mut().zip(v).for_each(|(a, &x)| *a += c * x);
        }
    });
    clamp_negative(&mut acc)?;
    Ok((acc, u.info(&fg, it)))
}
