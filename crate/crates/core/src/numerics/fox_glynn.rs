//! Truncated Poisson weights for uniformization.
//!
//! The window is grown outward from the mode until rigorous geometric
//! bounds on both omitted tails add up to less than the requested
//! accuracy. Weights are stored relative to the mode (mode weight 1) so
//! nothing underflows for large `qt`; `total_weight` is the matching
//! normaliser `1 / pmf(mode)`.

use super::NumericsError;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FoxGlynnWeights<T> {
    pub qt: f64,
    pub left: usize,
    pub right: usize,
    /// `weights[k - left]` is proportional to the Poisson pmf at `k`.
    pub weights: Vec<T>,
    pub total_weight: T,
}

impl<T: Scalar> FoxGlynnWeights<T> {
    /// Poisson probability of `k`, zero outside the window.
    pub fn probability(&self, k: usize) -> T {
        if k < self.left || k > self.right {
            T::zero()
        } else {
            self.weights[k - self.left] / self.total_weight
        }
    }

    /// Window mass `Σ weights / total_weight`.
    pub fn window_mass(&self) -> T {
        self.weights.iter().copied().sum::<T>() / self.total_weight
    }
}

/// Natural log of the Poisson pmf at the mode `m = floor(qt)`.
fn ln_pmf_at_mode(qt: f64, m: usize) -> f64 {
    if m == 0 {
        return -qt;
    }
    if m < 30 {
        let ln_fact: f64 = (2..=m).map(|j| (j as f64).ln()).sum();
        return -qt + m as f64 * qt.ln() - ln_fact;
    }
    // Stirling series for ln m!, rearranged so the large terms cancel
    // analytically: m ln(qt/m) + (m - qt) - ln(2πm)/2 - series
    let mf = m as f64;
    let series = 1.0 / (12.0 * mf) - 1.0 / (360.0 * mf.powi(3)) + 1.0 / (1260.0 * mf.powi(5));
    mf * ((qt - mf) / mf).ln_1p() + (mf - qt) - 0.5 * (2.0 * std::f64::consts::PI * mf).ln() - series
}

/// Poisson(`qt`) weights whose omitted tail mass is below `epsilon`.
pub fn fox_glynn<T: Scalar>(qt: f64, epsilon: f64) -> Result<FoxGlynnWeights<T>, NumericsError> {
    if !(qt >= 0.0 && qt.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!("Poisson parameter {qt} must be finite and >= 0")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(NumericsError::InvalidArgument(format!("accuracy {epsilon} must lie in (0, 1)")));
    }
    if epsilon < 1e-300 {
        return Err(NumericsError::EpsilonTooSmall(epsilon));
    }
    if qt == 0.0 {
        return Ok(FoxGlynnWeights {
            qt,
            left: 0,
            right: 0,
            weights: vec![T::one()],
            total_weight: T::one(),
        });
    }
    let m = qt.floor() as usize;
    let p_mode = ln_pmf_at_mode(qt, m).exp();
    let half = epsilon / 2.0;

    // right side: ratio p(j+1)/p(j) = qt/(j+1)
    let mut right_w = Vec::new();
    let mut w = 1.0f64;
    let mut r = m;
    loop {
        let next = w * qt / (r + 1) as f64;
        let ratio = qt / (r + 2) as f64;
        if ratio < 1.0 && next * p_mode / (1.0 - ratio) < half {
            break;
        }
        w = next;
        r += 1;
        right_w.push(w);
    }
    // left side: ratio p(j-1)/p(j) = j/qt
    let mut left_w = Vec::new();
    let mut w = 1.0f64;
    let mut l = m;
    while l > 0 {
        let prev = w * l as f64 / qt;
        let ratio = (l - 1) as f64 / qt;
        if prev * p_mode / (1.0 - ratio) < half {
            break;
        }
        w = prev;
        l -= 1;
        left_w.push(w);
    }
    let weights: Vec<T> = left_w
        .iter()
        .rev()
        .chain(std::iter::once(&1.0))
        .chain(right_w.iter())
        .map(|&x| T::lit(x))
        .collect();
    let total = T::lit(1.0 / p_mode);
    if !total.is_finite() {
        return Err(NumericsError::EpsilonTooSmall(epsilon));
    }
    Ok(FoxGlynnWeights {
        qt,
        left: l,
        right: r,
        weights,
        total_weight: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Poisson pmf from the defining formula in log space.
    fn pmf(qt: f64, k: usize) -> f64 {
        let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
        (-qt + k as f64 * qt.ln() - ln_fact).exp()
    }

    #[test]
    fn zero_rate_is_a_point_mass() {
        let fg = fox_glynn::<f64>(0.0, 1e-6).unwrap();
        assert_eq!((fg.left, fg.right), (0, 0));
        assert_eq!(fg.weights, vec![1.0]);
        assert_eq!(fg.total_weight, 1.0);
    }

    #[test]
    fn matches_direct_pmf() {
        let fg = fox_glynn::<f64>(10.0, 1e-6).unwrap();
        for k in fg.left..=fg.right {
            assert!((fg.probability(k) - pmf(10.0, k)).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn large_parameter_window() {
        let fg = fox_glynn::<f64>(4000.0, 1e-8).unwrap();
        let mass = fg.window_mass();
        assert!(mass <= 1.0 + 1e-12 && mass >= 1.0 - 1e-8, "{mass}");
        let width = (fg.right - fg.left) as f64;
        assert!(width > 4000f64.sqrt() && width < 20.0 * 4000f64.sqrt(), "{width}");
        assert!((fg.probability(4000) - pmf(4000.0, 4000)).abs() < 1e-12);
    }

    #[test]
    fn very_large_parameter_is_stable() {
        let fg = fox_glynn::<f64>(1e6, 1e-10).unwrap();
        let mass = fg.window_mass();
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        assert!(fg.left <= 1_000_000 && fg.right >= 1_000_000);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fox_glynn::<f64>(-1.0, 1e-6).is_err());
        assert!(fox_glynn::<f64>(1.0, 0.0).is_err());
        assert!(matches!(fox_glynn::<f64>(1.0, 1e-310), Err(NumericsError::EpsilonTooSmall(_))));
    }

    proptest! {
        #[test]
        fn window_brackets_mode_and_mass(qt in 0.0f64..5000.0, e in 3u32..13) {
            let eps = 10f64.powi(-(e as i32));
            let fg = fox_glynn::<f64>(qt, eps).unwrap();
            let mode = qt.floor() as usize;
            prop_assert!(fg.left <= mode && mode <= fg.right);
            let mass = fg.window_mass();
            prop_assert!(mass >= 1.0 - eps && mass <= 1.0 + 1e-12, "mass {}", mass);
        }
    }
}
