//! Closed forms for two SNR levels with one slot per frame, large-population
//! asymptotes, and grid search over the transmission probability.

use rayon::prelude::*;

use crate::markov::analyze;
use crate::model::{GenerationModel, Scheme, SystemConfig, TxPower};
use crate::sim::{empirical_aoi, simulate};
use crate::{AoiError, Real, Result};

/// Root of `g(η) = (1 - η/2) e^{-η/2} + (1 - η²/2) e^{-η}` on `[1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSolution<T> {
    pub eta: T,
    pub residual: T,
    pub iterations: usize,
}

/// The function whose root fixes the optimal NOMA load.
pub fn eta_function<T: Real>(eta: T) -> T {
    let half = T::lit(0.5);
    (T::one() - half * eta) * (-half * eta).exp() + (T::one() - half * eta * eta) * (-eta).exp()
}

/// Bisection on `[1, 2]` until the residual drops below `1e-12`, the bracket
/// stops shrinking, or 200 iterations pass.
pub fn solve_eta<T: Real>() -> EtaSolution<T> {
    let (mut lo, mut hi) = (T::one(), T::lit(2.0));
    let mut g_lo = eta_function(lo);
    let tol = T::lit(1e-12);
    let mut iterations = 0;
    let mut mid = lo;
    let mut g_mid = g_lo;
    while iterations < 200 {
        iterations += 1;
        mid = lo + (hi - lo) * T::lit(0.5);
        g_mid = eta_function(mid);
        if g_mid.abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if (g_mid > T::zero()) == (g_lo > T::zero()) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    EtaSolution { eta: mid, residual: g_mid, iterations }
}

/// `f(P_TX)`: probability the tagged user delivers in a single-slot frame with
/// two levels, at high SNR. `(1 - ptx)^(M-2)` follows the `0^0 = 1` convention.
pub fn special_case_success<T: Real>(ptx: T, users: usize) -> Result<T> {
    if users < 2 {
        return Err(AoiError::InvalidConfig(format!("the two-level closed form needs M >= 2, got {users}")));
    }
    if !(ptx >= T::zero() && ptx <= T::one()) {
        return Err(AoiError::InvalidConfig(format!("ptx = {ptx} is not a probability")));
    }
    let x = ptx * T::lit(0.5);
    let m1 = T::count(users - 1);
    let first = (T::one() - ptx + x).powi(users as i32 - 1) * x;
    let second = (T::one() - ptx + m1 * x) * (T::one() - ptx).powi(users as i32 - 2) * x;
    Ok(first + second)
}

/// `P_fail = 1 - f(P_TX)` for `K = 2`, `N = 1`.
pub fn special_case_p_fail<T: Real>(ptx: T, users: usize) -> Result<T> {
    Ok(T::one() - special_case_success(ptx, users)?)
}

/// `T (1 + (2 - f) / (2 f))`: NOMA AoI for `K = 2`, `N = 1` at high SNR.
pub fn special_case_aoi_noma<T: Real>(ptx: T, users: usize, slot_duration: T) -> Result<T> {
    let f = special_case_success(ptx, users)?;
    if f <= T::lit(1e-15) {
        return Err(AoiError::Divergent(format!("tagged user never delivers at ptx = {ptx}")));
    }
    let two = T::lit(2.0);
    Ok(slot_duration * (T::one() + (two - f) / (two * f)))
}

/// `η / M` for NOMA (two levels, one slot, high SNR) and `1 / M` for OMA.
pub fn optimal_ptx<T: Real>(scheme: Scheme, users: usize) -> T {
    let m = T::count(users);
    match scheme {
        Scheme::Oma => T::one() / m,
        Scheme::Noma => solve_eta::<T>().eta / m,
    }
}

/// Large-`M` AoI at the optimal load: `N T M e` for OMA and
/// `N T 2 M e^η / (η (e^{η/2} + 1 + η/2))` for NOMA.
pub fn asymptotic_aoi<T: Real>(scheme: Scheme, users: usize, slots: usize, slot_duration: T) -> T {
    let nt_m = T::count(slots) * slot_duration * T::count(users);
    match scheme {
        Scheme::Oma => nt_m * T::E(),
        Scheme::Noma => {
            let eta = solve_eta::<T>().eta;
            let half = eta * T::lit(0.5);
            nt_m * T::lit(2.0) * eta.exp() / (eta * (half.exp() + T::one() + half))
        }
    }
}

/// `2 e^{η-1} / (η (e^{η/2} + 1 + η/2))`
pub fn aoi_ratio_asymptotic<T: Real>() -> T {
    let eta = solve_eta::<T>().eta;
    let half = eta * T::lit(0.5);
    T::lit(2.0) * (eta - T::one()).exp() / (eta * (half.exp() + T::one() + half))
}

/// Exact single-slot OMA AoI at `ptx = 1/M` with the outage ignored:
/// `T + (N T / 2) (2M / (1 - 1/M)^{M-1} - 1)`.
pub fn oma_single_slot_aoi_at_optimum<T: Real>(users: usize, slots: usize, slot_duration: T) -> T {
    let m = T::count(users);
    let nt = T::count(slots) * slot_duration;
    let keep = (T::one() - T::one() / m).powi(users as i32 - 1);
    slot_duration + nt * T::lit(0.5) * (T::lit(2.0) * m / keep - T::one())
}

/// AoI curve over a probability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum<T> {
    pub argmin: T,
    pub min_aoi: T,
    /// `(ptx, aoi)` in grid order; `+inf` where the AoI diverges.
    pub curve: Vec<(T, T)>,
}

/// Evaluates `evaluate` at every grid point (in parallel) and returns the
/// minimiser, ties going to the smaller probability. Points whose evaluation
/// fails record `+inf` rather than aborting the sweep.
pub fn minimize_over_grid<T, F>(grid: &[T], evaluate: F) -> Result<GridOptimum<T>>
where
    T: Real,
    F: Fn(T) -> Result<T> + Sync,
{
    if grid.is_empty() {
        return Err(AoiError::InvalidConfig("empty probability grid".into()));
    }
    if let Some(bad) = grid.iter().find(|&&p| !(p > T::zero() && p <= T::one())) {
        return Err(AoiError::InvalidConfig(format!("grid point {bad} outside (0, 1]")));
    }
    let curve: Vec<(T, T)> =
        grid.par_iter().map(|&p| (p, evaluate(p).ok().filter(|a| a.is_finite()).unwrap_or_else(T::infinity))).collect();
    let mut best = curve[0];
    for &(p, a) in &curve[1..] {
        if a < best.1 || (a == best.1 && p < best.0) {
            best = (p, a);
        }
    }
    if !best.1.is_finite() {
        return Err(AoiError::Divergent("AoI diverges at every grid point".into()));
    }
    Ok(GridOptimum { argmin: best.0, min_aoi: best.1, curve })
}

/// How a grid point is turned into an AoI value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtxEvaluator {
    Analytical,
    Simulated { frames: u64, seed: u64 },
}

/// Average AoI of `config` under its own generation model.
///
/// The analytical chain for NOMA only exists in the high-SNR regime, so a
/// finite power budget is ignored there.
pub fn evaluate_aoi(config: &SystemConfig<f64>, evaluator: PtxEvaluator) -> Result<f64> {
    match evaluator {
        PtxEvaluator::Analytical => {
            let cfg = match config.scheme {
                Scheme::Noma => config.clone().with_power(TxPower::Infinite),
                Scheme::Oma => config.clone(),
            };
            let aoi = analyze(&cfg)?;
            Ok(match cfg.generation {
                GenerationModel::Gar => aoi.gar,
                GenerationModel::Gaw => aoi.gaw,
            })
        }
        PtxEvaluator::Simulated { frames, seed } => Ok(empirical_aoi(&simulate(config, frames, seed)?)?.mean),
    }
}

/// Fixed-probability AoI of `config` over `grid`.
pub fn grid_optimize_ptx(
    config: &SystemConfig<f64>,
    grid: &[f64],
    evaluator: PtxEvaluator,
) -> Result<GridOptimum<f64>> {
    config.validate()?;
    minimize_over_grid(grid, |p| evaluate_aoi(&config.clone().with_fixed_ptx(p), evaluator))
}

/// `step, 2 step, ...` up to and including 1 (within rounding).
pub fn probability_grid<T: Real>(step: T) -> Vec<T> {
    let n = (T::one() / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (1..=n).map(|i| T::count(i) * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eta_value_and_bracket() {
        assert!(eta_function(1.0_f64) > 0.0);
        assert!(eta_function(2.0_f64) < 0.0);
        assert_relative_eq!(eta_function(1.0_f64), 0.5 * (-0.5_f64).exp() + 0.5 * (-1.0_f64).exp());
        assert_relative_eq!(eta_function(2.0_f64), -(-2.0_f64).exp());
        let sol = solve_eta::<f64>();
        assert!((sol.eta - 1.6646).abs() <= 5e-4, "{}", sol.eta);
        assert!(sol.residual.abs() < 1e-10);
        assert_eq!(solve_eta::<f64>(), sol);
        let sol32 = solve_eta::<f32>();
        assert!((sol32.eta - 1.6646).abs() <= 5e-4);
    }

    #[test]
    fn special_case_boundaries() {
        assert_eq!(special_case_p_fail(0.0_f64, 7).unwrap(), 1.0);
        // 0^0 = 1 at ptx = 1, M = 2
        assert_relative_eq!(special_case_p_fail(1.0_f64, 2).unwrap(), 0.5, epsilon = 1e-15);
        assert!(special_case_p_fail(0.5_f64, 1).is_err());
        assert!(matches!(special_case_aoi_noma(0.0_f64, 10, 6.0), Err(AoiError::Divergent(_))));
    }

    #[test]
    fn optimal_probabilities() {
        assert_relative_eq!(optimal_ptx::<f64>(Scheme::Oma, 50), 0.02);
        let p = optimal_ptx::<f64>(Scheme::Noma, 100);
        assert!((p - 0.016646).abs() < 5e-6);
        for m in [4usize, 10, 100, 1000] {
            let p = optimal_ptx::<f64>(Scheme::Noma, m);
            assert!(2.0_f64.sqrt() / m as f64 <= p && p <= 2.0 / m as f64);
        }
    }

    #[test]
    fn asymptotes() {
        let oma = asymptotic_aoi::<f64>(Scheme::Oma, 100, 1, 6.0);
        assert_relative_eq!(oma, 600.0 * std::f64::consts::E, epsilon = 1e-9);
        assert!((oma - 1630.97).abs() < 0.01);
        let noma = asymptotic_aoi::<f64>(Scheme::Noma, 100, 1, 6.0);
        assert_relative_eq!(noma / oma, aoi_ratio_asymptotic::<f64>(), epsilon = 1e-12);
        assert_relative_eq!(asymptotic_aoi::<f64>(Scheme::Noma, 200, 1, 6.0), 2.0 * noma, epsilon = 1e-9);
        assert_relative_eq!(asymptotic_aoi::<f64>(Scheme::Oma, 200, 1, 6.0), 2.0 * oma, epsilon = 1e-9);
        let ratio = aoi_ratio_asymptotic::<f64>();
        assert!((ratio - 0.5653).abs() < 1e-3 && ratio < 0.6);
    }

    #[test]
    fn oma_asymptote_close_to_exact() {
        for m in [8usize, 16, 50, 200] {
            let exact = oma_single_slot_aoi_at_optimum(m, 1, 6.0_f64);
            let approx = asymptotic_aoi::<f64>(Scheme::Oma, m, 1, 6.0);
            assert!((exact - approx).abs() / exact < 0.05, "M={m}: {exact} vs {approx}");
        }
    }

    #[test]
    fn special_case_is_unimodal() {
        let grid = probability_grid(0.001_f64);
        let curve: Vec<f64> = grid.iter().map(|&p| special_case_aoi_noma(p, 20, 6.0).unwrap()).collect();
        let turn = curve.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert!(turn > 0 && turn < curve.len() - 1);
        assert!(curve[..=turn].windows(2).all(|w| w[1] <= w[0]));
        assert!(curve[turn..].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn grid_helpers() {
        let grid = probability_grid(0.005_f64);
        assert_eq!(grid.len(), 200);
        assert_relative_eq!(*grid.last().unwrap(), 1.0, epsilon = 1e-12);
        let one = minimize_over_grid(&[0.3_f64], |p| Ok(p * 10.0)).unwrap();
        assert_eq!(one.argmin, 0.3);
        let tie = minimize_over_grid(&[0.2_f64, 0.4, 0.6], |_| Ok(1.0)).unwrap();
        assert_eq!(tie.argmin, 0.2);
        let partial =
            minimize_over_grid(
                &[0.1_f64, 0.5],
                |p| {
                    if p < 0.2 {
                        Err(AoiError::Divergent("x".into()))
                    } else {
                        Ok(3.0)
                    }
                },
            )
            .unwrap();
        assert!(partial.curve[0].1.is_infinite());
        assert_eq!(partial.argmin, 0.5);
        assert!(minimize_over_grid::<f64, _>(&[], |_| Ok(1.0)).is_err());
        assert!(minimize_over_grid(&[0.0_f64], |_| Ok(1.0)).is_err());
        assert!(minimize_over_grid(&[0.5_f64], |_| Err(AoiError::Divergent("x".into()))).is_err());
    }

    #[test]
    fn grid_search_finds_oma_optimum() {
        let cfg = SystemConfig::oma(8, 1);
        let opt = grid_optimize_ptx(&cfg, &probability_grid(0.005), PtxEvaluator::Analytical).unwrap();
        assert!((opt.argmin - 0.125).abs() <= 0.005 + 1e-12, "{}", opt.argmin);
        assert_eq!(opt.curve.len(), 200);
    }
}
