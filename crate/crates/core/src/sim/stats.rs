//! Estimators computed from a [`TraceStats`].

use super::TraceStats;
use crate::{AoiError, Result};

/// Minimum number of completed inter-departure cycles for renewal estimates.
pub const MIN_CYCLES: usize = 100;

/// Time-average AoI with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiEstimate {
    pub mean: f64,
    /// NaN when the trace has fewer than 20 batches.
    pub stderr: f64,
    pub batches: usize,
}

/// Sample counterparts of the renewal moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRenewal {
    pub p_fail: f64,
    pub e_s: f64,
    pub e_s2: f64,
    pub e_x: f64,
    pub e_x2: f64,
    pub e_y: f64,
    pub e_y2: f64,
    pub e_s_prev_y: f64,
    pub se_s: f64,
    pub se_x: f64,
    pub se_y: f64,
    pub cycles: usize,
}

fn mean_and_se<I: Iterator<Item = f64> + Clone>(values: I) -> (f64, f64, f64) {
    let (n, sum, sum2) = values.fold((0usize, 0.0, 0.0), |(n, s, s2), v| (n + 1, s + v, s2 + v * v));
    let n_f = n as f64;
    let mean = sum / n_f;
    let second = sum2 / n_f;
    let var = if n > 1 { ((sum2 - n_f * mean * mean) / (n_f - 1.0)).max(0.0) } else { f64::NAN };
    (mean, second, (var / n_f).sqrt())
}

pub fn empirical_renewal(stats: &TraceStats) -> Result<EmpiricalRenewal> {
    let cycles = stats.inter_departures.len();
    if cycles < MIN_CYCLES {
        return Err(AoiError::InsufficientCycles { needed: MIN_CYCLES, available: cycles });
    }
    let (e_s, e_s2, se_s) = mean_and_se(stats.service_delays.iter().copied());
    let (e_x, e_x2, se_x) = mean_and_se(stats.frame_gaps.iter().map(|&x| x as f64));
    let (e_y, e_y2, se_y) = mean_and_se(stats.inter_departures.iter().copied());
    let cross =
        stats.service_delays.iter().zip(&stats.inter_departures).map(|(s, y)| s * y).sum::<f64>() / cycles as f64;
    Ok(EmpiricalRenewal {
        p_fail: 1.0 - stats.tagged_deliveries as f64 / stats.frames_run as f64,
        e_s,
        e_s2,
        e_x,
        e_x2,
        e_y,
        e_y2,
        e_s_prev_y: cross,
        se_s,
        se_x,
        se_y,
        cycles,
    })
}

pub fn empirical_aoi(stats: &TraceStats) -> Result<AoiEstimate> {
    if stats.elapsed.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(AoiError::InvalidConfig("trace has no elapsed time".into()));
    }
    let mean = stats.aoi_time_integral / stats.elapsed;
    let batches = stats.batch_integrals.len();
    let stderr = if batches >= 20 {
        let (_, _, se) = mean_and_se(stats.batch_integrals.iter().zip(&stats.batch_durations).map(|(i, d)| i / d));
        se
    } else {
        f64::NAN
    };
    Ok(AoiEstimate { mean, stderr, batches })
}
