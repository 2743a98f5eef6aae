//! Deviation measures between sampled trajectories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulation::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectories have {0} and {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample {index} is at t = {a} in one trajectory and t = {b} in the other")]
    TimeMismatch { index: usize, a: f64, b: f64 },
    #[error("trajectories have {0} and {1} channels")]
    ChannelMismatch(usize, usize),
}

/// Deviation of a trajectory from a reference, sup-norm over samples and channels.
///
/// Relative values divide by the reference's largest magnitude over the same samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub max_abs: f64,
    pub max_rel: f64,
    /// Relative deviation restricted to samples with `t >= from_time`.
    pub steady_rel: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Compares row-major samples `a` against the reference `b` on a common time grid.
pub fn compare_rows(times_a: &[f64], a: &[Vec<f64>], times_b: &[f64], b: &[Vec<f64>], from_time: f64) -> Result<Deviation, MetricsError> {
    if times_a.len() != times_b.len() || a.len() != times_a.len() || b.len() != times_b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let mut max_abs = 0.0f64;
    let mut ref_max = 0.0f64;
    let mut steady_abs = 0.0f64;
    let mut steady_ref = 0.0f64;
    for (index, ((&ta, &tb), (ra, rb))) in times_a.iter().zip(times_b).zip(a.iter().zip(b)).enumerate() {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(tb.abs()).max(1.0) {
            return Err(MetricsError::TimeMismatch { index, a: ta, b: tb });
        }
        if ra.len() != rb.len() {
            return Err(MetricsError::ChannelMismatch(ra.len(), rb.len()));
        }
        let diff = ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let mag = rb.iter().map(|y| y.abs()).fold(0.0, f64::max);
        max_abs = max_abs.max(diff);
        ref_max = ref_max.max(mag);
        if tb >= from_time {
            steady_abs = steady_abs.max(diff);
            steady_ref = steady_ref.max(mag);
        }
    }
    Ok(Deviation {
        max_abs,
        max_rel: ratio(max_abs, ref_max),
        steady_rel: ratio(steady_abs, steady_ref),
    })
}

/// Boundary-injection deviation of `a` from the reference `b`.
pub fn compare_injections(a: &Trajectory, b: &Trajectory, from_time: f64) -> Result<Deviation, MetricsError> {
    compare_rows(&a.times, &a.i1_rows(), &b.times, &b.i1_rows(), from_time)
}

/// `max |a - b| / max |b|` over all injection samples.
pub fn relative_injection_error(a: &Trajectory, b: &Trajectory) -> Result<f64, MetricsError> {
    Ok(compare_injections(a, b, f64::INFINITY)?.max_rel)
}
