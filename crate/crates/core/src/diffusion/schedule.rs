use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-beta noise schedule with a strided inference grid.
///
/// `alpha_bar[t]` is the cumulative signal retention at training timestep
/// `t`, for `t = 0..=T`, with `alpha_bar[0] = 1` (clean data) and
/// `alpha_bar[t] = prod_{s=1..t} (1 - beta_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub train_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    alpha_bar: Vec<f64>,
    /// Inference timesteps, strictly decreasing, ending above zero. The
    /// sampler always finishes with a step to `t = 0`.
    timesteps: Vec<usize>,
}

impl NoiseSchedule {
    pub const DEFAULT_TRAIN_STEPS: usize = 1000;
    pub const DEFAULT_BETA_START: f64 = 1e-4;
    pub const DEFAULT_BETA_END: f64 = 0.02;
    pub const DEFAULT_INFERENCE_STEPS: usize = 50;

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn timesteps(&self) -> &[usize] {
        &self.timesteps
    }

    pub fn inference_steps(&self) -> usize {
        self.timesteps.len()
    }

    /// Grid points including the terminal `0`.
    pub fn grid_with_zero(&self) -> impl Iterator<Item = usize> + '_ {
        self.timesteps.iter().copied().chain(std::iter::once(0))
    }

    pub fn on_grid(&self, t: usize) -> bool {
        t == 0 || self.timesteps.contains(&t)
    }

    /// Nearest grid point (including 0); ties go to the larger timestep.
    pub fn snap(&self, t: usize) -> usize {
        self.grid_with_zero()
            .min_by_key(|&g| (g.abs_diff(t), std::cmp::Reverse(g)))
            .unwrap_or(0)
    }

    /// Grid points at or below `t_start`, descending, ending with 0.
    pub fn descent_from(&self, t_start: usize) -> Vec<usize> {
        self.grid_with_zero().filter(|&g| g <= t_start).collect()
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        make_schedule(
            Self::DEFAULT_TRAIN_STEPS,
            Self::DEFAULT_BETA_START,
            Self::DEFAULT_BETA_END,
            Self::DEFAULT_INFERENCE_STEPS,
        )
        .expect("default schedule parameters are valid")
    }
}

/// Build a linear-beta schedule: `beta_s` runs linearly from `beta_start`
/// (s = 1) to `beta_end` (s = T); inference timesteps are `k * T / steps`
/// for `k = steps..1`.
pub fn make_schedule(
    train_steps: usize,
    beta_start: f64,
    beta_end: f64,
    inference_steps: usize,
) -> Result<NoiseSchedule> {
    if train_steps == 0 {
        return Err(Error::InvalidScheduleParams("T must be positive".into()));
    }
    if !(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0) {
        return Err(Error::InvalidScheduleParams(format!(
            "need 0 < beta_start < beta_end < 1, got {beta_start} and {beta_end}"
        )));
    }
    if inference_steps == 0 || inference_steps > train_steps {
        return Err(Error::InvalidScheduleParams(format!(
            "inference steps must be in 1..={train_steps}, got {inference_steps}"
        )));
    }

    let denom = (train_steps.max(2) - 1) as f64;
    let mut alpha_bar = Vec::with_capacity(train_steps + 1);
    alpha_bar.push(1.0);
    let mut acc = 1.0;
    for i in 0..train_steps {
        let beta = beta_start + (beta_end - beta_start) * i as f64 / denom;
        acc *= 1.0 - beta;
        alpha_bar.push(acc);
    }

    let timesteps = (1..=inference_steps)
        .rev()
        .map(|k| k * train_steps / inference_steps)
        .collect();

    Ok(NoiseSchedule {
        train_steps,
        beta_start,
        beta_end,
        alpha_bar,
        timesteps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_endpoint_matches_reference() {
        let s = NoiseSchedule::default();
        // Independent product: 4.035830e-05 (tests/oracles/reference_values.py).
        let end = s.alpha_bar(1000);
        assert!((end - 4.04e-5).abs() < 0.005e-5, "{end:e}");
        assert!((s.alpha_bar(1000) - 4.035830e-05).abs() < 1e-10);
        assert!(end < 0.01);
        assert!((s.alpha_bar(0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn strictly_decreasing() {
        let s = NoiseSchedule::default();
        assert!(s.alpha_bars().windows(2).all(|w| w[1] < w[0]));
        assert!(s.alpha_bars().iter().all(|&a| a > 0.0 && a <= 1.0));
    }

    #[test]
    fn default_grid() {
        let s = NoiseSchedule::default();
        assert_eq!(s.inference_steps(), 50);
        assert_eq!(s.timesteps()[0], 1000);
        assert_eq!(*s.timesteps().last().unwrap(), 20);
        assert!(s.timesteps().windows(2).all(|w| w[0] - w[1] == 20));
    }

    #[test]
    fn full_grid_when_steps_equal_t() {
        let s = make_schedule(1000, 1e-4, 0.02, 1000).unwrap();
        assert_eq!(s.timesteps(), (1..=1000).rev().collect::<Vec<_>>());
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(
            make_schedule(1, 0.5, 0.5, 1),
            Err(Error::InvalidScheduleParams(_))
        ));
        assert!(make_schedule(10, 0.0, 0.02, 5).is_err());
        assert!(make_schedule(10, 0.1, 1.0, 5).is_err());
        assert!(make_schedule(10, 1e-4, 0.02, 11).is_err());
        assert!(make_schedule(10, 1e-4, 0.02, 0).is_err());
        assert!(make_schedule(0, 1e-4, 0.02, 0).is_err());
    }

    #[test]
    fn snapping() {
        let s = NoiseSchedule::default();
        assert_eq!(s.snap(800), 800);
        assert_eq!(s.snap(809), 800);
        assert_eq!(s.snap(810), 820);
        assert_eq!(s.snap(1), 0);
        assert_eq!(s.snap(5000), 1000);
        assert_eq!(s.descent_from(60), [60, 40, 20, 0]);
    }
}
