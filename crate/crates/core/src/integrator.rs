//! Fixed-step RK4 integration of the switched dynamics.
//!
//! Each dwell interval `[t_k, t_{k+1})` is cut into `ceil(tau_k / max_step)`
//! equal steps, so every switch instant is hit exactly and no step straddles a
//! matrix change. Conservation of `sum(x)`, simplex membership, monotonicity of
//! the extremes and the onset of strict positivity are tracked along the way.

use serde::Serialize;

use crate::dynamics::rhs_into;
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;
use crate::state::{AppraisalState, Extremes};
use crate::switching::SwitchingSchedule;

pub const DEFAULT_MAX_STEP: f64 = 1e-3;
pub const DEFAULT_STATE_TOL: f64 = 1e-8;
/// Entries above this count as strictly positive.
pub const POSITIVITY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub max_step: f64,
    /// Absolute end time.
    pub horizon: f64,
    /// Record every `sample_stride`-th step (switch instants are always recorded).
    pub sample_stride: usize,
    pub state_tol: f64,
}

impl IntegratorConfig {
    /// Default step and tolerance, with a stride giving about ten samples per
    /// shortest dwell.
    pub fn for_schedule(schedule: &SwitchingSchedule, horizon: f64) -> Self {
        Self::with_step(schedule, horizon, DEFAULT_MAX_STEP)
    }

    pub fn with_step(schedule: &SwitchingSchedule, horizon: f64, max_step: f64) -> Self {
        let steps_per_dwell = (schedule.dwell_bounds().lower / max_step).floor();
        let sample_stride = ((steps_per_dwell / 10.0).floor() as usize).max(1);
        Self {
            max_step,
            horizon,
            sample_stride,
            state_tol: DEFAULT_STATE_TOL,
        }
    }

    fn validate(&self, schedule: &SwitchingSchedule) -> Result<()> {
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "max_step must be positive, got {}",
                self.max_step
            )));
        }
        let min_dwell = schedule.dwell_bounds().lower;
        if self.max_step > min_dwell {
            return Err(Error::InvalidConfig(format!(
                "max_step {} exceeds the shortest dwell {}",
                self.max_step, min_dwell
            )));
        }
        if !(self.horizon > schedule.t0() && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must exceed the start time {}",
                self.horizon,
                schedule.t0()
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be >= 1".into()));
        }
        if !(self.state_tol > 0.0) {
            return Err(Error::InvalidTolerance(self.state_tol));
        }
        if let Some(end) = schedule.end_time() {
            if self.horizon > end {
                return Err(Error::OutOfHorizon {
                    t: self.horizon,
                    start: schedule.t0(),
                    end,
                });
            }
        }
        Ok(())
    }
}

/// Scratch buffers for allocation-free RK4 steps.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// One classical RK4 step of size `h` under the fixed matrix `c`.
    pub fn step(&mut self, c: &InteractionMatrix, x: &mut [f64], h: f64) {
        let n = x.len();
        rhs_into(c, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        rhs_into(c, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        rhs_into(c, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        rhs_into(c, &self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub extremes: Extremes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    /// Largest `|sum(x) - 1|` seen after any step.
    pub max_conservation_residual: f64,
    /// Largest excursion outside `[0, 1]` seen after any step, before clamping.
    pub max_simplex_violation: f64,
    /// Largest increase of `h` between consecutive samples.
    pub h_increase_max: f64,
    /// Largest decrease of `l` between consecutive samples.
    pub l_decrease_max: f64,
    /// First sample time with every entry above [`POSITIVITY_THRESHOLD`].
    pub positivity_time: Option<f64>,
    /// Entries of the initial state above [`POSITIVITY_THRESHOLD`].
    pub initial_support: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub monitors: MonitorReport,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.samples[0].x.len()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn start_time(&self) -> f64 {
        self.first().t
    }

    pub fn end_time(&self) -> f64 {
        self.last().t
    }

    /// The sample recorded at time `t`, allowing for rounding in `t`.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        let idx = self.samples.partition_point(|s| s.t < t);
        let tol = 1e-9 * t.abs().max(1.0);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.samples.get(i))
            .filter(|s| (s.t - t).abs() <= tol)
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// Samples with `t >= from`.
    pub fn since(&self, from: f64) -> &[Sample] {
        let idx = self.samples.partition_point(|s| s.t < from);
        &self.samples[idx..]
    }

    /// Earliest sample time at which every entry exceeds `threshold`.
    pub fn first_positivity_time(&self, threshold: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.x.iter().all(|&v| v > threshold))
            .map(|s| s.t)
    }
}

pub fn extremes(x: &[f64]) -> Extremes {
    Extremes::of(x)
}

/// Earliest strictly positive sample using the default threshold.
pub fn first_positivity_time(traj: &Trajectory) -> Option<f64> {
    traj.first_positivity_time(POSITIVITY_THRESHOLD)
}

/// Integrates from `x0` at the schedule's start time up to `cfg.horizon`.
pub fn integrate(
    schedule: &SwitchingSchedule,
    x0: &AppraisalState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate(schedule)?;
    let n = schedule.n();
    if x0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.n(),
        });
    }

    let mut x = x0.x().to_vec();
    let mut ws = Rk4Workspace::new(n);
    let t_start = schedule.t0();
    let first = Sample {
        t: t_start,
        extremes: Extremes::of(&x),
        x: x.clone(),
    };
    let mut monitors = MonitorReport {
        max_conservation_residual: (x.iter().sum::<f64>() - 1.0).abs(),
        max_simplex_violation: 0.0,
        h_increase_max: 0.0,
        l_decrease_max: 0.0,
        positivity_time: x
            .iter()
            .all(|&v| v > POSITIVITY_THRESHOLD)
            .then_some(t_start),
        initial_support: x0.support_size(POSITIVITY_THRESHOLD),
        steps: 0,
    };
    let mut samples = vec![first];

    let mut k = 0;
    loop {
        let seg = schedule.segment(k)?;
        let end = seg.end.min(cfg.horizon);
        let span = end - seg.start;
        if span <= 1e-12 * end.abs().max(1.0) {
            break;
        }
        let steps = ((span / cfg.max_step) - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for j in 1..=steps {
            ws.step(seg.matrix, &mut x, h);
            monitors.steps += 1;
            let t = if j == steps {
                end
            } else {
                seg.start + j as f64 * h
            };

            let sum: f64 = x.iter().sum();
            monitors.max_conservation_residual =
                monitors.max_conservation_residual.max((sum - 1.0).abs());
            let violation = x.iter().fold(0.0f64, |m, &v| m.max(-v).max(v - 1.0));
            monitors.max_simplex_violation = monitors.max_simplex_violation.max(violation);
            if violation > cfg.state_tol || !sum.is_finite() {
                return Err(Error::SimplexBlowup { t, violation });
            }
            for v in x.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }

            if j % cfg.sample_stride == 0 || j == steps {
                let ext = Extremes::of(&x);
                let prev = samples.last().expect("nonempty").extremes;
                monitors.h_increase_max = monitors.h_increase_max.max(ext.h - prev.h);
                monitors.l_decrease_max = monitors.l_decrease_max.max(prev.l - ext.l);
                if monitors.positivity_time.is_none() && ext.l > POSITIVITY_THRESHOLD {
                    monitors.positivity_time = Some(t);
                }
                samples.push(Sample {
                    t,
                    x: x.clone(),
                    extremes: ext,
                });
            }
        }
        if seg.end >= cfg.horizon {
            break;
        }
        k += 1;
    }

    Ok(Trajectory { samples, monitors })
}
