//! Exponential convergence-rate certificate for doubly stochastic schedules.
//!
//! With `n` individuals, window `B`, dwell bounds `tau_lo <= tau_k <= tau_hi`,
//! weight floor `gamma` and `l0` the smallest appraisal once the state is
//! strictly positive:
//!
//! ```text
//! alpha  = exp(-tau_hi * B * (n - 1) * (1 - 2 l0))
//! mu     = alpha * gamma * (1 - exp(-tau_lo * l0))
//! lambda = ln(1 / (1 - alpha mu^(n-1))) / (B tau_hi (n - 1))
//! V(t)  <= (1 - alpha mu^(n-1))^(-(1 + 2B(n-1)) / (B(n-1))) exp(-lambda t) V(t0)
//! ```
//!
//! The same `alpha`, `mu` with `l0 = l(t_k0)` bound the contraction of the
//! spread over `(n - 1) B` consecutive segments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{Trajectory, POSITIVITY_THRESHOLD};
use crate::matrix::DEFAULT_TOL;
use crate::state::AppraisalState;
use crate::switching::SwitchingSchedule;

/// Below this the contraction per window rounds away in double precision.
const NEAR_VACUOUS: f64 = 1e-300;

/// The unchecked closed-form quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub alpha: f64,
    pub mu: f64,
    /// `alpha * mu^(n-1)`, the guaranteed relative decrease per window.
    pub contraction: f64,
    pub lambda: f64,
    pub prefactor: f64,
}

impl RateTerms {
    /// Evaluates the formulas without checking their hypotheses.
    pub fn evaluate(
        n: usize,
        window: usize,
        tau_lower: f64,
        tau_upper: f64,
        gamma: f64,
        l0: f64,
    ) -> Self {
        let span = (window * (n - 1)) as f64;
        let alpha = (-tau_upper * span * (1.0 - 2.0 * l0)).exp();
        let mu = alpha * gamma * -(-tau_lower * l0).exp_m1();
        let contraction = alpha * mu.powi(n as i32 - 1);
        // ln(1 / (1 - eps)) = -ln_1p(-eps), exact for tiny eps.
        let log_factor = -(-contraction).ln_1p();
        let lambda = log_factor / (tau_upper * span);
        let exponent = (1.0 + 2.0 * span) / span;
        let prefactor = (exponent * log_factor).exp();
        Self {
            alpha,
            mu,
            contraction,
            lambda,
            prefactor,
        }
    }

    /// `1 - alpha mu^(n-1)`.
    pub fn window_factor(&self) -> f64 {
        1.0 - self.contraction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCertificate {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "B")]
    pub window: usize,
    pub tau_upper: f64,
    pub tau_lower: f64,
    pub gamma: f64,
    pub l0: f64,
    pub alpha: f64,
    pub mu: f64,
    pub lambda: f64,
    pub prefactor: f64,
    /// Set when `alpha mu^(n-1)` underflows; the bound is then essentially `V(t0)`.
    pub near_vacuous: bool,
}

impl RateCertificate {
    pub fn terms(&self) -> RateTerms {
        RateTerms::evaluate(
            self.n,
            self.window,
            self.tau_lower,
            self.tau_upper,
            self.gamma,
            self.l0,
        )
    }

    /// Time covered by one contraction window, `B tau_hi (n - 1)`.
    pub fn window_duration(&self) -> f64 {
        (self.window * (self.n - 1)) as f64 * self.tau_upper
    }

    /// Envelope `prefactor * exp(-lambda t) * v0`, with `t` measured from `t0 = 0`.
    pub fn bound_at(&self, v0: f64, t: f64) -> f64 {
        self.prefactor * (-self.lambda * t).exp() * v0
    }
}

/// Builds a certificate after checking every hypothesis on the inputs.
pub fn certificate(
    n: usize,
    m: usize,
    window: usize,
    tau_lower: f64,
    tau_upper: f64,
    gamma: f64,
    l0: f64,
) -> Result<RateCertificate> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    if n < 3 {
        return bad(format!("n = {n}; the rate bound needs n >= 3"));
    }
    if !(2..=n).contains(&m) {
        return bad(format!("m = {m} must lie in [2, {n}]"));
    }
    if window == 0 {
        return bad("B must be at least 1".into());
    }
    if !(tau_lower > 0.0 && tau_lower <= tau_upper && tau_upper.is_finite()) {
        return bad(format!(
            "dwell bounds must satisfy 0 < {tau_lower} <= {tau_upper}"
        ));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return bad(format!("gamma = {gamma} must lie in (0, 1]"));
    }
    let cap = 1.0 / n as f64;
    // l0 is read off a numerically integrated state; allow rounding above 1/n.
    if !(l0 > 0.0 && l0 <= cap + 1e-12) {
        return bad(format!("l0 = {l0} must lie in (0, 1/{n}]"));
    }
    let l0 = l0.min(cap);

    let terms = RateTerms::evaluate(n, window, tau_lower, tau_upper, gamma, l0);
    Ok(RateCertificate {
        n,
        m,
        window,
        tau_upper,
        tau_lower,
        gamma,
        l0,
        alpha: terms.alpha,
        mu: terms.mu,
        lambda: terms.lambda,
        prefactor: terms.prefactor,
        near_vacuous: terms.contraction < NEAR_VACUOUS,
    })
}

/// Reads `n`, `m`, `gamma`, dwell bounds and `l(t_{(n-m)B})` from a schedule
/// and a simulated run, then delegates to [`certificate`].
pub fn certificate_from_run(
    schedule: &SwitchingSchedule,
    x0: &AppraisalState,
    window: usize,
    trajectory: &Trajectory,
) -> Result<RateCertificate> {
    let gamma = schedule
        .verify_weights(DEFAULT_TOL)
        .map_err(|e| Error::AssumptionViolated(e.to_string()))?;
    if !schedule.verify_connectivity(window) {
        return Err(Error::AssumptionViolated(format!(
            "union graphs over windows of {window} segments are not all strongly connected"
        )));
    }
    let n = schedule.n();
    let m = x0.support_size(POSITIVITY_THRESHOLD);
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "initial state has {m} nonzero entries; at least 2 are required"
        )));
    }
    let k = (n - m) * window;
    let t_k = schedule.switch_time(k)?;
    let sample = trajectory
        .sample_at(t_k)
        .ok_or(Error::InsufficientHorizon {
            required: t_k,
            end: trajectory.end_time(),
        })?;
    let bounds = schedule.dwell_bounds();
    certificate(
        n,
        m,
        window,
        bounds.lower,
        bounds.upper,
        gamma,
        sample.extremes.l,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub assumptions_met: bool,
    /// `max_t V(t) - bound(t)`; nonpositive when the envelope holds.
    pub max_violation: f64,
    /// Samples exceeding the envelope by more than `slack`.
    pub violations: usize,
    pub slack: f64,
    pub lambda: f64,
    /// Negated least-squares slope of `ln V` on the tail, if measurable.
    pub empirical_rate: Option<f64>,
    pub near_vacuous: bool,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.assumptions_met && self.violations == 0
    }

    pub fn is_conservative(&self) -> bool {
        self.empirical_rate.is_some_and(|r| r >= self.lambda)
    }
}

/// Floor below which `ln V` is dominated by rounding.
pub const LOG_V_FLOOR: f64 = 1e-10;

/// Compares the sampled spread `V(t)` with the certified envelope.
///
/// Pass `assumptions_met = false` for schedules outside the standing
/// hypotheses; violations are still counted but the report is flagged.
pub fn check_envelope(
    cert: &RateCertificate,
    trajectory: &Trajectory,
    assumptions_met: bool,
    slack: f64,
) -> EnvelopeReport {
    let v0 = trajectory.first().extremes.v;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for s in &trajectory.samples {
        let excess = s.extremes.v - cert.bound_at(v0, s.t);
        max_violation = max_violation.max(excess);
        if excess > slack {
            violations += 1;
        }
    }
    EnvelopeReport {
        assumptions_met,
        max_violation,
        violations,
        slack,
        lambda: cert.lambda,
        empirical_rate: empirical_decay_rate(trajectory),
        near_vacuous: cert.near_vacuous,
    }
}

/// Fits `ln V(t) ~ a - r t` over the later half of the samples with
/// `V >= LOG_V_FLOOR` and returns `r`.
pub fn empirical_decay_rate(trajectory: &Trajectory) -> Option<f64> {
    let usable: Vec<(f64, f64)> = trajectory
        .samples
        .iter()
        .filter(|s| s.extremes.v >= LOG_V_FLOOR)
        .map(|s| (s.t, s.extremes.v.ln()))
        .collect();
    if usable.len() < 4 {
        return None;
    }
    let tail = &usable[usable.len() / 2..];
    let k = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = tail.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = tail.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Outcome of the per-window contraction check starting at segment `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionCheck {
    pub k0: usize,
    pub v_start: f64,
    pub v_end: f64,
    pub factor: f64,
}

impl ContractionCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.v_end <= self.factor * self.v_start + slack
    }
}

/// Checks `V(t_{k0 + (n-1)B}) <= (1 - alpha mu^(n-1)) V(t_k0)` with `alpha`,
/// `mu` evaluated at `l(t_k0)`.
pub fn check_contraction(
    schedule: &SwitchingSchedule,
    trajectory: &Trajectory,
    window: usize,
    gamma: f64,
    k0: usize,
) -> Result<ContractionCheck> {
    let n = schedule.n();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} < 3")));
    }
    let t_start = schedule.switch_time(k0)?;
    let t_end = schedule.switch_time(k0 + (n - 1) * window)?;
    let missing = |t| Error::InsufficientHorizon {
        required: t,
        end: trajectory.end_time(),
    };
    let start = trajectory
        .sample_at(t_start)
        .ok_or_else(|| missing(t_start))?;
    let end = trajectory.sample_at(t_end).ok_or_else(|| missing(t_end))?;
    if !(start.extremes.l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "state at t_{k0} = {t_start} is not strictly positive"
        )));
    }
    let bounds = schedule.dwell_bounds();
    let terms = RateTerms::evaluate(
        n,
        window,
        bounds.lower,
        bounds.upper,
        gamma,
        start.extremes.l.min(1.0 / n as f64),
    );
    Ok(ContractionCheck {
        k0,
        v_start: start.extremes.v,
        v_end: end.extremes.v,
        factor: terms.window_factor(),
    })
}
