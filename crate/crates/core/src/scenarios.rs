//! Scripted experiments with expected outcomes.
//!
//! * `fig1`: alternating a doubly stochastic and a merely row-stochastic
//!   matrix; the state keeps oscillating.
//! * `fig2`: alternating two row-stochastic matrices that share the left
//!   eigenvector `(1/6, 1/3, 1/3, 1/6)`; empirically the state settles at an
//!   interior point. This is an observation only.
//! * `doubly-stochastic`: seeded random periodic schedules of zero-diagonal
//!   doubly stochastic matrices; the state converges to `(1/n) 1`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::certificate::{certificate_from_run, check_envelope, EnvelopeReport, RateCertificate};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::matrix::{InteractionMatrix, DEFAULT_TOL};
use crate::state::AppraisalState;
use crate::switching::SwitchingSchedule;

/// Convergence tolerance shared by the uniform and periodic-settling checks.
pub const CONVERGENCE_TOL: f64 = 1e-6;
pub const DEFAULT_HORIZON: f64 = 200.0;
/// Fixed stand-in for an unspecified random interior initial condition.
pub const DEFAULT_X0: [f64; 4] = [0.4, 0.3, 0.2, 0.1];
pub const FIG_DWELL: f64 = 0.4;
const GENERATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Expectation {
    ConvergeUniform {
        tol: f64,
    },
    ConvergeTo {
        target: Vec<f64>,
        tol: f64,
    },
    /// Tail oscillation amplitude over the last `tail_window` time units
    /// must reach `min_amplitude`.
    NonConvergent {
        tail_window: f64,
        min_amplitude: f64,
    },
    /// Period-to-period displacement at the end stays within `tol` and the
    /// final state keeps `min_vertex_distance` from every vertex.
    ConvergeSomewhere {
        tol: f64,
        min_vertex_distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub schedule: SwitchingSchedule,
    pub x0: AppraisalState,
    #[serde(rename = "B")]
    pub window: usize,
    pub horizon: f64,
    pub expectation: Expectation,
}

impl Scenario {
    pub fn with_initial(mut self, x0: AppraisalState) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// Looks up a scenario by its CLI name.
    pub fn by_name(name: &str, seed: u64) -> Option<Result<Self>> {
        match name {
            "fig1" => Some(Ok(fig1())),
            "fig2" => Some(Ok(fig2())),
            "doubly-stochastic" => Some(doubly_stochastic_scenario(4, 2, seed, (0.2, 0.6))),
            _ => None,
        }
    }
}

pub const SCENARIO_NAMES: [&str; 3] = ["fig1", "fig2", "doubly-stochastic"];

fn matrix(rows: [[f64; 4]; 4]) -> InteractionMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    InteractionMatrix::new(&rows, DEFAULT_TOL).expect("built-in matrix is valid")
}

/// The doubly stochastic ring and the unbalanced chain used by `fig1`.
pub fn fig1_matrices() -> [InteractionMatrix; 2] {
    [
        matrix([
            [0.0, 0.75, 0.0, 0.25],
            [0.25, 0.0, 0.75, 0.0],
            [0.0, 0.25, 0.0, 0.75],
            [0.75, 0.0, 0.25, 0.0],
        ]),
        matrix([
            [0.0, 1.0, 0.0, 0.0],
            [0.5, 0.0, 0.5, 0.0],
            [0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
    ]
}

/// Two row-stochastic matrices with common left eigenvector `(1/6, 1/3, 1/3, 1/6)`.
pub fn fig2_matrices() -> [InteractionMatrix; 2] {
    [
        matrix([
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.5, 0.5, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
        matrix([
            [0.0, 1.0, 0.0, 0.0],
            [0.5, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [0.0, 0.0, 1.0, 0.0],
        ]),
    ]
}

pub const FIG2_LEFT_EIGENVECTOR: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

fn default_x0() -> AppraisalState {
    AppraisalState::on_simplex(DEFAULT_X0.to_vec(), 0.0, DEFAULT_TOL).expect("valid x0")
}

fn alternating(pair: [InteractionMatrix; 2]) -> SwitchingSchedule {
    SwitchingSchedule::cyclic(pair.to_vec(), &[FIG_DWELL, FIG_DWELL]).expect("valid schedule")
}

/// Switching between a doubly stochastic and a row-stochastic matrix every 0.4.
pub fn fig1() -> Scenario {
    Scenario {
        name: "fig1".into(),
        schedule: alternating(fig1_matrices()),
        x0: default_x0(),
        window: 1,
        horizon: DEFAULT_HORIZON,
        expectation: Expectation::NonConvergent {
            tail_window: 20.0,
            min_amplitude: 10.0 * CONVERGENCE_TOL,
        },
    }
}

/// Seeded random interior point of the simplex.
pub fn random_interior(n: usize, seed: u64) -> AppraisalState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = random_simplex_point(&mut rng, n, n);
    AppraisalState::on_simplex(x0, 0.0, DEFAULT_TOL).expect("valid x0")
}

/// Switching between two matrices sharing a left eigenvector, every 0.4.
pub fn fig2() -> Scenario {
    Scenario {
        name: "fig2".into(),
        schedule: alternating(fig2_matrices()),
        x0: default_x0(),
        window: 1,
        horizon: DEFAULT_HORIZON,
        expectation: Expectation::ConvergeSomewhere {
            tol: CONVERGENCE_TOL,
            min_vertex_distance: 0.01,
        },
    }
}

/// Uniformly random derangement of `0..n` (rejection sampling).
pub fn random_derangement<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    assert!(n >= 2, "no derangement of {n} elements");
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        p.shuffle(rng);
        if p.iter().enumerate().all(|(i, &j)| i != j) {
            return p;
        }
    }
}

/// Convex combination of random derangement matrices: zero diagonal and
/// doubly stochastic by construction.
pub fn random_doubly_stochastic<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
) -> Result<InteractionMatrix> {
    let terms = rng.random_range(1..=n);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut rows = vec![vec![0.0; n]; n];
    for w in weights {
        let p = random_derangement(rng, n);
        for (i, &j) in p.iter().enumerate() {
            rows[i][j] += w / total;
        }
    }
    InteractionMatrix::new(&rows, DEFAULT_TOL)
}

/// Zero-diagonal row-stochastic matrix with random support; generally not
/// doubly stochastic.
pub fn random_row_stochastic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<InteractionMatrix> {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        let forced = (i + rng.random_range(1..n)) % n;
        for (j, w) in row.iter_mut().enumerate() {
            if j != i && (j == forced || rng.random_bool(0.5)) {
                *w = rng.random_range(0.05..1.0);
            }
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= s);
    }
    InteractionMatrix::new(&rows, DEFAULT_TOL)
}

/// Random point of the simplex with exactly `m` positive entries at random
/// positions, drawn uniformly on that face.
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Vec<f64> {
    assert!((1..=n).contains(&m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut x = vec![0.0; n];
    let draws: Vec<f64> = (0..m)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e.max(1e-3)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    for (&i, d) in idx.iter().zip(draws) {
        x[i] = d / total;
    }
    x
}

/// Seeded periodic schedule of random doubly stochastic matrices, checked
/// against the weight and connectivity assumptions with the smallest window.
pub fn doubly_stochastic_scenario(
    n: usize,
    period_len: usize,
    seed: u64,
    dwell_range: (f64, f64),
) -> Result<Scenario> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} < 3")));
    }
    if period_len == 0 {
        return Err(Error::InvalidParameter("period length must be >= 1".into()));
    }
    let (lo, hi) = dwell_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dwell range ({lo}, {hi}) is not a positive interval"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATION_ATTEMPTS {
        let pool = (0..period_len)
            .map(|_| random_doubly_stochastic(&mut rng, n))
            .collect::<Result<Vec<_>>>()?;
        let dwells: Vec<f64> = (0..period_len)
            .map(|_| {
                if lo < hi {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect();
        let schedule = SwitchingSchedule::cyclic(pool, &dwells)?;
        if schedule.verify_weights(DEFAULT_TOL).is_err() {
            continue;
        }
        let Some(window) = schedule.smallest_window() else {
            continue;
        };
        let x0 = random_simplex_point(&mut rng, n, n);
        let horizon = DEFAULT_HORIZON.max(10.0 * schedule.period_duration());
        return Ok(Scenario {
            name: "doubly-stochastic".into(),
            schedule,
            x0: AppraisalState::on_simplex(x0, 0.0, DEFAULT_TOL)?,
            window,
            horizon,
            expectation: Expectation::ConvergeUniform {
                tol: CONVERGENCE_TOL,
            },
        });
    }
    Err(Error::GenerationFailed(GENERATION_ATTEMPTS))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub satisfied: bool,
    pub expectation: Expectation,
    pub measurements: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub verdict: Verdict,
    pub certificate: Option<RateCertificate>,
    pub envelope: Option<EnvelopeReport>,
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Sup-norm distance from `x` to the nearest vertex of the simplex.
pub fn vertex_distance(x: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { (1.0 - v).abs() } else { v.abs() })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest sup-norm deviation from the tail mean over `t >= end - window`.
pub fn tail_amplitude(trajectory: &Trajectory, window: f64) -> f64 {
    let tail = trajectory.since(trajectory.end_time() - window);
    let n = trajectory.n();
    let k = tail.len() as f64;
    let mean: Vec<f64> = (0..n)
        .map(|i| tail.iter().map(|s| s.x[i]).sum::<f64>() / k)
        .collect();
    tail.iter()
        .map(|s| sup_dist(&s.x, &mean))
        .fold(0.0, f64::max)
}

pub fn evaluate(scenario: &Scenario, trajectory: &Trajectory) -> Verdict {
    let end = &trajectory.last().x;
    let n = end.len();
    let mut measurements = BTreeMap::new();
    let satisfied = match &scenario.expectation {
        Expectation::ConvergeUniform { tol } => {
            let d = sup_dist(end, &vec![1.0 / n as f64; n]);
            measurements.insert("distance_to_uniform".into(), d);
            d <= *tol
        }
        Expectation::ConvergeTo { target, tol } => {
            let d = sup_dist(end, target);
            measurements.insert("distance_to_target".into(), d);
            d <= *tol
        }
        Expectation::NonConvergent {
            tail_window,
            min_amplitude,
        } => {
            let amp = tail_amplitude(trajectory, *tail_window);
            measurements.insert("tail_amplitude".into(), amp);
            amp >= *min_amplitude
        }
        Expectation::ConvergeSomewhere {
            tol,
            min_vertex_distance,
        } => {
            let back = trajectory.end_time() - scenario.schedule.period_duration();
            let displacement = trajectory
                .sample_at(back)
                .map_or(f64::INFINITY, |s| sup_dist(end, &s.x));
            let vd = vertex_distance(end);
            measurements.insert("period_displacement".into(), displacement);
            measurements.insert("vertex_distance".into(), vd);
            measurements.insert(
                "min_coordinate".into(),
                end.iter().copied().fold(f64::INFINITY, f64::min),
            );
            displacement <= *tol && vd >= *min_vertex_distance
        }
    };
    Verdict {
        satisfied,
        expectation: scenario.expectation.clone(),
        measurements,
    }
}

/// Integrates a scenario, judges its expectation and, when the schedule meets
/// the standing assumptions, attaches the rate certificate and envelope check.
pub fn run_scenario(scenario: &Scenario, cfg: &IntegratorConfig) -> Result<ScenarioRun> {
    let trajectory = integrate(&scenario.schedule, &scenario.x0, cfg)?;
    let verdict = evaluate(scenario, &trajectory);
    let certificate = certificate_from_run(
        &scenario.schedule,
        &scenario.x0,
        scenario.window,
        &trajectory,
    )
    .ok();
    let envelope = certificate
        .as_ref()
        .map(|c| check_envelope(c, &trajectory, true, cfg.state_tol));
    Ok(ScenarioRun {
        trajectory,
        verdict,
        certificate,
        envelope,
    })
}

/// [`run_scenario`] with the default integrator settings and the scenario's horizon.
pub fn run_default(scenario: &Scenario) -> Result<ScenarioRun> {
    let cfg = IntegratorConfig::for_schedule(&scenario.schedule, scenario.horizon);
    run_scenario(scenario, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_violates_only_the_weight_assumption() {
        let s = fig1();
        assert_eq!(
            s.schedule.verify_weights(DEFAULT_TOL),
            Err(Error::NotDoublyStochastic { matrix_index: 1 })
        );
        assert!(s.schedule.verify_connectivity(1));
    }

    #[test]
    fn fig2_matrices_share_left_eigenvector() {
        for c in fig2_matrices() {
            let vc = c.left_mul(&FIG2_LEFT_EIGENVECTOR);
            for (a, b) in vc.iter().zip(FIG2_LEFT_EIGENVECTOR) {
                assert!((a - b).abs() <= 1e-12);
            }
            assert!(!c.is_doubly_stochastic());
        }
        let s = fig2();
        assert!(s.schedule.verify_weights(DEFAULT_TOL).is_err());
        assert!(s.schedule.verify_connectivity(1));
    }

    #[test]
    fn fig2_column_sums() {
        let c = &fig2_matrices()[0];
        let sums: Vec<f64> = (0..4).map(|j| c.column_sum(j)).collect();
        assert_eq!(sums, vec![0.5, 1.5, 1.5, 0.5]);
    }

    #[test]
    fn derangements_have_no_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..8 {
            for _ in 0..50 {
                let p = random_derangement(&mut rng, n);
                assert!(p.iter().enumerate().all(|(i, &j)| i != j));
                let mut sorted = p.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn generated_schedules_satisfy_assumptions() {
        for seed in 0..20 {
            let s = doubly_stochastic_scenario(4, 2, seed, (0.2, 0.6)).unwrap();
            assert!(s.schedule.verify_weights(DEFAULT_TOL).is_ok());
            assert!(s.schedule.verify_connectivity(s.window));
            let b = s.schedule.dwell_bounds();
            assert!(b.lower >= 0.2 && b.upper <= 0.6);
            assert!(s.x0.x().iter().all(|&v| v > 0.0));
            assert!(s.horizon >= 10.0 * s.schedule.period_duration());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = doubly_stochastic_scenario(5, 3, 42, (0.2, 0.6)).unwrap();
        let b = doubly_stochastic_scenario(5, 3, 42, (0.2, 0.6)).unwrap();
        assert_eq!(a, b);
        let c = doubly_stochastic_scenario(5, 3, 43, (0.2, 0.6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(doubly_stochastic_scenario(2, 2, 0, (0.2, 0.6)).is_err());
        assert!(doubly_stochastic_scenario(4, 0, 0, (0.2, 0.6)).is_err());
        assert!(doubly_stochastic_scenario(4, 2, 0, (0.6, 0.2)).is_err());
    }

    #[test]
    fn simplex_points_have_requested_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..=5 {
            let x = random_simplex_point(&mut rng, 5, m);
            assert_eq!(x.iter().filter(|&&v| v > 0.0).count(), m);
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_distance_examples() {
        assert_eq!(vertex_distance(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(vertex_distance(&[0.25; 4]), 0.75);
    }

    #[test]
    fn lookup_by_name() {
        for name in SCENARIO_NAMES {
            assert!(Scenario::by_name(name, 1).unwrap().is_ok());
        }
        assert!(Scenario::by_name("fig3", 1).is_none());
    }
}
