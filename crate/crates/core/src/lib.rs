//! Continuous-time self-appraisal dynamics on switching interaction networks.
//!
//! Each agent `i` carries a self-weight `x_i` on the probability simplex and
//! evolves as
//!
//! ```text
//! dx_i/dt = -(1 - x_i) x_i + sum_j c_ji (1 - x_j) x_j
//! ```
//!
//! where `C(t)` is a piecewise-constant, zero-diagonal row-stochastic matrix.
//! The crate simulates the flow, checks the standing assumptions on a
//! switching schedule and produces an explicit exponential rate certificate
//! for the spread `V = h - l` when those assumptions hold.

pub mod certificate;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod integrator;
pub mod matrix;
pub mod scenarios;
pub mod state;
pub mod switching;

pub use certificate::{
    certificate, certificate_from_run, check_envelope, EnvelopeReport, RateCertificate,
};
pub use dynamics::{equilibrium_fixed, opinion_rhs, rhs, spread_root, w_matrix};
pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use integrator::{integrate, IntegratorConfig, Trajectory};
pub use matrix::InteractionMatrix;
pub use scenarios::{run_scenario, Scenario};
pub use state::{AppraisalState, Extremes};
pub use switching::{Segment, SwitchingSchedule};
