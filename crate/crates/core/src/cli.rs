//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 verdict failure, 2 invalid input, 3 assumptions unmet,
//! 4 numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certificate::{certificate_from_run, check_envelope, EnvelopeReport, RateCertificate};
use crate::dynamics::{equilibrium_fixed, rhs};
use crate::error::Error;
use crate::integrator::{integrate, IntegratorConfig, MonitorReport, Trajectory, DEFAULT_MAX_STEP};
use crate::matrix::{InteractionMatrix, DEFAULT_TOL};
use crate::scenarios::{self, Scenario, Verdict, SCENARIO_NAMES};
use crate::state::AppraisalState;
use crate::switching::{DwellBounds, Segment, SwitchingSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ASSUMPTIONS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

const EXIT_CODES_HELP: &str = "Exit codes: 0 ok, 1 verdict failure, 2 invalid input, \
3 assumptions unmet, 4 numerical failure.";

#[derive(Debug, Parser)]
#[command(
    name = "appraisal",
    version,
    about = "Simulate and certify self-appraisal dynamics on switching networks",
    after_help = EXIT_CODES_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a schedule and emit the trajectory.
    Simulate(RunArgs),
    /// Integrate a schedule and emit its rate certificate and envelope check.
    Certify(RunArgs),
    /// Report the weight, connectivity and dwell assumptions for a schedule.
    CheckAssumptions(CheckArgs),
    /// Run a named built-in scenario (fig1, fig2, doubly-stochastic).
    Scenario(ScenarioArgs),
    /// Find the interior equilibrium for one fixed matrix.
    Equilibrium(EquilibriumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Schedule file: {"n", "matrices", "dwell", optional "x0", "sequence", "periodic", "t0"}.
    pub input: PathBuf,
    /// Absolute end time of the integration.
    #[arg(long, default_value_t = scenarios::DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEP)]
    pub max_step: f64,
    /// Initial state as comma-separated reals; overrides "x0" in the file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Connectivity window in segments; defaults to the smallest one that works.
    #[arg(long = "B")]
    pub window: Option<usize>,
    /// Trajectory output path; the JSON summary then goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Fail with exit code 3 unless all assumptions hold.
    #[arg(long)]
    pub require_assumptions: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(long = "B")]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// One of fig1, fig2, doubly-stochastic.
    pub name: String,
    /// Seed for random schedules; for fig1/fig2 it draws a random interior x0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEP)]
    pub max_step: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    pub input: PathBuf,
    /// Index of the matrix in the file's pool.
    #[arg(long, default_value_t = 0)]
    pub matrix: usize,
    /// Starting point (strictly positive); defaults to the barycenter.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

/// Schedule file contents.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub n: usize,
    /// Row-major `n x n` matrices.
    pub matrices: Vec<Vec<f64>>,
    pub dwell: Dwell,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Matrix index per segment; defaults to the pool order.
    #[serde(default)]
    pub sequence: Option<Vec<usize>>,
    #[serde(default = "default_periodic")]
    pub periodic: bool,
    #[serde(default)]
    pub t0: f64,
}

fn default_periodic() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Dwell {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScheduleFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::Input(format!("schedule file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn pool(&self) -> Result<Vec<InteractionMatrix>, Failure> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(i, m)| {
                InteractionMatrix::from_row_major(self.n, m.clone(), DEFAULT_TOL)
                    .map_err(|e| Failure::Input(format!("matrix {i}: {e}")))
            })
            .collect()
    }

    pub fn schedule(&self) -> Result<SwitchingSchedule, Failure> {
        let pool = self.pool()?;
        let sequence: Vec<usize> = self
            .sequence
            .clone()
            .unwrap_or_else(|| (0..pool.len()).collect());
        let dwells = match &self.dwell {
            Dwell::Scalar(d) => vec![*d; sequence.len()],
            Dwell::List(list) if list.len() == sequence.len() => list.clone(),
            Dwell::List(list) => {
                return Err(Failure::Input(format!(
                    "dwell has {} entries for {} segments",
                    list.len(),
                    sequence.len()
                )))
            }
        };
        let segments = sequence
            .into_iter()
            .zip(dwells)
            .map(|(matrix, dwell)| Segment { dwell, matrix })
            .collect();
        Ok(SwitchingSchedule::new(
            pool,
            segments,
            self.periodic,
            self.t0,
        )?)
    }
}

/// A command outcome other than success, tagged with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Verdict(String),
    Input(String),
    Assumptions(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verdict(_) => EXIT_VERDICT,
            Failure::Input(_) => EXIT_INPUT,
            Failure::Assumptions(_) => EXIT_ASSUMPTIONS,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verdict(m)
            | Failure::Input(m)
            | Failure::Assumptions(m)
            | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::SimplexBlowup { .. }
            | Error::NoConvergence(_)
            | Error::ConvergedToVertex(_)
            | Error::NoFeasibleRoot { .. } => Failure::Numerical(msg),
            Error::AssumptionViolated(_) | Error::NotDoublyStochastic { .. } => {
                Failure::Assumptions(msg)
            }
            _ => Failure::Input(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(format!("json: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCheck {
    pub holds: bool,
    pub gamma: Option<f64>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityCheck {
    pub holds: bool,
    #[serde(rename = "B")]
    pub window: Option<usize>,
    pub smallest_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub n: usize,
    pub segments: usize,
    pub periodic: bool,
    pub doubly_stochastic: WeightCheck,
    pub connectivity: ConnectivityCheck,
    pub dwell_bounds: DwellBounds,
}

impl AssumptionReport {
    /// Checks the schedule, using `window` when given and the smallest
    /// working window otherwise.
    pub fn new(schedule: &SwitchingSchedule, window: Option<usize>) -> Self {
        let (weights_hold, gamma, detail) = match schedule.verify_weights(DEFAULT_TOL) {
            Ok(g) => (true, Some(g), None),
            Err(e) => (false, None, Some(e.to_string())),
        };
        let smallest = schedule.smallest_window();
        let window = window.or(smallest);
        Self {
            n: schedule.n(),
            segments: schedule.period_len(),
            periodic: schedule.is_periodic(),
            doubly_stochastic: WeightCheck {
                holds: weights_hold,
                gamma,
                detail,
            },
            connectivity: ConnectivityCheck {
                holds: window.is_some_and(|b| schedule.verify_connectivity(b)),
                window,
                smallest_window: smallest,
            },
            dwell_bounds: schedule.dwell_bounds(),
        }
    }

    pub fn all_hold(&self) -> bool {
        self.doubly_stochastic.holds && self.connectivity.holds
    }

    pub fn describe(&self) -> String {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        let mut s = format!(
            "doubly stochastic weights: {}",
            mark(self.doubly_stochastic.holds)
        );
        match (self.doubly_stochastic.gamma, &self.doubly_stochastic.detail) {
            (Some(g), _) => s.push_str(&format!(" (gamma = {g})")),
            (None, Some(d)) => s.push_str(&format!(" ({d})")),
            _ => {}
        }
        s.push_str(&format!(
            "\njoint strong connectivity: {}",
            mark(self.connectivity.holds)
        ));
        match self.connectivity.window {
            Some(b) => s.push_str(&format!(" (B = {b})")),
            None => s.push_str(" (no window up to n * segments works)"),
        }
        s.push_str(&format!(
            "\ndwell bounds: [{}, {}]\n",
            self.dwell_bounds.lower, self.dwell_bounds.upper
        ));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub monitors: MonitorReport,
    pub assumptions: AssumptionReport,
    pub certificate: Option<RateCertificate>,
    pub envelope: Option<EnvelopeReport>,
}

/// Parses `args` (including the program name) and runs the command, writing
/// primary output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
                EXIT_INPUT
            } else {
                let _ = out.write_all(rendered.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Certify(a) => cmd_certify(&a, out),
        Command::CheckAssumptions(a) => cmd_check_assumptions(&a, out, err),
        Command::Scenario(a) => cmd_scenario(&a, out),
        Command::Equilibrium(a) => cmd_equilibrium(&a, out),
    };
    let _ = out.flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn initial_state(flag: &Option<Vec<f64>>, file: &ScheduleFile) -> Result<AppraisalState, Failure> {
    let x0 = flag
        .clone()
        .or_else(|| file.x0.clone())
        .ok_or_else(|| Failure::Input("no initial state: pass --x0 or set \"x0\"".into()))?;
    state_from(x0, file.n, file.t0)
}

fn state_from(x0: Vec<f64>, n: usize, t0: f64) -> Result<AppraisalState, Failure> {
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        }
        .into());
    }
    Ok(AppraisalState::on_simplex(x0, t0, DEFAULT_TOL)?)
}

struct Prepared {
    schedule: SwitchingSchedule,
    trajectory: Trajectory,
    assumptions: AssumptionReport,
    certificate: Option<RateCertificate>,
    envelope: Option<EnvelopeReport>,
}

fn prepare(a: &RunArgs) -> Result<Prepared, Failure> {
    let file = ScheduleFile::load(&a.input)?;
    let schedule = file.schedule()?;
    let x0 = initial_state(&a.x0, &file)?;
    let assumptions = AssumptionReport::new(&schedule, a.window);
    if a.require_assumptions && !assumptions.all_hold() {
        return Err(Failure::Assumptions(assumptions.describe()));
    }
    let cfg = IntegratorConfig::with_step(&schedule, a.horizon, a.max_step);
    let trajectory = integrate(&schedule, &x0, &cfg)?;
    let (certificate, envelope) = match (assumptions.all_hold(), assumptions.connectivity.window) {
        (true, Some(b)) => match certificate_from_run(&schedule, &x0, b, &trajectory) {
            Ok(c) => {
                let env = check_envelope(&c, &trajectory, true, cfg.state_tol);
                (Some(c), Some(env))
            }
            Err(_) => (None, None),
        },
        _ => (None, None),
    };
    Ok(Prepared {
        schedule,
        trajectory,
        assumptions,
        certificate,
        envelope,
    })
}

impl Prepared {
    fn summary(&self) -> RunSummary {
        let last = self.trajectory.last();
        RunSummary {
            final_time: last.t,
            final_state: last.x.clone(),
            monitors: self.trajectory.monitors.clone(),
            assumptions: self.assumptions.clone(),
            certificate: self.certificate.clone(),
            envelope: self.envelope.clone(),
        }
    }
}

#[derive(Serialize)]
struct TrajectoryDocument<'a, S: Serialize> {
    summary: &'a S,
    trajectory: &'a Trajectory,
}

/// Writes the trajectory to `--out` (summary JSON to stdout) or, without
/// `--out`, the trajectory alone to stdout (json format embeds the summary).
fn emit<S: Serialize>(
    out: &mut dyn Write,
    path: Option<&Path>,
    format: Format,
    trajectory: &Trajectory,
    certificate: Option<&RateCertificate>,
    summary: &S,
) -> Result<(), Failure> {
    let write_trajectory = |w: &mut dyn Write| -> Result<(), Failure> {
        match format {
            Format::Csv => write_csv(w, trajectory, certificate),
            Format::Json => {
                serde_json::to_writer_pretty(
                    &mut *w,
                    &TrajectoryDocument {
                        summary,
                        trajectory,
                    },
                )?;
                writeln!(w)?;
                Ok(())
            }
        }
    };
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p)?);
            write_trajectory(&mut file)?;
            file.flush()?;
            write_json(out, summary)
        }
        None => write_trajectory(out),
    }
}

fn write_json<S: Serialize + ?Sized>(out: &mut dyn Write, value: &S) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// CSV with header `t,x_1..x_n,h,l,V[,bound]`.
pub fn write_csv(
    w: &mut dyn Write,
    trajectory: &Trajectory,
    certificate: Option<&RateCertificate>,
) -> Result<(), Failure> {
    let n = trajectory.n();
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend(["h", "l", "V"].map(String::from));
    if certificate.is_some() {
        header.push("bound".into());
    }
    writer.write_record(&header)?;
    let v0 = trajectory.first().extremes.v;
    for s in &trajectory.samples {
        let mut row = Vec::with_capacity(header.len());
        row.push(format_float(s.t));
        row.extend(s.x.iter().map(|&v| format_float(v)));
        row.push(format_float(s.extremes.h));
        row.push(format_float(s.extremes.l));
        row.push(format_float(s.extremes.v));
        if let Some(c) = certificate {
            row.push(format_float(c.bound_at(v0, s.t)));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn cmd_simulate(a: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = prepare(a)?;
    emit(
        out,
        a.out.as_deref(),
        a.format,
        &p.trajectory,
        p.certificate.as_ref(),
        &p.summary(),
    )
}

pub fn cmd_certify(a: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = prepare(a)?;
    if !p.assumptions.all_hold() {
        write_json(out, &p.assumptions)?;
        return Err(Failure::Assumptions(p.assumptions.describe()));
    }
    let window = p.assumptions.connectivity.window.unwrap_or(1);
    let certificate = match &p.certificate {
        Some(c) => c.clone(),
        // Reproduce the reason the certificate was skipped.
        None => certificate_from_run(&p.schedule, &p.trajectory_initial()?, window, &p.trajectory)?,
    };
    let envelope = p
        .envelope
        .clone()
        .unwrap_or_else(|| check_envelope(&certificate, &p.trajectory, true, 0.0));
    if let Some(path) = &a.out {
        let mut file = BufWriter::new(File::create(path)?);
        match a.format {
            Format::Csv => write_csv(&mut file, &p.trajectory, Some(&certificate))?,
            Format::Json => write_json(&mut file, &p.trajectory)?,
        }
        file.flush()?;
    }
    #[derive(Serialize)]
    struct CertifyOutput<'a> {
        certificate: &'a RateCertificate,
        envelope: &'a EnvelopeReport,
        assumptions: &'a AssumptionReport,
    }
    write_json(
        out,
        &CertifyOutput {
            certificate: &certificate,
            envelope: &envelope,
            assumptions: &p.assumptions,
        },
    )?;
    if envelope.holds() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!(
            "{} samples exceed the certified envelope (max excess {})",
            envelope.violations, envelope.max_violation
        )))
    }
}

impl Prepared {
    fn trajectory_initial(&self) -> Result<AppraisalState, Failure> {
        let first = self.trajectory.first();
        Ok(AppraisalState::on_simplex(
            first.x.clone(),
            first.t,
            DEFAULT_TOL,
        )?)
    }
}

pub fn cmd_check_assumptions(
    a: &CheckArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let file = ScheduleFile::load(&a.input)?;
    let schedule = file.schedule()?;
    let report = AssumptionReport::new(&schedule, a.window);
    write_json(out, &report)?;
    err.write_all(report.describe().as_bytes())?;
    if report.all_hold() {
        Ok(())
    } else {
        Err(Failure::Assumptions("assumptions do not hold".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub verdict: Verdict,
    pub monitors: MonitorReport,
    pub certificate: Option<RateCertificate>,
    pub envelope: Option<EnvelopeReport>,
}

pub fn cmd_scenario(a: &ScenarioArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut scenario: Scenario =
        Scenario::by_name(&a.name, a.seed.unwrap_or(0)).ok_or_else(|| {
            Failure::Input(format!(
                "unknown scenario {:?}; expected one of {}",
                a.name,
                SCENARIO_NAMES.join(", ")
            ))
        })??;
    let n = scenario.schedule.n();
    if let Some(x0) = &a.x0 {
        let t0 = scenario.schedule.t0();
        scenario = scenario.with_initial(state_from(x0.clone(), n, t0)?);
    } else if let (Some(seed), true) = (a.seed, a.name != "doubly-stochastic") {
        scenario = scenario.with_initial(scenarios::random_interior(n, seed));
    }
    if let Some(h) = a.horizon {
        scenario = scenario.with_horizon(h);
    }
    let cfg = IntegratorConfig::with_step(&scenario.schedule, scenario.horizon, a.max_step);
    let run = scenarios::run_scenario(&scenario, &cfg)?;
    let last = run.trajectory.last();
    let summary = ScenarioSummary {
        scenario: scenario.name.clone(),
        final_time: last.t,
        final_state: last.x.clone(),
        verdict: run.verdict.clone(),
        monitors: run.trajectory.monitors.clone(),
        certificate: run.certificate.clone(),
        envelope: run.envelope.clone(),
    };
    match &a.out {
        Some(path) => emit(
            out,
            Some(path),
            a.format,
            &run.trajectory,
            run.certificate.as_ref(),
            &summary,
        )?,
        None => write_json(out, &summary)?,
    }
    let envelope_ok = run.envelope.as_ref().is_none_or(EnvelopeReport::holds);
    if run.verdict.satisfied && envelope_ok {
        Ok(())
    } else {
        Err(Failure::Verdict(format!(
            "scenario {} did not meet its expectation",
            scenario.name
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumOutput {
    pub matrix: usize,
    pub x: Vec<f64>,
    /// Sup norm of the vector field at `x`.
    pub residual: f64,
}

pub fn cmd_equilibrium(a: &EquilibriumArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let file = ScheduleFile::load(&a.input)?;
    let pool = file.pool()?;
    let c = pool.get(a.matrix).ok_or_else(|| {
        Failure::Input(format!(
            "matrix index {} out of range (pool has {})",
            a.matrix,
            pool.len()
        ))
    })?;
    let x0 = match &a.x0 {
        Some(x) => state_from(x.clone(), file.n, 0.0)?.into_vec(),
        None => vec![1.0 / file.n as f64; file.n],
    };
    let x = equilibrium_fixed(c, &x0, a.tol, a.max_iter)?;
    let residual = rhs(c, &x)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    write_json(
        out,
        &EquilibriumOutput {
            matrix: a.matrix,
            x,
            residual,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_dwell_is_a_parse_error() {
        let err = ScheduleFile::parse(r#"{"n": 3, "matrices": [[0,0.5,0.5,0.5,0,0.5,0.5,0.5,0]]}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INPUT);
        assert!(err.message().contains("dwell"), "{err:?}");
    }

    #[test]
    fn dwell_forms() {
        let m = "[0,0.5,0.5,0.5,0,0.5,0.5,0.5,0]";
        let scalar = ScheduleFile::parse(&format!(
            r#"{{"n": 3, "matrices": [{m}, {m}], "dwell": 0.5}}"#
        ))
        .unwrap();
        assert_eq!(scalar.schedule().unwrap().period_duration(), 1.0);
        let list = ScheduleFile::parse(&format!(
            r#"{{"n": 3, "matrices": [{m}, {m}], "dwell": [0.25, 0.5]}}"#
        ))
        .unwrap();
        assert_eq!(list.schedule().unwrap().dwell_bounds().lower, 0.25);
        let short = ScheduleFile::parse(&format!(
            r#"{{"n": 3, "matrices": [{m}, {m}], "dwell": [0.25]}}"#
        ))
        .unwrap();
        assert_eq!(short.schedule().unwrap_err().exit_code(), EXIT_INPUT);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.1,
            1.0 / 3.0,
            1e-300,
            2.5e-8,
            0.0,
            123456789.123,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn error_classes() {
        assert_eq!(
            Failure::from(Error::NoConvergence(3)).exit_code(),
            EXIT_NUMERICAL
        );
        assert_eq!(
            Failure::from(Error::NotDoublyStochastic { matrix_index: 0 }).exit_code(),
            EXIT_ASSUMPTIONS
        );
        assert_eq!(Failure::from(Error::TooSmall(1)).exit_code(), EXIT_INPUT);
    }
}
