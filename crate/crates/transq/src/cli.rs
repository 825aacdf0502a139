//! Scenario files, the builtin call-center experiment generator, and the
//! command-line runner.
//!
//! Scenario files are JSON:
//!
//! ```json
//! {
//!   "horizon_minutes": 1440.0,
//!   "step_minutes": 5.0,
//!   "servers": 100,
//!   "mu_per_min": 0.2,
//!   "gamma": 0.97,
//!   "patience_mean_minutes": 4.0,
//!   "queue_capacity": 50,
//!   "epsilon_step": 1e-7,
//!   "epsilon_total": 3e-2,
//!   "detection": true,
//!   "arrival": { "sinusoidal": { "base": 0.85, "amplitude": 0.2, "cycles": 1.5 } }
//! }
//! ```
//!
//! `servers` and `mu_per_min` accept a scalar or a per-step list; `arrival`
//! is either a per-step list (`"lambda_per_min": [...]`) or the sinusoid
//! spec above, in which case `λ_j = s_j μ_j (base + amplitude·sin(2π·cycles·t_j/T))`
//! evaluated at each step midpoint (or integral-averaged, see `averaging`).
//! Optional keys: `averaging` ("midpoint"/"integral"), `initial_state`
//! ("empty" or an explicit distribution), `patience_mean_minutes` (omit for
//! no abandonment), and `detection` also accepts "on"/"off".

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::{solve_horizon, HorizonResult};
use crate::measures::{relative_error_series, MeasureSeries};
use crate::model::{ScenarioConfig, StepProfile};
use crate::stationary::ProbabilityVector;

/// Horizon of the builtin experiments: 24 hours in minutes.
pub const PAPER_HORIZON_MINUTES: f64 = 1440.0;
/// Step length of the builtin experiments: 5 minutes (288 steps).
pub const PAPER_STEP_MINUTES: f64 = 5.0;
/// Per-server service rate of the builtin experiments: mean handle time
/// 5 minutes. The reproduced quantities depend only on the load shape and
/// the dimensionless ratios γ and η/μ, not on this absolute scale.
pub const PAPER_MU_PER_MIN: f64 = 0.2;
/// Number of sinusoid cycles over the horizon (two daily peaks).
pub const PAPER_SINUSOID_CYCLES: f64 = 1.5;

/// A scalar applied to every step, or one value per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList<T> {
    /// Same value for all steps.
    Scalar(T),
    /// One value per step; length must equal the step count.
    List(Vec<T>),
}

impl<T: Copy> ScalarOrList<T> {
    fn expand(&self, steps: usize, key: &str) -> Result<Vec<T>> {
        match self {
            ScalarOrList::Scalar(v) => Ok(vec![*v; steps]),
            ScalarOrList::List(l) if l.len() == steps => Ok(l.clone()),
            ScalarOrList::List(l) => Err(Error::InvalidScenario(format!(
                "{key} has {} entries but the scenario has {steps} steps",
                l.len()
            ))),
        }
    }
}

/// Boolean that also accepts "on"/"off" in scenario files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Toggle {
    /// Plain JSON boolean.
    Bool(bool),
    /// "on" or "off".
    Text(String),
}

impl Toggle {
    fn as_bool(&self) -> Result<bool> {
        match self {
            Toggle::Bool(b) => Ok(*b),
            Toggle::Text(s) => match s.as_str() {
                "on" => Ok(true),
                "off" => Ok(false),
                other => Err(Error::InvalidScenario(format!(
                    "detection must be a boolean, \"on\", or \"off\", got \"{other}\""
                ))),
            },
        }
    }
}

/// Arrival-rate specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ArrivalSpec {
    /// Explicit per-step arrival rates.
    #[serde(rename = "lambda_per_min")]
    PerStep(Vec<f64>),
    /// Load-shaped sinusoid `λ(t) = sμ(base + amplitude·sin(2π·cycles·t/T))`.
    #[serde(rename = "sinusoidal")]
    Sinusoidal {
        /// Mean offered load.
        base: f64,
        /// Load oscillation amplitude.
        amplitude: f64,
        /// Full sine periods over the horizon.
        cycles: f64,
    },
}

/// How a sinusoidal arrival spec is reduced to one rate per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Evaluate the sinusoid at the step midpoint.
    #[default]
    Midpoint,
    /// Exact integral average over the step.
    Integral,
}

/// Starting distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// Only "empty" is recognized: all mass on state 0.
    Named(String),
    /// Explicit distribution over `{0..n}`.
    Distribution(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Named("empty".into())
    }
}

/// On-disk scenario description. See the module docs for the JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Total horizon T in minutes.
    pub horizon_minutes: f64,
    /// Step length Δ in minutes.
    pub step_minutes: f64,
    /// Server count, scalar or per step.
    pub servers: ScalarOrList<usize>,
    /// Service rate per server per minute, scalar or per step.
    pub mu_per_min: ScalarOrList<f64>,
    /// Queue-joining probability γ.
    pub gamma: f64,
    /// Mean patience 1/η in minutes; omit for no abandonment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience_mean_minutes: Option<f64>,
    /// Waiting positions q.
    pub queue_capacity: usize,
    /// Per-step truncation bound ε_Δ.
    pub epsilon_step: f64,
    /// Global error budget ε_T.
    pub epsilon_total: f64,
    /// Steady-state detection switch.
    pub detection: Toggle,
    /// Arrival-rate specification.
    pub arrival: ArrivalSpec,
    /// Sinusoid reduction mode; ignored for per-step arrival lists.
    #[serde(default)]
    pub averaging: Averaging,
    /// Starting distribution; defaults to "empty".
    #[serde(default)]
    pub initial_state: InitialState,
}

impl ScenarioFile {
    /// Parse from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Read and parse a file.
    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Serialize to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Lower to the in-memory configuration, expanding lists and the
    /// sinusoid and validating everything.
    pub fn to_config(&self) -> Result<ScenarioConfig> {
        if !self.step_minutes.is_finite() || self.step_minutes <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "step_minutes must be finite and positive, got {}",
                self.step_minutes
            )));
        }
        let steps_f = self.horizon_minutes / self.step_minutes;
        let steps = steps_f.round();
        if !(steps >= 1.0 && (steps_f - steps).abs() < 1e-9) {
            return Err(Error::InvalidScenario(format!(
                "horizon_minutes / step_minutes = {steps_f} is not a positive whole number"
            )));
        }
        let steps = steps as usize;

        let servers = self.servers.expand(steps, "servers")?;
        let mus = self.mu_per_min.expand(steps, "mu_per_min")?;
        let lambdas: Vec<f64> = match &self.arrival {
            ArrivalSpec::PerStep(l) => {
                if l.len() != steps {
                    return Err(Error::InvalidScenario(format!(
                        "lambda_per_min has {} entries but the scenario has {steps} steps",
                        l.len()
                    )));
                }
                l.clone()
            }
            ArrivalSpec::Sinusoidal { base, amplitude, cycles } => {
                let omega = 2.0 * std::f64::consts::PI * cycles / self.horizon_minutes;
                (0..steps)
                    .map(|j| {
                        let scale = servers[j] as f64 * mus[j];
                        let t0 = j as f64 * self.step_minutes;
                        let t1 = t0 + self.step_minutes;
                        let shape = match self.averaging {
                            Averaging::Midpoint => {
                                base + amplitude * (omega * 0.5 * (t0 + t1)).sin()
                            }
                            Averaging::Integral => {
                                base + amplitude * ((omega * t0).cos() - (omega * t1).cos())
                                    / (omega * self.step_minutes)
                            }
                        };
                        scale * shape
                    })
                    .collect()
            }
        };

        let eta = match self.patience_mean_minutes {
            None => 0.0,
            Some(p) if p.is_finite() && p > 0.0 => 1.0 / p,
            Some(p) => {
                return Err(Error::InvalidScenario(format!(
                    "patience_mean_minutes must be positive, got {p}"
                )))
            }
        };

        let profiles: Vec<StepProfile> = lambdas
            .into_iter()
            .zip(&mus)
            .zip(&servers)
            .map(|((lambda, &mu), &servers)| StepProfile { lambda, mu, servers })
            .collect();

        let config = ScenarioConfig {
            horizon: self.horizon_minutes,
            step_length: self.step_minutes,
            steps: profiles,
            gamma: self.gamma,
            eta,
            queue_capacity: self.queue_capacity,
            epsilon_step: self.epsilon_step,
            epsilon_total: self.epsilon_total,
            detection_enabled: self.detection.as_bool()?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Re-encode an in-memory configuration as a file (per-step arrival
    /// list; constant server/rate lists compress to scalars).
    pub fn from_config(config: &ScenarioConfig) -> Self {
        fn compress<T: Copy + PartialEq>(values: Vec<T>) -> ScalarOrList<T> {
            if values.windows(2).all(|w| w[0] == w[1]) {
                ScalarOrList::Scalar(values[0])
            } else {
                ScalarOrList::List(values)
            }
        }
        ScenarioFile {
            horizon_minutes: config.horizon,
            step_minutes: config.step_length,
            servers: compress(config.steps.iter().map(|p| p.servers).collect()),
            mu_per_min: compress(config.steps.iter().map(|p| p.mu).collect()),
            gamma: config.gamma,
            patience_mean_minutes: (config.eta > 0.0).then(|| 1.0 / config.eta),
            queue_capacity: config.queue_capacity,
            epsilon_step: config.epsilon_step,
            epsilon_total: config.epsilon_total,
            detection: Toggle::Bool(config.detection_enabled),
            arrival: ArrivalSpec::PerStep(config.steps.iter().map(|p| p.lambda).collect()),
            averaging: Averaging::Midpoint,
            initial_state: InitialState::default(),
        }
    }

    /// Resolve the starting distribution for a state space of `num_states`.
    pub fn initial_vector(&self, num_states: usize) -> Result<ProbabilityVector> {
        match &self.initial_state {
            InitialState::Named(name) if name == "empty" => {
                Ok(ProbabilityVector::point_mass(num_states, 0))
            }
            InitialState::Named(name) => Err(Error::InvalidScenario(format!(
                "unknown initial_state \"{name}\" (only \"empty\" or an explicit distribution)"
            ))),
            InitialState::Distribution(v) => {
                if v.len() != num_states {
                    return Err(Error::InvalidScenario(format!(
                        "initial_state has {} entries but the model has {num_states} states",
                        v.len()
                    )));
                }
                ProbabilityVector::new(v.clone())
            }
        }
    }
}

/// Server and queue sizes of one experiment system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemSize {
    /// Server count s.
    pub servers: usize,
    /// Waiting positions q.
    pub queue: usize,
}

/// Resolve a builtin size label: the experiment systems 54 (30+24),
/// 150 (100+50), 390 (300+90), 1200 (1000+200), 3300 (3000+300), the
/// tail-study shorthands 1250/1300/1400 (1000+250/300/400), or an explicit
/// "S+Q" such as "1000+300".
pub fn builtin_size(label: &str) -> Result<SystemSize> {
    let known = match label {
        "54" => Some((30, 24)),
        "150" => Some((100, 50)),
        "390" => Some((300, 90)),
        "1200" => Some((1000, 200)),
        "3300" => Some((3000, 300)),
        "1250" => Some((1000, 250)),
        "1300" => Some((1000, 300)),
        "1400" => Some((1000, 400)),
        _ => None,
    };
    if let Some((servers, queue)) = known {
        return Ok(SystemSize { servers, queue });
    }
    if let Some((s, q)) = label.split_once('+') {
        let servers: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidScenario(format!("bad server count in size \"{label}\"")))?;
        let queue: usize = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidScenario(format!("bad queue size in size \"{label}\"")))?;
        if servers == 0 {
            return Err(Error::InvalidScenario("server count must be at least 1".into()));
        }
        return Ok(SystemSize { servers, queue });
    }
    Err(Error::InvalidScenario(format!(
        "unknown size label \"{label}\" (use 54, 150, 390, 1200, 3300, 1250, 1300, 1400, or \"S+Q\")"
    )))
}

/// Sinusoid load band of the builtin experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LoadBand {
    /// Load sweeps 0.65–1.05 (base 0.85, amplitude 0.2).
    Wide,
    /// Load hovers 0.95–1.05 (base 1.0, amplitude 0.05).
    Narrow,
}

impl LoadBand {
    /// (base, amplitude) of the load sinusoid.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            LoadBand::Wide => (0.85, 0.2),
            LoadBand::Narrow => (1.0, 0.05),
        }
    }
}

/// Options for [`generate_paper_scenario`] beyond size and band.
#[derive(Debug, Clone, Copy)]
pub struct PaperOptions {
    /// Queue-joining probability γ.
    pub gamma: f64,
    /// Mean patience 1/η in minutes.
    pub patience_mean_minutes: f64,
    /// Per-step truncation bound ε_Δ.
    pub epsilon_step: f64,
    /// Global error budget ε_T.
    pub epsilon_total: f64,
    /// Steady-state detection switch.
    pub detection: bool,
    /// Sinusoid reduction mode.
    pub averaging: Averaging,
}

impl Default for PaperOptions {
    fn default() -> Self {
        Self {
            gamma: 0.97,
            patience_mean_minutes: 4.0,
            epsilon_step: 1e-7,
            epsilon_total: 3e-2,
            detection: true,
            averaging: Averaging::Midpoint,
        }
    }
}

/// Build a 24-hour, 288-step call-center scenario: sinusoidal load with two
/// daily peaks in the chosen band, μ = 0.2/min, and the supplied tolerances.
pub fn generate_paper_scenario(
    size: SystemSize,
    band: LoadBand,
    opts: &PaperOptions,
) -> Result<ScenarioConfig> {
    let (base, amplitude) = band.coefficients();
    let file = ScenarioFile {
        horizon_minutes: PAPER_HORIZON_MINUTES,
        step_minutes: PAPER_STEP_MINUTES,
        servers: ScalarOrList::Scalar(size.servers),
        mu_per_min: ScalarOrList::Scalar(PAPER_MU_PER_MIN),
        gamma: opts.gamma,
        patience_mean_minutes: Some(opts.patience_mean_minutes),
        queue_capacity: size.queue,
        epsilon_step: opts.epsilon_step,
        epsilon_total: opts.epsilon_total,
        detection: Toggle::Bool(opts.detection),
        arrival: ArrivalSpec::Sinusoidal {
            base,
            amplitude,
            cycles: PAPER_SINUSOID_CYCLES,
        },
        averaging: opts.averaging,
        initial_state: InitialState::default(),
    };
    file.to_config()
}

/// One CSV row of a horizon run.
#[derive(Debug, Clone)]
pub struct OutputRow {
    /// Step-boundary time in minutes.
    pub t_minutes: f64,
    /// Expected state at the boundary.
    pub expected_state: f64,
    /// Immediate-service probability at the boundary.
    pub p_immediate: f64,
    /// Top-state probability at the boundary.
    pub p_tail: f64,
    /// Multiplications spent on the step.
    pub mvm_count: usize,
    /// Whether the step ended in steady-state detection.
    pub steady_detected: bool,
    /// Ledger total after the step.
    pub error_consumed_cumulative: f64,
    /// `|ES − ES_ref|/ES_ref` against the reference run, if one was made.
    pub es_rel_error: Option<f64>,
    /// `∥p − p_ref∥_∞` against the reference run, if one was made.
    pub p_linf_error: Option<f64>,
}

/// Assemble per-step output rows from a finished run.
pub fn output_rows(result: &HorizonResult, series: &MeasureSeries) -> Vec<OutputRow> {
    let mut consumed = 0.0;
    (0..series.len())
        .map(|j| {
            consumed += result.step_results[j].error_charged;
            OutputRow {
                t_minutes: series.times[j],
                expected_state: series.expected_state[j],
                p_immediate: series.p_immediate[j],
                p_tail: series.p_tail[j],
                mvm_count: series.mvm_per_step[j],
                steady_detected: series.steady_flags[j],
                error_consumed_cumulative: consumed,
                es_rel_error: None,
                p_linf_error: None,
            }
        })
        .collect()
}

/// Render rows as CSV: dot decimal separator, fixed column order, one
/// header row. The two reference columns appear only when every row
/// carries them.
pub fn render_csv(rows: &[OutputRow]) -> String {
    let with_reference = rows.iter().all(|r| r.es_rel_error.is_some());
    let mut out = String::new();
    out.push_str(
        "t_minutes,expected_state,p_immediate,p_tail,mvm_count,steady_detected,error_consumed_cumulative",
    );
    if with_reference {
        out.push_str(",es_rel_error,p_linf_error");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{:e},{:e},{:e},{},{},{:e}",
            r.t_minutes,
            r.expected_state,
            r.p_immediate,
            r.p_tail,
            r.mvm_count,
            u8::from(r.steady_detected),
            r.error_consumed_cumulative,
        );
        if with_reference {
            let _ = write!(out, ",{:e},{:e}", r.es_rel_error.unwrap(), r.p_linf_error.unwrap());
        }
        out.push('\n');
    }
    out
}

#[derive(Parser, Debug)]
#[command(
    name = "transq",
    version,
    about = "Transient solver for time-varying multiserver queues with balking and abandonment",
    group = clap::ArgGroup::new("scenario").required(true).multiple(false)
)]
struct Args {
    /// JSON scenario file to run.
    #[arg(long, group = "scenario")]
    config: Option<PathBuf>,

    /// Builtin experiment size(s): labels 54/150/390/1200/3300, tail-study
    /// shorthands 1250/1300/1400, or explicit "S+Q". Repeat or
    /// comma-separate for several.
    #[arg(long, group = "scenario", value_delimiter = ',')]
    builtin: Vec<String>,

    /// Load band of the builtin sinusoid.
    #[arg(long, value_enum, default_value = "wide")]
    band: LoadBand,

    /// Queue-joining probability γ for builtin scenarios.
    #[arg(long, default_value_t = 0.97)]
    gamma: f64,

    /// Mean patience 1/η in minutes for builtin scenarios.
    #[arg(long, default_value_t = 4.0)]
    patience: f64,

    /// Per-step truncation bound ε_Δ for builtin scenarios.
    #[arg(long, default_value_t = 1e-7)]
    eps_step: f64,

    /// Global error budget ε_T for builtin scenarios; defaults to
    /// steps × ε_Δ (pure truncation, no detection slack).
    #[arg(long)]
    eps_total: Option<f64>,

    /// Disable steady-state detection.
    #[arg(long)]
    no_detection: bool,

    /// Integral-average the builtin sinusoid over each step instead of
    /// evaluating it at the midpoint.
    #[arg(long)]
    exact_average: bool,

    /// CSV output: a file path for a single scenario, a directory for
    /// several.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also run an ε_Δ=1e-13 no-detection reference pass and append
    /// error columns to the CSV.
    #[arg(long)]
    reference: bool,

    /// Write every step's full distribution as CSV files into a directory.
    #[arg(long, value_name = "DIR")]
    emit_distributions: Option<PathBuf>,

    /// Worker threads when running several builtin scenarios.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

struct Job {
    name: String,
    config: ScenarioConfig,
    p0: ProbabilityVector,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Io(_) => 1,
        Error::InvalidScenario(_)
        | Error::InvalidModel(_)
        | Error::DimensionMismatch(_)
        | Error::NotIrreducible { .. }
        | Error::DenseCapExceeded { .. } => 2,
        Error::InvalidVector(_) | Error::StationaryMismatch { .. } | Error::SingularSystem => 3,
    }
}

fn build_jobs(args: &Args) -> Result<Vec<Job>> {
    if let Some(path) = &args.config {
        let file = ScenarioFile::from_path(path)?;
        let config = file.to_config()?;
        let p0 = file.initial_vector(config.num_states())?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        return Ok(vec![Job { name, config, p0 }]);
    }

    let opts = PaperOptions {
        gamma: args.gamma,
        patience_mean_minutes: args.patience,
        epsilon_step: args.eps_step,
        epsilon_total: args
            .eps_total
            .unwrap_or_else(|| (PAPER_HORIZON_MINUTES / PAPER_STEP_MINUTES) * args.eps_step),
        detection: !args.no_detection,
        averaging: if args.exact_average { Averaging::Integral } else { Averaging::Midpoint },
    };
    args.builtin
        .iter()
        .map(|label| {
            let size = builtin_size(label)?;
            let config = generate_paper_scenario(size, args.band, &opts)?;
            let p0 = ProbabilityVector::point_mass(config.num_states(), 0);
            Ok(Job { name: format!("builtin-{label}"), config, p0 })
        })
        .collect()
}

fn csv_path_for(out: &Path, job_name: &str, multiple: bool) -> PathBuf {
    if multiple {
        out.join(format!("{job_name}.csv"))
    } else {
        out.to_path_buf()
    }
}

fn write_distribution_dumps(dir: &Path, job_name: &str, result: &HorizonResult) -> Result<()> {
    let target = dir.join(job_name);
    std::fs::create_dir_all(&target)?;
    for (j, p) in result.distributions().enumerate() {
        let mut text = String::from("state,probability\n");
        for (state, prob) in p.entries().iter().enumerate() {
            let _ = writeln!(text, "{state},{prob:e}");
        }
        std::fs::write(target.join(format!("step_{:04}.csv", j + 1)), text)?;
    }
    Ok(())
}

fn run_job(job: &Job, args: &Args, multiple: bool) -> Result<String> {
    let started = Instant::now();
    let result = solve_horizon(&job.config, &job.p0)?;
    let wall = started.elapsed();
    let series = MeasureSeries::from_horizon(&job.config, &result)?;
    let mut rows = output_rows(&result, &series);

    if args.reference {
        let mut ref_config = job.config.clone();
        ref_config.epsilon_step = 1e-13;
        ref_config.detection_enabled = false;
        let ref_result = solve_horizon(&ref_config, &job.p0)?;
        let ref_series = MeasureSeries::from_horizon(&ref_config, &ref_result)?;
        let rel = relative_error_series(&series, &ref_series)?;
        for ((row, err), (p, p_ref)) in rows
            .iter_mut()
            .zip(rel)
            .zip(result.distributions().zip(ref_result.distributions()))
        {
            row.es_rel_error = Some(err);
            row.p_linf_error = Some(p.inf_distance(p_ref));
        }
    }

    if let Some(out) = &args.out {
        let path = csv_path_for(out, &job.name, multiple);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(&path, render_csv(&rows))?;
    }
    if let Some(dir) = &args.emit_distributions {
        write_distribution_dumps(dir, &job.name, &result)?;
    }

    let max_tail = series.p_tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "{}: steps={} mvms={} detections={} max_p_tail={:.3e} consumed={:.3e} budget={:.3e} wall={:.3}s",
        job.name,
        result.len(),
        result.total_mvms(),
        result.detections(),
        max_tail,
        result.ledger.consumed(),
        result.ledger.epsilon_total(),
        wall.as_secs_f64(),
    ))
}

/// Entry point shared by the binary and the tests. Returns the process
/// exit code: 0 success, 1 file/parse error, 2 invalid configuration,
/// 3 numerical failure (clap reports flag misuse itself with its usual
/// code 2).
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let jobs = match build_jobs(&args) {
        Ok(jobs) => jobs,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    for job in &jobs {
        if job.config.detection_enabled && !job.config.budget_is_feasible() {
            eprintln!(
                "warning: {}: epsilon_total {:e} is below steps × epsilon_step = {:e}; \
                 detection will never engage",
                job.name,
                job.config.epsilon_total,
                job.config.steps.len() as f64 * job.config.epsilon_step
            );
        }
    }

    let multiple = jobs.len() > 1;
    let workers = args.jobs.max(1).min(jobs.len());
    let outcomes: Mutex<Vec<Option<Result<String>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..jobs.len()).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().pop_front();
                let Some(idx) = next else { break };
                let outcome = run_job(&jobs[idx], &args, multiple);
                outcomes.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let mut code = 0;
    for outcome in outcomes.into_inner().unwrap() {
        match outcome.expect("every job ran") {
            Ok(summary) => println!("{summary}"),
            Err(e) => {
                eprintln!("error: {e}");
                code = code.max(exit_code_for(&e));
            }
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_size_labels() {
        assert_eq!(builtin_size("150").unwrap(), SystemSize { servers: 100, queue: 50 });
        assert_eq!(builtin_size("3300").unwrap(), SystemSize { servers: 3000, queue: 300 });
        assert_eq!(builtin_size("1300").unwrap(), SystemSize { servers: 1000, queue: 300 });
        assert_eq!(builtin_size("1000+400").unwrap(), SystemSize { servers: 1000, queue: 400 });
        assert!(builtin_size("999").is_err());
        assert!(builtin_size("0+5").is_err());
        assert!(builtin_size("abc+def").is_err());
    }

    #[test]
    fn paper_scenario_matches_experiment_shape() {
        let cfg = generate_paper_scenario(
            builtin_size("150").unwrap(),
            LoadBand::Wide,
            &PaperOptions { epsilon_step: 1e-5, ..PaperOptions::default() },
        )
        .unwrap();
        assert_eq!(cfg.steps.len(), 288);
        assert_eq!(cfg.size_n(), 150);
        assert_eq!(cfg.step_length, 5.0);
        assert_eq!(cfg.eta, 0.25);
        let loads: Vec<f64> = cfg.steps.iter().map(|p| p.load()).collect();
        let lo = loads.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = loads.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((0.65..0.66).contains(&lo), "min load {lo}");
        assert!((1.04..=1.05).contains(&hi), "max load {hi}");
        // Two daily peaks: the load turns from rising to falling twice.
        // (Each peak straddles two midpoints with tied values, so strict
        // local-maximum counting would see nothing.)
        let diffs: Vec<f64> = loads.windows(2).map(|w| w[1] - w[0]).collect();
        let peaks = diffs.windows(2).filter(|d| d[0] > 0.0 && d[1] <= 0.0).count();
        assert_eq!(peaks, 2);
    }

    #[test]
    fn narrow_band_shape() {
        let cfg = generate_paper_scenario(
            builtin_size("1250").unwrap(),
            LoadBand::Narrow,
            &PaperOptions { gamma: 0.997, patience_mean_minutes: 12.0, ..PaperOptions::default() },
        )
        .unwrap();
        let loads: Vec<f64> = cfg.steps.iter().map(|p| p.load()).collect();
        assert!(loads.iter().all(|r| (0.95..=1.05).contains(r)));
        assert_eq!(cfg.size_n(), 1250);
    }

    #[test]
    fn scenario_round_trip_is_exact() {
        let cfg = generate_paper_scenario(
            builtin_size("390").unwrap(),
            LoadBand::Wide,
            &PaperOptions {
                gamma: 0.99,
                patience_mean_minutes: 8.0,
                epsilon_step: 1e-7,
                epsilon_total: 3e-2,
                detection: true,
                averaging: Averaging::Midpoint,
            },
        )
        .unwrap();
        let text = ScenarioFile::from_config(&cfg).to_json();
        let back = ScenarioFile::from_json(&text).unwrap().to_config().unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn integral_averaging_differs_slightly_from_midpoint() {
        let size = builtin_size("54").unwrap();
        let mid = generate_paper_scenario(size, LoadBand::Wide, &PaperOptions::default()).unwrap();
        let avg = generate_paper_scenario(
            size,
            LoadBand::Wide,
            &PaperOptions { averaging: Averaging::Integral, ..PaperOptions::default() },
        )
        .unwrap();
        let mut max_diff = 0.0_f64;
        for (a, b) in mid.steps.iter().zip(&avg.steps) {
            max_diff = max_diff.max((a.lambda - b.lambda).abs());
            // O(Δ²) agreement: the sinusoid is smooth and Δ/T is small.
            assert!((a.lambda - b.lambda).abs() < 1e-4 * a.lambda.max(1.0));
        }
        assert!(max_diff > 0.0, "averaging modes must not be identical");
    }

    #[test]
    fn scenario_file_parses_sinusoid_and_lists() {
        let text = r#"{
            "horizon_minutes": 20.0,
            "step_minutes": 5.0,
            "servers": [2, 2, 3, 3],
            "mu_per_min": 0.5,
            "gamma": 0.9,
            "patience_mean_minutes": 2.0,
            "queue_capacity": 4,
            "epsilon_step": 1e-6,
            "epsilon_total": 1e-2,
            "detection": "on",
            "arrival": { "lambda_per_min": [1.0, 2.0, 2.5, 1.5] }
        }"#;
        let cfg = ScenarioFile::from_json(text).unwrap().to_config().unwrap();
        assert_eq!(cfg.steps.len(), 4);
        assert!(cfg.detection_enabled);
        assert_eq!(cfg.size_n(), 7);
        assert_eq!(cfg.steps[2].servers, 3);
        assert_eq!(cfg.steps[3].lambda, 1.5);
        assert_eq!(cfg.eta, 0.5);
    }

    #[test]
    fn scenario_file_rejects_bad_inputs() {
        let missing: Result<ScenarioFile> = ScenarioFile::from_json("{}");
        assert!(matches!(missing, Err(Error::Parse(_))));

        let bad_detection = r#"{
            "horizon_minutes": 5.0, "step_minutes": 5.0, "servers": 1,
            "mu_per_min": 1.0, "gamma": 1.0, "queue_capacity": 1,
            "epsilon_step": 1e-6, "epsilon_total": 1e-2,
            "detection": "maybe",
            "arrival": { "lambda_per_min": [1.0] }
        }"#;
        assert!(ScenarioFile::from_json(bad_detection).unwrap().to_config().is_err());

        let bad_lengths = r#"{
            "horizon_minutes": 10.0, "step_minutes": 5.0, "servers": [1, 1, 1],
            "mu_per_min": 1.0, "gamma": 1.0, "queue_capacity": 1,
            "epsilon_step": 1e-6, "epsilon_total": 1e-2,
            "detection": true,
            "arrival": { "lambda_per_min": [1.0, 1.0] }
        }"#;
        assert!(ScenarioFile::from_json(bad_lengths).unwrap().to_config().is_err());

        let bad_patience = r#"{
            "horizon_minutes": 5.0, "step_minutes": 5.0, "servers": 1,
            "mu_per_min": 1.0, "gamma": 1.0, "patience_mean_minutes": 0.0,
            "queue_capacity": 1, "epsilon_step": 1e-6, "epsilon_total": 1e-2,
            "detection": true,
            "arrival": { "lambda_per_min": [1.0] }
        }"#;
        assert!(ScenarioFile::from_json(bad_patience).unwrap().to_config().is_err());
    }

    #[test]
    fn initial_state_resolution() {
        let mut file = ScenarioFile::from_config(
            &generate_paper_scenario(
                SystemSize { servers: 2, queue: 2 },
                LoadBand::Wide,
                &PaperOptions::default(),
            )
            .unwrap(),
        );
        let p = file.initial_vector(5).unwrap();
        assert_eq!(p.get(0), 1.0);

        file.initial_state = InitialState::Distribution(vec![0.5, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(file.initial_vector(5).unwrap().get(1), 0.5);
        assert!(file.initial_vector(4).is_err());

        file.initial_state = InitialState::Named("full".into());
        assert!(file.initial_vector(5).is_err());
    }

    #[test]
    fn csv_rendering_shape() {
        let rows = vec![
            OutputRow {
                t_minutes: 5.0,
                expected_state: 1.25,
                p_immediate: 0.75,
                p_tail: 1e-9,
                mvm_count: 42,
                steady_detected: false,
                error_consumed_cumulative: 1e-7,
                es_rel_error: None,
                p_linf_error: None,
            },
            OutputRow {
                t_minutes: 10.0,
                expected_state: 2.5,
                p_immediate: 0.5,
                p_tail: 2e-9,
                mvm_count: 0,
                steady_detected: true,
                error_consumed_cumulative: 2.1e-7,
                es_rel_error: None,
                p_linf_error: None,
            },
        ];
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "t_minutes,expected_state,p_immediate,p_tail,mvm_count,steady_detected,error_consumed_cumulative"
        );
        assert!(lines[1].starts_with("5,1.25e0,7.5e-1,1e-9,42,0,"));
        assert!(lines[2].starts_with("10,2.5e0,5e-1,2e-9,0,1,"));
        assert!(!csv.contains(';'), "no locale-dependent separators");
    }
}
