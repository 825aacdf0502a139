//! Transient analysis of time-varying multiserver Markovian queues.
//!
//! `transq` computes time-dependent state distributions for staffed service
//! systems (call centers) modeled as birth–death chains with balking and
//! abandonment, driven by a piecewise-constant schedule of arrival rates and
//! staffing levels. Each step is solved by truncated uniformization; steps
//! whose iterates provably settle near the stationary distribution are cut
//! short by steady-state detection, with the saved accuracy accounted
//! against a global error budget.
//!
//! ```
//! use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
//! use transq::horizon::solve_horizon;
//! use transq::measures::MeasureSeries;
//! use transq::stationary::ProbabilityVector;
//!
//! let config = generate_paper_scenario(
//!     builtin_size("54").unwrap(),
//!     LoadBand::Wide,
//!     &PaperOptions { epsilon_step: 1e-7, epsilon_total: 3e-2, ..PaperOptions::default() },
//! ).unwrap();
//! let empty = ProbabilityVector::point_mass(config.num_states(), 0);
//! let result = solve_horizon(&config, &empty).unwrap();
//! let series = MeasureSeries::from_horizon(&config, &result).unwrap();
//! assert_eq!(series.len(), 288);
//! assert!(result.ledger.consumed() <= config.epsilon_total);
//! ```
//!
//! The `examples/` directory exercises each capability in isolation:
//!
//! - `build_model` — rate construction and generator assembly
//! - `stationary` — product-form stationary distributions
//! - `single_step` — one uniformization step against the dense oracle
//! - `steady_state_detection` — how and when detection fires
//! - `error_budget` — the ledger's threshold schedule across a horizon
//! - `full_horizon` — a 24-hour call-center run with per-step measures
//! - `detection_savings` — work with and without detection
//! - `tail_probabilities` — capacity adequacy across queue sizes
//! - `scenario_files` — JSON round trips and the file schema
//!
//! Run one with `cargo run --release --example full_horizon`.

pub mod cli;
pub mod error;
pub mod horizon;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod stationary;
pub mod uniformizer;

pub use error::{Error, Result};
pub use horizon::{solve_horizon, ErrorLedger, HorizonResult};
pub use measures::MeasureSeries;
pub use model::{build_generator, build_rates, BirthDeathModel, Generator, ScenarioConfig, StepProfile};
pub use stationary::{stationary_distribution, ProbabilityVector};
pub use uniformizer::{dtmc_step, poisson_window, solve_step, PoissonWindow, StepResult};
