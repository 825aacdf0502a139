//! Call-center performance measures derived from distribution series.

use crate::error::{Error, Result};
use crate::horizon::HorizonResult;
use crate::model::ScenarioConfig;
use crate::stationary::ProbabilityVector;

/// Expected state `Σ_i i·p_i`.
pub fn expected_state(p: &ProbabilityVector) -> f64 {
    p.entries().iter().enumerate().map(|(i, &pi)| i as f64 * pi).sum()
}

/// Probability an arrival finds a free server, `Σ_{k<s} p_k`. By PASTA the
/// time-average occupancy distribution is what Poisson arrivals observe.
pub fn p_immediate_service(p: &ProbabilityVector, servers: usize) -> f64 {
    p.entries().iter().take(servers).sum()
}

/// Largest top-state probability across a series, `max_t p_n(t)`: the
/// a-posteriori check that the chosen queue capacity was adequate.
pub fn max_tail_probability<'a, I>(series: I) -> f64
where
    I: IntoIterator<Item = &'a ProbabilityVector>,
{
    series
        .into_iter()
        .map(|p| p.get(p.len() - 1))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pointwise relative error of two aligned expected-state series:
/// `|test − reference| / reference`, 0 where both are 0, infinite where only
/// the reference vanishes.
pub fn relative_error_series(test: &MeasureSeries, reference: &MeasureSeries) -> Result<Vec<f64>> {
    if test.times != reference.times {
        return Err(Error::DimensionMismatch(
            "measure series are not aligned on the same time grid".into(),
        ));
    }
    Ok(test
        .expected_state
        .iter()
        .zip(&reference.expected_state)
        .map(|(&t, &r)| {
            if r == 0.0 {
                if t == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (t - r).abs() / r
            }
        })
        .collect())
}

/// Per-step measures extracted from a horizon solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSeries {
    /// Step-boundary instants `t_1..t_J`.
    pub times: Vec<f64>,
    /// Expected state at each boundary.
    pub expected_state: Vec<f64>,
    /// Probability of immediate service at each boundary.
    pub p_immediate: Vec<f64>,
    /// Top-state probability `p_n` at each boundary.
    pub p_tail: Vec<f64>,
    /// Offered load `ρ = λ/(sμ)` of each step.
    pub load: Vec<f64>,
    /// Multiplications spent per step.
    pub mvm_per_step: Vec<usize>,
    /// Whether each step ended in steady-state detection.
    pub steady_flags: Vec<bool>,
}

impl MeasureSeries {
    /// Evaluate all measures at the step boundaries of a finished horizon.
    pub fn from_horizon(config: &ScenarioConfig, result: &HorizonResult) -> Result<Self> {
        if config.steps.len() != result.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} steps configured but {} solved",
                config.steps.len(),
                result.len()
            )));
        }
        let mut series = MeasureSeries {
            times: Vec::with_capacity(result.len()),
            expected_state: Vec::with_capacity(result.len()),
            p_immediate: Vec::with_capacity(result.len()),
            p_tail: Vec::with_capacity(result.len()),
            load: Vec::with_capacity(result.len()),
            mvm_per_step: Vec::with_capacity(result.len()),
            steady_flags: Vec::with_capacity(result.len()),
        };
        for (j, (profile, step)) in config.steps.iter().zip(&result.step_results).enumerate() {
            let p = &step.p_out;
            series.times.push((j + 1) as f64 * config.step_length);
            series.expected_state.push(expected_state(p));
            series.p_immediate.push(p_immediate_service(p, profile.servers));
            series.p_tail.push(p.get(p.len() - 1));
            series.load.push(profile.load());
            series.mvm_per_step.push(step.mvm_count);
            series.steady_flags.push(step.steady_detected);
        }
        Ok(series)
    }

    /// Number of steps covered.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when the series is empty.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
