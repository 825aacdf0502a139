//! Multi-step recursion over the piecewise-constant horizon.
//!
//! Each step gets a detection threshold carved greedily from the remaining
//! global budget: the slack beyond what pure truncation will still charge,
//! `δ_m = max(0, ε_T − consumed − remaining_steps·ε_Δ)`. Because the
//! measured detection bound is charged rather than the threshold, repeated
//! detections self-limit and the ledger never exceeds ε_T.

use crate::error::{Error, Result};
use crate::model::{build_generator, build_rates, ScenarioConfig, StepProfile};
use crate::stationary::{stationary_distribution, ProbabilityVector};
use crate::uniformizer::{solve_step, StepResult};

/// Running account of the global error budget ε_T.
#[derive(Debug, Clone)]
pub struct ErrorLedger {
    epsilon_total: f64,
    epsilon_step: f64,
    consumed: f64,
    remaining_steps: usize,
}

impl ErrorLedger {
    /// Fresh ledger for `steps` steps at per-step truncation charge
    /// `epsilon_step` under global budget `epsilon_total`.
    pub fn new(epsilon_total: f64, epsilon_step: f64, steps: usize) -> Self {
        Self { epsilon_total, epsilon_step, consumed: 0.0, remaining_steps: steps }
    }

    /// Global budget ε_T.
    pub fn epsilon_total(&self) -> f64 {
        self.epsilon_total
    }

    /// Error charged so far.
    pub fn consumed(&self) -> f64 {
        self.consumed
    }

    /// Steps not yet charged (the current step counts as remaining until
    /// its charge lands).
    pub fn remaining_steps(&self) -> usize {
        self.remaining_steps
    }

    /// Truncation charges still to come, `remaining_steps · ε_Δ`.
    pub fn reserve(&self) -> f64 {
        self.remaining_steps as f64 * self.epsilon_step
    }

    /// Detection threshold offered to the next step:
    /// `max(0, ε_T − consumed − remaining_steps·ε_Δ)`. Zero when the budget
    /// has no slack, which disables detection for that step but never
    /// aborts the solve.
    pub fn detection_threshold(&self) -> f64 {
        (self.epsilon_total - self.consumed - self.reserve()).max(0.0)
    }

    /// Record a completed step's error charge.
    pub fn charge(&mut self, error: f64) {
        debug_assert!(error >= 0.0 && error.is_finite());
        debug_assert!(self.remaining_steps > 0, "more charges than steps");
        self.consumed += error;
        self.remaining_steps -= 1;
    }
}

/// Everything produced by a horizon solve: one [`StepResult`] per step plus
/// the final ledger state.
#[derive(Debug, Clone)]
pub struct HorizonResult {
    /// Per-step outputs in step order.
    pub step_results: Vec<StepResult>,
    /// Ledger after the last charge.
    pub ledger: ErrorLedger,
}

impl HorizonResult {
    /// Number of steps solved.
    pub fn len(&self) -> usize {
        self.step_results.len()
    }

    /// True when no steps were solved (never produced by [`solve_horizon`]).
    pub fn is_empty(&self) -> bool {
        self.step_results.is_empty()
    }

    /// Distributions at the step boundaries `t_1..t_J`.
    pub fn distributions(&self) -> impl Iterator<Item = &ProbabilityVector> {
        self.step_results.iter().map(|r| &r.p_out)
    }

    /// Total matrix–vector multiplications across all steps.
    pub fn total_mvms(&self) -> usize {
        self.step_results.iter().map(|r| r.mvm_count).sum()
    }

    /// Number of steps that ended in steady-state detection.
    pub fn detections(&self) -> usize {
        self.step_results.iter().filter(|r| r.steady_detected).count()
    }
}

/// Solve the whole horizon from initial distribution `p0`.
///
/// For each step: build the birth–death model and generator, obtain the
/// stationary vector (reusing the previous step's when the profile is
/// unchanged), offer the ledger's current slack as detection threshold, run
/// [`solve_step`], and charge the returned error.
pub fn solve_horizon(config: &ScenarioConfig, p0: &ProbabilityVector) -> Result<HorizonResult> {
    config.validate()?;
    let n = config.size_n();
    if p0.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "initial vector length {} vs {} states",
            p0.len(),
            n + 1
        )));
    }

    let mut ledger = ErrorLedger::new(config.epsilon_total, config.epsilon_step, config.steps.len());
    let mut step_results = Vec::with_capacity(config.steps.len());
    let mut p = p0.clone();
    let mut cached: Option<(StepProfile, ProbabilityVector)> = None;

    for profile in &config.steps {
        let model = build_rates(profile, config.gamma, config.eta, n)?;
        let gen = build_generator(&model);
        let pi = match &cached {
            Some((prev, pi)) if prev == profile => pi.clone(),
            _ => {
                let pi = stationary_distribution(&model)?;
                cached = Some((*profile, pi.clone()));
                pi
            }
        };
        let threshold = if config.detection_enabled { ledger.detection_threshold() } else { 0.0 };
        let res = solve_step(&p, &gen, config.step_length, config.epsilon_step, threshold, &pi)?;
        ledger.charge(res.error_charged);
        p = res.p_out.clone();
        step_results.push(res);
    }

    Ok(HorizonResult { step_results, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BirthDeathModel;

    fn two_state_config(steps: usize, detection: bool) -> ScenarioConfig {
        ScenarioConfig {
            horizon: steps as f64,
            step_length: 1.0,
            steps: vec![StepProfile { lambda: 1.0, mu: 1.0, servers: 1 }; steps],
            gamma: 1.0,
            eta: 0.0,
            queue_capacity: 0,
            epsilon_step: 1e-9,
            epsilon_total: 3e-2,
            detection_enabled: detection,
        }
    }

    #[test]
    fn ledger_threshold_examples() {
        let mut ledger = ErrorLedger::new(3e-2, 1e-7, 101);
        ledger.charge(1e-3);
        assert_eq!(ledger.remaining_steps(), 100);
        let expect = 3e-2 - 1e-3 - 100.0 * 1e-7;
        assert!((ledger.detection_threshold() - expect).abs() < 1e-18);

        let mut spent = ErrorLedger::new(1e-2, 1e-7, 10);
        spent.charge(1e-2);
        assert_eq!(spent.detection_threshold(), 0.0);

        let exact = ErrorLedger::new(288.0 * 1e-5, 1e-5, 288);
        assert_eq!(exact.detection_threshold(), 0.0);
    }

    #[test]
    fn single_step_horizon_equals_solve_step() {
        let cfg = two_state_config(1, false);
        let p0 = ProbabilityVector::point_mass(2, 0);
        let hr = solve_horizon(&cfg, &p0).unwrap();
        assert_eq!(hr.len(), 1);

        let model = BirthDeathModel::new(vec![1.0], vec![1.0]).unwrap();
        let gen = crate::model::build_generator(&model);
        let pi = crate::stationary::stationary_distribution(&model).unwrap();
        let single = solve_step(&p0, &gen, 1.0, 1e-9, 0.0, &pi).unwrap();
        assert_eq!(hr.step_results[0].p_out.entries(), single.p_out.entries());
        assert_eq!(hr.step_results[0].mvm_count, single.mvm_count);
    }

    #[test]
    fn ledger_additivity_and_detection_self_limit() {
        let cfg = two_state_config(50, true);
        let p0 = ProbabilityVector::point_mass(2, 0);
        let hr = solve_horizon(&cfg, &p0).unwrap();
        let total: f64 = hr.step_results.iter().map(|r| r.error_charged).sum();
        assert_eq!(hr.ledger.consumed(), total);
        assert!(hr.ledger.consumed() <= cfg.epsilon_total);
        assert!(hr.detections() > 0, "two-state chain settles immediately");
    }

    #[test]
    fn detection_disabled_ignores_budget() {
        let mut a = two_state_config(10, false);
        let p0 = ProbabilityVector::point_mass(2, 0);
        let ra = solve_horizon(&a, &p0).unwrap();
        a.epsilon_total = 0.9;
        let rb = solve_horizon(&a, &p0).unwrap();
        for (x, y) in ra.step_results.iter().zip(&rb.step_results) {
            assert_eq!(x.p_out.entries(), y.p_out.entries());
            assert_eq!(x.mvm_count, y.mvm_count);
        }
    }

    #[test]
    fn infeasible_budget_still_solves() {
        let mut cfg = two_state_config(10, true);
        cfg.epsilon_step = 1e-3;
        cfg.epsilon_total = 1e-4;
        assert!(!cfg.budget_is_feasible());
        let p0 = ProbabilityVector::point_mass(2, 0);
        let hr = solve_horizon(&cfg, &p0).unwrap();
        assert_eq!(hr.len(), 10);
        assert_eq!(hr.detections(), 0, "no slack means no detection");
    }

    #[test]
    fn mismatched_initial_vector_is_rejected() {
        let cfg = two_state_config(2, false);
        let p0 = ProbabilityVector::point_mass(5, 0);
        assert!(solve_horizon(&cfg, &p0).is_err());
    }
}
