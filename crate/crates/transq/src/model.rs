//! Per-step birth–death queue models and their generator matrices.
//!
//! A staffed service system with `s` servers, `q` waiting positions,
//! balking and abandonment is a birth–death chain on `{0..n}` with
//!
//! ```text
//! birth  λ_k = λ            for 0 ≤ k ≤ s−1      (a free server)
//!        λ_k = γλ           for s ≤ k ≤ n−1      (join queue w.p. γ)
//! death  μ_k = kμ           for 1 ≤ k ≤ s−1
//!        μ_k = sμ + (k−s)η  for s ≤ k ≤ n        (busy servers + abandonment)
//! ```
//!
//! The horizon is split into steps on which all rates are constant;
//! [`StepProfile`] carries the per-step data and [`ScenarioConfig`] the whole
//! schedule. [`build_generator`] packs the rates into a tridiagonal generator
//! together with its uniformization rate `alpha = max_k (λ_k + μ_k)`.

use crate::error::{Error, Result};

/// Arrival, service, and staffing data for one piecewise-constant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepProfile {
    /// Arrival rate λ (events per time unit).
    pub lambda: f64,
    /// Per-server service rate μ.
    pub mu: f64,
    /// Number of servers `s`, at least 1.
    pub servers: usize,
}

impl StepProfile {
    /// Offered load ρ = λ/(sμ).
    pub fn load(&self) -> f64 {
        self.lambda / (self.servers as f64 * self.mu)
    }

    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidModel(format!(
                "arrival rate must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "service rate must be finite and positive, got {}",
                self.mu
            )));
        }
        if self.servers == 0 {
            return Err(Error::InvalidModel("server count must be at least 1".into()));
        }
        Ok(())
    }
}

/// A complete experiment description: step grid, per-step profiles, shared
/// balking/abandonment parameters, and solver tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Total modeled period `T` (same time unit as the rates).
    pub horizon: f64,
    /// Length Δ of each piecewise-constant step.
    pub step_length: f64,
    /// One profile per step; `steps.len() * step_length == horizon`.
    pub steps: Vec<StepProfile>,
    /// Probability γ that an arrival finding all servers busy joins the
    /// queue (balks with probability 1−γ).
    pub gamma: f64,
    /// Abandonment rate η; mean patience is 1/η. Zero disables abandonment.
    pub eta: f64,
    /// Waiting positions `q`; the state space is `{0..max_s + q}`.
    pub queue_capacity: usize,
    /// Per-step truncation error bound ε_Δ.
    pub epsilon_step: f64,
    /// Global error bound ε_T across the horizon.
    pub epsilon_total: f64,
    /// Whether steady-state detection may replace iterates by Π(∞).
    pub detection_enabled: bool,
}

impl ScenarioConfig {
    /// Largest state index `n = max_j(s_j) + q`, fixed over the horizon so
    /// distributions carry across steps without resizing.
    pub fn size_n(&self) -> usize {
        let max_servers = self.steps.iter().map(|p| p.servers).max().unwrap_or(1);
        max_servers + self.queue_capacity
    }

    /// Number of states `n + 1`.
    pub fn num_states(&self) -> usize {
        self.size_n() + 1
    }

    /// Whether the global budget can cover every step's truncation charge.
    /// A false value downgrades detection (threshold stays 0) but does not
    /// prevent solving.
    pub fn budget_is_feasible(&self) -> bool {
        self.epsilon_total >= self.steps.len() as f64 * self.epsilon_step
    }

    /// Check all scenario invariants except the soft budget condition.
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidScenario("scenario has no steps".into()));
        }
        if !self.step_length.is_finite() || self.step_length <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "step length must be finite and positive, got {}",
                self.step_length
            )));
        }
        let implied = self.steps.len() as f64 * self.step_length;
        if !self.horizon.is_finite() || (self.horizon - implied).abs() > 1e-9 * implied.max(1.0) {
            return Err(Error::InvalidScenario(format!(
                "horizon {} does not equal steps × step length = {}",
                self.horizon, implied
            )));
        }
        if !self.gamma.is_finite() || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidScenario(format!(
                "gamma must lie in [0,1], got {}",
                self.gamma
            )));
        }
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "abandonment rate must be finite and nonnegative, got {}",
                self.eta
            )));
        }
        if !self.epsilon_step.is_finite() || self.epsilon_step <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "epsilon_step must be finite and positive, got {}",
                self.epsilon_step
            )));
        }
        if !self.epsilon_total.is_finite() || self.epsilon_total <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "epsilon_total must be finite and positive, got {}",
                self.epsilon_total
            )));
        }
        for (j, profile) in self.steps.iter().enumerate() {
            profile
                .validate()
                .map_err(|e| Error::InvalidScenario(format!("step {j}: {e}")))?;
        }
        Ok(())
    }
}

/// State-dependent birth and death rate vectors on `{0..n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathModel {
    /// `birth[k]` is the rate from state `k` to `k+1`, for `k = 0..n−1`.
    birth: Vec<f64>,
    /// `death[k]` is the rate from state `k+1` to `k`, for `k = 0..n−1`
    /// (i.e. `death[k]` stores μ_{k+1}).
    death: Vec<f64>,
}

impl BirthDeathModel {
    /// Build directly from rate vectors. Both must have length `n` for a
    /// chain on `{0..n}`, with finite nonnegative entries.
    pub fn new(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        if birth.is_empty() || birth.len() != death.len() {
            return Err(Error::InvalidModel(format!(
                "rate vectors must be nonempty and of equal length, got {} and {}",
                birth.len(),
                death.len()
            )));
        }
        for (k, &r) in birth.iter().chain(death.iter()).enumerate() {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "rate entry {k} must be finite and nonnegative, got {r}"
                )));
            }
        }
        Ok(Self { birth, death })
    }

    /// Largest state index `n`.
    pub fn size_n(&self) -> usize {
        self.birth.len()
    }

    /// Number of states `n + 1`.
    pub fn num_states(&self) -> usize {
        self.birth.len() + 1
    }

    /// Birth rates λ_k for `k = 0..n−1`.
    pub fn birth_rates(&self) -> &[f64] {
        &self.birth
    }

    /// Death rates μ_{k+1} for `k = 0..n−1` (entry `k` is the rate out of
    /// state `k+1` downward).
    pub fn death_rates(&self) -> &[f64] {
        &self.death
    }
}

/// Build the birth–death rates for one step.
///
/// `n` is the largest state index; it must be at least `profile.servers` so
/// the queue capacity `n − s` is nonnegative.
pub fn build_rates(profile: &StepProfile, gamma: f64, eta: f64, n: usize) -> Result<BirthDeathModel> {
    profile.validate()?;
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidModel(format!("gamma must lie in [0,1], got {gamma}")));
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidModel(format!(
            "abandonment rate must be finite and nonnegative, got {eta}"
        )));
    }
    let s = profile.servers;
    if n < s {
        return Err(Error::InvalidModel(format!(
            "state space max {n} is below server count {s} (negative queue capacity)"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidModel("state space must have at least two states".into()));
    }

    let (lambda, mu) = (profile.lambda, profile.mu);
    let birth: Vec<f64> = (0..n)
        .map(|k| if k < s { lambda } else { gamma * lambda })
        .collect();
    let death: Vec<f64> = (1..=n)
        .map(|k| {
            if k < s {
                k as f64 * mu
            } else {
                s as f64 * mu + (k - s) as f64 * eta
            }
        })
        .collect();
    BirthDeathModel::new(birth, death)
}

/// Tridiagonal generator `Q` of a birth–death chain plus its uniformization
/// rate `alpha`, the maximum total exit rate over all states.
///
/// The uniformized transition matrix `P = I + Q/alpha` is never materialized;
/// [`crate::uniformizer::dtmc_step`] applies it from the stored diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    birth: Vec<f64>,
    death: Vec<f64>,
    diag: Vec<f64>,
    alpha: f64,
}

impl Generator {
    /// Number of states `n + 1`.
    pub fn num_states(&self) -> usize {
        self.diag.len()
    }

    /// Uniformization rate `alpha = max_k (λ_k + μ_k)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Super-diagonal (birth) rates, length `n`.
    pub fn birth_rates(&self) -> &[f64] {
        &self.birth
    }

    /// Sub-diagonal (death) rates, length `n`; entry `k` is μ_{k+1}.
    pub fn death_rates(&self) -> &[f64] {
        &self.death
    }

    /// Diagonal entries `q_kk = −(λ_k + μ_k)`, length `n + 1`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Same generator with an inflated uniformization rate. Any `alpha` at
    /// least the exit-rate maximum keeps `P = I + Q/alpha` stochastic;
    /// larger values add self-loop probability everywhere, which slows the
    /// mixture but can break periodicity of `P`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < self.alpha {
            return Err(Error::InvalidModel(format!(
                "uniformization rate {alpha} is below the exit-rate maximum {}",
                self.alpha
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// One multiplication by the uniformized matrix: `dst = src·P` computed
    /// as `src + (src·Q)/alpha`, with tiny negative rounding residues
    /// clamped to zero. Panics on dimension mismatch or `alpha == 0`; the
    /// public wrapper [`crate::uniformizer::dtmc_step`] checks both.
    pub(crate) fn apply_into(&self, src: &[f64], dst: &mut [f64]) {
        let n1 = self.diag.len();
        assert_eq!(src.len(), n1);
        assert_eq!(dst.len(), n1);
        assert!(self.alpha > 0.0);
        let a = self.alpha;
        if n1 == 1 {
            dst[0] = src[0];
            return;
        }
        dst[0] = (src[0] + (src[0] * self.diag[0] + src[1] * self.death[0]) / a).max(0.0);
        for j in 1..n1 - 1 {
            let flow =
                src[j - 1] * self.birth[j - 1] + src[j] * self.diag[j] + src[j + 1] * self.death[j];
            dst[j] = (src[j] + flow / a).max(0.0);
        }
        let n = n1 - 1;
        dst[n] = (src[n] + (src[n - 1] * self.birth[n - 1] + src[n] * self.diag[n]) / a).max(0.0);
    }
}

/// Pack a birth–death model into its generator.
///
/// Diagonal entries are computed as the exact negation of the off-diagonal
/// row sum, so every row sums to zero with no rounding residue. `alpha` is
/// the exact row-rate maximum with no inflation factor.
pub fn build_generator(model: &BirthDeathModel) -> Generator {
    let n = model.size_n();
    let birth = model.birth_rates().to_vec();
    let death = model.death_rates().to_vec();
    let mut diag = Vec::with_capacity(n + 1);
    let mut alpha: f64 = 0.0;
    for k in 0..=n {
        let out_up = if k < n { birth[k] } else { 0.0 };
        let out_down = if k > 0 { death[k - 1] } else { 0.0 };
        let exit = out_up + out_down;
        diag.push(-exit);
        alpha = alpha.max(exit);
    }
    Generator { birth, death, diag, alpha }
}
