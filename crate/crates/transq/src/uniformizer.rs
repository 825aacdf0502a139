//! One-step transient solve by truncated uniformization.
//!
//! With `P = I + Q/α` the step distribution is the Poisson mixture
//!
//! ```text
//! p(t+Δ) = Σ_{i≥0} Π(i) · β(αΔ, i),    Π(0) = p(t),  Π(i) = Π(i−1)·P,
//! ```
//!
//! where `β(αΔ, i)` is the Poisson(αΔ) probability of `i` events. The sum is
//! truncated to a window `[l, k]` whose discarded mass is at most ε_Δ
//! (half per side), so the truncated result is an entrywise lower bound on
//! the exact distribution and the ledger can charge ε_Δ for the step.
//!
//! When a steady-state detection threshold is supplied, each iterate is
//! compared against the exact stationary vector Π(∞); once the rigorous
//! mixture bound on `∥p(t+Δ) − Π(∞)∥_∞` falls under the threshold the
//! remaining iterations are skipped and Π(∞) is returned instead, with the
//! measured bound (plus ε_Δ) charged as the step error.

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::stationary::{inf_distance_slices, ProbabilityVector};

/// Smallest scaled Poisson weight kept by the outward recurrence; terms
/// below this are unrepresentable after normalization anyway.
const WEIGHT_CUTOFF: f64 = 1e-290;

/// Fixed-point residual above which a supplied stationary vector is
/// rejected by [`solve_step`].
const STATIONARY_CHECK_TOL: f64 = 1e-10;

/// How many consecutive nonincreasing distances detection requires.
const MONOTONE_WINDOW: usize = 5;

/// Poisson(αΔ) probabilities restricted to the index window `[left, right]`
/// that carries all but ε of the mass, split ε/2 per side.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    left: usize,
    right: usize,
    weights: Vec<f64>,
    mass_deficit: f64,
    cdf_prefix: f64,
}

impl PoissonWindow {
    /// Left truncation point `l`: the largest index with `Σ_{i<l} β ≤ ε/2`.
    pub fn left(&self) -> usize {
        self.left
    }

    /// Right truncation point `k`: the smallest index with upper tail ≤ ε/2.
    pub fn right(&self) -> usize {
        self.right
    }

    /// `β(αΔ, i)` for `i = left..=right`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass outside the window, `1 − Σ weights`.
    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    /// Mass below the window, `Σ_{i<left} β`.
    pub fn cdf_prefix(&self) -> f64 {
        self.cdf_prefix
    }

    /// Window width `right − left + 1` (the number of retained terms).
    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }
}

/// Compute the truncation window for a Poisson(`alpha_t`) mixture with total
/// discarded mass at most `epsilon`.
///
/// Weights are generated by the two-sided recurrence outward from the mode
/// (scaled so the mode weight is 1, cut off near 1e-290) and normalized by a
/// low-to-high directed total, so the retained window never underflows for
/// `alpha_t` up to 1e7 and beyond. `alpha_t = 0` returns the identity
/// window. Panics if `alpha_t` is negative or not finite, or if `epsilon`
/// lies outside `(0, 1)`.
pub fn poisson_window(alpha_t: f64, epsilon: f64) -> PoissonWindow {
    assert!(alpha_t.is_finite() && alpha_t >= 0.0, "alpha_t must be finite and nonnegative");
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    if alpha_t == 0.0 {
        return PoissonWindow {
            left: 0,
            right: 0,
            weights: vec![1.0],
            mass_deficit: 0.0,
            cdf_prefix: 0.0,
        };
    }

    let mode = alpha_t.floor() as usize;

    // Scaled weights w_i / w_mode outward from the mode.
    let mut below = Vec::new();
    let mut w = 1.0_f64;
    let mut i = mode;
    while i > 0 {
        w *= i as f64 / alpha_t;
        if w < WEIGHT_CUTOFF {
            break;
        }
        below.push(w);
        i -= 1;
    }
    let i_min = mode - below.len();

    let mut above = Vec::new();
    w = 1.0;
    let mut j = mode;
    loop {
        w *= alpha_t / (j + 1) as f64;
        if w < WEIGHT_CUTOFF {
            break;
        }
        above.push(w);
        j += 1;
    }

    let mut scaled = Vec::with_capacity(below.len() + 1 + above.len());
    scaled.extend(below.iter().rev());
    scaled.push(1.0);
    scaled.extend(&above);

    // Directed total: summing each side from its small outer end toward the
    // mode keeps the normalizer accurate to a few ulp.
    let mode_pos = below.len();
    let mut total = 0.0_f64;
    for v in &scaled[..mode_pos] {
        total += v;
    }
    let mut upper = 0.0_f64;
    for v in scaled[mode_pos..].iter().rev() {
        upper += v;
    }
    total += upper;
    for v in scaled.iter_mut() {
        *v /= total;
    }
    let beta = scaled;

    // Prefix masses from the left edge: the largest l with Σ_{i<l} β ≤ ε/2.
    // The mass below i_min is at most ~1e-285 and is treated as zero.
    let half = epsilon / 2.0;
    let mut cdf_prefix = 0.0_f64;
    let mut left = i_min;
    while left - i_min < beta.len() && cdf_prefix + beta[left - i_min] <= half {
        cdf_prefix += beta[left - i_min];
        left += 1;
    }

    // Suffix masses from the right edge: the smallest k with tail ≤ ε/2.
    let i_max = i_min + beta.len() - 1;
    let mut tail = 0.0_f64;
    let mut right = i_max;
    while right > left && tail + beta[right - i_min] <= half {
        tail += beta[right - i_min];
        right -= 1;
    }

    let weights = beta[left - i_min..=right - i_min].to_vec();
    PoissonWindow { left, right, weights, mass_deficit: cdf_prefix + tail, cdf_prefix }
}

/// One multiplication by the uniformized transition matrix: `p·P` computed
/// as `p + (p·Q)/α` without materializing `P`. `α = 0` means `P = I`.
pub fn dtmc_step(p: &ProbabilityVector, gen: &Generator) -> Result<ProbabilityVector> {
    if p.len() != gen.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs generator dimension {}",
            p.len(),
            gen.num_states()
        )));
    }
    if gen.alpha() == 0.0 {
        return Ok(p.clone());
    }
    let mut out = vec![0.0; p.len()];
    gen.apply_into(p.entries(), &mut out);
    Ok(ProbabilityVector::from_parts(out, p.defect()))
}

/// Outcome of a single uniformization step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Distribution at the end of the step (Π(∞) if detection fired).
    pub p_out: ProbabilityVector,
    /// Matrix–vector multiplications performed.
    pub mvm_count: usize,
    /// Whether steady-state detection replaced the mixture by Π(∞).
    pub steady_detected: bool,
    /// Error charged to the global ledger for this step: ε_Δ without
    /// detection, the measured mixture bound plus ε_Δ with it.
    pub error_charged: f64,
    /// Median ratio `d_i/d_{i−1}` of successive distances to Π(∞), an
    /// estimate of the DTMC's subdominant eigenvalue magnitude. Present
    /// only when detection ran for at least three distance ratios.
    pub rate_estimate: Option<f64>,
    /// Relative iterate change `max_j |Π_j(i) − Π_j(i−1)| / Π_j(i)` at the
    /// stopping iteration, a logged diagnostic of the classical relative
    /// convergence test. Present when detection fired after at least one
    /// multiplication.
    pub iterate_rel_test: Option<f64>,
}

/// Advance one homogeneous step of length `delta`.
///
/// Without detection (`delta_threshold = 0`) this is the truncated mixture:
/// the result is an entrywise lower bound on the exact distribution, its
/// defect grows by the window's mass deficit, and `epsilon_step` is charged.
///
/// With detection, iterate distances `d_i = ∥Π(i) − Π(∞)∥_∞` feed the
/// mixture bound `B_i = Σ_{j≤i} β_j d_j + (1 − Σ_{j≤i} β_j) d_i`, which is a
/// true bound on `∥p(t+Δ) − Π(∞)∥_∞` once the `d` sequence is nonincreasing.
/// Detection fires at the first `i` where `B_i ≤ delta_threshold·∥Π(∞)∥_∞`
/// and the last `min(i, 5)` distances were nonincreasing; the step then
/// returns Π(∞) with `B_i + epsilon_step` charged.
///
/// `pi_inf` must be the stationary vector of `gen`'s chain; it is validated
/// against the fixed-point residual `∥πP − π∥_∞ ≤ 1e-10` whenever it is used
/// (detection enabled and `α > 0`).
pub fn solve_step(
    p_in: &ProbabilityVector,
    gen: &Generator,
    delta: f64,
    epsilon_step: f64,
    delta_threshold: f64,
    pi_inf: &ProbabilityVector,
) -> Result<StepResult> {
    let n1 = gen.num_states();
    if p_in.len() != n1 || pi_inf.len() != n1 {
        return Err(Error::DimensionMismatch(format!(
            "vector lengths {} / {} vs generator dimension {n1}",
            p_in.len(),
            pi_inf.len()
        )));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidModel(format!(
            "step length must be finite and nonnegative, got {delta}"
        )));
    }
    if !(epsilon_step > 0.0 && epsilon_step < 1.0) {
        return Err(Error::InvalidModel(format!(
            "epsilon_step must lie in (0,1), got {epsilon_step}"
        )));
    }
    if !delta_threshold.is_finite() || delta_threshold < 0.0 {
        return Err(Error::InvalidModel(format!(
            "detection threshold must be finite and nonnegative, got {delta_threshold}"
        )));
    }

    if gen.alpha() == 0.0 || delta == 0.0 {
        return Ok(StepResult {
            p_out: p_in.clone(),
            mvm_count: 0,
            steady_detected: false,
            error_charged: 0.0,
            rate_estimate: None,
            iterate_rel_test: None,
        });
    }

    let detection = delta_threshold > 0.0;
    if detection {
        let mut buf = vec![0.0; n1];
        gen.apply_into(pi_inf.entries(), &mut buf);
        let residual = inf_distance_slices(&buf, pi_inf.entries());
        if residual > STATIONARY_CHECK_TOL {
            return Err(Error::StationaryMismatch { residual, tolerance: STATIONARY_CHECK_TOL });
        }
    }

    let window = poisson_window(gen.alpha() * delta, epsilon_step);
    let (l, k) = (window.left(), window.right());

    let mut acc = vec![0.0_f64; n1];
    let mut cur = p_in.entries().to_vec();
    let mut prev = vec![0.0_f64; n1];

    let mut dists: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut beta_cum = 0.0_f64;
    let mut weighted_d = 0.0_f64;
    let mut fired: Option<(usize, f64)> = None;

    let mut i = 0usize;
    loop {
        let beta_i = if i >= l { window.weights()[i - l] } else { 0.0 };

        if detection {
            let d_i = inf_distance_slices(&cur, pi_inf.entries());
            if i > 0 {
                let d_prev = dists[i - 1];
                if d_prev > 0.0 {
                    ratios.push(d_i / d_prev);
                }
            }
            dists.push(d_i);
            weighted_d += beta_i * d_i;
            beta_cum += beta_i;
            let bound = weighted_d + (1.0 - beta_cum) * d_i;
            let span = i.min(MONOTONE_WINDOW);
            let monotone = (0..span).all(|t| dists[i - t] <= dists[i - t - 1]);
            if monotone && bound <= delta_threshold * pi_inf.max_norm() {
                fired = Some((i, bound));
                break;
            }
        }

        if i >= l {
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += beta_i * c;
            }
        }
        if i == k {
            break;
        }
        gen.apply_into(&cur, &mut prev);
        std::mem::swap(&mut cur, &mut prev);
        i += 1;
    }

    let rate_estimate = if ratios.len() >= 3 { Some(median(&mut ratios)) } else { None };

    if let Some((stop, bound)) = fired {
        let iterate_rel_test = (stop > 0).then(|| {
            log::debug!(
                "steady-state detection at iteration {stop}: |iterate delta|_inf = {:e}",
                inf_distance_slices(&cur, &prev)
            );
            let mut rel = 0.0_f64;
            for (c, p) in cur.iter().zip(&prev) {
                if *c > 0.0 {
                    rel = rel.max((c - p).abs() / c);
                } else if *p != 0.0 {
                    rel = f64::INFINITY;
                }
            }
            rel
        });
        Ok(StepResult {
            p_out: pi_inf.clone(),
            mvm_count: stop,
            steady_detected: true,
            error_charged: bound + epsilon_step,
            rate_estimate,
            iterate_rel_test,
        })
    } else {
        let defect = p_in.defect() + window.mass_deficit() * (1.0 - p_in.defect());
        Ok(StepResult {
            p_out: ProbabilityVector::from_parts(acc, defect),
            mvm_count: k,
            steady_detected: false,
            error_charged: epsilon_step,
            rate_estimate,
            iterate_rel_test: None,
        })
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
