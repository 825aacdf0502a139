//! Stationary distributions of birth–death chains, and the probability
//! vector type every solver produces and consumes.
//!
//! Birth–death chains satisfy detailed balance, so the stationary vector has
//! the product form `π_{k+1} = π_k · λ_k / μ_{k+1}`. The ratios can span
//! hundreds of orders of magnitude for heavily loaded or barely loaded
//! systems; [`stationary_distribution`] renormalizes the running terms
//! against their current maximum to stay inside f64 range.

use crate::error::{Error, Result};
use crate::model::BirthDeathModel;

/// Absolute slack allowed between the entry sum and `1 − defect`.
const SUM_TOL: f64 = 1e-12;

/// How many product terms may accumulate between renormalization sweeps.
const RENORM_INTERVAL: usize = 64;

/// Rescale early if a term grows beyond this, whatever the sweep cadence.
const RENORM_MAGNITUDE: f64 = 1e250;

/// A distribution over states `{0..n}`, possibly missing `defect` mass
/// removed by truncation. Immutable after construction; the max-norm is
/// cached because steady-state detection divides by it on every check.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
    defect: f64,
    max_entry: f64,
}

impl ProbabilityVector {
    /// A defect-free distribution. Entries must be nonnegative, finite, and
    /// sum to 1 within `1e-12`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::with_defect(entries, 0.0)
    }

    /// A distribution missing `defect` probability mass: entries must sum
    /// into `[1 − defect − 1e-12, 1 + 1e-12]`.
    pub fn with_defect(entries: Vec<f64>, defect: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidVector("no entries".into()));
        }
        if !(0.0..=1.0).contains(&defect) {
            return Err(Error::InvalidVector(format!("defect {defect} outside [0,1]")));
        }
        for (i, &p) in entries.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidVector(format!(
                    "entry {i} must be finite and nonnegative, got {p}"
                )));
            }
        }
        let sum: f64 = entries.iter().sum();
        if sum < 1.0 - defect - SUM_TOL || sum > 1.0 + SUM_TOL {
            return Err(Error::InvalidVector(format!(
                "entries sum to {sum}, expected within {SUM_TOL:e} of [1 − {defect}, 1]"
            )));
        }
        Ok(Self::from_parts(entries, defect))
    }

    /// Internal constructor for vectors built by trusted numerical kernels:
    /// clamps rounding-level negatives (≥ −1e-12) and caches the max.
    pub(crate) fn from_parts(mut entries: Vec<f64>, defect: f64) -> Self {
        let mut max_entry: f64 = 0.0;
        for p in &mut entries {
            debug_assert!(*p >= -1e-12, "entry {p} below clamping floor");
            if *p < 0.0 {
                *p = 0.0;
            }
            if *p > max_entry {
                max_entry = *p;
            }
        }
        Self { entries, defect, max_entry }
    }

    /// All mass on state `state`.
    pub fn point_mass(num_states: usize, state: usize) -> Self {
        assert!(state < num_states, "state {state} outside 0..{num_states}");
        let mut entries = vec![0.0; num_states];
        entries[state] = 1.0;
        Self { entries, defect: 0.0, max_entry: 1.0 }
    }

    /// Number of states `n + 1`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True if the vector has no entries (never constructible).
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The entries `p_0..p_n`.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Probability of state `i`.
    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    /// Probability mass removed by truncation so far.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Cached ∞-norm (largest entry).
    pub fn max_norm(&self) -> f64 {
        self.max_entry
    }

    /// Sum of all entries (≈ `1 − defect`).
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// `∥self − other∥_∞`. Panics on length mismatch.
    pub fn inf_distance(&self, other: &ProbabilityVector) -> f64 {
        assert_eq!(self.len(), other.len(), "vector lengths differ");
        inf_distance_slices(&self.entries, &other.entries)
    }
}

pub(crate) fn inf_distance_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        d = d.max((x - y).abs());
    }
    d
}

/// Exact stationary distribution Π(∞) of a birth–death chain via the
/// detailed-balance product form.
///
/// Fails with [`Error::NotIrreducible`] when a zero death rate sits above a
/// state that is reachable with positive birth rate, since the stationary
/// vector is then not unique on `{0..n}`. States cut off by a zero birth
/// rate simply receive probability zero.
pub fn stationary_distribution(model: &BirthDeathModel) -> Result<ProbabilityVector> {
    let n = model.size_n();
    let birth = model.birth_rates();
    let death = model.death_rates();

    let mut term = vec![0.0_f64; n + 1];
    term[0] = 1.0;
    let mut cur = 1.0_f64;
    let mut run_max = 1.0_f64;
    for k in 0..n {
        let next = if cur == 0.0 || birth[k] == 0.0 {
            0.0
        } else if death[k] == 0.0 {
            return Err(Error::NotIrreducible { state: k + 1 });
        } else {
            cur * (birth[k] / death[k])
        };
        term[k + 1] = next;
        cur = next;
        if next > run_max {
            run_max = next;
        }
        if (k + 1) % RENORM_INTERVAL == 0 || next > RENORM_MAGNITUDE {
            if run_max != 1.0 {
                for t in term[..=k + 1].iter_mut() {
                    *t /= run_max;
                }
                cur = term[k + 1];
                run_max = 1.0;
            }
        }
    }

    let total: f64 = term.iter().sum();
    debug_assert!(total.is_finite() && total > 0.0);
    for t in term.iter_mut() {
        *t /= total;
    }
    Ok(ProbabilityVector::from_parts(term, 0.0))
}
