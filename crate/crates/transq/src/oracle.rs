//! Brute-force reference implementations used only for verification.
//!
//! These deliberately share no numerical kernels with the production
//! modules: the matrix exponential is dense Taylor scaling-and-squaring,
//! the stationary solve is dense Gaussian elimination, and the Poisson cdf
//! is a compensated forward recurrence from index 0. Agreement between a
//! production path and its oracle is therefore evidence, not tautology.

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::stationary::ProbabilityVector;

/// Largest dimension the dense oracles accept.
pub const MAX_DENSE_DIM: usize = 500;

/// Row-major square matrix with a hard size cap.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major data of length `n·n`; every entry must be finite.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_DIM {
            return Err(Error::DenseCapExceeded { n, cap: MAX_DENSE_DIM });
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}×{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("matrix entry is not finite".into()));
        }
        Ok(Self { n, data })
    }

    /// Zero matrix.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n])
    }

    /// Densify a tridiagonal generator.
    pub fn from_generator(gen: &Generator) -> Result<Self> {
        let n1 = gen.num_states();
        let mut m = Self::zeros(n1)?;
        for k in 0..n1 {
            m.set(k, k, gen.diagonal()[k]);
            if k + 1 < n1 {
                m.set(k, k + 1, gen.birth_rates()[k]);
                m.set(k + 1, k, gen.death_rates()[k]);
            }
        }
        Ok(m)
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    /// Overwrite entry at `(row, col)`.
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.n + col] = v;
    }

    fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        DenseMatrix { n, data: out }
    }

    fn scaled(&self, f: f64) -> DenseMatrix {
        DenseMatrix { n: self.n, data: self.data.iter().map(|v| v * f).collect() }
    }

    fn max_abs_row_sum(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Dense matrix exponential `exp(Q·delta)` by Taylor series with scaling and
/// squaring: scale until the norm is ≤ 1/2, sum the series to machine
/// precision, square back up.
pub fn expm(q: &DenseMatrix, delta: f64) -> Result<DenseMatrix> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidModel(format!(
            "time increment must be finite and nonnegative, got {delta}"
        )));
    }
    let n = q.dim();
    let b = q.scaled(delta);
    let norm = b.max_abs_row_sum();
    let squarings = if norm <= 0.5 { 0 } else { (norm / 0.5).log2().ceil() as u32 };
    let m = b.scaled(0.5_f64.powi(squarings as i32));

    let mut result = DenseMatrix::zeros(n)?;
    for i in 0..n {
        result.set(i, i, 1.0);
    }
    let mut term = result.clone();
    for k in 1..=64 {
        term = term.matmul(&m).scaled(1.0 / k as f64);
        for (r, t) in result.data.iter_mut().zip(&term.data) {
            *r += t;
        }
        if term.max_abs_row_sum() < 1e-19 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// Reference one-step transient solve: `p·exp(QΔ)`.
pub fn expm_step(p: &ProbabilityVector, q: &DenseMatrix, delta: f64) -> Result<ProbabilityVector> {
    let n = q.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs matrix dimension {n}",
            p.len()
        )));
    }
    let e = expm(q, delta)?;
    let mut out = vec![0.0_f64; n];
    for (i, &pi) in p.entries().iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for j in 0..n {
            out[j] += pi * e.get(i, j);
        }
    }
    Ok(ProbabilityVector::from_parts(out, p.defect()))
}

/// Reference stationary solve of `πQ = 0`, `Σπ = 1` by direct elimination
/// in the Grassmann–Taksar–Heyman form: states are folded away one at a
/// time using only the off-diagonal rates, so every intermediate quantity
/// is a sum or product of nonnegatives. The absence of subtractions keeps
/// each entry accurate to a few ulps even when the global-balance system is
/// ill conditioned, which a pivoted solve of the normalized equations is
/// not able to guarantee (nearly decoupled chains admit residual-zero
/// solutions that differ in the sixth digit).
pub fn dense_stationary(q: &DenseMatrix) -> Result<ProbabilityVector> {
    let n = q.dim();
    let mut rates = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rates[i * n + j] = q.get(i, j);
            }
        }
    }

    // Fold states n-1 .. 1 into the rest.
    for k in (1..n).rev() {
        let outflow: f64 = rates[k * n..k * n + k].iter().sum();
        if outflow <= 0.0 {
            return Err(Error::SingularSystem);
        }
        for i in 0..k {
            rates[i * n + k] /= outflow;
        }
        for i in 0..k {
            let f = rates[i * n + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    rates[i * n + j] += f * rates[k * n + j];
                }
            }
        }
    }

    // Unwind: x[k] accumulates only nonnegative products.
    let mut x = vec![0.0_f64; n];
    x[0] = 1.0;
    for k in 1..n {
        let mut acc = 0.0;
        for i in 0..k {
            acc += x[i] * rates[i * n + k];
        }
        x[k] = acc;
    }

    let total: f64 = x.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::SingularSystem);
    }
    for v in x.iter_mut() {
        *v /= total;
    }
    Ok(ProbabilityVector::from_parts(x, 0.0))
}

// Double-double helpers for the Poisson cdf: an unevaluated sum hi + lo
// carrying ~32 significant digits. Only the handful of operations the cdf
// recurrence needs are implemented.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    fn mul_f64(self, v: f64) -> Dd {
        let p = two_prod(self.hi, v);
        quick_two_sum(p.hi, p.lo + self.lo * v)
    }

    fn div_f64(self, v: f64) -> Dd {
        let q1 = self.hi / v;
        let p = two_prod(q1, v);
        let r = two_sum(self.hi - p.hi, self.lo - p.lo);
        let q2 = (r.hi + r.lo) / v;
        quick_two_sum(q1, q2)
    }

    fn scale_pow2(self, f: f64) -> Dd {
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

// log2(e) split to double-double precision.
const LOG2E_HI: f64 = 1.4426950408889634;
const LOG2E_LO: f64 = 7.359924681001891e-18;
const LN2: f64 = std::f64::consts::LN_2;

/// `x · 2^e` with graceful underflow to zero and a hard stop on overflow
/// (never reached: callers keep the result ≤ 1).
fn ldexp(x: f64, e: i64) -> f64 {
    if x == 0.0 || e == 0 {
        return x;
    }
    if e < -1200 {
        return 0.0;
    }
    assert!(e <= 1023, "ldexp overflow");
    // Split so each factor stays inside normal range.
    if e >= -1022 {
        x * 2.0_f64.powi(e as i32)
    } else {
        x * 2.0_f64.powi(-600) * 2.0_f64.powi((e + 600) as i32)
    }
}

/// `e^{−a}` as (mantissa, base-2 exponent) with ~1e-15 relative accuracy
/// even for `a` up to 1e7, via a double-double reduction of `a·log2(e)`.
fn exp_neg_extended(a: f64) -> (f64, i64) {
    if a == 0.0 {
        return (1.0, 0);
    }
    let y = Dd { hi: LOG2E_HI, lo: LOG2E_LO }.mul_f64(a);
    let n = y.hi.round();
    let f = two_sum(y.hi - n, y.lo);
    // 2^{−(f.hi+f.lo)} = exp2(−f.hi)·(1 − f.lo·ln2 + O(f.lo²))
    let mant = (-f.hi).exp2() * (1.0 - f.lo * LN2);
    (mant, -(n as i64))
}

/// Cumulative Poisson probability `Σ_{i≤k} e^{−αt} (αt)^i / i!`.
///
/// Terms are carried as a double-double mantissa with a separate power-of-two
/// exponent, so the relative error stays near machine precision (~1e-15 in
/// the retained regime) instead of degrading like `αt·u` as a log-space
/// evaluation would. Supports `alpha_t` up to 1e7.
pub fn poisson_cdf_reference(alpha_t: f64, k: usize) -> f64 {
    assert!(
        alpha_t.is_finite() && (0.0..=1e7).contains(&alpha_t),
        "alpha_t {alpha_t} outside [0, 1e7]"
    );
    if alpha_t == 0.0 {
        return 1.0;
    }

    let (m0, e0) = exp_neg_extended(alpha_t);
    let mut term = Dd::from(m0);
    let mut exp2: i64 = e0;

    // Kahan-compensated accumulation of the materialized terms.
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let add = |v: f64, sum: &mut f64, comp: &mut f64| {
        let y = v - *comp;
        let t = *sum + y;
        *comp = (t - *sum) - y;
        *sum = t;
    };

    add(ldexp(term.to_f64(), exp2), &mut sum, &mut comp);
    for i in 1..=k {
        term = term.mul_f64(alpha_t).div_f64(i as f64);
        // Keep the mantissa inside [2^-512, 2^512]; rescaling by powers of
        // two is exact.
        if term.hi > 1.3407807929942597e154 {
            term = term.scale_pow2(7.458340731200207e-155);
            exp2 += 512;
        } else if term.hi < 7.458340731200207e-155 {
            term = term.scale_pow2(1.3407807929942597e154);
            exp2 -= 512;
        }
        add(ldexp(term.to_f64(), exp2), &mut sum, &mut comp);
    }
    sum.min(1.0)
}
