//! Input-sparsity signing of matrix columns.
//!
//! Runs the balance rule over the columns of `A` with `c = 30 ln(t/δ)`,
//! checking only `|⟨w, v_i⟩| ≤ c` per step. The sup-norm is audited once at
//! the end against `√(8 c L ln n)`. Arithmetic work is one sparse inner product
//! and one sparse update per column, so `2·nnz(A)` entry touches in total.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::vector::{sup_norm, InputVector, Sign, SparseSlice, NORM_TOLERANCE};
use crate::walk::{compute_c, probability_from_inner, BIAS_FACTOR, SPREAD_CONSTANT};

/// Column-compressed sparse matrix with unit-bounded columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumnMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseColumnMatrix {
    /// Builds from per-column `(row, value)` lists. Rows are sorted; duplicate
    /// rows, out-of-range rows and columns with `‖·‖₂ > 1 + 1e-12` are rejected.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (j, mut col) in columns.into_iter().enumerate() {
            col.sort_by_key(|&(r, _)| r);
            for w in col.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::config(format!("column {j}: duplicate row {}", w[0].0)));
                }
            }
            if let Some(&(r, _)) = col.iter().find(|&&(r, _)| r >= n) {
                return Err(Error::IndexOutOfBounds { index: r, len: n });
            }
            let norm = col.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
            if norm > 1.0 + NORM_TOLERANCE || norm.is_nan() {
                return Err(Error::NormViolation { step: j + 1, norm });
            }
            for (r, x) in col {
                row_idx.push(r);
                values.push(x);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets (0-based).
    pub fn from_triplets(n: usize, t: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut columns = vec![Vec::new(); t];
        for &(r, c, x) in triplets {
            if c >= t {
                return Err(Error::IndexOutOfBounds { index: c, len: t });
            }
            columns[c].push((r, x));
        }
        Self::from_columns(n, columns)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn column(&self, j: usize) -> SparseSlice<'_> {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        SparseSlice {
            indices: &self.row_idx[a..b],
            values: &self.values[a..b],
        }
    }

    /// `A x` for a sign vector, recomputed from scratch.
    pub fn mul_signs(&self, x: &[Sign]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                step: 0,
                expected: self.cols(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for (j, s) in x.iter().enumerate() {
            let e = s.as_f64();
            for (r, v) in self.column(j).iter() {
                y[r] += e * v;
            }
        }
        Ok(y)
    }
}

/// `Σ w[row]·value` over the stored entries of `v`.
pub fn sparse_inner(w: &[f64], v: SparseSlice<'_>) -> Result<f64> {
    v.check_dim(w.len(), 0)?;
    Ok(v.dot(w))
}

/// `w ← w + ε v`, touching only the stored entries of `v`.
pub fn sparse_update(w: &mut [f64], v: SparseSlice<'_>, sign: Sign) -> Result<()> {
    v.check_dim(w.len(), 0)?;
    let e = sign.as_f64();
    for (r, x) in v.iter() {
        w[r] += e * x;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KomlosResult {
    #[serde(skip)]
    pub x: Vec<Sign>,
    /// `‖Ax‖∞` from a full recomputation of `Ax`.
    pub final_sup_norm: f64,
    /// `‖w_t‖∞` of the incrementally maintained sum.
    #[serde(skip)]
    pub incremental_sup_norm: f64,
    /// `√(8 c L ln n)`.
    pub threshold: f64,
    pub c: f64,
    pub delta: f64,
    pub failed_midrun: bool,
    /// First column (1-based) at which `|⟨w, v⟩| > c`.
    #[serde(skip)]
    pub first_failure: Option<usize>,
    pub exceeded_final: bool,
    pub nnz: usize,
    /// Entries touched by the walk: `2·nnz` for inner products and updates,
    /// plus `t` sign draws, plus `n` for the final sup-norm scan.
    pub touched: u64,
    /// Largest coordinate gap between the incremental sum and `Ax`.
    #[serde(skip)]
    pub recompute_gap: f64,
    pub seed: u64,
}

/// `min(t⁻², 1/2)`: a `1/poly(t)` failure budget kept inside (0, 1).
pub fn default_delta(t: usize) -> f64 {
    (1.0 / (t as f64 * t as f64)).min(0.5)
}

/// `√(8 c L ln n)`.
pub fn final_threshold(c: f64, n: usize) -> f64 {
    (8.0 * c * SPREAD_CONSTANT * (n as f64).ln()).sqrt()
}

/// Signs the columns of `a`. A mid-run inner-product failure does not stop
/// the run: the offending column is signed with the clamped probability and
/// the flag is raised.
pub fn run_komlos(a: &SparseColumnMatrix, delta: Option<f64>, seed: u64) -> Result<KomlosResult> {
    if a.cols() == 0 {
        return Err(Error::config("matrix has no columns"));
    }
    let delta = delta.unwrap_or_else(|| default_delta(a.cols()));
    let c = compute_c(1, a.cols(), delta)?;
    signing_pass(a, c, delta, seed)
}

/// [`run_komlos`] with an explicit bias scale `c ≥ 1` (experiments only).
pub fn run_komlos_with_c(a: &SparseColumnMatrix, c: f64, seed: u64) -> Result<KomlosResult> {
    if !(c >= 1.0) {
        return Err(Error::config(format!("c = {c} violates c >= 1")));
    }
    let delta = (a.cols() as f64 * (-c / BIAS_FACTOR).exp()).min(1.0);
    signing_pass(a, c, delta, seed)
}

fn signing_pass(a: &SparseColumnMatrix, c: f64, delta: f64, seed: u64) -> Result<KomlosResult> {
    let (n, t) = (a.rows(), a.cols());
    let threshold = final_threshold(c, n);

    let mut rng = rng_from_seed(seed);
    let mut w = vec![0.0; n];
    let mut x = Vec::with_capacity(t);
    let mut touched: u64 = 0;
    let mut first_failure = None;
    for j in 0..t {
        let col = a.column(j);
        let inner = col.dot(&w);
        touched += col.indices.len() as u64;
        if inner.abs() > c && first_failure.is_none() {
            first_failure = Some(j + 1);
        }
        let u: f64 = rng.random();
        touched += 1;
        // Branch-free: the sign is a coin flip the predictor cannot learn.
        let plus = u < probability_from_inner(inner, c);
        let e = f64::from(u8::from(plus)) * 2.0 - 1.0;
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        for (r, v) in col.iter() {
            w[r] += e * v;
        }
        touched += col.indices.len() as u64;
        x.push(sign);
    }
    let incremental_sup_norm = sup_norm(&w);
    touched += n as u64;

    let ax = a.mul_signs(&x)?;
    let final_sup_norm = sup_norm(&ax);
    let recompute_gap = ax.iter().zip(&w).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));

    Ok(KomlosResult {
        x,
        final_sup_norm,
        incremental_sup_norm,
        threshold,
        c,
        delta,
        failed_midrun: first_failure.is_some(),
        first_failure,
        exceeded_final: final_sup_norm > threshold,
        nnz: a.nnz(),
        touched,
        recompute_gap,
        seed,
    })
}
