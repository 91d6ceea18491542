//! Vector representations accepted by the walk.
//!
//! The walk only ever needs three things from an input vector: its squared
//! norm, its inner product with the running sum, and a way to visit its
//! stored entries. Dense slices and sorted sparse vectors both provide them.

use std::fmt;

use crate::error::{Error, Result};

/// A sign in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i64())
    }
}

/// Inputs with `‖v‖₂ ≤ 1 + NORM_TOLERANCE` are accepted.
pub const NORM_TOLERANCE: f64 = 1e-12;

pub trait InputVector {
    fn norm_sq(&self) -> f64;

    /// Number of stored entries.
    fn nnz(&self) -> usize;

    /// Validates that the vector lives in a space of dimension `dim`.
    fn check_dim(&self, dim: usize, step: usize) -> Result<()>;

    /// Inner product with a dense vector. Indices must already be validated.
    fn dot(&self, w: &[f64]) -> f64;

    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F);

    fn check_norm(&self, step: usize) -> Result<()> {
        let norm = self.norm_sq().sqrt();
        if norm > 1.0 + NORM_TOLERANCE || norm.is_nan() {
            return Err(Error::NormViolation { step, norm });
        }
        Ok(())
    }
}

impl InputVector for [f64] {
    fn norm_sq(&self) -> f64 {
        self.iter().map(|x| x * x).sum()
    }

    fn nnz(&self) -> usize {
        self.len()
    }

    fn check_dim(&self, dim: usize, step: usize) -> Result<()> {
        if self.len() != dim {
            return Err(Error::DimensionMismatch {
                step,
                expected: dim,
                got: self.len(),
            });
        }
        Ok(())
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn for_each_entry<F: FnMut(usize, f64)>(&self, mut f: F) {
        for (i, &x) in self.iter().enumerate() {
            if x != 0.0 {
                f(i, x);
            }
        }
    }
}

impl InputVector for Vec<f64> {
    fn norm_sq(&self) -> f64 {
        self.as_slice().norm_sq()
    }
    fn nnz(&self) -> usize {
        self.len()
    }
    fn check_dim(&self, dim: usize, step: usize) -> Result<()> {
        self.as_slice().check_dim(dim, step)
    }
    fn dot(&self, w: &[f64]) -> f64 {
        self.as_slice().dot(w)
    }
    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F) {
        self.as_slice().for_each_entry(f)
    }
}

/// Borrowed sparse vector: parallel index/value slices, indices strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSlice<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseSlice<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

impl InputVector for SparseSlice<'_> {
    fn norm_sq(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    fn nnz(&self) -> usize {
        self.indices.len()
    }

    fn check_dim(&self, dim: usize, _step: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= dim) {
            Some(&index) => Err(Error::IndexOutOfBounds { index, len: dim }),
            None => Ok(()),
        }
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, x)| w[i] * x).sum()
    }

    fn for_each_entry<F: FnMut(usize, f64)>(&self, mut f: F) {
        for (i, x) in self.iter() {
            f(i, x);
        }
    }
}

/// Owned sparse vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    /// Builds a sparse vector from `(index, value)` pairs in any order.
    /// Duplicate indices are rejected.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::config(format!("duplicate sparse index {}", w[0].0)));
        }
        let (indices, values) = pairs.into_iter().unzip();
        Ok(Self { indices, values })
    }

    /// Indices must be strictly increasing.
    pub fn from_parts(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::config("sparse vector index/value length mismatch"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sparse indices must be strictly increasing"));
        }
        Ok(Self { indices, values })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_slice(&self) -> SparseSlice<'_> {
        SparseSlice {
            indices: &self.indices,
            values: &self.values,
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, x) in self.as_slice().iter() {
            out[i] = x;
        }
        out
    }
}

impl InputVector for SparseVec {
    fn norm_sq(&self) -> f64 {
        self.as_slice().norm_sq()
    }
    fn nnz(&self) -> usize {
        self.indices.len()
    }
    fn check_dim(&self, dim: usize, step: usize) -> Result<()> {
        self.as_slice().check_dim(dim, step)
    }
    fn dot(&self, w: &[f64]) -> f64 {
        self.as_slice().dot(w)
    }
    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F) {
        self.as_slice().for_each_entry(f)
    }
}

pub fn sup_norm(w: &[f64]) -> f64 {
    w.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
