//! Covariance certificate for the walk.
//!
//! `M_0 = 0`, `M_i = (I − vvᵀ/c) M_{i−1} (I − vvᵀ/c) + L vvᵀ`. The Gaussian
//! `N(0, M_i)` is a mean-preserving spread of the walk's distribution at step
//! `i`, and `0 ⪯ M_i ⪯ LcI` for every `i`, which is where the tail bounds come from.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::vector::InputVector;

/// Eigenvalue slack for the PSD and `⪯ LcI` checks.
pub const EIGEN_TOLERANCE: f64 = 1e-9;

/// One step of the recursion without validation. Exact symmetry is kept by
/// computing the upper triangle and mirroring it.
fn recurse(m: &DMatrix<f64>, v: &DVector<f64>, c: f64, spread: f64) -> DMatrix<f64> {
    let n = v.len();
    let mv = m * v;
    let vmv = v.dot(&mv);
    let inv_c = 1.0 / c;
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = m[(i, j)] - inv_c * (v[i] * mv[j] + mv[i] * v[j])
                + inv_c * inv_c * vmv * v[i] * v[j]
                + spread * v[i] * v[j];
            out[(i, j)] = x;
            out[(j, i)] = x;
        }
    }
    out
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn check_spectrum(m: &DMatrix<f64>, bound: f64) -> Result<()> {
    let ev = eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo < -EIGEN_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue: lo });
    }
    if hi > bound + EIGEN_TOLERANCE {
        return Err(Error::AboveBound {
            max_eigenvalue: hi,
            bound,
        });
    }
    Ok(())
}

fn to_dense<V: InputVector + ?Sized>(v: &V, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    v.for_each_entry(|i, x| out[i] = x);
    out
}

/// `(I − c⁻¹vvᵀ) M (I − c⁻¹vvᵀ) + L vvᵀ`, with the input checked to satisfy
/// `0 ⪯ M ⪯ LcI`.
pub fn covariance_step(m: &DMatrix<f64>, v: &[f64], c: f64, spread: f64) -> Result<DMatrix<f64>> {
    if !(c >= 1.0) {
        return Err(Error::config(format!("c = {c} violates c >= 1")));
    }
    if !m.is_square() || m.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            step: 0,
            expected: m.nrows(),
            got: v.len(),
        });
    }
    v.check_norm(0)?;
    check_spectrum(m, spread * c)?;
    Ok(recurse(m, &DVector::from_column_slice(v), c, spread))
}

/// The sequence `M_i` maintained alongside a run. Costs O(n²) per step.
#[derive(Debug, Clone)]
pub struct CovarianceTracker {
    m: DMatrix<f64>,
    step: usize,
    c: f64,
    spread: f64,
}

impl CovarianceTracker {
    pub fn new(n: usize, c: f64, spread: f64) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::config(format!("c = {c} violates c >= 1")));
        }
        Ok(Self {
            m: DMatrix::zeros(n, n),
            step: 0,
            c,
            spread,
        })
    }

    pub fn push<V: InputVector + ?Sized>(&mut self, v: &V) {
        let dense = to_dense(v, self.m.nrows());
        self.m = recurse(&self.m, &dense, self.c, self.spread);
        self.step += 1;
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn lc(&self) -> f64 {
        self.c * self.spread
    }

    /// `uᵀ M u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        u.dot(&(&self.m * &u))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues(&self.m)
    }

    /// Largest deviation from exact symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.m.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)]).abs());
            }
        }
        worst
    }

    /// Checks `0 ⪯ M ⪯ LcI` within [`EIGEN_TOLERANCE`].
    pub fn verify(&self) -> Result<()> {
        check_spectrum(&self.m, self.lc())
    }
}

/// `E[exp(X²/(4Lc))]` for `X ~ N(0, σ²)`, which equals `(1 − σ²/(2Lc))^{-1/2}`.
pub fn gaussian_quadratic_moment(sigma2: f64, lc: f64) -> Result<f64> {
    if !(lc > 0.0) {
        return Err(Error::config(format!("Lc = {lc} must be positive")));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::config(format!("variance {sigma2} must be non-negative")));
    }
    let limit = 2.0 * lc;
    if sigma2 >= limit {
        return Err(Error::DivergentMoment { sigma2, limit });
    }
    Ok((1.0 - sigma2 / limit).powf(-0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::SPREAD_CONSTANT;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn first_step_from_zero() {
        let m = DMatrix::zeros(3, 3);
        let m1 = covariance_step(&m, &[1.0, 0.0, 0.0], 5.0, SPREAD_CONSTANT).unwrap();
        assert_relative_eq!(m1[(0, 0)], 2.0 * PI, epsilon = 1e-15);
        assert_eq!(m1.iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn scalar_recursion() {
        // 2π (1 - 1/2)² + 2π = 2.5π
        let m = DMatrix::from_element(1, 1, 2.0 * PI);
        let m1 = covariance_step(&m, &[1.0], 2.0, SPREAD_CONSTANT).unwrap();
        assert_relative_eq!(m1[(0, 0)], 2.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn top_of_range_stays_bounded() {
        let c = 3.0;
        let lc = SPREAD_CONSTANT * c;
        let m = DMatrix::identity(4, 4) * lc;
        let v = [0.5, 0.5, 0.5, 0.5];
        let m1 = covariance_step(&m, &v, c, SPREAD_CONSTANT).unwrap();
        let ev = eigenvalues(&m1);
        assert!(ev[3] <= lc + EIGEN_TOLERANCE);
        assert!(ev[0] >= -EIGEN_TOLERANCE);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let m = DMatrix::zeros(2, 2);
        assert!(covariance_step(&m, &[1.0, 0.0], 0.5, SPREAD_CONSTANT).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0]));
        assert!(matches!(
            covariance_step(&neg, &[1.0, 0.0], 2.0, SPREAD_CONSTANT),
            Err(Error::NotPsd { .. })
        ));
        let big = DMatrix::identity(2, 2) * 100.0;
        assert!(matches!(
            covariance_step(&big, &[1.0, 0.0], 2.0, SPREAD_CONSTANT),
            Err(Error::AboveBound { .. })
        ));
    }

    #[test]
    fn moment_closed_form() {
        let lc = 7.0;
        assert_eq!(gaussian_quadratic_moment(0.0, lc).unwrap(), 1.0);
        assert_relative_eq!(gaussian_quadratic_moment(lc, lc).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(gaussian_quadratic_moment(lc / 2.0, lc).unwrap(), 1.154_700_538_379_251_5, epsilon = 1e-14);
        assert!(matches!(
            gaussian_quadratic_moment(2.0 * lc, lc),
            Err(Error::DivergentMoment { .. })
        ));
    }

    /// Independent check of the closed form: composite Simpson quadrature of
    /// exp(x²/(4Lc)) φ_σ(x) over [-40σ, 40σ].
    #[test]
    fn moment_matches_quadrature() {
        let lc = 3.0;
        for &sigma2 in &[0.1, lc / 2.0, lc, 1.7 * lc] {
            let s = f64::sqrt(sigma2);
            let (a, b, n) = (-40.0 * s, 40.0 * s, 200_000);
            let h = (b - a) / n as f64;
            let f = |x: f64| (x * x / (4.0 * lc)).exp() * (-x * x / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2).sqrt();
            let mut acc = f(a) + f(b);
            for k in 1..n {
                let x = a + k as f64 * h;
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            let quad = acc * h / 3.0;
            assert_relative_eq!(gaussian_quadratic_moment(sigma2, lc).unwrap(), quad, max_relative = 1e-8);
        }
    }

    #[test]
    fn tracker_is_symmetric_and_bounded() {
        let mut tr = CovarianceTracker::new(3, 1.0, SPREAD_CONSTANT).unwrap();
        for i in 0..300 {
            let a = i as f64 * 0.71;
            let v = [a.cos() * 0.6, a.sin() * 0.6, 0.8 * (i % 2) as f64 * 0.5];
            tr.push(&v[..]);
        }
        assert_eq!(tr.step(), 300);
        assert!(tr.asymmetry() <= 1e-12);
        tr.verify().unwrap();
    }
}
