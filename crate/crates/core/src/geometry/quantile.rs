//! Per-coordinate quantile grids.
//!
//! For a distribution on `[0,1]^d` and horizon `t`, the grid holds
//! `q[k][j] = inf{ y : Pr[x(k) ≤ y] ≥ (j+1)/(dt) }` for `j = 0..dt`.

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, WalkRng};
use rand::Rng;

/// Exact per-coordinate quantile function.
pub trait QuantileOracle {
    fn dim(&self) -> usize;
    fn quantile(&self, k: usize, p: f64) -> f64;
}

pub trait PointSampler {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut WalkRng) -> Vec<f64>;
}

/// Sampler budget per quantile: `m = 100·dt` by default.
pub const SAMPLES_PER_QUANTILE: usize = 100;

pub enum DistributionAccess<'a> {
    Oracle(&'a dyn QuantileOracle),
    Sampler {
        sampler: &'a dyn PointSampler,
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSource {
    ExplicitCdf,
    EmpiricalSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    d: usize,
    t: usize,
    q: Vec<Vec<f64>>,
    source: GridSource,
}

impl QuantileGrid {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    pub fn source(&self) -> GridSource {
        self.source
    }

    /// Row `k`: the `dt` quantiles of coordinate `k`, nondecreasing.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.q[k]
    }

    pub fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.q.iter().flatten().copied()
    }

    /// Offline grid: empirical quantiles of the point set itself. Repeated
    /// values are allowed here since the data are what they are.
    pub fn from_points(points: &[Vec<f64>], d: usize) -> Result<Self> {
        let t = points.len();
        if d == 0 || t == 0 {
            return Err(Error::config("offline grid needs d >= 1 and at least one point"));
        }
        validate_points(points, d)?;
        let q = (0..d)
            .map(|k| {
                let mut col: Vec<f64> = points.iter().map(|p| p[k]).collect();
                col.sort_by(f64::total_cmp);
                empirical_row(&col, d * t)
            })
            .collect();
        Ok(Self {
            d,
            t,
            q,
            source: GridSource::EmpiricalSample,
        })
    }
}

pub(crate) fn validate_points(points: &[Vec<f64>], d: usize) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        validate_point(p, d, i)?;
    }
    Ok(())
}

pub(crate) fn validate_point(p: &[f64], d: usize, index: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::DimensionMismatch {
            step: index + 1,
            expected: d,
            got: p.len(),
        });
    }
    if let Some(&value) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideUnitCube { point: index, value });
    }
    Ok(())
}

/// `sorted[⌈(j+1)·m/count⌉ − 1]` for `j = 0..count`.
fn empirical_row(sorted: &[f64], count: usize) -> Vec<f64> {
    let m = sorted.len();
    (1..=count)
        .map(|j| sorted[(j * m).div_ceil(count) - 1])
        .collect()
}

fn reject_atoms(q: &[Vec<f64>]) -> Result<()> {
    for (k, row) in q.iter().enumerate() {
        if let Some(w) = row.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::AtomicDistribution { dim: k, value: w[0] });
        }
    }
    Ok(())
}

pub fn build_quantile_grid(dist: DistributionAccess<'_>, d: usize, t: usize) -> Result<QuantileGrid> {
    if d == 0 || t == 0 {
        return Err(Error::config("quantile grid needs d >= 1 and t >= 1"));
    }
    let count = d * t;
    let (q, source) = match dist {
        DistributionAccess::Oracle(oracle) => {
            if oracle.dim() != d {
                return Err(Error::DimensionMismatch {
                    step: 0,
                    expected: d,
                    got: oracle.dim(),
                });
            }
            let mut q = Vec::with_capacity(d);
            for k in 0..d {
                let row: Vec<f64> = (1..=count).map(|j| oracle.quantile(k, j as f64 / count as f64)).collect();
                if let Some(&value) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::OutsideUnitCube { point: 0, value });
                }
                q.push(row);
            }
            (q, GridSource::ExplicitCdf)
        }
        DistributionAccess::Sampler { sampler, samples, seed } => {
            if sampler.dim() != d {
                return Err(Error::DimensionMismatch {
                    step: 0,
                    expected: d,
                    got: sampler.dim(),
                });
            }
            if samples < SAMPLES_PER_QUANTILE * count {
                return Err(Error::config(format!(
                    "sample budget {samples} below {SAMPLES_PER_QUANTILE}*d*t = {}",
                    SAMPLES_PER_QUANTILE * count
                )));
            }
            let mut rng = rng_from_seed(seed);
            let pts: Vec<Vec<f64>> = (0..samples).map(|_| sampler.sample(&mut rng)).collect();
            validate_points(&pts, d)?;
            let q = (0..d)
                .map(|k| {
                    let mut col: Vec<f64> = pts.iter().map(|p| p[k]).collect();
                    col.sort_by(f64::total_cmp);
                    empirical_row(&col, count)
                })
                .collect();
            (q, GridSource::EmpiricalSample)
        }
    };
    reject_atoms(&q)?;
    Ok(QuantileGrid { d, t, q, source })
}

/// Uniform distribution on `[0,1]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformCube {
    pub d: usize,
}

impl QuantileOracle for UniformCube {
    fn dim(&self) -> usize {
        self.d
    }
    fn quantile(&self, _k: usize, p: f64) -> f64 {
        p
    }
}

impl PointSampler for UniformCube {
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, rng: &mut WalkRng) -> Vec<f64> {
        (0..self.d).map(|_| rng.random::<f64>()).collect()
    }
}

/// Independent coordinates `x(k) = U^{a_k}` with `U` uniform, so the quantile
/// of coordinate `k` at level `p` is `p^{a_k}`. Mass piles up near 0 for `a_k > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMarginals {
    pub exponents: Vec<f64>,
}

impl QuantileOracle for PowerMarginals {
    fn dim(&self) -> usize {
        self.exponents.len()
    }
    fn quantile(&self, k: usize, p: f64) -> f64 {
        p.powf(self.exponents[k])
    }
}

impl PointSampler for PowerMarginals {
    fn dim(&self) -> usize {
        self.exponents.len()
    }
    fn sample(&self, rng: &mut WalkRng) -> Vec<f64> {
        self.exponents.iter().map(|a| rng.random::<f64>().powf(*a)).collect()
    }
}

/// All mass at a single point. Only useful to exercise atom rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub at: Vec<f64>,
}

impl QuantileOracle for PointMass {
    fn dim(&self) -> usize {
        self.at.len()
    }
    fn quantile(&self, k: usize, _p: f64) -> f64 {
        self.at[k]
    }
}

impl PointSampler for PointMass {
    fn dim(&self) -> usize {
        self.at.len()
    }
    fn sample(&self, _rng: &mut WalkRng) -> Vec<f64> {
        self.at.clone()
    }
}
