//! Input-sequence generators.
//!
//! Every source except [`SourceKind::AdaptiveOrthogonal`] is oblivious: its
//! output never depends on the signs chosen, and it refuses to be shown the
//! walk state. The adaptive source always emits a unit vector orthogonal to
//! the current partial sum, so `‖w_i‖₂² = i` for any signing rule.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, WalkRng};
use crate::walk::VectorStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IidDistribution {
    /// Uniform on `[-1, 1]^n`, scaled by `1/√n` into the unit ball.
    UniformCube,
    /// Uniform on the unit sphere.
    UniformSphere,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    FixedList(Vec<Vec<f64>>),
    Iid(IidDistribution),
    /// `e₁` at every step.
    RepeatedBasis,
    /// Exactly `s` nonzeros of value `±1/√s` at uniformly random positions.
    SparseRandom { s: usize },
    AdaptiveOrthogonal,
}

#[derive(Debug, Clone)]
pub struct VectorSource {
    kind: SourceKind,
    n: usize,
    t: usize,
    seed: u64,
    rng: WalkRng,
    emitted: usize,
}

impl VectorSource {
    pub fn new(kind: SourceKind, n: usize, t: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("source dimension must be positive"));
        }
        match &kind {
            SourceKind::FixedList(vs) => {
                if vs.len() != t {
                    return Err(Error::config(format!(
                        "fixed list holds {} vectors, horizon is {t}",
                        vs.len()
                    )));
                }
                if let Some((i, v)) = vs.iter().enumerate().find(|(_, v)| v.len() != n) {
                    return Err(Error::DimensionMismatch {
                        step: i + 1,
                        expected: n,
                        got: v.len(),
                    });
                }
            }
            SourceKind::SparseRandom { s } if *s == 0 || *s > n => {
                return Err(Error::config(format!("sparsity s = {s} must lie in [1, n = {n}]")));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            n,
            t,
            seed,
            rng: rng_from_seed(seed),
            emitted: 0,
        })
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The whole sequence of an oblivious source, generated up front.
    pub fn realize(&self) -> Result<Vec<Vec<f64>>> {
        if self.is_adaptive() {
            return Err(Error::Contract("an adaptive source has no fixed realization".into()));
        }
        let mut fresh = Self::new(self.kind.clone(), self.n, self.t, self.seed)?;
        (0..self.t).map(|_| fresh.next_vector(None)).collect()
    }

    fn oblivious_next(&mut self) -> Result<Vec<f64>> {
        let n = self.n;
        let v = match &self.kind {
            SourceKind::FixedList(vs) => vs
                .get(self.emitted)
                .cloned()
                .ok_or_else(|| Error::config("fixed list exhausted"))?,
            SourceKind::RepeatedBasis => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            }
            SourceKind::Iid(IidDistribution::UniformCube) => {
                let scale = 1.0 / (n as f64).sqrt();
                (0..n).map(|_| self.rng.random_range(-1.0..=1.0) * scale).collect()
            }
            SourceKind::Iid(IidDistribution::UniformSphere) => loop {
                let g: Vec<f64> = (0..n).map(|_| self.rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    break g.into_iter().map(|x| x / norm).collect();
                }
            },
            SourceKind::SparseRandom { s } => {
                let s = *s;
                let mag = 1.0 / (s as f64).sqrt();
                let mut v = vec![0.0; n];
                for i in index::sample(&mut self.rng, n, s) {
                    v[i] = if self.rng.random::<bool>() { mag } else { -mag };
                }
                v
            }
            SourceKind::AdaptiveOrthogonal => unreachable!("adaptive source handled separately"),
        };
        Ok(v)
    }

    /// Unit vector orthogonal to `w`: the first vector of the basis cycle
    /// starting at `e_{step mod n}` that is not parallel to `w`, with its `w`
    /// component projected out, normalized.
    fn orthogonal_next(&self, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let wn2: f64 = w.iter().map(|x| x * x).sum();
        for off in 0..n {
            let j = (self.emitted + off) % n;
            let mut u = vec![0.0; n];
            u[j] = 1.0;
            if wn2 > 0.0 {
                let coef = w[j] / wn2;
                for (ui, wi) in u.iter_mut().zip(w) {
                    *ui -= coef * wi;
                }
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return Ok(u.into_iter().map(|x| x / norm).collect());
            }
        }
        Err(Error::Contract(format!(
            "no direction orthogonal to the current state exists in dimension {n}"
        )))
    }
}

impl VectorStream for VectorSource {
    type Item = Vec<f64>;

    fn dim(&self) -> usize {
        self.n
    }

    fn horizon(&self) -> usize {
        self.t
    }

    fn is_adaptive(&self) -> bool {
        matches!(self.kind, SourceKind::AdaptiveOrthogonal)
    }

    fn next_vector(&mut self, observed: Option<&[f64]>) -> Result<Vec<f64>> {
        let v = match (self.is_adaptive(), observed) {
            (true, Some(w)) => {
                if w.len() != self.n {
                    return Err(Error::DimensionMismatch {
                        step: self.emitted + 1,
                        expected: self.n,
                        got: w.len(),
                    });
                }
                self.orthogonal_next(w)?
            }
            (true, None) => {
                return Err(Error::Contract("adaptive source requires the current state".into()))
            }
            (false, Some(_)) => {
                return Err(Error::Contract("oblivious source was shown the walk state".into()))
            }
            (false, None) => self.oblivious_next()?,
        };
        self.emitted += 1;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn repeated_basis() {
        let mut src = VectorSource::new(SourceKind::RepeatedBasis, 3, 5, 0).unwrap();
        for _ in 0..5 {
            assert_eq!(src.next_vector(None).unwrap(), vec![1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn orthogonal_to_e1() {
        let mut src = VectorSource::new(SourceKind::AdaptiveOrthogonal, 2, 4, 0).unwrap();
        let v = src.next_vector(Some(&[1.0, 0.0])).unwrap();
        assert!(v[0].abs() < 1e-15);
        assert!((v[1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sparse_random_shape() {
        let mut src = VectorSource::new(SourceKind::SparseRandom { s: 4 }, 16, 20, 3).unwrap();
        for _ in 0..20 {
            let v = src.next_vector(None).unwrap();
            let nz: Vec<f64> = v.iter().copied().filter(|&x| x != 0.0).collect();
            assert_eq!(nz.len(), 4);
            assert!(nz.iter().all(|x| x.abs() == 0.5));
            assert!((norm(&v) - 1.0).abs() < 1e-15);
        }
        assert!(VectorSource::new(SourceKind::SparseRandom { s: 17 }, 16, 1, 0).is_err());
    }

    #[test]
    fn iid_vectors_in_unit_ball() {
        for dist in [IidDistribution::UniformCube, IidDistribution::UniformSphere] {
            let mut src = VectorSource::new(SourceKind::Iid(dist), 7, 100, 5).unwrap();
            for _ in 0..100 {
                let v = src.next_vector(None).unwrap();
                assert!(norm(&v) <= 1.0 + 1e-12);
                if dist == IidDistribution::UniformSphere {
                    assert!((norm(&v) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn obliviousness_contract() {
        let mut src = VectorSource::new(SourceKind::RepeatedBasis, 2, 2, 0).unwrap();
        assert!(matches!(src.next_vector(Some(&[0.0, 0.0])), Err(Error::Contract(_))));
        let mut adv = VectorSource::new(SourceKind::AdaptiveOrthogonal, 2, 2, 0).unwrap();
        assert!(matches!(adv.next_vector(None), Err(Error::Contract(_))));
        assert!(adv.realize().is_err());
    }

    #[test]
    fn realize_matches_streaming() {
        let src = VectorSource::new(SourceKind::Iid(IidDistribution::UniformCube), 3, 10, 8).unwrap();
        let all = src.realize().unwrap();
        let mut again = src.clone();
        for v in &all {
            assert_eq!(&again.next_vector(None).unwrap(), v);
        }
    }

    #[test]
    fn fixed_list_validation() {
        assert!(VectorSource::new(SourceKind::FixedList(vec![vec![1.0]]), 2, 1, 0).is_err());
        assert!(VectorSource::new(SourceKind::FixedList(vec![vec![1.0]]), 1, 2, 0).is_err());
    }
}
