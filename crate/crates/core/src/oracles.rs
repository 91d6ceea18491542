//! Baselines and ground truth: random signing, greedy cosh-potential signing,
//! exhaustive optimal signing for small instances, and the empirical
//! subgaussian moment estimator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, WalkRng};
use crate::stats::mean_and_se;
use crate::vector::{sup_norm, InputVector, Sign};
use crate::walk::{drive, Decision, Signer, VectorStream, WalkState, WalkTrace};

/// Fair coin per step: `ε = +1` iff `u < 1/2`. Never fails.
#[derive(Debug, Clone)]
pub struct RandomSigner {
    rng: WalkRng,
}

impl RandomSigner {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng_from_seed(seed),
        }
    }
}

impl Signer for RandomSigner {
    fn name(&self) -> &'static str {
        "random"
    }

    fn decide<V: InputVector + ?Sized>(&mut self, state: &WalkState, v: &V) -> Decision {
        let u: f64 = self.rng.random();
        let sign = if u < 0.5 { Sign::Plus } else { Sign::Minus };
        Decision::Sign {
            sign,
            inner: v.dot(state.w()),
        }
    }
}

pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Deterministic signing minimizing `Φ(w) = Σ_j cosh(λ w_j)`; ties go to `+1`.
#[derive(Debug, Clone)]
pub struct GreedySigner {
    lambda: f64,
    scratch: Vec<f64>,
}

impl GreedySigner {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::config(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self {
            lambda,
            scratch: Vec::new(),
        })
    }
}

/// `ln Σ_j cosh(λ x_j) + ln 2`, evaluated in log-sum-exp form so large
/// arguments cannot overflow. Each coordinate contributes the pair
/// `e^{λx−m} + e^{−λx−m}`, which is symmetric in the sign of `x`.
pub fn log_cosh_potential(x: &[f64], lambda: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, v| m.max((lambda * v).abs()));
    let s: f64 = x
        .iter()
        .map(|&v| (lambda * v - m).exp() + (-lambda * v - m).exp())
        .sum();
    m + s.ln()
}

impl Signer for GreedySigner {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn decide<V: InputVector + ?Sized>(&mut self, state: &WalkState, v: &V) -> Decision {
        let w = state.w();
        let inner = v.dot(w);
        self.scratch.clear();
        self.scratch.extend_from_slice(w);
        v.for_each_entry(|i, x| self.scratch[i] = w[i] + x);
        let plus = log_cosh_potential(&self.scratch, self.lambda);
        v.for_each_entry(|i, x| self.scratch[i] = w[i] - x);
        let minus = log_cosh_potential(&self.scratch, self.lambda);
        let sign = if minus < plus { Sign::Minus } else { Sign::Plus };
        Decision::Sign { sign, inner }
    }
}

pub fn random_signing<S: VectorStream>(stream: &mut S, seed: u64) -> Result<WalkTrace> {
    drive(stream, &mut RandomSigner::new(seed), seed, |_| {})
}

pub fn greedy_potential_signing<S: VectorStream>(stream: &mut S, lambda: f64) -> Result<WalkTrace> {
    drive(stream, &mut GreedySigner::new(lambda)?, 0, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `‖w_t‖∞`.
    FinalSup,
    /// `max_i ‖w_i‖∞`.
    PrefixSup,
}

pub const BRUTE_FORCE_MAX_T: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSigning {
    pub signs: Vec<Sign>,
    pub value: f64,
}

struct Search<'a> {
    vectors: &'a [Vec<f64>],
    objective: Objective,
    signs: Vec<Sign>,
    best: Option<OptimalSigning>,
}

impl Search<'_> {
    /// Depth-first over signs, `-1` before `+1`, so the first optimum found is
    /// the lexicographically smallest; only strict improvements replace it.
    fn visit(&mut self, depth: usize, w: &mut Vec<f64>, prefix_max: f64) {
        let best_value = self.best.as_ref().map_or(f64::INFINITY, |b| b.value);
        if self.objective == Objective::PrefixSup && prefix_max >= best_value {
            return;
        }
        if depth == self.vectors.len() {
            let value = match self.objective {
                Objective::FinalSup => sup_norm(w),
                Objective::PrefixSup => prefix_max,
            };
            if value < best_value {
                self.best = Some(OptimalSigning {
                    signs: self.signs.clone(),
                    value,
                });
            }
            return;
        }
        let choices: &[Sign] = if depth == 0 { &[Sign::Plus] } else { &[Sign::Minus, Sign::Plus] };
        for &s in choices {
            let e = s.as_f64();
            let v = &self.vectors[depth];
            let saved = w.clone();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += e * vi;
            }
            self.signs.push(s);
            let pm = prefix_max.max(sup_norm(w));
            self.visit(depth + 1, w, pm);
            self.signs.pop();
            *w = saved;
        }
    }
}

/// Exhaustive optimum over all `2^{t−1}` signings with `ε₁ = +1` (the
/// objectives are invariant under a global sign flip).
pub fn brute_force_optimal(vectors: &[Vec<f64>], objective: Objective) -> Result<OptimalSigning> {
    let t = vectors.len();
    if t > BRUTE_FORCE_MAX_T {
        return Err(Error::TooLarge(format!("brute force needs t <= {BRUTE_FORCE_MAX_T}, got {t}")));
    }
    let n = vectors.first().map_or(0, Vec::len);
    if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != n) {
        return Err(Error::DimensionMismatch {
            step: i + 1,
            expected: n,
            got: v.len(),
        });
    }
    if t == 0 {
        return Ok(OptimalSigning {
            signs: Vec::new(),
            value: 0.0,
        });
    }
    let mut search = Search {
        vectors,
        objective,
        signs: Vec::with_capacity(t),
        best: None,
    };
    search.visit(0, &mut vec![0.0; n], 0.0);
    Ok(search.best.expect("at least one signing is visited"))
}

/// Below this many usable traces the estimate is flagged as unreliable.
pub const MIN_RELIABLE_TRACES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub used: usize,
    pub failed: usize,
    /// Fewer than [`MIN_RELIABLE_TRACES`] usable traces.
    pub widened: bool,
}

/// Mean and standard error of `exp(⟨w_t, u⟩² / (4Lc))` over non-failed traces.
pub fn subgaussian_moment_estimate(traces: &[WalkTrace], u: &[f64], lc: f64) -> Result<MomentEstimate> {
    if !(lc > 0.0) {
        return Err(Error::config(format!("Lc = {lc} must be positive")));
    }
    u.check_norm(0)?;
    let failed = traces.iter().filter(|t| t.failed).count();
    let samples: Vec<f64> = traces
        .iter()
        .filter(|t| !t.failed)
        .map(|t| {
            u.check_dim(t.final_w.len(), 0)?;
            let x = u.dot(&t.final_w);
            Ok((x * x / (4.0 * lc)).exp())
        })
        .collect::<Result<_>>()?;
    if samples.is_empty() {
        return Err(Error::config("no non-failed traces to estimate from"));
    }
    let (estimate, std_error) = mean_and_se(&samples);
    Ok(MomentEstimate {
        estimate,
        std_error,
        used: samples.len(),
        failed,
        widened: samples.len() < MIN_RELIABLE_TRACES,
    })
}
