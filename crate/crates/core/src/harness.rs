//! Seeded multi-trial experiments.
//!
//! Trial `i` of a run with master seed `m` uses seed `derive_seed(m, i)`;
//! its input source, when random, is seeded with `derive_seed(seed, 0)`.
//! Trials run on the rayon pool and come back in trial order, so results do
//! not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversaries::{SourceKind, VectorSource};
use crate::error::{Error, Result};
use crate::oracles::{GreedySigner, RandomSigner, DEFAULT_LAMBDA};
use crate::seed::derive_seed;
use crate::stats::{median, quantile};
use crate::walk::{drive, run_balance, BalanceSigner, VectorStream, WalkConfig, WalkTrace};

/// Seed of trial `i`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

/// Seed of the input source of a trial.
pub fn source_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, 0)
}

/// `f(trial, seed)` for every trial, in parallel, returned in trial order.
pub fn run_trials<T, F>(master: u64, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, trial_seed(master, i)))
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers (0 means rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub failed: bool,
    pub fail_step: Option<usize>,
    pub max_sup_norm: f64,
    pub max_inner: f64,
    pub c: f64,
}

impl TrialRow {
    pub fn from_trace(trial: usize, trace: &WalkTrace, c: f64) -> Self {
        Self {
            trial,
            seed: trace.seed,
            failed: trace.failed,
            fail_step: trace.fail_step,
            max_sup_norm: trace.max_sup_norm(),
            max_inner: trace.max_inner,
            c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub failures: usize,
    pub failure_fraction: f64,
    /// Over all trials, failed ones included (their prefix up to the failure).
    pub median_max_sup_norm: f64,
    pub p95_max_sup_norm: f64,
}

pub fn summarize(rows: &[TrialRow]) -> Summary {
    let failures = rows.iter().filter(|r| r.failed).count();
    let sups: Vec<f64> = rows.iter().map(|r| r.max_sup_norm).collect();
    let (median_max_sup_norm, p95_max_sup_norm) = if sups.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (median(&sups), quantile(&sups, 0.95))
    };
    Summary {
        trials: rows.len(),
        failures,
        failure_fraction: if rows.is_empty() { 0.0 } else { failures as f64 / rows.len() as f64 },
        median_max_sup_norm,
        p95_max_sup_norm,
    }
}

/// The balance walk on a fresh source per trial.
pub fn balance_trials(kind: &SourceKind, config: &WalkConfig, master: u64, trials: usize) -> Result<Vec<TrialRow>> {
    run_trials(master, trials, |i, seed| {
        let mut src = VectorSource::new(kind.clone(), config.n, config.t, source_seed(seed))?;
        let trace = run_balance(&mut src, config, seed)?;
        Ok(TrialRow::from_trace(i, &trace, config.c))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Balance,
    Random,
    Greedy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Balance, Algorithm::Random, Algorithm::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Balance => "balance",
            Algorithm::Random => "random",
            Algorithm::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm {s:?} (expected balance, random or greedy)")))
    }
}

/// One algorithm on one stream. Random signing uses the trial seed; the
/// greedy rule ignores it.
pub fn run_algorithm<S: VectorStream>(
    alg: Algorithm,
    stream: &mut S,
    config: &WalkConfig,
    seed: u64,
    lambda: f64,
) -> Result<WalkTrace> {
    match alg {
        Algorithm::Balance => drive(stream, &mut BalanceSigner::new(config.clone(), seed), seed, |_| {}),
        Algorithm::Random => drive(stream, &mut RandomSigner::new(seed), seed, |_| {}),
        Algorithm::Greedy => drive(stream, &mut GreedySigner::new(lambda)?, seed, |_| {}),
    }
}

/// About `count` steps spread evenly over `1..=t`, always including `t`.
pub fn checkpoints(t: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, t.max(1));
    let mut steps: Vec<usize> = (1..=count).map(|j| (j * t).div_ceil(count)).collect();
    steps.dedup();
    steps
}

/// `max_{i ≤ s} ‖w_i‖∞` at each checkpoint `s`; a failed trace holds its
/// last value.
pub fn prefix_max_at(trace: &WalkTrace, steps: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps.len());
    let mut running = 0.0_f64;
    let mut i = 0;
    for &s in steps {
        while i < s.min(trace.sup_norms.len()) {
            running = running.max(trace.sup_norms[i]);
            i += 1;
        }
        out.push(running);
    }
    out
}

/// Per-trial record of a comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTrial {
    pub algorithm: Algorithm,
    pub trial: usize,
    pub failed: bool,
    pub prefix_max: Vec<f64>,
    pub final_l2: f64,
}

/// Every algorithm over the same source realization in each trial.
pub fn compare_trials(
    kind: &SourceKind,
    algorithms: &[Algorithm],
    config: &WalkConfig,
    master: u64,
    trials: usize,
    steps: &[usize],
    lambda: Option<f64>,
) -> Result<Vec<CompareTrial>> {
    let lambda = lambda.unwrap_or(DEFAULT_LAMBDA);
    let per_trial = run_trials(master, trials, |i, seed| {
        algorithms
            .iter()
            .map(|&alg| {
                let mut src = VectorSource::new(kind.clone(), config.n, config.t, source_seed(seed))?;
                let trace = run_algorithm(alg, &mut src, config, seed, lambda)?;
                Ok(CompareTrial {
                    algorithm: alg,
                    trial: i,
                    failed: trace.failed,
                    prefix_max: prefix_max_at(&trace, steps),
                    final_l2: trace.final_w.iter().map(|x| x * x).sum::<f64>().sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::IidDistribution;

    #[test]
    fn trial_order_independent_of_threads() {
        let cfg = WalkConfig::new(3, 200, 0.1).unwrap();
        let kind = SourceKind::Iid(IidDistribution::UniformSphere);
        let one = with_threads(1, || balance_trials(&kind, &cfg, 42, 16)).unwrap().unwrap();
        let four = with_threads(4, || balance_trials(&kind, &cfg, 42, 16)).unwrap().unwrap();
        assert_eq!(one, four);
        let seeds: Vec<u64> = one.iter().map(|r| r.seed).collect();
        let mut distinct = seeds.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 16);
        assert_eq!(seeds[3], trial_seed(42, 3));
    }

    #[test]
    fn summary_of_zero_stream() {
        let cfg = WalkConfig::new(2, 10, 0.1).unwrap();
        let zeros = SourceKind::FixedList(vec![vec![0.0; 2]; 10]);
        let rows = balance_trials(&zeros, &cfg, 1, 5).unwrap();
        let s = summarize(&rows);
        assert_eq!(s.failures, 0);
        assert_eq!(s.median_max_sup_norm, 0.0);
        assert_eq!(s.p95_max_sup_norm, 0.0);
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(10, 5), vec![2, 4, 6, 8, 10]);
        assert_eq!(checkpoints(3, 10), vec![1, 2, 3]);
        assert_eq!(*checkpoints(100_000, 20).last().unwrap(), 100_000);
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("spencer".parse::<Algorithm>().is_err());
    }

    #[test]
    fn compare_shares_realizations() {
        let cfg = WalkConfig::new(4, 50, 0.1).unwrap();
        let kind = SourceKind::AdaptiveOrthogonal;
        let steps = checkpoints(50, 5);
        let rows = compare_trials(&kind, &Algorithm::ALL, &cfg, 3, 2, &steps, None).unwrap();
        assert_eq!(rows.len(), 6);
        for r in rows {
            assert!((r.final_l2 * r.final_l2 - 50.0).abs() < 1e-6 * 50.0);
        }
    }
}
