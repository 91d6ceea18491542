use serde::Serialize;
use vecbal::harness::{checkpoints, compare_trials, Algorithm, CompareTrial};
use vecbal::stats::{median, quantile};
use vecbal::WalkConfig;

use crate::args::{CompareArgs, GlobalArgs};
use crate::balance::DEFAULT_DELTA;
use crate::output::Report;
use crate::source::resolve;
use crate::{invalid, Result};

/// Percentiles of `max_{i ≤ step} ‖w_i‖∞` across trials.
#[derive(Serialize)]
struct CurveRow {
    algorithm: &'static str,
    step: usize,
    p10: f64,
    p50: f64,
    p90: f64,
    max: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    algorithm: &'static str,
    trials: usize,
    failures: usize,
    median_max_sup_norm: f64,
    median_final_l2: f64,
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    let mut algs = Vec::new();
    for name in names {
        let a: Algorithm = name.trim().parse()?;
        if algs.contains(&a) {
            return Err(invalid(format!("algorithm {a} listed twice")));
        }
        algs.push(a);
    }
    if algs.is_empty() {
        return Err(invalid("--algorithms is empty"));
    }
    Ok(algs)
}

pub fn run(g: &GlobalArgs, a: &CompareArgs) -> Result<Vec<u8>> {
    let algs = parse_algorithms(&a.algorithms)?;
    let src = resolve(&a.source)?;
    let delta = g.delta.unwrap_or(DEFAULT_DELTA);
    let config = WalkConfig::new(src.n, src.t, delta)?;
    let steps = checkpoints(src.t, a.checkpoints);

    let mut r = Report::new("compare", g);
    src.describe(&mut r);
    r.meta("delta", delta);
    r.meta("c", config.c);
    if let Some(l) = a.lambda {
        r.meta("lambda", l);
    }
    let names: Vec<&str> = algs.iter().map(|a| a.name()).collect();
    r.meta("algorithms", names.join(","));

    let trials = compare_trials(&src.kind, &algs, &config, g.seed, g.trials, &steps, a.lambda)?;
    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for &alg in &algs {
        let mine: Vec<&CompareTrial> = trials.iter().filter(|t| t.algorithm == alg).collect();
        for (j, &step) in steps.iter().enumerate() {
            let xs: Vec<f64> = mine.iter().map(|t| t.prefix_max[j]).collect();
            curves.push(CurveRow {
                algorithm: alg.name(),
                step,
                p10: quantile(&xs, 0.10),
                p50: median(&xs),
                p90: quantile(&xs, 0.90),
                max: xs.iter().copied().fold(0.0, f64::max),
            });
        }
        let finals: Vec<f64> = mine.iter().map(|t| *t.prefix_max.last().unwrap_or(&0.0)).collect();
        let l2: Vec<f64> = mine.iter().map(|t| t.final_l2).collect();
        summary.push(SummaryRow {
            algorithm: alg.name(),
            trials: mine.len(),
            failures: mine.iter().filter(|t| t.failed).count(),
            median_max_sup_norm: median(&finals),
            median_final_l2: median(&l2),
        });
    }
    r.table(curves)?;
    r.table(summary)?;
    Ok(r.into_bytes())
}
