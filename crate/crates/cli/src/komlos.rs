use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use vecbal::harness::run_trials;
use vecbal::io::{read_matrix_market, write_signs};
use vecbal::komlos::{default_delta, run_komlos, KomlosResult};
use vecbal::stats::{median, quantile};

use crate::args::{GlobalArgs, KomlosArgs};
use crate::output::{write_file, Report};
use crate::{open, Result};

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    final_sup_norm: f64,
    threshold: f64,
    c: f64,
    failed_midrun: bool,
    exceeded_final: bool,
    nnz: usize,
    touched: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    trials: usize,
    failures: usize,
    failure_fraction: f64,
    median_final_sup_norm: f64,
    p95_final_sup_norm: f64,
}

pub fn run(g: &GlobalArgs, a: &KomlosArgs) -> Result<Vec<u8>> {
    let m = read_matrix_market(open(&a.matrix)?)?;
    let delta = g.delta.unwrap_or_else(|| default_delta(m.cols()));

    let results: Vec<(KomlosResult, f64)> = run_trials(g.seed, g.trials, |_, seed| {
        let start = Instant::now();
        let res = run_komlos(&m, Some(delta), seed)?;
        Ok((res, start.elapsed().as_secs_f64()))
    })?;

    if let Some(p) = &a.signs {
        write_file(p, |w| Ok(write_signs(w, &results[0].0.x)?))?;
    }

    if a.json {
        let mut out = Vec::new();
        for (res, _) in &results {
            serde_json::to_writer(&mut out, res).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
        return Ok(out);
    }

    let mut r = Report::new("komlos", g);
    r.meta("matrix", a.matrix.display());
    r.meta("n", m.rows());
    r.meta("t", m.cols());
    r.meta("delta", delta);
    let rows: Vec<Row> = results
        .iter()
        .enumerate()
        .map(|(trial, (res, secs))| Row {
            trial,
            seed: res.seed,
            final_sup_norm: res.final_sup_norm,
            threshold: res.threshold,
            c: res.c,
            failed_midrun: res.failed_midrun,
            exceeded_final: res.exceeded_final,
            nnz: res.nnz,
            touched: res.touched,
            wall_time_s: a.timing.then_some(*secs),
        })
        .collect();
    let failures = rows.iter().filter(|r| r.failed_midrun || r.exceeded_final).count();
    let sups: Vec<f64> = rows.iter().map(|r| r.final_sup_norm).collect();
    let summary = Summary {
        trials: rows.len(),
        failures,
        failure_fraction: failures as f64 / rows.len() as f64,
        median_final_sup_norm: median(&sups),
        p95_final_sup_norm: quantile(&sups, 0.95),
    };
    r.table(&rows)?;
    r.table([summary])?;
    Ok(r.into_bytes())
}
