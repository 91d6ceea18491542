use vecbal::adversaries::VectorSource;
use vecbal::harness::{balance_trials, source_seed, summarize, trial_seed};
use vecbal::io::{write_signs, write_trace_csv};
use vecbal::{run_balance, WalkConfig};

use crate::args::{BalanceArgs, GlobalArgs};
use crate::output::{write_file, Report};
use crate::source::resolve;
use crate::Result;

pub const DEFAULT_DELTA: f64 = 0.01;

pub fn run(g: &GlobalArgs, a: &BalanceArgs) -> Result<Vec<u8>> {
    let src = resolve(&a.source)?;
    let delta = g.delta.unwrap_or(DEFAULT_DELTA);
    let config = WalkConfig::new(src.n, src.t, delta)?;

    let mut r = Report::new("balance", g);
    src.describe(&mut r);
    r.meta("delta", delta);
    r.meta("c", config.c);

    let rows = balance_trials(&src.kind, &config, g.seed, g.trials)?;
    let summary = summarize(&rows);
    if let Some(f) = src.unscaled_factor() {
        r.meta("unscaled_median_max_sup_norm", summary.median_max_sup_norm * f);
        r.meta("unscaled_p95_max_sup_norm", summary.p95_max_sup_norm * f);
    }
    r.table(&rows)?;
    r.table([&summary])?;

    if a.trace.is_some() || a.signs.is_some() {
        let seed = trial_seed(g.seed, 0);
        let mut stream = VectorSource::new(src.kind.clone(), src.n, src.t, source_seed(seed))?;
        let trace = run_balance(&mut stream, &config, seed)?;
        if let Some(p) = &a.trace {
            write_file(p, |w| Ok(write_trace_csv(w, &trace)?))?;
        }
        if let Some(p) = &a.signs {
            write_file(p, |w| Ok(write_signs(w, &trace.signs)?))?;
        }
    }
    Ok(r.into_bytes())
}
