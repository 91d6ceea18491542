use std::io::BufRead;
use std::str::FromStr;

use serde::Serialize;
use vecbal::geometry::{
    rescan_box, rescan_interval, run_interval_discrepancy, run_interval_offline, run_tusnady, run_tusnady_offline,
    BoxTracker, DiscrepancyTracker, DistributionAccess, GeometryRun, PointSampler, PowerMarginals, QuantileOracle,
    QueryResult, UniformCube,
};
use vecbal::harness::{run_trials, source_seed};
use vecbal::io::read_point_stream;
use vecbal::seed::{derive_seed, rng_from_seed};
use vecbal::Sign;

use crate::args::{GeometryArgs, GlobalArgs};
use crate::output::{write_file, Report};
use crate::{invalid, open, CliError, Result};

pub const DEFAULT_DELTA: f64 = 0.1;

/// Queries are checked against a full rescan up to this horizon.
pub const RESCAN_MAX_T: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Dist {
    Uniform(UniformCube),
    Power(PowerMarginals),
}

impl Dist {
    fn parse(s: &str, d: Option<usize>) -> Result<Self> {
        match s.split_once(':') {
            None if s == "uniform" => {
                let d = d.ok_or_else(|| invalid("--d is required with --dist uniform"))?;
                Ok(Dist::Uniform(UniformCube { d }))
            }
            Some(("power", list)) => {
                let exponents = list
                    .split(',')
                    .map(|x| f64::from_str(x.trim()).ok().filter(|a| *a > 0.0 && a.is_finite()))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| invalid(format!("bad exponents in --dist {s:?}")))?;
                if d.is_some_and(|d| d != exponents.len()) {
                    return Err(invalid("--d disagrees with the number of exponents"));
                }
                Ok(Dist::Power(PowerMarginals { exponents }))
            }
            _ => Err(invalid(format!("unknown distribution {s:?} (expected uniform or power:a1,..)"))),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Dist::Uniform(u) => u.d,
            Dist::Power(p) => p.exponents.len(),
        }
    }

    fn oracle(&self) -> &dyn QuantileOracle {
        match self {
            Dist::Uniform(u) => u,
            Dist::Power(p) => p,
        }
    }

    fn sampler(&self) -> &dyn PointSampler {
        match self {
            Dist::Uniform(u) => u,
            Dist::Power(p) => p,
        }
    }

    fn label(&self) -> String {
        match self {
            Dist::Uniform(u) => format!("uniform d={}", u.d),
            Dist::Power(p) => {
                let e: Vec<String> = p.exponents.iter().map(f64::to_string).collect();
                format!("power {}", e.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Query {
    dim: Option<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    at: Option<usize>,
}

fn parse_list(tok: &str, line: usize) -> Result<Vec<f64>> {
    tok.split(',')
        .map(|x| x.parse::<f64>().map_err(|_| invalid(format!("query line {line}: not a number: {x:?}"))))
        .collect()
}

fn parse_query_line(text: &str, line: usize, boxes: bool) -> Result<Query> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let bad = || invalid(format!("query line {line}: cannot parse {text:?}"));
    let at = |tok: Option<&&str>| -> Result<Option<usize>> {
        tok.map(|s| s.parse::<usize>().map_err(|_| bad())).transpose()
    };
    if boxes {
        if !(2..=3).contains(&toks.len()) {
            return Err(bad());
        }
        Ok(Query {
            dim: None,
            lo: parse_list(toks[0], line)?,
            hi: parse_list(toks[1], line)?,
            at: at(toks.get(2))?,
        })
    } else {
        if !(3..=4).contains(&toks.len()) {
            return Err(bad());
        }
        Ok(Query {
            dim: Some(toks[0].parse().map_err(|_| bad())?),
            lo: parse_list(toks[1], line)?,
            hi: parse_list(toks[2], line)?,
            at: at(toks.get(3))?,
        })
    }
}

fn collect_queries(a: &GeometryArgs, boxes: bool, d: usize) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    if !a.lo.is_empty() || !a.hi.is_empty() || a.dim.is_some() {
        if boxes && a.dim.is_some() {
            return Err(invalid("--dim applies to interval queries only"));
        }
        out.push(Query {
            dim: if boxes { None } else { Some(a.dim.unwrap_or(0)) },
            lo: a.lo.clone(),
            hi: a.hi.clone(),
            at: a.at,
        });
    }
    if let Some(path) = &a.queries {
        for (i, line) in open(path)?.lines().enumerate() {
            let line = line.map_err(|source| CliError::File {
                path: path.display().to_string(),
                source,
            })?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            out.push(parse_query_line(text, i + 1, boxes)?);
        }
    }
    let width = if boxes { d } else { 1 };
    for q in &out {
        if q.lo.len() != width || q.hi.len() != width {
            return Err(invalid(format!("query needs {width} lower and upper bounds, got {:?} and {:?}", q.lo, q.hi)));
        }
        if let Some(k) = q.dim {
            if k >= d {
                return Err(invalid(format!("query coordinate {k} out of range for d = {d}")));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct QueryRow {
    t: usize,
    trial: usize,
    query: usize,
    dim: Option<usize>,
    lo: String,
    hi: String,
    at: usize,
    discrepancy: i64,
    summands: usize,
    scanned: usize,
    rescan: Option<i64>,
}

#[derive(Serialize)]
struct SummaryRow {
    t: usize,
    trial: usize,
    seed: u64,
    failed: bool,
    steps: usize,
    max_dyadic_discrepancy: i64,
    /// Largest walk sup-norm, in signed-count units.
    max_sup_norm: f64,
    c: f64,
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// What the two pipelines share.
trait Tracked {
    fn step(&self) -> usize;
    fn query(&self, q: &Query, at: usize) -> vecbal::Result<QueryResult>;
    fn rescan(points: &[Vec<f64>], signs: &[Sign], q: &Query, at: usize) -> i64;
    fn max_dyadic(&self, at: usize) -> i64;
    fn export(&self) -> Option<Vec<u8>>;
}

impl Tracked for DiscrepancyTracker {
    fn step(&self) -> usize {
        DiscrepancyTracker::step(self)
    }
    fn query(&self, q: &Query, at: usize) -> vecbal::Result<QueryResult> {
        self.query_interval(q.dim.unwrap_or(0), q.lo[0], q.hi[0], at)
    }
    fn rescan(points: &[Vec<f64>], signs: &[Sign], q: &Query, at: usize) -> i64 {
        rescan_interval(points, signs, q.dim.unwrap_or(0), q.lo[0], q.hi[0], at)
    }
    fn max_dyadic(&self, at: usize) -> i64 {
        self.max_dyadic_discrepancy(at)
    }
    fn export(&self) -> Option<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).ok()?;
        Some(buf)
    }
}

impl Tracked for BoxTracker {
    fn step(&self) -> usize {
        BoxTracker::step(self)
    }
    fn query(&self, q: &Query, at: usize) -> vecbal::Result<QueryResult> {
        self.query_box(&q.lo, &q.hi, at)
    }
    fn rescan(points: &[Vec<f64>], signs: &[Sign], q: &Query, at: usize) -> i64 {
        rescan_box(points, signs, &q.lo, &q.hi, at)
    }
    fn max_dyadic(&self, at: usize) -> i64 {
        self.max_dyadic_discrepancy(at)
    }
    fn export(&self) -> Option<Vec<u8>> {
        None
    }
}

struct TrialOutput {
    queries: Vec<QueryRow>,
    summary: SummaryRow,
    export: Option<Vec<u8>>,
}

fn evaluate<T: Tracked>(
    run: GeometryRun<T>,
    points: &[Vec<f64>],
    queries: &[Query],
    t: usize,
    trial: usize,
    seed: u64,
    want_export: bool,
) -> vecbal::Result<TrialOutput> {
    let steps = run.tracker.step();
    let signs = run.signs();
    let mut rows = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        // A failed walk stops early; later steps are answered as of the failure.
        let at = q.at.unwrap_or(t).min(steps);
        let res = run.tracker.query(q, at)?;
        rows.push(QueryRow {
            t,
            trial,
            query: i,
            dim: q.dim,
            lo: join(&q.lo),
            hi: join(&q.hi),
            at,
            discrepancy: res.value,
            summands: res.summands,
            scanned: res.scanned,
            rescan: (t <= RESCAN_MAX_T).then(|| T::rescan(&points[..steps], signs, q, at)),
        });
    }
    Ok(TrialOutput {
        queries: rows,
        summary: SummaryRow {
            t,
            trial,
            seed,
            failed: run.trace.failed,
            steps,
            max_dyadic_discrepancy: run.tracker.max_dyadic(steps),
            max_sup_norm: run.max_unscaled_sup_norm(),
            c: run.config.c,
        },
        export: if want_export { run.tracker.export() } else { None },
    })
}

pub fn cmd_interval(g: &GlobalArgs, a: &GeometryArgs) -> Result<Vec<u8>> {
    run_geometry(g, a, false)
}

pub fn cmd_tusnady(g: &GlobalArgs, a: &GeometryArgs) -> Result<Vec<u8>> {
    if a.export.is_some() {
        return Err(invalid("--export is only available for interval"));
    }
    run_geometry(g, a, true)
}

fn run_geometry(g: &GlobalArgs, a: &GeometryArgs, boxes: bool) -> Result<Vec<u8>> {
    let delta = g.delta.unwrap_or(DEFAULT_DELTA);
    let file_points = match &a.points {
        Some(p) => Some(read_point_stream(open(p)?)?),
        None => None,
    };
    let dist = a.dist.as_deref().map(|s| Dist::parse(s, a.d)).transpose()?;
    let d = match (&file_points, &dist) {
        (Some((d, _)), Some(dist)) if *d != dist.dim() => {
            return Err(invalid(format!("points have d = {d}, distribution has d = {}", dist.dim())))
        }
        (Some((d, _)), _) => *d,
        (None, Some(dist)) => dist.dim(),
        (None, None) => return Err(invalid("give --points FILE or --dist")),
    };
    if a.d.is_some_and(|x| x != d) {
        return Err(invalid(format!("--d = {} disagrees with d = {d}", a.d.unwrap_or(0))));
    }
    if a.samples.is_some() && dist.is_none() {
        return Err(invalid("--samples needs --dist"));
    }
    let horizons: Vec<usize> = match (&file_points, a.t, a.sweep.is_empty()) {
        (Some((_, pts)), None, true) => vec![pts.len()],
        (Some(_), Some(_), _) => return Err(invalid("--t cannot be combined with --points")),
        (None, Some(t), true) => vec![t],
        (None, None, false) => a.sweep.clone(),
        (None, Some(_), false) => return Err(invalid("use either --t or --sweep")),
        _ => return Err(invalid("--t or --sweep is required with --dist")),
    };
    if horizons.contains(&0) {
        return Err(invalid("horizons must be positive"));
    }
    if a.export.is_some() && horizons.len() > 1 {
        return Err(invalid("--export needs a single horizon"));
    }
    let queries = collect_queries(a, boxes, d)?;
    let max_t = horizons.iter().copied().max().unwrap_or(0);
    if let Some(q) = queries.iter().find(|q| q.at.is_some_and(|at| at > max_t)) {
        return Err(invalid(format!("query step {} exceeds t = {max_t}", q.at.unwrap_or(0))));
    }

    let mut r = Report::new(if boxes { "tusnady" } else { "interval" }, g);
    match (&a.points, &dist) {
        (Some(p), _) => r.meta("points", p.display()),
        (None, Some(dist)) => r.meta("points", format!("sampled from {}", dist.label())),
        _ => {}
    }
    r.meta(
        "grid",
        match (&dist, a.samples) {
            (None, _) => "empirical quantiles of the points".to_string(),
            (Some(dist), None) => format!("exact quantiles of {}", dist.label()),
            (Some(dist), Some(m)) => format!("{m} samples from {}", dist.label()),
        },
    );
    r.meta("d", d);
    r.meta("delta", delta);

    let mut query_rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut export = None;
    for &t in &horizons {
        let outputs = run_trials(g.seed, g.trials, |trial, seed| {
            let points: Vec<Vec<f64>> = match (&file_points, &dist) {
                (Some((_, pts)), _) => pts.clone(),
                (None, Some(dist)) => {
                    let mut rng = rng_from_seed(source_seed(seed));
                    (0..t).map(|_| dist.sampler().sample(&mut rng)).collect()
                }
                (None, None) => unreachable!("checked above"),
            };
            let access = dist.as_ref().map(|dist| match a.samples {
                None => DistributionAccess::Oracle(dist.oracle()),
                Some(m) => DistributionAccess::Sampler {
                    sampler: dist.sampler(),
                    samples: m.max(1),
                    seed: derive_seed(seed, 1),
                },
            });
            let want_export = trial == 0 && a.export.is_some();
            let stream = points.iter().cloned();
            if boxes {
                let run = match access {
                    Some(acc) => run_tusnady(stream, acc, d, t, delta, seed)?,
                    None => run_tusnady_offline(&points, d, delta, seed)?,
                };
                evaluate(run, &points, &queries, t, trial, seed, want_export)
            } else {
                let run = match access {
                    Some(acc) => run_interval_discrepancy(stream, acc, d, t, delta, seed)?,
                    None => run_interval_offline(&points, d, delta, seed)?,
                };
                evaluate(run, &points, &queries, t, trial, seed, want_export)
            }
        })?;
        for out in outputs {
            query_rows.extend(out.queries);
            summary_rows.push(out.summary);
            if out.export.is_some() {
                export = out.export;
            }
        }
    }
    if let (Some(path), Some(bytes)) = (&a.export, export) {
        write_file(path, |w| Ok(std::io::Write::write_all(w, &bytes)?))?;
    }
    r.table(query_rows)?;
    r.table(summary_rows)?;
    Ok(r.into_bytes())
}
