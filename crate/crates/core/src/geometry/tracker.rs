//! Online discrepancy bookkeeping over dyadic members, with exact range
//! queries at any past step.
//!
//! Every signed point updates the running sum of each member (or box) that
//! contains it and is also filed under its base cell in every dimension. A
//! range query adds up the maximal members inside the range and scans the
//! stored points of the at most two boundary cells per axis, so the answer is
//! an exact integer.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::dyadic::{range_contains, AxisSplit, DyadicScheme};
use crate::geometry::embed::{embed_point_boxes_in, BoxKeySpace};
use crate::geometry::quantile::validate_point;
use crate::vector::Sign;

/// Value of a range query plus the work it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryResult {
    pub value: i64,
    /// Dyadic members (or boxes) whose sums were added.
    pub summands: usize,
    /// Stored points examined in boundary cells.
    pub scanned: usize,
}

/// `(step, value)` pairs in step order; the last one is current.
type History = Vec<(usize, i64)>;

fn value_at(history: &[(usize, i64)], at: usize) -> i64 {
    let i = history.partition_point(|&(s, _)| s <= at);
    if i == 0 {
        0
    } else {
        history[i - 1].1
    }
}

fn record(history: &mut History, step: usize, value: i64) {
    match history.last_mut() {
        Some(last) if last.0 == step => last.1 = value,
        _ => history.push((step, value)),
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::config(format!("query range [{lo}, {hi}) must satisfy 0 <= lo <= hi <= 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellEntry {
    x: f64,
    sign: Sign,
    step: usize,
}

/// Signed counts of every member of `J` in every dimension.
#[derive(Debug, Clone)]
pub struct DiscrepancyTracker {
    scheme: DyadicScheme,
    d: usize,
    sums: Vec<i64>,
    history: Vec<History>,
    cells: Vec<Vec<Vec<CellEntry>>>,
    step: usize,
}

impl DiscrepancyTracker {
    pub fn new(scheme: DyadicScheme, d: usize) -> Self {
        let coords = d * scheme.members();
        let cells = vec![vec![Vec::new(); scheme.cells()]; d];
        Self {
            scheme,
            d,
            sums: vec![0; coords],
            history: vec![Vec::new(); coords],
            cells,
            step: 0,
        }
    }

    pub fn scheme(&self) -> &DyadicScheme {
        &self.scheme
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of points inserted so far.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn insert(&mut self, x: &[f64], sign: Sign) -> Result<()> {
        validate_point(x, self.d, self.step)?;
        self.step += 1;
        let s = sign.as_i64();
        let members = self.scheme.members();
        for (k, &xk) in x.iter().enumerate() {
            let cell = self.scheme.cell_of(xk);
            for m in self.scheme.ancestors(cell) {
                let i = k * members + m;
                self.sums[i] += s;
                record(&mut self.history[i], self.step, self.sums[i]);
            }
            self.cells[k][cell].push(CellEntry {
                x: xk,
                sign,
                step: self.step,
            });
        }
        Ok(())
    }

    /// Signed count of member `member` of dimension `k` after `at` points.
    pub fn signed_sum(&self, k: usize, member: usize, at: usize) -> i64 {
        let i = k * self.scheme.members() + member;
        if at >= self.step {
            self.sums[i]
        } else {
            value_at(&self.history[i], at)
        }
    }

    /// Signed count of the points among the first `at` with `x(k) ∈ [lo, hi)`
    /// (closed at 1).
    pub fn query_interval(&self, k: usize, lo: f64, hi: f64, at: usize) -> Result<QueryResult> {
        if k >= self.d {
            return Err(Error::IndexOutOfBounds { index: k, len: self.d });
        }
        check_range(lo, hi)?;
        if at > self.step {
            return Err(Error::config(format!("step {at} is ahead of the tracker ({})", self.step)));
        }
        let AxisSplit { full, partial } = self.scheme.split_range(lo, hi);
        let parts = self.scheme.decompose(full.0, full.1);
        let mut value: i64 = parts.iter().map(|&m| self.signed_sum(k, m, at)).sum();
        let mut scanned = 0;
        for cell in partial {
            for e in &self.cells[k][cell] {
                scanned += 1;
                if e.step <= at && range_contains(e.x, lo, hi) {
                    value += e.sign.as_i64();
                }
            }
        }
        Ok(QueryResult {
            value,
            summands: parts.len(),
            scanned,
        })
    }

    /// `max |signed sum|` over all members and dimensions after `at` points.
    pub fn max_dyadic_discrepancy(&self, at: usize) -> i64 {
        let members = self.scheme.members();
        (0..self.d)
            .flat_map(|k| (0..members).map(move |m| (k, m)))
            .map(|(k, m)| self.signed_sum(k, m, at).abs())
            .max()
            .unwrap_or(0)
    }

    /// Parent sum equals the sum of its two children, for every member.
    pub fn check_level_consistency(&self) -> Result<()> {
        let members = self.scheme.members();
        let internal = members / 2;
        for k in 0..self.d {
            let s = &self.sums[k * members..(k + 1) * members];
            for p in 0..internal {
                if s[p] != s[2 * p + 1] + s[2 * p + 2] {
                    return Err(Error::Contract(format!(
                        "dimension {k}: member {p} holds {} but its children sum to {}",
                        s[p],
                        s[2 * p + 1] + s[2 * p + 2]
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV `level,index,signed_sum` of the current sums, one block per
    /// dimension (introduced by a `# dim k` comment when `d > 1`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "level,index,signed_sum")?;
        for k in 0..self.d {
            if self.d > 1 {
                writeln!(out, "# dim {k}")?;
            }
            for m in 0..self.scheme.members() {
                let (b, a) = self.scheme.member_level_pos(m);
                writeln!(out, "{b},{a},{}", self.signed_sum(k, m, self.step))?;
            }
        }
        Ok(())
    }
}

/// Signed counts of the dyadic boxes that have received at least one point.
#[derive(Debug, Clone)]
pub struct BoxTracker {
    schemes: Vec<DyadicScheme>,
    space: BoxKeySpace,
    sums: HashMap<u128, History>,
    points: Vec<(Vec<f64>, Sign)>,
    cells: Vec<Vec<Vec<usize>>>,
}

impl BoxTracker {
    pub fn new(schemes: Vec<DyadicScheme>) -> Result<Self> {
        let space = BoxKeySpace::new(&schemes)?;
        let cells = schemes.iter().map(|s| vec![Vec::new(); s.cells()]).collect();
        Ok(Self {
            schemes,
            space,
            sums: HashMap::new(),
            points: Vec::new(),
            cells,
        })
    }

    pub fn schemes(&self) -> &[DyadicScheme] {
        &self.schemes
    }

    pub fn key_space(&self) -> &BoxKeySpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.schemes.len()
    }

    pub fn step(&self) -> usize {
        self.points.len()
    }

    /// Boxes with a stored sum.
    pub fn touched_boxes(&self) -> usize {
        self.sums.len()
    }

    pub fn insert(&mut self, x: &[f64], sign: Sign) -> Result<()> {
        let keys = embed_point_boxes_in(x, &self.schemes, &self.space)?.keys;
        self.insert_embedded(x, &keys, sign);
        Ok(())
    }

    /// Inserts a point whose box keys are already known.
    pub(crate) fn insert_embedded(&mut self, x: &[f64], keys: &[u128], sign: Sign) {
        let step = self.points.len() + 1;
        let s = sign.as_i64();
        for &key in keys {
            let h = self.sums.entry(key).or_default();
            let current = h.last().map_or(0, |e| e.1);
            record(h, step, current + s);
        }
        for (k, (&xk, scheme)) in x.iter().zip(&self.schemes).enumerate() {
            self.cells[k][scheme.cell_of(xk)].push(step - 1);
        }
        self.points.push((x.to_vec(), sign));
    }

    pub fn signed_sum(&self, key: u128, at: usize) -> i64 {
        self.sums.get(&key).map_or(0, |h| value_at(h, at))
    }

    /// Signed count of the points among the first `at` inside the box
    /// `Π_k [lo_k, hi_k)` (each axis closed at 1).
    pub fn query_box(&self, lo: &[f64], hi: &[f64], at: usize) -> Result<QueryResult> {
        let d = self.dim();
        for bounds in [lo, hi] {
            if bounds.len() != d {
                return Err(Error::DimensionMismatch {
                    step: 0,
                    expected: d,
                    got: bounds.len(),
                });
            }
        }
        for (&a, &b) in lo.iter().zip(hi) {
            check_range(a, b)?;
        }
        if at > self.step() {
            return Err(Error::config(format!("step {at} is ahead of the tracker ({})", self.step())));
        }
        let empty = QueryResult {
            value: 0,
            summands: 0,
            scanned: 0,
        };
        if lo.iter().zip(hi).any(|(a, b)| a >= b) {
            return Ok(empty);
        }
        let splits: Vec<AxisSplit> = self
            .schemes
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(s, (&a, &b))| s.split_range(a, b))
            .collect();
        let parts: Vec<Vec<usize>> = self
            .schemes
            .iter()
            .zip(&splits)
            .map(|(s, sp)| s.decompose(sp.full.0, sp.full.1))
            .collect();

        let mut result = empty;
        if parts.iter().all(|p| !p.is_empty()) {
            let mut pick = vec![0usize; d];
            let mut members = vec![0usize; d];
            'boxes: loop {
                for k in 0..d {
                    members[k] = parts[k][pick[k]];
                }
                result.value += self.signed_sum(self.space.key(&members), at);
                result.summands += 1;
                for k in 0..d {
                    pick[k] += 1;
                    if pick[k] < parts[k].len() {
                        continue 'boxes;
                    }
                    pick[k] = 0;
                }
                break;
            }
        }

        // Points with some coordinate in a boundary cell are not covered by the
        // dyadic boxes above; each is checked exactly, once.
        let mut candidates: Vec<usize> = splits
            .iter()
            .enumerate()
            .flat_map(|(k, sp)| sp.partial.iter().flat_map(move |&c| self.cells[k][c].iter().copied()))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        result.scanned = candidates.len();
        for id in candidates {
            if id >= at {
                continue;
            }
            let (x, sign) = &self.points[id];
            if x.iter().zip(lo.iter().zip(hi)).all(|(&xk, (&a, &b))| range_contains(xk, a, b)) {
                result.value += sign.as_i64();
            }
        }
        Ok(result)
    }

    /// `max |signed sum|` over all dyadic boxes after `at` points.
    pub fn max_dyadic_discrepancy(&self, at: usize) -> i64 {
        self.sums.values().map(|h| value_at(h, at).abs()).max().unwrap_or(0)
    }

    /// Along every axis, a box's sum equals the sum over its two children.
    pub fn check_level_consistency(&self) -> Result<()> {
        let current = |key: u128| self.sums.get(&key).and_then(|h| h.last()).map_or(0, |e| e.1);
        for (&key, h) in &self.sums {
            let parent = h.last().map_or(0, |e| e.1);
            let members = self.space.members(key);
            for k in 0..self.dim() {
                let (level, _) = self.schemes[k].member_level_pos(members[k]);
                if level == 0 {
                    continue;
                }
                let mut child = members.clone();
                child[k] = 2 * members[k] + 1;
                let left = current(self.space.key(&child));
                child[k] += 1;
                let right = current(self.space.key(&child));
                if parent != left + right {
                    return Err(Error::Contract(format!(
                        "box {members:?} holds {parent} but its children along axis {k} sum to {}",
                        left + right
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reference count by a full pass over the first `at` points.
pub fn rescan_interval(points: &[Vec<f64>], signs: &[Sign], k: usize, lo: f64, hi: f64, at: usize) -> i64 {
    points
        .iter()
        .zip(signs)
        .take(at)
        .filter(|(p, _)| range_contains(p[k], lo, hi))
        .map(|(_, s)| s.as_i64())
        .sum()
}

pub fn rescan_box(points: &[Vec<f64>], signs: &[Sign], lo: &[f64], hi: &[f64], at: usize) -> i64 {
    points
        .iter()
        .zip(signs)
        .take(at)
        .filter(|(p, _)| {
            p.iter()
                .zip(lo.iter().zip(hi))
                .all(|(&x, (&a, &b))| range_contains(x, a, b))
        })
        .map(|(_, s)| s.as_i64())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dyadic::build_dyadic_scheme;
    use crate::geometry::quantile::{build_quantile_grid, DistributionAccess, UniformCube};

    fn uniform(d: usize, t: usize) -> DyadicScheme {
        let g = build_quantile_grid(DistributionAccess::Oracle(&UniformCube { d }), d, t).unwrap();
        build_dyadic_scheme(&g).unwrap()
    }

    fn filled() -> (DiscrepancyTracker, Vec<Vec<f64>>, Vec<Sign>) {
        let mut tr = DiscrepancyTracker::new(uniform(1, 4), 1);
        let pts: Vec<Vec<f64>> = [0.1, 0.3, 0.3, 0.6, 1.0, 0.25].iter().map(|&x| vec![x]).collect();
        let signs = [Sign::Plus, Sign::Plus, Sign::Minus, Sign::Plus, Sign::Plus, Sign::Minus].to_vec();
        for (p, &s) in pts.iter().zip(&signs) {
            tr.insert(p, s).unwrap();
        }
        (tr, pts, signs)
    }

    #[test]
    fn whole_range_is_total() {
        let (tr, _, _) = filled();
        let q = tr.query_interval(0, 0.0, 1.0, 6).unwrap();
        assert_eq!(q.value, 2);
        assert_eq!(q.summands, 1);
        assert_eq!(tr.query_interval(0, 0.4, 0.4, 6).unwrap().value, 0);
    }

    #[test]
    fn queries_match_rescan_at_every_step() {
        let (tr, pts, signs) = filled();
        let ends = [0.0, 0.1, 0.2, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9, 1.0];
        for at in 0..=6 {
            for &a in &ends {
                for &b in ends.iter().filter(|&&b| b >= a) {
                    let q = tr.query_interval(0, a, b, at).unwrap();
                    assert_eq!(q.value, rescan_interval(&pts, &signs, 0, a, b, at), "[{a},{b}) at {at}");
                    assert!(q.summands <= 2 * (tr.scheme().k() as usize + 1));
                }
            }
        }
    }

    #[test]
    fn consistency_and_export() {
        let (tr, _, _) = filled();
        tr.check_level_consistency().unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level,index,signed_sum");
        assert_eq!(lines.len(), 1 + 7);
        assert_eq!(lines[1], "2,0,2");
        // Three points at or above 0.5, all positive.
        assert_eq!(tr.max_dyadic_discrepancy(6), 2);
        assert_eq!(tr.max_dyadic_discrepancy(0), 0);
    }

    #[test]
    fn query_validation() {
        let (tr, _, _) = filled();
        assert!(tr.query_interval(1, 0.0, 1.0, 1).is_err());
        assert!(tr.query_interval(0, 0.5, 0.4, 1).is_err());
        assert!(tr.query_interval(0, -0.1, 0.4, 1).is_err());
        assert!(tr.query_interval(0, 0.0, 1.0, 7).is_err());
    }

    #[test]
    fn box_queries_match_rescan() {
        let s = uniform(2, 4);
        let mut tr = BoxTracker::new(vec![s.clone(), s]).unwrap();
        let pts = vec![
            vec![0.1, 0.9],
            vec![0.5, 0.5],
            vec![1.0, 0.0],
            vec![0.3, 0.3],
            vec![0.3, 0.8],
            vec![0.5, 1.0],
        ];
        let signs = vec![Sign::Plus, Sign::Minus, Sign::Plus, Sign::Plus, Sign::Minus, Sign::Plus];
        for (p, &sg) in pts.iter().zip(&signs) {
            tr.insert(p, sg).unwrap();
        }
        tr.check_level_consistency().unwrap();
        let ends = [0.0, 0.125, 0.2, 0.3, 0.5, 0.75, 1.0];
        for at in [0, 3, 6] {
            for &a0 in &ends {
                for &b0 in ends.iter().filter(|&&b| b >= a0) {
                    for &a1 in &ends {
                        for &b1 in ends.iter().filter(|&&b| b >= a1) {
                            let (lo, hi) = ([a0, a1], [b0, b1]);
                            let q = tr.query_box(&lo, &hi, at).unwrap();
                            assert_eq!(q.value, rescan_box(&pts, &signs, &lo, &hi, at), "{lo:?} {hi:?} at {at}");
                        }
                    }
                }
            }
        }
        assert_eq!(tr.query_box(&[0.0, 0.0], &[1.0, 1.0], 6).unwrap().value, 2);
    }
}
