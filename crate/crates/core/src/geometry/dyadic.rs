//! Dyadic interval family over a merged quantile grid.
//!
//! Grid points `0 = r_0 ≤ r_1 ≤ … ≤ r_{2^K} = 1` cut `[0,1]` into `2^K` base
//! cells `[r_a, r_{a+1})`; the last non-empty cell is closed at 1. Member
//! `(b, a)` of the family is the union of base cells `a·2^b .. (a+1)·2^b`.
//! Members are numbered in heap order: `id(b, a) = 2^{K−b} + a − 1`, so the
//! root `[0,1]` is 0 and the children of `id` are `2·id + 1` and `2·id + 2`.

use crate::error::{Error, Result};
use crate::geometry::quantile::QuantileGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicScheme {
    r: Vec<f64>,
    levels: u32,
}

/// How a query range `[α, β)` meets the base cells along one axis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AxisSplit {
    /// Cells `lo..hi` lie entirely inside the range.
    pub full: (usize, usize),
    /// At most two boundary cells whose points need an exact check.
    pub partial: Vec<usize>,
}

/// `α ≤ x < β`, with an upper end of 1 treated as closed. Empty when `α ≥ β`.
pub fn range_contains(x: f64, lo: f64, hi: f64) -> bool {
    lo < hi && x >= lo && (x < hi || (hi >= 1.0 && x <= 1.0))
}

pub fn build_dyadic_scheme(grid: &QuantileGrid) -> Result<DyadicScheme> {
    let d = grid.dim();
    let cells = d * d * grid.horizon();
    let mut r: Vec<f64> = Vec::with_capacity(cells.next_power_of_two() + 1);
    r.push(0.0);
    r.extend(grid.all_values());
    r[1..].sort_by(f64::total_cmp);
    DyadicScheme::from_breakpoints(r)
}

impl DyadicScheme {
    /// From sorted breakpoints starting at 0, padded with 1s to a power-of-two
    /// cell count.
    pub fn from_breakpoints(mut r: Vec<f64>) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::config("need at least one cell"));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[0] > w[1]) || r.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::config("breakpoints must be sorted within [0, 1] and start at 0"));
        }
        let cells = (r.len() - 1).next_power_of_two();
        r.resize(cells + 1, 1.0);
        let last = r.len() - 1;
        r[last] = 1.0;
        Ok(Self {
            r,
            levels: cells.trailing_zeros(),
        })
    }

    /// `K`, with `2^K` base cells.
    pub fn k(&self) -> u32 {
        self.levels
    }

    pub fn cells(&self) -> usize {
        1 << self.levels
    }

    /// `|J| = 2^{K+1} − 1`.
    pub fn members(&self) -> usize {
        (1 << (self.levels + 1)) - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.r
    }

    /// Base cell containing `x ∈ [0, 1]`.
    pub fn cell_of(&self, x: f64) -> usize {
        if x >= 1.0 {
            self.r.partition_point(|&r| r < 1.0).max(1) - 1
        } else {
            self.r.partition_point(|&r| r <= x) - 1
        }
    }

    pub fn member_id(&self, level: u32, pos: usize) -> usize {
        (1usize << (self.levels - level)) + pos - 1
    }

    /// `(level b, position a)` of a member id.
    pub fn member_level_pos(&self, id: usize) -> (u32, usize) {
        let heap = id + 1;
        let depth = usize::BITS - 1 - heap.leading_zeros();
        (self.levels - depth, heap - (1 << depth))
    }

    /// `[r_{a·2^b}, r_{(a+1)·2^b})`.
    pub fn member_bounds(&self, id: usize) -> (f64, f64) {
        let (b, a) = self.member_level_pos(id);
        (self.r[a << b], self.r[(a + 1) << b])
    }

    /// The `K+1` members containing base cell `cell`, leaf level first.
    pub fn ancestors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=self.levels).map(move |b| self.member_id(b, cell >> b))
    }

    /// Canonical decomposition of the cell range `lo..hi` into maximal aligned
    /// members; at most two per level.
    pub fn decompose(&self, mut lo: usize, hi: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while lo < hi {
            let mut b = if lo == 0 { self.levels } else { lo.trailing_zeros().min(self.levels) };
            while lo + (1 << b) > hi {
                b -= 1;
            }
            out.push(self.member_id(b, lo >> b));
            lo += 1 << b;
        }
        out
    }

    pub fn split_range(&self, lo: f64, hi: f64) -> AxisSplit {
        if lo >= hi {
            return AxisSplit::default();
        }
        let ca = self.cell_of(lo);
        let cb = self.cell_of(hi);
        let to_end = hi >= 1.0;
        let mut partial = Vec::new();
        let start = if self.r[ca] == lo && (ca < cb || to_end) {
            ca
        } else {
            partial.push(ca);
            ca + 1
        };
        let end = if to_end {
            self.cells()
        } else if ca == cb {
            start
        } else {
            if self.r[cb] != hi {
                partial.push(cb);
            }
            cb
        };
        AxisSplit {
            full: (start, end.max(start)),
            partial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quantile::{build_quantile_grid, DistributionAccess, UniformCube};

    fn uniform(d: usize, t: usize) -> DyadicScheme {
        let g = build_quantile_grid(DistributionAccess::Oracle(&UniformCube { d }), d, t).unwrap();
        build_dyadic_scheme(&g).unwrap()
    }

    #[test]
    fn uniform_scheme_d1_t4() {
        let s = uniform(1, 4);
        assert_eq!(s.breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.k(), 2);
        assert_eq!(s.members(), 7);
    }

    #[test]
    fn padding_to_power_of_two() {
        let s = uniform(1, 3);
        assert_eq!(s.cells(), 4);
        assert_eq!(s.k(), 2);
        assert_eq!(*s.breakpoints().last().unwrap(), 1.0);
        assert_eq!(s.breakpoints()[3], 1.0);
    }

    #[test]
    fn every_point_in_one_member_per_level() {
        let s = uniform(2, 5);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let hits: Vec<usize> = (0..s.members())
                .filter(|&m| {
                    let (a, b) = s.member_bounds(m);
                    let cell = s.cell_of(x);
                    let (lvl, pos) = s.member_level_pos(m);
                    let contains = cell >> lvl == pos;
                    // Bounds agree with the cell test away from empty cells.
                    if contains && a < b {
                        assert!(range_contains(x, a, b) || x == 1.0 || b == 1.0);
                    }
                    contains
                })
                .collect();
            assert_eq!(hits.len(), s.k() as usize + 1);
            let ancestors: Vec<usize> = s.ancestors(s.cell_of(x)).collect();
            let mut sorted = ancestors.clone();
            sorted.sort();
            assert_eq!(sorted, hits);
        }
    }

    #[test]
    fn heap_numbering() {
        let s = uniform(1, 8);
        assert_eq!(s.member_id(s.k(), 0), 0);
        for id in 0..s.members() {
            let (b, a) = s.member_level_pos(id);
            assert_eq!(s.member_id(b, a), id);
            if b > 0 {
                assert_eq!(s.member_id(b - 1, 2 * a), 2 * id + 1);
                assert_eq!(s.member_id(b - 1, 2 * a + 1), 2 * id + 2);
            }
        }
    }

    #[test]
    fn decomposition_covers_exactly() {
        let s = uniform(1, 16);
        for lo in 0..=s.cells() {
            for hi in lo..=s.cells() {
                let parts = s.decompose(lo, hi);
                assert!(parts.len() <= 2 * (s.k() as usize + 1));
                let mut covered = vec![0; s.cells()];
                for m in parts {
                    let (b, a) = s.member_level_pos(m);
                    for n in &mut covered[a << b..(a + 1) << b] {
                        *n += 1;
                    }
                }
                for (c, &n) in covered.iter().enumerate() {
                    assert_eq!(n, usize::from((lo..hi).contains(&c)));
                }
            }
        }
    }

    #[test]
    fn cell_lookup_edges() {
        let s = uniform(1, 4);
        assert_eq!(s.cell_of(0.0), 0);
        assert_eq!(s.cell_of(0.25), 1);
        assert_eq!(s.cell_of(0.2499), 0);
        assert_eq!(s.cell_of(1.0), 3);
        let padded = uniform(1, 3);
        assert_eq!(padded.cell_of(1.0), 2);
        assert_eq!(padded.cell_of(0.99), 2);
    }

    #[test]
    fn split_examples() {
        let s = uniform(1, 4);
        assert_eq!(s.split_range(0.0, 1.0), AxisSplit { full: (0, 4), partial: vec![] });
        assert_eq!(s.split_range(0.3, 0.3), AxisSplit::default());
        assert_eq!(s.split_range(0.25, 0.75), AxisSplit { full: (1, 3), partial: vec![] });
        assert_eq!(s.split_range(0.3, 0.6), AxisSplit { full: (2, 2), partial: vec![1, 2] });
        assert_eq!(s.split_range(0.3, 0.4), AxisSplit { full: (2, 2), partial: vec![1] });
        assert_eq!(s.split_range(0.3, 1.0), AxisSplit { full: (2, 4), partial: vec![1] });
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(DyadicScheme::from_breakpoints(vec![0.0]).is_err());
        assert!(DyadicScheme::from_breakpoints(vec![0.1, 1.0]).is_err());
        assert!(DyadicScheme::from_breakpoints(vec![0.0, 0.5, 0.4, 1.0]).is_err());
    }
}
