//! Online interval and box discrepancy: embed each arriving point, sign it
//! with the walk, record the signed point in a tracker.
//!
//! The distribution (or, offline, the point set itself) fixes the quantile
//! grid and dyadic scheme before the first point is seen.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::dyadic::{build_dyadic_scheme, DyadicScheme};
use crate::geometry::embed::{embed_point_boxes_in, embed_point_intervals, BoxKeySpace};
use crate::geometry::quantile::{build_quantile_grid, DistributionAccess, QuantileGrid};
use crate::geometry::tracker::{BoxTracker, DiscrepancyTracker};
use crate::vector::{InputVector, Sign, SparseVec};
use crate::walk::{drive_observed, BalanceSigner, Signer, VectorStream, WalkConfig, WalkTrace};

/// A point together with the unit vector the walk sees for it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub point: Vec<f64>,
    pub vector: SparseVec,
    /// Dyadic box keys, for box embeddings only.
    pub keys: Vec<u128>,
}

impl InputVector for EmbeddedPoint {
    fn norm_sq(&self) -> f64 {
        self.vector.norm_sq()
    }
    fn nnz(&self) -> usize {
        self.vector.nnz()
    }
    fn check_dim(&self, dim: usize, step: usize) -> Result<()> {
        self.vector.check_dim(dim, step)
    }
    fn dot(&self, w: &[f64]) -> f64 {
        self.vector.dot(w)
    }
    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F) {
        self.vector.for_each_entry(f)
    }
}

#[derive(Debug, Clone)]
pub struct GeometryRun<T> {
    pub tracker: T,
    pub trace: WalkTrace,
    pub config: WalkConfig,
    /// Every embedded vector is a 0/1 indicator times `scale`; divide walk
    /// quantities by it to get signed counts.
    pub scale: f64,
}

impl<T> GeometryRun<T> {
    pub fn signs(&self) -> &[Sign] {
        &self.trace.signs
    }

    /// Largest sup-norm of the walk, in signed-count units.
    pub fn max_unscaled_sup_norm(&self) -> f64 {
        self.trace.max_sup_norm() / self.scale
    }
}

fn next_point<I: Iterator<Item = Vec<f64>>>(points: &mut I, emitted: usize, t: usize) -> Result<Vec<f64>> {
    if emitted >= t {
        return Err(Error::config(format!("point stream ran past t = {t}")));
    }
    points
        .next()
        .ok_or_else(|| Error::config(format!("point stream ended after {emitted} of {t} points")))
}

fn reject_observation(observed: Option<&[f64]>) -> Result<()> {
    if observed.is_some() {
        return Err(Error::Contract("point stream was shown the walk state".into()));
    }
    Ok(())
}

struct IntervalStream<'a, I> {
    points: I,
    scheme: &'a DyadicScheme,
    d: usize,
    t: usize,
    emitted: usize,
}

impl<I: Iterator<Item = Vec<f64>>> VectorStream for IntervalStream<'_, I> {
    type Item = EmbeddedPoint;

    fn dim(&self) -> usize {
        self.d * self.scheme.members()
    }

    fn horizon(&self) -> usize {
        self.t
    }

    fn next_vector(&mut self, observed: Option<&[f64]>) -> Result<EmbeddedPoint> {
        reject_observation(observed)?;
        let point = next_point(&mut self.points, self.emitted, self.t)?;
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                step: self.emitted + 1,
                expected: self.d,
                got: point.len(),
            });
        }
        let e = embed_point_intervals(&point, self.scheme)?;
        self.emitted += 1;
        Ok(EmbeddedPoint {
            point,
            vector: e.vector,
            keys: Vec::new(),
        })
    }
}

/// Box coordinates are numbered in order of first appearance, so the walk
/// only ever holds boxes that contain a point.
struct BoxStream<'a, I> {
    points: I,
    schemes: &'a [DyadicScheme],
    space: &'a BoxKeySpace,
    index: HashMap<u128, usize>,
    t: usize,
    emitted: usize,
}

impl<I: Iterator<Item = Vec<f64>>> VectorStream for BoxStream<'_, I> {
    type Item = EmbeddedPoint;

    fn dim(&self) -> usize {
        self.index.len()
    }

    fn horizon(&self) -> usize {
        self.t
    }

    fn next_vector(&mut self, observed: Option<&[f64]>) -> Result<EmbeddedPoint> {
        reject_observation(observed)?;
        let point = next_point(&mut self.points, self.emitted, self.t)?;
        if point.len() != self.schemes.len() {
            return Err(Error::DimensionMismatch {
                step: self.emitted + 1,
                expected: self.schemes.len(),
                got: point.len(),
            });
        }
        let e = embed_point_boxes_in(&point, self.schemes, self.space)?;
        let pairs = e
            .keys
            .iter()
            .map(|key| {
                let next = self.index.len();
                (*self.index.entry(*key).or_insert(next), e.scale)
            })
            .collect();
        self.emitted += 1;
        Ok(EmbeddedPoint {
            point,
            vector: SparseVec::from_pairs(pairs)?,
            keys: e.keys,
        })
    }
}

/// Walk configuration over the `d·|J|` interval coordinates.
pub fn interval_walk_config(scheme: &DyadicScheme, d: usize, t: usize, delta: f64) -> Result<WalkConfig> {
    WalkConfig::nominal((d * scheme.members()) as f64, t, delta)
}

/// Walk configuration over all `Π_k |J_k|` dyadic boxes, touched or not.
pub fn box_walk_config(space: &BoxKeySpace, t: usize, delta: f64) -> Result<WalkConfig> {
    WalkConfig::nominal(space.size(), t, delta)
}

fn interval_scale(scheme: &DyadicScheme, d: usize) -> f64 {
    1.0 / ((d * (scheme.k() as usize + 1)) as f64).sqrt()
}

/// Interval pipeline under any signing rule.
pub fn run_interval_with<I, G>(
    points: I,
    scheme: DyadicScheme,
    d: usize,
    t: usize,
    signer: &mut G,
    seed: u64,
) -> Result<(DiscrepancyTracker, WalkTrace)>
where
    I: IntoIterator<Item = Vec<f64>>,
    G: Signer,
{
    if d == 0 || t == 0 {
        return Err(Error::config("interval discrepancy needs d >= 1 and t >= 1"));
    }
    let mut tracker = DiscrepancyTracker::new(scheme.clone(), d);
    let mut stream = IntervalStream {
        points: points.into_iter(),
        scheme: &scheme,
        d,
        t,
        emitted: 0,
    };
    let mut insert_err = None;
    let trace = drive_observed(&mut stream, signer, seed, |_| {}, |p, sign| {
        if let Err(e) = tracker.insert(&p.point, sign) {
            insert_err.get_or_insert(e);
        }
    })?;
    insert_err.map_or(Ok(()), Err)?;
    Ok((tracker, trace))
}

fn run_interval_on_grid<I>(points: I, grid: &QuantileGrid, delta: f64, seed: u64) -> Result<GeometryRun<DiscrepancyTracker>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let (d, t) = (grid.dim(), grid.horizon());
    let scheme = build_dyadic_scheme(grid)?;
    let config = interval_walk_config(&scheme, d, t, delta)?;
    let scale = interval_scale(&scheme, d);
    let mut signer = BalanceSigner::new(config.clone(), seed);
    let (tracker, trace) = run_interval_with(points, scheme, d, t, &mut signer, seed)?;
    Ok(GeometryRun {
        tracker,
        trace,
        config,
        scale,
    })
}

/// Online interval discrepancy for points drawn from a known distribution.
pub fn run_interval_discrepancy<I>(
    points: I,
    dist: DistributionAccess<'_>,
    d: usize,
    t: usize,
    delta: f64,
    seed: u64,
) -> Result<GeometryRun<DiscrepancyTracker>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let grid = build_quantile_grid(dist, d, t)?;
    run_interval_on_grid(points, &grid, delta, seed)
}

/// Offline variant: the grid comes from the empirical quantiles of the
/// point set, which is then signed in order.
pub fn run_interval_offline(points: &[Vec<f64>], d: usize, delta: f64, seed: u64) -> Result<GeometryRun<DiscrepancyTracker>> {
    let grid = QuantileGrid::from_points(points, d)?;
    run_interval_on_grid(points.iter().cloned(), &grid, delta, seed)
}

/// Box pipeline under any signing rule.
pub fn run_tusnady_with<I, G>(
    points: I,
    schemes: Vec<DyadicScheme>,
    t: usize,
    signer: &mut G,
    seed: u64,
) -> Result<(BoxTracker, WalkTrace)>
where
    I: IntoIterator<Item = Vec<f64>>,
    G: Signer,
{
    if t == 0 {
        return Err(Error::config("box discrepancy needs t >= 1"));
    }
    let mut tracker = BoxTracker::new(schemes.clone())?;
    let space = tracker.key_space().clone();
    let mut stream = BoxStream {
        points: points.into_iter(),
        schemes: &schemes,
        space: &space,
        index: HashMap::new(),
        t,
        emitted: 0,
    };
    let trace = drive_observed(&mut stream, signer, seed, |_| {}, |p, sign| {
        tracker.insert_embedded(&p.point, &p.keys, sign)
    })?;
    Ok((tracker, trace))
}

fn run_tusnady_on_grid<I>(points: I, grid: &QuantileGrid, delta: f64, seed: u64) -> Result<GeometryRun<BoxTracker>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let (d, t) = (grid.dim(), grid.horizon());
    let scheme = build_dyadic_scheme(grid)?;
    let schemes = vec![scheme; d];
    let space = BoxKeySpace::new(&schemes)?;
    let config = box_walk_config(&space, t, delta)?;
    let scale = schemes
        .iter()
        .map(|s| 1.0 / (s.k() as f64 + 1.0).sqrt())
        .product();
    let mut signer = BalanceSigner::new(config.clone(), seed);
    let (tracker, trace) = run_tusnady_with(points, schemes, t, &mut signer, seed)?;
    Ok(GeometryRun {
        tracker,
        trace,
        config,
        scale,
    })
}

/// Online discrepancy over axis-parallel boxes for points from a known distribution.
pub fn run_tusnady<I>(
    points: I,
    dist: DistributionAccess<'_>,
    d: usize,
    t: usize,
    delta: f64,
    seed: u64,
) -> Result<GeometryRun<BoxTracker>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let grid = build_quantile_grid(dist, d, t)?;
    run_tusnady_on_grid(points, &grid, delta, seed)
}

pub fn run_tusnady_offline(points: &[Vec<f64>], d: usize, delta: f64, seed: u64) -> Result<GeometryRun<BoxTracker>> {
    let grid = QuantileGrid::from_points(points, d)?;
    run_tusnady_on_grid(points.iter().cloned(), &grid, delta, seed)
}
