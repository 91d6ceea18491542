//! Points in `[0,1]^d` as scaled indicator vectors over dyadic members.

use crate::error::{Error, Result};
use crate::geometry::dyadic::DyadicScheme;
use crate::geometry::quantile::validate_point;
use crate::vector::SparseVec;

/// Largest dimension accepted for box embeddings.
pub const MAX_BOX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalEmbedding {
    /// Indices `k·|J| + member`, one per level per dimension, with value `scale`.
    pub vector: SparseVec,
    /// `1/√(d(K+1))`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxEmbedding {
    /// Keys of the `Π_k (K_k+1)` dyadic boxes containing the point, sorted.
    pub keys: Vec<u128>,
    /// `Π_k (K_k+1)^{−1/2}`.
    pub scale: f64,
}

pub fn embed_point_intervals(x: &[f64], scheme: &DyadicScheme) -> Result<IntervalEmbedding> {
    let d = x.len();
    if d == 0 {
        return Err(Error::config("cannot embed a zero-dimensional point"));
    }
    validate_point(x, d, 0)?;
    let per = scheme.k() as usize + 1;
    let scale = 1.0 / ((d * per) as f64).sqrt();
    let members = scheme.members();
    let mut indices = Vec::with_capacity(d * per);
    for (k, &xk) in x.iter().enumerate() {
        let mut ids: Vec<usize> = scheme.ancestors(scheme.cell_of(xk)).map(|m| k * members + m).collect();
        ids.sort_unstable();
        indices.extend(ids);
    }
    let values = vec![scale; indices.len()];
    Ok(IntervalEmbedding {
        vector: SparseVec::from_parts(indices, values)?,
        scale,
    })
}

/// Mixed-radix packing of one member id per dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxKeySpace {
    radices: Vec<u128>,
}

impl BoxKeySpace {
    pub fn new(schemes: &[DyadicScheme]) -> Result<Self> {
        if schemes.is_empty() || schemes.len() > MAX_BOX_DIM {
            return Err(Error::TooLarge(format!(
                "box embeddings support 1 <= d <= {MAX_BOX_DIM}, got d = {}",
                schemes.len()
            )));
        }
        let radices: Vec<u128> = schemes.iter().map(|s| s.members() as u128).collect();
        radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::TooLarge("dyadic box index space exceeds 128 bits".into()))?;
        Ok(Self { radices })
    }

    pub fn dim(&self) -> usize {
        self.radices.len()
    }

    /// Number of boxes, `Π_k |J_k|`, as a float.
    pub fn size(&self) -> f64 {
        self.radices.iter().map(|&r| r as f64).product()
    }

    pub fn key(&self, members: &[usize]) -> u128 {
        members
            .iter()
            .zip(&self.radices)
            .rev()
            .fold(0u128, |acc, (&m, &r)| acc * r + m as u128)
    }

    pub fn members(&self, mut key: u128) -> Vec<usize> {
        self.radices
            .iter()
            .map(|&r| {
                let m = (key % r) as usize;
                key /= r;
                m
            })
            .collect()
    }
}

pub fn embed_point_boxes(x: &[f64], schemes: &[DyadicScheme]) -> Result<BoxEmbedding> {
    let space = BoxKeySpace::new(schemes)?;
    embed_point_boxes_in(x, schemes, &space)
}

pub(crate) fn embed_point_boxes_in(x: &[f64], schemes: &[DyadicScheme], space: &BoxKeySpace) -> Result<BoxEmbedding> {
    let d = schemes.len();
    validate_point(x, d, 0)?;
    let ancestors: Vec<Vec<usize>> = x
        .iter()
        .zip(schemes)
        .map(|(&xk, s)| s.ancestors(s.cell_of(xk)).collect())
        .collect();
    let count: usize = ancestors.iter().map(Vec::len).product();
    let mut keys = Vec::with_capacity(count);
    let mut pick = vec![0usize; d];
    let mut members = vec![0usize; d];
    loop {
        for k in 0..d {
            members[k] = ancestors[k][pick[k]];
        }
        keys.push(space.key(&members));
        // Odometer over the per-dimension ancestor lists.
        let mut k = 0;
        while k < d {
            pick[k] += 1;
            if pick[k] < ancestors[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    keys.sort_unstable();
    Ok(BoxEmbedding {
        keys,
        scale: 1.0 / (count as f64).sqrt(),
    })
}
