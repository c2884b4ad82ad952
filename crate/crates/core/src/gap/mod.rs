//! Generalized arithmetic progressions (GAPs), convex GAPs over symmetric
//! polytopes, and the certified sandwich and embedding searches.
//!
//! A GAP `P = (L, g, r)` has image `{Σ m_j g_j : |m_j| ≤ L_j, m_j ∈ Z}`.
//! Equality of GAPs is structural; two GAPs with the same image may differ.

mod embed;
mod polytope;
mod sandwich;

use std::collections::{BTreeSet, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::distributions::WeightVector;
use crate::linalg;
use crate::rational::{self, Point, Rational};

pub use embed::{embed_proper, Embedding};
pub use polytope::{Cgap, ProductCgap, SymmetricPolytope};
pub use sandwich::{mahler_sandwich, Sandwich};

/// Default cap on enumerated box sizes and lattice-point counts.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GapError {
    #[error("enumeration of {needed} points exceeds the cap of {cap}")]
    EnumerationCapExceeded { needed: String, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("GAP dimensions must be positive")]
    NonPositiveDim,
    #[error("polytope bounds must be positive")]
    NonPositiveBound,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("dilation factor must be positive")]
    InvalidDilation,
    #[error("integer overflow during enumeration")]
    Overflow,
    #[error("operation requires one-dimensional generators, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("rank {0} is outside the supported range")]
    UnsupportedRank(usize),
    #[error("no certified sandwich found: {0}")]
    SandwichNotFound(String),
    #[error("no certified proper embedding found: {0}")]
    EmbeddingNotFound(String),
}

fn cap_error(needed: impl ToString, cap: usize) -> GapError {
    GapError::EnumerationCapExceeded {
        needed: needed.to_string(),
        cap,
    }
}

/// Two coefficient vectors with the same image point.
pub type Collision = (Vec<i64>, Vec<i64>);

/// A symmetric GAP in `Q^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    dim: usize,
    dims: Vec<Rational>,
    generators: Vec<Point>,
}

impl Gap {
    pub fn new(dim: usize, dims: Vec<Rational>, generators: Vec<Point>) -> Result<Self, GapError> {
        if dims.len() != generators.len() {
            return Err(GapError::DimMismatch {
                expected: dims.len(),
                found: generators.len(),
            });
        }
        if dims.iter().any(|l| !l.is_positive()) {
            return Err(GapError::NonPositiveDim);
        }
        for g in &generators {
            if g.len() != dim {
                return Err(GapError::DimMismatch {
                    expected: dim,
                    found: g.len(),
                });
            }
        }
        Ok(Self {
            dim,
            dims,
            generators,
        })
    }

    /// The rank-0 GAP, whose image is `{0}`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            dims: Vec::new(),
            generators: Vec::new(),
        }
    }

    /// One-dimensional GAP from scalar generators.
    pub fn scalar(dims: Vec<Rational>, generators: Vec<Rational>) -> Result<Self, GapError> {
        Self::new(1, dims, generators.into_iter().map(|g| vec![g]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Rational] {
        &self.dims
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    /// `⌊L_j⌋` for each dimension.
    pub fn box_bounds(&self) -> Vec<i64> {
        self.dims
            .iter()
            .map(|l| l.floor().to_integer().to_i64().unwrap_or(i64::MAX))
            .collect()
    }

    /// `Π (2⌊L_j⌋ + 1)`.
    pub fn vol(&self) -> BigUint {
        self.dims.iter().fold(BigUint::one(), |acc, l| {
            let f = l.floor().to_integer().to_biguint().expect("dims positive");
            acc * (f * 2u32 + 1u32)
        })
    }

    /// `P^t = (tL, g, r)`.
    pub fn dilate(&self, t: &Rational) -> Result<Gap, GapError> {
        if !t.is_positive() {
            return Err(GapError::InvalidDilation);
        }
        Ok(Self {
            dim: self.dim,
            dims: self.dims.iter().map(|l| l * t).collect(),
            generators: self.generators.clone(),
        })
    }

    /// `λP`: same dimensions, generators scaled.
    pub fn scaled(&self, lambda: &Rational) -> Gap {
        Self {
            dim: self.dim,
            dims: self.dims.clone(),
            generators: self.generators.iter().map(|g| rational::scale(g, lambda)).collect(),
        }
    }

    fn check_cap(&self, cap: usize) -> Result<(), GapError> {
        let vol = self.vol();
        if vol > BigUint::from(cap) {
            return Err(cap_error(vol, cap));
        }
        Ok(())
    }

    /// Generators scaled to integers by the common denominator.
    fn integer_generators(&self) -> Result<(Vec<Vec<i128>>, BigInt), GapError> {
        let den = rational::common_denominator(self.generators.iter().flatten());
        let den_q = Rational::from_integer(den.clone());
        let gens = self
            .generators
            .iter()
            .map(|g| {
                g.iter()
                    .map(|v| (v * &den_q).to_integer().to_i128().ok_or(GapError::Overflow))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok((gens, den))
    }

    /// Visits every `(m, Σ m_j g_j)` of the box, values on the integer grid.
    fn for_each_point(
        &self,
        cap: usize,
        mut visit: impl FnMut(&[i64], &[i128]) -> bool,
    ) -> Result<BigInt, GapError> {
        self.check_cap(cap)?;
        let (gens, den) = self.integer_generators()?;
        let bounds = self.box_bounds();
        let r = self.rank();
        let mut m: Vec<i64> = bounds.iter().map(|b| -b).collect();
        let mut value = vec![0i128; self.dim];
        let recompute = |m: &[i64], value: &mut Vec<i128>| -> Result<(), GapError> {
            for (c, v) in value.iter_mut().enumerate() {
                let mut s = 0i128;
                for j in 0..r {
                    s = s
                        .checked_add(
                            (m[j] as i128)
                                .checked_mul(gens[j][c])
                                .ok_or(GapError::Overflow)?,
                        )
                        .ok_or(GapError::Overflow)?;
                }
                *v = s;
            }
            Ok(())
        };
        recompute(&m, &mut value)?;
        loop {
            if !visit(&m, &value) {
                return Ok(den);
            }
            // odometer step; the value is updated incrementally
            let mut j = 0;
            loop {
                if j == r {
                    return Ok(den);
                }
                if m[j] < bounds[j] {
                    m[j] += 1;
                    for (c, v) in value.iter_mut().enumerate() {
                        *v = v.checked_add(gens[j][c]).ok_or(GapError::Overflow)?;
                    }
                    break;
                }
                let span = 2 * bounds[j] as i128;
                for (c, v) in value.iter_mut().enumerate() {
                    *v = v
                        .checked_sub(span.checked_mul(gens[j][c]).ok_or(GapError::Overflow)?)
                        .ok_or(GapError::Overflow)?;
                }
                m[j] = -bounds[j];
                j += 1;
            }
        }
    }

    /// The de-duplicated image.
    pub fn image(&self, cap: usize) -> Result<BTreeSet<Point>, GapError> {
        let mut raw: HashSet<Vec<i128>> = HashSet::new();
        let den = self.for_each_point(cap, |_, v| {
            raw.insert(v.to_vec());
            true
        })?;
        let den = Rational::from_integer(den);
        Ok(raw
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .map(|x| Rational::from_integer(BigInt::from(x)) / &den)
                    .collect()
            })
            .collect())
    }

    /// One-dimensional image as sorted scalars.
    pub fn scalar_image(&self, cap: usize) -> Result<Vec<Rational>, GapError> {
        if self.dim != 1 {
            return Err(GapError::NotOneDimensional(self.dim));
        }
        Ok(self.image(cap)?.into_iter().map(|p| p[0].clone()).collect())
    }

    /// `|image|`.
    pub fn size(&self, cap: usize) -> Result<usize, GapError> {
        let mut raw: HashSet<Vec<i128>> = HashSet::new();
        self.for_each_point(cap, |_, v| {
            raw.insert(v.to_vec());
            true
        })?;
        Ok(raw.len())
    }

    /// Two distinct coefficient vectors with the same image point, if any.
    pub fn first_collision(&self, cap: usize) -> Result<Option<Collision>, GapError> {
        let mut seen: std::collections::HashMap<Vec<i128>, Vec<i64>> = Default::default();
        let mut found = None;
        self.for_each_point(cap, |m, v| {
            if let Some(prev) = seen.get(v) {
                found = Some((prev.clone(), m.to_vec()));
                return false;
            }
            seen.insert(v.to_vec(), m.to_vec());
            true
        })?;
        Ok(found)
    }

    /// Injectivity of the box-to-image map.
    pub fn is_proper(&self, cap: usize) -> Result<bool, GapError> {
        Ok(self.first_collision(cap)?.is_none())
    }

    pub fn is_t_proper(&self, t: &Rational, cap: usize) -> Result<bool, GapError> {
        self.dilate(t)?.is_proper(cap)
    }

    /// True when the generators are linearly independent over `Q`, in which
    /// case every dilate is proper.
    pub fn certify_infinitely_proper(&self) -> bool {
        linalg::rank(&self.generators) == self.rank()
    }

    /// `Σ m_j g_j`.
    pub fn point(&self, m: &[i64]) -> Point {
        let mut out = rational::zero_point(self.dim);
        for (mj, g) in m.iter().zip(&self.generators) {
            out = rational::add(&out, &rational::scale(g, &rational::int(*mj)));
        }
        out
    }

    /// Product GAP in `Q^{Σ d_j}`: the generators of factor `j` are embedded
    /// in block `j`, so each product generator is supported on one block.
    pub fn product(factors: &[Gap]) -> Gap {
        let dim: usize = factors.iter().map(|f| f.dim).sum();
        let mut dims = Vec::new();
        let mut generators = Vec::new();
        let mut offset = 0;
        for f in factors {
            for (l, g) in f.dims.iter().zip(&f.generators) {
                let mut v = rational::zero_point(dim);
                v[offset..offset + f.dim].clone_from_slice(g);
                dims.push(l.clone());
                generators.push(v);
            }
            offset += f.dim;
        }
        Gap {
            dim,
            dims,
            generators,
        }
    }

    /// `max_j |g_j|` in the max-norm (zero for rank 0).
    pub fn max_generator_norm(&self) -> Rational {
        self.generators
            .iter()
            .map(|g| rational::max_norm(g))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Whether `x` lies in the closed max-norm `δ`-neighbourhood of `set`.
pub fn neighborhood_contains(set: &BTreeSet<Point>, delta: &Rational, x: &[Rational]) -> bool {
    if delta.is_zero() {
        return set.contains(x);
    }
    if x.len() == 1 {
        // the set is sorted on the line: only the neighbours of x matter
        let lo = vec![&x[0] - delta];
        return set
            .range(lo..)
            .next()
            .is_some_and(|p| (&p[0] - &x[0]).abs() <= *delta);
    }
    set.iter().any(|p| rational::max_dist(p, x) <= *delta)
}

/// Indices `k` with `a_k ∈ [K]_δ`.
pub fn covered_indices(set: &BTreeSet<Point>, delta: &Rational, a: &WeightVector) -> Vec<usize> {
    a.entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| neighborhood_contains(set, delta, e))
        .map(|(k, _)| k)
        .collect()
}

/// `#{k : a_k ∈ [K]_δ}`.
pub fn coverage_count(set: &BTreeSet<Point>, delta: &Rational, a: &WeightVector) -> usize {
    covered_indices(set, delta, a).len()
}

/// Wire form `{"rank": r, "dims": [...], "generators": [[...]], "dim": d}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapJson {
    pub rank: usize,
    #[serde(with = "rational::serde_q::vec")]
    pub dims: Vec<Rational>,
    #[serde(with = "rational::serde_q::vec2")]
    pub generators: Vec<Point>,
    pub dim: usize,
}

impl Serialize for Gap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GapJson {
            rank: self.rank(),
            dims: self.dims.clone(),
            generators: self.generators.clone(),
            dim: self.dim,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GapJson::deserialize(d)?;
        if j.rank != j.dims.len() {
            return Err(serde::de::Error::custom("rank does not match dims"));
        }
        Gap::new(j.dim, j.dims, j.generators).map_err(serde::de::Error::custom)
    }
}
