use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{cap_error, GapError};
use crate::linalg;
use crate::rational::{self, Point, Rational};

/// An origin-symmetric polytope `{x ∈ R^r : |⟨u_i, x⟩| ≤ b_i for all i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricPolytope {
    rank: usize,
    constraints: Vec<(Point, Rational)>,
    bbox: Vec<Rational>,
    // constraints rescaled so that integer points are tested in i128
    int_constraints: Vec<(Vec<i128>, i128)>,
}

impl SymmetricPolytope {
    pub fn new(rank: usize, constraints: Vec<(Point, Rational)>) -> Result<Self, GapError> {
        for (u, b) in &constraints {
            if u.len() != rank {
                return Err(GapError::DimMismatch {
                    expected: rank,
                    found: u.len(),
                });
            }
            if !b.is_positive() {
                return Err(GapError::NonPositiveBound);
            }
        }
        let constraints: Vec<(Point, Rational)> = constraints
            .into_iter()
            .filter(|(u, _)| !rational::is_zero_point(u))
            .collect();
        let bbox = bounding_box(rank, &constraints)?;
        let int_constraints = constraints
            .iter()
            .map(|(u, b)| {
                let den = Rational::from_integer(rational::common_denominator(u));
                let ui = u
                    .iter()
                    .map(|v| (v * &den).to_integer().to_i128().ok_or(GapError::Overflow))
                    .collect::<Result<Vec<_>, _>>()?;
                let bi = (b * &den)
                    .floor()
                    .to_integer()
                    .to_i128()
                    .ok_or(GapError::Overflow)?;
                Ok((ui, bi))
            })
            .collect::<Result<_, GapError>>()?;
        Ok(Self {
            rank,
            constraints,
            bbox,
            int_constraints,
        })
    }

    /// The box `|x_i| ≤ bounds_i`.
    pub fn cube(bounds: &[Rational]) -> Result<Self, GapError> {
        let r = bounds.len();
        Self::new(
            r,
            bounds
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let mut u = rational::zero_point(r);
                    u[i] = Rational::one();
                    (u, b.clone())
                })
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn constraints(&self) -> &[(Point, Rational)] {
        &self.constraints
    }

    /// Half-widths of the smallest enclosing box.
    pub fn bounding_box(&self) -> &[Rational] {
        &self.bbox
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.constraints
            .iter()
            .all(|(u, b)| rational::dot(u, x).abs() <= *b)
    }

    pub fn contains_int(&self, x: &[i64]) -> bool {
        self.int_constraints.iter().all(|(u, b)| {
            let s: i128 = u.iter().zip(x).map(|(a, v)| a * *v as i128).sum();
            s.abs() <= *b
        })
    }

    /// Minkowski functional: the least `t ≥ 0` with `x ∈ tV`.
    pub fn gauge(&self, x: &[Rational]) -> Rational {
        self.constraints
            .iter()
            .map(|(u, b)| rational::dot(u, x).abs() / b)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn gauge_int(&self, x: &[i64]) -> Rational {
        let q: Point = x.iter().map(|v| rational::int(*v)).collect();
        self.gauge(&q)
    }

    /// `V ∩ {|⟨u, x⟩| ≤ b}`.
    pub fn with_constraint(&self, u: Point, b: Rational) -> Result<Self, GapError> {
        let mut c = self.constraints.clone();
        c.push((u, b));
        Self::new(self.rank, c)
    }

    /// `tV` for `t > 0`.
    pub fn scaled(&self, t: &Rational) -> Result<Self, GapError> {
        if !t.is_positive() {
            return Err(GapError::InvalidDilation);
        }
        Self::new(
            self.rank,
            self.constraints
                .iter()
                .map(|(u, b)| (u.clone(), b * t))
                .collect(),
        )
    }

    /// `{y ∈ R^k : B y ∈ V}` where `basis` holds the `k` columns of `B`.
    pub fn pull_back(&self, basis: &[Point]) -> Result<Self, GapError> {
        for col in basis {
            if col.len() != self.rank {
                return Err(GapError::DimMismatch {
                    expected: self.rank,
                    found: col.len(),
                });
            }
        }
        Self::new(
            basis.len(),
            self.constraints
                .iter()
                .map(|(u, b)| (basis.iter().map(|col| rational::dot(u, col)).collect(), b.clone()))
                .collect(),
        )
    }

    /// Number of integer points of the enclosing box.
    pub fn box_count(&self) -> BigUint {
        self.bbox.iter().fold(BigUint::one(), |acc, b| {
            acc * (b.floor().to_integer().to_biguint().expect("nonnegative") * 2u32 + 1u32)
        })
    }

    /// `Z^r ∩ V`, sorted lexicographically.
    pub fn lattice_points(&self, cap: usize) -> Result<Vec<Vec<i64>>, GapError> {
        let count = self.box_count();
        if count > BigUint::from(cap) {
            return Err(cap_error(count, cap));
        }
        let bounds: Vec<i64> = self
            .bbox
            .iter()
            .map(|b| b.floor().to_integer().to_i64().expect("within cap"))
            .collect();
        let mut out = Vec::new();
        let mut m: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            if self.contains_int(&m) {
                out.push(m.clone());
            }
            let mut j = self.rank;
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                if m[j] < bounds[j] {
                    m[j] += 1;
                    break;
                }
                m[j] = -bounds[j];
            }
        }
    }
}

/// Vertices are intersections of `r` independent facet hyperplanes; the box
/// half-width in coordinate `i` is the largest `|x_i|` over feasible vertices.
fn bounding_box(rank: usize, constraints: &[(Point, Rational)]) -> Result<Vec<Rational>, GapError> {
    if rank == 0 {
        return Ok(Vec::new());
    }
    let normals: Vec<Point> = constraints.iter().map(|(u, _)| u.clone()).collect();
    if linalg::rank(&normals) < rank {
        return Err(GapError::Unbounded);
    }
    let mut bbox = vec![Rational::zero(); rank];
    let k = constraints.len();
    let mut idx: Vec<usize> = (0..rank).collect();
    loop {
        let rows: Vec<Point> = idx.iter().map(|&i| constraints[i].0.clone()).collect();
        if linalg::rank(&rows) == rank {
            for signs in 0u32..(1 << rank) {
                let rhs: Vec<Rational> = idx
                    .iter()
                    .enumerate()
                    .map(|(p, &i)| {
                        if signs >> p & 1 == 1 {
                            -constraints[i].1.clone()
                        } else {
                            constraints[i].1.clone()
                        }
                    })
                    .collect();
                let x = linalg::solve(&rows, &rhs).expect("independent rows");
                let feasible = constraints
                    .iter()
                    .all(|(u, b)| rational::dot(u, &x).abs() <= *b);
                if feasible {
                    for (bi, xi) in bbox.iter_mut().zip(&x) {
                        let a = xi.abs();
                        if a > *bi {
                            *bi = a;
                        }
                    }
                }
            }
        }
        // next r-subset of 0..k in lexicographic order
        let mut p = rank;
        loop {
            if p == 0 {
                return Ok(bbox);
            }
            p -= 1;
            if idx[p] < k - rank + p {
                idx[p] += 1;
                for q in p + 1..rank {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A convex GAP `{⟨ν, h⟩ : ν ∈ Z^r ∩ V}` on the line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cgap {
    h: Vec<Rational>,
    body: SymmetricPolytope,
}

impl Cgap {
    pub fn new(h: Vec<Rational>, body: SymmetricPolytope) -> Result<Self, GapError> {
        if h.len() != body.rank() {
            return Err(GapError::DimMismatch {
                expected: body.rank(),
                found: h.len(),
            });
        }
        Ok(Self { h, body })
    }

    /// The rank-0 CGAP with image `{0}`.
    pub fn zero() -> Self {
        Self {
            h: Vec::new(),
            body: SymmetricPolytope::new(0, Vec::new()).expect("rank 0"),
        }
    }

    /// `{νh : |ν| ≤ L}` for rank 1.
    pub fn interval(h: Rational, l: Rational) -> Result<Self, GapError> {
        Self::new(vec![h], SymmetricPolytope::cube(&[l])?)
    }

    pub fn rank(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[Rational] {
        &self.h
    }

    pub fn body(&self) -> &SymmetricPolytope {
        &self.body
    }

    /// `⟨ν, h⟩` for each lattice point `ν` of the body.
    pub fn labelled_points(&self, cap: usize) -> Result<Vec<(Vec<i64>, Rational)>, GapError> {
        Ok(self
            .body
            .lattice_points(cap)?
            .into_iter()
            .map(|nu| {
                let v = nu
                    .iter()
                    .zip(&self.h)
                    .fold(Rational::zero(), |acc, (n, h)| acc + h * Rational::from_integer(BigInt::from(*n)));
                (nu, v)
            })
            .collect())
    }

    /// The de-duplicated image and the lattice-point count `|Z^r ∩ V|`.
    pub fn image(&self, cap: usize) -> Result<(BTreeSet<Point>, usize), GapError> {
        let pts = self.labelled_points(cap)?;
        let size = pts.len();
        Ok((pts.into_iter().map(|(_, v)| vec![v]).collect(), size))
    }

    /// `λK`: same body, `h` scaled.
    pub fn scaled(&self, lambda: &Rational) -> Cgap {
        Cgap {
            h: rational::scale(&self.h, lambda),
            body: self.body.clone(),
        }
    }
}

/// `K = K_1 × … × K_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCgap {
    pub factors: Vec<Cgap>,
}

impl ProductCgap {
    pub fn rank(&self) -> usize {
        self.factors.iter().map(Cgap::rank).sum()
    }

    /// Product image in `Q^d` and the product of lattice-point counts.
    pub fn image(&self, cap: usize) -> Result<(BTreeSet<Point>, usize), GapError> {
        let mut points: Vec<Point> = vec![Vec::new()];
        let mut size = 1usize;
        for f in &self.factors {
            let (img, s) = f.image(cap)?;
            size = size.saturating_mul(s);
            if points.len().saturating_mul(img.len()) > cap {
                return Err(cap_error(points.len() * img.len(), cap));
            }
            points = points
                .iter()
                .flat_map(|p| {
                    img.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(x[0].clone());
                        q
                    })
                })
                .collect();
        }
        Ok((points.into_iter().collect(), size))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintJson {
    #[serde(with = "rational::serde_q::vec")]
    pub u: Point,
    #[serde(with = "rational::serde_q")]
    pub b: Rational,
}

/// Wire form `{"rank": r, "h": [...], "constraints": [{"u": [...], "b": "p/q"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgapJson {
    pub rank: usize,
    #[serde(with = "rational::serde_q::vec")]
    pub h: Vec<Rational>,
    pub constraints: Vec<ConstraintJson>,
}

impl Serialize for Cgap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CgapJson {
            rank: self.rank(),
            h: self.h.clone(),
            constraints: self
                .body
                .constraints()
                .iter()
                .map(|(u, b)| ConstraintJson {
                    u: u.clone(),
                    b: b.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cgap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = CgapJson::deserialize(d)?;
        let body = SymmetricPolytope::new(
            j.rank,
            j.constraints.into_iter().map(|c| (c.u, c.b)).collect(),
        )
        .map_err(serde::de::Error::custom)?;
        Cgap::new(j.h, body).map_err(serde::de::Error::custom)
    }
}

impl Serialize for SymmetricPolytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            rank: usize,
            constraints: &'a [ConstraintJson],
        }
        let c: Vec<ConstraintJson> = self
            .constraints
            .iter()
            .map(|(u, b)| ConstraintJson {
                u: u.clone(),
                b: b.clone(),
            })
            .collect();
        Wire {
            rank: self.rank,
            constraints: &c,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricPolytope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            rank: usize,
            constraints: Vec<ConstraintJson>,
        }
        let w = Wire::deserialize(d)?;
        SymmetricPolytope::new(w.rank, w.constraints.into_iter().map(|c| (c.u, c.b)).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for ProductCgap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.factors.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn v(xs: &[i64]) -> Point {
        xs.iter().map(|x| int(*x)).collect()
    }

    #[test]
    fn lattice_point_examples() {
        let b = SymmetricPolytope::cube(&[int(2), int(2)]).unwrap();
        assert_eq!(b.lattice_points(100).unwrap().len(), 25);
        let d = SymmetricPolytope::new(2, vec![(v(&[1, 1]), int(1)), (v(&[1, -1]), int(1))]).unwrap();
        let pts = d.lattice_points(100).unwrap();
        assert_eq!(
            pts,
            vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]
        );
        assert_eq!(d.bounding_box(), &[int(1), int(1)]);
    }

    #[test]
    fn unbounded_is_rejected() {
        assert_eq!(
            SymmetricPolytope::new(2, vec![(v(&[1, 1]), int(1))]),
            Err(GapError::Unbounded)
        );
    }

    #[test]
    fn cap_is_enforced() {
        let b = SymmetricPolytope::cube(&[int(100), int(100)]).unwrap();
        assert!(matches!(
            b.lattice_points(1000),
            Err(GapError::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn cgap_image_examples() {
        let (img, size) = Cgap::zero().image(10).unwrap();
        assert_eq!(img.into_iter().collect::<Vec<_>>(), vec![v(&[0])]);
        assert_eq!(size, 1);
        let k = Cgap::interval(ratio(1, 3), int(2)).unwrap();
        let (img, size) = k.image(10).unwrap();
        assert_eq!(size, 5);
        assert_eq!(
            img.into_iter().map(|p| p[0].clone()).collect::<Vec<_>>(),
            vec![ratio(-2, 3), ratio(-1, 3), int(0), ratio(1, 3), ratio(2, 3)]
        );
        let cross = SymmetricPolytope::new(2, vec![(v(&[1, 1]), int(1)), (v(&[1, -1]), int(1))]).unwrap();
        let k = Cgap::new(vec![int(1), int(1)], cross).unwrap();
        let (img, size) = k.image(10).unwrap();
        assert_eq!(size, 5);
        assert_eq!(img.len(), 3);
    }

    #[test]
    fn pull_back_matches_direct_membership() {
        let v0 = SymmetricPolytope::new(2, vec![(v(&[1, 0]), int(4)), (v(&[1, -2]), int(1))]).unwrap();
        let basis = vec![vec![int(2), int(1)], vec![int(1), int(0)]];
        let w = v0.pull_back(&basis).unwrap();
        for y in w.lattice_points(1000).unwrap() {
            let x: Point = (0..2)
                .map(|i| int(y[0]) * &basis[0][i] + int(y[1]) * &basis[1][i])
                .collect();
            assert!(v0.contains(&x));
        }
    }

    #[test]
    fn product_image_multiplies() {
        let a = Cgap::interval(int(1), int(1)).unwrap();
        let b = Cgap::interval(int(2), int(2)).unwrap();
        let p = ProductCgap { factors: vec![a, b] };
        let (img, size) = p.image(1000).unwrap();
        assert_eq!(size, 15);
        assert_eq!(img.len(), 15);
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let k = Cgap::interval(ratio(1, 3), int(2)).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"rank":1,"h":["1/3"],"constraints":[{"u":["1/1"],"b":"2/1"}]}"#);
        assert_eq!(serde_json::from_str::<Cgap>(&s).unwrap(), k);
    }
}
