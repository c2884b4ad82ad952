use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{Gap, GapError, SymmetricPolytope};
use crate::linalg;
use crate::rational::{self, Point, Rational};

/// Number of shortest lattice points tried as generators.
const CANDIDATES: usize = 24;
const MAX_RANK: usize = 4;

/// A GAP `P` with integer generators and a dilation `t*` such that
/// `Image(P) ⊆ V ∩ Z^r ⊆ Image(P^{t*})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sandwich {
    pub gap: Gap,
    #[serde(with = "rational::serde_q")]
    pub t_star: Rational,
    /// `|V ∩ Z^r|`.
    pub lattice_size: usize,
    /// Integer coordinates of every lattice point of `V` in the generators,
    /// in the order of [`SymmetricPolytope::lattice_points`].
    #[serde(skip)]
    pub coordinates: Vec<(Vec<i64>, Vec<i64>)>,
}

struct Candidate {
    basis: Vec<Vec<i64>>,
    dims: Vec<Rational>,
    t_star: Rational,
    coords: Vec<Vec<i64>>,
}

/// Certified search for a sandwiching GAP.
///
/// Generators are drawn from the shortest lattice points of `V` (in the gauge
/// of `V`); every subset that is a basis of the lattice spanned by
/// `V ∩ Z^r` is scored by the dilation it needs, with box dimensions grown
/// greedily while the box corners stay in `V`. Both inclusions of the winner
/// are re-checked point by point before it is returned.
pub fn mahler_sandwich(
    v: &SymmetricPolytope,
    cap_t: &Rational,
    cap: usize,
) -> Result<Sandwich, GapError> {
    let r = v.rank();
    if r > MAX_RANK {
        return Err(GapError::UnsupportedRank(r));
    }
    let s = v.lattice_points(cap)?;
    let lattice_size = s.len();
    let nonzero: Vec<&Vec<i64>> = s.iter().filter(|p| p.iter().any(|x| *x != 0)).collect();
    if nonzero.is_empty() {
        return Ok(Sandwich {
            gap: Gap::zero(r),
            t_star: Rational::one(),
            lattice_size,
            coordinates: s.iter().map(|p| (p.clone(), Vec::new())).collect(),
        });
    }

    // one representative of each ±pair, shortest first
    let mut reps: Vec<(Rational, Vec<i64>)> = nonzero
        .iter()
        .filter(|p| p.iter().find(|x| **x != 0).is_some_and(|x| *x > 0))
        .map(|p| (v.gauge_int(p), (*p).clone()))
        .collect();
    reps.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    reps.truncate(CANDIDATES);
    let reps: Vec<Vec<i64>> = reps.into_iter().map(|(_, p)| p).collect();

    let as_q = |p: &[i64]| -> Point { p.iter().map(|x| rational::int(*x)).collect() };
    let span_rank = linalg::rank(&nonzero.iter().map(|p| as_q(p)).collect::<Vec<_>>());

    let mut best: Option<Candidate> = None;
    let mut idx: Vec<usize> = (0..span_rank).collect();
    if span_rank <= reps.len() {
        loop {
            let basis: Vec<Vec<i64>> = idx.iter().map(|&i| reps[i].clone()).collect();
            if let Some(c) = score(v, &basis, &s) {
                let better = best.as_ref().is_none_or(|b| c.t_star < b.t_star);
                if better {
                    let done = c.t_star.is_one();
                    best = Some(c);
                    if done {
                        break;
                    }
                }
            }
            if !next_subset(&mut idx, reps.len()) {
                break;
            }
        }
    }
    let Some(best) = best else {
        return Err(GapError::SandwichNotFound(
            "no basis of the lattice among the shortest points".into(),
        ));
    };
    if best.t_star > *cap_t {
        return Err(GapError::SandwichNotFound(format!(
            "best dilation {} exceeds cap {}",
            best.t_star, cap_t
        )));
    }
    let gap = Gap::new(
        r,
        best.dims.clone(),
        best.basis.iter().map(|b| as_q(b)).collect(),
    )?;
    certify(v, &gap, &best, &s, cap)?;
    Ok(Sandwich {
        gap,
        t_star: best.t_star,
        lattice_size,
        coordinates: s.into_iter().zip(best.coords).collect(),
    })
}

fn next_subset(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut p = k;
    while p > 0 {
        p -= 1;
        if idx[p] < n - k + p {
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Coordinates of every point of `s` in `basis`, or `None` if `basis` is not
/// a lattice basis of the points.
fn coordinates(basis: &[Vec<i64>], s: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let l = basis.len();
    let r = basis[0].len();
    // pick l coordinates on which the basis is nonsingular
    let mut rows: Vec<usize> = (0..l).collect();
    let (minor, det) = loop {
        let m: Vec<Vec<i128>> = rows
            .iter()
            .map(|&i| basis.iter().map(|b| b[i] as i128).collect())
            .collect();
        let d = linalg::det_i128(&m)?;
        if d != 0 {
            break (m, d);
        }
        if !next_subset(&mut rows, r) {
            return None;
        }
    };
    let adj = linalg::adjugate_i128(&minor)?;
    let mut out = Vec::with_capacity(s.len());
    for p in s {
        let mut c = vec![0i64; l];
        for (j, cj) in c.iter_mut().enumerate() {
            let num: i128 = rows
                .iter()
                .enumerate()
                .map(|(k, &i)| adj[j][k] * p[i] as i128)
                .sum();
            if num % det != 0 {
                return None;
            }
            *cj = i64::try_from(num / det).ok()?;
        }
        // the remaining coordinates must agree as well
        for i in 0..r {
            let val: i128 = (0..l).map(|j| c[j] as i128 * basis[j][i] as i128).sum();
            if val != p[i] as i128 {
                return None;
            }
        }
        out.push(c);
    }
    Some(out)
}

fn corners_inside(v: &SymmetricPolytope, basis: &[Vec<i64>], m: &[i64]) -> bool {
    let l = basis.len();
    let r = basis[0].len();
    (0u32..(1 << l)).all(|signs| {
        let mut x = vec![0i64; r];
        for j in 0..l {
            let s = if signs >> j & 1 == 1 { -m[j] } else { m[j] };
            for (xi, bi) in x.iter_mut().zip(&basis[j]) {
                *xi += s * bi;
            }
        }
        v.contains_int(&x)
    })
}

fn effective(m: i64) -> Rational {
    if m == 0 {
        rational::ratio(1, 2)
    } else {
        rational::int(m)
    }
}

fn score(v: &SymmetricPolytope, basis: &[Vec<i64>], s: &[Vec<i64>]) -> Option<Candidate> {
    let coords = coordinates(basis, s)?;
    let l = basis.len();
    let need: Vec<i64> = (0..l)
        .map(|j| coords.iter().map(|c| c[j].abs()).max().unwrap_or(0))
        .collect();
    let mut m = vec![0i64; l];
    let mut frozen = vec![false; l];
    loop {
        // grow the dimension whose coverage ratio is currently worst
        let pick = (0..l)
            .filter(|&j| !frozen[j] && m[j] < need[j])
            .max_by(|&a, &b| {
                let ra = Rational::from_integer(BigInt::from(need[a])) / effective(m[a]);
                let rb = Rational::from_integer(BigInt::from(need[b])) / effective(m[b]);
                ra.cmp(&rb).then(b.cmp(&a))
            });
        let Some(j) = pick else { break };
        m[j] += 1;
        if !corners_inside(v, basis, &m) {
            m[j] -= 1;
            frozen[j] = true;
        }
    }
    let dims: Vec<Rational> = m.iter().map(|x| effective(*x)).collect();
    let mut t_star = Rational::one();
    for j in 0..l {
        let t = Rational::from_integer(BigInt::from(need[j])) / &dims[j];
        if t > t_star {
            t_star = t;
        }
    }
    Some(Candidate {
        basis: basis.to_vec(),
        dims,
        t_star,
        coords,
    })
}

fn certify(
    v: &SymmetricPolytope,
    gap: &Gap,
    best: &Candidate,
    s: &[Vec<i64>],
    cap: usize,
) -> Result<(), GapError> {
    let r = v.rank();
    let fail = |why: &str| GapError::SandwichNotFound(format!("certification failed: {why}"));
    let lattice: HashSet<Point> = s
        .iter()
        .map(|p| p.iter().map(|x| rational::int(*x)).collect())
        .collect();
    // inner inclusion
    for p in gap.image(cap)? {
        if !lattice.contains(&p) {
            return Err(fail("image point outside the body"));
        }
    }
    // outer inclusion by explicit coefficient witnesses
    let outer = gap.dilate(&best.t_star)?;
    let bounds = outer.box_bounds();
    for (p, c) in s.iter().zip(&best.coords) {
        if c.iter().zip(&bounds).any(|(cj, b)| cj.abs() > *b) {
            return Err(fail("coefficient outside the dilated box"));
        }
        let q: Point = p.iter().map(|x| rational::int(*x)).collect();
        if outer.point(c) != q {
            return Err(fail("coefficient witness does not reproduce the point"));
        }
    }
    // generators in rV
    let rank_q = rational::int(r as i64);
    for g in gap.generators() {
        if v.gauge(g) > rank_q {
            return Err(fail("generator outside rV"));
        }
    }
    if gap.rank() == 0 && s.iter().any(|p| p.iter().any(|x| !x.is_zero())) {
        return Err(fail("rank-0 GAP for a nontrivial lattice"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap::DEFAULT_ENUM_CAP;
    use crate::rational::int;
    use std::collections::BTreeSet;

    fn v(xs: &[i64]) -> Point {
        xs.iter().map(|x| int(*x)).collect()
    }

    fn check_both_inclusions(body: &SymmetricPolytope, sw: &Sandwich) {
        let lattice: BTreeSet<Point> = body
            .lattice_points(DEFAULT_ENUM_CAP)
            .unwrap()
            .iter()
            .map(|p| v(p))
            .collect();
        let inner = sw.gap.image(DEFAULT_ENUM_CAP).unwrap();
        assert!(inner.is_subset(&lattice));
        let outer = sw.gap.dilate(&sw.t_star).unwrap().image(DEFAULT_ENUM_CAP).unwrap();
        assert!(lattice.is_subset(&outer));
    }

    #[test]
    fn box_is_its_own_gap() {
        let body = SymmetricPolytope::cube(&[int(3), int(3)]).unwrap();
        let sw = mahler_sandwich(&body, &int(16), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sw.t_star, int(1));
        assert_eq!(sw.gap.generators(), &[v(&[1, 0]), v(&[0, 1])]);
        assert_eq!(sw.gap.dims(), &[int(3), int(3)]);
        check_both_inclusions(&body, &sw);
    }

    #[test]
    fn skew_body() {
        let body = SymmetricPolytope::new(2, vec![(v(&[1, 0]), int(4)), (v(&[1, -2]), int(1))]).unwrap();
        let sw = mahler_sandwich(&body, &int(16), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sw.gap.rank(), 2);
        assert!(sw.t_star <= int(3));
        check_both_inclusions(&body, &sw);
    }

    #[test]
    fn origin_only() {
        let body = SymmetricPolytope::cube(&[rational::ratio(1, 2), rational::ratio(2, 3)]).unwrap();
        let sw = mahler_sandwich(&body, &int(16), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sw.gap.rank(), 0);
        assert_eq!(sw.lattice_size, 1);
    }

    #[test]
    fn thin_body_spans_a_line() {
        // only multiples of (1, 1) are lattice points
        let body = SymmetricPolytope::new(
            2,
            vec![(v(&[1, -1]), rational::ratio(1, 2)), (v(&[1, 1]), int(6))],
        )
        .unwrap();
        let sw = mahler_sandwich(&body, &int(16), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sw.gap.rank(), 1);
        check_both_inclusions(&body, &sw);
    }

    #[test]
    fn rank_three_cross_polytope() {
        let mut cons = Vec::new();
        for s1 in [1, -1] {
            for s2 in [1, -1] {
                cons.push((v(&[1, s1, s2]), int(2)));
            }
        }
        let body = SymmetricPolytope::new(3, cons).unwrap();
        let sw = mahler_sandwich(&body, &int(16), DEFAULT_ENUM_CAP).unwrap();
        check_both_inclusions(&body, &sw);
    }
}
