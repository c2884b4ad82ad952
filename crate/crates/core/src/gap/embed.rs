use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{Gap, GapError};
use crate::rational::{self, Rational};

/// A `t`-proper GAP `Q` with `Image(P) ⊆ Image(Q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub gap: Gap,
    #[serde(with = "rational::serde_q")]
    pub t: Rational,
    /// `size(Q) / size(P)`.
    pub size_ratio: f64,
    /// `(2t)^r r^{6r²}` for `r = rank(P)`, the size growth allowed in theory.
    pub size_bound: f64,
    /// True when `P` itself had to be replaced.
    pub collapsed: bool,
}

/// Embeds a one-dimensional GAP into a `t`-proper one.
///
/// If `P` is already `t`-proper it is returned unchanged. Otherwise all
/// generators that contribute to the image are written as integer multiples
/// `p_j γ` of their rational gcd `γ`, and `P` is replaced by the rank-1 GAP
/// `(Σ ⌊L_j⌋|p_j|, γ)`, which is proper at every dilation. Both the inclusion
/// and the properness are checked before returning.
pub fn embed_proper(p: &Gap, t: &Rational, cap: usize) -> Result<Embedding, GapError> {
    if p.dim() != 1 {
        return Err(GapError::NotOneDimensional(p.dim()));
    }
    if *t < Rational::from_integer(BigInt::from(1)) {
        return Err(GapError::InvalidDilation);
    }
    let size_p = p.size(cap)?;
    let r = p.rank() as f64;
    let size_bound = (2.0 * rational::to_f64(t)).powf(r) * r.powf(6.0 * r * r);

    let already = match p.is_t_proper(t, cap) {
        Ok(b) => b,
        Err(GapError::EnumerationCapExceeded { .. }) => false,
        Err(e) => return Err(e),
    };
    if already {
        return Ok(Embedding {
            gap: p.clone(),
            t: t.clone(),
            size_ratio: 1.0,
            size_bound,
            collapsed: false,
        });
    }

    let bounds = p.box_bounds();
    let active: Vec<(i64, Rational)> = bounds
        .iter()
        .zip(p.generators())
        .filter(|(b, g)| **b > 0 && !g[0].is_zero())
        .map(|(b, g)| (*b, g[0].clone()))
        .collect();
    let q = if active.is_empty() {
        Gap::zero(1)
    } else {
        let den = rational::common_denominator(active.iter().map(|(_, g)| g));
        let den_q = Rational::from_integer(den.clone());
        let nums: Vec<BigInt> = active.iter().map(|(_, g)| (g * &den_q).to_integer()).collect();
        let gcd = nums.iter().fold(BigInt::zero(), |acc, n| acc.gcd(n));
        let gamma = Rational::new(gcd.clone(), den);
        let len = active
            .iter()
            .zip(&nums)
            .fold(BigInt::zero(), |acc, ((b, _), n)| acc + BigInt::from(*b) * (n / &gcd).abs());
        Gap::scalar(vec![Rational::from_integer(len)], vec![gamma])?
    };

    certify(p, &q, t, cap)?;
    let size_q = q.vol().to_f64().unwrap_or(f64::INFINITY);
    Ok(Embedding {
        gap: q,
        t: t.clone(),
        size_ratio: size_q / size_p as f64,
        size_bound,
        collapsed: true,
    })
}

fn certify(p: &Gap, q: &Gap, t: &Rational, cap: usize) -> Result<(), GapError> {
    let fail = |why: &str| GapError::EmbeddingNotFound(format!("certification failed: {why}"));
    // inclusion: every image point is an integer multiple of the generator
    // within the box of Q
    let img = p.scalar_image(cap)?;
    if q.rank() == 0 {
        if img.iter().any(|x| !x.is_zero()) {
            return Err(fail("nonzero image point for a rank-0 embedding"));
        }
        return Ok(());
    }
    let gamma = &q.generators()[0][0];
    let len = q.dims()[0].floor();
    for x in &img {
        let k = x / gamma;
        if !k.is_integer() || k.abs() > len {
            return Err(fail("image point outside the embedding"));
        }
    }
    // a single nonzero generator is injective on any box; enumerate when cheap
    if gamma.is_zero() {
        return Err(fail("zero generator"));
    }
    match q.is_t_proper(t, cap) {
        Ok(true) | Err(GapError::EnumerationCapExceeded { .. }) => Ok(()),
        Ok(false) => Err(fail("embedding is not t-proper")),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap::DEFAULT_ENUM_CAP;
    use crate::rational::{int, ratio};

    #[test]
    fn proper_input_is_returned() {
        let p = Gap::scalar(vec![int(1), int(1)], vec![int(1), int(3)]).unwrap();
        let e = embed_proper(&p, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(e.gap, p);
        assert!(!e.collapsed);
    }

    #[test]
    fn colliding_pair_collapses_to_unit_progression() {
        let p = Gap::scalar(vec![int(1), int(1)], vec![int(2), int(3)]).unwrap();
        assert!(p.is_proper(DEFAULT_ENUM_CAP).unwrap());
        let e = embed_proper(&p, &int(2), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(e.gap, Gap::scalar(vec![int(5)], vec![int(1)]).unwrap());
        assert!(e.gap.is_t_proper(&int(2), DEFAULT_ENUM_CAP).unwrap());
        let img_p = p.image(DEFAULT_ENUM_CAP).unwrap();
        assert!(img_p.is_subset(&e.gap.image(DEFAULT_ENUM_CAP).unwrap()));
    }

    #[test]
    fn rank_one_is_identity() {
        let p = Gap::scalar(vec![ratio(7, 2)], vec![ratio(2, 3)]).unwrap();
        for t in [int(1), int(5), int(40)] {
            assert_eq!(embed_proper(&p, &t, DEFAULT_ENUM_CAP).unwrap().gap, p);
        }
    }

    #[test]
    fn zero_generator_collapses_to_rank_zero() {
        let p = Gap::scalar(vec![int(2)], vec![int(0)]).unwrap();
        let e = embed_proper(&p, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(e.gap.rank(), 0);
    }

    #[test]
    fn rational_generators_use_rational_gcd() {
        let p = Gap::scalar(vec![int(2), int(2)], vec![ratio(1, 2), ratio(1, 3)]).unwrap();
        let e = embed_proper(&p, &int(3), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(e.gap.generators()[0][0], ratio(1, 6));
        assert_eq!(e.gap.dims()[0], int(10));
    }
}
