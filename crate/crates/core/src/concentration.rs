//! Concentration functions `Q(F, τ) = sup_x F(x + τB)` where `B` is the
//! closed ball of radius 1/2, so that windows have diameter `τ`.
//!
//! Exact evaluation is provided for `τ = 0` in any dimension and for `τ ≥ 0`
//! on the line. Multivariate `τ > 0` is Monte Carlo only.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    self, compound_poisson_series, sample_h_lambda, weighted_sum_law, CompoundPoissonSpec,
    DiscreteDistribution, DistributionError, WeightVector,
};
use crate::quadrature::{self, QuadratureFailure};
use crate::rational::{self, Point, Rational};

/// Absolute tolerance used for every Esseen integral.
pub const QUADRATURE_TOL: f64 = 1e-9;
const QUADRATURE_BUDGET: usize = 2_000_000;
/// Minimum sample count accepted by [`conc_ball_mc`].
pub const MIN_MC_SAMPLES: usize = 1000;
const BOOTSTRAP_ROUNDS: usize = 64;
const CI_Z: f64 = 3.0;
const MC_CENTERS: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConcentrationError {
    #[error("exact evaluation needs a one-dimensional law, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("window width must be nonnegative")]
    NegativeTau,
    #[error("Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// A value of `Q(F, τ)` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConcentrationResult {
    Exact {
        #[serde(with = "rational::serde_q")]
        value: Rational,
        #[serde(with = "rational::serde_q::vec")]
        witness: Point,
    },
    UpperBound {
        value: f64,
    },
    MonteCarlo {
        value: f64,
        witness: Vec<f64>,
        ci_halfwidth: f64,
    },
}

impl ConcentrationResult {
    pub fn value_f64(&self) -> f64 {
        match self {
            Self::Exact { value, .. } => rational::to_f64(value),
            Self::UpperBound { value } | Self::MonteCarlo { value, .. } => *value,
        }
    }

    pub fn exact_value(&self) -> Option<&Rational> {
        match self {
            Self::Exact { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// `Q(F, 0)`: the largest atom. The witness is the lexicographically smallest
/// atom attaining it.
pub fn conc_zero(f: &DiscreteDistribution) -> ConcentrationResult {
    let mut best: Option<&(Point, Rational)> = None;
    for atom in f.atoms() {
        if best.is_none_or(|b| atom.1 > b.1) {
            best = Some(atom);
        }
    }
    let (witness, value) = best.expect("laws are nonempty").clone();
    ConcentrationResult::Exact { value, witness }
}

/// Exact `Q(F, τ)` on the line by a sliding window over the sorted atoms.
///
/// Every optimal window can be shifted left until its right end hits an atom,
/// so it suffices to scan windows `[x_j − τ, x_j]`. Among maximal windows the
/// smallest center is returned.
pub fn conc_interval(
    f: &DiscreteDistribution,
    tau: &Rational,
) -> Result<ConcentrationResult, ConcentrationError> {
    if f.dim() != 1 {
        return Err(ConcentrationError::NotOneDimensional(f.dim()));
    }
    if *tau < Rational::zero() {
        return Err(ConcentrationError::NegativeTau);
    }
    let atoms = f.atoms();
    let mut lo = 0;
    let mut acc = Rational::zero();
    let mut best = Rational::zero();
    let mut best_j = 0;
    for j in 0..atoms.len() {
        acc += &atoms[j].1;
        while &atoms[j].0[0] - &atoms[lo].0[0] > *tau {
            acc -= &atoms[lo].1;
            lo += 1;
        }
        if acc > best {
            best = acc.clone();
            best_j = j;
        }
    }
    let center = &atoms[best_j].0[0] - tau / Rational::from_integer(BigInt::from(2));
    Ok(ConcentrationResult::Exact {
        value: best,
        witness: vec![center],
    })
}

/// `Q(F, τ)` for a law supplied through samples: `sampler(count, seed)` must
/// return `count` points of dimension `d`.
///
/// The supremum is taken over windows centred near sample points, so the
/// estimate is biased low by the restricted centre set and high by the
/// finite-sample maximum. The half-width is `3` bootstrap standard errors of
/// the mass at the chosen centre.
pub fn conc_ball_mc(
    sampler: impl Fn(usize, u64) -> Vec<Vec<f64>>,
    d: usize,
    tau: f64,
    count: usize,
    seed: u64,
) -> Result<ConcentrationResult, ConcentrationError> {
    if count < MIN_MC_SAMPLES {
        return Err(ConcentrationError::TooFewSamples(count));
    }
    if tau < 0.0 {
        return Err(ConcentrationError::NegativeTau);
    }
    let samples = sampler(count, seed);
    debug_assert!(samples.iter().all(|s| s.len() == d));
    let (center, inside) = if d == 1 {
        best_interval(&samples, tau)
    } else {
        best_ball(&samples, tau)
    };
    let hits = inside.iter().filter(|b| **b).count();
    let value = hits as f64 / count as f64;
    let ci_halfwidth = bootstrap_halfwidth(&inside, seed);
    Ok(ConcentrationResult::MonteCarlo {
        value,
        witness: center,
        ci_halfwidth,
    })
}

fn slack(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

fn best_interval(samples: &[Vec<f64>], tau: f64) -> (Vec<f64>, Vec<bool>) {
    let mut xs: Vec<f64> = samples.iter().map(|s| s[0]).collect();
    xs.sort_by(f64::total_cmp);
    let mut best = (0usize, xs[0]);
    let mut hi = 0;
    for lo in 0..xs.len() {
        if hi < lo {
            hi = lo;
        }
        let limit = xs[lo] + tau;
        while hi + 1 < xs.len() && xs[hi + 1] <= limit + slack(limit) {
            hi += 1;
        }
        if hi + 1 - lo > best.0 {
            best = (hi + 1 - lo, xs[lo]);
        }
    }
    let left = best.1;
    let right = left + tau;
    let inside = samples
        .iter()
        .map(|s| s[0] >= left - slack(left) && s[0] <= right + slack(right))
        .collect();
    (vec![left + tau / 2.0], inside)
}

fn best_ball(samples: &[Vec<f64>], tau: f64) -> (Vec<f64>, Vec<bool>) {
    let mut uniq: std::collections::HashMap<Vec<u64>, (usize, usize)> = Default::default();
    for (i, s) in samples.iter().enumerate() {
        let key: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
        uniq.entry(key).or_insert((0, i)).0 += 1;
    }
    let mut centers: Vec<(usize, usize)> = uniq.into_values().collect();
    centers.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    centers.truncate(MC_CENTERS);
    let r2 = (tau / 2.0) * (tau / 2.0);
    let within = |c: &[f64], s: &[f64]| {
        let d2: f64 = c.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 <= r2 + slack(r2)
    };
    let mut best = (0usize, centers[0].1);
    for &(_, idx) in &centers {
        let c = &samples[idx];
        let hits = samples.iter().filter(|s| within(c, s)).count();
        if hits > best.0 {
            best = (hits, idx);
        }
    }
    let c = samples[best.1].clone();
    let inside = samples.iter().map(|s| within(&c, s)).collect();
    (c, inside)
}

fn bootstrap_halfwidth(inside: &[bool], seed: u64) -> f64 {
    let n = inside.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB007_5742_u64);
    let mut stats = Vec::with_capacity(BOOTSTRAP_ROUNDS);
    for _ in 0..BOOTSTRAP_ROUNDS {
        let mut hits = 0usize;
        for _ in 0..n {
            if inside[rng.gen_range(0..n)] {
                hits += 1;
            }
        }
        stats.push(hits as f64 / n as f64);
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
    CI_Z * var.sqrt()
}

/// Both sides of the regularity inequality
/// `Q(F, μ) ≤ (1 + ⌊μ/λ⌋)^d Q(F, λ)`, evaluated exactly.
///
/// Uses the sliding window on the line. For `μ = λ = 0` any dimension is
/// accepted and `0/0` is read as `1`.
pub fn regularity_factor(
    f: &DiscreteDistribution,
    mu: &Rational,
    lambda: &Rational,
) -> Result<(Rational, Rational), ConcentrationError> {
    if mu.is_zero() && lambda.is_zero() {
        let q = conc_zero(f).exact_value().cloned().expect("exact");
        let factor = num_traits::pow(Rational::from_integer(BigInt::from(2)), f.dim());
        return Ok((q.clone(), factor * q));
    }
    if *mu < Rational::zero() || *lambda <= Rational::zero() {
        return Err(ConcentrationError::NegativeTau);
    }
    let lhs = conc_interval(f, mu)?.exact_value().cloned().expect("exact");
    let q_lambda = conc_interval(f, lambda)?.exact_value().cloned().expect("exact");
    let factor = Rational::one() + (mu / lambda).floor();
    Ok((lhs, factor * q_lambda))
}

/// Modulus of the characteristic function of a one-dimensional law.
pub fn char_fn_modulus(f: &DiscreteDistribution, t: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (v, p) in f.atoms() {
        let x = rational::to_f64(&v[0]) * t;
        let w = rational::to_f64(p);
        re += w * x.cos();
        im += w * x.sin();
    }
    re.hypot(im)
}

/// `constant · τ · ∫_{|t| ≤ 1/τ} |f(t)| dt`.
pub fn esseen_upper(
    char_fn: impl Fn(f64) -> f64,
    tau: f64,
    constant: f64,
) -> Result<f64, ConcentrationError> {
    if tau <= 0.0 {
        return Err(ConcentrationError::NegativeTau);
    }
    let half = 1.0 / tau;
    let integral = quadrature::integrate(
        |t| char_fn(t).abs(),
        -half,
        half,
        QUADRATURE_TOL,
        QUADRATURE_BUDGET,
    )?;
    Ok(constant * tau * integral)
}

/// Monte Carlo settings shared by the chain comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

/// Outcome of comparing `Q(F_a, τ)` with `Q(H^{p(τ/κ)}, κ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPair {
    #[serde(with = "rational::serde_q")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_q")]
    pub p_val: Rational,
    pub rhs: ConcentrationResult,
    pub rhs_esseen: Option<f64>,
    pub ratio: f64,
}

/// Exact `Q(F_a, τ)` against the compound-Poisson side of the reduction
/// chain, estimated by Monte Carlo with an Esseen cross-check.
pub fn lemma1_pair(
    f: &DiscreteDistribution,
    a: &WeightVector,
    tau: &Rational,
    kappa: &Rational,
    mc: McSettings,
    c_esseen: f64,
    atom_cap: usize,
) -> Result<ChainPair, ConcentrationError> {
    if a.dim() != 1 {
        return Err(ConcentrationError::NotOneDimensional(a.dim()));
    }
    let fa = weighted_sum_law(f, a, atom_cap)?;
    let lhs = conc_interval(&fa, tau)?
        .exact_value()
        .cloned()
        .expect("exact");
    let p_val = distributions::p_of(f, &(tau / kappa));
    if p_val.is_zero() {
        return Ok(ChainPair {
            ratio: rational::to_f64(&lhs),
            lhs,
            p_val,
            rhs: ConcentrationResult::Exact {
                value: Rational::one(),
                witness: vec![Rational::zero()],
            },
            rhs_esseen: Some(1.0),
        });
    }
    let lambda = rational::to_f64(&p_val);
    let spec = CompoundPoissonSpec::new(a.clone(), lambda)?;
    let k = rational::to_f64(kappa);
    let rhs = conc_ball_mc(
        |count, seed| sample_h_lambda(&spec, count, seed),
        1,
        k,
        mc.samples,
        mc.seed,
    )?;
    let rhs_esseen = esseen_upper(|t| spec.char_fn(&[t]), k, c_esseen).ok();
    let ratio = rational::to_f64(&lhs) / rhs.value_f64();
    Ok(ChainPair {
        lhs,
        p_val,
        rhs,
        rhs_esseen,
        ratio,
    })
}

/// The `τ = 0` limit: `Q(F_a, 0)` against `H^{p(0)}{0}` from the truncated
/// Poisson series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassPair {
    #[serde(with = "rational::serde_q")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_q")]
    pub p0: Rational,
    pub rhs: f64,
    pub truncation_error: f64,
    pub ratio: f64,
}

pub fn lemma2_pair(
    f: &DiscreteDistribution,
    a: &WeightVector,
    atom_cap: usize,
) -> Result<PointMassPair, ConcentrationError> {
    let fa = weighted_sum_law(f, a, atom_cap)?;
    let lhs = conc_zero(&fa).exact_value().cloned().expect("exact");
    let p0 = distributions::p_of(f, &Rational::zero());
    let law = compound_poisson_series(a, rational::to_f64(&p0), 1e-12, atom_cap)?;
    let rhs = law.mass_at_zero();
    Ok(PointMassPair {
        ratio: rational::to_f64(&lhs) / rhs,
        lhs,
        p0,
        rhs,
        truncation_error: law.truncated_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, Strategy};

    fn law1(pairs: &[(Rational, Rational)]) -> DiscreteDistribution {
        DiscreteDistribution::new(1, pairs.iter().map(|(v, p)| (vec![v.clone()], p.clone())).collect())
            .unwrap()
    }

    /// Independent oracle: every window whose left end is an atom or an atom
    /// shifted by `−τ`, masses summed directly.
    fn brute_force(f: &DiscreteDistribution, tau: &Rational) -> Rational {
        let xs: Vec<Rational> = f.atoms().iter().map(|(v, _)| v[0].clone()).collect();
        let mut lefts = xs.clone();
        lefts.extend(xs.iter().map(|x| x - tau));
        lefts
            .iter()
            .map(|l| {
                f.atoms()
                    .iter()
                    .filter(|(v, _)| v[0] >= *l && v[0] <= l + tau)
                    .fold(Rational::zero(), |acc, (_, p)| acc + p)
            })
            .max()
            .unwrap()
    }

    fn exact(r: ConcentrationResult) -> (Rational, Point) {
        match r {
            ConcentrationResult::Exact { value, witness } => (value, witness),
            other => panic!("expected exact, got {other:?}"),
        }
    }

    fn window_mass(f: &DiscreteDistribution, center: &Rational, tau: &Rational) -> Rational {
        let half = tau / int(2);
        f.atoms()
            .iter()
            .filter(|(v, _)| (&v[0] - center).abs() <= half)
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    use num_traits::Signed;

    #[test]
    fn conc_zero_examples() {
        let fa = weighted_sum_law(
            &DiscreteDistribution::rademacher(),
            &WeightVector::ones(4),
            1 << 20,
        )
        .unwrap();
        assert_eq!(exact(conc_zero(&fa)).0, ratio(6, 16));
        let c = vec![ratio(3, 7)];
        assert_eq!(
            exact(conc_zero(&DiscreteDistribution::point_mass(c.clone()))),
            (int(1), c)
        );
        let u = DiscreteDistribution::uniform(&(0..10).map(int).collect::<Vec<_>>()).unwrap();
        assert_eq!(exact(conc_zero(&u)), (ratio(1, 10), vec![int(0)]));
    }

    #[test]
    fn conc_interval_examples() {
        let f = law1(&[
            (int(0), ratio(1, 2)),
            (ratio(2, 5), ratio(1, 5)),
            (int(1), ratio(3, 10)),
        ]);
        let (v, w) = exact(conc_interval(&f, &ratio(1, 2)).unwrap());
        assert_eq!(v, ratio(7, 10));
        assert_eq!(window_mass(&f, &w[0], &ratio(1, 2)), v);
        assert_eq!(exact(conc_interval(&f, &int(1)).unwrap()).0, int(1));
        assert_eq!(
            exact(conc_interval(&f, &int(0)).unwrap()).0,
            exact(conc_zero(&f)).0
        );
    }

    #[test]
    fn witness_is_smallest_center() {
        let f = law1(&[(int(0), ratio(1, 2)), (int(5), ratio(1, 2))]);
        let (_, w) = exact(conc_interval(&f, &int(1)).unwrap());
        assert_eq!(w, vec![ratio(-1, 2)]);
    }

    #[test]
    fn binomial_point_masses() {
        let f = DiscreteDistribution::rademacher();
        for n in 2..=20usize {
            let fa = weighted_sum_law(&f, &WeightVector::ones(n), 1 << 20).unwrap();
            let k = n / 2;
            let binom = (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1));
            let expected = Rational::new(binom, BigInt::one() << n);
            assert_eq!(exact(conc_zero(&fa)).0, expected, "n = {n}");
        }
    }

    #[test]
    fn regularity_examples() {
        let u = DiscreteDistribution::uniform(&(0..4).map(int).collect::<Vec<_>>()).unwrap();
        let (l, r) = regularity_factor(&u, &int(2), &int(1)).unwrap();
        assert_eq!((l, r), (ratio(3, 4), ratio(3, 2)));
        let (l, r) = regularity_factor(&u, &ratio(1, 2), &int(1)).unwrap();
        assert!(l <= r);
        assert_eq!(r, ratio(1, 2));
        let (l, r) = regularity_factor(&u, &int(0), &int(0)).unwrap();
        assert_eq!((l, r), (ratio(1, 4), ratio(1, 2)));
    }

    #[test]
    fn mc_point_mass_and_determinism() {
        let point = |count: usize, _seed: u64| vec![vec![1.5]; count];
        let r = conc_ball_mc(point, 1, 0.0, 2000, 3).unwrap();
        assert_eq!(r.value_f64(), 1.0);
        if let ConcentrationResult::MonteCarlo { ci_halfwidth, .. } = r {
            assert_eq!(ci_halfwidth, 0.0);
        }
        let spec = CompoundPoissonSpec::new(WeightVector::ones(5), 1.0).unwrap();
        let run = || {
            conc_ball_mc(|c, s| sample_h_lambda(&spec, c, s), 1, 1.0, 5000, 11).unwrap()
        };
        assert_eq!(run(), run());
        let spec2 = CompoundPoissonSpec::new(
            WeightVector::new(2, vec![vec![int(1), int(0)], vec![int(0), int(1)]]).unwrap(),
            2.0,
        )
        .unwrap();
        let r = conc_ball_mc(|c, s| sample_h_lambda(&spec2, c, s), 2, 0.5, 5000, 1).unwrap();
        assert!(r.value_f64() > 0.0 && r.value_f64() <= 1.0);
        assert!(conc_ball_mc(point, 1, 0.0, 10, 0).is_err());
    }

    #[test]
    fn mc_tracks_exact_on_random_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let k = rng.gen_range(1..6);
            let mut vals: Vec<i64> = (0..k).map(|_| rng.gen_range(-6..7)).collect();
            vals.sort();
            vals.dedup();
            let w: Vec<i64> = vals.iter().map(|_| rng.gen_range(1..5)).collect();
            let tot: i64 = w.iter().sum();
            let f = law1(
                &vals
                    .iter()
                    .zip(&w)
                    .map(|(v, wi)| (int(*v), ratio(*wi, tot)))
                    .collect::<Vec<_>>(),
            );
            let tau = int(rng.gen_range(0..4));
            let q = rational::to_f64(&exact(conc_interval(&f, &tau).unwrap()).0);
            let cdf: Vec<(f64, f64)> = {
                let mut acc = 0.0;
                f.atoms()
                    .iter()
                    .map(|(v, p)| {
                        acc += rational::to_f64(p);
                        (rational::to_f64(&v[0]), acc)
                    })
                    .collect()
            };
            let sampler = |count: usize, seed: u64| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let u: f64 = r.gen();
                        vec![cdf.iter().find(|(_, c)| u < *c).unwrap_or(cdf.last().unwrap()).0]
                    })
                    .collect()
            };
            let est = conc_ball_mc(sampler, 1, rational::to_f64(&tau), 20_000, 5).unwrap();
            let hw = match est {
                ConcentrationResult::MonteCarlo { ci_halfwidth, .. } => ci_halfwidth,
                _ => unreachable!(),
            };
            // the max over windows only adds upward bias of a few standard errors
            assert!(
                (est.value_f64() - q).abs() <= hw + 0.02,
                "estimate {} vs exact {q}",
                est.value_f64()
            );
        }
    }

    #[test]
    fn esseen_examples() {
        let v = esseen_upper(|_| 1.0, 0.3, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let a = WeightVector::ones(1);
        let bounds: Vec<f64> = [4.0, 16.0, 64.0]
            .iter()
            .map(|&l| esseen_upper(|t| distributions::char_fn_h(&a, &[t], l), 1.0, 1.0).unwrap())
            .collect();
        for w in bounds.windows(2) {
            // quadrupling λ should halve the bound
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() / 2.0 < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn esseen_dominates_exact_on_random_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = rng.gen_range(1..8);
            let mut vals: Vec<i64> = (0..k).map(|_| rng.gen_range(-20..21)).collect();
            vals.sort();
            vals.dedup();
            let w: Vec<i64> = vals.iter().map(|_| rng.gen_range(1..6)).collect();
            let tot: i64 = w.iter().sum();
            let f = law1(
                &vals
                    .iter()
                    .zip(&w)
                    .map(|(v, wi)| (ratio(*v, 4), ratio(*wi, tot)))
                    .collect::<Vec<_>>(),
            );
            let tau = ratio(rng.gen_range(1..9), 4);
            let q = rational::to_f64(&exact(conc_interval(&f, &tau).unwrap()).0);
            let b = esseen_upper(|t| char_fn_modulus(&f, t), rational::to_f64(&tau), 1.0).unwrap();
            assert!(b >= q - 1e-9, "bound {b} below exact {q}");
        }
    }

    #[test]
    fn lemma1_trivial_when_p_vanishes() {
        let f = DiscreteDistribution::point_mass(vec![int(2)]);
        let pair = lemma1_pair(
            &f,
            &WeightVector::ones(3),
            &int(1),
            &int(1),
            McSettings { samples: 1000, seed: 0 },
            1.0,
            1 << 20,
        )
        .unwrap();
        assert_eq!(pair.rhs.value_f64(), 1.0);
        assert!(pair.lhs <= int(1));
    }

    #[test]
    fn lemma2_limit_matches_series() {
        let f = DiscreteDistribution::rademacher();
        let pair = lemma2_pair(&f, &WeightVector::ones(8), 1 << 20).unwrap();
        assert_eq!(pair.p0, ratio(1, 2));
        assert!(pair.truncation_error < 1e-12);
        assert!(pair.rhs > 0.0 && pair.rhs < 1.0);
    }

    fn arb_law() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::btree_map(-30i64..30, 1i64..10, 1..12).prop_map(|m| {
            let tot: i64 = m.values().sum();
            DiscreteDistribution::new(
                1,
                m.into_iter()
                    .map(|(v, w)| (vec![ratio(v, 3)], ratio(w, tot)))
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn sliding_window_equals_brute_force(f in arb_law(), t in 0i64..40) {
            let tau = ratio(t, 3);
            let (v, w) = exact(conc_interval(&f, &tau).unwrap());
            prop_assert_eq!(&v, &brute_force(&f, &tau));
            prop_assert_eq!(window_mass(&f, &w[0], &tau), v);
        }

        #[test]
        fn monotone_in_tau(f in arb_law(), t in 0i64..40, dt in 0i64..10) {
            let a = exact(conc_interval(&f, &ratio(t, 3)).unwrap()).0;
            let b = exact(conc_interval(&f, &ratio(t + dt, 3)).unwrap()).0;
            prop_assert!(a <= b);
        }

        #[test]
        fn regularity_holds(f in arb_law(), mu in 1i64..20, lam in 1i64..20) {
            let (l, r) = regularity_factor(&f, &ratio(mu, 4), &ratio(lam, 4)).unwrap();
            prop_assert!(l <= r);
        }
    }
}
