//! The functional `β_{r,m}(W, τ) = inf_K W{R \ [K]_τ}` over CGAPs `K` of rank
//! `r` with at most `m` lattice points, and the concentration bounds built on
//! it.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::concentration::{conc_ball_mc, ConcentrationError, ConcentrationResult, McSettings};
use crate::distributions::{
    compound_poisson_series, levy_measure_star, sample_h_lambda, AtomicMeasure,
    CompoundPoissonSpec, DistributionError,
};
use crate::gap::{self, Cgap, GapError, SymmetricPolytope};
use crate::rational::{self, Point, Rational};

/// Upper limit on the number of coverage intervals in the rank-1 sweep.
const SWEEP_BUDGET: usize = 20_000_000;
/// Heaviest atoms used to seed rank-2 generator candidates.
const RANK2_SEED_ATOMS: usize = 12;
/// Largest body size considered by the rank-2 search.
const RANK2_MAX_M: u64 = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArakError {
    #[error("rank {0} is not supported (ranks 0, 1 and 2 only)")]
    UnsupportedRank(usize),
    #[error("m must be at least 1")]
    InvalidM,
    #[error("tau must be nonnegative")]
    NegativeTau,
    #[error("β vanishes, so the bound is vacuous")]
    DegenerateBeta,
    #[error("invalid bound argument: {0}")]
    InvalidArgument(String),
    #[error("search budget exceeded: {0} coverage intervals")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

/// A value of `β_{r,m}(W, τ)` with the CGAP attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaResult {
    #[serde(with = "rational::serde_q")]
    value: Rational,
    witness: Cgap,
    exactness: Exactness,
    candidates_searched: usize,
}

impl BetaResult {
    /// Recomputes the uncovered mass of `witness` rather than trusting the
    /// search.
    pub fn new(
        w: &AtomicMeasure,
        tau: &Rational,
        witness: Cgap,
        exactness: Exactness,
        candidates_searched: usize,
    ) -> Result<Self, ArakError> {
        let value = uncovered_mass(w, tau, &witness)?;
        Ok(Self {
            value,
            witness,
            exactness,
            candidates_searched,
        })
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn witness(&self) -> &Cgap {
        &self.witness
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn candidates_searched(&self) -> usize {
        self.candidates_searched
    }
}

/// `W{R \ [K]_τ}`.
pub fn uncovered_mass(w: &AtomicMeasure, tau: &Rational, k: &Cgap) -> Result<Rational, ArakError> {
    let (img, _) = k.image(gap::DEFAULT_ENUM_CAP)?;
    Ok(w.mass_where(|x| !gap::neighborhood_contains(&img, tau, x)))
}

/// `⌊(m − 1)/2⌋`, the largest half-length of an interval with at most `m`
/// integer points.
pub fn max_half_length(m: u64) -> u64 {
    (m - 1) / 2
}

/// `β_{r,m}(W, τ)` for a one-dimensional atomic `W`.
///
/// Rank 0 and rank 1 are exact. For rank 1 the body is `[−L, L]` with the
/// largest admissible `L`, and atom `w` is covered by the point `νh` exactly
/// when `h` lies in `[(w − τ)/ν, (w + τ)/ν]`; the covered mass is piecewise
/// constant in `h` and is maximised at a left end of one of these intervals,
/// which a sweep visits in increasing order. Rank 2 is an upper bound from a
/// finite search that contains the rank-1 optimum.
pub fn beta(w: &AtomicMeasure, tau: &Rational, r: usize, m: u64) -> Result<BetaResult, ArakError> {
    if m == 0 {
        return Err(ArakError::InvalidM);
    }
    if tau.is_negative() {
        return Err(ArakError::NegativeTau);
    }
    if w.dim() != 1 {
        return Err(ArakError::Distribution(DistributionError::NotOneDimensional(
            w.dim(),
        )));
    }
    match r {
        0 => BetaResult::new(w, tau, Cgap::zero(), Exactness::Exact, 1),
        1 => beta_rank1(w, tau, m),
        2 => beta_rank2(w, tau, m),
        _ => Err(ArakError::UnsupportedRank(r)),
    }
}

fn beta_rank1(w: &AtomicMeasure, tau: &Rational, m: u64) -> Result<BetaResult, ArakError> {
    let l = max_half_length(m);
    if l == 0 {
        return BetaResult::new(w, tau, Cgap::zero(), Exactness::Exact, 1);
    }
    let atoms = w.one_dimensional()?;
    let needed = atoms.len().saturating_mul(2 * l as usize);
    if needed > SWEEP_BUDGET {
        return Err(ArakError::BudgetExceeded(needed));
    }

    // merged coverage intervals of each atom, clipped to h ≥ 0
    let mut events: Vec<(Rational, bool, usize)> = Vec::new();
    for (idx, (x, _)) in atoms.iter().enumerate() {
        if x.abs() <= *tau {
            continue; // covered by the origin for every h
        }
        let mut ivs: Vec<(Rational, Rational)> = Vec::new();
        for nu in 1..=l {
            let nu = Rational::from_integer(BigInt::from(nu));
            for y in [x.clone(), -x.clone()] {
                let lo = (&y - tau) / &nu;
                let hi = (&y + tau) / &nu;
                if hi.is_negative() {
                    continue;
                }
                let lo = if lo.is_negative() { Rational::zero() } else { lo };
                ivs.push((lo, hi));
            }
        }
        ivs.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::new();
        for (lo, hi) in ivs {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        for (lo, hi) in merged {
            events.push((lo, true, idx));
            events.push((hi, false, idx));
        }
    }
    // at equal positions openings come first so that closed intervals touch
    events.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let candidates = events.iter().filter(|e| e.1).count() + 1;

    let mut best_gain = Rational::zero();
    let mut best_h = Rational::zero();
    let mut gain = Rational::zero();
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0.clone();
        let mut j = i;
        let mut opened = false;
        while j < events.len() && events[j].0 == x && events[j].1 {
            gain += &atoms[events[j].2].1;
            opened = true;
            j += 1;
        }
        if opened && gain > best_gain {
            best_gain = gain.clone();
            best_h = x.clone();
        }
        while j < events.len() && events[j].0 == x && !events[j].1 {
            gain -= &atoms[events[j].2].1;
            j += 1;
        }
        i = j;
    }
    let witness = if best_h.is_zero() {
        Cgap::zero()
    } else {
        Cgap::interval(best_h, Rational::from_integer(BigInt::from(l)))?
    };
    BetaResult::new(w, tau, witness, Exactness::Exact, candidates)
}

/// Boxes `[−L₁, L₁] × [−L₂, L₂]` that are maximal subject to
/// `(2L₁+1)(2L₂+1) ≤ m`.
fn rank2_boxes(m: u64) -> Vec<(u64, u64)> {
    let m = m.min(RANK2_MAX_M);
    let mut out = Vec::new();
    for l1 in 0..=max_half_length(m) {
        let l2 = max_half_length(m / (2 * l1 + 1));
        out.push((l1, l2));
    }
    out
}

fn beta_rank2(w: &AtomicMeasure, tau: &Rational, m: u64) -> Result<BetaResult, ArakError> {
    let rank1 = beta_rank1(w, tau, m)?;
    let atoms = w.one_dimensional()?;

    // generator candidates w/ν from the heaviest atoms; independent of τ and m
    let mut heavy: Vec<&(Rational, Rational)> = atoms.iter().filter(|(x, _)| !x.is_zero()).collect();
    heavy.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.abs().cmp(&b.0.abs())));
    let mut gens: BTreeSet<Rational> = BTreeSet::new();
    for (x, _) in heavy.into_iter().take(RANK2_SEED_ATOMS) {
        for nu in 1..=2 {
            gens.insert(x.abs() / Rational::from_integer(BigInt::from(nu)));
        }
    }
    let gens: Vec<Rational> = gens.into_iter().collect();
    let xs: Vec<Point> = atoms.iter().map(|(x, _)| vec![x.clone()]).collect();

    let mut best = rank1.value.clone();
    let mut best_witness = rank1.witness.clone();
    let mut searched = rank1.candidates_searched;
    let boxes = rank2_boxes(m);
    for (i, h1) in gens.iter().enumerate() {
        for h2 in &gens[i + 1..] {
            for &(l1, l2) in &boxes {
                if l1 == 0 || l2 == 0 {
                    continue; // degenerate boxes are rank-1 bodies, already covered
                }
                searched += 1;
                let mut img: BTreeSet<Point> = BTreeSet::new();
                for n1 in -(l1 as i64)..=(l1 as i64) {
                    for n2 in -(l2 as i64)..=(l2 as i64) {
                        img.insert(vec![h1 * rational::int(n1) + h2 * rational::int(n2)]);
                    }
                }
                let uncovered = atoms
                    .iter()
                    .zip(&xs)
                    .filter(|(_, x)| !gap::neighborhood_contains(&img, tau, x))
                    .fold(Rational::zero(), |acc, ((_, p), _)| acc + p);
                if uncovered < best {
                    best = uncovered;
                    best_witness = Cgap::new(
                        vec![h1.clone(), h2.clone()],
                        SymmetricPolytope::cube(&[rational::int(l1 as i64), rational::int(l2 as i64)])?,
                    )?;
                }
            }
        }
    }
    BetaResult::new(w, tau, best_witness, Exactness::UpperBound, searched)
}

fn check_positive(name: &str, x: f64) -> Result<(), ArakError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ArakError::InvalidArgument(format!("{name} must be positive, got {x}")))
    }
}

/// `c₂^{r+1} (1/(m √(αβ)) + (r+1)^{5r/2} / (αβ)^{(r+1)/2})`.
pub fn arak_rhs(alpha: f64, beta_val: f64, r: usize, m: u64, c2: f64) -> Result<f64, ArakError> {
    check_positive("alpha", alpha)?;
    check_positive("c2", c2)?;
    if beta_val == 0.0 {
        return Err(ArakError::DegenerateBeta);
    }
    check_positive("beta", beta_val)?;
    Ok(bound_shape(alpha * beta_val, r, m, c2))
}

fn bound_shape(x: f64, r: usize, m: u64, c: f64) -> f64 {
    let r1 = (r + 1) as f64;
    c.powf(r1) * (1.0 / (m as f64 * x.sqrt()) + r1.powf(2.5 * r as f64) / x.powf(r1 / 2.0))
}

/// Arguments of the `F_a` bound with `β = β_{r,m}(M*, δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm7Args {
    pub kappa: f64,
    pub delta: f64,
    pub tau: f64,
    /// `p(τ/κ)` when `τ > 0`, `p(0)` when `τ = 0`.
    pub p_val: f64,
    pub r: usize,
    pub m: u64,
    pub beta_val: f64,
    pub c3: f64,
}

/// The right-hand side of the bound on `Q(F_a, τ)`; for `τ > 0` it carries
/// the factor `1 + ⌊κ/δ⌋`.
pub fn thm7_rhs(args: &Thm7Args) -> Result<f64, ArakError> {
    check_positive("c3", args.c3)?;
    check_positive("p", args.p_val)?;
    if args.beta_val == 0.0 {
        return Err(ArakError::DegenerateBeta);
    }
    check_positive("beta", args.beta_val)?;
    let base = bound_shape(args.p_val * args.beta_val, args.r, args.m, args.c3);
    if args.tau > 0.0 {
        check_positive("kappa", args.kappa)?;
        check_positive("delta", args.delta)?;
        Ok((1.0 + (args.kappa / args.delta).floor()) * base)
    } else if args.tau == 0.0 {
        Ok(base)
    } else {
        Err(ArakError::NegativeTau)
    }
}

/// Both sides of the Arak bound for `D = H^λ`, written as
/// `exp(α(Ŵ − 1))` with `α = λn/2` and `W = M*/(2n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: ConcentrationResult,
    pub rhs: f64,
    pub alpha: f64,
    pub beta: BetaResult,
    pub constants_used: BTreeMap<String, f64>,
    /// `rhs / lhs`, recorded even when below one.
    pub slack: f64,
    /// Set when `β = 0`, in which case `rhs = ∞`.
    pub vacuous: bool,
}

/// Upper limit on the support of the series used for the left side.
const SERIES_ATOMS: usize = 200_000;

pub fn check_thm2(
    spec: &CompoundPoissonSpec,
    tau: &Rational,
    r: usize,
    m: u64,
    c2: f64,
    mc: McSettings,
) -> Result<BoundReport, ArakError> {
    let a = spec.weight();
    if a.dim() != 1 {
        return Err(ArakError::Distribution(DistributionError::NotOneDimensional(
            a.dim(),
        )));
    }
    let n = a.len();
    let alpha = spec.lambda() * n as f64 / 2.0;
    check_positive("lambda", alpha)?;
    let w = levy_measure_star(a).scaled(&rational::ratio(1, 2 * n as i64));
    let beta_res = beta(&w, tau, r, m)?;

    let lhs = match compound_poisson_series(a, spec.lambda(), 1e-12, SERIES_ATOMS) {
        Ok(law) => ConcentrationResult::UpperBound {
            value: (law.window_max(tau) + law.truncated_mass).min(1.0),
        },
        Err(DistributionError::AtomCapExceeded { .. }) => conc_ball_mc(
            |count, seed| sample_h_lambda(spec, count, seed),
            1,
            rational::to_f64(tau),
            mc.samples,
            mc.seed,
        )?,
        Err(e) => return Err(e.into()),
    };

    let beta_f = rational::to_f64(beta_res.value());
    let (rhs, vacuous) = match arak_rhs(alpha, beta_f, r, m, c2) {
        Ok(v) => (v, false),
        Err(ArakError::DegenerateBeta) => (f64::INFINITY, true),
        Err(e) => return Err(e),
    };
    let slack = rhs / lhs.value_f64();
    Ok(BoundReport {
        lhs,
        rhs,
        alpha,
        beta: beta_res,
        constants_used: BTreeMap::from([("c2".to_string(), c2)]),
        slack,
        vacuous,
    })
}

/// `(lhs / X)^{1/(r+1)}` where `X` is the bound with unit constant; the
/// smallest constant that makes this instance pass.
pub fn implied_constant(lhs: f64, rhs_unit: f64, r: usize) -> f64 {
    (lhs / rhs_unit).powf(1.0 / (r + 1) as f64)
}

/// Largest `L` among `f64`-convertible rationals; used by reports.
pub fn to_u64(x: &Rational) -> Option<u64> {
    x.floor().to_integer().to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{levy_measure, WeightVector};
    use crate::rational::{int, ratio};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn measure(atoms: &[(Rational, i64)]) -> AtomicMeasure {
        AtomicMeasure::new(1, atoms.iter().map(|(x, c)| (vec![x.clone()], int(*c))).collect()).unwrap()
    }

    #[test]
    fn rank1_covers_unit_weights() {
        let w = levy_measure_star(&WeightVector::ones(6));
        let b = beta(&w, &int(0), 1, 3).unwrap();
        assert_eq!(*b.value(), int(0));
        assert_eq!(b.exactness(), Exactness::Exact);
        assert_eq!(b.witness().h(), &[int(1)]);
    }

    #[test]
    fn rank1_with_sqrt2_proxy_leaves_minority() {
        let g = ratio(99, 70);
        let mut entries = vec![int(1); 6];
        entries.extend(vec![g.clone(); 3]);
        let w = levy_measure_star(&WeightVector::scalar(&entries).unwrap());
        let b = beta(&w, &int(0), 1, 3).unwrap();
        assert_eq!(*b.value(), int(6));
        // brute force over the whole candidate set {w/ν}
        for h in [int(1), g.clone(), g / int(1)] {
            let k = Cgap::interval(h, int(1)).unwrap();
            assert!(uncovered_mass(&w, &int(0), &k).unwrap() >= *b.value());
        }
    }

    #[test]
    fn rank0_closed_form() {
        let w = measure(&[(int(-3), 1), (int(1), 2), (int(2), 5)]);
        assert_eq!(*beta(&w, &int(0), 0, 1).unwrap().value(), int(8));
        assert_eq!(*beta(&w, &int(1), 0, 1).unwrap().value(), int(6));
        assert_eq!(*beta(&w, &int(3), 0, 7).unwrap().value(), int(0));
    }

    #[test]
    fn rank_three_is_rejected() {
        let w = measure(&[(int(1), 1)]);
        assert_eq!(beta(&w, &int(0), 3, 5).unwrap_err(), ArakError::UnsupportedRank(3));
    }

    fn random_measure(rng: &mut ChaCha8Rng) -> AtomicMeasure {
        let k = rng.gen_range(1..8);
        let atoms: Vec<(Rational, i64)> = (0..k)
            .map(|_| (int(rng.gen_range(-30..31)), rng.gen_range(1..5)))
            .collect();
        measure(&atoms)
    }

    #[test]
    fn random_probes_never_beat_rank1_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let w = random_measure(&mut rng);
            let tau = ratio(rng.gen_range(0..4), 2);
            let m = rng.gen_range(1..12);
            let b = beta(&w, &tau, 1, m).unwrap();
            let l = rational::int(max_half_length(m) as i64);
            if l.is_zero() {
                continue;
            }
            for _ in 0..500 {
                let h = Rational::new(BigInt::from(rng.gen_range(1..4000)), BigInt::from(97));
                let k = Cgap::interval(h, l.clone()).unwrap();
                assert!(uncovered_mass(&w, &tau, &k).unwrap() >= *b.value());
            }
        }
    }

    #[test]
    fn beta_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let w = random_measure(&mut rng);
            let m = rng.gen_range(1..10);
            let t0 = ratio(rng.gen_range(0..3), 2);
            let t1 = &t0 + ratio(1, 2);
            for r in 0..=2 {
                let a = beta(&w, &t0, r, m).unwrap();
                let b = beta(&w, &t1, r, m).unwrap();
                assert!(b.value() <= a.value(), "tau monotone r={r}");
                let c = beta(&w, &t0, r, m + 2).unwrap();
                assert!(c.value() <= a.value(), "m monotone r={r}");
                if r < 2 {
                    let d = beta(&w, &t0, r + 1, m).unwrap();
                    assert!(d.value() <= a.value(), "r monotone r={r}");
                }
            }
        }
    }

    #[test]
    fn star_measure_dominates() {
        let a = WeightVector::scalar(&[int(1), int(3), int(-4), ratio(7, 2)]).unwrap();
        for r in 0..=2 {
            for m in [1, 3, 5] {
                let bm = beta(&levy_measure(&a), &ratio(1, 2), r, m).unwrap();
                let bs = beta(&levy_measure_star(&a), &ratio(1, 2), r, m).unwrap();
                assert!(bm.value() <= bs.value());
            }
        }
    }

    #[test]
    fn rank2_finds_two_generator_structure() {
        // atoms at ±1 and ±100: two generators with a 3×3 box cover everything
        let w = measure(&[(int(1), 1), (int(-1), 1), (int(100), 1), (int(-100), 1)]);
        let b1 = beta(&w, &int(0), 1, 9).unwrap();
        let b2 = beta(&w, &int(0), 2, 9).unwrap();
        assert!(*b1.value() > int(0));
        assert_eq!(*b2.value(), int(0));
        assert_eq!(b2.exactness(), Exactness::UpperBound);
    }

    #[test]
    fn rhs_formulas() {
        let v = arak_rhs(4.0, 1.0, 0, 1, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = arak_rhs(1.0, 1.0, 1, 2, 1.0).unwrap();
        assert!((v - (0.5 + 2f64.powf(2.5))).abs() < 1e-12);
        assert!(arak_rhs(1.0, 2.0, 1, 2, 1.0).unwrap() < v);
        assert!(arak_rhs(1.0, 1.0, 1, 3, 1.0).unwrap() < v);
        assert_eq!(arak_rhs(1.0, 0.0, 1, 2, 1.0), Err(ArakError::DegenerateBeta));

        let base = Thm7Args {
            kappa: 1.0,
            delta: 1.0,
            tau: 0.0,
            p_val: 1.0,
            r: 0,
            m: 1,
            beta_val: 4.0,
            c3: 1.0,
        };
        assert!((thm7_rhs(&base).unwrap() - 1.0).abs() < 1e-15);
        let pos = Thm7Args { tau: 1.0, ..base.clone() };
        assert!((thm7_rhs(&pos).unwrap() - 2.0).abs() < 1e-15);
        let more_p = Thm7Args { p_val: 2.0, ..base.clone() };
        assert!(thm7_rhs(&more_p).unwrap() <= thm7_rhs(&base).unwrap());
    }

    #[test]
    fn characteristic_function_increment_inequality() {
        // |Û(t+h) − Û(t)|² ≤ 2(1 − Re Û(h)) for random discrete U
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let k = rng.gen_range(1..6);
            let xs: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let tot: f64 = ws.iter().sum();
            let cf = |t: f64| {
                xs.iter().zip(&ws).fold((0.0, 0.0), |(re, im), (x, w)| {
                    (re + w / tot * (t * x).cos(), im + w / tot * (t * x).sin())
                })
            };
            let (t, h) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (a, b) = (cf(t + h), cf(t));
            let lhs = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            assert!(lhs <= 2.0 * (1.0 - cf(h).0) + 1e-12);
        }
    }

    #[test]
    fn thm2_vacuous_for_unit_weights() {
        let spec = CompoundPoissonSpec::new(WeightVector::ones(8), 1.0).unwrap();
        let rep = check_thm2(&spec, &int(0), 1, 3, 1.0, McSettings { samples: 2000, seed: 1 }).unwrap();
        assert!(rep.vacuous);
        assert!(rep.rhs.is_infinite());
        let rep = check_thm2(&spec, &int(0), 0, 1, 1.0, McSettings { samples: 2000, seed: 1 }).unwrap();
        assert!(!rep.vacuous);
        assert!(rep.slack > 0.0);
        assert_eq!(rep.alpha, 4.0);
    }

    #[test]
    fn thm2_lhs_decays_like_inverse_square_root() {
        // least-squares slope of log lhs against log n
        let ns = [16usize, 32, 64, 128];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let spec = CompoundPoissonSpec::new(WeightVector::ones(n), 1.0).unwrap();
                let rep = check_thm2(&spec, &ratio(1, 2), 0, 1, 1.0, McSettings { samples: 2000, seed: 1 }).unwrap();
                ((n as f64).ln(), rep.lhs.value_f64().ln())
            })
            .collect();
        let k = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = cov / var;
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
    }
}
