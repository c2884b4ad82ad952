//! Finitely supported laws, weight vectors, Lévy measures and the
//! compound-Poisson family `H^λ`.
//!
//! Discrete laws are exact: atoms are points of `Q^d` and masses are positive
//! rationals summing to one. Convolutions are carried out on an integer grid
//! (values scaled by the common denominator) so that atoms with equal values
//! merge exactly.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rational::{self, Point, Rational};

/// Default cap on the number of atoms kept by [`weighted_sum_law`].
pub const DEFAULT_ATOM_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistributionError {
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("point has dimension {found}, expected {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("atom masses must be positive")]
    NonPositiveMass,
    #[error("masses sum to {0}, expected 1")]
    MassNotOne(String),
    #[error("duplicate atom at {0}")]
    DuplicateAtom(String),
    #[error("a distribution needs at least one atom")]
    Empty,
    #[error("weight vector must have at least one entry")]
    EmptyWeight,
    #[error("weight vector must not be identically zero")]
    ZeroWeight,
    #[error("support exceeded the cap of {cap} atoms")]
    AtomCapExceeded { cap: usize },
    #[error("operation requires a one-dimensional law, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("integer grid overflow while convolving")]
    Overflow,
    #[error("lambda must be finite and nonnegative, got {0}")]
    InvalidLambda(String),
}

/// An exact finitely supported probability law on `Q^d`.
///
/// Atoms are kept sorted lexicographically by value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDistribution {
    dim: usize,
    atoms: Vec<(Point, Rational)>,
}

impl DiscreteDistribution {
    pub fn new(dim: usize, atoms: Vec<(Point, Rational)>) -> Result<Self, DistributionError> {
        if dim == 0 {
            return Err(DistributionError::ZeroDim);
        }
        if atoms.is_empty() {
            return Err(DistributionError::Empty);
        }
        let mut total = Rational::zero();
        for (v, p) in &atoms {
            if v.len() != dim {
                return Err(DistributionError::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if *p <= Rational::zero() {
                return Err(DistributionError::NonPositiveMass);
            }
            total += p;
        }
        if !total.is_one() {
            return Err(DistributionError::MassNotOne(rational::format(&total)));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DistributionError::DuplicateAtom(
                    rational::PointDisplay(&w[0].0).to_string(),
                ));
            }
        }
        Ok(Self { dim, atoms })
    }

    /// Builds a law from possibly repeated atoms, merging equal values.
    pub fn from_merged(
        dim: usize,
        atoms: impl IntoIterator<Item = (Point, Rational)>,
    ) -> Result<Self, DistributionError> {
        let mut map: BTreeMap<Point, Rational> = BTreeMap::new();
        for (v, p) in atoms {
            *map.entry(v).or_insert_with(Rational::zero) += p;
        }
        Self::new(dim, map.into_iter().collect())
    }

    pub fn point_mass(c: Point) -> Self {
        let dim = c.len().max(1);
        let c = if c.is_empty() { rational::zero_point(1) } else { c };
        Self {
            dim,
            atoms: vec![(c, Rational::one())],
        }
    }

    /// `±1` with mass `1/2` each.
    pub fn rademacher() -> Self {
        Self {
            dim: 1,
            atoms: vec![
                (vec![rational::int(-1)], rational::ratio(1, 2)),
                (vec![rational::int(1)], rational::ratio(1, 2)),
            ],
        }
    }

    /// Uniform law on distinct one-dimensional values.
    pub fn uniform(values: &[Rational]) -> Result<Self, DistributionError> {
        let n = values.len() as i64;
        if n == 0 {
            return Err(DistributionError::Empty);
        }
        let p = rational::ratio(1, n);
        Self::new(1, values.iter().map(|v| (vec![v.clone()], p.clone())).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Point, Rational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass_at(&self, v: &[Rational]) -> Rational {
        self.atoms
            .binary_search_by(|(x, _)| x.as_slice().cmp(v))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// True when the mass of `v` equals the mass of `-v` for every atom.
    pub fn is_symmetric(&self) -> bool {
        self.atoms
            .iter()
            .all(|(v, p)| self.mass_at(&rational::neg(v)) == *p)
    }

    /// Law of coordinate `j`.
    pub fn marginal(&self, j: usize) -> DiscreteDistribution {
        assert!(j < self.dim, "coordinate {j} out of range");
        Self::from_merged(
            1,
            self.atoms
                .iter()
                .map(|(v, p)| (vec![v[j].clone()], p.clone())),
        )
        .expect("marginal of a valid law is valid")
    }

    /// Largest max-norm among atoms.
    pub fn max_abs(&self) -> Rational {
        self.atoms
            .iter()
            .map(|(v, _)| rational::max_norm(v))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn one_dimensional_values(&self) -> Result<Vec<(Rational, Rational)>, DistributionError> {
        if self.dim != 1 {
            return Err(DistributionError::NotOneDimensional(self.dim));
        }
        Ok(self
            .atoms
            .iter()
            .map(|(v, p)| (v[0].clone(), p.clone()))
            .collect())
    }
}

/// The coefficient multiset `a = (a_1, …, a_n)` with `a_k ∈ Q^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    dim: usize,
    entries: Vec<Point>,
    norm_sq: Rational,
}

impl WeightVector {
    pub fn new(dim: usize, entries: Vec<Point>) -> Result<Self, DistributionError> {
        if dim == 0 {
            return Err(DistributionError::ZeroDim);
        }
        if entries.is_empty() {
            return Err(DistributionError::EmptyWeight);
        }
        for e in &entries {
            if e.len() != dim {
                return Err(DistributionError::DimMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
        }
        if entries.iter().all(|e| rational::is_zero_point(e)) {
            return Err(DistributionError::ZeroWeight);
        }
        let norm_sq = entries
            .iter()
            .fold(Rational::zero(), |acc, e| acc + rational::norm_sq(e));
        Ok(Self {
            dim,
            entries,
            norm_sq,
        })
    }

    /// One-dimensional weights.
    pub fn scalar(values: &[Rational]) -> Result<Self, DistributionError> {
        Self::new(1, values.iter().map(|v| vec![v.clone()]).collect())
    }

    pub fn ones(n: usize) -> Self {
        Self::scalar(&vec![Rational::one(); n]).expect("n >= 1")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Point] {
        &self.entries
    }

    /// `‖a‖² = Σ_k Σ_j a_{kj}²`, exact.
    pub fn norm_sq(&self) -> &Rational {
        &self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        rational::to_f64(&self.norm_sq).sqrt()
    }

    /// One-dimensional entries; panics unless `dim == 1`.
    pub fn scalars(&self) -> Vec<Rational> {
        assert_eq!(self.dim, 1, "scalars() needs a one-dimensional weight");
        self.entries.iter().map(|e| e[0].clone()).collect()
    }

    /// The coordinate projection `a^{(j)} = (a_{1j}, …, a_{nj})`.
    pub fn coordinate(&self, j: usize) -> Result<WeightVector, DistributionError> {
        assert!(j < self.dim, "coordinate {j} out of range");
        Self::new(1, self.entries.iter().map(|e| vec![e[j].clone()]).collect())
    }

    /// `λ a` for `λ != 0`.
    pub fn scaled(&self, lambda: &Rational) -> WeightVector {
        assert!(!lambda.is_zero(), "scaling by zero");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| rational::scale(e, lambda))
                .collect(),
            norm_sq: &self.norm_sq * lambda * lambda,
        }
    }

    /// Indices sorted so that `|a_1| ≥ … ≥ |a_n|` in max-norm, ties by index.
    pub fn order_by_decreasing_norm(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        let norms: Vec<Rational> = self.entries.iter().map(|e| rational::max_norm(e)).collect();
        idx.sort_by(|&i, &j| norms[j].cmp(&norms[i]).then(i.cmp(&j)));
        idx
    }
}

/// A finite nonnegative atomic measure; the total mass need not be one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<(Point, Rational)>,
    total: Rational,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<(Point, Rational)>) -> Result<Self, DistributionError> {
        if dim == 0 {
            return Err(DistributionError::ZeroDim);
        }
        let mut map: BTreeMap<Point, Rational> = BTreeMap::new();
        for (v, p) in atoms {
            if v.len() != dim {
                return Err(DistributionError::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if p <= Rational::zero() {
                return Err(DistributionError::NonPositiveMass);
            }
            *map.entry(v).or_insert_with(Rational::zero) += p;
        }
        let total = map.values().fold(Rational::zero(), |acc, p| acc + p);
        Ok(Self {
            dim,
            atoms: map.into_iter().collect(),
            total,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Point, Rational)] {
        &self.atoms
    }

    pub fn total(&self) -> &Rational {
        &self.total
    }

    /// `c · W` for `c > 0`.
    pub fn scaled(&self, c: &Rational) -> AtomicMeasure {
        assert!(*c > Rational::zero(), "measure scale must be positive");
        Self {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|(v, p)| (v.clone(), p * c))
                .collect(),
            total: &self.total * c,
        }
    }

    /// Mass of the atoms for which `keep` returns true.
    pub fn mass_where(&self, mut keep: impl FnMut(&[Rational]) -> bool) -> Rational {
        self.atoms
            .iter()
            .filter(|(v, _)| keep(v))
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    /// One-dimensional atoms as `(value, mass)`.
    pub fn one_dimensional(&self) -> Result<Vec<(Rational, Rational)>, DistributionError> {
        if self.dim != 1 {
            return Err(DistributionError::NotOneDimensional(self.dim));
        }
        Ok(self
            .atoms
            .iter()
            .map(|(v, p)| (v[0].clone(), p.clone()))
            .collect())
    }
}

/// `H^λ`: the symmetric compound-Poisson law with Lévy measure `λ M* / 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSpec {
    weight: WeightVector,
    lambda: f64,
}

impl CompoundPoissonSpec {
    pub fn new(weight: WeightVector, lambda: f64) -> Result<Self, DistributionError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(DistributionError::InvalidLambda(lambda.to_string()));
        }
        Ok(Self { weight, lambda })
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn char_fn(&self, t: &[f64]) -> f64 {
        char_fn_h(&self.weight, t, self.lambda)
    }
}

/// Law of `X₁ − X₂` for independent `X₁, X₂ ~ F`.
pub fn symmetrize(f: &DiscreteDistribution) -> DiscreteDistribution {
    let mut map: BTreeMap<Point, Rational> = BTreeMap::new();
    for (x, p) in &f.atoms {
        for (y, q) in &f.atoms {
            *map.entry(rational::sub(x, y)).or_insert_with(Rational::zero) += p * q;
        }
    }
    DiscreteDistribution {
        dim: f.dim,
        atoms: map.into_iter().collect(),
    }
}

/// `p(δ) = G{z : |z| > δ}` with the max-norm and a strict inequality.
pub fn tail_mass(g: &DiscreteDistribution, delta: &Rational) -> Rational {
    if !g.is_symmetric() {
        log::warn!("tail_mass called on an asymmetric law");
    }
    g.atoms
        .iter()
        .filter(|(v, _)| rational::max_norm(v) > *delta)
        .fold(Rational::zero(), |acc, (_, p)| acc + p)
}

/// Shorthand for `tail_mass(symmetrize(F), δ)`.
pub fn p_of(f: &DiscreteDistribution, delta: &Rational) -> Rational {
    tail_mass(&symmetrize(f), delta)
}

/// Integer grid representation of a one-dimensional law: value `k / scale`
/// carries mass `numerators[k] / mass_denominator`.
struct Grid<K> {
    atoms: BTreeMap<K, BigUint>,
}

fn grid_convolve<K: Ord + Clone>(
    steps: &[Vec<(K, BigUint)>],
    zero: K,
    add: impl Fn(&K, &K) -> Option<K>,
    cap: usize,
) -> Result<Grid<K>, DistributionError> {
    let mut acc: BTreeMap<K, BigUint> = BTreeMap::new();
    acc.insert(zero, BigUint::one());
    for step in steps {
        let mut next: BTreeMap<K, BigUint> = BTreeMap::new();
        for (k, m) in &acc {
            for (s, w) in step {
                let key = add(k, s).ok_or(DistributionError::Overflow)?;
                let e = next.entry(key).or_insert_with(BigUint::zero);
                *e += m * w;
            }
        }
        if next.len() > cap {
            return Err(DistributionError::AtomCapExceeded { cap });
        }
        acc = next;
    }
    Ok(Grid { atoms: acc })
}

fn to_i128(x: &BigInt) -> Result<i128, DistributionError> {
    x.to_i128().ok_or(DistributionError::Overflow)
}

/// Exact law of `S_a = Σ_k X_k a_k` for i.i.d. one-dimensional `X_k ~ F`.
///
/// `a` may have any dimension `d`; the result lives on `Q^d`. Fails with
/// [`DistributionError::AtomCapExceeded`] as soon as an intermediate support
/// grows beyond `cap`.
pub fn weighted_sum_law(
    f: &DiscreteDistribution,
    a: &WeightVector,
    cap: usize,
) -> Result<DiscreteDistribution, DistributionError> {
    let fvals = f.one_dimensional_values()?;
    let d = a.dim();
    let f_scale = rational::common_denominator(fvals.iter().map(|(v, _)| v));
    let a_scale = rational::common_denominator(a.entries().iter().flatten());
    let mass_den = rational::common_denominator(fvals.iter().map(|(_, p)| p));

    let x_int: Vec<i128> = fvals
        .iter()
        .map(|(v, _)| to_i128(&(v * Rational::from_integer(f_scale.clone())).to_integer()))
        .collect::<Result<_, _>>()?;
    let mass_num: Vec<BigUint> = fvals
        .iter()
        .map(|(_, p)| {
            (p * Rational::from_integer(mass_den.clone()))
                .to_integer()
                .to_biguint()
                .expect("masses are positive")
        })
        .collect();

    let mut a_int: Vec<Vec<i128>> = a
        .entries()
        .iter()
        .map(|e| {
            e.iter()
                .map(|v| to_i128(&(v * Rational::from_integer(a_scale.clone())).to_integer()))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    // the law does not depend on the order; small entries first keeps the
    // intermediate supports small when a few entries are huge
    a_int.sort_by_key(|e| e.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0));

    let value_scale = Rational::from_integer(&f_scale * &a_scale);
    let n = a.len();
    let total_den = Rational::from_integer(num_traits::pow(mass_den.clone(), n));

    let finish = |atoms: Vec<(Point, BigUint)>| -> Result<DiscreteDistribution, DistributionError> {
        let atoms = atoms
            .into_iter()
            .map(|(v, m)| (v, Rational::from_integer(BigInt::from(m)) / &total_den))
            .collect();
        Ok(DiscreteDistribution { dim: d, atoms })
    };

    if d == 1 {
        let steps: Vec<Vec<(i128, BigUint)>> = a_int
            .iter()
            .map(|ak| {
                x_int
                    .iter()
                    .zip(&mass_num)
                    .map(|(x, m)| x.checked_mul(ak[0]).map(|v| (v, m.clone())))
                    .collect::<Option<Vec<_>>>()
                    .ok_or(DistributionError::Overflow)
            })
            .collect::<Result<_, _>>()?;
        let grid = grid_convolve(&steps, 0i128, |x, y| x.checked_add(*y), cap)?;
        finish(
            grid.atoms
                .into_iter()
                .map(|(k, m)| (vec![Rational::from_integer(BigInt::from(k)) / &value_scale], m))
                .collect(),
        )
    } else {
        let steps: Vec<Vec<(Vec<i128>, BigUint)>> = a_int
            .iter()
            .map(|ak| {
                x_int
                    .iter()
                    .zip(&mass_num)
                    .map(|(x, m)| {
                        ak.iter()
                            .map(|c| x.checked_mul(*c))
                            .collect::<Option<Vec<_>>>()
                            .map(|v| (v, m.clone()))
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or(DistributionError::Overflow)
            })
            .collect::<Result<_, _>>()?;
        let grid = grid_convolve(
            &steps,
            vec![0i128; d],
            |x, y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| a.checked_add(*b))
                    .collect::<Option<Vec<_>>>()
            },
            cap,
        )?;
        finish(
            grid.atoms
                .into_iter()
                .map(|(k, m)| {
                    (
                        k.into_iter()
                            .map(|c| Rational::from_integer(BigInt::from(c)) / &value_scale)
                            .collect(),
                        m,
                    )
                })
                .collect(),
        )
    }
}

/// `M = Σ_k E_{a_k}`.
pub fn levy_measure(a: &WeightVector) -> AtomicMeasure {
    AtomicMeasure::new(
        a.dim(),
        a.entries()
            .iter()
            .map(|e| (e.clone(), Rational::one()))
            .collect(),
    )
    .expect("weight entries are valid points")
}

/// `M* = Σ_k (E_{a_k} + E_{−a_k})`, total mass `2n`.
pub fn levy_measure_star(a: &WeightVector) -> AtomicMeasure {
    AtomicMeasure::new(
        a.dim(),
        a.entries()
            .iter()
            .flat_map(|e| [(e.clone(), Rational::one()), (rational::neg(e), Rational::one())])
            .collect(),
    )
    .expect("weight entries are valid points")
}

/// `Ĥ(t)^λ = exp(−λ/2 · Σ_k (1 − cos⟨t, a_k⟩))`.
pub fn char_fn_h(a: &WeightVector, t: &[f64], lambda: f64) -> f64 {
    assert_eq!(t.len(), a.dim(), "argument dimension mismatch");
    let s: f64 = a
        .entries()
        .iter()
        .map(|e| {
            let ip: f64 = e.iter().zip(t).map(|(x, ti)| rational::to_f64(x) * ti).sum();
            1.0 - ip.cos()
        })
        .sum();
    (-0.5 * lambda * s).exp()
}

/// Distinct weight entries with their multiplicities, in first-seen order.
fn grouped_entries(a: &WeightVector) -> Vec<(Point, usize)> {
    let mut map: BTreeMap<Point, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for e in a.entries() {
        let c = map.entry(e.clone()).or_insert(0);
        if *c == 0 {
            order.push(e.clone());
        }
        *c += 1;
    }
    order
        .into_iter()
        .map(|e| {
            let c = map[&e];
            (e, c)
        })
        .collect()
}

const SAMPLE_CHUNK: usize = 8192;

/// SplitMix64 step, used to derive per-chunk seeds.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// I.i.d. draws from `H^λ`, realised as `Σ_k (N_k⁺ − N_k⁻) a_k` with
/// independent `Poisson(λ/4)` counts.
///
/// Equal weights are grouped (a sum of independent Poisson counts is
/// Poisson). Work is split into fixed-size chunks with derived seeds, so the
/// output depends only on `(spec, count, seed)`, not on the thread count.
pub fn sample_h_lambda(spec: &CompoundPoissonSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = spec.weight.dim();
    if spec.lambda == 0.0 {
        return vec![vec![0.0; d]; count];
    }
    let groups: Vec<(Vec<f64>, Poisson<f64>)> = grouped_entries(&spec.weight)
        .into_iter()
        .map(|(e, c)| {
            let v: Vec<f64> = e.iter().map(rational::to_f64).collect();
            let rate = spec.lambda / 4.0 * c as f64;
            (v, Poisson::new(rate).expect("positive rate"))
        })
        .collect();
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|ci| {
            let len = SAMPLE_CHUNK.min(count - ci * SAMPLE_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ci as u64));
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let mut s = vec![0.0; d];
                for (v, pois) in &groups {
                    let k = pois.sample(&mut rng) - pois.sample(&mut rng);
                    if k != 0.0 {
                        for (sj, vj) in s.iter_mut().zip(v) {
                            *sj += k * vj;
                        }
                    }
                }
                out.push(s);
            }
            out.into_iter()
        })
        .collect()
}

/// Numerically evaluated one-dimensional `H^λ` on its lattice.
///
/// Values are `key / scale`; masses are `f64`. `truncated_mass` bounds the
/// probability discarded by truncating the Poisson counts.
#[derive(Debug, Clone)]
pub struct LatticeLaw {
    pub scale: Rational,
    pub masses: BTreeMap<i128, f64>,
    pub truncated_mass: f64,
}

impl LatticeLaw {
    pub fn mass_at_zero(&self) -> f64 {
        self.masses.get(&0).copied().unwrap_or(0.0)
    }

    /// `sup_x H[x − τ/2, x + τ/2]` over the retained atoms.
    pub fn window_max(&self, tau: &Rational) -> f64 {
        let width = (tau * &self.scale).floor().to_integer();
        let width = width.to_i128().unwrap_or(i128::MAX);
        let keys: Vec<(i128, f64)> = self.masses.iter().map(|(k, m)| (*k, *m)).collect();
        let mut best = 0.0f64;
        let mut lo = 0;
        let mut acc = 0.0;
        for hi in 0..keys.len() {
            acc += keys[hi].1;
            while keys[hi].0 - keys[lo].0 > width {
                acc -= keys[lo].1;
                lo += 1;
            }
            best = best.max(acc);
        }
        best
    }
}

fn poisson_log_pmf(mu: f64, k: usize) -> f64 {
    let mut lf = 0.0;
    for i in 2..=k {
        lf += (i as f64).ln();
    }
    -mu + k as f64 * mu.ln() - lf
}

/// Upper tail `P(Poisson(μ) > t)`.
fn poisson_tail(mu: f64, t: usize) -> f64 {
    let mut cdf = 0.0;
    for k in 0..=t {
        cdf += poisson_log_pmf(mu, k).exp();
    }
    (1.0 - cdf).max(0.0)
}

/// Series evaluation of `H^λ` for one-dimensional weights by convolving
/// truncated Skellam laws (one per distinct weight value). Each Poisson count
/// is truncated at `max(20, T)` where `T` makes the per-count tail below
/// `tol / (2 · groups)`. Atoms lighter than `1e-20` are dropped and their mass
/// is added to `truncated_mass`.
pub fn compound_poisson_series(
    a: &WeightVector,
    lambda: f64,
    tol: f64,
    max_atoms: usize,
) -> Result<LatticeLaw, DistributionError> {
    if a.dim() != 1 {
        return Err(DistributionError::NotOneDimensional(a.dim()));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(DistributionError::InvalidLambda(lambda.to_string()));
    }
    let groups = grouped_entries(a);
    let scale_int = rational::common_denominator(groups.iter().map(|(e, _)| &e[0]));
    let scale = Rational::from_integer(scale_int.clone());
    let mut acc: BTreeMap<i128, f64> = BTreeMap::new();
    acc.insert(0, 1.0);
    if lambda == 0.0 {
        return Ok(LatticeLaw {
            scale,
            masses: acc,
            truncated_mass: 0.0,
        });
    }
    let per_tol = tol / (2.0 * groups.len() as f64);
    let mut truncated = 0.0;
    for (e, c) in &groups {
        let step = to_i128(&(&e[0] * &scale).to_integer())?;
        if step == 0 {
            continue;
        }
        let mu = lambda / 4.0 * *c as f64;
        let mut t = 20usize;
        while poisson_tail(mu, t) > per_tol && t < 10_000 {
            t += 10;
        }
        truncated += 2.0 * poisson_tail(mu, t);
        let pmf: Vec<f64> = (0..=t).map(|k| poisson_log_pmf(mu, k).exp()).collect();
        // Skellam pmf on {−t..t}
        let mut skellam = vec![0.0; 2 * t + 1];
        for (i, pi) in pmf.iter().enumerate() {
            for (j, pj) in pmf.iter().enumerate() {
                skellam[(i as isize - j as isize + t as isize) as usize] += pi * pj;
            }
        }
        let mut next: BTreeMap<i128, f64> = BTreeMap::new();
        for (k, m) in &acc {
            for (idx, s) in skellam.iter().enumerate() {
                if *s == 0.0 {
                    continue;
                }
                let jump = (idx as i128 - t as i128)
                    .checked_mul(step)
                    .and_then(|j| j.checked_add(*k))
                    .ok_or(DistributionError::Overflow)?;
                *next.entry(jump).or_insert(0.0) += m * s;
            }
        }
        next.retain(|_, m| {
            if *m < 1e-20 {
                truncated += *m;
                false
            } else {
                true
            }
        });
        if next.len() > max_atoms {
            return Err(DistributionError::AtomCapExceeded { cap: max_atoms });
        }
        acc = next;
    }
    Ok(LatticeLaw {
        scale,
        masses: acc,
        truncated_mass: truncated,
    })
}

/// Wire form of a distribution: `{"dim": d, "atoms": [[["p/q",…], "p/q"],…]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionJson {
    pub dim: usize,
    pub atoms: Vec<(Vec<String>, String)>,
}

/// Wire form of a weight vector: `{"dim": d, "entries": [[…],…]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightJson {
    pub dim: usize,
    #[serde(with = "rational::serde_q::vec2")]
    pub entries: Vec<Vec<Rational>>,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error(transparent)]
    Parse(#[from] rational::ParseRationalError),
    #[error(transparent)]
    Invalid(#[from] DistributionError),
}

fn atoms_from_wire(
    atoms: &[(Vec<String>, String)],
) -> Result<Vec<(Point, Rational)>, rational::ParseRationalError> {
    atoms
        .iter()
        .map(|(v, p)| {
            let v = v.iter().map(|s| rational::parse(s)).collect::<Result<_, _>>()?;
            Ok((v, rational::parse(p)?))
        })
        .collect()
}

fn atoms_to_wire(atoms: &[(Point, Rational)]) -> Vec<(Vec<String>, String)> {
    atoms
        .iter()
        .map(|(v, p)| (v.iter().map(rational::format).collect(), rational::format(p)))
        .collect()
}

impl From<&DiscreteDistribution> for DistributionJson {
    fn from(f: &DiscreteDistribution) -> Self {
        Self {
            dim: f.dim,
            atoms: atoms_to_wire(&f.atoms),
        }
    }
}

impl TryFrom<DistributionJson> for DiscreteDistribution {
    type Error = WireError;
    fn try_from(j: DistributionJson) -> Result<Self, WireError> {
        Ok(DiscreteDistribution::new(j.dim, atoms_from_wire(&j.atoms)?)?)
    }
}

impl From<&AtomicMeasure> for DistributionJson {
    fn from(m: &AtomicMeasure) -> Self {
        Self {
            dim: m.dim,
            atoms: atoms_to_wire(&m.atoms),
        }
    }
}

impl TryFrom<DistributionJson> for AtomicMeasure {
    type Error = WireError;
    fn try_from(j: DistributionJson) -> Result<Self, WireError> {
        Ok(AtomicMeasure::new(j.dim, atoms_from_wire(&j.atoms)?)?)
    }
}

impl From<&WeightVector> for WeightJson {
    fn from(a: &WeightVector) -> Self {
        Self {
            dim: a.dim,
            entries: a.entries.clone(),
        }
    }
}

impl TryFrom<WeightJson> for WeightVector {
    type Error = DistributionError;
    fn try_from(j: WeightJson) -> Result<Self, DistributionError> {
        WeightVector::new(j.dim, j.entries)
    }
}

impl Serialize for DiscreteDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DistributionJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = DistributionJson::deserialize(d)?;
        DiscreteDistribution::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl Serialize for WeightVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WeightJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = WeightJson::deserialize(d)?;
        WeightVector::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl Serialize for AtomicMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DistributionJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = DistributionJson::deserialize(d)?;
        AtomicMeasure::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn law(pairs: &[(i64, i64, i64)]) -> DiscreteDistribution {
        // (value, mass numerator, mass denominator)
        DiscreteDistribution::new(
            1,
            pairs
                .iter()
                .map(|(v, n, d)| (vec![int(*v)], ratio(*n, *d)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_laws() {
        assert_eq!(
            DiscreteDistribution::new(1, vec![(vec![int(0)], ratio(1, 2))]),
            Err(DistributionError::MassNotOne("1/2".into()))
        );
        assert!(matches!(
            DiscreteDistribution::new(
                1,
                vec![(vec![int(0)], ratio(1, 2)), (vec![int(0)], ratio(1, 2))]
            ),
            Err(DistributionError::DuplicateAtom(_))
        ));
        assert_eq!(
            DiscreteDistribution::new(1, vec![(vec![int(0)], int(0)), (vec![int(1)], int(1))]),
            Err(DistributionError::NonPositiveMass)
        );
        assert_eq!(
            WeightVector::scalar(&[int(0), int(0)]),
            Err(DistributionError::ZeroWeight)
        );
    }

    #[test]
    fn symmetrize_rademacher() {
        let g = symmetrize(&DiscreteDistribution::rademacher());
        assert_eq!(g, law(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]));
        assert!(g.is_symmetric());
    }

    #[test]
    fn symmetrize_point_mass_and_uniform() {
        let g = symmetrize(&DiscreteDistribution::point_mass(vec![ratio(7, 3)]));
        assert_eq!(g, DiscreteDistribution::point_mass(vec![int(0)]));
        let u = DiscreteDistribution::uniform(&[int(0), int(1), int(2)]).unwrap();
        assert_eq!(
            symmetrize(&u),
            law(&[(-2, 1, 9), (-1, 2, 9), (0, 3, 9), (1, 2, 9), (2, 1, 9)])
        );
    }

    #[test]
    fn tail_mass_examples() {
        let g = symmetrize(&DiscreteDistribution::rademacher());
        assert_eq!(tail_mass(&g, &int(1)), ratio(1, 2));
        assert_eq!(tail_mass(&g, &int(2)), int(0));
        assert_eq!(tail_mass(&g, &int(0)), int(1) - g.mass_at(&[int(0)]));
    }

    #[test]
    fn weighted_sums_of_rademacher() {
        let f = DiscreteDistribution::rademacher();
        let s = weighted_sum_law(&f, &WeightVector::ones(2), DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(s, law(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]));
        let a = WeightVector::scalar(&[int(1), int(2)]).unwrap();
        let s = weighted_sum_law(&f, &a, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(s, law(&[(-3, 1, 4), (-1, 1, 4), (1, 1, 4), (3, 1, 4)]));
    }

    #[test]
    fn weighted_sum_cap_is_enforced() {
        let f = DiscreteDistribution::rademacher();
        let a = WeightVector::scalar(&[int(1), int(3), int(9), int(27)]).unwrap();
        assert_eq!(
            weighted_sum_law(&f, &a, 8),
            Err(DistributionError::AtomCapExceeded { cap: 8 })
        );
        assert_eq!(weighted_sum_law(&f, &a, 16).unwrap().len(), 16);
    }

    #[test]
    fn weighted_sum_with_rational_values() {
        let f = DiscreteDistribution::new(
            1,
            vec![(vec![ratio(-1, 2)], ratio(1, 3)), (vec![ratio(1, 3)], ratio(2, 3))],
        )
        .unwrap();
        let a = WeightVector::scalar(&[ratio(2, 5)]).unwrap();
        let s = weighted_sum_law(&f, &a, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(s.mass_at(&[ratio(-1, 5)]), ratio(1, 3));
        assert_eq!(s.mass_at(&[ratio(2, 15)]), ratio(2, 3));
    }

    #[test]
    fn levy_measure_star_examples() {
        let m = levy_measure_star(&WeightVector::ones(3));
        assert_eq!(m.atoms(), &[(vec![int(-1)], int(3)), (vec![int(1)], int(3))]);
        assert_eq!(*m.total(), int(6));
        let m = levy_measure_star(&WeightVector::scalar(&[int(0), int(1)]).unwrap());
        assert_eq!(
            m.atoms(),
            &[
                (vec![int(-1)], int(1)),
                (vec![int(0)], int(2)),
                (vec![int(1)], int(1))
            ]
        );
        assert_eq!(*m.total(), int(4));
        let m = levy_measure_star(&WeightVector::scalar(&[int(2)]).unwrap());
        assert_eq!(*m.total(), int(2));
    }

    #[test]
    fn char_fn_examples() {
        let a = WeightVector::scalar(&[int(1)]).unwrap();
        assert_eq!(char_fn_h(&a, &[0.0], 3.0), 1.0);
        assert!((char_fn_h(&a, &[std::f64::consts::PI], 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(char_fn_h(&a, &[1.7], 0.0), 1.0);
    }

    #[test]
    fn sampler_is_deterministic_and_degenerate_at_zero() {
        let a = WeightVector::scalar(&[int(1), ratio(1, 2)]).unwrap();
        let spec = CompoundPoissonSpec::new(a.clone(), 0.0).unwrap();
        assert!(sample_h_lambda(&spec, 100, 1)
            .iter()
            .all(|s| s == &vec![0.0]));
        let spec = CompoundPoissonSpec::new(a, 2.0).unwrap();
        let x = sample_h_lambda(&spec, 20_000, 9);
        let y = sample_h_lambda(&spec, 20_000, 9);
        assert_eq!(x, y);
        assert_ne!(x, sample_h_lambda(&spec, 20_000, 10));
    }

    #[test]
    fn skellam_point_mass_matches_bessel_series() {
        // e^{-2} Σ_j 1/(j!)^2 = P(N⁺ = N⁻) for two Poisson(1) counts
        let mut series = 0.0;
        let mut fact = 1.0;
        for j in 0..30 {
            if j > 0 {
                fact *= j as f64;
            }
            series += 1.0 / (fact * fact);
        }
        let expected = (-2.0f64).exp() * series;
        assert!((expected - 0.3085).abs() < 1e-4);

        let a = WeightVector::scalar(&[int(1)]).unwrap();
        let law = compound_poisson_series(&a, 4.0, 1e-13, DEFAULT_ATOM_CAP).unwrap();
        assert!((law.mass_at_zero() - expected).abs() < 1e-12);

        let spec = CompoundPoissonSpec::new(a, 4.0).unwrap();
        let count = 100_000;
        let zeros = sample_h_lambda(&spec, count, 2024)
            .iter()
            .filter(|s| s[0] == 0.0)
            .count();
        let est = zeros as f64 / count as f64;
        let se = (expected * (1.0 - expected) / count as f64).sqrt();
        assert!((est - expected).abs() < 3.0 * se, "est {est} vs {expected}");
    }

    #[test]
    fn json_roundtrip_uses_p_over_q_strings() {
        let f = law(&[(-1, 1, 3), (2, 2, 3)]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"dim":1,"atoms":[[["-1/1"],"1/3"],[["2/1"],"2/3"]]}"#);
        let back: DiscreteDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"dim":1,"atoms":[[["0"],"1/2"]]}"#;
        assert!(serde_json::from_str::<DiscreteDistribution>(bad).is_err());
        let w: WeightVector = serde_json::from_str(r#"{"dim":1,"entries":[["1/2"],["3"]]}"#).unwrap();
        assert_eq!(w.norm_sq(), &ratio(37, 4));
    }

    fn arb_law() -> impl proptest::strategy::Strategy<Value = DiscreteDistribution> {
        use proptest::prelude::*;
        prop::collection::btree_map(-12i64..=12, 1i64..=6, 1..=5).prop_map(|m| {
            let total: i64 = m.values().sum();
            DiscreteDistribution::new(
                1,
                m.into_iter().map(|(v, w)| (vec![ratio(v, 2)], ratio(w, total))).collect(),
            )
            .unwrap()
        })
    }

    fn arb_weights(d: usize) -> impl proptest::strategy::Strategy<Value = WeightVector> {
        use proptest::prelude::*;
        prop::collection::vec(prop::collection::vec(-6i64..=6, d), 1..=5).prop_filter_map(
            "a zero entry",
            move |rows| {
                let entries = rows.iter().map(|r| r.iter().map(|v| ratio(*v, 3)).collect()).collect();
                WeightVector::new(d, entries).ok()
            },
        )
    }

    proptest::proptest! {
        #[test]
        fn symmetrize_is_exactly_symmetric(f in arb_law()) {
            let g = symmetrize(&f);
            for (v, p) in g.atoms() {
                let minus: Point = v.iter().map(|x| -x).collect();
                proptest::prop_assert_eq!(&g.mass_at(&minus), p);
            }
        }

        #[test]
        fn tail_mass_is_monotone_and_vanishes(f in arb_law(), a in 0i64..30, b in 0i64..30) {
            let g = symmetrize(&f);
            let (lo, hi) = (ratio(a.min(b), 2), ratio(a.max(b), 2));
            proptest::prop_assert!(tail_mass(&g, &lo) >= tail_mass(&g, &hi));
            proptest::prop_assert!(tail_mass(&g, &g.max_abs()).is_zero());
        }

        #[test]
        fn weighted_sum_masses_sum_to_one(f in arb_law(), a in arb_weights(1)) {
            let s = weighted_sum_law(&f, &a, DEFAULT_ATOM_CAP).unwrap();
            let total = s.atoms().iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
            proptest::prop_assert!(total.is_one());
        }

        #[test]
        fn char_fn_is_multiplicative_in_lambda(
            a in arb_weights(1), t in -20.0f64..20.0, l1 in 0.0f64..3.0, l2 in 0.0f64..3.0,
        ) {
            let joint = char_fn_h(&a, &[t], l1 + l2);
            let prod = char_fn_h(&a, &[t], l1) * char_fn_h(&a, &[t], l2);
            proptest::prop_assert!((joint - prod).abs() <= 1e-12 * joint.abs().max(1e-300));
        }

        #[test]
        fn coordinates_of_the_sum_law(f in arb_law(), a in arb_weights(2)) {
            let s = weighted_sum_law(&f, &a, DEFAULT_ATOM_CAP).unwrap();
            for j in 0..2 {
                let Ok(aj) = a.coordinate(j) else { continue };
                let direct = weighted_sum_law(&f, &aj, DEFAULT_ATOM_CAP).unwrap();
                proptest::prop_assert_eq!(s.marginal(j), direct);
            }
        }
    }
}
