//! Structure recovery: from a weight vector with large concentration to
//! progressions that approximate most of its entries.

mod lograank;
mod schedule;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arak::{self, ArakError, Exactness};
use crate::constants::Constants;
use crate::distributions::{self, levy_measure_star, DiscreteDistribution, DistributionError, WeightVector};
use crate::gap::{self, embed_proper, mahler_sandwich, Cgap, Gap, GapError, ProductCgap, SymmetricPolytope};
use crate::rational::{self, Point, Rational};

pub use lograank::{
    lograank_construct, lograank_product, LograankProductReport, LograankReport, LograankSettings,
    LogSchedule,
};
pub use schedule::{
    fallback_gap, schedule_thm16, schedule_thm19, ScheduleOutcome, ScheduleReport, Thm16Input,
    Thm19Input,
};

/// Largest dilation accepted from the sandwich search.
const SANDWICH_T_CAP: i64 = 64;
/// Largest dilation used for the second embedding.
const MAX_DILATION: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecoveryError {
    #[error("n' = {n_prime} is outside the admissible window [{lower:.4}, {n}]")]
    InvalidWindow { lower: f64, n_prime: u64, n: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("p(0) = 0: every concentration equals one")]
    TrivialCase,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("coordinate failures: {0:?}")]
    Coordinates(Vec<(usize, String)>),
    #[error(transparent)]
    Arak(#[from] ArakError),
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams {
    /// Observed `Q(F_a, τ)`.
    pub q: f64,
    #[serde(with = "rational::serde_q")]
    pub tau: Rational,
    #[serde(with = "rational::serde_q")]
    pub kappa: Rational,
    #[serde(with = "rational::serde_q")]
    pub delta: Rational,
    pub r: usize,
    pub n_prime: u64,
    /// `p(τ/κ)` when `τ > 0`, `p(0)` when `τ = 0`.
    pub p_val: f64,
    #[serde(default)]
    pub constants: Constants,
}

impl RecoveryParams {
    /// Same parameters for `λa`: `τ, κ, δ` scale, everything else is
    /// invariant.
    pub fn scaled(&self, lambda: &Rational) -> Self {
        Self {
            tau: &self.tau * lambda,
            kappa: &self.kappa * lambda,
            delta: &self.delta * lambda,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), RecoveryError> {
        let bad = |s: &str| Err(RecoveryError::InvalidParams(s.into()));
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad("q must lie in (0, 1]");
        }
        if self.tau.is_negative() || self.delta.is_negative() {
            return bad("tau and delta must be nonnegative");
        }
        if !self.kappa.is_positive() {
            return bad("kappa must be positive");
        }
        if self.delta > self.kappa.clone().max(self.tau.clone()) {
            return bad("delta must not exceed max(kappa, tau)");
        }
        if self.tau.is_positive() && self.delta.is_zero() {
            return bad("delta must be positive when tau > 0");
        }
        if self.n_prime == 0 {
            return bad("n' must be positive");
        }
        if self.p_val.is_nan() || self.p_val <= 0.0 {
            return Err(RecoveryError::TrivialCase);
        }
        Ok(())
    }

    /// `2 c₄^{r+1} (κ/δ)` for `τ > 0`, `2 c₄^{r+1}` for `τ = 0`.
    fn numerator(&self) -> f64 {
        let c = 2.0 * self.constants.c4.powi(self.r as i32 + 1);
        if self.tau.is_positive() {
            c * rational::to_f64(&(&self.kappa / &self.delta))
        } else {
            c
        }
    }

    /// Smallest admissible `n'`.
    pub fn window_lower(&self) -> f64 {
        let r1 = (self.r + 1) as f64;
        let base = self.numerator() * r1.powf(2.5 * self.r as f64) / self.q;
        base.powf(2.0 / r1) / self.p_val
    }

    fn m_unchecked(&self) -> Result<u64, RecoveryError> {
        let y = self.numerator() / (self.q * (self.p_val * self.n_prime as f64).sqrt());
        if !y.is_finite() || y > 1e15 {
            return Err(RecoveryError::InvalidParams(format!("m is not representable (y = {y})")));
        }
        Ok(y.floor() as u64 + 1)
    }
}

/// `m = ⌊y⌋ + 1` with `y = 2c₄^{r+1}κ/(qδ√(p n'))` (`τ > 0`) or
/// `y = 2c₄^{r+1}/(q√(p n'))` (`τ = 0`). Fails when `n'` is below the window.
pub fn select_m(params: &RecoveryParams) -> Result<u64, RecoveryError> {
    params.validate()?;
    let lower = params.window_lower();
    if (params.n_prime as f64) < lower {
        return Err(RecoveryError::InvalidWindow {
            lower,
            n_prime: params.n_prime,
            n: u64::MAX,
        });
    }
    params.m_unchecked()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The best witness leaves more than `n'` mass uncovered.
    TheoremWindowViolated,
    /// No `n'` fits the window, or `n − 2n' ≤ 0`.
    NoInformation,
    /// `δ > ‖a‖/√n'`, so `K* = K** = {0}`.
    DegenerateTruncation,
    /// The witness came from the rank-2 search and is only an upper bound.
    BetaUpperBound,
    SandwichFallback,
    EmbeddingFallback,
    /// The dilation of the second embedding was capped.
    DilationCapped,
    /// A check could not run within the enumeration cap.
    CertificationSkipped(String),
    CertificationFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub n: usize,
    pub params: RecoveryParams,
    pub m: u64,
    #[serde(with = "rational::serde_q")]
    pub beta: Rational,
    pub beta_exactness: Exactness,
    /// The β witness `K`.
    pub k: Cgap,
    pub k_star: Cgap,
    pub k_star_star: Cgap,
    pub bar_p: Gap,
    pub barbar_p: Gap,
    pub tilde_p: Gap,
    /// Dilation used for the embedding behind `K**`.
    #[serde(with = "rational::serde_q")]
    pub dilation: Rational,
    /// Number of entries δ-close to each set.
    pub coverage: BTreeMap<String, usize>,
    /// Entries not δ-close to `K*`.
    pub uncovered: Vec<usize>,
    /// `(2r‖a‖/√n')²`; generators are compared through their squares.
    #[serde(with = "rational::serde_q")]
    pub generator_norm_bound_sq: Rational,
    pub generator_norm_bound: f64,
    pub sizes: BTreeMap<String, u64>,
    pub flags: BTreeSet<Flag>,
}

impl RecoveryReport {
    /// True when every containment, properness and norm check passed.
    pub fn certified(&self) -> bool {
        !self
            .flags
            .iter()
            .any(|f| matches!(f, Flag::CertificationFailed(_)))
    }

    /// Whether n' lies in the admissible window, so that the coverage claims
    /// are asserted.
    pub fn in_window(&self) -> bool {
        !self.flags.contains(&Flag::NoInformation) && !self.flags.contains(&Flag::TheoremWindowViolated)
    }

    pub fn failures(&self) -> Vec<String> {
        self.flags
            .iter()
            .filter_map(|f| match f {
                Flag::CertificationFailed(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Exact tests against `2‖a‖/√n'` and `2r‖a‖/√n'` without square roots.
struct Threshold {
    norm_sq: Rational,
    n_prime: Rational,
}

impl Threshold {
    /// `|v| ≤ c‖a‖/√n'`.
    fn within(&self, v: &Rational, c: &Rational) -> bool {
        v * v * &self.n_prime <= c * c * &self.norm_sq
    }
}

fn scalar_set(img: &BTreeSet<Point>) -> BTreeSet<Rational> {
    img.iter().map(|p| p[0].clone()).collect()
}

/// `K ∩ [−2‖a‖/√n', 2‖a‖/√n']` as a CGAP over a sub-body of `K`'s body.
///
/// The cut is made at the midpoint between the largest value kept and the
/// smallest value dropped, with the slab normal divided by `max |h_i|`, so the
/// resulting body does not change when `h` is scaled.
fn truncate(k: &Cgap, th: &Threshold, cap: usize) -> Result<Cgap, RecoveryError> {
    if k.rank() == 0 {
        return Ok(k.clone());
    }
    let two = rational::int(2);
    let pts = k.labelled_points(cap)?;
    let mut keep_max: Option<Rational> = None;
    let mut drop_min: Option<Rational> = None;
    for (_, v) in &pts {
        let a = v.abs();
        if th.within(&a, &two) {
            if keep_max.as_ref().is_none_or(|m| a > *m) {
                keep_max = Some(a);
            }
        } else if drop_min.as_ref().is_none_or(|m| a < *m) {
            drop_min = Some(a);
        }
    }
    let Some(drop) = drop_min else {
        return Ok(k.clone());
    };
    let keep = keep_max.unwrap_or_else(Rational::zero);
    let cut = (keep + drop) / &two;
    let scale = k.h().iter().map(|x| x.abs()).max().expect("rank > 0");
    let normal: Point = k.h().iter().map(|x| x / &scale).collect();
    let body = k.body().with_constraint(normal, cut / scale)?;
    Ok(Cgap::new(k.h().to_vec(), body)?)
}

/// `φ(P^{t*})` for a sandwich `P` of `body`, where `φ(y) = ⟨y, h⟩`. Falls
/// back to the bounding box of the body when no sandwich is found.
fn sandwich_image(
    k: &Cgap,
    cap: usize,
    flags: &mut BTreeSet<Flag>,
) -> Result<Gap, RecoveryError> {
    if k.rank() == 0 {
        return Ok(Gap::zero(1));
    }
    match mahler_sandwich(k.body(), &rational::int(SANDWICH_T_CAP), cap) {
        Ok(s) => {
            if s.gap.rank() == 0 {
                return Ok(Gap::zero(1));
            }
            let p0 = s.gap.dilate(&s.t_star)?;
            let gens = p0.generators().iter().map(|g| rational::dot(g, k.h())).collect();
            Ok(Gap::scalar(p0.dims().to_vec(), gens)?)
        }
        Err(GapError::SandwichNotFound(msg)) => {
            log::warn!("sandwich not found ({msg}); using the bounding box");
            flags.insert(Flag::SandwichFallback);
            let mut dims = Vec::new();
            let mut gens = Vec::new();
            for (b, h) in k.body().bounding_box().iter().zip(k.h()) {
                let f = b.floor();
                if f.is_positive() {
                    dims.push(f);
                    gens.push(h.clone());
                }
            }
            Ok(Gap::scalar(dims, gens)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn embed_or_keep(
    p: &Gap,
    t: &Rational,
    cap: usize,
    flags: &mut BTreeSet<Flag>,
) -> Result<Gap, RecoveryError> {
    match embed_proper(p, t, cap) {
        Ok(e) => Ok(e.gap),
        Err(GapError::EmbeddingNotFound(msg)) => {
            log::warn!("embedding not found ({msg})");
            flags.insert(Flag::EmbeddingFallback);
            Ok(p.clone())
        }
        Err(e) => Err(e.into()),
    }
}

fn fail(flags: &mut BTreeSet<Flag>, s: String) {
    flags.insert(Flag::CertificationFailed(s));
}

/// Image of a one-dimensional GAP as scalars, or `None` past the cap.
fn gap_values(p: &Gap, cap: usize) -> Result<Option<BTreeSet<Rational>>, RecoveryError> {
    match p.scalar_image(cap) {
        Ok(v) => Ok(Some(v.into_iter().collect())),
        Err(GapError::EnumerationCapExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn cgap_values(k: &Cgap, cap: usize) -> Result<BTreeSet<Rational>, RecoveryError> {
    Ok(scalar_set(&k.image(cap)?.0))
}

fn coverage_of(values: &BTreeSet<Rational>, delta: &Rational, a: &WeightVector) -> Vec<usize> {
    let img: BTreeSet<Point> = values.iter().map(|v| vec![v.clone()]).collect();
    gap::covered_indices(&img, delta, a)
}

fn dilation_for(r: usize, c8: f64) -> (Rational, bool) {
    if r == 0 {
        return (Rational::one(), false);
    }
    let t = (c8 * r as f64).powf(1.5 * r as f64);
    // NaN counts as capped
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let capped = !(t <= MAX_DILATION);
    let t = if capped { MAX_DILATION } else { t };
    (rational::int(t.floor().max(1.0) as i64), capped)
}

/// One-dimensional structure recovery: the β witness, its truncation `K*`,
/// the GAPs `P̄ ⊇ K*`, a proper `P̿ ⊇ K*`, and `K** ⊆ P̃` with `P̃` proper.
/// Every containment is checked on the enumerated images.
pub fn recover(
    a: &WeightVector,
    f: &DiscreteDistribution,
    params: &RecoveryParams,
    cap: usize,
) -> Result<RecoveryReport, RecoveryError> {
    if a.dim() != 1 {
        return Err(DistributionError::NotOneDimensional(a.dim()).into());
    }
    if distributions::p_of(f, &Rational::zero()).is_zero() {
        return Err(RecoveryError::TrivialCase);
    }
    params.validate()?;
    let n = a.len();
    if params.n_prime > n as u64 {
        return Err(RecoveryError::InvalidWindow {
            lower: params.window_lower(),
            n_prime: params.n_prime,
            n: n as u64,
        });
    }
    let mut flags = BTreeSet::new();
    let lower = params.window_lower();
    if lower > n as f64 || n as u64 <= 2 * params.n_prime {
        flags.insert(Flag::NoInformation);
    } else if (params.n_prime as f64) < lower {
        return Err(RecoveryError::InvalidWindow {
            lower,
            n_prime: params.n_prime,
            n: n as u64,
        });
    }
    let m = params.m_unchecked()?;
    let r = params.r;
    let delta = &params.delta;

    let w = levy_measure_star(a);
    let beta = arak::beta(&w, delta, r, m)?;
    if *beta.value() > rational::int(params.n_prime as i64) {
        flags.insert(Flag::TheoremWindowViolated);
    }
    if beta.exactness() == Exactness::UpperBound {
        flags.insert(Flag::BetaUpperBound);
    }
    let k = beta.witness().clone();

    let th = Threshold {
        norm_sq: a.norm_sq().clone(),
        n_prime: rational::int(params.n_prime as i64),
    };
    let degenerate = delta * delta * &th.n_prime > th.norm_sq;

    let (k_star, bar_p, barbar_p, k_star_star, tilde_p, dilation) = if degenerate {
        flags.insert(Flag::DegenerateTruncation);
        (
            Cgap::zero(),
            Gap::zero(1),
            Gap::zero(1),
            Cgap::zero(),
            Gap::zero(1),
            Rational::one(),
        )
    } else {
        let k_star = truncate(&k, &th, cap)?;
        let bar_p = sandwich_image(&k_star, cap, &mut flags)?;
        let barbar_p = embed_or_keep(&bar_p, &Rational::one(), cap, &mut flags)?;
        let (t, capped) = dilation_for(r, params.constants.c8);
        if capped {
            flags.insert(Flag::DilationCapped);
        }
        let q = embed_or_keep(&bar_p, &t, cap, &mut flags)?;
        let k_q = if q.rank() == 0 {
            Cgap::zero()
        } else {
            let h = q.generators().iter().map(|g| g[0].clone()).collect();
            Cgap::new(h, SymmetricPolytope::cube(q.dims())?)?
        };
        let k_star_star = truncate(&k_q, &th, cap)?;
        let tilde_p = sandwich_image(&k_star_star, cap, &mut flags)?;
        (k_star, bar_p, barbar_p, k_star_star, tilde_p, t)
    };

    // certification
    let two = rational::int(2);
    let v_k = cgap_values(&k, cap)?;
    let v_star = cgap_values(&k_star, cap)?;
    let v_star2 = cgap_values(&k_star_star, cap)?;
    if !degenerate {
        let expect: BTreeSet<Rational> = v_k.iter().filter(|v| th.within(&v.abs(), &two)).cloned().collect();
        if v_star != expect {
            fail(&mut flags, "K* differs from K cut to the slab".into());
        }
    }
    let mut coverage = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    let mut uncovered = Vec::new();
    for (name, vals) in [("K", &v_k), ("K_star", &v_star), ("K_star_star", &v_star2)] {
        let idx = coverage_of(vals, delta, a);
        if name == "K_star" {
            let set: BTreeSet<usize> = idx.iter().copied().collect();
            uncovered = (0..n).filter(|i| !set.contains(i)).collect();
        }
        coverage.insert(name.to_string(), idx.len());
        sizes.insert(format!("{name}.image"), vals.len() as u64);
    }
    sizes.insert("K.lattice".into(), k.image(cap)?.1 as u64);
    sizes.insert("K_star.lattice".into(), k_star.image(cap)?.1 as u64);
    sizes.insert("K_star_star.lattice".into(), k_star_star.image(cap)?.1 as u64);
    sizes.insert("m".into(), m);

    let gaps = [("bar_P", &bar_p), ("barbar_P", &barbar_p), ("tilde_P", &tilde_p)];
    let mut gap_vals: BTreeMap<&str, Option<BTreeSet<Rational>>> = BTreeMap::new();
    for (name, p) in gaps {
        sizes.insert(format!("{name}.vol"), p.vol().to_u64().unwrap_or(u64::MAX));
        let vals = gap_values(p, cap)?;
        match &vals {
            Some(v) => {
                coverage.insert(name.to_string(), coverage_of(v, delta, a).len());
                sizes.insert(format!("{name}.image"), v.len() as u64);
            }
            None => {
                flags.insert(Flag::CertificationSkipped(format!("{name} image exceeds the cap")));
            }
        }
        gap_vals.insert(name, vals);
    }
    for (inner, inner_vals, outer) in [
        ("K_star", &v_star, "bar_P"),
        ("K_star", &v_star, "barbar_P"),
        ("K_star_star", &v_star2, "tilde_P"),
    ] {
        if let Some(outer_vals) = &gap_vals[outer] {
            if !inner_vals.is_subset(outer_vals) {
                fail(&mut flags, format!("{inner} is not contained in {outer}"));
            }
        }
    }
    for (name, p) in [("barbar_P", &barbar_p), ("tilde_P", &tilde_p)] {
        match p.is_proper(cap) {
            Ok(true) => {}
            Ok(false) => fail(&mut flags, format!("{name} is not proper")),
            Err(GapError::EnumerationCapExceeded { .. }) => {
                flags.insert(Flag::CertificationSkipped(format!("properness of {name}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let r_q = rational::int(2 * r as i64);
    for (name, p) in [("bar_P", &bar_p), ("tilde_P", &tilde_p)] {
        if p.generators().iter().any(|g| !th.within(&g[0].abs(), &r_q)) {
            fail(&mut flags, format!("a generator of {name} exceeds 2r‖a‖/√n'"));
        }
    }
    if !flags.contains(&Flag::NoInformation) && !flags.contains(&Flag::TheoremWindowViolated) {
        let floor = n as i64 - 2 * params.n_prime as i64;
        for name in ["K_star", "K_star_star"] {
            if (coverage[name] as i64) < floor {
                fail(&mut flags, format!("coverage of {name} is below n - 2n'"));
            }
        }
    }

    let bound_sq = &r_q * &r_q * &th.norm_sq / &th.n_prime;
    Ok(RecoveryReport {
        n,
        params: params.clone(),
        m,
        beta: beta.value().clone(),
        beta_exactness: beta.exactness(),
        k,
        k_star,
        k_star_star,
        bar_p,
        barbar_p,
        tilde_p,
        dilation,
        coverage,
        uncovered,
        generator_norm_bound: rational::to_f64(&bound_sq).sqrt(),
        generator_norm_bound_sq: bound_sq,
        sizes,
        flags,
    })
}

/// Result of running [`recover`] on every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductReport {
    pub coordinates: Vec<RecoveryReport>,
    pub k_star: ProductCgap,
    pub k_star_star: ProductCgap,
    pub bar_p: Gap,
    pub barbar_p: Gap,
    pub tilde_p: Gap,
    /// Entries close to the product set in every coordinate.
    pub joint_coverage: BTreeMap<String, usize>,
    /// `n − 2 Σ n'_j`.
    pub coverage_floor: i64,
    /// `Π` of the per-coordinate image sizes.
    pub sizes: BTreeMap<String, u64>,
    /// Block boundaries `s_k = Σ_{j ≤ k} l_j` of each product GAP.
    pub blocks: BTreeMap<String, Vec<usize>>,
    pub flags: BTreeSet<Flag>,
}

impl ProductReport {
    pub fn certified(&self) -> bool {
        !self
            .flags
            .iter()
            .any(|f| matches!(f, Flag::CertificationFailed(_)))
    }
}

/// Runs the one-dimensional recovery on each coordinate and assembles the
/// product sets.
pub fn recover_multid(
    a: &WeightVector,
    f: &DiscreteDistribution,
    params: &[RecoveryParams],
    cap: usize,
) -> Result<ProductReport, RecoveryError> {
    let d = a.dim();
    if params.len() != d {
        return Err(RecoveryError::InvalidParams(format!(
            "{} coordinate parameter sets for dimension {d}",
            params.len()
        )));
    }
    let results: Vec<Result<RecoveryReport, RecoveryError>> = (0..d)
        .into_par_iter()
        .map(|j| recover(&a.coordinate(j)?, f, &params[j], cap))
        .collect();
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (j, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => reports.push(r),
            Err(e) => errors.push((j, e.to_string())),
        }
    }
    if !errors.is_empty() {
        return Err(RecoveryError::Coordinates(errors));
    }

    let mut flags = BTreeSet::new();
    for rep in &reports {
        flags.extend(rep.flags.iter().cloned());
    }
    let n = a.len();
    let coords: Vec<WeightVector> = (0..d).map(|j| a.coordinate(j)).collect::<Result<_, _>>()?;

    let mut joint_coverage = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    for name in ["K_star", "K_star_star", "bar_P", "barbar_P", "tilde_P"] {
        let mut covered = vec![true; n];
        let mut size: u64 = 1;
        for (j, rep) in reports.iter().enumerate() {
            let vals = match name {
                "K_star" => Some(cgap_values(&rep.k_star, cap)?),
                "K_star_star" => Some(cgap_values(&rep.k_star_star, cap)?),
                "bar_P" => gap_values(&rep.bar_p, cap)?,
                "barbar_P" => gap_values(&rep.barbar_p, cap)?,
                _ => gap_values(&rep.tilde_p, cap)?,
            };
            let Some(vals) = vals else {
                covered = vec![false; 0];
                break;
            };
            size = size.saturating_mul(vals.len() as u64);
            let idx: BTreeSet<usize> = coverage_of(&vals, &rep.params.delta, &coords[j]).into_iter().collect();
            for (k, c) in covered.iter_mut().enumerate() {
                *c &= idx.contains(&k);
            }
        }
        if covered.len() == n {
            let count = covered.iter().filter(|c| **c).count();
            // union bound: the joint count can lose at most the per-coordinate losses
            let loss: usize = reports.iter().map(|r| n - r.coverage.get(name).copied().unwrap_or(0)).sum();
            if (count as i64) < n as i64 - loss as i64 {
                flags.insert(Flag::CertificationFailed(format!("joint coverage of {name} breaks the union bound")));
            }
            joint_coverage.insert(name.to_string(), count);
            sizes.insert(format!("{name}.image"), size);
        }
    }
    let coverage_floor = n as i64 - 2 * params.iter().map(|p| p.n_prime as i64).sum::<i64>();
    if reports.iter().all(|r| r.in_window()) {
        for name in ["K_star", "K_star_star"] {
            if (joint_coverage[name] as i64) < coverage_floor {
                flags.insert(Flag::CertificationFailed(format!("joint coverage of {name} is below n - 2Σn'")));
            }
        }
    }

    let k_star = ProductCgap {
        factors: reports.iter().map(|r| r.k_star.clone()).collect(),
    };
    let k_star_star = ProductCgap {
        factors: reports.iter().map(|r| r.k_star_star.clone()).collect(),
    };
    match k_star.image(cap) {
        Ok((_, lattice)) => {
            let expect: u64 = reports.iter().map(|r| r.sizes["K_star.lattice"]).product();
            if lattice as u64 != expect {
                flags.insert(Flag::CertificationFailed("product size is not multiplicative".into()));
            }
            sizes.insert("K_star.lattice".into(), lattice as u64);
        }
        Err(GapError::EnumerationCapExceeded { .. }) => {
            flags.insert(Flag::CertificationSkipped("product image exceeds the cap".into()));
        }
        Err(e) => return Err(e.into()),
    }

    let mut blocks = BTreeMap::new();
    let mut products = Vec::new();
    for name in ["bar_P", "barbar_P", "tilde_P"] {
        let factors: Vec<Gap> = reports
            .iter()
            .map(|r| match name {
                "bar_P" => r.bar_p.clone(),
                "barbar_P" => r.barbar_p.clone(),
                _ => r.tilde_p.clone(),
            })
            .collect();
        let mut s = vec![0];
        for fct in &factors {
            s.push(s.last().unwrap() + fct.rank());
        }
        let p = Gap::product(&factors);
        if !block_layout_ok(&p, &s) {
            flags.insert(Flag::CertificationFailed(format!("{name} generators break the block layout")));
        }
        if p.rank() != factors.iter().map(Gap::rank).sum::<usize>() {
            flags.insert(Flag::CertificationFailed(format!("{name} rank is not additive")));
        }
        blocks.insert(name.to_string(), s);
        products.push(p);
    }
    let tilde_p = products.pop().unwrap();
    let barbar_p = products.pop().unwrap();
    let bar_p = products.pop().unwrap();

    Ok(ProductReport {
        coordinates: reports,
        k_star,
        k_star_star,
        bar_p,
        barbar_p,
        tilde_p,
        joint_coverage,
        coverage_floor,
        sizes,
        blocks,
        flags,
    })
}

/// Every generator with index in `(s_{k−1}, s_k]` is nonzero in coordinate
/// `k` only.
pub fn block_layout_ok(p: &Gap, s: &[usize]) -> bool {
    p.generators().iter().enumerate().all(|(i, g)| {
        let k = (1..s.len()).find(|&k| s[k - 1] <= i && i < s[k]);
        k.is_some_and(|k| {
            g.iter()
                .enumerate()
                .all(|(c, v)| (c == k - 1) != v.is_zero())
        })
    })
}

#[cfg(test)]
mod tests;
