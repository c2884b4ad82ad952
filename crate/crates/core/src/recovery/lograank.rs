//! Progressions of the form `{Σ m_k g_k : m_k ∈ {−1, 0, 1}}` built greedily.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{block_layout_ok, RecoveryError};
use crate::arak;
use crate::concentration::conc_interval;
use crate::constants::Constants;
use crate::distributions::{
    self, weighted_sum_law, AtomicMeasure, DiscreteDistribution, DistributionError,
    WeightVector,
};
use crate::gap::Gap;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LograankSettings {
    /// Greedy steps stop at this rank.
    pub max_rank: usize,
    /// Support cap for the exact law of `S_a`.
    pub atom_cap: usize,
    /// Rounds of single-generator exchanges after each greedy step.
    pub exchange_rounds: usize,
}

impl Default for LograankSettings {
    fn default() -> Self {
        Self {
            max_rank: 8,
            atom_cap: distributions::DEFAULT_ATOM_CAP,
            exchange_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LograankReport {
    pub n: usize,
    pub r: usize,
    /// Entries not δ-close to the image.
    pub n_prime: usize,
    /// Coverage after each accepted step, starting from `{0}`.
    pub coverage_trace: Vec<usize>,
    /// Exact `Q(F_a, τ)` when the law fits in the cap.
    pub q: Option<f64>,
    pub p_val: f64,
    /// `c₈(|log q| + log(κ/δ) + 1)`, without the `κ/δ` term when `τ = 0`.
    pub rank_bound: Option<f64>,
    /// `c₈ p^{−1}(…)³`.
    pub n_prime_bound: Option<f64>,
    pub rank_check: Option<bool>,
    pub n_prime_check: Option<bool>,
    /// Bound checks only count when the constants are calibrated.
    pub report_only: bool,
}

/// All sums `Σ m_k g_k` with `m_k ∈ {−1, 0, 1}`.
fn pm_image(gens: &[Rational]) -> BTreeSet<Rational> {
    let mut img = BTreeSet::from([Rational::zero()]);
    for g in gens {
        let mut next = BTreeSet::new();
        for v in &img {
            next.insert(v - g);
            next.insert(v.clone());
            next.insert(v + g);
        }
        img = next;
    }
    img
}

fn close(img: &BTreeSet<Rational>, delta: &Rational, x: &Rational) -> bool {
    img.range(x - delta..)
        .next()
        .is_some_and(|v| (v - x).abs() <= *delta)
}

/// Distinct values with multiplicities.
fn tally(values: &[Rational]) -> Vec<(Rational, usize)> {
    let mut m: BTreeMap<Rational, usize> = BTreeMap::new();
    for v in values {
        *m.entry(v.clone()).or_default() += 1;
    }
    m.into_iter().collect()
}

fn coverage(img: &BTreeSet<Rational>, delta: &Rational, vals: &[(Rational, usize)]) -> usize {
    vals.iter().filter(|(v, _)| close(img, delta, v)).map(|(_, c)| c).sum()
}

/// Candidate generators that bring an uncovered value onto `base + g`: the
/// differences `|x − y|` for `y` in the base image, plus the best single
/// generator for the uncovered residual found by the rank-1 β search.
fn candidates(
    base: &BTreeSet<Rational>,
    delta: &Rational,
    vals: &[(Rational, usize)],
) -> Result<BTreeSet<Rational>, RecoveryError> {
    let mut out = BTreeSet::new();
    let mut residual = Vec::new();
    for (x, c) in vals {
        if close(base, delta, x) {
            continue;
        }
        residual.push((vec![x.clone()], rational::int(*c as i64)));
        residual.push((vec![-x.clone()], rational::int(*c as i64)));
        for y in base {
            let g = (x - y).abs();
            if !g.is_zero() {
                out.insert(g);
            }
        }
    }
    if !residual.is_empty() {
        let w = AtomicMeasure::new(1, residual)?;
        let b = arak::beta(&w, delta, 1, 3)?;
        if let Some(h) = b.witness().h().first() {
            out.insert(h.abs());
        }
    }
    Ok(out)
}

/// Best candidate for the slot next to `others`: highest coverage, then the
/// smallest generator.
fn best_for(
    others: &[Rational],
    delta: &Rational,
    vals: &[(Rational, usize)],
) -> Result<Option<(Rational, usize)>, RecoveryError> {
    let base = pm_image(others);
    let mut best: Option<(Rational, usize)> = None;
    for g in candidates(&base, delta, vals)? {
        let mut gens = others.to_vec();
        gens.push(g.clone());
        let c = coverage(&pm_image(&gens), delta, vals);
        if best.as_ref().is_none_or(|(_, bc)| c > *bc) {
            best = Some((g, c));
        }
    }
    Ok(best)
}

fn greedy(
    values: &[Rational],
    delta: &Rational,
    settings: &LograankSettings,
) -> Result<(Vec<Rational>, Vec<usize>), RecoveryError> {
    let vals = tally(values);
    let n = values.len();
    let mut gens: Vec<Rational> = Vec::new();
    let mut cov = coverage(&pm_image(&gens), delta, &vals);
    let mut trace = vec![cov];
    while cov < n && gens.len() < settings.max_rank {
        let Some((g, c)) = best_for(&gens, delta, &vals)? else {
            break;
        };
        if c <= cov {
            break;
        }
        gens.push(g);
        cov = c;
        // exchange: replace one generator at a time while coverage improves
        for _ in 0..settings.exchange_rounds {
            let mut improved = false;
            for i in 0..gens.len() {
                let mut others = gens.clone();
                others.remove(i);
                if let Some((g, c)) = best_for(&others, delta, &vals)? {
                    if c > cov {
                        others.insert(i, g);
                        gens = others;
                        cov = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        trace.push(cov);
    }
    Ok((gens, trace))
}

fn log_term(q: f64, kappa: &Rational, delta: &Rational, tau: &Rational) -> f64 {
    let base = q.ln().abs() + 1.0;
    if tau.is_positive() {
        if delta.is_zero() {
            f64::INFINITY
        } else {
            base + rational::to_f64(&(kappa / delta)).ln()
        }
    } else {
        base
    }
}

/// Greedy construction of a GAP with all dimensions 1 covering the entries
/// of `a` up to `δ`, with the rank and `n'` bounds evaluated under `c₈`.
pub fn lograank_construct(
    a: &WeightVector,
    f: &DiscreteDistribution,
    tau: &Rational,
    kappa: &Rational,
    delta: &Rational,
    constants: &Constants,
    settings: &LograankSettings,
) -> Result<(Gap, LograankReport), RecoveryError> {
    if a.dim() != 1 {
        return Err(DistributionError::NotOneDimensional(a.dim()).into());
    }
    if !kappa.is_positive() || delta.is_negative() || tau.is_negative() {
        return Err(RecoveryError::InvalidParams("kappa must be positive, tau and delta nonnegative".into()));
    }
    if delta > kappa {
        return Err(RecoveryError::InvalidParams("delta must not exceed kappa".into()));
    }
    let values = a.scalars();
    let (gens, trace) = greedy(&values, delta, settings)?;
    let n = values.len();
    let covered = *trace.last().expect("nonempty");

    let q = match weighted_sum_law(f, a, settings.atom_cap) {
        Ok(law) => conc_interval(&law, tau)
            .ok()
            .map(|c| c.value_f64()),
        Err(DistributionError::AtomCapExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let p_arg = if tau.is_positive() { tau / kappa } else { Rational::zero() };
    let p_val = rational::to_f64(&distributions::p_of(f, &p_arg));
    let term = q.map(|q| log_term(q, kappa, delta, tau));
    let rank_bound = term.map(|t| constants.c8 * t);
    let n_prime_bound = term.map(|t| constants.c8 / p_val * t.powi(3));
    let r = gens.len();
    let n_prime = n - covered;
    let gap = Gap::scalar(vec![Rational::from_integer(1.into()); r], gens)?;
    Ok((
        gap,
        LograankReport {
            n,
            r,
            n_prime,
            coverage_trace: trace,
            q,
            p_val,
            rank_check: rank_bound.map(|b| r as f64 <= b),
            n_prime_check: n_prime_bound.map(|b| n_prime as f64 <= b),
            rank_bound,
            n_prime_bound,
            report_only: !constants.calibrated,
        },
    ))
}

/// Rank and `n'` schedule for growing `n`: `R ≤ c₈ d((A+B) log b_n + 1)` and
/// `Σ n'_j ≤ c₈ d p^{−1}((A+B) log b_n + 1)³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSchedule {
    pub a_exp: f64,
    pub b_exp: f64,
    pub b_n: f64,
    /// Use `p(0)` instead of `p(τ/κ)`.
    #[serde(default)]
    pub use_p0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LograankProductReport {
    pub coordinates: Vec<LograankReport>,
    /// `R = Σ r_j`.
    pub rank: usize,
    /// Entries close to the product in every coordinate.
    pub joint_coverage: usize,
    pub blocks: Vec<usize>,
    pub layout_ok: bool,
    pub schedule_rank_bound: Option<f64>,
    pub schedule_n_prime_bound: Option<f64>,
}

/// Coordinate-wise construction and its product GAP.
pub fn lograank_product(
    a: &WeightVector,
    f: &DiscreteDistribution,
    per_coordinate: &[(Rational, Rational, Rational)],
    constants: &Constants,
    settings: &LograankSettings,
    schedule: Option<&LogSchedule>,
) -> Result<(Gap, LograankProductReport), RecoveryError> {
    let d = a.dim();
    if per_coordinate.len() != d {
        return Err(RecoveryError::InvalidParams(format!(
            "{} coordinate parameter sets for dimension {d}",
            per_coordinate.len()
        )));
    }
    let mut gaps = Vec::new();
    let mut reports = Vec::new();
    let mut covered = vec![true; a.len()];
    for (j, (tau, kappa, delta)) in per_coordinate.iter().enumerate() {
        let aj = a.coordinate(j)?;
        let (g, rep) = lograank_construct(&aj, f, tau, kappa, delta, constants, settings)?;
        let img = pm_image(&g.generators().iter().map(|x| x[0].clone()).collect::<Vec<_>>());
        for (k, c) in covered.iter_mut().enumerate() {
            *c &= close(&img, delta, &aj.entries()[k][0]);
        }
        gaps.push(g);
        reports.push(rep);
    }
    let mut blocks = vec![0];
    for g in &gaps {
        blocks.push(blocks.last().unwrap() + g.rank());
    }
    let product = Gap::product(&gaps);
    let layout_ok = block_layout_ok(&product, &blocks);
    let (schedule_rank_bound, schedule_n_prime_bound) = match schedule {
        Some(s) => {
            let t = (s.a_exp + s.b_exp) * s.b_n.ln() + 1.0;
            let p = if s.use_p0 {
                rational::to_f64(&distributions::p_of(f, &Rational::zero()))
            } else {
                reports.iter().map(|r| r.p_val).fold(f64::INFINITY, f64::min)
            };
            (
                Some(constants.c8 * d as f64 * t),
                Some(constants.c8 * d as f64 / p * t.powi(3)),
            )
        }
        None => (None, None),
    };
    Ok((
        product.clone(),
        LograankProductReport {
            rank: product.rank(),
            joint_coverage: covered.iter().filter(|c| **c).count(),
            coordinates: reports,
            blocks,
            layout_ok,
            schedule_rank_bound,
            schedule_n_prime_bound,
        },
    ))
}
