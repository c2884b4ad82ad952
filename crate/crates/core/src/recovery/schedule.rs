//! Rank and window schedules for growing `n`, with the explicit fallback
//! used when `n` is too small for the window.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{RecoveryError, RecoveryParams};
use crate::constants::Constants;
use crate::distributions::{DistributionError, WeightVector};
use crate::gap::Gap;
use crate::rational::{self, Rational};

/// Inputs of the `τ = δ = 0` schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm16Input {
    /// Exponent `A` in `q_j ≥ ε₁ b_n^{−A}`.
    pub a_exp: f64,
    pub theta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub b_n: f64,
    /// `p(0)`.
    pub p0: f64,
    /// Observed `Q(F_a^{(j)}, 0)` per coordinate.
    pub q: Vec<f64>,
    pub n: u64,
    #[serde(default)]
    pub constants: Constants,
}

/// Inputs of the general schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm19Input {
    pub a_exp: f64,
    pub b_exp: f64,
    pub d_exp: f64,
    pub theta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub b_n: f64,
    #[serde(with = "rational::serde_q")]
    pub tau: Rational,
    #[serde(with = "rational::serde_q")]
    pub kappa: Rational,
    #[serde(with = "rational::serde_q")]
    pub delta: Rational,
    /// `p(τ/κ)`.
    pub p_val: f64,
    pub q: Vec<f64>,
    pub n: u64,
    #[serde(default)]
    pub constants: Constants,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleOutcome {
    /// The window holds; run [`super::recover`] with these parameters.
    InWindow { params: RecoveryParams },
    /// `n` is too small: use [`fallback_gap`] with this `n'`.
    Fallback { n_prime: u64, window_lower: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub r: usize,
    /// `2A/θ` or `2(A+B)/(θ−D)`.
    pub r_bound: f64,
    pub n_prime: u64,
    pub coordinates: Vec<ScheduleOutcome>,
    /// Hypotheses that do not hold for the supplied numbers.
    pub notes: Vec<String>,
}

fn n_prime_for(eps2: f64, b_n: f64, theta: f64, n: u64) -> u64 {
    let v = (eps2 * b_n.powf(theta)).ceil();
    if v.is_finite() {
        (v.max(1.0) as u64).min(n.max(1))
    } else {
        n.max(1)
    }
}

/// Minimal `r ≥ 0` with `A < θ(r+1)/2`, then the window check for each
/// coordinate at `n' = ⌈ε₂ b_n^θ⌉`.
pub fn schedule_thm16(input: &Thm16Input) -> Result<ScheduleReport, RecoveryError> {
    if !(input.theta > 0.0 && input.a_exp > 0.0) {
        return Err(RecoveryError::InvalidSchedule("A and theta must be positive".into()));
    }
    let mut r = 0usize;
    while input.a_exp >= input.theta * (r + 1) as f64 / 2.0 {
        r += 1;
    }
    let n_prime = n_prime_for(input.eps2, input.b_n, input.theta, input.n);
    let mut notes = Vec::new();
    let floor_q = input.eps1 * input.b_n.powf(-input.a_exp);
    let mut coordinates = Vec::new();
    for (j, &q) in input.q.iter().enumerate() {
        if q < floor_q {
            notes.push(format!("coordinate {j}: q = {q} is below eps1 b_n^-A = {floor_q}"));
        }
        let params = RecoveryParams {
            q,
            tau: Rational::zero(),
            kappa: Rational::from_integer(1.into()),
            delta: Rational::zero(),
            r,
            n_prime,
            p_val: input.p0,
            constants: input.constants.clone(),
        };
        coordinates.push(outcome(params, input.n, None));
    }
    Ok(ScheduleReport {
        r,
        r_bound: 2.0 * input.a_exp / input.theta,
        n_prime,
        coordinates,
        notes,
    })
}

fn outcome(params: RecoveryParams, n: u64, chain: Option<f64>) -> ScheduleOutcome {
    let lower = params.window_lower();
    let n_prime = params.n_prime as f64;
    let ok = lower.is_finite() && lower <= n_prime && params.n_prime <= n && chain.is_none_or(|c| lower <= c);
    if ok {
        ScheduleOutcome::InWindow { params }
    } else {
        ScheduleOutcome::Fallback {
            n_prime: params.n_prime,
            window_lower: lower,
        }
    }
}

/// Minimal `r ≥ 1` with `A + B < (θ − D)(r+1)/2`, then the window check for
/// each coordinate.
pub fn schedule_thm19(input: &Thm19Input) -> Result<ScheduleReport, RecoveryError> {
    if input.theta <= input.d_exp {
        return Err(RecoveryError::InvalidSchedule("theta must exceed D".into()));
    }
    if !(input.kappa > Rational::zero()) || !(input.delta > Rational::zero()) {
        return Err(RecoveryError::InvalidSchedule("kappa and delta must be positive".into()));
    }
    let gap = input.theta - input.d_exp;
    let ab = input.a_exp + input.b_exp;
    let mut r = 1usize;
    while ab >= gap * (r + 1) as f64 / 2.0 {
        r += 1;
    }
    let n_prime = n_prime_for(input.eps2, input.b_n, input.theta, input.n);
    let mut notes = Vec::new();
    let rho = rational::to_f64(&(&input.delta / &input.kappa));
    if input.p_val < input.eps3 * input.b_n.powf(-input.d_exp) {
        notes.push("p(tau/kappa) is below eps3 b_n^-D".into());
    }
    if rho < input.eps4 * input.b_n.powf(-input.b_exp) || rho > 1.0 {
        notes.push("rho = delta/kappa is outside [eps4 b_n^-B, 1]".into());
    }
    if input.delta > input.kappa.clone().max(input.tau.clone()) {
        notes.push("delta exceeds max(kappa, tau)".into());
    }
    let floor_q = input.eps1 * input.b_n.powf(-input.a_exp);
    // the middle term of the window chain, which the hypotheses bound by ε₂ b_n^θ
    let c = 2.0 * input.constants.c4.powi(r as i32 + 1) * ((r + 1) as f64).powf(2.5 * r as f64);
    let middle = (c / (input.eps1 * input.eps4) * input.b_n.powf(ab)).powf(2.0 / (r + 1) as f64)
        / (input.eps3 * input.b_n.powf(-input.d_exp));
    let target = input.eps2 * input.b_n.powf(input.theta);
    if middle > target {
        notes.push(format!("n is not yet large enough: {middle:.3} > eps2 b_n^theta = {target:.3}"));
    }
    let mut coordinates = Vec::new();
    for (j, &q) in input.q.iter().enumerate() {
        if q < floor_q {
            notes.push(format!("coordinate {j}: q = {q} is below eps1 b_n^-A = {floor_q}"));
        }
        let params = RecoveryParams {
            q,
            tau: input.tau.clone(),
            kappa: input.kappa.clone(),
            delta: input.delta.clone(),
            r,
            n_prime,
            p_val: input.p_val,
            constants: input.constants.clone(),
        };
        coordinates.push(outcome(params, input.n, Some(target)));
    }
    Ok(ScheduleReport {
        r,
        r_bound: 2.0 * ab / gap,
        n_prime,
        coordinates,
        notes,
    })
}

/// `K(n') = {Σ_{k > n'} s_k a_k : s_k ∈ {−1, 0, 1}}` with the entries sorted
/// by decreasing absolute value (ties by index): a GAP of rank `n − n'` with
/// all dimensions 1.
pub fn fallback_gap(a: &WeightVector, n_prime: usize) -> Result<Gap, RecoveryError> {
    if a.dim() != 1 {
        return Err(DistributionError::NotOneDimensional(a.dim()).into());
    }
    let order = a.order_by_decreasing_norm();
    let tail: Vec<Rational> = order
        .iter()
        .skip(n_prime)
        .map(|&k| a.entries()[k][0].clone())
        .collect();
    let dims = vec![Rational::from_integer(1.into()); tail.len()];
    Ok(Gap::scalar(dims, tail)?)
}
