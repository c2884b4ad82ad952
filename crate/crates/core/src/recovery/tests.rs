use super::*;
use crate::concentration::conc_interval;
use crate::distributions::weighted_sum_law;
use crate::gap::DEFAULT_ENUM_CAP;
use crate::rational::{int, ratio};

fn params(q: f64, tau: Rational, delta: Rational, r: usize, n_prime: u64, p_val: f64, c4: f64) -> RecoveryParams {
    RecoveryParams {
        q,
        kappa: if tau.is_zero() && delta.is_zero() { int(1) } else { tau.clone().max(delta.clone()) },
        tau,
        delta,
        r,
        n_prime,
        p_val,
        constants: Constants {
            c4,
            ..Constants::default()
        },
    }
}

fn exact_q(a: &WeightVector, f: &DiscreteDistribution, tau: &Rational) -> f64 {
    let law = weighted_sum_law(f, a, 1_000_000).unwrap();
    conc_interval(&law, tau).unwrap().value_f64()
}

/// `g·(1, 2, …, levels)` repeated, then `outliers` huge entries.
fn planted(g: Rational, levels: i64, copies: usize, outliers: &[i64]) -> WeightVector {
    let mut v = Vec::new();
    for _ in 0..copies {
        for j in 1..=levels {
            v.push(&g * int(j));
        }
    }
    v.extend(outliers.iter().map(|o| int(*o)));
    WeightVector::scalar(&v).unwrap()
}

#[test]
fn select_m_examples() {
    let p = params(0.5, int(1), int(1), 0, 64, 0.5, 1.0);
    assert_eq!(select_m(&p).unwrap(), 1);
    let p0 = params(1.0, int(0), int(0), 0, 4, 1.0, 1.0);
    // y = 2/√4 = 1 exactly, so m = 2 at n' = 4 and m = 1 beyond
    assert_eq!(select_m(&p0).unwrap(), 2);
    for n_prime in 5..40 {
        assert_eq!(select_m(&RecoveryParams { n_prime, ..p0.clone() }).unwrap(), 1);
    }
    let tight = params(0.5, int(1), int(1), 0, 31, 0.5, 1.0);
    assert!(matches!(select_m(&tight), Err(RecoveryError::InvalidWindow { .. })));
}

#[test]
fn select_m_grows_like_inverse_q() {
    let base = params(0.01, int(0), int(0), 1, 2_000_000, 1.0, 10.0);
    let m1 = select_m(&base).unwrap() as f64;
    let m2 = select_m(&RecoveryParams { q: 0.001, ..base.clone() }).unwrap() as f64;
    assert!((m2 / m1 - 10.0).abs() < 1.0, "{m1} {m2}");
}

#[test]
fn planted_progression_is_recovered() {
    let a = planted(int(3), 3, 4, &[]);
    let f = DiscreteDistribution::rademacher();
    let q = exact_q(&a, &f, &int(0));
    let p = params(q, int(0), int(0), 1, 2, 0.5, 2.0);
    let rep = recover(&a, &f, &p, DEFAULT_ENUM_CAP).unwrap();
    assert!(rep.certified(), "{:?}", rep.flags);
    assert_eq!(rep.coverage["K_star"], a.len());
    // with m = 77 any step 3/k with k ≤ 12 fits, so only divisibility is forced
    assert_eq!(rep.k_star.rank(), 1);
    assert!((int(3) / &rep.k_star.h()[0]).is_integer(), "{:?}", rep.k_star.h());
    assert!(rep.sizes["K_star.image"] <= rep.m as u64);
    assert!(rep.barbar_p.is_proper(DEFAULT_ENUM_CAP).unwrap());
}

#[test]
fn outliers_are_cut_by_truncation() {
    let a = planted(int(1), 2, 10, &[1000, -1001, 1003]);
    let f = DiscreteDistribution::rademacher();
    let p = params(0.1, int(0), int(0), 1, 6, 0.5, 1.0);
    let rep = recover(&a, &f, &p, DEFAULT_ENUM_CAP).unwrap();
    assert!(rep.certified(), "{:?}", rep.flags);
    assert!(rep.coverage["K_star"] >= a.len() - 2 * 6);
    for k in 20..23 {
        assert!(rep.uncovered.contains(&k));
    }
}

#[test]
fn large_delta_gives_zero_progression() {
    let a = WeightVector::scalar(&[int(1), int(2), int(3), int(40)]).unwrap();
    let f = DiscreteDistribution::rademacher();
    // ‖a‖² = 1614, n' = 4: δ = 21 > √(1614/4) ≈ 20.1
    let p = params(0.5, int(21), int(21), 1, 4, 0.5, 1.0);
    let rep = recover(&a, &f, &p, DEFAULT_ENUM_CAP).unwrap();
    assert!(rep.flags.contains(&Flag::DegenerateTruncation));
    assert_eq!(rep.k_star, Cgap::zero());
    assert_eq!(rep.coverage["K_star"], 3);
}

#[test]
fn point_mass_law_is_trivial() {
    let a = WeightVector::ones(4);
    let f = DiscreteDistribution::point_mass(vec![int(1)]);
    let p = params(1.0, int(0), int(0), 0, 1, 1.0, 1.0);
    assert_eq!(recover(&a, &f, &p, DEFAULT_ENUM_CAP).unwrap_err(), RecoveryError::TrivialCase);
}

fn assert_scaled(base: &RecoveryReport, other: &RecoveryReport, l: &Rational) {
    assert_eq!(other.m, base.m);
    assert_eq!(other.beta, base.beta);
    assert_eq!(other.k, base.k.scaled(l));
    assert_eq!(other.k_star, base.k_star.scaled(l));
    assert_eq!(other.k_star_star, base.k_star_star.scaled(l));
    assert_eq!(other.bar_p, base.bar_p.scaled(l));
    assert_eq!(other.barbar_p, base.barbar_p.scaled(l));
    assert_eq!(other.tilde_p, base.tilde_p.scaled(l));
    assert_eq!(other.coverage, base.coverage);
    assert_eq!(other.sizes, base.sizes);
    assert_eq!(other.flags, base.flags);
    assert_eq!(other.generator_norm_bound_sq, &base.generator_norm_bound_sq * l * l);
}

#[test]
fn recovery_is_scaling_equivariant() {
    let a = planted(ratio(3, 2), 3, 5, &[700, -650]);
    let f = DiscreteDistribution::rademacher();
    for (tau, delta) in [(int(0), int(0)), (ratio(1, 2), ratio(1, 4))] {
        let p = params(0.05, tau, delta, 1, 5, 0.5, 1.0);
        let base = recover(&a, &f, &p, DEFAULT_ENUM_CAP).unwrap();
        for l in [int(2), ratio(1, 3)] {
            let other = recover(&a.scaled(&l), &f, &p.scaled(&l), DEFAULT_ENUM_CAP).unwrap();
            assert_scaled(&base, &other, &l);
        }
    }
}

#[test]
fn product_of_two_planted_coordinates() {
    let n = 24;
    let entries: Vec<Point> = (0..n)
        .map(|k| vec![int(2 * (1 + k as i64 % 3)), ratio(5 * (1 + k as i64 % 2), 2)])
        .collect();
    let a = WeightVector::new(2, entries).unwrap();
    let f = DiscreteDistribution::rademacher();
    let p = params(0.1, int(0), int(0), 1, 3, 0.5, 2.0);
    let rep = recover_multid(&a, &f, &[p.clone(), p], DEFAULT_ENUM_CAP).unwrap();
    assert!(rep.certified(), "{:?}", rep.flags);
    assert_eq!(rep.joint_coverage["K_star"], n);
    for name in ["bar_P", "barbar_P", "tilde_P"] {
        assert_eq!(rep.blocks[name].len(), 3);
    }
    assert_eq!(
        rep.bar_p.rank(),
        rep.coordinates.iter().map(|c| c.bar_p.rank()).sum::<usize>()
    );
    assert!(block_layout_ok(&rep.bar_p, &rep.blocks["bar_P"]));
}

#[test]
fn block_layout_detects_mixed_generators() {
    let g = Gap::new(2, vec![int(1), int(1)], vec![vec![int(1), int(0)], vec![int(1), int(1)]]).unwrap();
    assert!(!block_layout_ok(&g, &[0, 1, 2]));
    let g = Gap::new(2, vec![int(1), int(1)], vec![vec![int(1), int(0)], vec![int(0), int(3)]]).unwrap();
    assert!(block_layout_ok(&g, &[0, 1, 2]));
    assert!(!block_layout_ok(&g, &[0, 2, 2]));
}

#[test]
fn schedule_ranks() {
    let base = Thm16Input {
        a_exp: 1.0,
        theta: 1.0,
        eps1: 1.0,
        eps2: 1.0,
        b_n: 10.0,
        p0: 0.5,
        q: vec![0.1],
        n: 100,
        constants: Constants::default(),
    };
    assert_eq!(schedule_thm16(&base).unwrap().r, 2);
    let small = Thm16Input { a_exp: 0.4, ..base.clone() };
    assert_eq!(schedule_thm16(&small).unwrap().r, 0);

    let t19 = Thm19Input {
        a_exp: 1.0,
        b_exp: 1.0,
        d_exp: 1.0,
        theta: 3.0,
        eps1: 1.0,
        eps2: 1.0,
        eps3: 1.0,
        eps4: 1.0,
        b_n: 10.0,
        tau: int(1),
        kappa: int(1),
        delta: int(1),
        p_val: 0.5,
        q: vec![0.1, 0.2],
        n: 100,
        constants: Constants::default(),
    };
    let rep = schedule_thm19(&t19).unwrap();
    assert_eq!(rep.r, 2);
    assert_eq!(rep.coordinates.len(), 2);
    let zero = Thm19Input {
        a_exp: 0.0,
        b_exp: 0.0,
        d_exp: 0.0,
        theta: 1.0,
        ..t19.clone()
    };
    assert_eq!(schedule_thm19(&zero).unwrap().r, 1);
    let bad = Thm19Input { theta: 1.0, ..t19 };
    assert!(matches!(schedule_thm19(&bad), Err(RecoveryError::InvalidSchedule(_))));
}

#[test]
fn schedule_falls_back_for_small_n() {
    let input = Thm16Input {
        a_exp: 1.0,
        theta: 1.0,
        eps1: 1.0,
        eps2: 1.0,
        b_n: 4.0,
        p0: 0.5,
        q: vec![0.01],
        n: 6,
        constants: Constants::default(),
    };
    let rep = schedule_thm16(&input).unwrap();
    assert_eq!(rep.n_prime, 4);
    assert!(matches!(rep.coordinates[0], ScheduleOutcome::Fallback { n_prime: 4, .. }));

    let a = WeightVector::scalar(&[int(9), int(-7), int(5), int(4), int(2), int(-1)]).unwrap();
    let k = fallback_gap(&a, 4).unwrap();
    assert_eq!(k.rank(), 2);
    assert_eq!(k.generators(), &[vec![int(2)], vec![int(-1)]]);
    let img = k.image(DEFAULT_ENUM_CAP).unwrap();
    assert!(img.len() <= 9);
    assert!(img.contains(&vec![int(2)]) && img.contains(&vec![int(-1)]));
}

#[test]
fn lograank_recovers_planted_rank_two() {
    let (g1, g2) = (int(5), int(17));
    let mut v = Vec::new();
    for s1 in -1..=1i64 {
        for s2 in -1..=1i64 {
            if s1 != 0 || s2 != 0 {
                v.push(&g1 * int(s1) + &g2 * int(s2));
            }
        }
    }
    let a = WeightVector::scalar(&v).unwrap();
    let f = DiscreteDistribution::rademacher();
    let (gap, rep) = lograank_construct(
        &a,
        &f,
        &int(0),
        &int(1),
        &int(0),
        &Constants::default(),
        &LograankSettings::default(),
    )
    .unwrap();
    assert_eq!(rep.r, 2);
    assert_eq!(rep.n_prime, 0);
    assert!(gap.dims().iter().all(|d| *d == int(1)));
    assert!(rep.coverage_trace.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep.q.is_some() && rep.rank_check.is_some());
}

#[test]
fn lograank_zero_rank_when_entries_are_small() {
    let a = WeightVector::scalar(&[ratio(1, 4), ratio(-1, 3), int(0)]).unwrap();
    let f = DiscreteDistribution::rademacher();
    let (gap, rep) = lograank_construct(
        &a,
        &f,
        &int(1),
        &int(1),
        &ratio(1, 2),
        &Constants::default(),
        &LograankSettings::default(),
    )
    .unwrap();
    assert_eq!(gap.rank(), 0);
    assert_eq!(rep.n_prime, 0);
}

#[test]
fn lograank_product_keeps_blocks() {
    let entries: Vec<Point> = (0..12)
        .map(|k| vec![int(3 * (k % 3 - 1)), int(7 * ((k / 3) % 2) + 2 * (k % 2))])
        .collect();
    let a = WeightVector::new(2, entries).unwrap();
    let f = DiscreteDistribution::rademacher();
    let pc = vec![(int(0), int(1), int(0)), (int(0), int(1), int(0))];
    let sched = LogSchedule {
        a_exp: 1.0,
        b_exp: 0.0,
        b_n: 12.0,
        use_p0: true,
    };
    let (gap, rep) = lograank_product(
        &a,
        &f,
        &pc,
        &Constants::default(),
        &LograankSettings::default(),
        Some(&sched),
    )
    .unwrap();
    assert!(rep.layout_ok);
    assert_eq!(gap.rank(), rep.rank);
    assert_eq!(rep.joint_coverage, 12);
    assert!(rep.schedule_rank_bound.is_some());
}
