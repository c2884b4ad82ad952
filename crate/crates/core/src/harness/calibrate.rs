//! Smallest constants under which every instance of the suites passes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::suites::{self, Thm4Case};
use super::{Config, HarnessError};
use crate::constants::Constants;

/// Grid `2^{k/16}` for the threshold constant of the window.
fn c4_grid() -> impl Iterator<Item = f64> {
    (-128..=128).map(|k| 2f64.powf(k as f64 / 16.0))
}

fn joint_c4(cases: &[Thm4Case], base: &Constants, cap: usize) -> Option<f64> {
    c4_grid().find(|&c4| {
        let k = Constants { c4, ..base.clone() };
        cases.par_iter().all(|c| c.passes(&k, cap))
    })
}

/// Smallest grid value of `c₄` at which the case recovers inside the window
/// with every check passing.
pub fn c4_for_instance(case: &Thm4Case, base: &Constants, cap: usize) -> Option<f64> {
    c4_grid().find(|&c4| case.passes(&Constants { c4, ..base.clone() }, cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub constants: Constants,
    /// Suites whose constants differ from the global ones.
    pub suite_constants: BTreeMap<String, Constants>,
    /// Observed extremal ratio per constant and suite.
    pub observed: BTreeMap<String, BTreeMap<String, f64>>,
    /// Constants no grid value could satisfy.
    pub unresolved: Vec<String>,
}

impl CalibrationReport {
    /// `config` with the calibrated constants in place of its own.
    pub fn apply(&self, config: &Config) -> Config {
        Config {
            constants: self.constants.clone(),
            suite_constants: self.suite_constants.clone(),
            ..config.clone()
        }
    }
}

fn keep_max(map: &mut BTreeMap<String, f64>, key: &str, v: f64) {
    if v.is_finite() {
        let e = map.entry(key.to_string()).or_insert(v);
        *e = e.max(v);
    }
}

/// Runs the suites that carry constants with every constant at its default
/// and records the smallest value of each constant that makes all their
/// instances pass. The result is marked calibrated.
///
/// `c₄` is the one constant whose admissible values depend on the family;
/// the global value comes from the thm4 family and thm5 gets an override.
pub fn calibrate(config: &Config) -> Result<CalibrationReport, HarnessError> {
    let base = Constants::default();
    let mut cfg = config.clone();
    cfg.constants = base.clone();
    let mut observed: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    let mut unresolved = Vec::new();

    for suite in ["lemma1", "lograank"] {
        let out = suites::run_suite(suite, &cfg)?;
        for (k, v) in &out.report.calibration {
            keep_max(&mut best, k, *v);
        }
        observed.insert(suite.to_string(), out.report.calibration);
    }

    let (c2, thm2_obs) = suites::thm2_family_ratio(&cfg)?;
    keep_max(&mut best, "c2", c2);
    observed.insert("check_thm2".into(), thm2_obs);

    // c4 is calibrated per suite: the window of each family is narrow and
    // the two families need not share one
    let thm4_cases = suites::thm4_cases(&cfg)?;
    let mut obs4 = BTreeMap::new();
    match joint_c4(&thm4_cases, &base, cfg.enum_cap) {
        Some(c4) => {
            keep_max(&mut best, "c4", c4);
            obs4.insert("c4".to_string(), c4);
            let k = Constants { c4, ..base.clone() };
            for case in &thm4_cases {
                if let Some(c3) = case.implied_c3(&k, cfg.enum_cap) {
                    keep_max(&mut obs4, "c3", c3);
                    keep_max(&mut best, "c3", c3);
                }
            }
        }
        None => unresolved.push("thm4.c4".into()),
    }
    observed.insert("thm4".into(), obs4);
    let thm5_cases: Vec<Thm4Case> = suites::thm5_cases(&cfg)?.into_iter().flatten().collect();
    let c4_thm5 = joint_c4(&thm5_cases, &base, cfg.enum_cap);
    match c4_thm5 {
        Some(c4) => {
            observed.insert("thm5".into(), BTreeMap::from([("c4".to_string(), c4)]));
        }
        None => unresolved.push("thm5.c4".into()),
    }

    let get = |k: &str| best.get(k).copied().filter(|v| *v > 0.0);
    let constants = Constants {
        c2: get("c2").unwrap_or(base.c2),
        c3: get("c3").unwrap_or(base.c3),
        c4: get("c4").unwrap_or(base.c4),
        c8: get("c8").unwrap_or(base.c8),
        esseen: get("esseen").unwrap_or(base.esseen),
        calibrated: true,
        ..base
    };
    let mut suite_constants = BTreeMap::new();
    if let Some(c4) = c4_thm5 {
        suite_constants.insert("thm5".to_string(), Constants { c4, ..constants.clone() });
    }
    Ok(CalibrationReport {
        constants,
        suite_constants,
        observed,
        unresolved,
    })
}
