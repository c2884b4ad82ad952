//! Seeded instance families, batch suites over them, calibration of the
//! absolute constants, and CSV persistence.

mod calibrate;
mod suites;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concentration::McSettings;
use crate::constants::Constants;
use crate::distributions::{self, DiscreteDistribution, WeightVector};
use crate::gap::{self, Gap};
use crate::rational::{self, int, Point, Rational};

pub use calibrate::{c4_for_instance, calibrate, CalibrationReport};
pub use suites::{
    lograank_instances, random_integer_measure, random_law, random_polytope, run_suite, thm4_cases, thm5_cases,
    SuiteOutput, Thm4Case, LEMMA1_MAX_SLOPE, SUITES, THM4_N, THM5_N,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ground truth of a planted instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub gap: Gap,
    pub outliers: BTreeSet<usize>,
    #[serde(with = "rational::serde_q")]
    pub delta: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub weight: WeightVector,
    pub law: DiscreteDistribution,
    pub planted: Option<Planted>,
    pub seed: u64,
}

impl Instance {
    /// Entries outside `[planted image]_δ₀` that are not recorded outliers.
    pub fn planted_violations(&self, cap: usize) -> Result<Vec<usize>, gap::GapError> {
        let Some(p) = &self.planted else {
            return Ok(Vec::new());
        };
        let img = p.gap.image(cap)?;
        let covered: BTreeSet<usize> = gap::covered_indices(&img, &p.delta, &self.weight).into_iter().collect();
        Ok((0..self.weight.len())
            .filter(|k| !covered.contains(k) && !p.outliers.contains(k))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `g·j` with `j` uniform in `1..=levels`.
    Ap,
    /// `j₁g₁ + j₂g₂` with `j_i` uniform in `−levels..=levels`, zero excluded.
    Gap2,
    /// An AP plus entries of size about `outlier_scale`.
    Outliers,
    /// Integers uniform in `1..=outlier_scale`; nothing planted.
    DenseRandom,
    /// Independent APs in each of `d` coordinates, plus `outliers` entries
    /// that are huge in every coordinate.
    ProductD,
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown kind {s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Rademacher,
    /// `P(0) = 1/2`, `P(±1) = 1/4`.
    Lazy,
}

impl LawKind {
    pub fn law(self) -> DiscreteDistribution {
        match self {
            LawKind::Rademacher => DiscreteDistribution::rademacher(),
            LawKind::Lazy => DiscreteDistribution::new(
                1,
                vec![
                    (vec![int(-1)], rational::ratio(1, 4)),
                    (vec![int(0)], rational::ratio(1, 2)),
                    (vec![int(1)], rational::ratio(1, 4)),
                ],
            )
            .expect("valid law"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    pub n: usize,
    /// Generators; `product_d` uses one per coordinate.
    #[serde(with = "rational::serde_q::vec")]
    pub g: Vec<Rational>,
    pub levels: i64,
    /// Level `j` is drawn with weight `decay^{j−1}`; 1 gives uniform levels.
    pub decay: f64,
    pub outliers: usize,
    pub outlier_scale: i64,
    pub d: usize,
    pub law: LawKind,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            n: 50,
            g: vec![int(3), int(7)],
            levels: 3,
            decay: 1.0,
            outliers: 5,
            outlier_scale: 1_000_000,
            d: 2,
            law: LawKind::Rademacher,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown suite {0}")]
    UnknownSuite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Distribution(#[from] distributions::DistributionError),
    #[error(transparent)]
    Gap(#[from] gap::GapError),
}

struct Levels(WeightedIndex<f64>);

impl Levels {
    fn new(p: &PlantParams) -> Result<Self, HarnessError> {
        let w = (0..p.levels).map(|j| p.decay.powi(j as i32));
        WeightedIndex::new(w)
            .map(Levels)
            .map_err(|e| HarnessError::InvalidParams(format!("level weights: {e}")))
    }

    fn draw(&self, rng: &mut ChaCha8Rng, g: &Rational) -> Rational {
        g * int(self.0.sample(rng) as i64 + 1)
    }
}

/// `k` entries of size about `scale` with random signs, in every coordinate.
fn huge(rng: &mut ChaCha8Rng, k: usize, scale: i64, d: usize) -> Vec<Point> {
    (0..k)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let s = if rng.gen_bool(0.5) { 1 } else { -1 };
                    int(s * (scale + rng.gen_range(0..=scale)))
                })
                .collect()
        })
        .collect()
}

/// Shuffles `base` followed by `extra`; returns the positions of `extra`.
fn shuffle_in(rng: &mut ChaCha8Rng, mut base: Vec<Point>, extra: Vec<Point>) -> (Vec<Point>, BTreeSet<usize>) {
    let first = base.len();
    base.extend(extra);
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.shuffle(rng);
    let marked = order.iter().enumerate().filter(|(_, &k)| k >= first).map(|(i, _)| i).collect();
    (order.iter().map(|&k| base[k].clone()).collect(), marked)
}

/// Deterministic instance of the given family.
pub fn gen_planted(kind: Kind, params: &PlantParams, seed: u64) -> Result<Instance, HarnessError> {
    let bad = |s: &str| Err(HarnessError::InvalidParams(s.into()));
    if params.n == 0 || params.levels < 1 {
        return bad("n and levels must be positive");
    }
    let needed = match kind {
        Kind::Gap2 => 2,
        Kind::ProductD => params.d,
        Kind::DenseRandom => 0,
        _ => 1,
    };
    if params.g.len() < needed || params.g.iter().take(needed).any(|g| g.is_zero()) {
        return bad("not enough nonzero generators");
    }
    if params.outlier_scale < 1 || (matches!(kind, Kind::Outliers | Kind::ProductD) && params.outliers > params.n) {
        return bad("need outliers <= n and a positive outlier_scale");
    }
    let mut rng = rng(seed);
    let levels = Levels::new(params)?;
    let zero = Rational::zero();
    let dims = vec![int(params.levels)];
    let (entries, planted): (Vec<Point>, Option<Planted>) = match kind {
        Kind::Ap => {
            let v = (0..params.n).map(|_| vec![levels.draw(&mut rng, &params.g[0])]).collect();
            let gap = Gap::scalar(dims, vec![params.g[0].clone()])?;
            (v, Some(Planted { gap, outliers: BTreeSet::new(), delta: zero }))
        }
        Kind::Gap2 => {
            let mut v = Vec::new();
            while v.len() < params.n {
                let j1 = rng.gen_range(-params.levels..=params.levels);
                let j2 = rng.gen_range(-params.levels..=params.levels);
                if j1 != 0 || j2 != 0 {
                    v.push(vec![&params.g[0] * int(j1) + &params.g[1] * int(j2)]);
                }
            }
            let l = int(params.levels);
            let gap = Gap::scalar(vec![l.clone(), l], params.g[..2].to_vec())?;
            (v, Some(Planted { gap, outliers: BTreeSet::new(), delta: zero }))
        }
        Kind::Outliers => {
            let base = (0..params.n - params.outliers)
                .map(|_| vec![levels.draw(&mut rng, &params.g[0])])
                .collect();
            let extra = huge(&mut rng, params.outliers, params.outlier_scale, 1);
            let (v, outliers) = shuffle_in(&mut rng, base, extra);
            let gap = Gap::scalar(dims, vec![params.g[0].clone()])?;
            (v, Some(Planted { gap, outliers, delta: zero }))
        }
        Kind::DenseRandom => {
            let v = (0..params.n).map(|_| vec![int(rng.gen_range(1..=params.outlier_scale))]).collect();
            (v, None)
        }
        Kind::ProductD => {
            let base = (0..params.n - params.outliers)
                .map(|_| (0..params.d).map(|j| levels.draw(&mut rng, &params.g[j])).collect())
                .collect();
            let extra = huge(&mut rng, params.outliers, params.outlier_scale, params.d);
            let (v, outliers) = shuffle_in(&mut rng, base, extra);
            let factors: Vec<Gap> = (0..params.d)
                .map(|j| Gap::scalar(dims.clone(), vec![params.g[j].clone()]))
                .collect::<Result<_, _>>()?;
            (v, Some(Planted { gap: Gap::product(&factors), outliers, delta: zero }))
        }
    };
    // the scalar X_k multiplies every coordinate of a_k
    let dim = if kind == Kind::ProductD { params.d } else { 1 };
    let law = params.law.law();
    Ok(Instance {
        id: format!("{}-{seed}", serde_json::to_value(kind)?.as_str().unwrap_or("instance")),
        weight: WeightVector::new(dim, entries)?,
        law,
        planted,
        seed,
    })
}

/// Run configuration: constants, enumeration caps and Monte Carlo sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub constants: Constants,
    /// Per-suite overrides written by the calibration run.
    pub suite_constants: BTreeMap<String, Constants>,
    pub enum_cap: usize,
    pub atom_cap: usize,
    pub mc_samples: usize,
    /// Seeds of the Monte Carlo repetitions.
    pub mc_seeds: Vec<u64>,
    /// Overrides the default instance count of every suite.
    pub instances: Option<usize>,
    /// Base seed; instance `i` uses `seed + i`.
    pub seed: u64,
    /// Random probes per instance in the β oracle.
    pub probes: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            constants: Constants::default(),
            suite_constants: BTreeMap::new(),
            enum_cap: gap::DEFAULT_ENUM_CAP,
            atom_cap: distributions::DEFAULT_ATOM_CAP,
            mc_samples: 100_000,
            mc_seeds: vec![1, 2, 3],
            instances: None,
            seed: 0,
            probes: 10_000,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(std::fs::write(path, text)?)
    }

    /// The constants a suite runs with.
    pub fn constants_for(&self, suite: &str) -> &Constants {
        self.suite_constants.get(suite).unwrap_or(&self.constants)
    }

    pub fn mc(&self, seed: u64) -> McSettings {
        McSettings { samples: self.mc_samples, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    pub passes: usize,
    pub failures: Vec<(String, String)>,
    /// Largest observed ratio per constant (the smallest value of the
    /// constant under which every instance passes).
    pub calibration: BTreeMap<String, f64>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.passes == self.instances
    }
}

/// One line of the CSV ledger. Missing values are written as empty cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub suite: String,
    pub id: String,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub r: Option<usize>,
    pub m: Option<u64>,
    pub tau: Option<String>,
    pub kappa: Option<String>,
    pub delta: Option<String>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub coverage: Option<usize>,
    pub flags: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "suite", "id", "n", "d", "r", "m", "tau", "kappa", "delta", "lhs", "rhs", "slack", "coverage", "flags",
];

/// Writes `rows` to `out` under the fixed header. Rows are emitted in the
/// order given.
pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Appends `rows` to the file at `path`, writing the header only when the
/// file is new or empty.
pub fn report_csv(rows: &[CsvRow], path: &Path) -> Result<(), HarnessError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

