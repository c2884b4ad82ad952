use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use lostructure_core::arak::{self, check_thm2};
use lostructure_core::concentration::{conc_interval, conc_zero};
use lostructure_core::distributions::{
    levy_measure_star, weighted_sum_law, AtomicMeasure, CompoundPoissonSpec, DiscreteDistribution,
    WeightVector,
};
use lostructure_core::gap::{embed_proper, mahler_sandwich, Gap, SymmetricPolytope};
use lostructure_core::harness::{
    self, calibrate, gen_planted, report_csv, run_suite, Config, CsvRow, Instance, Kind,
    PlantParams, Thm4Case,
};
use lostructure_core::rational::{self, Rational};
use lostructure_core::recovery::{
    fallback_gap, lograank_construct, recover, recover_multid, schedule_thm16, schedule_thm19,
    LograankSettings, RecoveryParams, ScheduleOutcome, ScheduleReport, Thm16Input, Thm19Input,
};

/// Concentration functions, GAP utilities and structure recovery for sums of
/// weighted random variables. Every verb prints JSON on stdout.
#[derive(Parser)]
#[command(name = "lostructure", version)]
struct Cli {
    /// Config JSON: constants, caps and Monte Carlo settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON artifacts and `report.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Q(F, τ) of a law, or of the law of S_a when weights are given.
    Conc {
        #[arg(long)]
        law: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        tau: String,
    },
    /// GAP operations.
    Gap {
        #[command(subcommand)]
        op: GapCmd,
    },
    /// β_{r,m} of an atomic measure, or of M* of a weight vector.
    Beta {
        #[arg(long, conflicts_with = "weights")]
        measure: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        tau: String,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long)]
        m: u64,
    },
    /// Both sides of the compound-Poisson bound.
    CheckThm2 {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        tau: String,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },
    /// Structure recovery for an instance produced by `gen`.
    Recover {
        #[arg(long, value_enum, default_value_t = Mode::Thm4)]
        mode: Mode,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Schedule input for the thm16 and thm19 modes.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Defaults to the planted δ of the instance. δ defaults to τ, and so
        /// does κ unless τ = 0, where it defaults to 1.
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Defaults to the bottom of the admissible window.
        #[arg(long)]
        n_prime: Option<u64>,
    },
    /// Planted instance.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        /// PlantParams JSON; missing fields take their defaults.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Runs a verification suite; exits nonzero on any failure.
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(harness::SUITES))]
        name: String,
    },
    /// Smallest constants under which the suites pass; writes `calibrated.json`.
    Calibrate,
}

#[derive(Subcommand)]
enum GapCmd {
    Image {
        #[arg(long)]
        gap: PathBuf,
    },
    /// Properness, or t-properness with `--t`.
    Proper {
        #[arg(long)]
        gap: PathBuf,
        #[arg(long)]
        t: Option<String>,
    },
    Dilate {
        #[arg(long)]
        gap: PathBuf,
        #[arg(long)]
        t: String,
    },
    Sandwich {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long, default_value = "16")]
        cap_t: String,
    },
    Embed {
        #[arg(long)]
        gap: PathBuf,
        #[arg(long)]
        t: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Thm4,
    Lograank,
    Thm16,
    Thm19,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|_| format!("unknown kind {s:?}"))
}

fn q(s: &str) -> Result<Rational> {
    rational::parse(s).map_err(|e| anyhow!("{e}"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

struct Ctx {
    config: Config,
    out: Option<PathBuf>,
}

impl Ctx {
    /// Prints `value` and, with `--out`, stores it as `<name>.json`.
    fn emit(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        print_stdout(&text)?;
        if let Some(dir) = &self.out {
            fs::write(dir.join(format!("{name}.json")), text + "\n")?;
        }
        Ok(())
    }

    fn rows(&self, rows: &[CsvRow]) -> Result<()> {
        if let Some(dir) = &self.out {
            report_csv(rows, &dir.join("report.csv"))?;
        }
        Ok(())
    }
}

/// Like `println!`, but a closed pipe ends the output quietly.
fn print_stdout(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
    }
    let ctx = Ctx { config, out: cli.out };
    match cli.cmd {
        Cmd::Conc { law, weights, tau } => conc(&ctx, &law, weights.as_deref(), &q(&tau)?)?,
        Cmd::Gap { op } => gap(&ctx, op)?,
        Cmd::Beta { measure, weights, tau, r, m } => {
            let w: AtomicMeasure = match (measure, weights) {
                (Some(p), _) => read_json(&p)?,
                (None, Some(p)) => levy_measure_star(&read_json(&p)?),
                (None, None) => bail!("beta needs --measure or --weights"),
            };
            ctx.emit("beta", &arak::beta(&w, &q(&tau)?, r, m)?)?;
        }
        Cmd::CheckThm2 { weights, lambda, tau, r, m } => check(&ctx, &weights, lambda, &q(&tau)?, r, m)?,
        Cmd::Recover { mode, instance, schedule, tau, kappa, delta, r, n_prime } => {
            let inst: Option<Instance> = instance.as_deref().map(read_json).transpose()?;
            match mode {
                Mode::Thm4 | Mode::Lograank => {
                    let inst = inst.ok_or_else(|| anyhow!("this mode needs --instance"))?;
                    let tau = match (tau, &inst.planted) {
                        (Some(t), _) => q(&t)?,
                        (None, Some(p)) => p.delta.clone(),
                        (None, None) => bail!("--tau is required when nothing is planted"),
                    };
                    let kappa = match kappa {
                        Some(s) => q(&s)?,
                        None if tau.is_zero() => Rational::one(),
                        None => tau.clone(),
                    };
                    let delta = delta.map(|s| q(&s)).transpose()?.unwrap_or_else(|| tau.clone());
                    if let Mode::Thm4 = mode {
                        recover_thm4(&ctx, &inst, tau, kappa, delta, r, n_prime)?;
                    } else {
                        let settings = LograankSettings {
                            atom_cap: ctx.config.atom_cap,
                            ..LograankSettings::default()
                        };
                        let constants = ctx.config.constants_for("lograank");
                        let (gap, report) = lograank_construct(
                            &inst.weight, &inst.law, &tau, &kappa, &delta, constants, &settings,
                        )?;
                        ctx.emit("recover", &json!({ "gap": gap, "report": report }))?;
                    }
                }
                Mode::Thm16 | Mode::Thm19 => {
                    let path = schedule.ok_or_else(|| anyhow!("this mode needs --schedule"))?;
                    let report = if let Mode::Thm16 = mode {
                        let mut input: Thm16Input = read_json(&path)?;
                        input.constants = ctx.config.constants.clone();
                        schedule_thm16(&input)?
                    } else {
                        let mut input: Thm19Input = read_json(&path)?;
                        input.constants = ctx.config.constants.clone();
                        schedule_thm19(&input)?
                    };
                    recover_scheduled(&ctx, report, inst.as_ref())?;
                }
            }
        }
        Cmd::Gen { kind, params } => {
            let params: PlantParams = match params {
                Some(p) => read_json(&p)?,
                None => PlantParams::default(),
            };
            ctx.emit("instance", &gen_planted(kind, &params, ctx.config.seed)?)?;
        }
        Cmd::Suite { name } => {
            let out = run_suite(&name, &ctx.config)?;
            ctx.rows(&out.rows)?;
            ctx.emit(&name, &out.report)?;
            if !out.report.ok() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Calibrate => {
            let report = calibrate(&ctx.config)?;
            let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
            report.apply(&ctx.config).save(&dir.join("calibrated.json"))?;
            print_stdout(&serde_json::to_string_pretty(&report)?)?;
            if !report.unresolved.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn conc(ctx: &Ctx, law: &Path, weights: Option<&Path>, tau: &Rational) -> Result<()> {
    let f: DiscreteDistribution = read_json(law)?;
    let f = match weights {
        Some(p) => weighted_sum_law(&f, &read_json(p)?, ctx.config.atom_cap)?,
        None => f,
    };
    let res = if tau.is_zero() {
        conc_zero(&f)
    } else {
        conc_interval(&f, tau)?
    };
    ctx.emit("conc", &res)
}

fn gap(ctx: &Ctx, op: GapCmd) -> Result<()> {
    let cap = ctx.config.enum_cap;
    match op {
        GapCmd::Image { gap } => {
            let p: Gap = read_json(&gap)?;
            let image: Vec<Vec<String>> = p
                .image(cap)?
                .iter()
                .map(|x| x.iter().map(rational::format).collect())
                .collect();
            ctx.emit("gap", &json!({ "size": image.len(), "vol": p.vol().to_string(), "image": image }))
        }
        GapCmd::Proper { gap, t } => {
            let p: Gap = read_json(&gap)?;
            match &t {
                Some(t) => {
                    let proper = p.is_t_proper(&q(t)?, cap)?;
                    ctx.emit("gap", &json!({ "proper": proper, "t": t }))
                }
                None => {
                    let collision = p.first_collision(cap)?;
                    ctx.emit("gap", &json!({ "proper": collision.is_none(), "collision": collision }))
                }
            }
        }
        GapCmd::Dilate { gap, t } => {
            let p: Gap = read_json(&gap)?;
            ctx.emit("gap", &p.dilate(&q(&t)?)?)
        }
        GapCmd::Sandwich { polytope, cap_t } => {
            let v: SymmetricPolytope = read_json(&polytope)?;
            ctx.emit("gap", &mahler_sandwich(&v, &q(&cap_t)?, cap)?)
        }
        GapCmd::Embed { gap, t } => {
            let p: Gap = read_json(&gap)?;
            ctx.emit("gap", &embed_proper(&p, &q(&t)?, cap)?)
        }
    }
}

fn check(ctx: &Ctx, weights: &Path, lambda: f64, tau: &Rational, r: usize, m: u64) -> Result<()> {
    let a: WeightVector = read_json(weights)?;
    let spec = CompoundPoissonSpec::new(a.clone(), lambda)?;
    let mc = ctx.config.mc(ctx.config.seed);
    let rep = check_thm2(&spec, tau, r, m, ctx.config.constants.c2, mc)?;
    ctx.rows(&[CsvRow {
        suite: "check-thm2".into(),
        id: format!("cli-{}", ctx.config.seed),
        n: Some(a.len()),
        d: Some(a.dim()),
        r: Some(r),
        m: Some(m),
        tau: Some(rational::format(tau)),
        kappa: None,
        delta: None,
        lhs: Some(rep.lhs.value_f64()),
        rhs: Some(rep.rhs),
        slack: Some(rep.slack),
        coverage: None,
        flags: if rep.vacuous { "vacuous".into() } else { String::new() },
    }])?;
    ctx.emit("check-thm2", &rep)
}

fn recover_thm4(
    ctx: &Ctx,
    inst: &Instance,
    tau: Rational,
    kappa: Rational,
    delta: Rational,
    r: usize,
    n_prime: Option<u64>,
) -> Result<()> {
    let cfg = &ctx.config;
    let d = inst.weight.dim();
    let constants = cfg.constants_for(if d == 1 { "thm4" } else { "thm5" });
    let mut cases = Vec::with_capacity(d);
    let mut params = Vec::with_capacity(d);
    for j in 0..d {
        let a = if d == 1 { inst.weight.clone() } else { inst.weight.coordinate(j)? };
        let case = Thm4Case::new(
            format!("{}-{j}", inst.id),
            a,
            inst.law.clone(),
            tau.clone(),
            kappa.clone(),
            delta.clone(),
            r,
            cfg.atom_cap,
        )?;
        let mut p = RecoveryParams {
            q: case.q,
            tau: tau.clone(),
            kappa: kappa.clone(),
            delta: delta.clone(),
            r,
            n_prime: 1,
            p_val: case.p_val,
            constants: constants.clone(),
        };
        p.n_prime = n_prime.unwrap_or_else(|| (p.window_lower().ceil().max(1.0)) as u64);
        params.push(p);
        cases.push(case);
    }
    if d == 1 {
        let rep = recover(&inst.weight, &inst.law, &params[0], cfg.enum_cap)?;
        ctx.rows(&[cases[0].row("recover", Some(&rep))])?;
        ctx.emit("recover", &rep)
    } else {
        let rep = recover_multid(&inst.weight, &inst.law, &params, cfg.enum_cap)?;
        ctx.rows(
            &cases
                .iter()
                .zip(&rep.coordinates)
                .map(|(c, r)| c.row("recover", Some(r)))
                .collect::<Vec<_>>(),
        )?;
        ctx.emit("recover", &rep)
    }
}

/// Runs each coordinate as the schedule says: recovery inside the window,
/// the fallback GAP otherwise.
fn recover_scheduled(ctx: &Ctx, schedule: ScheduleReport, inst: Option<&Instance>) -> Result<()> {
    let Some(inst) = inst else {
        return ctx.emit("recover", &json!({ "schedule": schedule }));
    };
    let d = inst.weight.dim();
    if schedule.coordinates.len() != d {
        bail!("schedule has {} coordinates, instance has {d}", schedule.coordinates.len());
    }
    let mut results = Vec::with_capacity(d);
    for (j, outcome) in schedule.coordinates.iter().enumerate() {
        let a = if d == 1 { inst.weight.clone() } else { inst.weight.coordinate(j)? };
        results.push(match outcome {
            ScheduleOutcome::InWindow { params } => {
                json!({ "report": recover(&a, &inst.law, params, ctx.config.enum_cap)? })
            }
            ScheduleOutcome::Fallback { n_prime, .. } => {
                let n_prime = usize::try_from(*n_prime)?.min(a.len());
                json!({ "fallback": fallback_gap(&a, n_prime)? })
            }
        });
    }
    ctx.emit("recover", &json!({ "schedule": schedule, "coordinates": results }))
}
