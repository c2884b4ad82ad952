use std::path::Path;

use lostructure_core::harness::{gen_planted, Config, Instance, Kind, PlantParams, Thm4Case};
use lostructure_core::rational::{int, ratio};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/calibrated.json");

#[test]
fn frozen_config_is_calibrated() {
    let cfg = Config::load(Path::new(CONFIG)).unwrap();
    assert!(cfg.constants.calibrated);
    for c in [cfg.constants.c2, cfg.constants.c3, cfg.constants.c4, cfg.constants.c8, cfg.constants.esseen] {
        assert!(c > 0.0 && c.is_finite());
    }
    assert!(cfg.constants_for("thm5").calibrated);
}

#[test]
fn instances_survive_json() {
    for kind in [Kind::Ap, Kind::Gap2, Kind::Outliers, Kind::DenseRandom, Kind::ProductD] {
        let inst = gen_planted(kind, &PlantParams::default(), 3).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }
}

#[test]
fn planted_outliers_are_left_uncovered() {
    let cfg = Config::load(Path::new(CONFIG)).unwrap();
    let params = PlantParams {
        n: 800,
        g: vec![ratio(3, 2)],
        levels: 3,
        decay: 0.05,
        outliers: 3,
        ..PlantParams::default()
    };
    let inst = gen_planted(Kind::Outliers, &params, 123).unwrap();
    let outliers = inst.planted.as_ref().unwrap().outliers.clone();
    let t = ratio(3, 8);
    let case = Thm4Case::new(inst.id, inst.weight, inst.law, t.clone(), t.clone(), t, 1, cfg.atom_cap).unwrap();
    let rep = case.run(cfg.constants_for("thm4"), cfg.enum_cap).unwrap();
    Thm4Case::check(&rep).unwrap();
    for k in outliers {
        assert!(rep.uncovered.contains(&k), "outlier {k} is covered");
    }
    // every covered entry is a multiple of the planted step
    let covered = (0..rep.n).filter(|k| !rep.uncovered.contains(k));
    for k in covered {
        let v = &case.a.entries()[k][0] / ratio(3, 2);
        assert!(v.is_integer() && v != int(0));
    }
}
