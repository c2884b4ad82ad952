use super::*;
use crate::rational::ratio;
use num_traits::Signed;

fn ap(n: usize, g: i64) -> PlantParams {
    PlantParams { n, g: vec![int(g)], ..PlantParams::default() }
}

#[test]
fn ap_example() {
    let inst = gen_planted(Kind::Ap, &ap(50, 3), 11).unwrap();
    assert_eq!(inst.id, "ap-11");
    assert_eq!(inst.weight.len(), 50);
    let allowed = [int(3), int(6), int(9)];
    assert!(inst.weight.entries().iter().all(|e| allowed.contains(&e[0])));
    let p = inst.planted.as_ref().unwrap();
    assert_eq!(p.gap.rank(), 1);
    assert!(p.outliers.is_empty());
    assert!(inst.planted_violations(1000).unwrap().is_empty());
}

#[test]
fn outliers_example() {
    let params = PlantParams { outliers: 5, ..ap(50, 3) };
    let inst = gen_planted(Kind::Outliers, &params, 4).unwrap();
    let p = inst.planted.as_ref().unwrap();
    assert_eq!(p.outliers.len(), 5);
    for &k in &p.outliers {
        assert!(inst.weight.entries()[k][0].abs() >= int(1_000_000));
    }
    assert!(inst.planted_violations(1000).unwrap().is_empty());
}

#[test]
fn product_and_gap2_are_consistent() {
    let params = PlantParams { g: vec![int(2), ratio(7, 2)], ..PlantParams::default() };
    for kind in [Kind::ProductD, Kind::Gap2] {
        let inst = gen_planted(kind, &params, 1).unwrap();
        assert!(inst.planted_violations(100_000).unwrap().is_empty(), "{kind:?}");
    }
    let inst = gen_planted(Kind::ProductD, &params, 1).unwrap();
    assert_eq!(inst.weight.dim(), 2);
    assert_eq!(inst.planted.unwrap().gap.rank(), 2);
}

#[test]
fn same_seed_same_instance() {
    for kind in [Kind::Ap, Kind::Gap2, Kind::Outliers, Kind::DenseRandom, Kind::ProductD] {
        let p = PlantParams::default();
        assert_eq!(gen_planted(kind, &p, 5).unwrap(), gen_planted(kind, &p, 5).unwrap());
        assert_ne!(gen_planted(kind, &p, 5).unwrap(), gen_planted(kind, &p, 6).unwrap());
    }
}

#[test]
fn rejects_bad_params() {
    assert!(gen_planted(Kind::Ap, &ap(0, 3), 0).is_err());
    assert!(gen_planted(Kind::Ap, &ap(10, 0), 0).is_err());
    let p = PlantParams { outliers: 11, ..ap(10, 3) };
    assert!(gen_planted(Kind::Outliers, &p, 0).is_err());
    let p = PlantParams { g: vec![int(1)], ..PlantParams::default() };
    assert!(gen_planted(Kind::Gap2, &p, 0).is_err());
}

#[test]
fn kind_names_round_trip() {
    assert_eq!("product_d".parse::<Kind>().unwrap(), Kind::ProductD);
    assert_eq!("dense_random".parse::<Kind>().unwrap(), Kind::DenseRandom);
    assert!("planted".parse::<Kind>().is_err());
}

fn row(slack: Option<f64>) -> CsvRow {
    CsvRow {
        suite: "s".into(),
        id: "x-1".into(),
        n: Some(3),
        d: Some(1),
        tau: Some("1/2".into()),
        lhs: Some(0.25),
        rhs: Some(0.5),
        slack,
        ..CsvRow::default()
    }
}

#[test]
fn empty_report_is_header_only() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    report_csv(&[], &path).unwrap();
    report_csv(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
}

#[test]
fn one_row_carries_its_slack() {
    let mut buf = Vec::new();
    write_csv(&[row(Some(2.0))], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert_eq!(line, "s,x-1,3,1,,,1/2,,,0.25,0.5,2.0,,");
    assert_eq!(line.split(',').count(), CSV_HEADER.len());
}

#[test]
fn appended_rows_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let rows = [row(Some(0.5)), row(None)];
    report_csv(&rows, &path).unwrap();
    report_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1..3], lines[3..5]);
}

#[test]
fn suite_reports_account_for_every_instance() {
    let cfg = Config { instances: Some(6), probes: 50, ..Config::default() };
    for name in ["regularity", "beta_oracle", "gap_laws", "lograank"] {
        let out = run_suite(name, &cfg).unwrap();
        let r = &out.report;
        assert_eq!(r.passes + r.failures.len(), r.instances, "{name}");
        assert_eq!(out.rows.len(), r.instances, "{name}");
        assert!(r.ok(), "{name}: {:?}", r.failures);
    }
    assert!(matches!(run_suite("nope", &cfg), Err(HarnessError::UnknownSuite(_))));
}

#[test]
fn suites_are_deterministic() {
    let cfg = Config { instances: Some(4), probes: 20, ..Config::default() };
    for name in ["regularity", "gap_laws"] {
        let a = run_suite(name, &cfg).unwrap();
        let b = run_suite(name, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.rows, b.rows);
    }
}

#[test]
fn config_defaults_fill_missing_fields() {
    let cfg: Config = serde_json::from_str(r#"{"seed": 9, "constants": {"c4": 0.5}}"#).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.constants.c4, 0.5);
    assert_eq!(cfg.constants.c2, 1.0);
    assert_eq!(cfg.enum_cap, gap::DEFAULT_ENUM_CAP);
    assert_eq!(cfg.constants_for("thm5"), &cfg.constants);
}

#[test]
fn config_save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut cfg = Config { seed: 3, ..Config::default() };
    cfg.suite_constants.insert("thm5".into(), Constants { c4: 0.25, ..Constants::default() });
    cfg.save(&path).unwrap();
    let back = Config::load(&path).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.constants_for("thm5").c4, 0.25);
}
