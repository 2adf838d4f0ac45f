use cartan_lab::{run, Bound, Check, ExperimentConfig, Format, ModelSpec, Report, Verdict};

fn config(experiment: &str, model: &str) -> ExperimentConfig {
    ExperimentConfig::new(experiment, ModelSpec::named(model))
}

#[test]
fn verdict_is_the_conjunction_of_checks() {
    let ok = Check::new("a", 1, 1e-9, 1e-6, Bound::Upper);
    let low = Check::new("b", 1, 0.5, 1e-3, Bound::Lower);
    let bad = Check::new("c", 1, 1e-3, 1e-6, Bound::Upper);
    assert!(ok.pass && low.pass && !bad.pass);
    let spec = ModelSpec::named("pair-R2");
    assert_eq!(Report::new("x", spec.clone(), 1, 1, vec![ok.clone(), low.clone()]).verdict, Verdict::Pass);
    assert_eq!(Report::new("x", spec.clone(), 1, 1, vec![ok, low, bad]).verdict, Verdict::Fail);
    assert_eq!(Report::new("x", spec, 1, 1, vec![]).verdict, Verdict::Fail);
}

#[test]
fn failed_checks_serialize_without_a_value() {
    let c = Check::failed("holonomy", 3, 1e-4, Bound::Upper, "trajectory left the chart".into());
    let r = Report::new("reconstruct", ModelSpec::named("se2-action"), 1, 3, vec![c]);
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert!(json["checks"][0]["max_error"].is_null());
    assert_eq!(json["checks"][0]["pass"], false);
    assert_eq!(json["verdict"], "fail");
}

#[test]
fn jet_axioms_pass_on_the_pair_groupoid() {
    let r = run(&config("jet-axioms", "pair-R2").with_seed(42)).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.checks.len(), 6);
    assert!(r.checks.iter().all(|c| c.samples == 200));
}

#[test]
fn translations_are_flat_and_involutive() {
    let r = run(&config("flatness", "translation-R2")).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.check("curvature").unwrap().pass && r.check("torsion").unwrap().pass);
}

#[test]
fn gauge_round_trip_passes() {
    let r = run(&config("classical-bridge", "se2-so2")).unwrap();
    assert!(r.passed(), "{r:?}");
    for name in ["connection-roundtrip", "omega-roundtrip", "nabla-agreement", "structure-curvature"] {
        assert!(r.check(name).is_some(), "missing {name}");
    }
}

#[test]
fn reports_record_overridden_tolerances() {
    let mut cfg = config("inversion", "se2-action").with_samples(20);
    cfg.tolerances.insert("jet-inverse".into(), 0.0);
    let r = run(&cfg).unwrap();
    let c = r.check("jet-inverse").unwrap();
    assert_eq!(c.tolerance, 0.0);
    assert!(!c.pass && !r.passed());
    assert!(r.check("double-inverse").unwrap().pass);
}

#[test]
fn curved_models_fail_reconstruction_with_a_failed_check() {
    let r = run(&config("reconstruct", "isojet-perturbed")).unwrap();
    assert!(!r.passed());
    let h = r.check("holonomy").unwrap();
    assert!(h.max_error > 1e-4 && !h.pass);
}

#[test]
fn fixed_configs_give_identical_bytes() {
    for format in [Format::Json, Format::Csv] {
        let cfg = config("semidirect", "se2-so2").with_seed(9).with_samples(25);
        let a = run(&cfg).unwrap().render(format).unwrap();
        let b = run(&cfg).unwrap().render(format).unwrap();
        assert_eq!(a, b);
        let other = run(&cfg.clone().with_seed(10)).unwrap().render(format).unwrap();
        assert_ne!(a, other);
    }
}

#[test]
fn csv_has_one_row_per_check() {
    let r = run(&config("riemannian", "isojet-sphere").with_samples(10)).unwrap();
    let text = r.to_csv().unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().len(), 10);
    assert_eq!(rows.records().count(), r.checks.len());
    assert_eq!(r.file_name(Format::Csv), "riemannian-isojet-sphere-42.csv");
}
