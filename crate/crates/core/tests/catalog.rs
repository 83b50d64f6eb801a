use pertfix::catalog::{self, Findings};
use pertfix::config::RunConfig;
use pertfix::pipeline;
use pertfix::report;

#[test]
fn every_entry_reproduces_its_expected_findings() {
    for entry in catalog::all() {
        let p = entry.config.build(42).unwrap();
        let samples = pipeline::samples(&p);
        let axioms = pipeline::axioms(&p, &samples);
        let classification = pipeline::conditions(&p, &samples).unwrap();
        let (runs, uniqueness) = pipeline::solve(&p).unwrap();
        let found = Findings {
            problem: &p,
            axioms: &axioms,
            classification: &classification,
            runs: &runs,
            uniqueness: uniqueness.as_ref(),
        };
        let bad = entry.expected.mismatches(&found);
        assert!(bad.is_empty(), "{}: {bad:#?}", entry.id);
    }
}

#[test]
fn export_and_import_give_identical_results() {
    for entry in catalog::all() {
        let text = entry.config.to_json().unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, entry.config, "{}", entry.id);

        let run = |cfg: &RunConfig| {
            let p = cfg.build(42).unwrap();
            let s = pipeline::samples(&p);
            let c = pipeline::conditions(&p, &s).unwrap();
            let (runs, _) = pipeline::solve(&p).unwrap();
            (
                report::to_json(&c).unwrap(),
                report::to_json(&runs).unwrap(),
            )
        };
        assert_eq!(run(&entry.config), run(&back), "{}", entry.id);
    }
}

#[test]
fn jleli_phi_details() {
    let p = catalog::builtin("jleli-phi")
        .unwrap()
        .config
        .build(42)
        .unwrap();
    let pairs = pipeline::samples(&p).pairs;
    assert!(pairs.contains(&(0.0, 3.0)));
    let kind = pertfix::contraction::ConditionKind::PhiPerturbed;
    let single = pipeline::condition(&p, kind, &[(0.0, 3.0)]).unwrap();
    let tight = single.tightest.unwrap();
    assert_eq!((tight.lhs, tight.rhs, tight.margin), (1.0, 1.0, 0.0));

    let v = pipeline::condition(&p, kind, &pairs).unwrap();
    let w = v.witness.unwrap();
    assert_eq!((w.x, w.y), (0.5, 1.0));
    assert!((w.lhs - 1.0 / 3.0).abs() < 1e-15);
    assert!((w.rhs - 0.25).abs() < 1e-15);
}

#[test]
fn kannan_step_lambda_range() {
    let entry = catalog::builtin("kannan-step").unwrap();
    let (lo, hi) = entry.lambda_range.unwrap();
    for l in [lo + 1e-3, 0.45, hi - 1e-3] {
        let mut cfg = entry.config.clone();
        cfg.lambda = Some(l);
        let p = cfg.build(42).unwrap();
        let pairs = pipeline::samples(&p).pairs;
        let v = pipeline::condition(
            &p,
            pertfix::contraction::ConditionKind::KannanPerturbed,
            &pairs,
        )
        .unwrap();
        assert!(v.holds(), "lambda {l}");
    }
}
