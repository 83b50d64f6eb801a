//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pertfix::axioms::{audit_metric_axioms, Axiom, AxiomStatus};
use pertfix::catalog;
use pertfix::comparison::{self, ComparisonCandidate, Phi1Verdict, Phi2Verdict, DEFAULT_T_GRID};
use pertfix::config::Problem;
use pertfix::contraction::{
    estimate_min_lambda, probe_continuity, verify_banach_perturbed, verify_kannan_exact,
    verify_kannan_perturbed, verify_phi_contraction, ConditionKind, ConditionVerdict, ProbeMetric,
};
use pertfix::expr::{BinOp, CmpOp, Comparison, Expr, Func};
use pertfix::pipeline;
use pertfix::solver::SolveResult;
use pertfix::space::{Interval, PerturbedSpace, SampleSet, SelfMap};

const BIN: &str = env!("CARGO_BIN_EXE_pertfix");

struct Criterion {
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

fn builtin(id: &str) -> Problem {
    catalog::builtin(id).unwrap().config.build(42).unwrap()
}

fn d_sum(x: f64, y: f64) -> f64 {
    (x - y).abs() + x * x * y * y
}

fn d_exact(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

fn jleli_t(x: f64) -> f64 {
    if x >= 1.0 {
        x / 3.0
    } else {
        0.0
    }
}

fn step_t(x: f64) -> f64 {
    if x < 2.0 {
        0.0
    } else {
        1.0
    }
}

fn runs(p: &Problem) -> Vec<SolveResult> {
    pipeline::solve(p).unwrap().0
}

fn converged_to_zero(r: &SolveResult) -> bool {
    r.accepted && r.fixed_point == 0.0 && r.residual.exact == 0.0 && r.residual.perturbed == 0.0
}

fn jleli_phi() -> Criterion {
    let mut c = Criterion::new();
    let p = builtin("jleli-phi");
    let samples = pipeline::samples(&p);

    let axioms = audit_metric_axioms(&p.space, &samples, p.tolerance);
    c.check(
        format!("axioms pass on {} triples", samples.triples.len()),
        axioms.all_pass() && samples.triples.len() == 4096,
    );

    let phi = p.phi.clone().unwrap();
    let v = verify_phi_contraction(&p.space, &p.map, &phi, &samples.pairs, p.tolerance);
    let includes_tight = samples.pairs.contains(&(0.0, 3.0));
    let detail = match &v.witness {
        Some(w) => format!(
            " (counterexample at ({}, {}): lhs {:.6} > rhs {:.6})",
            w.x, w.y, w.lhs, w.rhs
        ),
        None => String::new(),
    };
    c.check(
        format!(
            "phi-perturbed holds on {} sampled pairs{detail}",
            v.pairs_checked
        ),
        v.holds() && v.pairs_checked == 4096 && includes_tight,
    );

    let tight = verify_phi_contraction(&p.space, &p.map, &phi, &[(0.0, 3.0)], p.tolerance);
    let tw = tight.tightest;
    // hand values: D(T0, T3) = D(0, 1) = 1, D(0, 3)/3 = 1
    let tight_ok = tw.is_some_and(|w| {
        (w.lhs - w.rhs).abs() <= 1e-12 && w.lhs == d_sum(jleli_t(0.0), jleli_t(3.0))
    });
    c.check(
        "tight pair (0,3) has |lhs - rhs| <= 1e-12",
        tight_ok && includes_tight,
    );

    let rs = runs(&p);
    let starts: Vec<f64> = rs.iter().map(|r| r.x0).collect();
    c.check(
        "Picard from -5, 0.5, 2, 9 reaches 0 with d = D = 0",
        starts == [-5.0, 0.5, 2.0, 9.0] && rs.iter().all(converged_to_zero),
    );

    let probe = probe_continuity(
        &p.space,
        &p.map,
        1.0,
        &pertfix::contraction::default_deltas(),
        ProbeMetric::Exact,
        p.tolerance,
    )
    .unwrap();
    c.check(
        format!("jump at 1 is 1/3 +- 1e-6 (found {:.9})", probe.jump),
        (probe.jump - 1.0 / 3.0).abs() <= 1e-6,
    );
    c
}

fn kannan_step() -> Criterion {
    let mut c = Criterion::new();
    let p = builtin("kannan-step");
    let samples = pipeline::samples(&p);

    let v = verify_kannan_perturbed(&p.space, &p.map, 0.45, &samples.pairs, p.tolerance).unwrap();
    c.check(
        format!(
            "kannan-perturbed holds with lambda 0.45 on {} pairs",
            v.pairs_checked
        ),
        v.holds() && v.pairs_checked == 4096,
    );

    let e = verify_kannan_exact(&p.space, &p.map, 0.45, &[(1.0, 2.0)], p.tolerance).unwrap();
    let ok = e
        .witness
        .is_some_and(|w| w.lhs == 1.0 && (w.rhs - 0.9).abs() < 1e-12);
    let sampled = verify_kannan_exact(&p.space, &p.map, 0.45, &samples.pairs, p.tolerance).unwrap();
    c.check(
        "kannan-exact counterexample at (1,2) with lhs 1, rhs 0.9",
        ok && !sampled.holds() && samples.pairs.contains(&(1.0, 2.0)),
    );

    let probe = probe_continuity(
        &p.space,
        &p.map,
        2.0,
        &pertfix::contraction::default_deltas(),
        ProbeMetric::Exact,
        p.tolerance,
    )
    .unwrap();
    c.check(
        format!("jump at 2 is 1 +- 1e-6 (found {:.9})", probe.jump),
        (probe.jump - 1.0).abs() <= 1e-6,
    );

    let rs = runs(&p);
    c.check(
        "Picard from 4 starts reaches 0",
        rs.len() == 4 && rs.iter().all(|r| r.accepted && r.fixed_point == 0.0),
    );
    c
}

fn envelopes() -> Criterion {
    let mut c = Criterion::new();
    const TOL: f64 = 1e-9;

    let p = builtin("kannan-step");
    let lambda: f64 = 0.45;
    let gamma = lambda / (1.0 - lambda);
    for r in runs(&p) {
        let d0 = d_sum(r.x0, step_t(r.x0));
        let xstar = r.fixed_point;
        let mut ok = r.d0 == d0;
        for row in &r.trace {
            let n = row.n as i32;
            let next = step_t(row.x);
            ok &= d_sum(row.x, next) <= gamma.powi(n) * d0 + TOL;
            ok &= d_exact(row.x, xstar) <= gamma.powi(n) / (1.0 - gamma) * d0 + TOL;
        }
        c.check(
            format!("kannan trace from {}: step and distance envelopes", r.x0),
            ok,
        );
    }

    let p = builtin("jleli-phi");
    let phi = |t: f64| t / 3.0;
    for r in runs(&p) {
        let d0 = d_sum(r.x0, jleli_t(r.x0));
        let xstar = r.fixed_point;
        let mut ok = r.d0 == d0;
        let mut env = d0;
        for row in &r.trace {
            ok &= d_sum(row.x, jleli_t(row.x)) <= env + TOL;
            // tail sum of phi^k(D0) over k >= n is env * 3/2
            ok &= d_exact(row.x, xstar) <= 1.5 * env + TOL;
            ok &= row.bound.is_some_and(|b| d_exact(row.x, xstar) <= b + TOL);
            env = phi(env);
        }
        c.check(
            format!("phi trace from {}: step and distance envelopes", r.x0),
            ok,
        );
    }
    c
}

fn same_outcome(a: &ConditionVerdict, b: &ConditionVerdict) -> bool {
    a.status == b.status
        && a.witness == b.witness
        && a.first_violation == b.first_violation
        && a.tightest == b.tightest
        && a.violations == b.violations
        && a.pairs_checked == b.pairs_checked
        && a.indeterminate == b.indeterminate
}

fn delegation() -> Criterion {
    let mut c = Criterion::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let spaces = [
        ("abs(x-y)+x^2*y^2", "x^2*y^2"),
        ("abs(x-y)", "0"),
        ("abs(x-y)+abs(x*y)", "abs(x*y)"),
        ("2*abs(x-y)+1", "abs(x-y)+1"),
    ];
    let maps = [
        "x/4",
        "x/2+1",
        "if(x>=1, x/3, 0)",
        "if(x<2, 0, 1)",
        "0.9*x",
        "min(x, 1)/2",
        "sqrt(abs(x))",
    ];
    let mut agree = 0;
    for i in 0..100 {
        let (d, pe) = spaces[rng.gen_range(0..spaces.len())];
        let t = maps[rng.gen_range(0..maps.len())];
        let lambda = rng.gen_range(0.05..0.95);
        let lo = rng.gen_range(-10.0..0.0);
        let hi = rng.gen_range(0.5..10.0);
        let space = PerturbedSpace::new(lo, hi, d, pe, "random").unwrap();
        let map = SelfMap::new(t, t).unwrap();
        let pairs: Vec<(f64, f64)> = (0..256)
            .map(|_| (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)))
            .collect();
        let b = verify_banach_perturbed(&space, &map, lambda, &pairs, 1e-9).unwrap();
        let f = verify_phi_contraction(
            &space,
            &map,
            &ComparisonCandidate::linear(lambda),
            &pairs,
            1e-9,
        );
        if same_outcome(&b, &f) {
            agree += 1;
        } else {
            c.check(format!("instance {i}: {d} / {t} / lambda {lambda}"), false);
        }
    }
    c.check(
        format!("{agree}/100 random instances agree in verdict and witnesses"),
        agree == 100,
    );
    c
}

fn comparison_oracles() -> Criterion {
    let mut c = Criterion::new();

    let third = ComparisonCandidate::new("t/3", "t/3").unwrap();
    let r = comparison::audit(&third).unwrap();
    c.check("t/3: phi1 pass", matches!(r.phi1, Phi1Verdict::Pass { .. }));
    let sums_ok = r.phi2.iter().all(|f| match f.verdict {
        Phi2Verdict::Converged { partial_sum, .. } => (partial_sum - f.t / 2.0).abs() <= 1e-6,
        _ => false,
    });
    let grid: Vec<f64> = r.phi2.iter().map(|f| f.t).collect();
    c.check(
        "t/3: phi2 converged with partial sum t/2 +- 1e-6 on the default grid",
        sums_ok && grid == DEFAULT_T_GRID,
    );
    c.check("t/3: Rus (a)(b)(c) pass", r.rus.all_pass());

    let id = ComparisonCandidate::new("t", "t").unwrap();
    let r = comparison::audit(&id).unwrap();
    c.check(
        "t: phi2 diverging",
        r.phi2.iter().all(|f| f.verdict.is_diverging()),
    );
    c.check("t: Rus (b) fails", !r.rus.below_identity_pass());

    let h = ComparisonCandidate::new("t/(1+t)", "t/(1+t)").unwrap();
    let r = comparison::audit(&h).unwrap();
    c.check(
        "t/(1+t): phi2 never reported converged",
        r.phi2.iter().all(|f| !f.verdict.is_converged()),
    );
    c.check("t/(1+t): Rus (b) passes", r.rus.below_identity_pass());
    c
}

fn lambda_estimation() -> Criterion {
    let mut c = Criterion::new();
    let p = builtin("kannan-step");
    let samples = SampleSet::grid_pairs(&Interval::new(-3.0, 5.0).unwrap(), 100);
    let e = estimate_min_lambda(
        &p.space,
        &p.map,
        &samples.pairs,
        ConditionKind::KannanPerturbed,
        p.tolerance,
    )
    .unwrap();

    // brute force over the same grid with plain closures
    let grid: Vec<f64> = (0..100).map(|i| -3.0 + 8.0 * i as f64 / 99.0).collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &x in &grid {
        for &y in &grid {
            let den = d_sum(x, step_t(x)) + d_sum(y, step_t(y));
            if den > 1e-9 {
                let r = d_sum(step_t(x), step_t(y)) / den;
                if r > best.0 {
                    best = (r, x, y);
                }
            }
        }
    }
    c.check(
        format!(
            "perturbed estimate {:.6} is 0.200 +- 0.005 over {} pairs",
            e.lambda, e.pairs_scanned
        ),
        (e.lambda - 0.2).abs() <= 0.005 && e.pairs_scanned == 10_000,
    );
    let (ax, ay) = e.attained_at;
    let near = |a: f64, b: f64| (a - 0.0).abs() <= 0.1 && (b - 2.0).abs() <= 0.1;
    c.check(
        format!("attained near (0,2): ({ax:.4}, {ay:.4})"),
        near(ax, ay) || near(ay, ax),
    );
    c.check(
        format!("brute-force oracle agrees ({:.12})", best.0),
        (best.0 - e.lambda).abs() <= 1e-12,
    );

    let exact = estimate_min_lambda(
        &p.space,
        &p.map,
        &samples.pairs,
        ConditionKind::KannanExact,
        p.tolerance,
    )
    .unwrap();
    c.check(
        format!("exact estimate {:.6} >= 0.5", exact.lambda),
        exact.lambda >= 0.5 && !exact.admissible,
    );
    c
}

fn exit_code(args: &[&str]) -> Option<i32> {
    Command::new(BIN)
        .args(args)
        .env_remove("PERTFIX_SEED")
        .output()
        .ok()
        .and_then(|o| o.status.code())
}

fn negative_controls() -> Criterion {
    let mut c = Criterion::new();
    let space = PerturbedSpace::new(0.0, 3.0, "(x-y)^2", "0", "squared").unwrap();
    let map = SelfMap::new("x/2", "half").unwrap();
    let samples = pertfix::space::sample_points(&space, Some(&map), Default::default(), 42);
    let axioms = audit_metric_axioms(&space, &samples, 1e-9);
    let tri = axioms
        .counterexamples
        .iter()
        .find(|cx| cx.axiom == Axiom::Triangle && cx.witness.len() == 3);
    c.check(
        "(x-y)^2 fails the triangle inequality with a reported triple",
        axioms.verdict(Axiom::Triangle).status == AxiomStatus::Fail && tri.is_some(),
    );

    let p = builtin("identity-noncontractive");
    let samples = pipeline::samples(&p);
    let cls = pipeline::conditions(&p, &samples).unwrap();
    let all_fail = ConditionKind::ALL
        .iter()
        .all(|k| cls.verdict(*k).is_some_and(|v| !v.holds()));
    c.check("T(x) = x fails every contraction condition", all_fail);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"space": {"domain": [0, 3], "D": "(x-y)^2", "P": "0"}, "map": {"T": "x/2"}}"#,
    )
    .unwrap();
    let report = dir.path().join("r.json");
    let audit = exit_code(&[
        "audit",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    let ident = exit_code(&[
        "classify",
        "--builtin",
        "identity-noncontractive",
        "--report",
        report.to_str().unwrap(),
    ]);
    c.check(
        format!("exit codes are 1 (audit {audit:?}, classify {ident:?})"),
        audit == Some(1) && ident == Some(1),
    );
    c
}

fn determinism() -> Criterion {
    let mut c = Criterion::new();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let r = dir.path().join(format!("r{i}.json"));
        let t = dir.path().join(format!("t{i}.csv"));
        let code = exit_code(&[
            "classify",
            "--builtin",
            "kannan-step",
            "--seed",
            "42",
            "--report",
            r.to_str().unwrap(),
            "--trace",
            t.to_str().unwrap(),
        ]);
        outputs.push((code, fs::read(&r).ok(), fs::read(&t).ok()));
    }
    c.check("both runs exit 0", outputs.iter().all(|o| o.0 == Some(0)));
    c.check(
        "reports are byte-identical",
        outputs[0].1.is_some() && outputs[0].1 == outputs[1].1,
    );
    c.check(
        "traces are byte-identical",
        outputs[0].2.is_some() && outputs[0].2 == outputs[1].2,
    );
    c
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Expr::Const(rng.gen_range(0..1000) as f64 / 4.0),
            1 => Expr::Const(rng.gen_range(0.0..1e3)),
            _ => Expr::var(["x", "y", "t"][rng.gen_range(0..3)]),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, depth - 1));
    match rng.gen_range(0..4) {
        0 => Expr::Neg(sub(rng)),
        1 => {
            let op =
                [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][rng.gen_range(0..5)];
            Expr::Binary {
                op,
                lhs: sub(rng),
                rhs: sub(rng),
            }
        }
        2 => {
            let func = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            let args = (0..func.arity())
                .map(|_| random_expr(rng, depth - 1))
                .collect();
            Expr::Call { func, args }
        }
        _ => {
            let op = [
                CmpOp::Lt,
                CmpOp::Le,
                CmpOp::Gt,
                CmpOp::Ge,
                CmpOp::Eq,
                CmpOp::Ne,
            ][rng.gen_range(0..6)];
            let cond = Comparison {
                op,
                lhs: Box::new(random_expr(rng, depth - 1)),
                rhs: Box::new(random_expr(rng, depth - 1)),
            };
            Expr::Cond {
                cond,
                then: Box::new(random_expr(rng, depth - 1)),
                otherwise: Box::new(random_expr(rng, depth - 1)),
            }
        }
    }
}

fn dsl() -> Criterion {
    let mut c = Criterion::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = 0;
    for _ in 0..1000 {
        let e = random_expr(&mut rng, 6);
        let text = e.to_string();
        if e.depth() <= 6 && text.parse::<Expr>().is_ok_and(|back| back == e) {
            ok += 1;
        } else {
            c.check(format!("round trip of {text}"), false);
        }
    }
    c.check(
        format!("{ok}/1000 random trees survive print then parse"),
        ok == 1000,
    );

    let golden = [
        ("1+2*3", 7.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("8/4/2", 1.0),
        ("8-4-2", 2.0),
    ];
    let precedence = golden.iter().all(|(src, want)| {
        src.parse::<Expr>()
            .is_ok_and(|e| e.eval(&[("x", 0.0)]).ok() == Some(*want))
    });
    c.check("precedence golden cases", precedence);

    let jleli: Expr = "if(x>=1, x/3, 0)".parse().unwrap();
    let step: Expr = "if(x<2, 0, 1)".parse().unwrap();
    c.check(
        "T(1) = 1/3 for jleli-phi and T(2) = 1 for kannan-step",
        jleli.eval(&[("x", 1.0)]).ok() == Some(1.0 / 3.0)
            && step.eval(&[("x", 2.0)]).ok() == Some(1.0),
    );
    c
}

fn main() -> ExitCode {
    type Run = fn() -> Criterion;
    let criteria: [(&str, Run); 9] = [
        ("jleli-phi instance", jleli_phi),
        ("kannan-step instance", kannan_step),
        ("envelope soundness", envelopes),
        ("Banach as linear phi", delegation),
        ("comparison-function oracles", comparison_oracles),
        ("lambda estimation", lambda_estimation),
        ("negative controls", negative_controls),
        ("determinism", determinism),
        ("expression language", dsl),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let c = run();
        let status = if c.passed() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status}  {name}", i + 1);
        for (what, ok) in &c.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAILED" });
        }
        if !c.passed() {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
