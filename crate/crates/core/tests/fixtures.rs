//! Example fixtures: running them, and rebuilding the optimized versions
//! from the base versions with the passes.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use sourir::equivalence::{check_transparency, exhaustive_diff, transparency_sweep, InputPlan, Verdict};
use sourir::passes::*;
use sourir::text::{instruction_to_string, parse_expr};
use sourir::*;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load(name: &str) -> Program {
    let src = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn pipeline(name: &str) -> Vec<PassSpec> {
    parse_pipeline(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

fn f(s: &str) -> FunName {
    FunName::new(s)
}
fn v(s: &str) -> VersionName {
    VersionName::new(s)
}
fn l(s: &str) -> Label {
    Label::new(s)
}

fn ints(xs: &[i64]) -> Vec<Literal> {
    xs.iter().map(|&n| Literal::Int(n)).collect()
}

fn actions(r: &RunResult) -> Vec<String> {
    r.trace.iter().map(|a| a.to_string()).collect()
}

fn without_version(p: &Program, func: &str, ver: &str) -> Program {
    let mut q = p.clone();
    let fun = q.function_mut(&f(func)).unwrap();
    let i = fun.version_index(&v(ver)).unwrap();
    fun.versions.remove(i);
    q
}

fn assert_alpha(p: &Program, func: &str, got: &str, want_p: &Program, want: &str) {
    let params = &p.function(&f(func)).unwrap().params;
    let a = &p.version(&f(func), &v(got)).unwrap().body;
    let b = &want_p.version(&f(func), &v(want)).unwrap().body;
    assert!(
        alpha_equivalent(params, a, b),
        "{func}.{got} is not {func}.{want}:\n{}\n---\n{}",
        print_program(p),
        print_program(want_p)
    );
}

fn assert_clean(p: &Program) {
    let diags = check_program(p);
    assert!(diags.is_empty(), "{diags:?}\n{}", print_program(p));
}

fn size_pool() -> InputPlan {
    InputPlan::Enumerate {
        pool: vec![
            Literal::Nil,
            Literal::Int(0),
            Literal::Int(1),
            Literal::Int(2),
            Literal::Int(3),
        ],
        max_reads: 1,
    }
}

fn assert_all_equal(a: &Program, b: &Program, plan: &InputPlan) {
    for (inputs, r) in exhaustive_diff(a, b, plan, 100_000, true) {
        assert_eq!(r.verdict, Verdict::Equal, "inputs {inputs:?}\n{r}");
    }
}

fn assert_sweep_equal(p: &Program, plan: &InputPlan) {
    for s in transparency_sweep(p, &plan.scripts(), 100_000) {
        assert_eq!(
            s.result.verdict,
            Verdict::Equal,
            "{} on {:?}\n{}",
            s.site,
            s.inputs,
            s.result
        );
    }
}

const PROGRAMS: &[&str] = &[
    "fig2.sourir",
    "fig4.sourir",
    "fig5_base.sourir",
    "fig5_vo.sourir",
    "fig6.sourir",
    "fig7.sourir",
    "fig8.sourir",
    "fig13.sourir",
    "fig14.sourir",
    "fig14_base.sourir",
    "micro_compose.sourir",
];

#[test]
fn every_fixture_is_well_formed_and_round_trips() {
    for name in PROGRAMS {
        let p = load(name);
        let diags = check_program(&p);
        assert!(diags.is_empty(), "{name}: {diags:?}");
        assert_eq!(parse_program(&print_program(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn fig2_rot_prints_rotated_array() {
    // rot([1, 2, 3]) stores the rotated values and main prints them.
    let r = run(&load("fig2.sourir"), &[], 100_000);
    assert_eq!(r.outcome, Outcome::Stopped);
    assert_eq!(actions(&r), ["print 2", "print 3", "print 1", "stop"]);
}

#[test]
fn fig4_only_vw_is_not_transparent() {
    let p = load("fig4.sourir");
    let r = run(&p, &ints(&[7]), 1000);
    assert_eq!(actions(&r), ["read 7", "print 7", "stop"]);
    let sweep = transparency_sweep(&p, &[ints(&[7]), ints(&[42])], 1000);
    assert_eq!(sweep.len(), 4);
    for s in &sweep {
        let wrong = s.site.version.as_str() == "Vw" && s.inputs == ints(&[7]);
        if wrong {
            assert!(
                matches!(s.result.verdict, Verdict::Diverged { pos: 1, .. }),
                "{}",
                s.result
            );
        } else {
            assert_eq!(s.result.verdict, Verdict::Equal, "{} {:?}", s.site, s.inputs);
        }
    }
}

#[test]
fn fig5_pipeline_rebuilds_vo() {
    let base = load("fig5_base.sourir");
    let (q, reports) = run_pipeline(&base, &pipeline("fig5.pipeline")).unwrap();
    assert_eq!(reports.len(), 7);
    assert!(reports.iter().all(|r| r.changed), "{reports:?}");
    assert_clean(&q);
    assert_alpha(&q, "size", "Vo", &load("fig5_vo.sourir"), "Vo");
    assert_all_equal(&base, &q, &size_pool());
    assert_sweep_equal(&q, &size_pool());
}

#[test]
fn fig5_vo_matches_base_on_every_input() {
    assert_all_equal(&load("fig5_base.sourir"), &load("fig5_vo.sourir"), &size_pool());
    // `size(nil)` deoptimizes and returns 0; `[3]` gives 3 * 32.
    let p = load("fig5_vo.sourir");
    assert_eq!(
        actions(&run(&p, &[Literal::Nil], 1000)),
        ["read nil", "print 0", "stop"]
    );
    assert_eq!(actions(&run(&p, &ints(&[3]), 1000)), ["read 3", "print 96", "stop"]);
}

#[test]
fn fig6_create_version_with_seeds() {
    let base = load("fig5_base.sourir");
    let (q, report) = create_version(&base, &f("size"), &v("Vdup"), &[l("L1"), l("L2")]).unwrap();
    assert!(report.changed);
    assert_clean(&q);
    assert_eq!(q.function(&f("size")).unwrap().versions[0].name, v("Vdup"));
    assert_alpha(&q, "size", "Vdup", &load("fig6.sourir"), "Vdup");
    assert_all_equal(&base, &q, &size_pool());
    assert_sweep_equal(&q, &size_pool());
}

#[test]
fn fig7_move_past_branch_and_assignment() {
    let p = load("fig7.sourir");
    let (size, vany) = (f("size"), v("Vany"));
    let (p1, _) = move_assume(&p, &size, &vany, &l("L0")).unwrap();
    // Next is the branch: the assume lands in both arms.
    let (p2, _) = move_assume(&p1, &size, &vany, &l("L0")).unwrap();
    let arms = p2
        .version(&size, &vany)
        .unwrap()
        .body
        .instrs
        .iter()
        .filter(|(_, i)| i.is_assume())
        .count();
    assert_eq!(arms, 2);
    // `L0_1` sits before `x <- x[0]`; moving past it needs the snapshot.
    let err = move_assume(&p2, &size, &vany, &l("L0_1")).unwrap_err();
    assert!(matches!(err, PassError::MoveConditionViolated(..)), "{err}");
    let (p3, _) = snapshot_var(&p2, &size, &vany, &l("L0_1"), &Var::new("x")).unwrap();
    let (p4, _) = move_assume(&p3, &size, &vany, &l("L0_1")).unwrap();
    let (p5, _) = inject_predicate(&p4, &size, &vany, &l("L0_1"), &parse_expr("x == 1").unwrap()).unwrap();
    assert_clean(&p5);
    let body = &p5.version(&size, &vany).unwrap().body;
    let moved = instruction_to_string(body.get(&l("L0_1")).unwrap());
    assert_eq!(moved, "assume true, x == 1 else size.Vb.L1 [x = x0]");
    let pos = |lab: &str| body.position(&l(lab)).unwrap();
    assert_eq!(pos("L0_1"), pos("L3") + 1);
    for q in [&p1, &p2, &p3, &p4, &p5] {
        assert_clean(q);
        assert_all_equal(&p, q, &size_pool());
        assert_sweep_equal(q, &size_pool());
    }
}

#[test]
fn fig8_runs_quickly() {
    let start = Instant::now();
    let r = run(&load("fig8.sourir"), &[], 1_000_000);
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(r.outcome, Outcome::Stopped);
    assert_eq!(actions(&r), ["print 128", "stop"]);
    assert_eq!(r.format_actions(), "print 128\nstop\n");
}

#[test]
fn fig8_inline_rebuilds_vinl() {
    let want = load("fig8.sourir");
    let base = without_version(&want, "main", "Vinl");
    let (q, _) = create_version(&base, &f("main"), &v("Vinl"), &[]).unwrap();
    let call = q
        .version(&f("main"), &v("Vinl"))
        .unwrap()
        .body
        .instrs
        .iter()
        .find(|(_, i)| matches!(i, Instruction::Call(..)))
        .map(|(lab, _)| lab.clone())
        .unwrap();
    let (q, report) = inline(&q, &f("main"), &v("Vinl"), &call).unwrap();
    assert!(report.changed);
    assert_clean(&q);
    assert_alpha(&q, "main", "Vinl", &want, "Vinl");
    assert_all_equal(&base, &q, &InputPlan::Scripts(vec![vec![]]));
    assert_sweep_equal(&q, &InputPlan::Scripts(vec![vec![]]));
    // Forced deoptimization inside the inlined body goes through the
    // extra frame and still prints 128.
    let forced = run_forcing_deopt(&q, &[], 1000, ForcePolicy::All);
    assert_eq!(actions(&forced), ["print 128", "stop"]);
}

#[test]
fn fig13_versions_agree() {
    let p = load("fig13.sourir");
    let plan = InputPlan::Enumerate {
        pool: ints(&[-1, 0, 1, 7, 50, 99, 100, 150]),
        max_reads: 1,
    };
    for ver in ["Vs12", "Vs1", "Vbase"] {
        assert_all_equal(&p, &p.with_active(&f("undo"), &v(ver)).unwrap(), &plan);
    }
    assert_sweep_equal(&p, &plan);
    assert_eq!(
        actions(&run(&p, &ints(&[7]), 1000)),
        ["read 7", "print 14", "print 21", "stop"]
    );
}

#[test]
fn fig13_compose_twice_reaches_vbase() {
    let p = load("fig13.sourir");
    let (undo, vs123) = (f("undo"), v("Vs123"));
    let (q1, _) = compose_assume(&p, &undo, &vs123, &l("L0")).unwrap();
    let (q2, _) = compose_assume(&q1, &undo, &vs123, &l("L0")).unwrap();
    let at = |q: &Program| instruction_to_string(q.lookup(&undo, &vs123, &l("L0")).unwrap());
    assert_eq!(
        at(&q1),
        "assume f > 0, f < 100, f != 7, f > 0, f < 100 else undo.Vs1.L0 [b = f, n = f]"
    );
    assert_eq!(
        at(&q2),
        "assume f > 0, f < 100, f != 7, f > 0, f < 100, f > 0 else undo.Vbase.L0 [a = f * 2, n = f]"
    );
    let plan = InputPlan::Enumerate {
        pool: ints(&[-1, 0, 1, 7, 50, 100]),
        max_reads: 1,
    };
    for q in [&q1, &q2] {
        assert_clean(q);
        assert_all_equal(&p, q, &plan);
        assert_sweep_equal(q, &plan);
    }
    // Composing again would need an assume at undo.Vbase.L0.
    assert!(compose_assume(&q2, &undo, &vs123, &l("L0")).is_err());
}

#[test]
fn micro_compose_literal_form() {
    let p = load("micro_compose.sourir");
    let (q, _) = compose_assume(&p, &f("F"), &v("V3"), &l("L3")).unwrap();
    let got = instruction_to_string(q.lookup(&f("F"), &v("V3"), &l("L3")).unwrap());
    assert_eq!(got, "assume q == 2, 1 == 1 else F.V0.Lb [y = 1]");
    assert_clean(&q);
    let forced = check_transparency(&q, &[], 1000, ForcePolicy::All);
    assert_eq!(forced.verdict, Verdict::Equal, "{forced}");
    assert_eq!(actions(&forced.left), ["print 2", "stop"]);
}

fn div_plan() -> InputPlan {
    InputPlan::Enumerate {
        pool: vec![Literal::Nil, Literal::Int(0), Literal::Int(1), Literal::Int(2)],
        max_reads: 4,
    }
}

#[test]
fn fig14_versions_agree_on_all_inputs() {
    let p = load("fig14.sourir");
    let plan = div_plan();
    assert_eq!(plan.scripts().len(), 256);
    let base = p.with_active(&f("div"), &v("Vbase")).unwrap();
    for ver in ["Vd", "Vc", "Vb"] {
        assert_all_equal(&p.with_active(&f("div"), &v(ver)).unwrap(), &base, &plan);
    }
    // 4 / 2 on tagged numbers; 1 / 0 gives the error value; tag 0 is slow.
    assert_eq!(actions(&run(&p, &ints(&[1, 2, 1, 4]), 1000))[4], "print 2");
    assert_eq!(actions(&run(&p, &ints(&[1, 0, 1, 1]), 1000))[4], "print -1");
    assert_eq!(actions(&run(&p, &ints(&[0, 2, 1, 4]), 1000))[4], "print nil");
}

#[test]
fn fig14_pipeline_rebuilds_vd() {
    let base = load("fig14_base.sourir");
    let (q, _) = run_pipeline(&base, &pipeline("fig14.pipeline")).unwrap();
    assert_clean(&q);
    assert_alpha(&q, "div", "Vd", &load("fig14.sourir"), "Vd");
    assert_all_equal(&base, &q, &div_plan());
    assert_sweep_equal(&q, &div_plan());
}
