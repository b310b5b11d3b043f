//! Invariants checked on generated programs.

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use sourir::equivalence::{check_transparency, compare, diff_programs, Verdict};
use sourir::fuzz::{gen_pipeline, gen_program, gen_scripts, run_case, GenConfig};
use sourir::interp::run_observed;
use sourir::passes::{analyze_constants, apply_pass, check_facts, AbstractEnv};
use sourir::wellformed::{scope_analysis, Traversal};
use sourir::*;

fn config() -> impl Strategy<Value = GenConfig> {
    (any::<u64>(), 1usize..4, 1usize..4, 3usize..12).prop_map(|(seed, funs, vers, instrs)| GenConfig {
        max_functions: funs,
        max_versions: vers,
        max_instrs: instrs,
        ..GenConfig::with_seed(seed)
    })
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        Just(Literal::Nil),
        any::<bool>().prop_map(Literal::Bool),
        any::<i64>().prop_map(Literal::Int),
    ]
}

fn is_prefix(a: &[Action], b: &[Action]) -> bool {
    a.len() <= b.len() && a == &b[..a.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_are_well_formed_and_round_trip(cfg in config()) {
        let p = gen_program(&cfg);
        let diags = check_program(&p);
        prop_assert!(diags.is_empty(), "{:?}\n{}", diags, print_program(&p));
        let text = print_program(&p);
        let q = parse_program(&text).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(print_program(&q), text);
    }

    #[test]
    fn inputs_round_trip(xs in prop::collection::vec(literal(), 0..8)) {
        let text = sourir::text::print_inputs(&xs);
        prop_assert_eq!(parse_inputs(&text).unwrap(), xs);
    }

    #[test]
    fn predecessors_invert_successors(cfg in config()) {
        let p = gen_program(&cfg);
        for func in &p.functions {
            for ver in &func.versions {
                let b = &ver.body;
                let preds = b.predecessor_map();
                for l in b.labels() {
                    for s in b.successors(l) {
                        prop_assert!(preds.get(&s).is_some_and(|ps| ps.contains(l)));
                    }
                }
                for (s, ps) in &preds {
                    for l in ps {
                        prop_assert!(b.successors(l).contains(s));
                    }
                }
            }
        }
    }

    #[test]
    fn fresh_name_avoids_used(base in "[a-z]{1,3}", used in prop::collection::hash_set("[a-z]{1,3}(_[1-4])?", 0..20)) {
        let n = fresh_name(&base, |s| used.contains(s));
        prop_assert!(!used.contains(&n));
        if !used.contains(&base) {
            prop_assert_eq!(n, base);
        } else {
            let prefix = format!("{base}_");
            prop_assert!(n.starts_with(&prefix));
        }
    }

    #[test]
    fn scopes_do_not_depend_on_traversal_order(cfg in config()) {
        let p = gen_program(&cfg);
        for func in &p.functions {
            for ver in &func.versions {
                let (a, ca) = scope_analysis(&func.params, &ver.body, Traversal::Fifo);
                let (b, cb) = scope_analysis(&func.params, &ver.body, Traversal::Lifo);
                prop_assert_eq!(a, b);
                prop_assert!(ca.is_empty() && cb.is_empty());
            }
        }
    }

    #[test]
    fn runs_are_deterministic(cfg in config()) {
        let p = gen_program(&cfg);
        for s in gen_scripts(&cfg, &p) {
            prop_assert_eq!(run(&p, &s, cfg.fuel), run(&p, &s, cfg.fuel));
        }
    }

    #[test]
    fn traces_grow_with_fuel(cfg in config(), small in 0u64..200) {
        let p = gen_program(&cfg);
        for s in gen_scripts(&cfg, &p) {
            let a = run(&p, &s, small);
            let b = run(&p, &s, small + 50);
            let c = run(&p, &s, cfg.fuel);
            prop_assert!(is_prefix(&a.trace, &b.trace));
            prop_assert!(is_prefix(&b.trace, &c.trace));
            if a.outcome.class() != sourir::interp::OutcomeClass::FuelExhausted {
                prop_assert_eq!(&a, &c);
            }
        }
    }

    #[test]
    fn diff_is_symmetric(c1 in config(), c2 in config()) {
        let (p1, p2) = (gen_program(&c1), gen_program(&c2));
        for s in gen_scripts(&c1, &p1) {
            let ab = diff_programs(&p1, &p2, &s, 2_000);
            let ba = diff_programs(&p2, &p1, &s, 2_000);
            let swapped = match ab.verdict.clone() {
                Verdict::Diverged { pos, left, right } => Verdict::Diverged { pos, left: right, right: left },
                v => v,
            };
            prop_assert_eq!(swapped, ba.verdict);
            prop_assert_eq!(diff_programs(&p1, &p1, &s, 2_000).verdict.passes(), true);
        }
    }

    #[test]
    fn every_pipeline_stage_preserves_behaviour(cfg in config()) {
        let p = gen_program(&cfg);
        let scripts = gen_scripts(&cfg, &p);
        let mut cur = p.clone();
        for spec in gen_pipeline(&cfg, &p) {
            let (next, _) = apply_pass(&cur, &spec).unwrap();
            let diags = check_program(&next);
            prop_assert!(diags.is_empty(), "after {}: {:?}\n{}", spec, diags, print_program(&next));
            for s in &scripts {
                let d = diff_programs(&p, &next, s, cfg.fuel);
                prop_assert!(d.verdict.passes(), "after {}\n{}\n{}", spec, d, print_program(&next));
                let t = check_transparency(&next, s, cfg.fuel, ForcePolicy::All);
                prop_assert!(t.verdict.passes(), "after {}\n{}", spec, t);
            }
            cur = next;
        }
    }

    #[test]
    fn fuzz_cases_pass(seed in any::<u64>()) {
        let r = run_case(&GenConfig::with_seed(seed));
        prop_assert!(r.passed(), "{}", r.report_text());
    }

    #[test]
    fn constant_facts_hold_at_run_time(cfg in config()) {
        let p = gen_program(&cfg);
        let facts: HashMap<(usize, usize), HashMap<Label, AbstractEnv>> = p
            .functions
            .iter()
            .enumerate()
            .flat_map(|(fi, func)| {
                func.versions
                    .iter()
                    .enumerate()
                    .map(move |(vi, ver)| ((fi, vi), analyze_constants(&func.params, &ver.body)))
            })
            .collect();
        for s in gen_scripts(&cfg, &p) {
            let mut bad = Vec::new();
            run_observed(&p, &s, cfg.fuel, ForcePolicy::Never, &mut |m, conf| {
                let Some(pos) = conf.pos else { return };
                let l = m.loc(pos).label;
                if let Some(env) = facts[&(pos.func, pos.version)].get(&l) {
                    let v = check_facts(&conf.env, env);
                    if !v.is_empty() {
                        bad.push((l, v));
                    }
                }
            });
            prop_assert!(bad.is_empty(), "{:?}", bad);
        }
    }

    #[test]
    fn canonical_form_ignores_names(cfg in config()) {
        let p = gen_program(&cfg);
        for func in &p.functions {
            for ver in &func.versions {
                let c = canonicalize(&func.params, &ver.body);
                let renamed: Vec<Var> = (0..func.params.len()).map(|i| Var::new(format!("#v{i}"))).collect();
                prop_assert_eq!(canonicalize(&renamed, &c), c.clone());
            }
        }
    }
}

#[test]
fn compare_with_itself_is_equal() {
    let cfg = GenConfig::with_seed(3);
    let p = gen_program(&cfg);
    for s in gen_scripts(&cfg, &p) {
        let r = run(&p, &s, cfg.fuel);
        assert_eq!(compare(r.clone(), r, cfg.fuel).verdict, Verdict::Equal);
    }
}

#[test]
fn labels_are_unique_in_generated_programs() {
    for seed in 0..50 {
        let p = gen_program(&GenConfig::with_seed(seed));
        for func in &p.functions {
            for ver in &func.versions {
                let set: HashSet<_> = ver.body.labels().collect();
                assert_eq!(set.len(), ver.body.len());
            }
        }
    }
}

/// Seeds that once exposed pass bugs: inline frames built from the wrong
/// scope, a removed `stop`, moves past faulting code, and fresh labels that
/// clashed with another version.
#[test]
fn past_counterexamples_stay_fixed() {
    for seed in [13571626109934823509, 1004679, 1006698, 987654560, 987657123] {
        let r = run_case(&GenConfig::with_seed(seed));
        assert!(r.passed(), "{}", r.report_text());
    }
}
