use criterion::{black_box, criterion_group, criterion_main, Criterion};

use sourir::equivalence::{exhaustive_diff, transparency_sweep, InputPlan};
use sourir::fuzz::{run_case, GenConfig};
use sourir::passes::run_pipeline;
use sourir::{check_program, parse_program, print_program, run, Literal};
use sourir_bench::*;

fn text(c: &mut Criterion) {
    let p = program(FIG14);
    let printed = print_program(&p);
    c.bench_function("parse fig14", |b| {
        b.iter(|| parse_program(black_box(&printed)).unwrap())
    });
    c.bench_function("print fig14", |b| b.iter(|| print_program(black_box(&p))));
    c.bench_function("check fig14", |b| b.iter(|| check_program(black_box(&p))));
}

fn interp(c: &mut Criterion) {
    let fig8 = program(FIG8);
    c.bench_function("run fig8", |b| b.iter(|| run(black_box(&fig8), &[], 1_000_000)));
    let lp = counting_loop(10_000);
    c.bench_function("run loop 10k", |b| b.iter(|| run(black_box(&lp), &[], 1_000_000)));
}

fn passes(c: &mut Criterion) {
    let base = program(FIG5_BASE);
    let specs = pipeline(FIG5_PIPELINE);
    c.bench_function("pipeline fig5", |b| {
        b.iter(|| run_pipeline(black_box(&base), &specs).unwrap())
    });
    let base14 = program(FIG14_BASE);
    let specs14 = pipeline(FIG14_PIPELINE);
    c.bench_function("pipeline fig14", |b| {
        b.iter(|| run_pipeline(black_box(&base14), &specs14).unwrap())
    });
}

fn equivalence(c: &mut Criterion) {
    let base = program(FIG14_BASE);
    let opt = run_pipeline(&base, &pipeline(FIG14_PIPELINE)).unwrap().0;
    let plan = InputPlan::Enumerate {
        pool: vec![Literal::Nil, Literal::Int(0), Literal::Int(1), Literal::Int(2)],
        max_reads: 4,
    };
    c.bench_function("exhaustive diff fig14", |b| {
        b.iter(|| exhaustive_diff(&base, &opt, &plan, 100_000, true))
    });
    let fig14 = program(FIG14);
    let scripts = plan.scripts();
    c.bench_function("transparency sweep fig14", |b| {
        b.iter(|| transparency_sweep(&fig14, &scripts, 100_000))
    });
}

fn fuzz(c: &mut Criterion) {
    let mut seed = 0;
    c.bench_function("fuzz case", |b| {
        b.iter(|| {
            seed += 1;
            run_case(&GenConfig::with_seed(seed))
        })
    });
}

criterion_group!(benches, text, interp, passes, equivalence, fuzz);
criterion_main!(benches);
