use std::path::Path;

use sourir::fuzz::{run_case, FuzzSummary, GenConfig};
use sourir::passes::parse_pipeline;
use sourir::*;

#[test]
fn reproducer_rebuilds_the_case() {
    let r = run_case(&GenConfig::with_seed(77));
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("reproducer-test");
    let _ = std::fs::remove_dir_all(&dir);
    let d = r.write_reproducer(&dir).unwrap();
    assert_eq!(d, dir.join("case-77"));
    let read = |f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(parse_program(&read("program.sourir")).unwrap(), r.program);
    assert_eq!(parse_pipeline(&read("pipeline.txt")).unwrap(), r.pipeline);
    let scripts: Vec<Vec<Literal>> = read("inputs.txt").lines().map(|l| parse_inputs(l).unwrap()).collect();
    assert_eq!(scripts, r.scripts);
    assert_eq!(read("report.txt"), r.report_text());
}

#[test]
fn same_seed_same_case() {
    let a = run_case(&GenConfig::with_seed(9));
    let b = run_case(&GenConfig::with_seed(9));
    assert_eq!(a.program, b.program);
    assert_eq!(a.pipeline, b.pipeline);
    assert_eq!(a.scripts, b.scripts);
    assert_eq!(a.verdicts, b.verdicts);
}

#[test]
fn summary_counts() {
    let reports: Vec<_> = (0..10).map(|s| run_case(&GenConfig::with_seed(s))).collect();
    let s = FuzzSummary::from_reports(&reports);
    assert_eq!(s.cases, 10);
    assert_eq!(s.scripts, 30);
    assert_eq!(s.equal + s.inconclusive, 30);
    assert!(s.failed_seeds.is_empty());
    assert!(s.to_string().contains("failures: none"));
}

#[test]
fn config_reads_from_toml() {
    let cfg = GenConfig::with_seed(4);
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(toml::from_str::<GenConfig>(&text).unwrap(), cfg);
    let partial: GenConfig = toml::from_str("max_functions = 1\nliteral_pool = [\"0\", \"nil\"]\n").unwrap();
    assert_eq!(partial.max_functions, 1);
    assert_eq!(partial.pool().unwrap(), vec![Literal::Int(0), Literal::Nil]);
    assert_eq!(partial.fuel, GenConfig::default().fuel);
    assert!(toml::from_str::<GenConfig>("max_fns = 1\n").is_err());
    let zero = GenConfig {
        max_instrs: 0,
        ..GenConfig::default()
    };
    assert!(zero.validate().is_err());
}
