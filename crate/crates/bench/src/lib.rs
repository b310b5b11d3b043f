//! Programs shared by the benchmarks.

use sourir::passes::{parse_pipeline, PassSpec};
use sourir::{parse_program, Program};

pub const FIG5_BASE: &str = include_str!("../../core/fixtures/fig5_base.sourir");
pub const FIG5_PIPELINE: &str = include_str!("../../core/fixtures/fig5.pipeline");
pub const FIG8: &str = include_str!("../../core/fixtures/fig8.sourir");
pub const FIG14: &str = include_str!("../../core/fixtures/fig14.sourir");
pub const FIG14_BASE: &str = include_str!("../../core/fixtures/fig14_base.sourir");
pub const FIG14_PIPELINE: &str = include_str!("../../core/fixtures/fig14.pipeline");

pub fn program(src: &str) -> Program {
    parse_program(src).expect("bench fixture parses")
}

pub fn pipeline(src: &str) -> Vec<PassSpec> {
    parse_pipeline(src).expect("bench pipeline parses")
}

/// A straight-line loop that counts to `n`.
pub fn counting_loop(n: i64) -> Program {
    program(&format!(
        "func main()\nversion V\n  var i = 0\n  var s = 0\n  L0: branch i < {n} L1 L2\n  L1: s <- s + i\n  i <- i + 1\n  goto L0\n  L2: print s\n  stop\n"
    ))
}
