//! A small intermediate representation for speculative optimization.
//!
//! Functions carry several versions; the first one is active. `assume`
//! instructions guard speculation and deoptimize to another version when a
//! predicate fails. The crate provides the IR, a text format, a static
//! checker, a reference interpreter, the optimization passes, differential
//! testing and a program fuzzer.

pub mod equivalence;
pub mod fuzz;
pub mod interp;
pub mod ir;
pub mod passes;
pub mod text;
pub mod wellformed;

pub use interp::{run, run_forcing_deopt, Action, ErrorKind, ForcePolicy, Outcome, RunResult, Value};
pub use ir::*;
pub use text::{parse_inputs, parse_program, print_program, ParseError};
pub use wellformed::{check_program, scope_at, DiagCode, Diagnostic};
