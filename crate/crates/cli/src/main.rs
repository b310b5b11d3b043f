use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sourir::equivalence::{check_transparency, exhaustive_diff, transparency_sweep, InputPlan};
use sourir::fuzz::{run_cases, FuzzSummary, GenConfig};
use sourir::passes::{parse_pipeline, run_pipeline};
use sourir::*;

const EXIT_USAGE: u8 = 64;
const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "sourir", version, about = "Check, run, optimize and compare sourir programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report well-formedness diagnostics on standard error.
    Check { file: PathBuf },
    /// Run main and print its trace.
    Run {
        file: PathBuf,
        #[command(flatten)]
        io: IoArgs,
        /// Append the outcome and step count.
        #[arg(long)]
        trace: bool,
    },
    /// Apply a pass pipeline.
    Opt {
        file: PathBuf,
        /// Pipeline file, or the pipeline text itself.
        #[arg(long)]
        pipeline: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Compare two programs, or two versions of a function.
    Diff {
        file1: PathBuf,
        file2: Option<PathBuf>,
        #[arg(long = "fn", value_name = "F")]
        func: Option<String>,
        #[arg(long, value_name = "V")]
        v1: Option<String>,
        #[arg(long, value_name = "V")]
        v2: Option<String>,
        /// Diff every script: `pool=nil,0,1 reads=2`.
        #[arg(long, conflicts_with = "inputs")]
        enumerate: Option<String>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Compare normal runs with runs that deoptimize at assumes.
    Transparency {
        file: PathBuf,
        /// One forced run per assume site, with that site's version active.
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Generate programs and pipelines and check the end-to-end property.
    Fuzz {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: u64,
        /// TOML generator configuration.
        #[arg(long)]
        cfg: Option<PathBuf>,
        /// Where reproducers of failing cases are written.
        #[arg(long, default_value = "fuzz-failures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IoArgs {
    /// `@file` or an inline comma-separated list of literals.
    #[arg(long)]
    inputs: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
}

/// A failure already reported to the user, carrying the exit code.
struct Fail(u8);

fn fail(msg: impl std::fmt::Display) -> Fail {
    eprintln!("sourir: {msg}");
    Fail(1)
}

fn usage(msg: impl std::fmt::Display) -> Fail {
    eprintln!("sourir: {msg}");
    Fail(EXIT_USAGE)
}

fn read_file(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Fail> {
    let src = read_file(path)?;
    parse_program(&src).map_err(|e| fail(format!("{}:{e}", path.display())))
}

/// Parses and checks; diagnostics go to standard error.
fn load_checked(path: &Path) -> Result<Program, Fail> {
    let p = load(path)?;
    let diags = check_program(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        for d in &diags {
            eprintln!("{d}");
        }
        Err(Fail(1))
    }
}

fn parse_inputs_arg(arg: &Option<String>) -> Result<Vec<Literal>, Fail> {
    let Some(a) = arg else { return Ok(Vec::new()) };
    let text = match a.strip_prefix('@') {
        Some(path) => read_file(Path::new(path))?,
        None => a.clone(),
    };
    parse_inputs(&text).map_err(|e| usage(format!("--inputs: {e}")))
}

fn parse_enumerate(s: &str) -> Result<InputPlan, Fail> {
    let mut pool = None;
    let mut reads = None;
    for part in s.split_whitespace() {
        match part.split_once('=') {
            Some(("pool", v)) => {
                pool = Some(parse_inputs(v).map_err(|e| usage(format!("--enumerate pool: {e}")))?);
            }
            Some(("reads", v)) => {
                reads = Some(v.parse().map_err(|_| usage("--enumerate reads must be a number"))?);
            }
            _ => return Err(usage(format!("--enumerate: unexpected `{part}`"))),
        }
    }
    match (pool, reads) {
        (Some(pool), Some(max_reads)) => Ok(InputPlan::Enumerate { pool, max_reads }),
        _ => Err(usage("--enumerate needs pool=.. and reads=..")),
    }
}

fn cmd_check(file: &Path) -> Result<(), Fail> {
    load_checked(file).map(|_| ())
}

fn cmd_run(file: &Path, io: &IoArgs, trace: bool) -> Result<(), Fail> {
    let p = load_checked(file)?;
    let inputs = parse_inputs_arg(&io.inputs)?;
    let r = run(&p, &inputs, io.fuel);
    print!("{}", if trace { r.format() } else { r.format_actions() });
    match &r.outcome {
        Outcome::Stopped => Ok(()),
        Outcome::RuntimeError(e) => {
            eprintln!("sourir: runtime error: {e}");
            Err(Fail(2))
        }
        Outcome::FuelExhausted => {
            eprintln!("sourir: out of fuel after {} steps", r.steps);
            Err(Fail(3))
        }
    }
}

fn cmd_opt(file: &Path, pipeline: &str, output: &Option<PathBuf>) -> Result<(), Fail> {
    let p = load_checked(file)?;
    let text = if Path::new(pipeline).is_file() {
        read_file(Path::new(pipeline))?
    } else {
        pipeline.to_string()
    };
    let specs = parse_pipeline(&text).map_err(|e| usage(format!("--pipeline: {e}")))?;
    let (q, reports) = run_pipeline(&p, &specs).map_err(|e| {
        if let passes::PipelineError::Aborted { diagnostics, .. } = &e {
            for d in diagnostics {
                eprintln!("{d}");
            }
        }
        fail(e)
    })?;
    let out = print_program(&q);
    match output {
        Some(path) => {
            fs::write(path, out).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            for r in &reports {
                println!("{r}");
            }
        }
        None => {
            print!("{out}");
            for r in &reports {
                eprintln!("{r}");
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_diff(
    file1: &Path,
    file2: &Option<PathBuf>,
    func: &Option<String>,
    v1: &Option<String>,
    v2: &Option<String>,
    enumerate: &Option<String>,
    io: &IoArgs,
) -> Result<(), Fail> {
    let p1 = load_checked(file1)?;
    let (left, right) = match (file2, func, v1, v2) {
        (Some(f2), None, None, None) => (p1, load_checked(f2)?),
        (None, Some(f), Some(a), Some(b)) => {
            let f = FunName::new(f);
            let (a, b) = (VersionName::new(a), VersionName::new(b));
            let pa = p1
                .with_active(&f, &a)
                .ok_or_else(|| fail(format!("unknown version {f}.{a}")))?;
            let pb = p1
                .with_active(&f, &b)
                .ok_or_else(|| fail(format!("unknown version {f}.{b}")))?;
            (pa, pb)
        }
        _ => return Err(usage("diff takes two files, or one file with --fn, --v1 and --v2")),
    };
    let plan = match enumerate {
        Some(s) => parse_enumerate(s)?,
        None => InputPlan::Scripts(vec![parse_inputs_arg(&io.inputs)?]),
    };
    let results = exhaustive_diff(&left, &right, &plan, io.fuel, false);
    let single = !matches!(plan, InputPlan::Enumerate { .. });
    let mut ok = true;
    for (inputs, r) in &results {
        if single {
            print!("{r}");
        } else if r.verdict.passes() {
            println!("[{}] {}", print_inputs_inline(inputs), r.headline());
        } else {
            println!("[{}] {r}", print_inputs_inline(inputs));
        }
        ok &= r.verdict.passes();
    }
    if !single {
        println!("{} script(s) compared", results.len());
    }
    if ok {
        Ok(())
    } else {
        Err(Fail(1))
    }
}

fn print_inputs_inline(inputs: &[Literal]) -> String {
    text::print_inputs(inputs).trim_end().to_string()
}

fn cmd_transparency(file: &Path, sweep: bool, io: &IoArgs) -> Result<(), Fail> {
    let p = load_checked(file)?;
    let inputs = parse_inputs_arg(&io.inputs)?;
    if !sweep {
        let r = check_transparency(&p, &inputs, io.fuel, ForcePolicy::All);
        print!("{r}");
        return if r.verdict.passes() { Ok(()) } else { Err(Fail(1)) };
    }
    let results = transparency_sweep(&p, std::slice::from_ref(&inputs), io.fuel);
    let mut first_bad = None;
    for s in &results {
        println!("{}: {}", s.site, s.result.headline());
        if first_bad.is_none() && !s.result.verdict.passes() {
            first_bad = Some(s);
        }
    }
    println!("{} site(s) checked", results.len());
    match first_bad {
        None => Ok(()),
        Some(s) => {
            println!("-- first failure at {}", s.site);
            print!("{}", s.result);
            Err(Fail(1))
        }
    }
}

fn cmd_fuzz(seed: Option<u64>, count: u64, cfg: &Option<PathBuf>, out: &Path) -> Result<(), Fail> {
    let mut config = match cfg {
        Some(path) => {
            let text = read_file(path)?;
            toml::from_str::<GenConfig>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => GenConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(usage)?;
    let reports = run_cases(&config, count);
    let summary = FuzzSummary::from_reports(&reports);
    print!("{summary}");
    let Some(bad) = reports.iter().find(|r| !r.passed()) else {
        return Ok(());
    };
    for r in reports.iter().filter(|r| !r.passed()) {
        let dir = r
            .write_reproducer(out)
            .map_err(|e| fail(format!("{}: {e}", out.display())))?;
        println!("reproducer: {}", dir.display());
    }
    println!("-- first counterexample (seed {})", bad.seed);
    print!("{}", bad.report_text());
    Err(Fail(1))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file),
        Command::Run { file, io, trace } => cmd_run(file, io, *trace),
        Command::Opt { file, pipeline, output } => cmd_opt(file, pipeline, output),
        Command::Diff {
            file1,
            file2,
            func,
            v1,
            v2,
            enumerate,
            io,
        } => cmd_diff(file1, file2, func, v1, v2, enumerate, io),
        Command::Transparency { file, sweep, io } => cmd_transparency(file, *sweep, io),
        Command::Fuzz { seed, count, cfg, out } => cmd_fuzz(*seed, *count, cfg, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code)) => ExitCode::from(code),
    }
}
