//! Differential runs: two programs (or two versions of one function) are
//! equivalent on an input script when they produce the same trace and the
//! same outcome class.

use std::fmt;

use crate::interp::{run, run_forcing_deopt, Action, ForcePolicy, OutcomeClass, RunResult};
use crate::ir::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    /// First differing action. `None` means that side's trace ended first.
    Diverged {
        pos: usize,
        left: Option<Action>,
        right: Option<Action>,
    },
    /// Traces agree but the outcomes do not.
    OutcomeMismatch,
    /// Both runs ran out of fuel and one trace is a prefix of the other.
    BothFuelExhaustedPrefixEqual,
}

impl Verdict {
    /// Equal, or not refuted within the fuel.
    pub fn passes(&self) -> bool {
        matches!(self, Verdict::Equal | Verdict::BothFuelExhaustedPrefixEqual)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffResult {
    pub verdict: Verdict,
    pub left: RunResult,
    pub right: RunResult,
    pub fuel: u64,
}

fn side(a: &Option<Action>) -> String {
    match a {
        Some(a) => a.to_string(),
        None => "<end>".to_string(),
    }
}

impl DiffResult {
    /// Verdict line only.
    pub fn headline(&self) -> String {
        match &self.verdict {
            Verdict::Equal => "EQUAL".to_string(),
            Verdict::Diverged { pos, left, right } => {
                format!("DIVERGED at {pos}: left={} right={}", side(left), side(right))
            }
            Verdict::OutcomeMismatch => {
                format!("OUTCOME left={} right={}", self.left.outcome, self.right.outcome)
            }
            Verdict::BothFuelExhaustedPrefixEqual => format!("INCONCLUSIVE fuel={}", self.fuel),
        }
    }
}

impl fmt::Display for DiffResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.headline())?;
        writeln!(f, "-- left")?;
        f.write_str(&self.left.format())?;
        writeln!(f, "-- right")?;
        f.write_str(&self.right.format())
    }
}

/// Compares two finished runs.
pub fn compare(left: RunResult, right: RunResult, fuel: u64) -> DiffResult {
    let lc = left.outcome.class();
    let rc = right.outcome.class();
    let both_fuel = lc == OutcomeClass::FuelExhausted && rc == OutcomeClass::FuelExhausted;
    let common = left.trace.len().min(right.trace.len());
    let first_diff = (0..common).find(|&i| left.trace[i] != right.trace[i]);
    let verdict = if let Some(pos) = first_diff {
        Verdict::Diverged {
            pos,
            left: Some(left.trace[pos].clone()),
            right: Some(right.trace[pos].clone()),
        }
    } else if both_fuel {
        Verdict::BothFuelExhaustedPrefixEqual
    } else if left.trace.len() != right.trace.len() {
        // A run that was cut short by fuel may simply not have caught up yet.
        let short_is_fuel = if left.trace.len() < right.trace.len() {
            lc == OutcomeClass::FuelExhausted
        } else {
            rc == OutcomeClass::FuelExhausted
        };
        if short_is_fuel {
            Verdict::OutcomeMismatch
        } else {
            Verdict::Diverged {
                pos: common,
                left: left.trace.get(common).cloned(),
                right: right.trace.get(common).cloned(),
            }
        }
    } else if lc != rc {
        Verdict::OutcomeMismatch
    } else {
        Verdict::Equal
    };
    DiffResult {
        verdict,
        left,
        right,
        fuel,
    }
}

pub fn diff_programs(p1: &Program, p2: &Program, inputs: &[Literal], fuel: u64) -> DiffResult {
    compare(run(p1, inputs, fuel), run(p2, inputs, fuel), fuel)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("unknown version {0}.{1}")]
    UnknownVersion(FunName, VersionName),
    #[error("harness must be a function named main, found `{0}`")]
    BadHarness(FunName),
}

/// Runs `p` once with `v1` active in `f` and once with `v2` active. When
/// `harness` is given it replaces `main`.
pub fn diff_versions(
    p: &Program,
    f: &FunName,
    v1: &VersionName,
    v2: &VersionName,
    harness: Option<&Function>,
    inputs: &[Literal],
    fuel: u64,
) -> Result<DiffResult, DiffError> {
    let mut base = p.clone();
    if let Some(h) = harness {
        if h.name != main_name() {
            return Err(DiffError::BadHarness(h.name.clone()));
        }
        match base.function_mut(&main_name()) {
            Some(m) => *m = h.clone(),
            None => base.functions.insert(0, h.clone()),
        }
    }
    let p1 = base
        .with_active(f, v1)
        .ok_or_else(|| DiffError::UnknownVersion(f.clone(), v1.clone()))?;
    let p2 = base
        .with_active(f, v2)
        .ok_or_else(|| DiffError::UnknownVersion(f.clone(), v2.clone()))?;
    Ok(diff_programs(&p1, &p2, inputs, fuel))
}

/// Normal run against a run where `policy` forces deoptimization.
pub fn check_transparency(p: &Program, inputs: &[Literal], fuel: u64, policy: ForcePolicy) -> DiffResult {
    compare(run(p, inputs, fuel), run_forcing_deopt(p, inputs, fuel, policy), fuel)
}

#[derive(Clone, Debug)]
pub struct SiteResult {
    pub site: Loc,
    pub inputs: Vec<Literal>,
    pub result: DiffResult,
}

/// One forced run per static assume site. The site's version is made
/// active first so that assumes in inactive versions are exercised too.
/// Every site is run on every script.
pub fn transparency_sweep(p: &Program, scripts: &[Vec<Literal>], fuel: u64) -> Vec<SiteResult> {
    let mut out = Vec::new();
    for site in p.assume_sites() {
        let q = p.with_active(&site.func, &site.version).expect("site exists");
        for inputs in scripts {
            let result = check_transparency(&q, inputs, fuel, ForcePolicy::Site(site.clone()));
            out.push(SiteResult {
                site: site.clone(),
                inputs: inputs.clone(),
                result,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputPlan {
    Scripts(Vec<Vec<Literal>>),
    /// Every script of exactly `max_reads` literals drawn from `pool`.
    Enumerate {
        pool: Vec<Literal>,
        max_reads: usize,
    },
}

impl InputPlan {
    pub fn scripts(&self) -> Vec<Vec<Literal>> {
        match self {
            InputPlan::Scripts(s) => s.clone(),
            InputPlan::Enumerate { pool, max_reads } => {
                if pool.is_empty() {
                    return if *max_reads == 0 { vec![Vec::new()] } else { Vec::new() };
                }
                let mut out = vec![Vec::new()];
                for _ in 0..*max_reads {
                    let mut next = Vec::with_capacity(out.len() * pool.len());
                    for prefix in &out {
                        for l in pool {
                            let mut s: Vec<Literal> = prefix.clone();
                            s.push(*l);
                            next.push(s);
                        }
                    }
                    out = next;
                }
                out
            }
        }
    }
}

/// Diffs `p1` against `p2` on every script of `plan`, stopping after the
/// first failing script unless `collect_all`.
pub fn exhaustive_diff(
    p1: &Program,
    p2: &Program,
    plan: &InputPlan,
    fuel: u64,
    collect_all: bool,
) -> Vec<(Vec<Literal>, DiffResult)> {
    let mut out = Vec::new();
    for s in plan.scripts() {
        let r = diff_programs(p1, p2, &s, fuel);
        let stop = !r.verdict.passes() && !collect_all;
        out.push((s, r));
        if stop {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Outcome;

    fn rr(trace: Vec<Action>, outcome: Outcome) -> RunResult {
        RunResult {
            outcome,
            trace,
            steps: 0,
        }
    }

    #[test]
    fn verdicts() {
        let p = |n| Action::Print(Literal::Int(n));
        let stop = Outcome::Stopped;
        let fuel = Outcome::FuelExhausted;
        assert_eq!(
            compare(rr(vec![p(1)], stop.clone()), rr(vec![p(1)], stop.clone()), 9).verdict,
            Verdict::Equal
        );
        assert_eq!(
            compare(rr(vec![p(1)], stop.clone()), rr(vec![p(2)], stop.clone()), 9).verdict,
            Verdict::Diverged {
                pos: 0,
                left: Some(p(1)),
                right: Some(p(2))
            }
        );
        assert_eq!(
            compare(rr(vec![p(1)], fuel.clone()), rr(vec![], fuel.clone()), 9).verdict,
            Verdict::BothFuelExhaustedPrefixEqual
        );
        assert_eq!(
            compare(rr(vec![], fuel.clone()), rr(vec![p(1)], stop.clone()), 9).verdict,
            Verdict::OutcomeMismatch
        );
        assert_eq!(
            compare(rr(vec![p(1)], stop.clone()), rr(vec![], stop), 9).verdict,
            Verdict::Diverged {
                pos: 0,
                left: Some(p(1)),
                right: None
            }
        );
    }

    #[test]
    fn headlines() {
        let p = |n| Action::Print(Literal::Int(n));
        let d = compare(rr(vec![p(42)], Outcome::Stopped), rr(vec![p(7)], Outcome::Stopped), 5);
        assert_eq!(d.headline(), "DIVERGED at 0: left=print 42 right=print 7");
        let d = compare(
            rr(vec![], Outcome::FuelExhausted),
            rr(vec![], Outcome::FuelExhausted),
            5,
        );
        assert_eq!(d.headline(), "INCONCLUSIVE fuel=5");
    }

    #[test]
    fn enumeration_sizes() {
        let pool = vec![Literal::Nil, Literal::Int(0), Literal::Int(1)];
        let plan = InputPlan::Enumerate {
            pool: pool.clone(),
            max_reads: 1,
        };
        assert_eq!(plan.scripts().len(), 3);
        let plan = InputPlan::Enumerate { pool, max_reads: 3 };
        assert_eq!(plan.scripts().len(), 27);
        assert!(InputPlan::Scripts(vec![]).scripts().is_empty());
    }
}
