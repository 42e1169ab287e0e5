//! Solving MILP models: file-based integration with external solvers (MPS
//! out, solution file in) and a built-in exhaustive backend for tiny models.
//! Returned values are always re-checked against every model constraint
//! before being trusted.

mod mps;
mod solution;
mod tiny;

pub use mps::{write_mps, write_mps_file};
pub use solution::{parse_solution, ClaimedStatus, ParsedSolution};
pub use tiny::{solve_tiny, MAX_TINY_BINARIES};

use std::collections::HashMap;
use std::process::Command;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarKind};
use crate::scalar::{cast, Scalar};

pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Run a configured command on an MPS file and parse its solution file.
    ExternalCommand,
    /// Built-in exhaustive search, up to [`MAX_TINY_BINARIES`] binaries.
    BuiltinTiny,
}

#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub backend: Backend,
    /// Command template with `{mps}`, `{sol}`, `{gap}`, `{timelimit}`
    /// placeholders.
    pub solver_command: Option<String>,
    /// Relative MIP gap.
    pub mip_gap: f64,
    pub time_limit_s: f64,
    pub threads: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            backend: Backend::BuiltinTiny,
            solver_command: None,
            mip_gap: 1e-4,
            time_limit_s: 600.0,
            threads: 1,
        }
    }
}

impl SolveSettings {
    pub fn external(command: impl Into<String>) -> Self {
        SolveSettings {
            backend: Backend::ExternalCommand,
            solver_command: Some(command.into()),
            ..SolveSettings::default()
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.mip_gap = gap;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit_s = seconds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mip_gap < 0.0 {
            return Err(Error::Invalid("mip gap must be >= 0".into()));
        }
        if self.time_limit_s <= 0.0 {
            return Err(Error::Invalid("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    GapFeasible,
    Infeasible,
    TimeoutNoSolution,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    /// Objective recomputed from the returned values, never trusted from the
    /// solver.
    pub objective: T,
    pub bound: T,
    pub values: HashMap<String, T>,
    pub wall_time_s: f64,
}

/// Checks a full assignment against every constraint, bound and integrality
/// mark; returns human-readable violations.
pub fn check_values<T: Scalar>(model: &MilpModel<T>, values: &HashMap<String, T>) -> Vec<String> {
    let tol: T = cast(FEASIBILITY_TOL);
    let by_index = model.values_by_index(values);
    let mut out = Vec::new();
    for (i, var) in model.variables.iter().enumerate() {
        let x = by_index[i];
        if !x.is_finite() {
            out.push(format!("{} is not finite", var.name));
            continue;
        }
        if x < var.lower - tol || x > var.upper + tol {
            out.push(format!(
                "{} = {} outside bounds [{}, {}]",
                var.name, x, var.lower, var.upper
            ));
        }
        if var.kind == VarKind::Binary && (x - x.round()).abs() > tol {
            out.push(format!("{} = {} is not integral", var.name, x));
        }
    }
    for c in &model.constraints {
        let lhs = c
            .terms
            .iter()
            .fold(T::zero(), |a, &(v, coeff)| a + coeff * by_index[v]);
        let violated = match c.sense {
            Sense::Le => lhs > c.rhs + tol,
            Sense::Ge => lhs < c.rhs - tol,
            Sense::Eq => (lhs - c.rhs).abs() > tol,
        };
        if violated {
            out.push(format!(
                "row {}: lhs {} vs rhs {}",
                c.name, lhs, c.rhs
            ));
        }
    }
    out
}

/// Solves through the configured backend. Any claimed-feasible result is
/// verified against the full constraint system before it is returned.
pub fn solve<T: Scalar>(model: &MilpModel<T>, settings: &SolveSettings) -> Result<SolveResult<T>> {
    settings.validate()?;
    let result = match settings.backend {
        Backend::BuiltinTiny => solve_tiny(model)?,
        Backend::ExternalCommand => solve_external(model, settings)?,
    };
    if matches!(
        result.status,
        SolveStatus::Optimal | SolveStatus::GapFeasible
    ) {
        let violations = check_values(model, &result.values);
        if !violations.is_empty() {
            return Err(Error::Solution(format!(
                "solver values violate the model: {}",
                violations.join("; ")
            )));
        }
    }
    Ok(result)
}

fn solve_external<T: Scalar>(
    model: &MilpModel<T>,
    settings: &SolveSettings,
) -> Result<SolveResult<T>> {
    let template = settings
        .solver_command
        .as_deref()
        .ok_or_else(|| Error::Solver("external backend needs a solver command".into()))?;

    let dir = tempfile::tempdir().map_err(|e| Error::io("solver tempdir", e))?;
    let mps_path = dir.path().join("model.mps");
    let sol_path = dir.path().join("model.sol");
    write_mps_file(model, &mps_path)?;

    let command = template
        .replace("{mps}", &mps_path.display().to_string())
        .replace("{sol}", &sol_path.display().to_string())
        .replace("{gap}", &settings.mip_gap.to_string())
        .replace("{timelimit}", &settings.time_limit_s.to_string());

    let start = std::time::Instant::now();
    let output = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .current_dir(dir.path())
        .output()
        .map_err(|e| Error::Solver(format!("spawning `{command}`: {e}")))?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let stdout = String::from_utf8_lossy(&output.stdout);
    let stderr = String::from_utf8_lossy(&output.stderr);
    if !output.status.success() {
        return Err(Error::Solver(format!(
            "`{command}` exited with {}\nstdout:\n{stdout}\nstderr:\n{stderr}",
            output.status
        )));
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|_| {
        Error::Solver(format!(
            "`{command}` produced no solution file\nstdout:\n{stdout}\nstderr:\n{stderr}"
        ))
    })?;

    let known: std::collections::HashSet<&str> =
        model.variables.iter().map(|v| v.name.as_str()).collect();
    let parsed: ParsedSolution<T> = parse_solution(&text, &known);

    match parsed.status {
        ClaimedStatus::Infeasible => Ok(SolveResult {
            status: SolveStatus::Infeasible,
            objective: T::zero(),
            bound: T::neg_infinity(),
            values: HashMap::new(),
            wall_time_s,
        }),
        ClaimedStatus::Unknown if parsed.values.is_empty() => Ok(SolveResult {
            status: SolveStatus::TimeoutNoSolution,
            objective: T::zero(),
            bound: T::neg_infinity(),
            values: HashMap::new(),
            wall_time_s,
        }),
        claimed => {
            let by_index = model.values_by_index(&parsed.values);
            let objective = model.objective_value(&by_index);
            let status = if claimed == ClaimedStatus::Optimal {
                SolveStatus::Optimal
            } else {
                SolveStatus::GapFeasible
            };
            Ok(SolveResult {
                status,
                objective,
                bound: if status == SolveStatus::Optimal {
                    objective
                } else {
                    T::neg_infinity()
                },
                values: parsed.values,
                wall_time_s,
            })
        }
    }
}
