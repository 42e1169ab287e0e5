//! Solution-file parsing for external solvers.
//!
//! Two dialects are recognized, line by line:
//! - value per line: `name value` (as written by the bundled script; also a
//!   `status …` header and an optional `objective …` line);
//! - columnar with a status header: a first line mentioning
//!   Optimal/Infeasible, then `index name value [reduced_cost]` rows
//!   (CBC-style).
//!
//! Unknown names are ignored; variables absent from the file are zero
//! (solvers commonly print nonzeros only).

use std::collections::{HashMap, HashSet};

use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimedStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct ParsedSolution<T> {
    pub status: ClaimedStatus,
    pub values: HashMap<String, T>,
}

pub fn parse_solution<T: Scalar>(text: &str, known: &HashSet<&str>) -> ParsedSolution<T> {
    let mut status = ClaimedStatus::Unknown;
    let mut values = HashMap::new();

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        if lower.contains("infeasible") {
            status = ClaimedStatus::Infeasible;
            continue;
        }
        if lower.contains("optimal") && status != ClaimedStatus::Infeasible {
            status = ClaimedStatus::Optimal;
            continue;
        }

        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens.as_slice() {
            ["status", s] => {
                status = match s.to_ascii_lowercase().as_str() {
                    "optimal" => ClaimedStatus::Optimal,
                    "infeasible" => ClaimedStatus::Infeasible,
                    "feasible" | "gap-feasible" | "time_limit" => ClaimedStatus::Feasible,
                    _ => ClaimedStatus::Unknown,
                };
            }
            ["objective", _] => {}
            [name, value] if known.contains(name) => {
                if let Ok(v) = value.parse::<f64>() {
                    values.insert((*name).to_string(), cast(v));
                }
            }
            [index, name, value, ..]
                if known.contains(name) && index.parse::<i64>().is_ok() =>
            {
                if let Ok(v) = value.parse::<f64>() {
                    values.insert((*name).to_string(), cast(v));
                }
            }
            _ => {}
        }
    }

    ParsedSolution { status, values }
}
