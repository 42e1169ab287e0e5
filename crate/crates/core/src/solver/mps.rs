//! Free-format MPS export.
//!
//! Sections: NAME, OBJSENSE (MIN), ROWS, COLUMNS (binaries inside an
//! INTORG/INTEND marker pair, with explicit 0/1 bounds), RHS (zeros
//! omitted), BOUNDS, ENDATA. Values are printed with the shortest
//! round-tripping representation, so re-parsing reproduces the matrix bit
//! for bit.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarKind};
use crate::scalar::Scalar;

const MAX_NAME_LEN: usize = 255;

pub fn write_mps<T: Scalar, W: Write>(model: &MilpModel<T>, mut w: W) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Solver(format!("writing MPS: {e}"));

    for v in &model.variables {
        if v.name.len() > MAX_NAME_LEN {
            return Err(Error::Model(format!(
                "variable name over {MAX_NAME_LEN} chars: {}",
                v.name
            )));
        }
    }
    for c in &model.constraints {
        if c.name.len() > MAX_NAME_LEN {
            return Err(Error::Model(format!(
                "row name over {MAX_NAME_LEN} chars: {}",
                c.name
            )));
        }
    }

    writeln!(w, "NAME EVMAAS").map_err(io_err)?;
    writeln!(w, "OBJSENSE\n    MIN").map_err(io_err)?;
    writeln!(w, "ROWS").map_err(io_err)?;
    writeln!(w, " N obj").map_err(io_err)?;
    for c in &model.constraints {
        let kind = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        writeln!(w, " {} {}", kind, c.name).map_err(io_err)?;
    }

    // per-column entries in row order
    let mut col_entries: Vec<Vec<(&str, T)>> = vec![Vec::new(); model.variables.len()];
    for &(v, coeff) in &model.objective {
        col_entries[v].push(("obj", coeff));
    }
    for c in &model.constraints {
        for &(v, coeff) in &c.terms {
            col_entries[v].push((c.name.as_str(), coeff));
        }
    }

    writeln!(w, "COLUMNS").map_err(io_err)?;
    let mut in_integer_block = false;
    for (v, var) in model.variables.iter().enumerate() {
        match (var.kind, in_integer_block) {
            (VarKind::Binary, false) => {
                writeln!(w, "    MARKER 'MARKER' 'INTORG'").map_err(io_err)?;
                in_integer_block = true;
            }
            (VarKind::Continuous, true) => {
                writeln!(w, "    MARKER 'MARKER' 'INTEND'").map_err(io_err)?;
                in_integer_block = false;
            }
            _ => {}
        }
        for (row, coeff) in &col_entries[v] {
            writeln!(w, "    {} {} {}", var.name, row, coeff).map_err(io_err)?;
        }
    }
    if in_integer_block {
        writeln!(w, "    MARKER 'MARKER' 'INTEND'").map_err(io_err)?;
    }

    writeln!(w, "RHS").map_err(io_err)?;
    for c in &model.constraints {
        if c.rhs != T::zero() {
            writeln!(w, "    rhs {} {}", c.name, c.rhs).map_err(io_err)?;
        }
    }

    writeln!(w, "BOUNDS").map_err(io_err)?;
    for var in &model.variables {
        if var.lower == var.upper {
            writeln!(w, " FX bnd {} {}", var.name, var.lower).map_err(io_err)?;
            continue;
        }
        if var.lower != T::zero() {
            writeln!(w, " LO bnd {} {}", var.name, var.lower).map_err(io_err)?;
        }
        writeln!(w, " UP bnd {} {}", var.name, var.upper).map_err(io_err)?;
    }
    writeln!(w, "ENDATA").map_err(io_err)?;
    Ok(())
}

pub fn write_mps_file<T: Scalar>(model: &MilpModel<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_mps(model, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{RowConstraint, Variable};
    use std::collections::HashMap;

    fn empty_model() -> MilpModel<f64> {
        MilpModel {
            variables: vec![],
            constraints: vec![],
            objective: vec![],
            x_index: HashMap::new(),
            s_index: HashMap::new(),
            cp_index: HashMap::new(),
            cm_index: HashMap::new(),
            e_index: HashMap::new(),
            n_nodes: 2,
            n_vehicles: 0,
            n_stations: 0,
            leg_kwh: HashMap::new(),
            detour_kwh: HashMap::new(),
            price_eur_kwh: HashMap::new(),
            initial_kwh: 0.0,
            battery_kwh: 0.0,
            big_m: 0.0,
            degradation_eur_kwh: 0.0,
            tie_break_eur_kwh: 0.0,
        }
    }

    #[test]
    fn empty_model_writes_valid_sections() {
        let mut buf = Vec::new();
        write_mps(&empty_model(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(text.contains(section), "missing {section}");
        }
    }

    #[test]
    fn bounds_go_to_the_bounds_section() {
        let mut m = empty_model();
        m.variables.push(Variable {
            name: "Cp_0_1_0_0".into(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: 36.2,
        });
        m.objective.push((0, 0.1));
        m.constraints.push(RowConstraint {
            name: "cap_0".into(),
            terms: vec![(0, 1.0)],
            sense: Sense::Le,
            rhs: 5.0,
        });
        let mut buf = Vec::new();
        write_mps(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(" UP bnd Cp_0_1_0_0 36.2"));
        // the upper bound must not appear as a row
        let rows_section = text.split("COLUMNS").next().unwrap();
        assert!(!rows_section.contains("36.2"));
    }

    #[test]
    fn binaries_are_marked_integer() {
        let mut m = empty_model();
        m.variables.push(Variable {
            name: "X_0_1_0".into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
        m.variables.push(Variable {
            name: "E_0_0".into(),
            kind: VarKind::Continuous,
            lower: 3.0,
            upper: 3.0,
        });
        m.objective.push((0, -1.0));
        m.constraints.push(RowConstraint {
            name: "c0".into(),
            terms: vec![(0, 1.0), (1, 0.5)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        let mut buf = Vec::new();
        write_mps(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let intorg = text.find("INTORG").unwrap();
        let intend = text.find("INTEND").unwrap();
        let x = text.find("X_0_1_0 obj").unwrap();
        assert!(intorg < x && x < intend);
        assert!(text.contains(" FX bnd E_0_0 3"));
    }
}
