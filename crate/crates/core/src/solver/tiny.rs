//! Built-in exhaustive backend for tiny models.
//!
//! Depth-first enumeration over the binary variables with interval
//! propagation on the purely-binary rows and an objective bound; at each
//! complete binary assignment the continuous part (charge amounts and
//! energies) is resolved exactly per vehicle by the chain charge allocator,
//! since fixed binaries turn the remaining problem into independent
//! window-allocation subproblems.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarKind};
use crate::oracle::{allocate_charges, ChainLeg, ChargeWindow};
use crate::scalar::{cast, Scalar};
use crate::solver::{SolveResult, SolveStatus};

pub const MAX_TINY_BINARIES: usize = 25;

struct RowState<T> {
    sense: Sense,
    rhs: T,
    /// Activity bounds over the not-yet-fixed binary terms.
    min_act: T,
    max_act: T,
    binary_only: bool,
}

struct Search<'a, T> {
    model: &'a MilpModel<T>,
    binaries: Vec<usize>,
    /// var index -> (row, coeff) incidence over binary rows
    incidence: Vec<Vec<(usize, T)>>,
    rows: Vec<RowState<T>>,
    /// objective coefficient per binary, aligned with `binaries`
    obj_coeff: Vec<T>,
    /// lower bound of the continuous objective contribution, box-relaxed
    continuous_lb: T,
    assignment: Vec<bool>,
    fixed: Vec<bool>,
    obj_fixed: T,
    unfixed_negative: T,
    best: Option<(T, Vec<T>)>,
    tol: T,
}

/// Exhaustive solve; errors above [`MAX_TINY_BINARIES`] binaries.
pub fn solve_tiny<T: Scalar>(model: &MilpModel<T>) -> Result<SolveResult<T>> {
    let start = std::time::Instant::now();
    let binaries: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();
    if binaries.len() > MAX_TINY_BINARIES {
        return Err(Error::TooLarge(format!(
            "{} binary variables exceed the exhaustive limit of {MAX_TINY_BINARIES}; use external backend",
            binaries.len()
        )));
    }

    let is_binary: Vec<bool> = model
        .variables
        .iter()
        .map(|v| v.kind == VarKind::Binary)
        .collect();

    let mut rows = Vec::with_capacity(model.constraints.len());
    let mut incidence: Vec<Vec<(usize, T)>> = vec![Vec::new(); model.variables.len()];
    for c in &model.constraints {
        let binary_only = c.terms.iter().all(|&(v, _)| is_binary[v]);
        let mut min_act = T::zero();
        let mut max_act = T::zero();
        if binary_only {
            let row_idx = rows.len();
            for &(v, coeff) in &c.terms {
                incidence[v].push((row_idx, coeff));
                if coeff < T::zero() {
                    min_act = min_act + coeff;
                } else {
                    max_act = max_act + coeff;
                }
            }
        }
        rows.push(RowState {
            sense: c.sense,
            rhs: c.rhs,
            min_act,
            max_act,
            binary_only,
        });
    }

    let obj_coeff: Vec<T> = binaries
        .iter()
        .map(|&v| model.objective_coefficient(v))
        .collect();
    let unfixed_negative = obj_coeff
        .iter()
        .fold(T::zero(), |a, &c| a + c.min(T::zero()));
    let continuous_lb = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Continuous)
        .map(|(i, v)| {
            let c = model.objective_coefficient(i);
            (c * v.lower).min(c * v.upper)
        })
        .fold(T::zero(), |a, x| a + x);

    let n = binaries.len();
    let mut search = Search {
        model,
        binaries,
        incidence,
        rows,
        obj_coeff,
        continuous_lb,
        assignment: vec![false; n],
        fixed: vec![false; n],
        obj_fixed: T::zero(),
        unfixed_negative,
        best: None,
        tol: cast(1e-9),
    };
    search.dfs(0);

    let (objective, values_vec) = search
        .best
        .ok_or_else(|| Error::Solution("no feasible assignment found by the tiny backend".into()))?;
    let values: HashMap<String, T> = model
        .variables
        .iter()
        .zip(&values_vec)
        .map(|(v, &x)| (v.name.clone(), x))
        .collect();
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        objective,
        bound: objective,
        values,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

impl<T: Scalar> Search<'_, T> {
    fn dfs(&mut self, depth: usize) {
        if let Some((best, _)) = &self.best {
            if self.obj_fixed + self.unfixed_negative + self.continuous_lb >= *best - self.tol {
                return;
            }
        }
        if depth == self.binaries.len() {
            self.evaluate_leaf();
            return;
        }

        let var = self.binaries[depth];
        let bounds = &self.model.variables[var];
        let can_zero = bounds.lower < cast(0.5);
        let can_one = bounds.upper > cast(0.5);
        for value in [false, true] {
            if (value && !can_one) || (!value && !can_zero) {
                continue;
            }
            if self.fix(depth, value) {
                self.dfs(depth + 1);
            }
            self.unfix(depth, value);
        }
    }

    /// Fixes a binary and tightens row activities; false on proven conflict.
    fn fix(&mut self, depth: usize, value: bool) -> bool {
        let var = self.binaries[depth];
        self.assignment[depth] = value;
        self.fixed[depth] = true;
        let coeff = self.obj_coeff[depth];
        if value {
            self.obj_fixed = self.obj_fixed + coeff;
        }
        self.unfixed_negative = self.unfixed_negative - coeff.min(T::zero());

        let mut ok = true;
        for &(row, c) in &self.model_incidence(var) {
            let r = &mut self.rows[row];
            // the unfixed range [min, max] loses this term's slack
            if c < T::zero() {
                r.min_act = r.min_act - if value { T::zero() } else { c };
                r.max_act = r.max_act + if value { c } else { T::zero() };
            } else {
                r.max_act = r.max_act - if value { T::zero() } else { c };
                r.min_act = r.min_act + if value { c } else { T::zero() };
            }
            let infeasible = match r.sense {
                Sense::Le => r.min_act > r.rhs + self.tol,
                Sense::Ge => r.max_act < r.rhs - self.tol,
                Sense::Eq => r.min_act > r.rhs + self.tol || r.max_act < r.rhs - self.tol,
            };
            if infeasible {
                ok = false;
            }
        }
        ok
    }

    fn unfix(&mut self, depth: usize, value: bool) {
        let var = self.binaries[depth];
        self.fixed[depth] = false;
        let coeff = self.obj_coeff[depth];
        if value {
            self.obj_fixed = self.obj_fixed - coeff;
        }
        self.unfixed_negative = self.unfixed_negative + coeff.min(T::zero());
        for &(row, c) in &self.model_incidence(var) {
            let r = &mut self.rows[row];
            if c < T::zero() {
                r.min_act = r.min_act + if value { T::zero() } else { c };
                r.max_act = r.max_act - if value { c } else { T::zero() };
            } else {
                r.max_act = r.max_act + if value { T::zero() } else { c };
                r.min_act = r.min_act - if value { c } else { T::zero() };
            }
        }
    }

    fn model_incidence(&self, var: usize) -> Vec<(usize, T)> {
        self.incidence[var].clone()
    }

    fn evaluate_leaf(&mut self) {
        // all binary-only rows must hold exactly
        for r in &self.rows {
            if !r.binary_only {
                continue;
            }
            debug_assert!((r.min_act - r.max_act).abs() <= self.tol);
            let act = r.min_act;
            let ok = match r.sense {
                Sense::Le => act <= r.rhs + self.tol,
                Sense::Ge => act >= r.rhs - self.tol,
                Sense::Eq => (act - r.rhs).abs() <= self.tol,
            };
            if !ok {
                return;
            }
        }

        let model = self.model;
        let mut values = vec![T::zero(); model.variables.len()];
        for (d, &var) in self.binaries.iter().enumerate() {
            values[var] = if self.assignment[d] { T::one() } else { T::zero() };
        }
        let mut objective = self.obj_fixed;

        let has_continuous = model
            .variables
            .iter()
            .any(|v| v.kind == VarKind::Continuous);
        if has_continuous {
            // default every energy to the initial level, then walk chains
            for (&(_, _), &e) in &model.e_index {
                values[e] = model.initial_kwh;
            }
            let sink = model.n_nodes - 1;
            for k in 0..model.n_vehicles {
                let mut succ: HashMap<usize, usize> = HashMap::new();
                for (&(i, j, kk), &v) in &model.x_index {
                    if kk == k && values[v] > cast(0.5) {
                        if succ.insert(i, j).is_some() {
                            return; // double departure, rows would have caught it
                        }
                    }
                }
                let mut chain = Vec::new();
                let mut node = 0usize;
                let mut hops = 0;
                while node != sink {
                    let Some(&next) = succ.get(&node) else { return };
                    chain.push((node, next));
                    node = next;
                    hops += 1;
                    if hops > model.n_nodes {
                        return; // cycle, cannot happen on a DAG
                    }
                }
                if chain.len() != succ.len() {
                    return; // disconnected actives
                }

                let legs: Vec<ChainLeg<T>> = chain
                    .iter()
                    .map(|&(i, j)| {
                        let mut consumption = model.leg_kwh[&(i, j)];
                        let mut window = None;
                        for c in 0..model.n_stations {
                            let Some(&s) = model.s_index.get(&(i, j, k, c)) else {
                                continue;
                            };
                            if values[s] > cast(0.5) {
                                consumption = consumption + model.detour_kwh[&(i, j, c)];
                                let cp = model.cp_index[&(i, j, k, c)];
                                let cm = model.cm_index[&(i, j, k, c)];
                                window = Some(ChargeWindow {
                                    cap_kwh: model.variables[cp].upper,
                                    buy_cost: model.objective_coefficient(cp),
                                    sell_cost: model.objective_coefficient(cm),
                                });
                            }
                        }
                        ChainLeg {
                            consumption_kwh: consumption,
                            window,
                        }
                    })
                    .collect();
                let Some(schedule) =
                    allocate_charges(model.initial_kwh, model.battery_kwh, &legs)
                else {
                    return;
                };
                objective = objective + schedule.cost;
                for (l, &(i, j)) in chain.iter().enumerate() {
                    values[model.e_index[&(j, k)]] = schedule.arrival_kwh[l];
                    let net = schedule.net_kwh[l];
                    for c in 0..model.n_stations {
                        let Some(&s) = model.s_index.get(&(i, j, k, c)) else {
                            continue;
                        };
                        if values[s] > cast(0.5) {
                            let cp = model.cp_index[&(i, j, k, c)];
                            let cm = model.cm_index[&(i, j, k, c)];
                            values[cp] = net.max(T::zero());
                            values[cm] = (-net).max(T::zero());
                        }
                    }
                }
            }
        }

        let better = match &self.best {
            None => true,
            Some((b, _)) => objective < *b - cast(1e-12),
        };
        if better {
            self.best = Some((objective, values));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{RowConstraint, Variable};

    fn toy_model(n_bin: usize) -> MilpModel<f64> {
        MilpModel {
            variables: (0..n_bin)
                .map(|i| Variable {
                    name: format!("b{i}"),
                    kind: VarKind::Binary,
                    lower: 0.0,
                    upper: 1.0,
                })
                .collect(),
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
    fn binary_limit_enforced() {
        let m = toy_model(MAX_TINY_BINARIES + 1);
        let err = solve_tiny(&m).unwrap_err().to_string();
        assert!(err.contains("external backend"), "{err}");
    }

    #[test]
    fn bounds_can_force_binaries_to_zero() {
        let mut m = toy_model(3);
        for v in &mut m.variables {
            v.upper = 0.0;
        }
        m.objective = vec![(0, -5.0), (1, -5.0), (2, -5.0)];
        let r = solve_tiny(&m).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(r.values.values().all(|&v| v == 0.0));
    }

    #[test]
    fn knapsack_toy_is_solved_exactly() {
        // min -4a -5b -3c  s.t.  a + b + c <= 2
        let mut m = toy_model(3);
        m.objective = vec![(0, -4.0), (1, -5.0), (2, -3.0)];
        m.constraints.push(RowConstraint {
            name: "cap".into(),
            terms: vec![(0, 1.0), (1, 1.0), (2, 1.0)],
            sense: Sense::Le,
            rhs: 2.0,
        });
        let r = solve_tiny(&m).unwrap();
        assert_eq!(r.objective, -9.0);
        assert_eq!(r.values["b0"], 1.0);
        assert_eq!(r.values["b1"], 1.0);
        assert_eq!(r.values["b2"], 0.0);
        assert_eq!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn equality_rows_prune_infeasible_space() {
        // a + b = 1, c = 1, minimize a - b + 2c
        let mut m = toy_model(3);
        m.objective = vec![(0, 1.0), (1, -1.0), (2, 2.0)];
        m.constraints.push(RowConstraint {
            name: "pick".into(),
            terms: vec![(0, 1.0), (1, 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        m.constraints.push(RowConstraint {
            name: "force".into(),
            terms: vec![(2, 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        let r = solve_tiny(&m).unwrap();
        assert_eq!(r.objective, 1.0);
        assert_eq!(r.values["b1"], 1.0);
        assert_eq!(r.values["b2"], 1.0);
    }
}
