//! Solver-neutral MILP assembly for one day of fleet operations.
//!
//! Variables (zero-based indices, depot nodes 0 and I+1):
//! - `X_{i}_{j}_{k}`: binary, vehicle k performs transition (i, j);
//! - `S_{i}_{j}_{k}_{c}`: binary, vehicle k passes by station c during (i, j);
//! - `Cp_{i}_{j}_{k}_{c}` / `Cm_{i}_{j}_{k}_{c}`: kWh charged / discharged;
//! - `E_{j}_{k}`: state of energy of vehicle k at node j, kWh.
//!
//! Constraints: each request served at most once and departed at most once,
//! per-vehicle flow continuity through every request node, per-vehicle depot
//! departure/return equalities, station visits only on traversed arcs,
//! charge amounts within the window bound, and a big-M pair that activates
//! the energy recursion `e_j = e_i - E_ij + sum_c C_ijc` on traversed arcs,
//! with node energies boxed in [0, E_max] and both depot states fixed to E_b0.
//!
//! Objective (minimized): foregone request revenue, energy cost at the
//! transition's average price, linearized degradation on total throughput,
//! plus a tiny tie-break on throughput.

use std::collections::HashMap;

use crate::dag::{check_consistency, TransitionGraph};
use crate::degradation::DegradationParams;
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::scenario::Scenario;
use crate::TIE_BREAK_EUR_PER_KWH;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable<T> {
    pub name: String,
    pub kind: VarKind,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct RowConstraint<T> {
    pub name: String,
    /// (variable index, coefficient), one entry per variable.
    pub terms: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct MilpModel<T> {
    pub variables: Vec<Variable<T>>,
    pub constraints: Vec<RowConstraint<T>>,
    /// Minimization objective, sparse over variable indices.
    pub objective: Vec<(usize, T)>,

    pub x_index: HashMap<(usize, usize, usize), usize>,
    pub s_index: HashMap<(usize, usize, usize, usize), usize>,
    pub cp_index: HashMap<(usize, usize, usize, usize), usize>,
    pub cm_index: HashMap<(usize, usize, usize, usize), usize>,
    pub e_index: HashMap<(usize, usize), usize>,

    pub n_nodes: usize,
    pub n_vehicles: usize,
    pub n_stations: usize,
    /// Driving energy of each feasible arc (deadhead + head service), kWh.
    pub leg_kwh: HashMap<(usize, usize), T>,
    /// Extra driving energy of each charge-feasible station detour, kWh.
    pub detour_kwh: HashMap<(usize, usize, usize), T>,
    /// Average electricity price over each transition window, EUR/kWh.
    pub price_eur_kwh: HashMap<(usize, usize), T>,
    pub initial_kwh: T,
    pub battery_kwh: T,
    pub big_m: T,
    /// Linearized degradation cost, EUR/kWh of throughput.
    pub degradation_eur_kwh: T,
    /// Tie-break cost on throughput, EUR/kWh.
    pub tie_break_eur_kwh: T,
}

impl<T: Scalar> MilpModel<T> {
    pub fn n_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn objective_coefficient(&self, var: usize) -> T {
        self.objective
            .iter()
            .find(|(v, _)| *v == var)
            .map(|(_, c)| *c)
            .unwrap_or_else(T::zero)
    }

    /// Objective value of a full assignment indexed by variable position.
    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, &(v, c)| acc + c * values[v])
    }

    /// Maps a name-keyed solution onto variable positions; missing variables
    /// default to zero (solvers commonly print nonzeros only).
    pub fn values_by_index(&self, values: &HashMap<String, T>) -> Vec<T> {
        self.variables
            .iter()
            .map(|v| values.get(&v.name).copied().unwrap_or_else(T::zero))
            .collect()
    }
}

pub fn build_model<T: Scalar>(
    scenario: &Scenario<T>,
    graph: &TransitionGraph<T>,
    degradation: &DegradationParams<T>,
) -> Result<MilpModel<T>> {
    check_consistency(scenario, graph)?;
    degradation.validate()?;
    let fleet = &scenario.fleet;
    if fleet.initial_kwh < T::zero() || fleet.initial_kwh > fleet.battery_kwh {
        return Err(Error::Model(format!(
            "initial energy {} outside [0, {}] kWh",
            fleet.initial_kwh, fleet.battery_kwh
        )));
    }

    let n = graph.n_nodes();
    let sink = graph.sink();
    let k_count = fleet.n_vehicles;
    let c_count = graph.n_stations();
    let marginal = degradation.marginal_cost()?;
    let tie_break: T = cast(TIE_BREAK_EUR_PER_KWH);

    let mut model = MilpModel {
        variables: Vec::new(),
        constraints: Vec::new(),
        objective: Vec::new(),
        x_index: HashMap::new(),
        s_index: HashMap::new(),
        cp_index: HashMap::new(),
        cm_index: HashMap::new(),
        e_index: HashMap::new(),
        n_nodes: n,
        n_vehicles: k_count,
        n_stations: c_count,
        leg_kwh: HashMap::new(),
        detour_kwh: HashMap::new(),
        price_eur_kwh: HashMap::new(),
        initial_kwh: fleet.initial_kwh,
        battery_kwh: fleet.battery_kwh,
        big_m: T::zero(),
        degradation_eur_kwh: marginal,
        tie_break_eur_kwh: tie_break,
    };

    let mut arcs = Vec::new();
    let mut max_cons = T::zero();
    let mut max_chat = T::zero();
    for i in 0..n {
        for j in 0..n {
            if !graph.arc_feasible(i, j) {
                continue;
            }
            arcs.push((i, j));
            let cons = graph.leg_consumption_kwh(i, j, fleet.consumption_kwh_per_km);
            max_cons = max_cons.max(cons);
            model.leg_kwh.insert((i, j), cons);

            let w_start = graph.window_start(i);
            let w_end = graph.node_time(j);
            let price = if w_start < w_end.min(scenario.horizon_min) {
                scenario.prices.average_over(w_start, w_end)?
            } else {
                T::zero()
            };
            model.price_eur_kwh.insert((i, j), price);

            for c in 0..c_count {
                if graph.charge_feasible(i, j, c) {
                    max_chat = max_chat.max(graph.max_charge_energy(i, j, c));
                    model.detour_kwh.insert(
                        (i, j, c),
                        graph.detour_km(i, j, c) * fleet.consumption_kwh_per_km,
                    );
                }
            }
        }
    }
    // vacuous exactly when X = 0: any M >= E_max works; the driving and
    // charging headroom keeps it safely clear of active constraints
    model.big_m = fleet.battery_kwh + max_cons + max_chat;

    // variables: binaries first (X, then S), then Cp, Cm, E
    for &(i, j) in &arcs {
        for k in 0..k_count {
            let idx = model.variables.len();
            model.variables.push(Variable {
                name: format!("X_{i}_{j}_{k}"),
                kind: VarKind::Binary,
                lower: T::zero(),
                upper: T::one(),
            });
            model.x_index.insert((i, j, k), idx);
        }
    }
    for &(i, j) in &arcs {
        for k in 0..k_count {
            for c in 0..c_count {
                if !graph.charge_feasible(i, j, c) {
                    continue;
                }
                let idx = model.variables.len();
                model.variables.push(Variable {
                    name: format!("S_{i}_{j}_{k}_{c}"),
                    kind: VarKind::Binary,
                    lower: T::zero(),
                    upper: T::one(),
                });
                model.s_index.insert((i, j, k, c), idx);
            }
        }
    }
    for &(i, j) in &arcs {
        for k in 0..k_count {
            for c in 0..c_count {
                if !graph.charge_feasible(i, j, c) {
                    continue;
                }
                let cap = graph.max_charge_energy(i, j, c);
                let idx = model.variables.len();
                model.variables.push(Variable {
                    name: format!("Cp_{i}_{j}_{k}_{c}"),
                    kind: VarKind::Continuous,
                    lower: T::zero(),
                    upper: cap,
                });
                model.cp_index.insert((i, j, k, c), idx);
            }
        }
    }
    for &(i, j) in &arcs {
        for k in 0..k_count {
            for c in 0..c_count {
                if !graph.charge_feasible(i, j, c) {
                    continue;
                }
                let cap = graph.max_charge_energy(i, j, c);
                let idx = model.variables.len();
                model.variables.push(Variable {
                    name: format!("Cm_{i}_{j}_{k}_{c}"),
                    kind: VarKind::Continuous,
                    lower: T::zero(),
                    upper: cap,
                });
                model.cm_index.insert((i, j, k, c), idx);
            }
        }
    }
    for j in 0..n {
        for k in 0..k_count {
            let fixed = j == 0 || j == sink;
            let idx = model.variables.len();
            model.variables.push(Variable {
                name: format!("E_{j}_{k}"),
                kind: VarKind::Continuous,
                lower: if fixed { fleet.initial_kwh } else { T::zero() },
                upper: if fixed {
                    fleet.initial_kwh
                } else {
                    fleet.battery_kwh
                },
            });
            model.e_index.insert((j, k), idx);
        }
    }

    // each request entered at most once, over all tails and vehicles
    for j in 1..sink {
        let mut terms = Vec::new();
        for i in 0..n {
            for k in 0..k_count {
                if let Some(&v) = model.x_index.get(&(i, j, k)) {
                    terms.push((v, T::one()));
                }
            }
        }
        if !terms.is_empty() {
            model.constraints.push(RowConstraint {
                name: format!("serve_{j}"),
                terms,
                sense: Sense::Le,
                rhs: T::one(),
            });
        }
    }

    // each request departed toward another request at most once; the depot
    // rows are replaced by the per-vehicle equalities below
    for i in 1..sink {
        let mut terms = Vec::new();
        for j in 1..sink {
            for k in 0..k_count {
                if let Some(&v) = model.x_index.get(&(i, j, k)) {
                    terms.push((v, T::one()));
                }
            }
        }
        if !terms.is_empty() {
            model.constraints.push(RowConstraint {
                name: format!("depart_{i}"),
                terms,
                sense: Sense::Le,
                rhs: T::one(),
            });
        }
    }

    // per-vehicle flow continuity through every request node
    for j in 1..sink {
        for k in 0..k_count {
            let mut terms = Vec::new();
            for i in 0..n {
                if let Some(&v) = model.x_index.get(&(i, j, k)) {
                    terms.push((v, T::one()));
                }
            }
            for l in 0..n {
                if let Some(&v) = model.x_index.get(&(j, l, k)) {
                    terms.push((v, -T::one()));
                }
            }
            if !terms.is_empty() {
                model.constraints.push(RowConstraint {
                    name: format!("flow_{j}_{k}"),
                    terms,
                    sense: Sense::Eq,
                    rhs: T::zero(),
                });
            }
        }
    }

    // every vehicle leaves the depot once and returns once (idle via 0 -> I+1)
    for k in 0..k_count {
        let terms: Vec<_> = (1..n)
            .filter_map(|j| model.x_index.get(&(0, j, k)).map(|&v| (v, T::one())))
            .collect();
        model.constraints.push(RowConstraint {
            name: format!("depot_out_{k}"),
            terms,
            sense: Sense::Eq,
            rhs: T::one(),
        });
        let terms: Vec<_> = (0..sink)
            .filter_map(|i| model.x_index.get(&(i, sink, k)).map(|&v| (v, T::one())))
            .collect();
        model.constraints.push(RowConstraint {
            name: format!("depot_in_{k}"),
            terms,
            sense: Sense::Eq,
            rhs: T::one(),
        });
    }

    // a vehicle can charge only where it travels, at most one station per
    // transition
    for &(i, j) in &arcs {
        for k in 0..k_count {
            let mut terms = Vec::new();
            for c in 0..c_count {
                if let Some(&v) = model.s_index.get(&(i, j, k, c)) {
                    terms.push((v, T::one()));
                }
            }
            if terms.is_empty() {
                continue;
            }
            terms.push((model.x_index[&(i, j, k)], -T::one()));
            model.constraints.push(RowConstraint {
                name: format!("stn_{i}_{j}_{k}"),
                terms,
                sense: Sense::Le,
                rhs: T::zero(),
            });
        }
    }

    // total exchange within the window bound, and only when stopping there
    for &(i, j) in &arcs {
        for k in 0..k_count {
            for c in 0..c_count {
                let Some(&s) = model.s_index.get(&(i, j, k, c)) else {
                    continue;
                };
                let cap = graph.max_charge_energy(i, j, c);
                model.constraints.push(RowConstraint {
                    name: format!("cap_{i}_{j}_{k}_{c}"),
                    terms: vec![
                        (model.cp_index[&(i, j, k, c)], T::one()),
                        (model.cm_index[&(i, j, k, c)], T::one()),
                        (s, -cap),
                    ],
                    sense: Sense::Le,
                    rhs: T::zero(),
                });
            }
        }
    }

    // big-M pair activating the energy recursion on traversed arcs:
    //   E_j - E_i + cons*X + sum_c dcons*S - sum_c (Cp - Cm) <= M (1 - X)
    //   E_j - E_i + cons*X + sum_c dcons*S - sum_c (Cp - Cm) >= -M (1 - X)
    let m = model.big_m;
    for &(i, j) in &arcs {
        let cons = model.leg_kwh[&(i, j)];
        for k in 0..k_count {
            let x = model.x_index[&(i, j, k)];
            let e_i = model.e_index[&(i, k)];
            let e_j = model.e_index[&(j, k)];
            let mut base = vec![(e_j, T::one()), (e_i, -T::one())];
            for c in 0..c_count {
                if let Some(&s) = model.s_index.get(&(i, j, k, c)) {
                    base.push((s, model.detour_kwh[&(i, j, c)]));
                    base.push((model.cp_index[&(i, j, k, c)], -T::one()));
                    base.push((model.cm_index[&(i, j, k, c)], T::one()));
                }
            }
            let mut up = base.clone();
            up.push((x, cons + m));
            model.constraints.push(RowConstraint {
                name: format!("soeu_{i}_{j}_{k}"),
                terms: up,
                sense: Sense::Le,
                rhs: m,
            });
            let mut lo = base;
            lo.push((x, cons - m));
            model.constraints.push(RowConstraint {
                name: format!("soel_{i}_{j}_{k}"),
                terms: lo,
                sense: Sense::Ge,
                rhs: -m,
            });
        }
    }

    // objective
    for &(i, j) in &arcs {
        if j == sink {
            continue;
        }
        let revenue = scenario.requests[j - 1].revenue;
        if revenue == T::zero() {
            continue;
        }
        for k in 0..k_count {
            model
                .objective
                .push((model.x_index[&(i, j, k)], -revenue));
        }
    }
    for &(i, j) in &arcs {
        let price = model.price_eur_kwh[&(i, j)];
        for k in 0..k_count {
            for c in 0..c_count {
                if let Some(&cp) = model.cp_index.get(&(i, j, k, c)) {
                    model.objective.push((cp, price + marginal + tie_break));
                    let cm = model.cm_index[&(i, j, k, c)];
                    model
                        .objective
                        .push((cm, -price + marginal + tie_break));
                }
            }
        }
    }

    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_graph;
    use crate::scenario::test_support::unit_scenario;
    use crate::scenario::{ChargingStation, Point, TravelRequest};

    fn single_request_scenario() -> Scenario<f64> {
        let mut sc = unit_scenario();
        // zero consumption keeps the terminal state-of-charge equality
        // satisfiable without stations
        sc.fleet.consumption_kwh_per_km = 0.0;
        sc.requests = vec![TravelRequest {
            id: 0,
            origin: Point::new(1.0, 0.0),
            destination: Point::new(2.0, 0.0),
            t_request: 600,
            revenue: 10.0,
        }];
        sc
    }

    #[test]
    fn variables_exist_only_on_feasible_arcs() {
        let mut sc = single_request_scenario();
        sc.fleet.consumption_kwh_per_km = 0.15;
        sc.stations.push(ChargingStation {
            id: 0,
            location: Point::new(0.0, 1.0),
            power_kw: 22.0,
        });
        // second request unreachable from the depot
        sc.requests.push(TravelRequest {
            id: 1,
            origin: Point::new(10.0, 0.0),
            destination: Point::new(9.0, 0.0),
            t_request: 5,
            revenue: 10.0,
        });
        let g = build_graph(&sc);
        let m = build_model(&sc, &g, &DegradationParams::default()).unwrap();
        // node 2 is the unreachable request
        assert!(m.x_index.keys().all(|&(_, j, _)| j != 2));
        assert!(m.x_index.contains_key(&(0, 1, 0)));
        assert!(m.x_index.contains_key(&(2, 3, 0)), "sink arc exists");
        for (&(i, j, _, c), _) in &m.s_index {
            assert!(g.charge_feasible(i, j, c));
        }
    }

    #[test]
    fn model_without_vehicles_is_valid_and_empty() {
        let mut sc = single_request_scenario();
        sc.fleet.n_vehicles = 0;
        let g = build_graph(&sc);
        let m = build_model(&sc, &g, &DegradationParams::default()).unwrap();
        assert!(m.variables.is_empty());
        assert!(m.constraints.is_empty());
        assert!(m.objective.is_empty());
    }

    #[test]
    fn inconsistent_inputs_are_rejected() {
        let sc = single_request_scenario();
        let g = build_graph(&sc);
        let mut other = sc.clone();
        other.requests.clear();
        assert!(build_model(&other, &g, &DegradationParams::default()).is_err());

        let mut bad_fleet = sc.clone();
        bad_fleet.fleet.initial_kwh = 100.0;
        let g2 = build_graph(&bad_fleet);
        assert!(build_model(&bad_fleet, &g2, &DegradationParams::default()).is_err());
    }

    #[test]
    fn big_m_rows_are_vacuous_exactly_when_x_is_zero() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        let mut sc = single_request_scenario();
        sc.fleet.consumption_kwh_per_km = 0.15;
        sc.stations.push(ChargingStation {
            id: 0,
            location: Point::new(3.0, 0.0),
            power_kw: 22.0,
        });
        let g = build_graph(&sc);
        let m = build_model(&sc, &g, &DegradationParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);

        for _ in 0..200 {
            // random box-feasible continuous values with all X = 0 and S = 0
            let values: Vec<f64> = m
                .variables
                .iter()
                .map(|v| match v.kind {
                    VarKind::Binary => 0.0,
                    VarKind::Continuous => rng.gen_range(0.0..=1.0) * (v.upper - v.lower) + v.lower,
                })
                .collect();
            for row in &m.constraints {
                if !row.name.starts_with("soe") {
                    continue;
                }
                let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
                match row.sense {
                    Sense::Le => assert!(lhs <= row.rhs + 1e-9, "{}", row.name),
                    Sense::Ge => assert!(lhs >= row.rhs - 1e-9, "{}", row.name),
                    Sense::Eq => unreachable!(),
                }
            }
        }

        // with X = 1 the pair forces the recursion exactly
        let x = m.x_index[&(0, 1, 0)];
        let e0 = m.e_index[&(0, 0)];
        let e1 = m.e_index[&(1, 0)];
        let cons = m.leg_kwh[&(0, 1)];
        let mut values = vec![0.0; m.variables.len()];
        values[x] = 1.0;
        values[e0] = 20.0;
        values[e1] = 20.0 - cons;
        let row = m
            .constraints
            .iter()
            .find(|r| r.name == "soeu_0_1_0")
            .unwrap();
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
        assert!((lhs - row.rhs).abs() < 1e-9, "binding at equality");
        values[e1] += 0.01;
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
        assert!(lhs > row.rhs, "violated once the recursion is broken");
    }

    #[test]
    fn objective_prices_charge_and_discharge() {
        let mut sc = single_request_scenario();
        sc.stations.push(ChargingStation {
            id: 0,
            location: Point::new(1.5, 0.0),
            power_kw: 22.0,
        });
        let g = build_graph(&sc);
        let deg = DegradationParams::default();
        let m = build_model(&sc, &g, &deg).unwrap();
        let marginal = deg.marginal_cost().unwrap();
        let price = m.price_eur_kwh[&(0, 1)];
        let cp = m.cp_index[&(0, 1, 0, 0)];
        let cm = m.cm_index[&(0, 1, 0, 0)];
        let eps = crate::TIE_BREAK_EUR_PER_KWH;
        assert!((m.objective_coefficient(cp) - (price + marginal + eps)).abs() < 1e-15);
        assert!((m.objective_coefficient(cm) - (-price + marginal + eps)).abs() < 1e-15);
        let x = m.x_index[&(0, 1, 0)];
        assert_eq!(m.objective_coefficient(x), -10.0);
    }
}
