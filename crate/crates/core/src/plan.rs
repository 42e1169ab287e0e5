//! Decoded fleet plans: per-vehicle transition chains with station visits,
//! signed charge amounts and arrival energies.
//!
//! Plans are decoded from solver values, re-checked against the original
//! constraint system (violations are data, tagged with the equation family
//! they break), priced independently of any solver objective, and serialized
//! as `plan.csv`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::dag::TransitionGraph;
use crate::degradation::DegradationParams;
use crate::error::{Error, Result};
use crate::milp::MilpModel;
use crate::scalar::{cast, Scalar};
use crate::scenario::Scenario;

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const ENERGY_TOL_KWH: f64 = 1e-6;

/// A stop at a charging station during one transition. `station: None`
/// encodes charge recorded without a station visit (never produced by the
/// pipeline; representable so that validation can flag it).
#[derive(Debug, Clone, PartialEq)]
pub struct StationVisit<T> {
    pub station: Option<usize>,
    /// Signed energy: positive charges the battery, negative is V2G.
    pub charge_kwh: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leg<T> {
    pub from: usize,
    pub to: usize,
    pub visits: Vec<StationVisit<T>>,
    /// State of energy on arrival at `to`, kWh.
    pub arrival_kwh: T,
}

impl<T: Scalar> Leg<T> {
    pub fn net_charge_kwh(&self) -> T {
        self.visits
            .iter()
            .fold(T::zero(), |a, v| a + v.charge_kwh)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VehiclePlan<T> {
    pub legs: Vec<Leg<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetPlan<T> {
    pub vehicles: Vec<VehiclePlan<T>>,
}

impl<T: Scalar> FleetPlan<T> {
    pub fn empty(n_vehicles: usize) -> Self {
        FleetPlan {
            vehicles: vec![VehiclePlan::default(); n_vehicles],
        }
    }

    /// Which requests are served, by request index (node - 1).
    pub fn served(&self, n_requests: usize) -> Vec<bool> {
        let mut served = vec![false; n_requests];
        for v in &self.vehicles {
            for leg in &v.legs {
                if leg.to >= 1 && leg.to <= n_requests {
                    served[leg.to - 1] = true;
                }
            }
        }
        served
    }

    pub fn served_count(&self, n_requests: usize) -> usize {
        self.served(n_requests).iter().filter(|&&s| s).count()
    }

    pub fn charged_kwh(&self) -> T {
        self.fold_visits(T::zero(), |acc, v| acc + v.charge_kwh.max(T::zero()))
    }

    pub fn discharged_kwh(&self) -> T {
        self.fold_visits(T::zero(), |acc, v| acc + (-v.charge_kwh).max(T::zero()))
    }

    pub fn throughput_kwh(&self) -> T {
        self.fold_visits(T::zero(), |acc, v| acc + v.charge_kwh.abs())
    }

    fn fold_visits<F: Fn(T, &StationVisit<T>) -> T>(&self, init: T, f: F) -> T {
        self.vehicles
            .iter()
            .flat_map(|v| v.legs.iter())
            .flat_map(|l| l.visits.iter())
            .fold(init, |acc, v| f(acc, v))
    }
}

/// Objective parts of a plan, recomputed from its primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts<T> {
    /// Negative served revenue (Eq. 13 semantics).
    pub travel: T,
    /// Energy bought minus sold, at transition-average prices.
    pub electricity: T,
    /// Linearized degradation on total throughput.
    pub degradation: T,
}

impl<T: Scalar> ObjectiveParts<T> {
    pub fn total(&self) -> T {
        self.travel + self.electricity + self.degradation
    }
}

fn node_time<T: Scalar>(sc: &Scenario<T>, node: usize) -> i64 {
    let sink = sc.requests.len() + 1;
    if node == 0 {
        0
    } else if node == sink {
        sc.horizon_min
    } else {
        sc.requests[node - 1].t_request
    }
}

fn service_minutes<T: Scalar>(sc: &Scenario<T>, node: usize) -> i64 {
    let sink = sc.requests.len() + 1;
    if node == 0 || node == sink {
        0
    } else {
        let r = &sc.requests[node - 1];
        sc.travel_minutes(&r.origin, &r.destination)
    }
}

/// Average electricity price over the idle window of transition (from, to);
/// zero when the window is empty.
pub fn transition_price<T: Scalar>(sc: &Scenario<T>, from: usize, to: usize) -> T {
    let start = node_time(sc, from) + service_minutes(sc, from);
    let end = node_time(sc, to).min(sc.horizon_min);
    if start < end {
        sc.prices
            .average_over(start, end)
            .unwrap_or_else(|_| T::zero())
    } else {
        T::zero()
    }
}

/// Prices a plan from its own primitives (never from a solver objective).
pub fn objective_parts<T: Scalar>(
    plan: &FleetPlan<T>,
    scenario: &Scenario<T>,
    degradation: &DegradationParams<T>,
) -> Result<ObjectiveParts<T>> {
    let n_requests = scenario.requests.len();
    let mut travel = T::zero();
    for (r, served) in plan.served(n_requests).iter().enumerate() {
        if *served {
            travel = travel - scenario.requests[r].revenue;
        }
    }
    let mut electricity = T::zero();
    for v in &plan.vehicles {
        for leg in &v.legs {
            let price = transition_price(scenario, leg.from, leg.to);
            electricity = electricity + price * leg.net_charge_kwh();
        }
    }
    let deg_cost = degradation.cost_for_throughput(plan.throughput_kwh())?;
    Ok(ObjectiveParts {
        travel,
        electricity,
        degradation: deg_cost,
    })
}

/// Rebuilds the per-vehicle chains from solver values.
///
/// Requires integrality within 1e-6 on the binaries; signed charge is
/// `Cp - Cm`; arrival energies are the solver's `E` values (independently
/// re-checked by [`validate_plan`]).
pub fn extract_plan<T: Scalar>(
    model: &MilpModel<T>,
    values: &HashMap<String, T>,
) -> Result<FleetPlan<T>> {
    let by_index = model.values_by_index(values);
    let int_tol: T = cast(INTEGRALITY_TOL);
    for (v, var) in model.variables.iter().enumerate() {
        if var.kind == crate::milp::VarKind::Binary {
            let x = by_index[v];
            if (x - x.round()).abs() > int_tol || x.round() < -int_tol || x.round() > T::one() + int_tol
            {
                return Err(Error::Solution(format!(
                    "binary {} = {} is not integral",
                    var.name, x
                )));
            }
        }
    }
    let active = |idx: usize| by_index[idx] > cast::<T>(0.5);
    let sink = model.n_nodes - 1;

    let mut vehicles = Vec::with_capacity(model.n_vehicles);
    for k in 0..model.n_vehicles {
        let mut succ: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut n_active = 0usize;
        for (&(i, j, kk), &v) in &model.x_index {
            if kk == k && active(v) {
                succ.entry(i).or_default().push(j);
                n_active += 1;
            }
        }
        let mut legs = Vec::new();
        let mut node = 0usize;
        let mut visited = vec![false; model.n_nodes];
        visited[0] = true;
        while node != sink {
            let nexts = succ.remove(&node).unwrap_or_default();
            if nexts.len() != 1 {
                return Err(Error::Solution(format!(
                    "solution violates Eqs. (4)-(6): vehicle {k} has {} transitions out of node {node}",
                    nexts.len()
                )));
            }
            let next = nexts[0];
            if visited[next] {
                return Err(Error::Solution(format!(
                    "solution violates Eqs. (4)-(6): vehicle {k} revisits node {next}"
                )));
            }
            visited[next] = true;

            let mut visits = Vec::new();
            for c in 0..model.n_stations {
                let Some(&s) = model.s_index.get(&(node, next, k, c)) else {
                    continue;
                };
                let cp = by_index[model.cp_index[&(node, next, k, c)]];
                let cm = by_index[model.cm_index[&(node, next, k, c)]];
                if active(s) {
                    visits.push(StationVisit {
                        station: Some(c),
                        charge_kwh: cp - cm,
                    });
                } else if (cp - cm).abs() > cast(ENERGY_TOL_KWH) {
                    return Err(Error::Solution(format!(
                        "charge recorded without a station stop on ({node}, {next}, {k}, {c})"
                    )));
                }
            }
            legs.push(Leg {
                from: node,
                to: next,
                visits,
                arrival_kwh: by_index[model.e_index[&(next, k)]],
            });
            node = next;
        }
        if legs.len() != n_active {
            return Err(Error::Solution(format!(
                "solution violates Eqs. (4)-(6): vehicle {k} has transitions disconnected from the depot"
            )));
        }
        vehicles.push(VehiclePlan { legs });
    }
    Ok(FleetPlan { vehicles })
}

/// A re-checked constraint failure, named after the equation family it
/// breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub equation: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.equation, self.detail)
    }
}

fn violation(list: &mut Vec<Violation>, equation: &'static str, detail: String) {
    list.push(Violation { equation, detail });
}

/// Re-checks every model constraint directly on a decoded plan: time
/// feasibility is exact (integer minutes), energies within 1e-6 kWh. An
/// empty list certifies the plan.
pub fn validate_plan<T: Scalar>(
    plan: &FleetPlan<T>,
    scenario: &Scenario<T>,
    graph: &TransitionGraph<T>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let sink = graph.sink();
    let n_requests = graph.n_requests();
    let tol: T = cast(ENERGY_TOL_KWH);
    let e0 = scenario.fleet.initial_kwh;
    let e_max = scenario.fleet.battery_kwh;

    if plan.vehicles.len() != scenario.fleet.n_vehicles {
        violation(
            &mut out,
            "Eq. (6)",
            format!(
                "plan covers {} vehicles, fleet has {}",
                plan.vehicles.len(),
                scenario.fleet.n_vehicles
            ),
        );
    }

    // Eq. (1): every traversed arc must be time-feasible
    for (k, v) in plan.vehicles.iter().enumerate() {
        for leg in &v.legs {
            if leg.from >= graph.n_nodes() || leg.to >= graph.n_nodes() {
                violation(
                    &mut out,
                    "Eq. (1)",
                    format!("vehicle {k}: leg ({}, {}) references unknown nodes", leg.from, leg.to),
                );
            } else if !graph.arc_feasible(leg.from, leg.to) {
                violation(
                    &mut out,
                    "Eq. (1)",
                    format!("vehicle {k}: transition ({}, {}) is not time-feasible", leg.from, leg.to),
                );
            }
        }
    }

    // Eq. (2): station stops must fit in the transition window
    for (k, v) in plan.vehicles.iter().enumerate() {
        for leg in &v.legs {
            if leg.from >= graph.n_nodes() || leg.to >= graph.n_nodes() {
                continue;
            }
            for visit in &leg.visits {
                if let Some(c) = visit.station {
                    if c >= graph.n_stations() {
                        violation(
                            &mut out,
                            "Eq. (2)",
                            format!("vehicle {k}: unknown station {c}"),
                        );
                    } else if !graph.charge_feasible(leg.from, leg.to, c) {
                        violation(
                            &mut out,
                            "Eq. (2)",
                            format!(
                                "vehicle {k}: station {c} does not fit in transition ({}, {})",
                                leg.from, leg.to
                            ),
                        );
                    }
                }
            }
        }
    }

    // Eq. (4): each request entered at most once, fleet-wide
    let mut entered = vec![0usize; n_requests + 2];
    for v in &plan.vehicles {
        for leg in &v.legs {
            if leg.to <= n_requests && leg.to >= 1 {
                entered[leg.to] += 1;
            }
        }
    }
    for j in 1..=n_requests {
        if entered[j] > 1 {
            violation(
                &mut out,
                "Eq. (4)",
                format!("request node {j} served {} times", entered[j]),
            );
        }
    }

    // Eq. (5): each request departed toward another request at most once
    let mut departed = vec![0usize; n_requests + 2];
    for v in &plan.vehicles {
        for leg in &v.legs {
            if leg.from >= 1 && leg.from <= n_requests && leg.to >= 1 && leg.to <= n_requests {
                departed[leg.from] += 1;
            }
        }
    }
    for i in 1..=n_requests {
        if departed[i] > 1 {
            violation(
                &mut out,
                "Eq. (5)",
                format!("request node {i} departed {} times", departed[i]),
            );
        }
    }

    // Eq. (6): per-vehicle chains run depot -> ... -> depot without breaks
    for (k, v) in plan.vehicles.iter().enumerate() {
        if v.legs.is_empty() {
            violation(
                &mut out,
                "Eq. (6)",
                format!("vehicle {k} has no transitions (must at least return to the depot)"),
            );
            continue;
        }
        if v.legs[0].from != 0 {
            violation(
                &mut out,
                "Eq. (6)",
                format!("vehicle {k} starts at node {}, not the depot", v.legs[0].from),
            );
        }
        for w in v.legs.windows(2) {
            if w[1].from != w[0].to {
                violation(
                    &mut out,
                    "Eq. (6)",
                    format!(
                        "vehicle {k}: chain breaks between nodes {} and {}",
                        w[0].to, w[1].from
                    ),
                );
            }
        }
        if v.legs.last().unwrap().to != sink {
            violation(
                &mut out,
                "Eq. (6)",
                format!(
                    "vehicle {k} ends at node {}, not the depot",
                    v.legs.last().unwrap().to
                ),
            );
        }
    }

    // Eq. (7): at most one station stop per transition
    for (k, v) in plan.vehicles.iter().enumerate() {
        for leg in &v.legs {
            let stops = leg.visits.iter().filter(|v| v.station.is_some()).count();
            if stops > 1 {
                violation(
                    &mut out,
                    "Eq. (7)",
                    format!(
                        "vehicle {k}: {stops} station stops during transition ({}, {})",
                        leg.from, leg.to
                    ),
                );
            }
        }
    }

    // Eq. (8): charge requires a stop and stays within the window bound
    for (k, v) in plan.vehicles.iter().enumerate() {
        for leg in &v.legs {
            for visit in &leg.visits {
                match visit.station {
                    None => {
                        if visit.charge_kwh.abs() > tol {
                            violation(
                                &mut out,
                                "Eq. (8)",
                                format!(
                                    "vehicle {k}: {} kWh exchanged without a station stop on ({}, {})",
                                    visit.charge_kwh, leg.from, leg.to
                                ),
                            );
                        }
                    }
                    Some(c) => {
                        if c >= graph.n_stations()
                            || leg.from >= graph.n_nodes()
                            || leg.to >= graph.n_nodes()
                        {
                            continue; // reported under Eq. (2)
                        }
                        let cap = graph.max_charge_energy(leg.from, leg.to, c);
                        if visit.charge_kwh.abs() > cap + tol {
                            violation(
                                &mut out,
                                "Eq. (8)",
                                format!(
                                    "vehicle {k}: |{}| kWh exceeds the {} kWh window bound at station {c}",
                                    visit.charge_kwh, cap
                                ),
                            );
                        }
                    }
                }
            }
        }
    }

    // Eq. (10): energy recursion along each chain
    let cons_per_km = scenario.fleet.consumption_kwh_per_km;
    for (k, v) in plan.vehicles.iter().enumerate() {
        let mut prev = e0;
        for leg in &v.legs {
            if leg.from >= graph.n_nodes() || leg.to >= graph.n_nodes() {
                continue;
            }
            let mut used = graph.leg_consumption_kwh(leg.from, leg.to, cons_per_km);
            for visit in &leg.visits {
                if let Some(c) = visit.station {
                    if c < graph.n_stations() {
                        used = used + graph.detour_km(leg.from, leg.to, c) * cons_per_km;
                    }
                }
            }
            let expected = prev - used + leg.net_charge_kwh();
            if (leg.arrival_kwh - expected).abs() > tol {
                violation(
                    &mut out,
                    "Eq. (10)",
                    format!(
                        "vehicle {k}: arrival at node {} is {} kWh, recursion gives {}",
                        leg.to, leg.arrival_kwh, expected
                    ),
                );
            }
            prev = leg.arrival_kwh;
        }
    }

    // Eq. (11): energies boxed, terminal state back at E_b0
    for (k, v) in plan.vehicles.iter().enumerate() {
        for leg in &v.legs {
            if leg.arrival_kwh < -tol || leg.arrival_kwh > e_max + tol {
                violation(
                    &mut out,
                    "Eq. (11)",
                    format!(
                        "vehicle {k}: {} kWh at node {} outside [0, {}]",
                        leg.arrival_kwh, leg.to, e_max
                    ),
                );
            }
        }
        if let Some(last) = v.legs.last() {
            if last.to == sink && (last.arrival_kwh - e0).abs() > tol {
                violation(
                    &mut out,
                    "Eq. (11)",
                    format!(
                        "vehicle {k} returns with {} kWh, must be {} kWh",
                        last.arrival_kwh, e0
                    ),
                );
            }
        }
    }

    out
}

pub const PLAN_HEADER: &str =
    "vehicle,leg_index,node_from,node_to,station,charge_kwh,arrival_energy_kwh";

pub fn write_plan_csv<T: Scalar, W: Write>(plan: &FleetPlan<T>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{PLAN_HEADER}")?;
    for (k, v) in plan.vehicles.iter().enumerate() {
        for (l, leg) in v.legs.iter().enumerate() {
            if leg.visits.is_empty() {
                writeln!(
                    w,
                    "{},{},{},{},,0,{}",
                    k, l, leg.from, leg.to, leg.arrival_kwh
                )?;
            }
            for visit in &leg.visits {
                let station = visit
                    .station
                    .map(|c| c.to_string())
                    .unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    k, l, leg.from, leg.to, station, visit.charge_kwh, leg.arrival_kwh
                )?;
            }
        }
    }
    Ok(())
}

pub fn read_plan_csv<T: Scalar>(text: &str, file: &str) -> Result<FleetPlan<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PLAN_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(
                file,
                1,
                format!("expected header {PLAN_HEADER:?}, got {h:?}"),
            ))
        }
        None => return Err(Error::parse(file, 1, "empty plan file")),
    }

    // (vehicle, leg_index) -> rows; legs assembled in key order
    let mut rows: std::collections::BTreeMap<(usize, usize), Vec<(usize, usize, Option<usize>, T, T)>> =
        std::collections::BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let cols: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cols.len() != 7 {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected 7 columns, got {}", cols.len()),
            ));
        }
        let parse_usize = |s: &str, what: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(file, lineno, format!("bad {what}: {s:?}")))
        };
        let parse_t = |s: &str, what: &str| -> Result<T> {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::parse(file, lineno, format!("bad {what}: {s:?}")))?;
            Ok(cast(v))
        };
        let vehicle = parse_usize(cols[0], "vehicle")?;
        let leg_index = parse_usize(cols[1], "leg_index")?;
        let from = parse_usize(cols[2], "node_from")?;
        let to = parse_usize(cols[3], "node_to")?;
        let station = if cols[4].is_empty() {
            None
        } else {
            Some(parse_usize(cols[4], "station")?)
        };
        let charge = parse_t(cols[5], "charge_kwh")?;
        let arrival = parse_t(cols[6], "arrival_energy_kwh")?;
        rows.entry((vehicle, leg_index))
            .or_default()
            .push((from, to, station, charge, arrival));
    }

    let n_vehicles = rows.keys().map(|&(k, _)| k + 1).max().unwrap_or(0);
    let mut vehicles = vec![VehiclePlan::default(); n_vehicles];
    for ((vehicle, _), entries) in rows {
        let (from, to, _, _, arrival) = entries[0];
        let mut visits = Vec::new();
        for &(f, t, station, charge, _) in &entries {
            if (f, t) != (from, to) {
                return Err(Error::parse(
                    file,
                    0,
                    format!("rows of one leg disagree on nodes ({f}, {t}) vs ({from}, {to})"),
                ));
            }
            if station.is_some() || charge != T::zero() {
                visits.push(StationVisit {
                    station,
                    charge_kwh: charge,
                });
            }
        }
        vehicles[vehicle].legs.push(Leg {
            from,
            to,
            visits,
            arrival_kwh: arrival,
        });
    }
    Ok(FleetPlan { vehicles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_graph;
    use crate::scenario::test_support::unit_scenario;
    use crate::scenario::{ChargingStation, Point, TravelRequest};

    fn station_scenario() -> Scenario<f64> {
        let mut sc = unit_scenario();
        sc.requests = vec![
            TravelRequest {
                id: 0,
                origin: Point::new(1.0, 0.0),
                destination: Point::new(2.0, 0.0),
                t_request: 300,
                revenue: 10.0,
            },
            TravelRequest {
                id: 1,
                origin: Point::new(3.0, 0.0),
                destination: Point::new(4.0, 0.0),
                t_request: 700,
                revenue: 8.0,
            },
        ];
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(2.5, 0.0),
            power_kw: 22.0,
        }];
        sc
    }

    /// A hand-built valid plan: depot -> r0 -> (station) -> r1 -> depot.
    fn valid_plan(sc: &Scenario<f64>) -> FleetPlan<f64> {
        let cons = sc.fleet.consumption_kwh_per_km;
        let g = build_graph(sc);
        let e0 = sc.fleet.initial_kwh;
        let used01 = g.leg_consumption_kwh(0, 1, cons);
        let used12 = g.leg_consumption_kwh(1, 2, cons) + g.detour_km(1, 2, 0) * cons;
        let used23 = g.leg_consumption_kwh(2, 3, cons);
        let recharge = used01 + used12 + used23;
        FleetPlan {
            vehicles: vec![VehiclePlan {
                legs: vec![
                    Leg {
                        from: 0,
                        to: 1,
                        visits: vec![],
                        arrival_kwh: e0 - used01,
                    },
                    Leg {
                        from: 1,
                        to: 2,
                        visits: vec![StationVisit {
                            station: Some(0),
                            charge_kwh: recharge,
                        }],
                        arrival_kwh: e0 - used01 - used12 + recharge,
                    },
                    Leg {
                        from: 2,
                        to: 3,
                        visits: vec![],
                        arrival_kwh: e0,
                    },
                ],
            }],
        }
    }

    #[test]
    fn hand_built_plan_validates_clean() {
        let sc = station_scenario();
        let g = build_graph(&sc);
        let plan = valid_plan(&sc);
        let violations = validate_plan(&plan, &sc, &g);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn terminal_energy_shortfall_is_eq11() {
        let sc = station_scenario();
        let g = build_graph(&sc);
        let mut plan = valid_plan(&sc);
        // keep the recursion consistent by also lowering the charge
        let legs = &mut plan.vehicles[0].legs;
        legs[1].visits[0].charge_kwh -= 1.0;
        legs[1].arrival_kwh -= 1.0;
        legs[2].arrival_kwh -= 1.0;
        let violations = validate_plan(&plan, &sc, &g);
        assert!(!violations.is_empty());
        assert!(violations.iter().all(|v| v.equation == "Eq. (11)"), "{violations:?}");
    }

    #[test]
    fn charge_without_station_is_eq8() {
        let sc = station_scenario();
        let g = build_graph(&sc);
        let mut plan = valid_plan(&sc);
        let legs = &mut plan.vehicles[0].legs;
        // move half a kWh of the recharge onto a station-less visit on the
        // return leg; energies stay consistent, the stop is what's missing
        legs[1].visits[0].charge_kwh -= 0.5;
        legs[1].arrival_kwh -= 0.5;
        legs[2].visits.push(StationVisit {
            station: None,
            charge_kwh: 0.5,
        });
        let violations = validate_plan(&plan, &sc, &g);
        assert!(!violations.is_empty());
        assert!(violations.iter().all(|v| v.equation == "Eq. (8)"), "{violations:?}");
    }

    #[test]
    fn plan_csv_roundtrip() {
        let sc = station_scenario();
        let plan = valid_plan(&sc);
        let mut buf = Vec::new();
        write_plan_csv(&plan, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back: FleetPlan<f64> = read_plan_csv(&text, "plan.csv").unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn parts_of_an_empty_plan_are_zero() {
        let sc = station_scenario();
        let plan = FleetPlan::empty(1);
        let deg = DegradationParams::default();
        // an all-idle plan: one 0 -> sink leg
        let mut plan = plan;
        plan.vehicles[0].legs.push(Leg {
            from: 0,
            to: 3,
            visits: vec![],
            arrival_kwh: sc.fleet.initial_kwh,
        });
        let parts = objective_parts(&plan, &sc, &deg).unwrap();
        assert_eq!(parts.travel, 0.0);
        assert_eq!(parts.electricity, 0.0);
        assert_eq!(parts.degradation, 0.0);
        assert_eq!(parts.total(), 0.0);
    }

    #[test]
    fn parts_price_the_hand_built_plan() {
        let sc = station_scenario();
        let plan = valid_plan(&sc);
        let deg = DegradationParams::default();
        let parts = objective_parts(&plan, &sc, &deg).unwrap();
        assert_eq!(parts.travel, -18.0);
        let q = plan.throughput_kwh();
        assert!((parts.electricity - 0.10 * q).abs() < 1e-9, "flat price");
        let marginal = deg.marginal_cost().unwrap();
        assert!((parts.degradation - marginal * q).abs() < 1e-9);
    }
}
