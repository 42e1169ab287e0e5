//! Brute-force optimum for tiny instances, derived straight from the
//! scenario and transition graph (nothing shared with the MILP assembly).
//! Anchors the correctness of the whole solve path.

mod flow;

pub use flow::{allocate_charges, ChainLeg, ChargeSchedule, ChargeWindow};

use crate::dag::TransitionGraph;
use crate::degradation::DegradationParams;
use crate::error::{Error, Result};
use crate::plan::{transition_price, FleetPlan, Leg, StationVisit, VehiclePlan};
use crate::scalar::{cast, Scalar};
use crate::scenario::Scenario;
use crate::TIE_BREAK_EUR_PER_KWH;

/// Enumeration limits keeping the search space around or below a million
/// schedules.
#[derive(Debug, Clone, Copy)]
pub struct TinyLimits {
    pub max_requests: usize,
    pub max_vehicles: usize,
    pub max_stations: usize,
}

impl Default for TinyLimits {
    fn default() -> Self {
        TinyLimits {
            max_requests: 4,
            max_vehicles: 2,
            max_stations: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct ChainChoice<T> {
    /// (from, to, station) per leg.
    legs: Vec<(usize, usize, Option<usize>)>,
    schedule: ChargeSchedule<T>,
}

/// Globally optimal objective and plan by exhaustive enumeration: every
/// assignment of requests to vehicles (or rejection), every service order,
/// every station choice; charge amounts resolved exactly per chain by
/// [`allocate_charges`]. Deterministic: candidates are enumerated in
/// lexicographic order of the assignment encoding and ties keep the first.
pub fn enumerate_optimum<T: Scalar>(
    scenario: &Scenario<T>,
    graph: &TransitionGraph<T>,
    degradation: &DegradationParams<T>,
    limits: &TinyLimits,
) -> Result<(T, FleetPlan<T>)> {
    crate::dag::check_consistency(scenario, graph)?;
    let n_requests = scenario.requests.len();
    let n_vehicles = scenario.fleet.n_vehicles;
    if n_requests > limits.max_requests {
        return Err(Error::TooLarge(format!(
            "{n_requests} requests exceed the enumeration limit of {}",
            limits.max_requests
        )));
    }
    if n_vehicles > limits.max_vehicles {
        return Err(Error::TooLarge(format!(
            "{n_vehicles} vehicles exceed the enumeration limit of {}",
            limits.max_vehicles
        )));
    }
    if scenario.stations.len() > limits.max_stations {
        return Err(Error::TooLarge(format!(
            "{} stations exceed the enumeration limit of {}",
            scenario.stations.len(),
            limits.max_stations
        )));
    }

    let marginal = degradation.marginal_cost()?;
    let tie_break: T = cast(TIE_BREAK_EUR_PER_KWH);

    // best chain (cost and layout) for every subset of requests
    let mut chain_best: Vec<Option<(T, ChainChoice<T>)>> = vec![None; 1 << n_requests];
    for mask in 0..(1usize << n_requests) {
        let members: Vec<usize> = (0..n_requests).filter(|r| mask >> r & 1 == 1).collect();
        for perm in permutations(&members) {
            let mut nodes = Vec::with_capacity(perm.len() + 2);
            nodes.push(0);
            nodes.extend(perm.iter().map(|&r| r + 1));
            nodes.push(graph.sink());
            if nodes
                .windows(2)
                .any(|w| !graph.arc_feasible(w[0], w[1]))
            {
                continue;
            }
            explore_station_choices(
                scenario,
                graph,
                marginal,
                tie_break,
                &nodes,
                0,
                &mut Vec::new(),
                &mut chain_best[mask],
            );
        }
    }

    // every assignment of requests to {reject, vehicle 0, ..., vehicle K-1}
    let mut best: Option<(T, Vec<usize>)> = None;
    let n_assignments = (n_vehicles + 1).pow(n_requests as u32);
    for code in 0..n_assignments {
        let mut masks = vec![0usize; n_vehicles];
        let mut revenue = T::zero();
        let mut digits = code;
        for r in 0..n_requests {
            let d = digits % (n_vehicles + 1);
            digits /= n_vehicles + 1;
            if d > 0 {
                masks[d - 1] |= 1 << r;
                revenue = revenue + scenario.requests[r].revenue;
            }
        }
        let mut cost = -revenue;
        let mut ok = true;
        for &m in &masks {
            match &chain_best[m] {
                Some((c, _)) => cost = cost + *c,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, _)) => cost < *b - cast(1e-12),
        };
        if better {
            best = Some((cost, masks));
        }
    }

    let (_, masks) = best.ok_or_else(|| {
        // the all-idle assignment is feasible whenever E_b0 is in the box,
        // so this only fires on degenerate inputs
        Error::Model("no feasible assignment found".into())
    })?;

    let mut vehicles = Vec::with_capacity(n_vehicles);
    for &mask in &masks {
        let (_, choice) = chain_best[mask].as_ref().expect("chosen chain exists");
        let mut legs = Vec::with_capacity(choice.legs.len());
        for (l, &(from, to, station)) in choice.legs.iter().enumerate() {
            let visits = match station {
                Some(c) => vec![StationVisit {
                    station: Some(c),
                    charge_kwh: choice.schedule.net_kwh[l],
                }],
                None => vec![],
            };
            legs.push(Leg {
                from,
                to,
                visits,
                arrival_kwh: choice.schedule.arrival_kwh[l],
            });
        }
        vehicles.push(VehiclePlan { legs });
    }
    let plan = FleetPlan { vehicles };
    let objective = crate::plan::objective_parts(&plan, scenario, degradation)?.total();
    Ok((objective, plan))
}

/// Depth-first product over per-leg station options; resolves charge amounts
/// for each complete choice and keeps the cheapest.
#[allow(clippy::too_many_arguments)]
fn explore_station_choices<T: Scalar>(
    scenario: &Scenario<T>,
    graph: &TransitionGraph<T>,
    marginal: T,
    tie_break: T,
    nodes: &[usize],
    depth: usize,
    chosen: &mut Vec<Option<usize>>,
    best: &mut Option<(T, ChainChoice<T>)>,
) {
    let n_legs = nodes.len() - 1;
    if depth == n_legs {
        let legs: Vec<ChainLeg<T>> = (0..n_legs)
            .map(|l| {
                let (u, v) = (nodes[l], nodes[l + 1]);
                let mut consumption =
                    graph.leg_consumption_kwh(u, v, scenario.fleet.consumption_kwh_per_km);
                let window = chosen[l].map(|c| {
                    consumption = consumption
                        + graph.detour_km(u, v, c) * scenario.fleet.consumption_kwh_per_km;
                    let price = transition_price(scenario, u, v);
                    ChargeWindow {
                        cap_kwh: graph.max_charge_energy(u, v, c),
                        buy_cost: price + marginal + tie_break,
                        sell_cost: -price + marginal + tie_break,
                    }
                });
                ChainLeg {
                    consumption_kwh: consumption,
                    window,
                }
            })
            .collect();
        if let Some(schedule) =
            allocate_charges(scenario.fleet.initial_kwh, scenario.fleet.battery_kwh, &legs)
        {
            let cost = schedule.cost;
            let better = match best {
                None => true,
                Some((b, _)) => cost < *b - cast(1e-12),
            };
            if better {
                *best = Some((
                    cost,
                    ChainChoice {
                        legs: (0..n_legs)
                            .map(|l| (nodes[l], nodes[l + 1], chosen[l]))
                            .collect(),
                        schedule,
                    },
                ));
            }
        }
        return;
    }

    let (u, v) = (nodes[depth], nodes[depth + 1]);
    chosen.push(None);
    explore_station_choices(scenario, graph, marginal, tie_break, nodes, depth + 1, chosen, best);
    chosen.pop();
    for c in 0..graph.n_stations() {
        if graph.charge_feasible(u, v, c) && graph.max_charge_energy(u, v, c) > T::zero() {
            chosen.push(Some(c));
            explore_station_choices(
                scenario, graph, marginal, tie_break, nodes, depth + 1, chosen, best,
            );
            chosen.pop();
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
