//! Transition graph over the extended request set {0, 1, …, I, I+1}.
//!
//! Node 0 is a virtual departure at the depot at minute 0; node I+1 is the
//! return to the depot. Request r occupies node r+1. The diagonal of the
//! fastest-path matrices holds the service leg of each request. Arcs feasible
//! in time form a DAG because every request arc requires
//! `t_i + t_fp_ii + t_fp_ij <= t_j`; arcs into the sink are always kept so a
//! vehicle can always return to the depot.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::scenario::{Point, Scenario};

#[derive(Debug, Clone)]
pub struct TransitionGraph<T> {
    n_requests: usize,
    n_nodes: usize,
    n_stations: usize,
    /// Departure time of each node (pickup time for requests), minutes.
    node_time: Vec<i64>,
    /// Fastest-path travel minutes; diagonal = service leg.
    t_fp: Vec<i64>,
    /// Fastest-path distance, km; diagonal = service leg.
    d_fp: Vec<T>,
    /// Maximum time-window length of each transition, minutes.
    t_ava: Vec<i64>,
    arc_ok: Vec<bool>,
    /// Extra minutes to pass by station c during transition (i, j).
    dt_go2s: Vec<i64>,
    /// Extra km to pass by station c during transition (i, j).
    dd_go2s: Vec<T>,
    /// Max energy exchangeable at station c during transition (i, j), kWh.
    chat: Vec<T>,
    charge_ok: Vec<bool>,
}

/// Extra distance and time to detour via a charging station between two
/// points, under the scenario's road metric. The distance never goes
/// negative (triangle inequality, clamped against FP noise).
pub fn station_detour<T: Scalar>(
    scenario: &Scenario<T>,
    from: &Point<T>,
    to: &Point<T>,
    station: &Point<T>,
) -> (i64, T) {
    let via = scenario.distance_km(from, station) + scenario.distance_km(station, to);
    let direct = scenario.distance_km(from, to);
    let dd = (via - direct).max(T::zero());
    (scenario.minutes_for_km(dd), dd)
}

pub fn build_graph<T: Scalar>(scenario: &Scenario<T>) -> TransitionGraph<T> {
    let i_count = scenario.requests.len();
    let n = i_count + 2;
    let c_count = scenario.stations.len();
    let sink = n - 1;
    let depot = scenario.fleet.depot;

    let orig = |node: usize| -> &Point<T> {
        if node == 0 || node == sink {
            &depot
        } else {
            &scenario.requests[node - 1].origin
        }
    };
    let dest = |node: usize| -> &Point<T> {
        if node == 0 || node == sink {
            &depot
        } else {
            &scenario.requests[node - 1].destination
        }
    };

    let mut node_time = vec![0i64; n];
    for (r, req) in scenario.requests.iter().enumerate() {
        node_time[r + 1] = req.t_request;
    }
    node_time[sink] = scenario.horizon_min;

    let mut t_fp = vec![0i64; n * n];
    let mut d_fp = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            // (i, j) off-diagonal: deadhead d_i -> o_j; diagonal: service leg
            let d = if i == j {
                scenario.distance_km(orig(i), dest(i))
            } else {
                scenario.distance_km(dest(i), orig(j))
            };
            d_fp[i * n + j] = d;
            t_fp[i * n + j] = scenario.minutes_for_km(d);
        }
    }

    let mut t_ava = vec![0i64; n * n];
    let mut arc_ok = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            t_ava[i * n + j] = node_time[j] - node_time[i] - t_fp[i * n + i];
            let structural = i != sink && j != 0 && i != j;
            if !structural {
                continue;
            }
            arc_ok[i * n + j] = j == sink || t_fp[i * n + j] <= t_ava[i * n + j];
        }
    }

    let mut dt_go2s = vec![0i64; n * n * c_count.max(1)];
    let mut dd_go2s = vec![T::zero(); n * n * c_count.max(1)];
    let mut chat = vec![T::zero(); n * n * c_count.max(1)];
    let mut charge_ok = vec![false; n * n * c_count.max(1)];
    for i in 0..n {
        for j in 0..n {
            if !arc_ok[i * n + j] {
                continue;
            }
            for (c, station) in scenario.stations.iter().enumerate() {
                let (dt, dd) = station_detour(scenario, dest(i), orig(j), &station.location);
                let idx = (i * n + j) * c_count + c;
                dt_go2s[idx] = dt;
                dd_go2s[idx] = dd;
                let slack = t_ava[i * n + j] - t_fp[i * n + j] - dt;
                if slack >= 0 {
                    charge_ok[idx] = true;
                    let energy = cast::<T>(slack as f64) / cast::<T>(60.0) * station.power_kw;
                    // capping at capacity tightens big-M without cutting
                    // anything the battery bounds would not cut anyway
                    chat[idx] = energy.min(scenario.fleet.battery_kwh);
                }
            }
        }
    }

    TransitionGraph {
        n_requests: i_count,
        n_nodes: n,
        n_stations: c_count,
        node_time,
        t_fp,
        d_fp,
        t_ava,
        arc_ok,
        dt_go2s,
        dd_go2s,
        chat,
        charge_ok,
    }
}

impl<T: Scalar> TransitionGraph<T> {
    pub fn n_requests(&self) -> usize {
        self.n_requests
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn sink(&self) -> usize {
        self.n_nodes - 1
    }

    pub fn node_time(&self, node: usize) -> i64 {
        self.node_time[node]
    }

    pub fn travel_minutes(&self, i: usize, j: usize) -> i64 {
        self.t_fp[i * self.n_nodes + j]
    }

    /// Service-leg minutes of a node (0 for the depot nodes).
    pub fn service_minutes(&self, i: usize) -> i64 {
        self.t_fp[i * self.n_nodes + i]
    }

    pub fn distance_km(&self, i: usize, j: usize) -> T {
        self.d_fp[i * self.n_nodes + j]
    }

    pub fn available_minutes(&self, i: usize, j: usize) -> i64 {
        self.t_ava[i * self.n_nodes + j]
    }

    pub fn arc_feasible(&self, i: usize, j: usize) -> bool {
        self.arc_ok[i * self.n_nodes + j]
    }

    pub fn charge_feasible(&self, i: usize, j: usize, c: usize) -> bool {
        self.charge_ok[(i * self.n_nodes + j) * self.n_stations + c]
    }

    pub fn detour_minutes(&self, i: usize, j: usize, c: usize) -> i64 {
        self.dt_go2s[(i * self.n_nodes + j) * self.n_stations + c]
    }

    pub fn detour_km(&self, i: usize, j: usize, c: usize) -> T {
        self.dd_go2s[(i * self.n_nodes + j) * self.n_stations + c]
    }

    /// Upper bound on the energy exchangeable at station c during transition
    /// (i, j); zero for infeasible triples.
    pub fn max_charge_energy(&self, i: usize, j: usize, c: usize) -> T {
        self.chat[(i * self.n_nodes + j) * self.n_stations + c]
    }

    /// Energy consumed by traversing arc (i, j): deadhead plus the service
    /// leg of the head node (zero at the depot nodes).
    pub fn leg_consumption_kwh(&self, i: usize, j: usize, consumption_per_km: T) -> T {
        (self.distance_km(i, j) + self.distance_km(j, j)) * consumption_per_km
    }

    /// Start of the idle window of transition (i, j): drop-off of i.
    pub fn window_start(&self, i: usize) -> i64 {
        self.node_time[i] + self.service_minutes(i)
    }

    /// Debug dump: `i,j,c,t_fp,t_ava,dT,chat` for feasible arcs.
    pub fn write_debug_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,c,t_fp,t_ava,dT,chat")?;
        for i in 0..self.n_nodes {
            for j in 0..self.n_nodes {
                if !self.arc_feasible(i, j) {
                    continue;
                }
                if self.n_stations == 0 {
                    writeln!(
                        w,
                        "{},{},,{},{},,",
                        i,
                        j,
                        self.travel_minutes(i, j),
                        self.available_minutes(i, j)
                    )?;
                } else {
                    for c in 0..self.n_stations {
                        writeln!(
                            w,
                            "{},{},{},{},{},{},{}",
                            i,
                            j,
                            c,
                            self.travel_minutes(i, j),
                            self.available_minutes(i, j),
                            self.detour_minutes(i, j, c),
                            self.max_charge_energy(i, j, c)
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Validates that model inputs describe the same instance.
pub fn check_consistency<T: Scalar>(
    scenario: &Scenario<T>,
    graph: &TransitionGraph<T>,
) -> Result<()> {
    if graph.n_requests() != scenario.requests.len() {
        return Err(Error::Model(format!(
            "graph built for {} requests, scenario has {}",
            graph.n_requests(),
            scenario.requests.len()
        )));
    }
    if graph.n_stations() != scenario.stations.len() {
        return Err(Error::Model(format!(
            "graph built for {} stations, scenario has {}",
            graph.n_stations(),
            scenario.stations.len()
        )));
    }
    if graph.node_time(graph.sink()) != scenario.horizon_min {
        return Err(Error::Model("graph horizon differs from scenario".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::test_support::unit_scenario;
    use crate::scenario::{ChargingStation, TravelRequest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn req(id: u32, o: (f64, f64), d: (f64, f64), t: i64) -> TravelRequest<f64> {
        TravelRequest {
            id,
            origin: Point::new(o.0, o.1),
            destination: Point::new(d.0, d.1),
            t_request: t,
            revenue: 10.0,
        }
    }

    /// Two requests at 480 and 600 min; the first has a 10 km (20 min)
    /// service leg ending where the second starts.
    fn two_request_scenario() -> Scenario<f64> {
        let mut sc = unit_scenario();
        sc.requests = vec![
            req(0, (0.0, 0.0), (10.0, 0.0), 480),
            req(1, (10.0, 0.0), (0.0, 0.0), 600),
        ];
        sc
    }

    #[test]
    fn available_window_subtracts_service_time() {
        let sc = two_request_scenario();
        let g = build_graph(&sc);
        assert_eq!(g.service_minutes(1), 20);
        // window from drop-off of request 0 (t=500) to pickup of request 1
        assert_eq!(g.available_minutes(1, 2), 100);
        assert!(g.arc_feasible(1, 2));
    }

    #[test]
    fn arcs_backwards_in_time_are_infeasible() {
        let sc = two_request_scenario();
        let g = build_graph(&sc);
        assert!(!g.arc_feasible(2, 1));
        // self-transitions never exist
        assert!(!g.arc_feasible(1, 1));
        assert!(!g.arc_feasible(0, 0));
    }

    #[test]
    fn exact_window_boundary_is_feasible() {
        let mut sc = unit_scenario();
        // service 20 min, deadhead 5 km = 10 min, next pickup exactly at
        // 480 + 20 + 10
        sc.requests = vec![
            req(0, (0.0, 0.0), (10.0, 0.0), 480),
            req(1, (15.0, 0.0), (20.0, 0.0), 510),
        ];
        let g = build_graph(&sc);
        assert_eq!(g.available_minutes(1, 2), 10);
        assert_eq!(g.travel_minutes(1, 2), 10);
        assert!(g.arc_feasible(1, 2));
        // one minute earlier breaks it
        sc.requests[1].t_request = 509;
        let g = build_graph(&sc);
        assert!(!g.arc_feasible(1, 2));
    }

    #[test]
    fn feasible_request_arcs_respect_the_time_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut sc = unit_scenario();
            for id in 0..6u32 {
                let o = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
                let d = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
                sc.requests.push(req(id, o, d, rng.gen_range(0..1440)));
            }
            let g = build_graph(&sc);
            let n = g.n_nodes();
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    if g.arc_feasible(i, j) {
                        assert!(
                            g.node_time(i) + g.service_minutes(i) + g.travel_minutes(i, j)
                                <= g.node_time(j)
                        );
                        // time ordering makes the request subgraph acyclic
                        assert!(!g.arc_feasible(j, i));
                    }
                }
            }
        }
    }

    #[test]
    fn depot_arcs() {
        let mut sc = unit_scenario();
        sc.requests = vec![
            // origin 10 km from depot, pickup at minute 10 < 20 min travel
            req(0, (10.0, 0.0), (10.0, 5.0), 10),
            // late request far away: return would overrun the horizon
            req(1, (20.0, 0.0), (30.0, 0.0), 1430),
        ];
        let g = build_graph(&sc);
        assert!(!g.arc_feasible(0, 1), "unreachable from depot");
        let sink = g.sink();
        assert!(g.arc_feasible(1, sink));
        assert!(g.arc_feasible(2, sink), "sink arcs always feasible");
        assert!(g.arc_feasible(0, sink), "idle vehicles allowed");
    }

    #[test]
    fn max_charge_energy_from_window_slack() {
        let mut sc = two_request_scenario();
        // station right at the shared corner: zero detour
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(10.0, 0.0),
            power_kw: 22.0,
        }];
        let g = build_graph(&sc);
        // slack = 100 min - 0 travel - 0 detour at 22 kW
        let e = g.max_charge_energy(1, 2, 0);
        assert!((e - 100.0 / 60.0 * 22.0).abs() < 1e-9, "{e}");
        assert!(g.charge_feasible(1, 2, 0));
    }

    #[test]
    fn zero_slack_means_zero_energy() {
        let mut sc = unit_scenario();
        sc.requests = vec![
            req(0, (0.0, 0.0), (10.0, 0.0), 480),
            req(1, (15.0, 0.0), (20.0, 0.0), 510),
        ];
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(12.5, 0.0),
            power_kw: 22.0,
        }];
        let g = build_graph(&sc);
        // detour 0 (collinear), slack = 10 - 10 = 0
        assert!(g.charge_feasible(1, 2, 0));
        assert_eq!(g.max_charge_energy(1, 2, 0), 0.0);
    }

    #[test]
    fn detour_overflow_masks_charging() {
        let mut sc = unit_scenario();
        sc.requests = vec![
            req(0, (0.0, 0.0), (10.0, 0.0), 480),
            req(1, (10.0, 0.0), (0.0, 0.0), 600),
        ];
        // 30 km off the path: detour alone exceeds the 100 min window
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(10.0, 30.0),
            power_kw: 22.0,
        }];
        let g = build_graph(&sc);
        assert!(g.arc_feasible(1, 2));
        assert!(!g.charge_feasible(1, 2, 0));
        assert_eq!(g.max_charge_energy(1, 2, 0), 0.0);
    }

    #[test]
    fn charge_bound_capped_at_battery_capacity() {
        let mut sc = two_request_scenario();
        sc.requests[1].t_request = 1430; // ~15h window
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(10.0, 0.0),
            power_kw: 22.0,
        }];
        let g = build_graph(&sc);
        assert_eq!(g.max_charge_energy(1, 2, 0), sc.fleet.battery_kwh);
    }

    #[test]
    fn station_detour_examples() {
        let sc = unit_scenario::<f64>();
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        // collinear station
        let (dt, dd) = station_detour(&sc, &a, &b, &Point::new(5.0, 0.0));
        assert_eq!(dd, 0.0);
        assert_eq!(dt, 0);
        // off-path station
        let (_, dd) = station_detour(&sc, &a, &b, &Point::new(5.0, 5.0));
        assert!((dd - (2.0 * 50.0f64.sqrt() - 10.0)).abs() < 1e-9);
        // zero deadhead: detour is there and back
        let (_, dd) = station_detour(&sc, &a, &a, &Point::new(3.0, 4.0));
        assert!((dd - 10.0).abs() < 1e-12);
    }

    #[test]
    fn widening_the_window_grows_feasibility_and_energy() {
        let mut sc = two_request_scenario();
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(10.0, 3.0),
            power_kw: 22.0,
        }];
        let mut last_chat = -1.0f64;
        let mut was_feasible = false;
        for t in [510, 540, 600, 800, 1100] {
            sc.requests[1].t_request = t;
            let g = build_graph(&sc);
            if was_feasible {
                assert!(g.arc_feasible(1, 2));
            }
            was_feasible = g.arc_feasible(1, 2);
            let chat = g.max_charge_energy(1, 2, 0);
            assert!(chat >= last_chat);
            last_chat = chat;
        }
    }

    #[test]
    fn debug_csv_has_one_row_per_feasible_triple() {
        let mut sc = two_request_scenario();
        sc.stations = vec![ChargingStation {
            id: 0,
            location: Point::new(5.0, 0.0),
            power_kw: 22.0,
        }];
        let g = build_graph(&sc);
        let mut buf = Vec::new();
        g.write_debug_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows = text.lines().count() - 1;
        let feasible = (0..g.n_nodes())
            .flat_map(|i| (0..g.n_nodes()).map(move |j| (i, j)))
            .filter(|&(i, j)| g.arc_feasible(i, j))
            .count();
        assert_eq!(rows, feasible);
        assert!(text.starts_with("i,j,c,t_fp,t_ava,dT,chat"));
    }
}
