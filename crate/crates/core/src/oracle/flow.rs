//! Exact charge/discharge amounts for a fixed vehicle chain.
//!
//! Once a chain and its station stops are fixed, the remaining decisions are
//! how much to charge (buy) or discharge (sell) in each stop's window. The
//! optimum is found greedily: starting from "battery carries its initial
//! energy to the end", keep applying the cheapest feasible reallocation —
//! buy in the cheapest reachable window for each unmet consumption, and take
//! a buy/sell pair whenever the spread beats the round-trip cost — until no
//! improving move remains. Because every exchange moves energy along the
//! single timeline between the grid and the battery band [0, E_max], these
//! moves are exactly the augmenting paths of a min-cost flow on a path
//! graph, which is how this is implemented; when no negative-cost move is
//! left the schedule is globally optimal (no negative residual cycle), the
//! usual exchange argument.
//!
//! Network: node 0 is the grid, node l (1..=m) is the arrival point of leg
//! l. Storage arcs (l, l+1) with capacity E_max carry the battery level;
//! buy/sell arcs connect window legs to the grid. Consumption E_l is a fixed
//! demand at node l; the initial energy enters at node 1 and the terminal
//! equality e_m = E_b0 is a fixed demand at node m. Negative-cost arcs
//! (profitable sells, negative prices) are pre-saturated and entered through
//! their reversals, after which successive shortest augmenting paths from
//! excess to deficit nodes reach the optimum.

use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone)]
pub struct ChargeWindow<T> {
    /// Maximum energy exchangeable in this window, kWh.
    pub cap_kwh: T,
    /// Cost per kWh charged: price + degradation + tie-break.
    pub buy_cost: T,
    /// Cost per kWh discharged: -price + degradation + tie-break.
    pub sell_cost: T,
}

#[derive(Debug, Clone)]
pub struct ChainLeg<T> {
    /// Driving energy of the leg (deadhead + service + any detour), kWh.
    pub consumption_kwh: T,
    pub window: Option<ChargeWindow<T>>,
}

#[derive(Debug, Clone)]
pub struct ChargeSchedule<T> {
    /// Signed exchange per leg: positive charges the battery.
    pub net_kwh: Vec<T>,
    /// Battery level on arrival of each leg, kWh.
    pub arrival_kwh: Vec<T>,
    /// Total buy/sell cost under the window prices.
    pub cost: T,
}

struct FlowArc<T> {
    from: usize,
    to: usize,
    cap: T,
    cost: T,
    flow: T,
}

/// Optimal charge schedule for a chain, or `None` when the consumption
/// cannot be recovered within the windows (the chain is infeasible).
pub fn allocate_charges<T: Scalar>(
    e0: T,
    e_max: T,
    legs: &[ChainLeg<T>],
) -> Option<ChargeSchedule<T>> {
    let m = legs.len();
    if m == 0 {
        return Some(ChargeSchedule {
            net_kwh: vec![],
            arrival_kwh: vec![],
            cost: T::zero(),
        });
    }

    // nodes: 0 grid, 1..=m legs, m+1 source, m+2 sink
    let grid = 0usize;
    let source = m + 1;
    let sink = m + 2;
    let n_nodes = m + 3;

    let total_consumption = legs
        .iter()
        .fold(T::zero(), |a, l| a + l.consumption_kwh);

    let mut balance = vec![T::zero(); n_nodes];
    balance[grid] = balance[grid] + total_consumption;
    balance[1] = balance[1] + e0;
    for (l, leg) in legs.iter().enumerate() {
        balance[l + 1] = balance[l + 1] - leg.consumption_kwh;
    }
    balance[m] = balance[m] - e0;

    let mut arcs: Vec<FlowArc<T>> = Vec::new();
    let mut buy_arc = vec![usize::MAX; m];
    let mut sell_arc = vec![usize::MAX; m];
    for l in 1..m {
        arcs.push(FlowArc {
            from: l,
            to: l + 1,
            cap: e_max,
            cost: T::zero(),
            flow: T::zero(),
        });
    }
    for (l, leg) in legs.iter().enumerate() {
        if let Some(w) = &leg.window {
            if w.cap_kwh <= T::zero() {
                continue;
            }
            buy_arc[l] = arcs.len();
            arcs.push(FlowArc {
                from: grid,
                to: l + 1,
                cap: w.cap_kwh,
                cost: w.buy_cost,
                flow: T::zero(),
            });
            sell_arc[l] = arcs.len();
            arcs.push(FlowArc {
                from: l + 1,
                to: grid,
                cap: w.cap_kwh,
                cost: w.sell_cost,
                flow: T::zero(),
            });
        }
    }

    // pre-saturate negative-cost arcs so the residual network starts with
    // non-negative costs (their reversals price the undo)
    for a in &mut arcs {
        if a.cost < T::zero() {
            a.flow = a.cap;
            balance[a.from] = balance[a.from] - a.cap;
            balance[a.to] = balance[a.to] + a.cap;
        }
    }

    for v in 0..=m {
        if balance[v] > T::zero() {
            arcs.push(FlowArc {
                from: source,
                to: v,
                cap: balance[v],
                cost: T::zero(),
                flow: T::zero(),
            });
        } else if balance[v] < T::zero() {
            arcs.push(FlowArc {
                from: v,
                to: sink,
                cap: -balance[v],
                cost: T::zero(),
                flow: T::zero(),
            });
        }
    }

    let scale = (total_consumption + e0 + e_max).abs() + T::one();
    let residual_tol = scale * T::epsilon() * cast::<T>(8.0);
    // relaxations must beat this margin; FP dust around zero-cost residual
    // cycles can otherwise chain parent pointers into a loop
    let cost_scale = arcs
        .iter()
        .fold(T::one(), |a, arc| a + arc.cost.abs());
    let improve_eps = cost_scale * (T::epsilon() * cast::<T>(16.0)).max(cast(1e-14));

    // successive shortest augmenting paths, Bellman-Ford on the residual
    let mut guard = 0usize;
    loop {
        guard += 1;
        assert!(guard < 10_000, "charge allocation did not converge");

        let inf = T::infinity();
        let mut dist = vec![inf; n_nodes];
        let mut parent: Vec<Option<(usize, bool)>> = vec![None; n_nodes];
        dist[source] = T::zero();
        for _ in 0..n_nodes {
            let mut changed = false;
            for (idx, a) in arcs.iter().enumerate() {
                if a.cap - a.flow > residual_tol && dist[a.from] + a.cost < dist[a.to] - improve_eps
                {
                    dist[a.to] = dist[a.from] + a.cost;
                    parent[a.to] = Some((idx, true));
                    changed = true;
                }
                if a.flow > residual_tol && dist[a.to] - a.cost < dist[a.from] - improve_eps {
                    dist[a.from] = dist[a.to] - a.cost;
                    parent[a.from] = Some((idx, false));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == inf {
            break;
        }

        // collect the path, tracking the bottleneck
        let mut path = Vec::with_capacity(n_nodes);
        let mut delta = inf;
        let mut node = sink;
        let mut bottleneck = (usize::MAX, true);
        while node != source {
            assert!(
                path.len() <= arcs.len() + n_nodes,
                "augmenting path reconstruction cycled"
            );
            let (idx, forward) = parent[node].expect("path exists");
            path.push((idx, forward));
            let room = if forward {
                arcs[idx].cap - arcs[idx].flow
            } else {
                arcs[idx].flow
            };
            if room < delta {
                delta = room;
                bottleneck = (idx, forward);
            }
            node = if forward { arcs[idx].from } else { arcs[idx].to };
        }

        for &(idx, forward) in &path {
            if forward {
                arcs[idx].flow = arcs[idx].flow + delta;
            } else {
                arcs[idx].flow = arcs[idx].flow - delta;
            }
        }
        // snap the bottleneck arc to its bound so FP dust cannot recycle it
        let (idx, forward) = bottleneck;
        if forward {
            arcs[idx].flow = arcs[idx].cap;
        } else {
            arcs[idx].flow = T::zero();
        }
    }

    // all mandatory supply must have been routed
    let feas_tol = residual_tol.max(cast(1e-9));
    for a in &arcs {
        if a.from == source && a.cap - a.flow > feas_tol {
            return None;
        }
        if a.to == sink && a.cap - a.flow > feas_tol {
            return None;
        }
    }

    let mut net = vec![T::zero(); m];
    let mut cost = T::zero();
    for l in 0..m {
        let mut n = T::zero();
        if buy_arc[l] != usize::MAX {
            let bought = arcs[buy_arc[l]].flow.max(T::zero());
            let sold = arcs[sell_arc[l]].flow.max(T::zero());
            n = bought - sold;
            cost = cost + arcs[buy_arc[l]].cost * bought + arcs[sell_arc[l]].cost * sold;
        }
        net[l] = n;
    }
    let mut arrival = Vec::with_capacity(m);
    let mut level = e0;
    for l in 0..m {
        level = level - legs[l].consumption_kwh + net[l];
        arrival.push(level);
    }
    Some(ChargeSchedule {
        net_kwh: net,
        arrival_kwh: arrival,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leg(cons: f64, window: Option<(f64, f64, f64)>) -> ChainLeg<f64> {
        ChainLeg {
            consumption_kwh: cons,
            window: window.map(|(cap, buy, sell)| ChargeWindow {
                cap_kwh: cap,
                buy_cost: buy,
                sell_cost: sell,
            }),
        }
    }

    /// Feasibility check of a schedule against the band and window caps.
    fn feasible(e0: f64, e_max: f64, legs: &[ChainLeg<f64>], net: &[f64], tol: f64) -> bool {
        let mut level = e0;
        for (l, leg) in legs.iter().enumerate() {
            match &leg.window {
                Some(w) => {
                    if net[l].abs() > w.cap_kwh + tol {
                        return false;
                    }
                }
                None => {
                    if net[l] != 0.0 {
                        return false;
                    }
                }
            }
            level = level - leg.consumption_kwh + net[l];
            if level < -tol || level > e_max + tol {
                return false;
            }
        }
        (level - e0).abs() <= tol
    }

    fn cost_of(legs: &[ChainLeg<f64>], net: &[f64]) -> f64 {
        legs.iter()
            .zip(net)
            .map(|(leg, &n)| match &leg.window {
                Some(w) => {
                    if n >= 0.0 {
                        w.buy_cost * n
                    } else {
                        w.sell_cost * (-n)
                    }
                }
                None => 0.0,
            })
            .sum()
    }

    #[test]
    fn idle_chain_is_free() {
        let s = allocate_charges(20.0, 40.0, &[leg(0.0, None)]).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.arrival_kwh, vec![20.0]);
    }

    #[test]
    fn driving_without_windows_is_infeasible() {
        assert!(allocate_charges(20.0, 40.0, &[leg(1.0, None)]).is_none());
    }

    #[test]
    fn consumption_is_recovered_at_the_window_price() {
        let legs = [leg(2.0, Some((30.0, 0.10, -0.02))), leg(3.0, None)];
        let s = allocate_charges(20.0, 40.0, &legs).unwrap();
        assert!((s.net_kwh[0] - 5.0).abs() < 1e-9);
        assert!((s.cost - 0.5).abs() < 1e-9);
        assert!((s.arrival_kwh[1] - 20.0).abs() < 1e-9);
    }

    #[test]
    fn cheapest_window_is_preferred() {
        let legs = [
            leg(2.0, Some((30.0, 0.20, 0.02))),
            leg(0.0, Some((30.0, 0.05, 0.04))),
        ];
        // both windows can cover the 2 kWh; the later, cheaper one wins by
        // dipping into the initial energy and restoring it afterwards
        let s = allocate_charges(20.0, 40.0, &legs).unwrap();
        assert!((s.net_kwh[0] - 0.0).abs() < 1e-9, "{:?}", s.net_kwh);
        assert!((s.net_kwh[1] - 2.0).abs() < 1e-9);
        assert!((s.cost - 0.1).abs() < 1e-9);
    }

    #[test]
    fn empty_battery_blocks_deferred_buying() {
        // consumption before the window exceeds the initial energy
        let legs = [leg(5.0, None), leg(0.0, Some((30.0, 0.05, 0.05)))];
        assert!(allocate_charges(2.0, 40.0, &legs).is_none());
        let s = allocate_charges(5.0, 40.0, &legs).unwrap();
        assert!((s.net_kwh[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn arbitrage_respects_band_headroom() {
        // buy cheap early, sell dear late; headroom above e0 is 10 kWh
        let legs = [
            leg(0.0, Some((50.0, 0.05, -0.03))),
            leg(0.0, Some((50.0, 0.30, -0.28))),
        ];
        let s = allocate_charges(30.0, 40.0, &legs).unwrap();
        assert!((s.net_kwh[0] - 10.0).abs() < 1e-9, "{:?}", s.net_kwh);
        assert!((s.net_kwh[1] + 10.0).abs() < 1e-9);
        assert!((s.cost - (0.05 * 10.0 - 0.28 * 10.0)).abs() < 1e-9);
    }

    #[test]
    fn sell_first_rebuy_later_uses_initial_energy() {
        // expensive window first: sell down to empty, then rebuy cheap
        let legs = [
            leg(0.0, Some((50.0, 0.30, -0.28))),
            leg(0.0, Some((50.0, 0.05, -0.03))),
        ];
        let s = allocate_charges(30.0, 40.0, &legs).unwrap();
        assert!((s.net_kwh[0] + 30.0).abs() < 1e-9, "{:?}", s.net_kwh);
        assert!((s.net_kwh[1] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn unprofitable_spread_stays_idle() {
        // round-trip cost exceeds the spread: no arbitrage
        let legs = [
            leg(0.0, Some((50.0, 0.10, -0.04))),
            leg(0.0, Some((50.0, 0.12, -0.06))),
        ];
        let s = allocate_charges(20.0, 40.0, &legs).unwrap();
        assert_eq!(s.net_kwh, vec![0.0, 0.0]);
        assert_eq!(s.cost, 0.0);
    }

    #[test]
    fn matches_grid_search_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..120 {
            let e_max = 8.0;
            let e0 = rng.gen_range(0..=8) as f64;
            let n = rng.gen_range(1..=3usize);
            let legs: Vec<ChainLeg<f64>> = (0..n)
                .map(|_| {
                    let cons = rng.gen_range(0..=3) as f64;
                    let with_window = rng.gen_bool(0.8);
                    leg(
                        cons,
                        with_window.then(|| {
                            let price = rng.gen_range(-0.05..0.3);
                            let deg = rng.gen_range(0.0..0.1);
                            let cap = rng.gen_range(0..=12) as f64;
                            (cap, price + deg, -price + deg)
                        }),
                    )
                })
                .collect();

            let result = allocate_charges(e0, e_max, &legs);

            // exhaustive grid over half-kWh steps
            let step = 0.5;
            let mut best: Option<f64> = None;
            let mut stack = vec![(0usize, Vec::<f64>::new())];
            while let Some((l, net)) = stack.pop() {
                if l == legs.len() {
                    if feasible(e0, e_max, &legs, &net, 1e-9) {
                        let c = cost_of(&legs, &net);
                        best = Some(best.map_or(c, |b: f64| b.min(c)));
                    }
                    continue;
                }
                match &legs[l].window {
                    None => {
                        let mut n2 = net.clone();
                        n2.push(0.0);
                        stack.push((l + 1, n2));
                    }
                    Some(w) => {
                        let steps = (w.cap_kwh / step).round() as i64;
                        for s in -steps..=steps {
                            let mut n2 = net.clone();
                            n2.push(s as f64 * step);
                            stack.push((l + 1, n2));
                        }
                    }
                }
            }

            match (result, best) {
                (None, None) => {}
                (None, Some(b)) => panic!("case {case}: allocator infeasible, grid found {b}"),
                (Some(s), None) => {
                    // allocator may be feasible where the coarse grid is not
                    assert!(
                        feasible(e0, e_max, &legs, &s.net_kwh, 1e-6),
                        "case {case}: infeasible schedule"
                    );
                }
                (Some(s), Some(b)) => {
                    assert!(
                        feasible(e0, e_max, &legs, &s.net_kwh, 1e-6),
                        "case {case}: infeasible schedule"
                    );
                    // grid optimum can never beat the exact optimum
                    assert!(
                        s.cost <= b + 1e-9,
                        "case {case}: allocator {} worse than grid {b}",
                        s.cost
                    );
                }
            }
        }
    }

    #[test]
    fn no_pairwise_exchange_improves_the_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..200 {
            let e_max = 8.0;
            let e0 = rng.gen_range(0.0..=e_max);
            let n = rng.gen_range(2..=5usize);
            let legs: Vec<ChainLeg<f64>> = (0..n)
                .map(|_| {
                    let cons = rng.gen_range(0.0..2.0);
                    let price = rng.gen_range(-0.05..0.3);
                    let deg = rng.gen_range(0.0..0.08);
                    leg(
                        cons,
                        rng.gen_bool(0.9)
                            .then(|| (rng.gen_range(0.0..10.0), price + deg, -price + deg)),
                    )
                })
                .collect();
            let Some(s) = allocate_charges(e0, e_max, &legs) else {
                continue;
            };
            assert!(feasible(e0, e_max, &legs, &s.net_kwh, 1e-6), "case {case}");
            let base = cost_of(&legs, &s.net_kwh);

            // move delta between every pair of windows, both signs; any
            // feasible move must not reduce the cost
            let delta = 0.125;
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let mut net = s.net_kwh.clone();
                    net[a] += delta;
                    net[b] -= delta;
                    if feasible(e0, e_max, &legs, &net, 1e-9) {
                        let c = cost_of(&legs, &net);
                        assert!(
                            c >= base - 1e-9,
                            "case {case}: move ({a}, {b}) improves {base} -> {c}"
                        );
                    }
                }
            }
            // single-window absolute changes break the terminal equality,
            // so pairwise moves are the complete neighborhood
        }
    }
}
