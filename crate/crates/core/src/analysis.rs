//! Operational reporting: profit breakdown, grid power profile, battery
//! degradation curve, and the battery-price sweep. Every monetary figure is
//! recomputed from plan primitives so reports are solver-independent.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::dag::build_graph;
use crate::degradation::DegradationParams;
use crate::error::{Error, Result};
use crate::milp::build_model;
use crate::plan::{extract_plan, transition_price, validate_plan, FleetPlan};
use crate::scalar::{cast, Scalar};
use crate::scenario::Scenario;
use crate::solver::{solve, SolveSettings, SolveStatus};

/// Daily operational costs and revenues of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitBreakdown<T> {
    pub travel_revenue: T,
    pub charging_cost: T,
    pub discharging_revenue: T,
    pub degradation_cost: T,
    pub profit: T,
    pub charged_kwh: T,
    pub discharged_kwh: T,
    pub served_count: usize,
    /// Battery lifetime at this throughput per vehicle; infinite when the
    /// fleet never touches a charger.
    pub avg_lifetime_days: T,
}

pub fn profit_breakdown<T: Scalar>(
    plan: &FleetPlan<T>,
    scenario: &Scenario<T>,
    degradation: &DegradationParams<T>,
) -> Result<ProfitBreakdown<T>> {
    let mut charging_cost = T::zero();
    let mut discharging_revenue = T::zero();
    for v in &plan.vehicles {
        for leg in &v.legs {
            let price = transition_price(scenario, leg.from, leg.to);
            for visit in &leg.visits {
                if visit.charge_kwh > T::zero() {
                    charging_cost = charging_cost + price * visit.charge_kwh;
                } else {
                    discharging_revenue = discharging_revenue - price * visit.charge_kwh;
                }
            }
        }
    }
    let throughput = plan.throughput_kwh();
    let degradation_cost = degradation.cost_for_throughput(throughput)?;
    let served = plan.served(scenario.requests.len());
    let travel_revenue = scenario
        .requests
        .iter()
        .enumerate()
        .filter(|(r, _)| served[*r])
        .fold(T::zero(), |a, (_, req)| a + req.revenue);
    let n_vehicles = cast::<T>(plan.vehicles.len().max(1) as f64);
    let per_vehicle_daily = throughput / n_vehicles;
    let avg_lifetime_days = if per_vehicle_daily > T::zero() {
        degradation.lifetime_days(per_vehicle_daily)?
    } else {
        T::infinity()
    };
    Ok(ProfitBreakdown {
        travel_revenue,
        charging_cost,
        discharging_revenue,
        degradation_cost,
        profit: travel_revenue - charging_cost + discharging_revenue - degradation_cost,
        charged_kwh: plan.charged_kwh(),
        discharged_kwh: plan.discharged_kwh(),
        served_count: plan.served_count(scenario.requests.len()),
        avg_lifetime_days,
    })
}

/// One bin of the grid exchange profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBin<T> {
    pub t_min: i64,
    pub charge_kw: T,
    pub discharge_kw: T,
    pub net_kw: T,
}

/// Spreads each charging leg's energy uniformly over its idle window and
/// bins the resulting power. `bin_minutes` must divide the horizon.
pub fn grid_profile<T: Scalar>(
    plan: &FleetPlan<T>,
    scenario: &Scenario<T>,
    bin_minutes: i64,
) -> Result<Vec<GridBin<T>>> {
    if bin_minutes <= 0 || scenario.horizon_min % bin_minutes != 0 {
        return Err(Error::Invalid(format!(
            "bin of {bin_minutes} min does not divide the {} min horizon",
            scenario.horizon_min
        )));
    }
    let n_bins = (scenario.horizon_min / bin_minutes) as usize;
    let mut charge = vec![T::zero(); n_bins];
    let mut discharge = vec![T::zero(); n_bins];

    let sink = scenario.requests.len() + 1;
    let node_time = |node: usize| -> i64 {
        if node == 0 {
            0
        } else if node == sink {
            scenario.horizon_min
        } else {
            scenario.requests[node - 1].t_request
        }
    };
    let service = |node: usize| -> i64 {
        if node == 0 || node == sink {
            0
        } else {
            let r = &scenario.requests[node - 1];
            scenario.travel_minutes(&r.origin, &r.destination)
        }
    };

    for v in &plan.vehicles {
        for leg in &v.legs {
            let energy = leg.net_charge_kwh();
            if energy == T::zero() {
                continue;
            }
            let start = (node_time(leg.from) + service(leg.from)).max(0);
            let end = node_time(leg.to).min(scenario.horizon_min);
            if end <= start {
                continue;
            }
            let window_min = cast::<T>((end - start) as f64);
            let (series, kwh) = if energy > T::zero() {
                (&mut charge, energy)
            } else {
                (&mut discharge, -energy)
            };
            for (b, slot) in series.iter_mut().enumerate() {
                let b_start = b as i64 * bin_minutes;
                let b_end = b_start + bin_minutes;
                let overlap = (end.min(b_end) - start.max(b_start)).max(0);
                if overlap > 0 {
                    // kWh in bin -> average kW over the bin
                    let e = kwh * cast::<T>(overlap as f64) / window_min;
                    *slot = *slot + e / (cast::<T>(bin_minutes as f64) / cast::<T>(60.0));
                }
            }
        }
    }

    Ok((0..n_bins)
        .map(|b| GridBin {
            t_min: b as i64 * bin_minutes,
            charge_kw: charge[b],
            discharge_kw: discharge[b],
            net_kw: charge[b] - discharge[b],
        })
        .collect())
}

/// One battery-price point of the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow<T> {
    pub p_batt_per_kwh: T,
    pub degradation_cost_per_vehicle_day: T,
    pub lifetime_days: T,
    /// Objective excluding served-revenue: electricity plus degradation.
    pub objective_excl_travel: T,
    pub charged_kwh_per_vehicle: T,
    pub discharged_kwh_per_vehicle: T,
    pub served_count: usize,
    pub status: String,
}

/// Solves the scenario once per battery price (EUR per kWh of capacity,
/// scaled by the pack size), in input order; failures are recorded in the
/// row and do not abort the sweep.
pub fn pareto_sweep<T: Scalar>(
    scenario: &Scenario<T>,
    degradation: &DegradationParams<T>,
    p_batt_per_kwh: &[T],
    settings: &SolveSettings,
    jobs: usize,
) -> Result<Vec<SweepRow<T>>> {
    if p_batt_per_kwh.is_empty() {
        return Err(Error::Invalid("sweep needs at least one price point".into()));
    }
    let graph = build_graph(scenario);
    let slots: Vec<Mutex<Option<SweepRow<T>>>> =
        p_batt_per_kwh.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(p_batt_per_kwh.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= p_batt_per_kwh.len() {
                    break;
                }
                let per_kwh = p_batt_per_kwh[idx];
                let mut deg = degradation.clone();
                deg.battery_price = per_kwh * scenario.fleet.battery_kwh;
                let row = sweep_point(scenario, &graph, &deg, per_kwh, settings);
                *slots[idx].lock().unwrap() = Some(row);
            });
        }
    });

    Ok(slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("all points computed"))
        .collect())
}

fn sweep_point<T: Scalar>(
    scenario: &Scenario<T>,
    graph: &crate::dag::TransitionGraph<T>,
    deg: &DegradationParams<T>,
    per_kwh: T,
    settings: &SolveSettings,
) -> SweepRow<T> {
    let nan = T::nan();
    let failed = |status: String| SweepRow {
        p_batt_per_kwh: per_kwh,
        degradation_cost_per_vehicle_day: nan,
        lifetime_days: nan,
        objective_excl_travel: nan,
        charged_kwh_per_vehicle: nan,
        discharged_kwh_per_vehicle: nan,
        served_count: 0,
        status,
    };

    let model = match build_model(scenario, graph, deg) {
        Ok(m) => m,
        Err(e) => return failed(format!("model error: {e}")),
    };
    let result = match solve(&model, settings) {
        Ok(r) => r,
        Err(e) => return failed(format!("error: {e}")),
    };
    match result.status {
        SolveStatus::Optimal | SolveStatus::GapFeasible => {}
        SolveStatus::Infeasible => return failed("infeasible".into()),
        SolveStatus::TimeoutNoSolution => return failed("timeout".into()),
    }
    let plan = match extract_plan(&model, &result.values) {
        Ok(p) => p,
        Err(e) => return failed(format!("extraction error: {e}")),
    };
    if !validate_plan(&plan, scenario, graph).is_empty() {
        return failed("plan validation failed".into());
    }
    let breakdown = match profit_breakdown(&plan, scenario, deg) {
        Ok(b) => b,
        Err(e) => return failed(format!("breakdown error: {e}")),
    };
    let n_vehicles = cast::<T>(scenario.fleet.n_vehicles.max(1) as f64);
    SweepRow {
        p_batt_per_kwh: per_kwh,
        degradation_cost_per_vehicle_day: breakdown.degradation_cost / n_vehicles,
        lifetime_days: breakdown.avg_lifetime_days,
        objective_excl_travel: breakdown.charging_cost - breakdown.discharging_revenue
            + breakdown.degradation_cost,
        charged_kwh_per_vehicle: breakdown.charged_kwh / n_vehicles,
        discharged_kwh_per_vehicle: breakdown.discharged_kwh / n_vehicles,
        served_count: breakdown.served_count,
        status: match result.status {
            SolveStatus::Optimal => "optimal".into(),
            _ => "gap-feasible".into(),
        },
    }
}

pub fn write_breakdown_csv<T: Scalar, W: Write>(
    b: &ProfitBreakdown<T>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "travel_revenue_eur,charging_cost_eur,discharging_revenue_eur,degradation_cost_eur,profit_eur,charged_kwh,discharged_kwh,served_count,avg_lifetime_days"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        b.travel_revenue,
        b.charging_cost,
        b.discharging_revenue,
        b.degradation_cost,
        b.profit,
        b.charged_kwh,
        b.discharged_kwh,
        b.served_count,
        b.avg_lifetime_days
    )
}

pub fn write_grid_profile_csv<T: Scalar, W: Write>(
    bins: &[GridBin<T>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "t_min,charge_kw,discharge_kw,net_kw")?;
    for b in bins {
        writeln!(w, "{},{},{},{}", b.t_min, b.charge_kw, b.discharge_kw, b.net_kw)?;
    }
    Ok(())
}

pub fn write_sweep_csv<T: Scalar, W: Write>(rows: &[SweepRow<T>], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "p_batt_per_kwh,degradation_cost_per_vehicle_day,lifetime_days,objective_excl_travel,charged_kwh_per_vehicle,discharged_kwh_per_vehicle,served_count,status"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.p_batt_per_kwh,
            r.degradation_cost_per_vehicle_day,
            r.lifetime_days,
            r.objective_excl_travel,
            r.charged_kwh_per_vehicle,
            r.discharged_kwh_per_vehicle,
            r.served_count,
            r.status
        )?;
    }
    Ok(())
}

/// Aging curve as CSV: `q_kwh,drop_nonlinear,drop_linear`, from zero to 20%
/// past end of life.
pub fn write_degradation_curve_csv<T: Scalar, W: Write>(
    deg: &DegradationParams<T>,
    steps: usize,
    mut w: W,
) -> Result<()> {
    let q_max = deg.q_eol()? * cast::<T>(1.2);
    let rows = deg.curve(q_max, steps)?;
    let io_err = |e: std::io::Error| Error::Solver(format!("writing curve: {e}"));
    writeln!(w, "q_kwh,drop_nonlinear,drop_linear").map_err(io_err)?;
    for (q, nl, l) in rows {
        writeln!(w, "{q},{nl},{l}").map_err(io_err)?;
    }
    Ok(())
}
