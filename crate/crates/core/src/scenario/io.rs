//! Scenario directory ingestion and serialization.
//!
//! A scenario directory holds:
//! - `requests.csv`: `id,origin_x,origin_y,dest_x,dest_y,t_min,revenue_eur`
//! - `stations.csv`: `id,x,y,p_ch_kw`
//! - `prices.csv`:   `t_min,price_eur_per_mwh` (converted to EUR/kWh internally)
//! - `fleet.cfg`:    `key = value` fleet and degradation parameters

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ChargingStation, FleetSpec, Point, PriceSeries, Scenario, TravelRequest};
use crate::degradation::DegradationParams;
use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

pub const REQUESTS_FILE: &str = "requests.csv";
pub const STATIONS_FILE: &str = "stations.csv";
pub const PRICES_FILE: &str = "prices.csv";
pub const FLEET_FILE: &str = "fleet.cfg";

const REQUESTS_HEADER: &str = "id,origin_x,origin_y,dest_x,dest_y,t_min,revenue_eur";
const STATIONS_HEADER: &str = "id,x,y,p_ch_kw";
const PRICES_HEADER: &str = "t_min,price_eur_per_mwh";

/// Loads and validates a scenario directory.
pub fn load_scenario<T: Scalar>(dir: &Path) -> Result<Scenario<T>> {
    Ok(load_dir(dir)?.0)
}

/// Loads a scenario together with the degradation parameters from the same
/// `fleet.cfg`.
pub fn load_dir<T: Scalar>(dir: &Path) -> Result<(Scenario<T>, DegradationParams<T>)> {
    let cfg_path = dir.join(FLEET_FILE);
    let cfg = read_config(&cfg_path)?;
    let cfg_name = FLEET_FILE;

    let horizon_min = cfg_i64(&cfg, cfg_name, "horizon_min")?;
    let fleet = FleetSpec {
        n_vehicles: cfg_i64(&cfg, cfg_name, "n_vehicles")? as usize,
        battery_kwh: cfg_num(&cfg, cfg_name, "e_max_kwh")?,
        initial_kwh: cfg_num(&cfg, cfg_name, "e0_kwh")?,
        consumption_kwh_per_km: cfg_num(&cfg, cfg_name, "econ_kwh_per_km")?,
        depot: Point::new(
            cfg_num(&cfg, cfg_name, "depot_x")?,
            cfg_num(&cfg, cfg_name, "depot_y")?,
        ),
        speed_kmh: cfg_num(&cfg, cfg_name, "speed_kmh")?,
    };
    let detour_factor = cfg_num_or(&cfg, cfg_name, "detour_factor", 1.3)?;
    let degradation = degradation_from_config(&cfg, cfg_name)?;

    let requests = read_requests(&dir.join(REQUESTS_FILE))?;
    let stations = read_stations(&dir.join(STATIONS_FILE))?;
    let prices = read_prices(&dir.join(PRICES_FILE), horizon_min)?;

    let scenario = Scenario {
        requests,
        stations,
        fleet,
        prices,
        horizon_min,
        detour_factor,
    };
    scenario.validate()?;
    Ok((scenario, degradation))
}

/// Writes a scenario directory; `load_dir` of the result reproduces the
/// inputs.
pub fn save_dir<T: Scalar>(
    scenario: &Scenario<T>,
    degradation: &DegradationParams<T>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut req = String::new();
    writeln!(req, "{REQUESTS_HEADER}").unwrap();
    for r in &scenario.requests {
        writeln!(
            req,
            "{},{},{},{},{},{},{}",
            r.id, r.origin.x, r.origin.y, r.destination.x, r.destination.y, r.t_request, r.revenue
        )
        .unwrap();
    }
    write_file(&dir.join(REQUESTS_FILE), &req)?;

    let mut sta = String::new();
    writeln!(sta, "{STATIONS_HEADER}").unwrap();
    for s in &scenario.stations {
        writeln!(sta, "{},{},{},{}", s.id, s.location.x, s.location.y, s.power_kw).unwrap();
    }
    write_file(&dir.join(STATIONS_FILE), &sta)?;

    let mut pri = String::new();
    writeln!(pri, "{PRICES_HEADER}").unwrap();
    for (bp, p) in scenario
        .prices
        .breakpoints()
        .iter()
        .zip(scenario.prices.prices())
    {
        writeln!(pri, "{},{}", bp, *p * cast::<T>(1000.0)).unwrap();
    }
    write_file(&dir.join(PRICES_FILE), &pri)?;

    let f = &scenario.fleet;
    let d = degradation;
    let mut cfg = String::new();
    writeln!(cfg, "# fleet").unwrap();
    writeln!(cfg, "n_vehicles = {}", f.n_vehicles).unwrap();
    writeln!(cfg, "e_max_kwh = {}", f.battery_kwh).unwrap();
    writeln!(cfg, "e0_kwh = {}", f.initial_kwh).unwrap();
    writeln!(cfg, "econ_kwh_per_km = {}", f.consumption_kwh_per_km).unwrap();
    writeln!(cfg, "speed_kmh = {}", f.speed_kmh).unwrap();
    writeln!(cfg, "depot_x = {}", f.depot.x).unwrap();
    writeln!(cfg, "depot_y = {}", f.depot.y).unwrap();
    writeln!(cfg, "horizon_min = {}", scenario.horizon_min).unwrap();
    writeln!(cfg, "detour_factor = {}", scenario.detour_factor).unwrap();
    writeln!(cfg, "# degradation").unwrap();
    writeln!(cfg, "b1 = {}", d.b1).unwrap();
    writeln!(cfg, "b2 = {}", d.b2).unwrap();
    writeln!(cfg, "b3 = {}", d.b3).unwrap();
    writeln!(cfg, "b4 = {}", d.b4).unwrap();
    writeln!(cfg, "b5 = {}", d.b5).unwrap();
    writeln!(cfg, "b6 = {}", d.b6).unwrap();
    writeln!(cfg, "phi_z = {}", d.avg_soc).unwrap();
    writeln!(cfg, "dz = {}", d.depth_of_discharge).unwrap();
    writeln!(cfg, "c_rate_ch = {}", d.c_rate_ch).unwrap();
    writeln!(cfg, "c_rate_dch = {}", d.c_rate_dch).unwrap();
    writeln!(cfg, "v_ch = {}", d.v_ch).unwrap();
    writeln!(cfg, "de_eol = {}", d.eol_drop).unwrap();
    writeln!(cfg, "p_batt_eur = {}", d.battery_price).unwrap();
    match d.q_eol_override {
        Some(q) => writeln!(cfg, "q_eol_kwh = {}", q).unwrap(),
        None => writeln!(cfg, "q_eol_kwh = auto").unwrap(),
    }
    write_file(&dir.join(FLEET_FILE), &cfg)?;
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Splits a CSV line and checks the column count.
fn columns<'a>(
    line: &'a str,
    expect: usize,
    file: &str,
    lineno: usize,
) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
    if cols.len() != expect {
        return Err(Error::parse(
            file,
            lineno,
            format!("expected {} columns, got {}", expect, cols.len()),
        ));
    }
    Ok(cols)
}

fn parse_num<T: Scalar>(s: &str, file: &str, lineno: usize, what: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(file, lineno, format!("bad {what}: {s:?}")))?;
    Ok(cast(v))
}

fn parse_int(s: &str, file: &str, lineno: usize, what: &str) -> Result<i64> {
    s.parse()
        .map_err(|_| Error::parse(file, lineno, format!("bad {what}: {s:?}")))
}

fn check_header(lines: &[String], expected: &str, file: &str) -> Result<()> {
    match lines.first() {
        Some(h) if h.trim() == expected => Ok(()),
        Some(h) => Err(Error::parse(
            file,
            1,
            format!("expected header {expected:?}, got {h:?}"),
        )),
        None => Err(Error::parse(file, 1, "missing header row")),
    }
}

fn read_requests<T: Scalar>(path: &Path) -> Result<Vec<TravelRequest<T>>> {
    let file = file_name(path);
    let lines = read_lines(path)?;
    check_header(&lines, REQUESTS_HEADER, &file)?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let c = columns(line, 7, &file, lineno)?;
        out.push(TravelRequest {
            id: parse_int(c[0], &file, lineno, "id")? as u32,
            origin: Point::new(
                parse_num(c[1], &file, lineno, "origin_x")?,
                parse_num(c[2], &file, lineno, "origin_y")?,
            ),
            destination: Point::new(
                parse_num(c[3], &file, lineno, "dest_x")?,
                parse_num(c[4], &file, lineno, "dest_y")?,
            ),
            t_request: parse_int(c[5], &file, lineno, "t_min")?,
            revenue: parse_num(c[6], &file, lineno, "revenue_eur")?,
        });
    }
    Ok(out)
}

fn read_stations<T: Scalar>(path: &Path) -> Result<Vec<ChargingStation<T>>> {
    let file = file_name(path);
    let lines = read_lines(path)?;
    check_header(&lines, STATIONS_HEADER, &file)?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let c = columns(line, 4, &file, lineno)?;
        out.push(ChargingStation {
            id: parse_int(c[0], &file, lineno, "id")? as u32,
            location: Point::new(
                parse_num(c[1], &file, lineno, "x")?,
                parse_num(c[2], &file, lineno, "y")?,
            ),
            power_kw: parse_num(c[3], &file, lineno, "p_ch_kw")?,
        });
    }
    Ok(out)
}

fn read_prices<T: Scalar>(path: &Path, horizon_min: i64) -> Result<PriceSeries<T>> {
    let file = file_name(path);
    let lines = read_lines(path)?;
    check_header(&lines, PRICES_HEADER, &file)?;
    let mut bps = Vec::new();
    let mut prices = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let c = columns(line, 2, &file, lineno)?;
        bps.push(parse_int(c[0], &file, lineno, "t_min")?);
        // day-ahead market feeds quote EUR/MWh; internal unit is EUR/kWh
        let mwh: T = parse_num(c[1], &file, lineno, "price_eur_per_mwh")?;
        prices.push(mwh / cast::<T>(1000.0));
    }
    PriceSeries::new(bps, prices, horizon_min)
}

fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let file = file_name(path);
    let lines = read_lines(path)?;
    let mut map = HashMap::new();
    for (i, line) in lines.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(&file, i + 1, format!("expected `key = value`, got {line:?}"))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn cfg_get<'a>(cfg: &'a HashMap<String, String>, file: &str, key: &str) -> Result<&'a str> {
    cfg.get(key)
        .map(|s| s.as_str())
        .ok_or_else(|| Error::parse(file, 0, format!("missing key {key:?}")))
}

fn cfg_num<T: Scalar>(cfg: &HashMap<String, String>, file: &str, key: &str) -> Result<T> {
    parse_num(cfg_get(cfg, file, key)?, file, 0, key)
}

fn cfg_num_or<T: Scalar>(
    cfg: &HashMap<String, String>,
    file: &str,
    key: &str,
    default: f64,
) -> Result<T> {
    match cfg.get(key) {
        Some(v) => parse_num(v, file, 0, key),
        None => Ok(cast(default)),
    }
}

fn cfg_i64(cfg: &HashMap<String, String>, file: &str, key: &str) -> Result<i64> {
    parse_int(cfg_get(cfg, file, key)?, file, 0, key)
}

fn degradation_from_config<T: Scalar>(
    cfg: &HashMap<String, String>,
    file: &str,
) -> Result<DegradationParams<T>> {
    let mut d = DegradationParams::default();
    d.b1 = cfg_num_or(cfg, file, "b1", to_f64(d.b1))?;
    d.b2 = cfg_num_or(cfg, file, "b2", to_f64(d.b2))?;
    d.b3 = cfg_num_or(cfg, file, "b3", to_f64(d.b3))?;
    d.b4 = cfg_num_or(cfg, file, "b4", to_f64(d.b4))?;
    d.b5 = cfg_num_or(cfg, file, "b5", to_f64(d.b5))?;
    d.b6 = cfg_num_or(cfg, file, "b6", to_f64(d.b6))?;
    d.avg_soc = cfg_num_or(cfg, file, "phi_z", to_f64(d.avg_soc))?;
    d.depth_of_discharge = cfg_num_or(cfg, file, "dz", to_f64(d.depth_of_discharge))?;
    if let Some(v) = cfg.get("c_rate") {
        let c: T = parse_num(v, file, 0, "c_rate")?;
        d.c_rate_ch = c;
        d.c_rate_dch = c;
    }
    d.c_rate_ch = cfg_num_or(cfg, file, "c_rate_ch", to_f64(d.c_rate_ch))?;
    d.c_rate_dch = cfg_num_or(cfg, file, "c_rate_dch", to_f64(d.c_rate_dch))?;
    d.v_ch = cfg_num_or(cfg, file, "v_ch", to_f64(d.v_ch))?;
    d.eol_drop = cfg_num_or(cfg, file, "de_eol", to_f64(d.eol_drop))?;
    d.battery_price = cfg_num_or(cfg, file, "p_batt_eur", to_f64(d.battery_price))?;
    match cfg.get("q_eol_kwh").map(|s| s.as_str()) {
        // `auto` selects the physical mode that evaluates Q_eol from kappa
        Some("auto") => d.q_eol_override = None,
        Some(v) => d.q_eol_override = Some(parse_num(v, file, 0, "q_eol_kwh")?),
        None => {}
    }
    d.validate()?;
    Ok(d)
}
