//! Seeded synthetic scenario generation.
//!
//! Request times follow either a uniform profile or two rush-hour peaks;
//! locations are uniform in a square; prices are flat or a two-level
//! day/night pattern. Everything is drawn from a `ChaCha8Rng`, so a fixed
//! seed reproduces the scenario byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChargingStation, FleetSpec, Point, PriceSeries, Scenario, TravelRequest};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandProfile {
    Uniform,
    /// Morning and evening rush-hour peaks.
    BimodalPeaks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricePattern {
    Flat,
    /// Cheap night (before 07:00 and after 22:00), expensive day.
    DayNight,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_requests: usize,
    pub n_vehicles: usize,
    pub n_stations: usize,
    pub profile: DemandProfile,
    pub prices: PricePattern,
    pub square_km: f64,
    pub horizon_min: i64,
    pub battery_kwh: f64,
    pub initial_kwh: f64,
    pub consumption_kwh_per_km: f64,
    pub speed_kmh: f64,
    pub station_power_kw: f64,
    pub detour_factor: f64,
}

impl GeneratorConfig {
    pub fn new(seed: u64, n_requests: usize, n_vehicles: usize, n_stations: usize) -> Self {
        GeneratorConfig {
            seed,
            n_requests,
            n_vehicles,
            n_stations,
            profile: DemandProfile::BimodalPeaks,
            prices: PricePattern::DayNight,
            square_km: 10.0,
            horizon_min: 1440,
            battery_kwh: 40.0,
            initial_kwh: 20.0,
            consumption_kwh_per_km: 0.15,
            speed_kmh: 30.0,
            station_power_kw: 22.0,
            detour_factor: 1.3,
        }
    }

    pub fn profile(mut self, p: DemandProfile) -> Self {
        self.profile = p;
        self
    }

    pub fn prices(mut self, p: PricePattern) -> Self {
        self.prices = p;
        self
    }

    pub fn build<T: Scalar>(&self) -> Scenario<T> {
        generate(self)
    }
}

/// Generates a scenario with default geometry and pricing; deterministic for
/// a fixed seed.
pub fn generate_synthetic<T: Scalar>(
    seed: u64,
    n_requests: usize,
    n_vehicles: usize,
    n_stations: usize,
    profile: DemandProfile,
) -> Scenario<T> {
    generate(&GeneratorConfig::new(seed, n_requests, n_vehicles, n_stations).profile(profile))
}

fn generate<T: Scalar>(cfg: &GeneratorConfig) -> Scenario<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = cfg.horizon_min;

    let mut times: Vec<i64> = (0..cfg.n_requests)
        .map(|_| match cfg.profile {
            DemandProfile::Uniform => rng.gen_range(0..h),
            DemandProfile::BimodalPeaks => {
                // mix of two gaussian rush hours at 08:30 and 17:30
                let center = if rng.gen_bool(0.5) { 510.0 } else { 1050.0 };
                let t = center + gaussian(&mut rng) * 90.0;
                (t.round() as i64).clamp(0, h - 1)
            }
        })
        .collect();
    times.sort_unstable();

    let mut requests = Vec::with_capacity(cfg.n_requests);
    for (i, t) in times.into_iter().enumerate() {
        let origin = random_point(&mut rng, cfg.square_km);
        let mut destination = random_point(&mut rng, cfg.square_km);
        while destination == origin {
            destination = random_point(&mut rng, cfg.square_km);
        }
        let trip_km = ((destination.0 - origin.0).powi(2) + (destination.1 - origin.1).powi(2))
            .sqrt();
        // flag fall plus a per-km rate, rounded to cents
        let revenue = ((2.5 + 1.2 * trip_km) * 100.0).round() / 100.0;
        requests.push(TravelRequest {
            id: i as u32,
            origin: Point::new(cast(origin.0), cast(origin.1)),
            destination: Point::new(cast(destination.0), cast(destination.1)),
            t_request: t,
            revenue: cast(revenue),
        });
    }

    let stations = (0..cfg.n_stations)
        .map(|i| {
            let loc = random_point(&mut rng, cfg.square_km);
            ChargingStation {
                id: i as u32,
                location: Point::new(cast(loc.0), cast(loc.1)),
                power_kw: cast(cfg.station_power_kw),
            }
        })
        .collect();

    let prices = match cfg.prices {
        PricePattern::Flat => PriceSeries::flat(cast(100.0 / 1000.0), h),
        PricePattern::DayNight => {
            let night: T = cast(40.0 / 1000.0);
            let day: T = cast(140.0 / 1000.0);
            let evening = (h - 120).max(1);
            let morning = (h * 7 / 24).min(evening - 1).max(1);
            PriceSeries::new(vec![0, morning, evening], vec![night, day, night], h)
                .expect("generated price series")
        }
    };

    let half = cfg.square_km / 2.0;
    Scenario {
        requests,
        stations,
        fleet: FleetSpec {
            n_vehicles: cfg.n_vehicles,
            battery_kwh: cast(cfg.battery_kwh),
            initial_kwh: cast(cfg.initial_kwh),
            consumption_kwh_per_km: cast(cfg.consumption_kwh_per_km),
            depot: Point::new(cast(half), cast(half)),
            speed_kmh: cast(cfg.speed_kmh),
        },
        prices,
        horizon_min: h,
        detour_factor: cast(cfg.detour_factor),
    }
}

fn random_point(rng: &mut ChaCha8Rng, square_km: f64) -> (f64, f64) {
    let x: f64 = rng.gen_range(0.0..square_km);
    let y: f64 = rng.gen_range(0.0..square_km);
    // two decimals keep coordinates readable in CSV dumps
    ((x * 100.0).round() / 100.0, (y * 100.0).round() / 100.0)
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::DegradationParams;
    use crate::scenario::{load_dir, save_dir};

    #[test]
    fn zero_requests_is_a_valid_scenario() {
        let sc: Scenario<f64> = generate_synthetic(1, 0, 2, 1, DemandProfile::Uniform);
        sc.validate().unwrap();
        assert!(sc.requests.is_empty());
    }

    #[test]
    fn same_seed_same_scenario() {
        let a: Scenario<f64> = generate_synthetic(42, 25, 3, 2, DemandProfile::BimodalPeaks);
        let b: Scenario<f64> = generate_synthetic(42, 25, 3, 2, DemandProfile::BimodalPeaks);
        assert_eq!(a, b);
        let c: Scenario<f64> = generate_synthetic(43, 25, 3, 2, DemandProfile::BimodalPeaks);
        assert_ne!(a, c);
    }

    #[test]
    fn save_load_roundtrip_is_identity() {
        let sc: Scenario<f64> = generate_synthetic(9, 30, 4, 2, DemandProfile::BimodalPeaks);
        let deg = DegradationParams::default();
        let dir = tempfile::tempdir().unwrap();
        save_dir(&sc, &deg, dir.path()).unwrap();
        let (loaded, deg2) = load_dir::<f64>(dir.path()).unwrap();
        assert_eq!(loaded, sc);
        assert_eq!(deg2, deg);

        // saving the loaded scenario reproduces the files byte for byte
        let dir2 = tempfile::tempdir().unwrap();
        save_dir(&loaded, &deg2, dir2.path()).unwrap();
        for f in ["requests.csv", "stations.csv", "prices.csv", "fleet.cfg"] {
            let a = std::fs::read(dir.path().join(f)).unwrap();
            let b = std::fs::read(dir2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs");
        }
    }

    /// Chi-square statistic of request times against a uniform layout over
    /// 8 three-hour bins.
    fn chi_square(sc: &Scenario<f64>) -> f64 {
        let bins = 8usize;
        let mut counts = vec![0usize; bins];
        for r in &sc.requests {
            let b = (r.t_request * bins as i64 / sc.horizon_min) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let expected = sc.requests.len() as f64 / bins as f64;
        counts
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum()
    }

    #[test]
    fn bimodal_profile_rejects_uniformity() {
        // chi-square critical value at 5% with 7 degrees of freedom
        let crit = 14.067;
        let bimodal: Scenario<f64> = generate_synthetic(7, 40, 1, 0, DemandProfile::BimodalPeaks);
        assert!(
            chi_square(&bimodal) > crit,
            "bimodal chi2 = {}",
            chi_square(&bimodal)
        );
        let uniform: Scenario<f64> = generate_synthetic(7, 40, 1, 0, DemandProfile::Uniform);
        assert!(
            chi_square(&uniform) < crit,
            "uniform chi2 = {}",
            chi_square(&uniform)
        );
    }
}
