//! Scenario data model: travel requests, fleet, charging stations and
//! electricity prices, plus file ingestion and synthetic generation.
//!
//! A scenario is immutable after construction and safe to share read-only
//! across workers.

mod generate;
mod io;

pub use generate::{generate_synthetic, DemandProfile, GeneratorConfig, PricePattern};
pub use io::{load_dir, load_scenario, save_dir};

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

/// Planar position in kilometers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    /// Straight-line distance in km.
    pub fn euclid(&self, other: &Point<T>) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// A point-to-point mobility request: pickup at `origin` at minute
/// `t_request`, drop-off at `destination`, paying `revenue` if served.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelRequest<T> {
    pub id: u32,
    pub origin: Point<T>,
    pub destination: Point<T>,
    /// Pickup time, minutes from horizon start.
    pub t_request: i64,
    /// Revenue earned by serving the request, EUR.
    pub revenue: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingStation<T> {
    pub id: u32,
    pub location: Point<T>,
    /// Charging (and discharging) power, kW.
    pub power_kw: T,
}

/// Homogeneous vehicle fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetSpec<T> {
    pub n_vehicles: usize,
    /// Usable battery capacity E_b_max, kWh.
    pub battery_kwh: T,
    /// Initial (and required final) state of energy E_b0, kWh.
    pub initial_kwh: T,
    /// Consumption per driven km, kWh/km.
    pub consumption_kwh_per_km: T,
    pub depot: Point<T>,
    pub speed_kmh: T,
}

/// Piecewise-constant electricity price over the horizon, EUR/kWh.
///
/// Intervals are right-open: `[breakpoints[i], breakpoints[i+1])`, the last
/// one extending to the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries<T> {
    breakpoints: Vec<i64>,
    prices: Vec<T>,
    horizon_min: i64,
}

impl<T: Scalar> PriceSeries<T> {
    pub fn new(breakpoints: Vec<i64>, prices: Vec<T>, horizon_min: i64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != prices.len() {
            return Err(Error::Invalid(
                "price series needs matching, non-empty breakpoints and prices".into(),
            ));
        }
        if breakpoints[0] != 0 {
            return Err(Error::Invalid(format!(
                "price series must start at minute 0 to cover the horizon, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "price breakpoints must be strictly increasing".into(),
            ));
        }
        if *breakpoints.last().unwrap() >= horizon_min {
            return Err(Error::Invalid(format!(
                "price breakpoint {} outside horizon of {} min",
                breakpoints.last().unwrap(),
                horizon_min
            )));
        }
        Ok(PriceSeries {
            breakpoints,
            prices,
            horizon_min,
        })
    }

    pub fn flat(price: T, horizon_min: i64) -> Self {
        PriceSeries {
            breakpoints: vec![0],
            prices: vec![price],
            horizon_min,
        }
    }

    pub fn breakpoints(&self) -> &[i64] {
        &self.breakpoints
    }

    pub fn prices(&self) -> &[T] {
        &self.prices
    }

    pub fn horizon_min(&self) -> i64 {
        self.horizon_min
    }

    /// Price of the interval containing minute `t` (right-open convention).
    pub fn price_at(&self, t: i64) -> Result<T> {
        if t < 0 || t >= self.horizon_min {
            return Err(Error::Invalid(format!(
                "t = {} min outside horizon [0, {})",
                t, self.horizon_min
            )));
        }
        let idx = self.breakpoints.partition_point(|&b| b <= t) - 1;
        Ok(self.prices[idx])
    }

    /// Time-weighted average price over `[from_min, to_min)`, clamped to the
    /// horizon. Requires a non-empty window.
    pub fn average_over(&self, from_min: i64, to_min: i64) -> Result<T> {
        let a = from_min.max(0);
        let b = to_min.min(self.horizon_min);
        if a >= b {
            return Err(Error::Invalid(format!(
                "empty price window [{from_min}, {to_min})"
            )));
        }
        let mut sum = T::zero();
        for i in 0..self.breakpoints.len() {
            let start = self.breakpoints[i].max(a);
            let end = if i + 1 < self.breakpoints.len() {
                self.breakpoints[i + 1]
            } else {
                self.horizon_min
            }
            .min(b);
            if end > start {
                sum = sum + self.prices[i] * cast::<T>((end - start) as f64);
            }
        }
        Ok(sum / cast::<T>((b - a) as f64))
    }

    /// Integral of the price over the whole horizon, EUR·min/kWh. Invariant
    /// under breakpoint refinement.
    pub fn integral(&self) -> T {
        let mut sum = T::zero();
        for i in 0..self.breakpoints.len() {
            let end = if i + 1 < self.breakpoints.len() {
                self.breakpoints[i + 1]
            } else {
                self.horizon_min
            };
            sum = sum + self.prices[i] * cast::<T>((end - self.breakpoints[i]) as f64);
        }
        sum
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub requests: Vec<TravelRequest<T>>,
    pub stations: Vec<ChargingStation<T>>,
    pub fleet: FleetSpec<T>,
    pub prices: PriceSeries<T>,
    pub horizon_min: i64,
    /// Road distance = straight line × this factor.
    pub detour_factor: T,
}

impl<T: Scalar> Scenario<T> {
    /// Road distance between two points, km.
    pub fn distance_km(&self, a: &Point<T>, b: &Point<T>) -> T {
        a.euclid(b) * self.detour_factor
    }

    /// Travel time for a road distance, ceiled to whole minutes. The 1e-9
    /// guard keeps exact integer results from rounding up on FP noise.
    pub fn minutes_for_km(&self, d: T) -> i64 {
        let m = to_f64(d) / to_f64(self.fleet.speed_kmh) * 60.0;
        ((m - 1e-9).ceil() as i64).max(0)
    }

    pub fn travel_minutes(&self, a: &Point<T>, b: &Point<T>) -> i64 {
        self.minutes_for_km(self.distance_km(a, b))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_min <= 0 {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        if self.fleet.n_vehicles == 0 {
            return Err(Error::Invalid("fleet needs at least 1 vehicle".into()));
        }
        let f = &self.fleet;
        if f.initial_kwh < T::zero() || f.initial_kwh > f.battery_kwh {
            return Err(Error::Invalid(format!(
                "initial energy {} outside [0, {}] kWh",
                f.initial_kwh, f.battery_kwh
            )));
        }
        if f.consumption_kwh_per_km <= T::zero() {
            return Err(Error::Invalid("consumption must be positive".into()));
        }
        if f.speed_kmh <= T::zero() {
            return Err(Error::Invalid("speed must be positive".into()));
        }
        if self.detour_factor < T::one() {
            return Err(Error::Invalid("detour factor must be >= 1".into()));
        }
        for r in &self.requests {
            if r.t_request < 0 || r.t_request >= self.horizon_min {
                return Err(Error::Invalid(format!(
                    "request {}: time {} outside [0, {})",
                    r.id, r.t_request, self.horizon_min
                )));
            }
            if r.origin == r.destination {
                return Err(Error::Invalid(format!(
                    "request {}: origin equals destination",
                    r.id
                )));
            }
            if r.revenue < T::zero() {
                return Err(Error::Invalid(format!("request {}: negative revenue", r.id)));
            }
        }
        for s in &self.stations {
            if s.power_kw <= T::zero() {
                return Err(Error::Invalid(format!(
                    "station {}: power must be positive",
                    s.id
                )));
            }
        }
        if self.prices.horizon_min() != self.horizon_min {
            return Err(Error::Invalid(
                "price series horizon differs from scenario horizon".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(bp: Vec<i64>, p: Vec<f64>, h: i64) -> PriceSeries<f64> {
        PriceSeries::new(bp, p, h).unwrap()
    }

    #[test]
    fn price_at_uses_right_open_intervals() {
        let s = series(vec![0, 720], vec![0.05, 0.15], 1440);
        assert_eq!(s.price_at(719).unwrap(), 0.05);
        assert_eq!(s.price_at(720).unwrap(), 0.15);
        assert_eq!(s.price_at(0).unwrap(), 0.05);
    }

    #[test]
    fn price_at_flat_series() {
        let s = PriceSeries::flat(0.10, 1440);
        for t in [0, 1, 700, 1439] {
            assert_eq!(s.price_at(t).unwrap(), 0.10);
        }
    }

    #[test]
    fn price_at_rejects_out_of_horizon() {
        let s = PriceSeries::flat(0.10, 1440);
        assert!(s.price_at(1440).is_err());
        assert!(s.price_at(-1).is_err());
    }

    #[test]
    fn price_series_requires_full_coverage() {
        assert!(PriceSeries::new(vec![60], vec![0.1], 1440).is_err());
        assert!(PriceSeries::new(vec![0, 1500], vec![0.1, 0.2], 1440).is_err());
        assert!(PriceSeries::new(vec![0, 100, 100], vec![0.1, 0.2, 0.3], 1440).is_err());
    }

    #[test]
    fn average_over_weights_by_time() {
        let s = series(vec![0, 60], vec![0.10, 0.20], 120);
        // 30 min at 0.10 + 30 min at 0.20
        let avg = s.average_over(30, 90).unwrap();
        assert!((avg - 0.15).abs() < 1e-12);
        // window inside a single interval
        assert_eq!(s.average_over(0, 60).unwrap(), 0.10);
    }

    #[test]
    fn integral_invariant_under_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let mut bps = vec![0i64];
            for _ in 1..n {
                bps.push(rng.gen_range(1..1440));
            }
            bps.sort_unstable();
            bps.dedup();
            let prices: Vec<f64> = (0..bps.len()).map(|_| rng.gen_range(0.01..0.3)).collect();
            let coarse = series(bps.clone(), prices.clone(), 1440);

            // refine: split every interval at an interior point
            let mut fine_bp = Vec::new();
            let mut fine_p = Vec::new();
            for i in 0..bps.len() {
                let end = if i + 1 < bps.len() { bps[i + 1] } else { 1440 };
                fine_bp.push(bps[i]);
                fine_p.push(prices[i]);
                if end - bps[i] > 1 {
                    fine_bp.push(bps[i] + (end - bps[i]) / 2);
                    fine_p.push(prices[i]);
                }
            }
            let fine = series(fine_bp, fine_p, 1440);
            let a = coarse.integral();
            let b = fine.integral();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");

            let w0 = rng.gen_range(0..1439);
            let w1 = rng.gen_range(w0 + 1..1440);
            let ca = coarse.average_over(w0, w1).unwrap();
            let fa = fine.average_over(w0, w1).unwrap();
            assert!((ca - fa).abs() <= 1e-12, "{ca} vs {fa}");
        }
    }

    #[test]
    fn travel_minutes_is_exact_on_integer_results() {
        let sc = crate::scenario::test_support::unit_scenario::<f64>();
        // 5 km at 30 km/h with detour factor 1.0 -> exactly 10 minutes
        assert_eq!(
            sc.travel_minutes(&Point::new(0.0, 0.0), &Point::new(5.0, 0.0)),
            10
        );
        // slightly longer must round up
        assert_eq!(
            sc.travel_minutes(&Point::new(0.0, 0.0), &Point::new(5.01, 0.0)),
            11
        );
    }

    #[test]
    fn validate_rejects_boundary_request_time() {
        let mut sc = crate::scenario::test_support::unit_scenario::<f64>();
        sc.requests.push(TravelRequest {
            id: 0,
            origin: Point::new(0.0, 0.0),
            destination: Point::new(1.0, 0.0),
            t_request: sc.horizon_min,
            revenue: 1.0,
        });
        assert!(sc.validate().is_err());
        sc.requests[0].t_request = sc.horizon_min - 1;
        assert!(sc.validate().is_ok());
    }
}

pub mod test_support {
    //! Hand-buildable scenarios for tests.

    use super::*;

    /// Flat-price scenario on a plane with speed 30 km/h, detour factor 1,
    /// one vehicle, no requests, no stations.
    pub fn unit_scenario<T: Scalar>() -> Scenario<T> {
        Scenario {
            requests: vec![],
            stations: vec![],
            fleet: FleetSpec {
                n_vehicles: 1,
                battery_kwh: cast(40.0),
                initial_kwh: cast(20.0),
                consumption_kwh_per_km: cast(0.15),
                depot: Point::new(T::zero(), T::zero()),
                speed_kmh: cast(30.0),
            },
            prices: PriceSeries::flat(cast(0.10), 1440),
            horizon_min: 1440,
            detour_factor: T::one(),
        }
    }
}
