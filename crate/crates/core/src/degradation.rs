//! Cyclic battery aging: the square-root capacity-drop model, end-of-life
//! throughput, and the linearized per-kWh degradation cost that prices
//! charging and V2G activity in the fleet objective.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Battery aging parameters.
///
/// Two modes: with `q_eol_override` set (default), the end-of-life throughput
/// is taken as given ("calibrated"); with `None` it is evaluated from the
/// stress factor `kappa` and the charging voltage ("physical"). The physical
/// formula's unit convention (kWh vs Ah, fraction vs percent) is left to the
/// configuration rather than hard-coded.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationParams<T> {
    pub b1: T,
    pub b2: T,
    pub b3: T,
    pub b4: T,
    pub b5: T,
    pub b6: T,
    /// Average state of charge over a cycle, in [0, 1].
    pub avg_soc: T,
    /// Depth of discharge per cycle, in [0, 1].
    pub depth_of_discharge: T,
    /// C-rate of a full charge, 1/h.
    pub c_rate_ch: T,
    /// C-rate of a full discharge, 1/h.
    pub c_rate_dch: T,
    /// Charging voltage, V.
    pub v_ch: T,
    /// Normalized capacity drop that defines end of life, in (0, 1].
    pub eol_drop: T,
    /// Battery price including end-of-life value, EUR.
    pub battery_price: T,
    /// End-of-life throughput in kWh, when calibrated externally.
    pub q_eol_override: Option<T>,
}

impl<T: Scalar> Default for DegradationParams<T> {
    fn default() -> Self {
        DegradationParams {
            b1: cast(-2.87e-4),
            b2: cast(3.352e-2),
            b3: cast(3.8e-3),
            b4: cast(3.578e-5),
            b5: cast(2.274e-4),
            b6: cast(1.02e-2),
            avg_soc: cast(0.5),
            depth_of_discharge: cast(0.8),
            // 22 kW charger on a 40 kWh pack
            c_rate_ch: cast(0.55),
            c_rate_dch: cast(0.55),
            v_ch: cast(360.0),
            eol_drop: cast(0.2),
            battery_price: cast(4000.0),
            q_eol_override: Some(cast(59250.0)),
        }
    }
}

impl<T: Scalar> DegradationParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.eol_drop <= T::zero() || self.eol_drop > T::one() {
            return Err(Error::Invalid("de_eol must be in (0, 1]".into()));
        }
        if self.battery_price < T::zero() {
            return Err(Error::Invalid("battery price must be >= 0".into()));
        }
        if self.v_ch <= T::zero() {
            return Err(Error::Invalid("charging voltage must be positive".into()));
        }
        if let Some(q) = self.q_eol_override {
            if q <= T::zero() {
                return Err(Error::Invalid("q_eol override must be positive".into()));
            }
        }
        Ok(())
    }

    /// Aging stress factor:
    /// kappa = b1 (phi_z - b2)^2 + b3 dz + b4 C_ch + b5 C_dch + b6.
    pub fn kappa(&self) -> T {
        let d = self.avg_soc - self.b2;
        self.b1 * d * d
            + self.b3 * self.depth_of_discharge
            + self.b4 * self.c_rate_ch
            + self.b5 * self.c_rate_dch
            + self.b6
    }

    /// Throughput a battery sustains before reaching the end-of-life drop,
    /// kWh. Uses the override when set, else (eol_drop / kappa)^2 * v_ch.
    pub fn q_eol(&self) -> Result<T> {
        if let Some(q) = self.q_eol_override {
            return Ok(q);
        }
        let k = self.kappa();
        if k <= T::zero() {
            return Err(Error::Invalid(
                "degradation-free battery; set q_eol_override".into(),
            ));
        }
        let ratio = self.eol_drop / k;
        Ok(ratio * ratio * self.v_ch)
    }

    /// Linearized degradation price per kWh of throughput: p_batt / Q_eol.
    pub fn marginal_cost(&self) -> Result<T> {
        Ok(self.battery_price / self.q_eol()?)
    }

    /// Linearized degradation cost of a total throughput `q` kWh,
    /// p_batt * (q / Q_eol). Exactly p_batt at q = Q_eol.
    pub fn cost_for_throughput(&self, q: T) -> Result<T> {
        Ok(self.battery_price * (q / self.q_eol()?))
    }

    /// Normalized capacity drop after `q` kWh of throughput:
    /// eol_drop * sqrt(q / Q_eol), the square-root aging curve rescaled to
    /// anchor at end of life (in physical mode this equals
    /// kappa / sqrt(v_ch) * sqrt(q)).
    pub fn capacity_drop(&self, q: T) -> Result<T> {
        if q < T::zero() {
            return Err(Error::Invalid("throughput must be >= 0".into()));
        }
        Ok(self.eol_drop * (q / self.q_eol()?).sqrt())
    }

    /// Days until end of life at a constant daily throughput per vehicle.
    pub fn lifetime_days(&self, daily_throughput: T) -> Result<T> {
        if daily_throughput <= T::zero() {
            return Err(Error::Invalid("daily throughput must be positive".into()));
        }
        Ok(self.q_eol()? / daily_throughput)
    }

    /// Points of the aging curve and its linear chord, for reporting:
    /// (q_kwh, nonlinear drop, linear drop).
    pub fn curve(&self, q_max: T, steps: usize) -> Result<Vec<(T, T, T)>> {
        let q_eol = self.q_eol()?;
        let n = steps.max(1);
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let q = q_max * cast::<T>(i as f64) / cast::<T>(n as f64);
            let nonlinear = self.capacity_drop(q)?;
            let linear = self.eol_drop * (q / q_eol);
            out.push((q, nonlinear, linear));
        }
        Ok(out)
    }
}
