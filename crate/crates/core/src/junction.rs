//! SQUID Josephson energy versus flux and the Ambegaokar–Baratoff
//! resistance/gap relation.
//!
//! Energies are carried as frequencies in GHz (E/h). Gaps are carried as
//! voltages (Δ/e) in volts.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Planck constant, J·s (exact SI-2019 value).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

/// Reference aluminium gap, volts.
pub const AL_GAP_V: f64 = 162e-6;
/// Reference 4Hb-TaS2 gap, volts.
pub const TAS2_GAP_V: f64 = 390e-6;

/// Two-junction loop: total Josephson energy and junction asymmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    /// E_J1 + E_J2 in GHz.
    pub ej_sum: f64,
    /// (E_J2 - E_J1) / (E_J1 + E_J2).
    pub d: f64,
}

impl SquidParams {
    pub fn new(ej_sum: f64, d: f64) -> Result<Self, ParamError> {
        let s = Self { ej_sum, d };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.ej_sum.is_finite() && self.ej_sum > 0.0) {
            return Err(ParamError::new("ej_sum", "must be finite and > 0"));
        }
        if !(self.d >= 0.0 && self.d < 1.0) {
            return Err(ParamError::new("d", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Affine map from coil current to reduced flux Φ/Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCalibration {
    /// Coil current at which the loop flux is zero, amperes.
    pub current_at_zero_flux: f64,
    /// Current change producing one flux quantum, amperes.
    pub current_per_flux_quantum: f64,
}

impl FluxCalibration {
    pub fn new(current_at_zero_flux: f64, current_per_flux_quantum: f64) -> Result<Self, ParamError> {
        let c = Self { current_at_zero_flux, current_per_flux_quantum };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !self.current_at_zero_flux.is_finite() {
            return Err(ParamError::new("current_at_zero_flux", "must be finite"));
        }
        if !self.current_per_flux_quantum.is_finite() || self.current_per_flux_quantum == 0.0 {
            return Err(ParamError::new("current_per_flux_quantum", "must be finite and nonzero"));
        }
        Ok(())
    }
}

/// Room-temperature junction data for the Ambegaokar–Baratoff check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionDc {
    /// Normal-state resistance, ohms.
    pub r_n: f64,
    /// Superconducting gap as a voltage Δ/e, volts.
    pub delta_v: f64,
}

impl JunctionDc {
    pub fn new(r_n: f64, delta_v: f64) -> Result<Self, ParamError> {
        if !(r_n.is_finite() && r_n > 0.0) {
            return Err(ParamError::new("r_n", "must be finite and > 0"));
        }
        if !(delta_v.is_finite() && delta_v > 0.0) {
            return Err(ParamError::new("delta_v", "must be finite and > 0"));
        }
        Ok(Self { r_n, delta_v })
    }
}

/// Effective Josephson energy (GHz) of the loop at reduced flux `phi_ratio`.
///
/// Evaluated as `ej_sum * sqrt(cos²(πx) + d² sin²(πx))`, which equals the
/// magnitude of `ej_sum cos(πx) sqrt(1 + d² tan²(πx))` and stays finite at
/// half flux, where it tends to `ej_sum * d`.
pub fn ej_of_flux(squid: &SquidParams, phi_ratio: f64) -> f64 {
    // Reduce to [-1/2, 1/2] first so periodicity holds to rounding.
    let x = phi_ratio - phi_ratio.round();
    let (s, c) = (std::f64::consts::PI * x).sin_cos();
    squid.ej_sum.abs() * (c * c + squid.d * squid.d * s * s).sqrt()
}

pub fn flux_from_current(cal: &FluxCalibration, current: f64) -> f64 {
    (current - cal.current_at_zero_flux) / cal.current_per_flux_quantum
}

/// Inverse of [`flux_from_current`].
pub fn current_from_flux(cal: &FluxCalibration, phi_ratio: f64) -> f64 {
    cal.current_at_zero_flux + phi_ratio * cal.current_per_flux_quantum
}

/// E_J = Φ₀Δ/(4R_n), returned in GHz.
pub fn ab_josephson_energy(dc: &JunctionDc) -> f64 {
    FLUX_QUANTUM * dc.delta_v / (4.0 * dc.r_n * PLANCK_H) * 1e-9
}

/// Gap voltage implied by a measured E_J (GHz) and resistance (ohms).
pub fn ab_inferred_gap(r_n: f64, ej_ghz: f64) -> f64 {
    4.0 * r_n * ej_ghz * 1e9 * PLANCK_H / FLUX_QUANTUM
}
