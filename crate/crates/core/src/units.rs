//! Physical constants and the handful of unit conversions the model needs.
//!
//! Internally everything is SI with angular frequencies in rad/s. Inputs
//! quoted as "2π × f" are converted once, at the boundary, with
//! [`frequency_to_angular`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Speed of light in vacuum, m/s.
    pub c: f64,
    /// One electron-volt in joules.
    pub ev_in_j: f64,
    /// One curie in becquerel.
    pub curie_in_bq: f64,
}

/// CODATA 2018 exact / recommended values.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    c: 299_792_458.0,
    ev_in_j: 1.602_176_634e-19,
    curie_in_bq: 3.7e10,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

impl PhysicalConstants {
    pub fn is_valid(&self) -> bool {
        [self.hbar, self.c, self.ev_in_j, self.curie_in_bq]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }

    /// ω = E/ħ for an energy given in eV.
    pub fn energy_to_angular_frequency(&self, energy_ev: f64) -> Result<f64> {
        check_energy(energy_ev)?;
        Ok(energy_ev * self.ev_in_j / self.hbar)
    }

    /// k = E/(ħc) for an energy given in eV.
    pub fn energy_to_wavevector(&self, energy_ev: f64) -> Result<f64> {
        check_energy(energy_ev)?;
        Ok(energy_ev * self.ev_in_j / (self.hbar * self.c))
    }

    /// Inverse of [`Self::energy_to_angular_frequency`], returning eV.
    pub fn angular_frequency_to_energy(&self, omega: f64) -> Result<f64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::domain("angular frequency must be positive", omega));
        }
        Ok(omega * self.hbar / self.ev_in_j)
    }
}

fn check_energy(energy_ev: f64) -> Result<()> {
    if energy_ev.is_finite() && energy_ev > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("transition energy must be positive", energy_ev))
    }
}

pub fn energy_to_angular_frequency(energy_ev: f64) -> Result<f64> {
    CODATA_2018.energy_to_angular_frequency(energy_ev)
}

pub fn energy_to_wavevector(energy_ev: f64) -> Result<f64> {
    CODATA_2018.energy_to_wavevector(energy_ev)
}

/// 2π f.
pub fn frequency_to_angular(f_hz: f64) -> f64 {
    TAU * f_hz
}

/// f = ω / 2π.
pub fn angular_to_frequency(omega: f64) -> f64 {
    omega / TAU
}
