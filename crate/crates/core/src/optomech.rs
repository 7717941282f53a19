//! The linearization chain of the red-detuned optomechanical cavity.
//!
//! Laser power fixes the mean intracavity photon number n̄_cav, which scales
//! the vacuum coupling G₀ into the beam-splitter coupling G = G₀√n̄_cav. G in
//! turn shifts the mechanical frequency and damping (optical spring and
//! damping), and the shifted frequency feeds back into the zero-point
//! fluctuation Y_ZPF. [`derive`] resolves that loop by fixed-point iteration.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::franck_condon::{validity, Validity};
use crate::nuclide::{lamb_dicke, NuclideTransition};
use crate::units::{PhysicalConstants, CODATA_2018};

/// Vacuum coupling quoted for the reference cavity, 2π × 3.9 Hz.
pub const QUOTED_G0: f64 = TAU * 3.9;

const MAX_ITERATIONS: usize = 100;
const FIXED_POINT_TOL: f64 = 1e-12;

/// Where the beam-splitter coupling G comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingModel {
    /// Fixed vacuum coupling G₀ (rad/s); G = G₀√n̄_cav.
    Vacuum { g0: f64 },
    /// G₀ = ω_c·Y_ZPF/L from the cavity geometry; G = G₀√n̄_cav.
    Geometric,
    /// G given directly (rad/s); laser power only enters n̄_cav and the
    /// cavity shifts.
    Direct { g: f64 },
}

impl Default for CouplingModel {
    fn default() -> Self {
        CouplingModel::Vacuum { g0: QUOTED_G0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptomechConfig {
    /// Microlever mass, kg.
    pub mass_kg: f64,
    /// Cavity length, m.
    pub cavity_length_m: f64,
    /// Inherent phonon angular frequency ω₀.
    pub omega0: f64,
    /// Inherent mechanical damping γ₀.
    pub gamma0: f64,
    /// Cavity decay κ.
    pub kappa: f64,
    /// Cavity angular frequency ω_c.
    pub omega_c: f64,
    /// Laser power, W.
    pub power_w: f64,
    /// Δ_c = ω_l − ω_c. `None` tunes the laser so that Δ_c + δω_c = −ω_m.
    pub laser_detuning: Option<f64>,
    /// x-ray Rabi frequency Ω.
    pub rabi: f64,
    /// Phonon occupation of the initial ground state.
    pub n: u64,
    /// Cavity photon-fluctuation occupation of the initial ground state.
    pub v: u64,
    pub coupling: CouplingModel,
}

impl Default for OptomechConfig {
    /// The reference microlever cavity with the laser off.
    fn default() -> Self {
        Self {
            mass_kg: 0.14e-9,
            cavity_length_m: 25e-3,
            omega0: TAU * 0.95e6,
            gamma0: TAU * 0.14e3,
            kappa: TAU * 0.2e6,
            omega_c: 1e15,
            power_w: 0.0,
            laser_detuning: None,
            rabi: 1e-3 * TAU * 100.0,
            n: 5_000_000,
            v: 0,
            coupling: CouplingModel::default(),
        }
    }
}

impl OptomechConfig {
    pub fn with_power(mut self, power_w: f64) -> Self {
        self.power_w = power_w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("cavity_length_m", self.cavity_length_m),
            ("omega0", self.omega0),
            ("kappa", self.kappa),
            ("omega_c", self.omega_c),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation { field: field.into(), message: format!("must be positive, got {value}") });
            }
        }
        let non_negative = [("gamma0", self.gamma0), ("power_w", self.power_w), ("rabi", self.rabi)];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Validation { field: field.into(), message: format!("must be non-negative, got {value}") });
            }
        }
        if let Some(d) = self.laser_detuning {
            if !d.is_finite() {
                return Err(Error::Validation { field: "laser_detuning".into(), message: "must be finite".into() });
            }
        }
        match self.coupling {
            CouplingModel::Vacuum { g0 } if !(g0.is_finite() && g0 >= 0.0) => {
                Err(Error::Validation { field: "coupling.g0".into(), message: format!("must be non-negative, got {g0}") })
            }
            CouplingModel::Direct { g } if !(g.is_finite() && g >= 0.0) => {
                Err(Error::Validation { field: "coupling.g".into(), message: format!("must be non-negative, got {g}") })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// Effective cavity detuning Δ_c + δω_c sits at −ω_m within 1 %.
    pub red_detuned: bool,
    /// Γ/2 + κ + γ_m > G and G ≫ Ω (factor 10), or G = 0.
    pub perturbative: bool,
    /// ω_m > s, so phonon sidebands are separated from the main line.
    pub sidebands_resolved: bool,
    pub validity: Validity,
}

impl RegimeFlags {
    pub fn warnings(&self) -> Vec<&'static str> {
        let mut w = Vec::new();
        if !self.red_detuned {
            w.push("cavity is not red-detuned by omega_m; the beam-splitter linearization does not hold");
        }
        if !self.perturbative {
            w.push("outside the perturbative regime s > G >> Omega");
        }
        if !self.sidebands_resolved {
            w.push("omega_m <= s: phonon sidebands are not resolved");
        }
        match self.validity {
            Validity::Invalid => w.push("eta*sqrt(n) >= 1: Franck-Condon truncation invalid"),
            Validity::Marginal => w.push("eta*sqrt(n) < 0.1: only the zero-phonon line is visible"),
            Validity::Valid => {}
        }
        w
    }
}

/// Everything the linearization produces, all in SI / rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedOptomech {
    pub n_cav: f64,
    pub g0: f64,
    pub g: f64,
    pub delta_omega0: f64,
    pub delta_gamma0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    pub y_zpf: f64,
    pub eta: f64,
    pub delta_l: f64,
    pub delta_omega_c: f64,
    /// Δ_c used for the laser.
    pub laser_detuning: f64,
    /// Δ_c + δω_c.
    pub effective_detuning: f64,
    /// Nuclear linewidth Γ of the bound nuclide.
    pub gamma: f64,
    pub kappa: f64,
    /// Total decoherence s = Γ/2 + κ + γ_m.
    pub s: f64,
    pub rabi: f64,
    pub iterations: usize,
    pub flags: RegimeFlags,
}

impl DerivedOptomech {
    pub fn total_decoherence(&self) -> f64 {
        self.gamma / 2.0 + self.kappa + self.gamma_m
    }
}

/// n̄_cav = κP / (ħω_l[(ω_l − ω_c)² + (κ/2)²]).
pub fn cavity_photon_number(power_w: f64, omega_l: f64, omega_c: f64, kappa: f64) -> f64 {
    cavity_photon_number_with(&CODATA_2018, power_w, omega_l, omega_c, kappa)
}

pub fn cavity_photon_number_with(
    constants: &PhysicalConstants,
    power_w: f64,
    omega_l: f64,
    omega_c: f64,
    kappa: f64,
) -> f64 {
    let detuning = omega_l - omega_c;
    kappa * power_w / (constants.hbar * omega_l * (detuning * detuning + 0.25 * kappa * kappa))
}

/// G₀ = ω_c Y_ZPF / L.
pub fn vacuum_coupling(omega_c: f64, cavity_length_m: f64, y_zpf: f64) -> f64 {
    omega_c * y_zpf / cavity_length_m
}

/// Optical spring shift δω₀ = 4G²ω₀/(κ² + 16ω₀²).
pub fn spring_shift(g: f64, kappa: f64, omega0: f64) -> f64 {
    4.0 * g * g * omega0 / (kappa * kappa + 16.0 * omega0 * omega0)
}

/// Optical damping shift δγ₀ = 4G²(1/κ − κ/(κ² + 16ω₀²)).
pub fn damping_shift(g: f64, kappa: f64, omega0: f64) -> Result<f64> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::domain("cavity decay must be positive", kappa));
    }
    // 1/κ − κ/(κ²+16ω₀²) = 16ω₀² / (κ(κ²+16ω₀²)), free of cancellation
    let w2 = 16.0 * omega0 * omega0;
    Ok(4.0 * g * g * w2 / (kappa * (kappa * kappa + w2)))
}

/// Y_ZPF = sqrt(ħ / (2 M ω_m)).
pub fn zero_point_fluctuation(mass_kg: f64, omega_m: f64) -> f64 {
    zero_point_fluctuation_with(&CODATA_2018, mass_kg, omega_m)
}

pub fn zero_point_fluctuation_with(constants: &PhysicalConstants, mass_kg: f64, omega_m: f64) -> f64 {
    (constants.hbar / (2.0 * mass_kg * omega_m)).sqrt()
}

/// Mean cavity length and frequency shifts (δL, δω_c) from radiation
/// pressure.
pub fn cavity_shifts(omega_c: f64, cavity_length_m: f64, mass_kg: f64, omega0: f64, n_cav: f64) -> (f64, f64) {
    cavity_shifts_with(&CODATA_2018, omega_c, cavity_length_m, mass_kg, omega0, n_cav)
}

pub fn cavity_shifts_with(
    constants: &PhysicalConstants,
    omega_c: f64,
    cavity_length_m: f64,
    mass_kg: f64,
    omega0: f64,
    n_cav: f64,
) -> (f64, f64) {
    let hbar = constants.hbar;
    let delta_l = hbar * omega_c * n_cav / (cavity_length_m * mass_kg * omega0 * omega0);
    let delta_omega_c =
        hbar * omega_c * omega_c * n_cav / (cavity_length_m * cavity_length_m * mass_kg * omega0 * omega0);
    (delta_l, delta_omega_c)
}

pub fn derive(config: &OptomechConfig, nuclide: &NuclideTransition) -> Result<DerivedOptomech> {
    derive_with(&CODATA_2018, config, nuclide)
}

pub fn derive_with(
    constants: &PhysicalConstants,
    config: &OptomechConfig,
    nuclide: &NuclideTransition,
) -> Result<DerivedOptomech> {
    config.validate()?;
    let c = config;

    // Without an explicit detuning the laser tracks −ω_m − δω_c, so the
    // effective detuning sits exactly on the red sideband.
    let mut omega_m = c.omega0;
    let mut shift = 0.0;
    let mut state = None;
    for iteration in 1..=MAX_ITERATIONS {
        let y_zpf = zero_point_fluctuation_with(constants, c.mass_kg, omega_m);
        let laser_detuning = c.laser_detuning.unwrap_or(-omega_m - shift);
        let omega_l = c.omega_c + laser_detuning;
        let n_cav = cavity_photon_number_with(constants, c.power_w, omega_l, c.omega_c, c.kappa);
        let (g0, g) = match c.coupling {
            CouplingModel::Vacuum { g0 } => (g0, g0 * n_cav.sqrt()),
            CouplingModel::Geometric => {
                let g0 = vacuum_coupling(c.omega_c, c.cavity_length_m, y_zpf);
                (g0, g0 * n_cav.sqrt())
            }
            CouplingModel::Direct { g } => (vacuum_coupling(c.omega_c, c.cavity_length_m, y_zpf), g),
        };
        let next = c.omega0 + spring_shift(g, c.kappa, c.omega0);
        let next_shift = cavity_shifts_with(constants, c.omega_c, c.cavity_length_m, c.mass_kg, c.omega0, n_cav).1;
        let converged = (next - omega_m).abs() <= FIXED_POINT_TOL * omega_m
            && (next_shift - shift).abs() <= FIXED_POINT_TOL * omega_m;
        omega_m = next;
        shift = next_shift;
        if converged {
            state = Some((iteration, n_cav, g0, g));
            break;
        }
    }
    let (iterations, n_cav, g0, g) = state.ok_or_else(|| {
        Error::Numerical(format!("optomechanical fixed point did not converge in {MAX_ITERATIONS} iterations"))
    })?;

    // Recompute everything from the converged ω_m so the invariants hold exactly.
    let delta_omega0 = spring_shift(g, c.kappa, c.omega0);
    let omega_m = c.omega0 + delta_omega0;
    let delta_gamma0 = damping_shift(g, c.kappa, c.omega0)?;
    let gamma_m = c.gamma0 + delta_gamma0;
    let y_zpf = zero_point_fluctuation_with(constants, c.mass_kg, omega_m);
    let eta = lamb_dicke(nuclide, y_zpf)?;
    let (delta_l, delta_omega_c) =
        cavity_shifts_with(constants, c.omega_c, c.cavity_length_m, c.mass_kg, c.omega0, n_cav);
    let laser_detuning = c.laser_detuning.unwrap_or(-omega_m - delta_omega_c);
    let effective_detuning = laser_detuning + delta_omega_c;
    let gamma = nuclide.gamma();
    let s = gamma / 2.0 + c.kappa + gamma_m;

    let flags = RegimeFlags {
        red_detuned: (effective_detuning + omega_m).abs() <= 0.01 * omega_m,
        perturbative: s > g && c.rabi < s && (g == 0.0 || g >= 10.0 * c.rabi),
        sidebands_resolved: omega_m > s,
        validity: validity(eta, c.n as f64),
    };

    Ok(DerivedOptomech {
        n_cav,
        g0,
        g,
        delta_omega0,
        delta_gamma0,
        omega_m,
        gamma_m,
        y_zpf,
        eta,
        delta_l,
        delta_omega_c,
        laser_detuning,
        effective_detuning,
        gamma,
        kappa: c.kappa,
        s,
        rabi: c.rabi,
        iterations,
        flags,
    })
}

/// Free ringdown y(t) of ÿ + γ_m ẏ + ω_m² y = 0 (underdamped).
pub fn ringdown(y0: f64, v0: f64, gamma_m: f64, omega_m: f64, t: f64) -> Result<f64> {
    if omega_m.is_nan() || gamma_m.is_nan() || omega_m <= gamma_m / 2.0 || gamma_m < 0.0 {
        return Err(Error::domain(
            "ringdown requires the underdamped regime omega_m > gamma_m/2",
            omega_m,
        ));
    }
    let half = 0.5 * gamma_m;
    let wd = (omega_m * omega_m - half * half).sqrt();
    let (sin, cos) = (wd * t).sin_cos();
    Ok((-half * t).exp() * (y0 * cos + (v0 + half * y0) / wd * sin))
}
