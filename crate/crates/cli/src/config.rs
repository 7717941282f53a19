//! Flag and config-file resolution: defaults < config file < flags.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use xoit::nuclide::load_nuclides;
use xoit::spectrum::{DEFAULT_GRID_POINTS, DEFAULT_SPAN_OMEGA_M};
use xoit::{derive, lookup_nuclide, CouplingModel, DerivedOptomech, Error, GammaConvention, NuclideTransition, OptomechConfig};

/// Coupling floor used to pick a weak default Ω when the laser is off.
pub const G_FLOOR: f64 = TAU * 100.0;
/// Default Ω as a fraction of max(G, G_FLOOR).
pub const RABI_FRACTION: f64 = 1e-3;

/// Accepts `5000000`, `5e6` or `5.0e6`; rejects anything non-integral.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

/// Config-file counts may be written as `5e6` just like on the command line.
fn de_count<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    let v = Value::deserialize(d)?;
    let text = match &v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(serde::de::Error::custom(format!("expected a count, got {v}"))),
    };
    parse_count(&text).map(Some).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsArgs {
    /// Built-in nuclide name (case-insensitive)
    #[arg(long)]
    pub nuclide: Option<String>,
    /// JSON array of nuclides: name, energy_eV, gamma_MHz | gamma_rad_s
    #[arg(long)]
    pub nuclides_file: Option<PathBuf>,
    /// How the tabulated linewidths in MHz are read
    #[arg(long, value_enum)]
    pub gamma_convention: Option<ConventionArg>,
    /// Laser power in nW
    #[arg(long)]
    pub power_nw: Option<f64>,
    /// Microlever mass in µg
    #[arg(long)]
    pub mass_ug: Option<f64>,
    /// Inherent phonon frequency ω₀ / 2π in MHz
    #[arg(long)]
    pub omega0_mhz_2pi: Option<f64>,
    /// Inherent mechanical damping γ₀ / 2π in kHz
    #[arg(long)]
    pub gamma0_khz_2pi: Option<f64>,
    /// Cavity decay κ / 2π in MHz
    #[arg(long)]
    pub kappa_mhz_2pi: Option<f64>,
    /// Cavity length in mm
    #[arg(long)]
    pub cavity_length_mm: Option<f64>,
    /// Cavity angular frequency ω_c in rad/s
    #[arg(long)]
    pub omega_c_rad_s: Option<f64>,
    /// Laser detuning Δ_c in rad/s (default: track the red sideband)
    #[arg(long, allow_hyphen_values = true)]
    pub laser_detuning_rad_s: Option<f64>,
    /// Ground-state phonon occupation n
    #[arg(long, value_parser = parse_count)]
    #[serde(deserialize_with = "de_count")]
    pub n: Option<u64>,
    /// Ground-state photon-fluctuation occupation v
    #[arg(long, value_parser = parse_count)]
    #[serde(deserialize_with = "de_count")]
    pub v: Option<u64>,
    /// x-ray Rabi frequency Ω in rad/s (default 1e-3 × max(G, 2π×100 Hz))
    #[arg(long)]
    pub rabi_rad_s: Option<f64>,
    /// Vacuum coupling G₀ / 2π in Hz (default 3.9)
    #[arg(long)]
    pub g0_hz_2pi: Option<f64>,
    /// Take G₀ = ω_c·Y_ZPF/L from the cavity geometry
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub geometric_g0: bool,
    /// Beam-splitter coupling G / 2π in Hz, bypassing the power chain
    #[arg(long)]
    pub coupling_g_hz_2pi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionArg {
    Hz,
    RadS,
}

impl From<ConventionArg> for GammaConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Hz => GammaConvention::Hz,
            ConventionArg::RadS => GammaConvention::RadS,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridArgs {
    /// Number of detuning samples
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Half-width of the detuning grid in units of ω_m
    #[arg(long)]
    pub grid_span_omega_m: Option<f64>,
    /// Divide by the uncoupled zero-phonon peak height
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
}

impl GridArgs {
    fn or(self, base: GridArgs) -> GridArgs {
        GridArgs {
            grid_points: self.grid_points.or(base.grid_points),
            grid_span_omega_m: self.grid_span_omega_m.or(base.grid_span_omega_m),
            normalize: self.normalize || base.normalize,
        }
    }

    pub fn points(&self) -> usize {
        self.grid_points.unwrap_or(DEFAULT_GRID_POINTS)
    }

    pub fn span(&self) -> f64 {
        self.grid_span_omega_m.unwrap_or(DEFAULT_SPAN_OMEGA_M)
    }
}

impl PhysicsArgs {
    fn or(self, base: PhysicsArgs) -> PhysicsArgs {
        PhysicsArgs {
            nuclide: self.nuclide.or(base.nuclide),
            nuclides_file: self.nuclides_file.or(base.nuclides_file),
            gamma_convention: self.gamma_convention.or(base.gamma_convention),
            power_nw: self.power_nw.or(base.power_nw),
            mass_ug: self.mass_ug.or(base.mass_ug),
            omega0_mhz_2pi: self.omega0_mhz_2pi.or(base.omega0_mhz_2pi),
            gamma0_khz_2pi: self.gamma0_khz_2pi.or(base.gamma0_khz_2pi),
            kappa_mhz_2pi: self.kappa_mhz_2pi.or(base.kappa_mhz_2pi),
            cavity_length_mm: self.cavity_length_mm.or(base.cavity_length_mm),
            omega_c_rad_s: self.omega_c_rad_s.or(base.omega_c_rad_s),
            laser_detuning_rad_s: self.laser_detuning_rad_s.or(base.laser_detuning_rad_s),
            n: self.n.or(base.n),
            v: self.v.or(base.v),
            rabi_rad_s: self.rabi_rad_s.or(base.rabi_rad_s),
            g0_hz_2pi: self.g0_hz_2pi.or(base.g0_hz_2pi),
            geometric_g0: self.geometric_g0 || base.geometric_g0,
            coupling_g_hz_2pi: self.coupling_g_hz_2pi.or(base.coupling_g_hz_2pi),
        }
    }

    pub fn convention(&self) -> GammaConvention {
        self.gamma_convention.map(Into::into).unwrap_or_default()
    }

    fn coupling(&self) -> Result<CouplingModel, Error> {
        let conflict = |a: &str, b: &str| Error::Input(format!("--{a} and --{b} cannot be combined"));
        if self.coupling_g_hz_2pi.is_some() {
            if self.power_nw.is_some() {
                return Err(conflict("coupling-g-hz-2pi", "power-nw"));
            }
            if self.g0_hz_2pi.is_some() {
                return Err(conflict("coupling-g-hz-2pi", "g0-hz-2pi"));
            }
            if self.geometric_g0 {
                return Err(conflict("coupling-g-hz-2pi", "geometric-g0"));
            }
        }
        if self.geometric_g0 && self.g0_hz_2pi.is_some() {
            return Err(conflict("geometric-g0", "g0-hz-2pi"));
        }
        Ok(match (self.coupling_g_hz_2pi, self.g0_hz_2pi, self.geometric_g0) {
            (Some(g), _, _) => CouplingModel::Direct { g: TAU * g },
            (None, Some(g0), _) => CouplingModel::Vacuum { g0: TAU * g0 },
            (None, None, true) => CouplingModel::Geometric,
            (None, None, false) => CouplingModel::default(),
        })
    }

    /// The optomechanical configuration with Ω still at its placeholder
    /// default when no `--rabi-rad-s` was given.
    pub fn optomech(&self) -> Result<OptomechConfig, Error> {
        let d = OptomechConfig::default();
        Ok(OptomechConfig {
            mass_kg: self.mass_ug.map_or(d.mass_kg, |x| x / 1e9),
            cavity_length_m: self.cavity_length_mm.map_or(d.cavity_length_m, |x| x / 1e3),
            omega0: self.omega0_mhz_2pi.map_or(d.omega0, |x| TAU * x * 1e6),
            gamma0: self.gamma0_khz_2pi.map_or(d.gamma0, |x| TAU * x * 1e3),
            kappa: self.kappa_mhz_2pi.map_or(d.kappa, |x| TAU * x * 1e6),
            omega_c: self.omega_c_rad_s.unwrap_or(d.omega_c),
            power_w: self.power_nw.map_or(d.power_w, |x| x / 1e9),
            laser_detuning: self.laser_detuning_rad_s.or(d.laser_detuning),
            rabi: self.rabi_rad_s.unwrap_or(d.rabi),
            n: self.n.unwrap_or(d.n),
            v: self.v.unwrap_or(d.v),
            coupling: self.coupling()?,
        })
    }

    /// All candidate nuclides: the file if given, else the built-in table.
    pub fn nuclide_pool(&self) -> Result<Vec<NuclideTransition>, Error> {
        let conv = self.convention();
        match &self.nuclides_file {
            Some(path) => {
                let file = File::open(path)
                    .map_err(|e| Error::Input(format!("cannot open nuclides file {}: {e}", path.display())))?;
                load_nuclides(BufReader::new(file), conv)
            }
            None => Ok(xoit::builtin_nuclides(conv)),
        }
    }

    /// The selected nuclide (default ⁶⁷Zn, or the first entry of a file).
    pub fn nuclide(&self) -> Result<NuclideTransition, Error> {
        let pool = self.nuclide_pool()?;
        match (&self.nuclide, &self.nuclides_file) {
            (None, None) => lookup_nuclide("67Zn", self.convention()),
            (None, Some(_)) => pool.into_iter().next().ok_or_else(|| Error::Input("nuclides file is empty".into())),
            (Some(name), _) => {
                let known = pool.iter().map(|n| n.name().to_string()).collect::<Vec<_>>();
                pool.into_iter()
                    .find(|n| n.name().eq_ignore_ascii_case(name))
                    .ok_or_else(|| Error::UnknownNuclide { name: name.clone(), known: known.join(", ") })
            }
        }
    }
}

/// A fully resolved run: the echo of every setting that shaped the output.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub nuclide: NuclideTransition,
    pub gamma_convention: GammaConvention,
    pub config: OptomechConfig,
    pub derived: DerivedOptomech,
    pub grid_points: usize,
    pub grid_span_omega_m: f64,
    pub normalize: bool,
}

/// Ω = 1e-3 × max(G, G_FLOOR) unless given explicitly.
pub fn default_rabi(g: f64) -> f64 {
    RABI_FRACTION * g.max(G_FLOOR)
}

/// Derives the parameter chain, then fixes Ω if it was left to default.
pub fn resolve_config(physics: &PhysicsArgs, nuclide: &NuclideTransition) -> Result<(OptomechConfig, DerivedOptomech), Error> {
    let mut config = physics.optomech()?;
    let mut derived = derive(&config, nuclide)?;
    if physics.rabi_rad_s.is_none() {
        config.rabi = default_rabi(derived.g);
        derived = derive(&config, nuclide)?;
    }
    Ok((config, derived))
}

const PHYSICS_KEYS: &[&str] = &[
    "nuclide",
    "nuclides_file",
    "gamma_convention",
    "power_nw",
    "mass_ug",
    "omega0_mhz_2pi",
    "gamma0_khz_2pi",
    "kappa_mhz_2pi",
    "cavity_length_mm",
    "omega_c_rad_s",
    "laser_detuning_rad_s",
    "n",
    "v",
    "rabi_rad_s",
    "g0_hz_2pi",
    "geometric_g0",
    "coupling_g_hz_2pi",
];
const GRID_KEYS: &[&str] = &["grid_points", "grid_span_omega_m", "normalize"];

/// Reads a JSON object whose keys are the long flag names with `_` for `-`.
pub fn load_config_file(path: &Path) -> Result<(PhysicsArgs, GridArgs), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })?;
    let Value::Object(map) = value else {
        return Err(Error::Input(format!("{}: config file must hold a JSON object", path.display())));
    };
    let mut physics = Map::new();
    let mut grid = Map::new();
    for (k, v) in map {
        if PHYSICS_KEYS.contains(&k.as_str()) {
            physics.insert(k, v);
        } else if GRID_KEYS.contains(&k.as_str()) {
            grid.insert(k, v);
        } else {
            return Err(Error::Validation { field: k, message: "unknown config key".into() });
        }
    }
    let bad = |e: serde_json::Error| Error::Input(format!("{}: {e}", path.display()));
    let mut physics: PhysicsArgs = serde_json::from_value(Value::Object(physics)).map_err(bad)?;
    let grid: GridArgs = serde_json::from_value(Value::Object(grid)).map_err(bad)?;
    // a relative nuclides file is taken relative to the config file
    if let (Some(f), Some(dir)) = (&physics.nuclides_file, path.parent()) {
        if f.is_relative() {
            physics.nuclides_file = Some(dir.join(f));
        }
    }
    Ok((physics, grid))
}

/// Flags layered over an optional config file.
pub fn merge(config: Option<&Path>, physics: PhysicsArgs, grid: GridArgs) -> Result<(PhysicsArgs, GridArgs), Error> {
    match config {
        Some(path) => {
            let (fp, fg) = load_config_file(path)?;
            Ok((physics.or(fp), grid.or(fg)))
        }
        None => Ok((physics, grid)),
    }
}

pub fn resolve(physics: &PhysicsArgs, grid: &GridArgs) -> Result<Resolved, Error> {
    let nuclide = physics.nuclide()?;
    let (config, derived) = resolve_config(physics, &nuclide)?;
    Ok(Resolved {
        nuclide,
        gamma_convention: physics.convention(),
        config,
        derived,
        grid_points: grid.points(),
        grid_span_omega_m: grid.span(),
        normalize: grid.normalize,
    })
}
