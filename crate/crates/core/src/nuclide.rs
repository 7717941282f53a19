//! Mössbauer transitions: the built-in table, JSON ingestion, and the
//! Lamb-Dicke / phonon-number bounds that decide whether sidebands show up.

use std::f64::consts::TAU;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{PhysicalConstants, CODATA_2018};

/// How a linewidth quoted "in MHz" is turned into a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaConvention {
    /// The MHz value is an ordinary frequency: Γ = 2π × value × 10⁶ rad/s.
    #[default]
    Hz,
    /// The MHz value is already angular: Γ = value × 10⁶ rad/s.
    RadS,
}

impl GammaConvention {
    pub fn to_rad_s(self, gamma_mhz: f64) -> f64 {
        match self {
            GammaConvention::Hz => TAU * gamma_mhz * 1e6,
            GammaConvention::RadS => gamma_mhz * 1e6,
        }
    }

    pub fn to_mhz(self, gamma_rad_s: f64) -> f64 {
        match self {
            GammaConvention::Hz => gamma_rad_s / TAU / 1e6,
            GammaConvention::RadS => gamma_rad_s / 1e6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GammaConvention::Hz => "hz",
            GammaConvention::RadS => "rad_s",
        }
    }
}

impl std::str::FromStr for GammaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hz" => Ok(GammaConvention::Hz),
            "rad_s" => Ok(GammaConvention::RadS),
            other => Err(Error::Input(format!(
                "unknown gamma convention `{other}` (expected hz or rad_s)"
            ))),
        }
    }
}

/// One nuclear transition. The wave number is derived from the energy and
/// cannot be set independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclideTransition {
    name: String,
    energy_ev: f64,
    gamma: f64,
    wave_number: f64,
}

impl NuclideTransition {
    pub fn new(name: impl Into<String>, energy_ev: f64, gamma_rad_s: f64) -> Result<Self> {
        Self::with_constants(name, energy_ev, gamma_rad_s, &CODATA_2018)
    }

    pub fn with_constants(
        name: impl Into<String>,
        energy_ev: f64,
        gamma_rad_s: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        let name = name.into();
        if !(energy_ev.is_finite() && energy_ev > 0.0) {
            return Err(Error::Validation {
                field: "energy_eV".into(),
                message: format!("{name}: energy must be positive, got {energy_ev}"),
            });
        }
        if !(gamma_rad_s.is_finite() && gamma_rad_s > 0.0) {
            return Err(Error::Validation {
                field: "gamma".into(),
                message: format!("{name}: linewidth must be positive, got {gamma_rad_s}"),
            });
        }
        let wave_number = constants.energy_to_wavevector(energy_ev)?;
        Ok(Self { name, energy_ev, gamma: gamma_rad_s, wave_number })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Transition energy in eV.
    pub fn energy_ev(&self) -> f64 {
        self.energy_ev
    }

    /// Natural linewidth Γ in rad/s.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// x-ray wave number k_x in 1/m.
    pub fn wave_number(&self) -> f64 {
        self.wave_number
    }

    /// Nuclear transition angular frequency in rad/s.
    pub fn angular_frequency(&self) -> f64 {
        self.wave_number * CODATA_2018.c
    }
}

/// Published reference row for one built-in nuclide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub name: &'static str,
    pub energy_kev: f64,
    pub gamma_mhz: f64,
    /// Lamb-Dicke parameter in units of 10⁻⁵.
    pub eta_e5: f64,
    /// Minimum phonon number in units of 10⁷.
    pub n_min_e7: f64,
}

pub const TABLE: [TableRow; 6] = [
    TableRow { name: "45Sc", energy_kev: 12.400, gamma_mhz: 2.18e-6, eta_e5: 1.58, n_min_e7: 4.02 },
    TableRow { name: "67Zn", energy_kev: 93.312, gamma_mhz: 0.08, eta_e5: 11.87, n_min_e7: 0.07 },
    TableRow { name: "73Ge", energy_kev: 13.285, gamma_mhz: 0.23, eta_e5: 1.69, n_min_e7: 3.50 },
    TableRow { name: "157Gd", energy_kev: 63.929, gamma_mhz: 1.51, eta_e5: 8.13, n_min_e7: 0.15 },
    TableRow { name: "181Ta", energy_kev: 6.238, gamma_mhz: 0.11, eta_e5: 0.79, n_min_e7: 15.88 },
    TableRow { name: "229Th", energy_kev: 7.8e-3, gamma_mhz: 1e-10, eta_e5: 9.92e-4, n_min_e7: 1.02e7 },
];

pub fn builtin_nuclides(convention: GammaConvention) -> Vec<NuclideTransition> {
    TABLE
        .iter()
        .map(|row| {
            NuclideTransition::new(row.name, row.energy_kev * 1e3, convention.to_rad_s(row.gamma_mhz))
                .expect("built-in table entries are positive")
        })
        .collect()
}

pub fn builtin_names() -> Vec<&'static str> {
    TABLE.iter().map(|r| r.name).collect()
}

/// Case-insensitive lookup in the built-in table.
pub fn lookup_nuclide(name: &str, convention: GammaConvention) -> Result<NuclideTransition> {
    builtin_nuclides(convention)
        .into_iter()
        .find(|n| n.name().eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| Error::UnknownNuclide {
            name: name.to_string(),
            known: builtin_names().join(", "),
        })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct NuclideRecord {
    name: String,
    energy_eV: f64,
    #[serde(default)]
    gamma_MHz: Option<f64>,
    #[serde(default)]
    gamma_rad_s: Option<f64>,
}

/// Reads a JSON array of `{"name", "energy_eV", "gamma_MHz" | "gamma_rad_s"}`.
///
/// `gamma_MHz` is interpreted with `convention`; `gamma_rad_s` is taken as is.
/// Exactly one of the two must be present.
pub fn load_nuclides<R: Read>(source: R, convention: GammaConvention) -> Result<Vec<NuclideTransition>> {
    let records: Vec<NuclideRecord> = serde_json::from_reader(source).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    records
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let field = |f: &str| format!("[{i}].{f}");
            if !(rec.energy_eV.is_finite() && rec.energy_eV > 0.0) {
                return Err(Error::Validation {
                    field: field("energy_eV"),
                    message: format!("must be positive, got {}", rec.energy_eV),
                });
            }
            let gamma = match (rec.gamma_MHz, rec.gamma_rad_s) {
                (Some(mhz), None) => {
                    if !(mhz.is_finite() && mhz > 0.0) {
                        return Err(Error::Validation {
                            field: field("gamma_MHz"),
                            message: format!("must be positive, got {mhz}"),
                        });
                    }
                    convention.to_rad_s(mhz)
                }
                (None, Some(rad)) => {
                    if !(rad.is_finite() && rad > 0.0) {
                        return Err(Error::Validation {
                            field: field("gamma_rad_s"),
                            message: format!("must be positive, got {rad}"),
                        });
                    }
                    rad
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Validation {
                        field: field("gamma_MHz"),
                        message: "give either gamma_MHz or gamma_rad_s, not both".into(),
                    })
                }
                (None, None) => {
                    return Err(Error::Validation {
                        field: field("gamma_MHz"),
                        message: "missing linewidth (gamma_MHz or gamma_rad_s)".into(),
                    })
                }
            };
            NuclideTransition::new(rec.name, rec.energy_eV, gamma)
        })
        .collect()
}

/// η = k_x · Y_ZPF.
pub fn lamb_dicke(nuclide: &NuclideTransition, y_zpf: f64) -> Result<f64> {
    if !(y_zpf.is_finite() && y_zpf > 0.0) {
        return Err(Error::domain("zero-point fluctuation must be positive", y_zpf));
    }
    Ok(nuclide.wave_number() * y_zpf)
}

/// Phonon-number window 0.1 ≤ η√n < 1 with n_max = 100 n_min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononBounds {
    pub n_min: f64,
    pub n_max: f64,
}

impl PhononBounds {
    /// n_min in units of 10⁷ rounded to two decimals, the way the reference
    /// table prints it (except for ²²⁹Th, which needs significant figures).
    pub fn n_min_e7_rounded(&self) -> f64 {
        let x = self.n_min / 1e7;
        if x >= 1e3 {
            round_significant(x, 3)
        } else {
            (x * 100.0).round() / 100.0
        }
    }
}

pub fn phonon_bounds(eta: f64) -> Result<PhononBounds> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::domain("Lamb-Dicke parameter must be positive", eta));
    }
    let n_min = (0.1 / eta).powi(2);
    Ok(PhononBounds { n_min, n_max: 100.0 * n_min })
}

pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2_zpf() -> f64 {
        let m = 0.14e-9;
        let w0 = TAU * 0.95e6;
        (CODATA_2018.hbar / (2.0 * m * w0)).sqrt()
    }

    #[test]
    fn six_builtins() {
        let all = builtin_nuclides(GammaConvention::Hz);
        assert_eq!(all.len(), 6);
        let zn = lookup_nuclide("67Zn", GammaConvention::Hz).unwrap();
        assert_eq!(zn.energy_ev(), 93_312.0);
        assert_relative_eq!(GammaConvention::Hz.to_mhz(zn.gamma()), 0.08, max_relative = 1e-12);
        let th = lookup_nuclide("229th", GammaConvention::Hz).unwrap();
        assert_relative_eq!(th.energy_ev(), 7.8, max_relative = 1e-12);
        assert_relative_eq!(GammaConvention::Hz.to_mhz(th.gamma()), 1e-10, max_relative = 1e-12);
        let ta = lookup_nuclide("181Ta", GammaConvention::Hz).unwrap();
        assert_relative_eq!(ta.energy_ev(), 6238.0, max_relative = 1e-12);
        assert_relative_eq!(GammaConvention::Hz.to_mhz(ta.gamma()), 0.11, max_relative = 1e-12);
    }

    #[test]
    fn gamma_convention_switch() {
        let hz = lookup_nuclide("67Zn", GammaConvention::Hz).unwrap();
        let rad = lookup_nuclide("67Zn", GammaConvention::RadS).unwrap();
        assert_relative_eq!(hz.gamma() / rad.gamma(), TAU, max_relative = 1e-14);
        assert_eq!(hz.wave_number(), rad.wave_number());
    }

    #[test]
    fn unknown_nuclide_lists_known_names() {
        let err = lookup_nuclide("57Fe", GammaConvention::Hz).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("57Fe") && msg.contains("67Zn"), "{msg}");
    }

    #[test]
    fn wave_number_is_derived() {
        let n = NuclideTransition::new("x", 12_400.0, 1.0).unwrap();
        assert_eq!(n.wave_number(), CODATA_2018.energy_to_wavevector(12_400.0).unwrap());
        assert!(NuclideTransition::new("x", 0.0, 1.0).is_err());
        assert!(NuclideTransition::new("x", 1.0, 0.0).is_err());
    }

    #[test]
    fn load_matches_builtin() {
        let json = r#"[{"name": "67Zn", "energy_eV": 93312.0, "gamma_MHz": 0.08}]"#;
        let loaded = load_nuclides(json.as_bytes(), GammaConvention::Hz).unwrap();
        assert_eq!(loaded, vec![lookup_nuclide("67Zn", GammaConvention::Hz).unwrap()]);
    }

    #[test]
    fn load_rejects_negative_energy() {
        let json = r#"[{"name": "bad", "energy_eV": -1, "gamma_MHz": 0.08}]"#;
        match load_nuclides(json.as_bytes(), GammaConvention::Hz) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "[0].energy_eV"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_empty_and_malformed() {
        assert!(load_nuclides("[]".as_bytes(), GammaConvention::Hz).unwrap().is_empty());
        let bad = "[\n{\"name\": \"x\", \"energy_eV\": }]";
        match load_nuclides(bad.as_bytes(), GammaConvention::Hz) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = r#"[{"name": "x", "energy_eV": 1, "gamma_MHz": 1, "spin": 2}]"#;
        assert!(matches!(load_nuclides(unknown.as_bytes(), GammaConvention::Hz), Err(Error::Parse { .. })));
        let both = r#"[{"name": "x", "energy_eV": 1, "gamma_MHz": 1, "gamma_rad_s": 2}]"#;
        assert!(matches!(load_nuclides(both.as_bytes(), GammaConvention::Hz), Err(Error::Validation { .. })));
        let rad = r#"[{"name": "x", "energy_eV": 1, "gamma_rad_s": 2}]"#;
        assert_eq!(load_nuclides(rad.as_bytes(), GammaConvention::Hz).unwrap()[0].gamma(), 2.0);
    }

    #[test]
    fn lamb_dicke_reference_values() {
        let y = fig2_zpf();
        let eta = |name| lamb_dicke(&lookup_nuclide(name, GammaConvention::Hz).unwrap(), y).unwrap();
        assert_relative_eq!(eta("67Zn"), 11.87e-5, max_relative = 0.01);
        assert_relative_eq!(eta("73Ge"), 1.69e-5, max_relative = 0.01);
        assert_relative_eq!(eta("229Th"), 9.92e-9, max_relative = 0.01);
    }

    #[test]
    fn lamb_dicke_is_linear() {
        let zn = lookup_nuclide("67Zn", GammaConvention::Hz).unwrap();
        let y = fig2_zpf();
        assert_eq!(lamb_dicke(&zn, 2.0 * y).unwrap(), 2.0 * lamb_dicke(&zn, y).unwrap());
        assert!(lamb_dicke(&zn, 0.0).is_err());
        assert!(lamb_dicke(&zn, -y).is_err());
    }

    #[test]
    fn phonon_bound_examples() {
        let zn = phonon_bounds(11.87e-5).unwrap();
        assert_relative_eq!(zn.n_min / 1e7, 0.07, max_relative = 0.02);
        assert_eq!(zn.n_min_e7_rounded(), 0.07);
        let sc = phonon_bounds(1.58e-5).unwrap();
        assert_relative_eq!(sc.n_min / 1e7, 4.02, max_relative = 0.02);
        let unit = phonon_bounds(0.1).unwrap();
        assert_relative_eq!(unit.n_min, 1.0, max_relative = 1e-14);
        assert_relative_eq!(unit.n_max, 100.0, max_relative = 1e-14);
        assert!(phonon_bounds(0.0).is_err());
    }

    #[test]
    fn bounds_bracket_the_validity_window() {
        for eta in [1e-8, 3e-6, 1.2e-4, 0.05] {
            let b = phonon_bounds(eta).unwrap();
            assert_eq!(b.n_max, 100.0 * b.n_min);
            assert_relative_eq!(eta * b.n_min.sqrt(), 0.1, max_relative = 1e-12);
            assert_relative_eq!(eta * b.n_max.sqrt(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(1.0163e7, 3), 1.02e7);
        assert_eq!(round_significant(0.0709, 1), 0.07);
    }
}
