//! Optomechanically tunable nuclear x-ray/VUV absorption spectra.
//!
//! A Mössbauer-nuclide layer rides on the movable mirror of a red-detuned
//! optomechanical cavity. The linearized beam-splitter coupling between cavity
//! photon fluctuations and phonons splits each nuclear absorption line and
//! opens a transparency window at its center. This crate computes the
//! optomechanical parameter chain, Franck-Condon sideband weights, the
//! analytic steady-state coherences and spectra, and an independent
//! truncated-basis master-equation oracle used to validate them.
//!
//! All quantities are SI; every rate and frequency is an angular frequency in
//! rad/s.

pub mod error;
pub mod franck_condon;
pub mod nuclide;
pub mod optomech;
pub mod oracle;
pub mod spectrum;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
pub use franck_condon::{franck_condon, Validity};
pub use nuclide::{builtin_nuclides, lookup_nuclide, GammaConvention, NuclideTransition};
pub use optomech::{derive, CouplingModel, DerivedOptomech, OptomechConfig};
pub use spectrum::{compute_spectrum, DipMetrics, PeakPair, Spectrum, SpectrumParams};
pub use oracle::{compare_with_analytic, DiscrepancyReport, GroundClosure, OracleParams};
pub use validation::{ValidationOptions, ValidationReport};

pub use units::{PhysicalConstants, CODATA_2018};
