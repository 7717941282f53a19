//! Franck-Condon coefficients in the small-η truncation
//!
//! ```text
//! F^m_n = (iη)^d / d! · sqrt(max(m,n)! / min(m,n)!),   d = |m − n|
//! ```
//!
//! Phonon occupations reach 10⁹, so the factorial ratio is never formed. The
//! magnitude is a product of `d` factors `η·sqrt(min + j)/j`, each of order
//! η√n, and the phase is the exact quarter-turn `i^d`. A second route through
//! log-gamma differences exists only to cross-check the first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest supported |m − n|; beyond this d! overflows an f64.
pub const MAX_ORDER: u64 = 170;

/// A coefficient kept as magnitude plus quarter-turn order so the phase stays
/// exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcCoefficient {
    pub m: u64,
    pub n: u64,
    pub eta: f64,
    pub magnitude: f64,
}

impl FcCoefficient {
    pub fn order(&self) -> u64 {
        self.m.abs_diff(self.n)
    }

    pub fn value(&self) -> Complex64 {
        quarter_turn(self.order()) * self.magnitude
    }
}

/// i^d without complex exponentiation.
pub fn quarter_turn(d: u64) -> Complex64 {
    match d % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_args(m: u64, n: u64, eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::domain("Lamb-Dicke parameter must be non-negative", eta));
    }
    if m.abs_diff(n) > MAX_ORDER {
        return Err(Error::domain("|m - n| exceeds 170", m.abs_diff(n) as f64));
    }
    Ok(())
}

pub fn coefficient(m: u64, n: u64, eta: f64) -> Result<FcCoefficient> {
    check_args(m, n, eta)?;
    Ok(FcCoefficient { m, n, eta, magnitude: magnitude_fused(m, n, eta) })
}

/// The complex coefficient F^m_n.
pub fn franck_condon(m: u64, n: u64, eta: f64) -> Result<Complex64> {
    coefficient(m, n, eta).map(|c| c.value())
}

/// |F^m_n| as Π_{j=1..d} η·sqrt(min + j)/j.
pub fn magnitude_fused(m: u64, n: u64, eta: f64) -> f64 {
    let d = m.abs_diff(n);
    let lo = m.min(n) as f64;
    (1..=d).fold(1.0, |acc, j| {
        let j = j as f64;
        acc * (eta * (lo + j).sqrt() / j)
    })
}

/// |F^m_n| via log-gamma: exp(d ln η − ln d! + ½[lnΓ(min+d+1) − lnΓ(min+1)]).
pub fn magnitude_log_gamma(m: u64, n: u64, eta: f64) -> f64 {
    let d = m.abs_diff(n);
    if d == 0 {
        return 1.0;
    }
    if eta == 0.0 {
        return 0.0;
    }
    let lo = m.min(n) as f64;
    let log_mag = d as f64 * eta.ln() - ln_gamma(d as f64 + 1.0)
        + 0.5 * ln_gamma_ratio(lo + 1.0, d as f64);
    log_mag.exp()
}

/// lnΓ(x + d) − lnΓ(x) for x ≥ 1, d ≥ 0, accurate when x is huge.
///
/// For large x the Stirling series is differenced analytically:
/// (x + d − ½)ln(x + d) − (x − ½)ln x = (x − ½)·ln1p(d/x) + d·ln(x + d).
pub fn ln_gamma_ratio(x: f64, d: f64) -> f64 {
    if x < 30.0 {
        return ln_gamma(x + d) - ln_gamma(x);
    }
    let series = |z: f64| {
        let z2 = z * z;
        1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
            - 1.0 / (1680.0 * z * z2 * z2 * z2)
    };
    (x - 0.5) * (d / x).ln_1p() + d * (x + d).ln() - d + (series(x + d) - series(x))
}

/// Whether the truncated formula is usable for resolving sidebands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    /// 0.1 ≤ η√n < 1.
    Valid,
    /// η√n < 0.1: only the zero-phonon line is visible.
    Marginal,
    /// η√n ≥ 1: the truncation breaks down.
    Invalid,
}

pub fn validity(eta: f64, n: f64) -> Validity {
    let x = eta * n.max(0.0).sqrt();
    if x >= 1.0 {
        Validity::Invalid
    } else if x >= 0.1 {
        Validity::Valid
    } else {
        Validity::Marginal
    }
}
