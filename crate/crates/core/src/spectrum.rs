//! Analytic steady-state coherences and the x-ray absorption spectrum.
//!
//! For ground phonon number n and excited phonon number m = n + d the
//! weak-drive steady-state coherence is
//!
//! ```text
//!              Ω { F^m_n (2s−Γ) [is + Δ'] − 2iG² F^{m−1}_{n−1} √(mn) }
//! ρ^{em}_{gn} = ───────────────────────────────────────────────────────,  Δ' = Δ − d·ω_m
//!                    2 (2s−Γ) { G²m + [s − iΔ']² }
//! ```
//!
//! and the absorption is Σ_{d=−6}^{6} Im ρ with the Franck-Condon
//! coefficients replaced by their magnitudes.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::franck_condon::{self, quarter_turn};
use crate::nuclide::{GammaConvention, NuclideTransition};
use crate::optomech::{DerivedOptomech, OptomechConfig};

/// Largest phonon offset |m − n| included in the absorption sum.
pub const SIDEBAND_WINDOW: i64 = 6;

/// Default number of detuning samples.
pub const DEFAULT_GRID_POINTS: usize = 10_001;

/// Default half-span of the detuning grid in units of ω_m.
pub const DEFAULT_SPAN_OMEGA_M: f64 = 3.0;

/// Which Franck-Condon coefficients are replaced by their magnitudes when
/// assembling the absorption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FcSubstitution {
    /// |F^m_n| and |F^{m−1}_{n−1}|.
    #[default]
    Both,
    /// Only |F^m_n|; F^{m−1}_{n−1} keeps its phase.
    PrimaryOnly,
    /// Keep both complex coefficients.
    None,
}

/// The parameters the steady-state formula needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub omega_m: f64,
    /// Total decoherence s.
    pub s: f64,
    /// Nuclear linewidth Γ.
    pub gamma: f64,
    /// Beam-splitter coupling G.
    pub g: f64,
    /// x-ray Rabi frequency Ω.
    pub rabi: f64,
    pub eta: f64,
    #[serde(default)]
    pub substitution: FcSubstitution,
}

impl SpectrumParams {
    pub fn from_derived(d: &DerivedOptomech) -> Self {
        Self {
            omega_m: d.omega_m,
            s: d.s,
            gamma: d.gamma,
            g: d.g,
            rabi: d.rabi,
            eta: d.eta,
            substitution: FcSubstitution::Both,
        }
    }

    pub fn uncoupled(&self) -> Self {
        Self { g: 0.0, ..*self }
    }

    fn check(&self) -> Result<()> {
        let excess = 2.0 * self.s - self.gamma;
        if excess.is_nan() || excess <= 0.0 {
            return Err(Error::domain("2s - Gamma must be positive", excess));
        }
        Ok(())
    }
}

fn fc(m: i64, n: i64, eta: f64) -> Complex64 {
    if m < 0 || n < 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (m, n) = (m as u64, n as u64);
    quarter_turn(m.abs_diff(n)) * franck_condon::magnitude_fused(m, n, eta)
}

/// Evaluates the steady-state formula for given coefficients F^m_n and
/// F^{m−1}_{n−1}.
fn coherence_from(fm: Complex64, fm1: Complex64, m: i64, n: i64, delta: f64, p: &SpectrumParams) -> Complex64 {
    let i = Complex64::i();
    let excess = 2.0 * p.s - p.gamma;
    let dp = delta - (m - n) as f64 * p.omega_m;
    let g2 = p.g * p.g;
    let mf = m as f64;
    // √(mn) vanishes at the phonon-number boundary
    let cross = if m > 0 && n > 0 { fm1 * (2.0 * g2 * (mf * n as f64).sqrt()) } else { Complex64::new(0.0, 0.0) };
    let num = (fm * excess * Complex64::new(dp, p.s) - i * cross) * p.rabi;
    let x = Complex64::new(p.s, -dp);
    let den = (x * x + g2 * mf) * (2.0 * excess);
    num / den
}

/// ρ^{em}_{gn}(Δ) with the complex Franck-Condon coefficients.
pub fn steady_state_coherence(m: u64, n: u64, delta: f64, params: &SpectrumParams) -> Result<Complex64> {
    params.check()?;
    franck_condon::coefficient(m, n, params.eta)?;
    let (m, n) = (m as i64, n as i64);
    Ok(coherence_from(fc(m, n, params.eta), fc(m - 1, n - 1, params.eta), m, n, delta, params))
}

/// Coherences for every offset d = m − n in the sideband window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSet {
    pub base_n: u64,
    pub detuning: f64,
    pub entries: BTreeMap<i64, Complex64>,
}

pub fn coherence_set(n: u64, delta: f64, params: &SpectrumParams) -> Result<CoherenceSet> {
    params.check()?;
    let mut entries = BTreeMap::new();
    for d in -SIDEBAND_WINDOW..=SIDEBAND_WINDOW {
        let m = n as i64 + d;
        if m < 0 {
            continue;
        }
        entries.insert(d, steady_state_coherence(m as u64, n, delta, params)?);
    }
    Ok(CoherenceSet { base_n: n, detuning: delta, entries })
}

/// Precomputed sideband terms for repeated absorption evaluation.
#[derive(Debug, Clone)]
pub struct AbsorptionModel {
    params: SpectrumParams,
    n: i64,
    terms: Vec<(i64, Complex64, Complex64)>,
    clipped: bool,
}

impl AbsorptionModel {
    pub fn new(n: u64, params: &SpectrumParams) -> Result<Self> {
        params.check()?;
        let n = n as i64;
        let terms = (-SIDEBAND_WINDOW..=SIDEBAND_WINDOW)
            .map(|d| n + d)
            .filter(|&m| m >= 0)
            .map(|m| {
                let fm = fc(m, n, params.eta);
                let fm1 = fc(m - 1, n - 1, params.eta);
                let (fm, fm1) = match params.substitution {
                    FcSubstitution::Both => (Complex64::new(fm.norm(), 0.0), Complex64::new(fm1.norm(), 0.0)),
                    FcSubstitution::PrimaryOnly => (Complex64::new(fm.norm(), 0.0), fm1),
                    FcSubstitution::None => (fm, fm1),
                };
                (m, fm, fm1)
            })
            .collect();
        Ok(Self { params: *params, n, terms, clipped: n < SIDEBAND_WINDOW })
    }

    /// True when the lower end of the window was cut off at m = 0.
    pub fn window_clipped(&self) -> bool {
        self.clipped
    }

    pub fn absorption(&self, delta: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, fm, fm1)| coherence_from(fm, fm1, m, self.n, delta, &self.params).im)
            .sum()
    }

    /// Contribution of the single line at offset d.
    pub fn line(&self, d: i64, delta: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.0 - self.n == d)
            .map(|&(m, fm, fm1)| coherence_from(fm, fm1, m, self.n, delta, &self.params).im)
            .sum()
    }
}

pub fn absorption(delta: f64, n: u64, params: &SpectrumParams) -> Result<f64> {
    Ok(AbsorptionModel::new(n, params)?.absorption(delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub delta: f64,
    pub absorption: f64,
}

/// Everything needed to regenerate a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: SpectrumParams,
    pub n: u64,
    pub window_clipped: bool,
    /// Divisor applied to every absorption value, if normalized.
    pub normalization: Option<f64>,
    pub nuclide: Option<NuclideTransition>,
    pub gamma_convention: Option<GammaConvention>,
    pub config: Option<OptomechConfig>,
    pub derived: Option<DerivedOptomech>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub provenance: Provenance,
}

/// `points` samples evenly spaced over [−half_span, half_span].
pub fn uniform_grid(half_span: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(half_span.is_finite() && half_span > 0.0) {
        return Err(Error::Input(format!("grid needs >= 2 points and a positive span (got {points}, {half_span})")));
    }
    let step = 2.0 * half_span / (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            // symmetric construction keeps the center sample at exactly 0 for odd counts
            let i = k as f64 - (points - 1) as f64 / 2.0;
            i * step
        })
        .collect())
}

pub fn default_grid(omega_m: f64) -> Vec<f64> {
    uniform_grid(DEFAULT_SPAN_OMEGA_M * omega_m, DEFAULT_GRID_POINTS).expect("default grid is valid")
}

pub fn compute_spectrum(grid: &[f64], n: u64, params: &SpectrumParams) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::Input("detuning grid is empty".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::Input(format!("detuning grid is not strictly increasing at {} -> {}", w[0], w[1])));
    }
    let model = AbsorptionModel::new(n, params)?;
    let points = grid.iter().map(|&delta| SpectrumPoint { delta, absorption: model.absorption(delta) }).collect();
    Ok(Spectrum {
        points,
        provenance: Provenance {
            params: *params,
            n,
            window_clipped: model.window_clipped(),
            normalization: None,
            nuclide: None,
            gamma_convention: None,
            config: None,
            derived: None,
        },
    })
}

impl Spectrum {
    pub fn with_source(
        mut self,
        nuclide: &NuclideTransition,
        convention: GammaConvention,
        config: &OptomechConfig,
        derived: &DerivedOptomech,
    ) -> Self {
        self.provenance.nuclide = Some(nuclide.clone());
        self.provenance.gamma_convention = Some(convention);
        self.provenance.config = Some(config.clone());
        self.provenance.derived = Some(derived.clone());
        self
    }

    /// Rescales so the uncoupled zero-phonon line at Δ = 0 has height 1.
    pub fn normalized(mut self) -> Result<Self> {
        let p = &self.provenance;
        let reference = absorption(0.0, p.n, &p.params.uncoupled())?;
        if !(reference.is_finite() && reference > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize by reference absorption {reference}")));
        }
        for pt in &mut self.points {
            pt.absorption /= reference;
        }
        self.provenance.normalization = Some(reference);
        Ok(self)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.absorption).collect()
    }

    /// Absorption at the sample nearest to `delta`.
    pub fn at(&self, delta: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.delta < delta);
        let candidates = [idx.saturating_sub(1), idx.min(self.points.len() - 1)];
        let best = candidates
            .into_iter()
            .min_by(|&a, &b| (self.points[a].delta - delta).abs().total_cmp(&(self.points[b].delta - delta).abs()))
            .unwrap();
        self.points[best].absorption
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let wm = self.provenance.params.omega_m;
        writeln!(out, "delta_rad_s,delta_over_omega_m,absorption")?;
        for p in &self.points {
            writeln!(out, "{:e},{:e},{:e}", p.delta, p.delta / wm, p.absorption)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Predicted positions ±√((G√(m+v+2mv) + s)² − 2s²) of the two split peaks
/// around a line, or `Unsplit` when the radicand is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeakPair {
    Split { lower: f64, upper: f64 },
    Unsplit,
}

impl PeakPair {
    pub fn half_split(&self) -> Option<f64> {
        match *self {
            PeakPair::Split { lower, upper } => Some(0.5 * (upper - lower)),
            PeakPair::Unsplit => None,
        }
    }
}

pub fn peak_positions(g: f64, s: f64, m: f64, v: f64) -> PeakPair {
    let coupling = g * (m + v + 2.0 * m * v).sqrt();
    let radicand = (coupling + s).powi(2) - 2.0 * s * s;
    if radicand > 0.0 {
        let x = radicand.sqrt();
        PeakPair::Split { lower: -x, upper: x }
    } else {
        PeakPair::Unsplit
    }
}

/// Coefficients of the two excited dressed states on
/// (|e,v−1,m+1⟩, |e,v,m⟩, |e,v+1,m−1⟩).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedStates {
    /// Middle coefficient −√(...).
    pub minus: [f64; 3],
    /// Middle coefficient +√(...).
    pub plus: [f64; 3],
}

impl DressedStates {
    pub fn normalized(&self) -> Self {
        let norm = |v: [f64; 3]| {
            let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / l)
        };
        Self { minus: norm(self.minus), plus: norm(self.plus) }
    }

    pub fn overlap(&self) -> f64 {
        self.minus.iter().zip(&self.plus).map(|(a, b)| a * b).sum()
    }
}

pub fn dressed_states(v: u64, m: u64) -> Result<DressedStates> {
    if m == 0 || v == 0 {
        return Err(Error::domain(
            "dressed states need m >= 1 and v >= 1 (the (1+v)m denominator vanishes)",
            (m.min(v)) as f64,
        ));
    }
    let (v, m) = (v as f64, m as f64);
    let denom = (1.0 + v) * m;
    let first = ((1.0 + m) * v / denom).sqrt();
    let middle = ((m + v + 2.0 * m * v) / denom).sqrt();
    Ok(DressedStates { minus: [first, -middle, 1.0], plus: [first, middle, 1.0] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub delta: f64,
    pub height: f64,
}

/// Strict local maxima, refined by a parabola through the three samples.
pub fn find_peaks(spectrum: &Spectrum) -> Vec<Peak> {
    find_peaks_in(&spectrum.deltas(), &spectrum.values())
}

pub fn find_peaks_in(x: &[f64], y: &[f64]) -> Vec<Peak> {
    let mut peaks = Vec::new();
    if x.len() < 3 {
        return peaks;
    }
    for i in 1..x.len() - 1 {
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        if !(y1 > y0 && y1 > y2) {
            continue;
        }
        let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curvature = (d12 - d01) / (x2 - x0);
        let (xv, yv) = if curvature < 0.0 {
            // vertex of the interpolating parabola y = y1 + b(x−x1) + a(x−x1)²
            let b = d01 + curvature * (x1 - x0);
            let shift = (-b / (2.0 * curvature)).clamp(x0 - x1, x2 - x1);
            (x1 + shift, y1 + b * shift + curvature * shift * shift)
        } else {
            (x1, y1)
        };
        peaks.push(Peak { delta: xv, height: yv });
    }
    peaks
}

/// Transparency-dip summary for the zero-phonon line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipMetrics {
    /// Absorption at Δ = 0.
    pub center_absorption: f64,
    /// 1 − A(0)/max A over |Δ| ≤ ω_m/2, clamped to [0, 1]. A non-positive
    /// center (full transparency) gives 1.
    pub contrast: f64,
    /// Highest peak on either side of Δ = 0 within the same window.
    pub split: PeakPair,
}

/// Samples used by [`dip_metrics`] across |Δ| ≤ ω_m/2.
pub const DIP_WINDOW_POINTS: usize = 4_001;

pub fn dip_metrics(n: u64, params: &SpectrumParams) -> Result<DipMetrics> {
    let grid = uniform_grid(0.5 * params.omega_m, DIP_WINDOW_POINTS)?;
    let spectrum = compute_spectrum(&grid, n, params)?;
    Ok(dip_metrics_of(&spectrum))
}

pub fn dip_metrics_of(spectrum: &Spectrum) -> DipMetrics {
    let center = spectrum.at(0.0);
    let half_window = 0.5 * spectrum.provenance.params.omega_m;
    let window: Vec<&SpectrumPoint> = spectrum.points.iter().filter(|p| p.delta.abs() <= half_window).collect();
    let max = window.iter().map(|p| p.absorption).fold(f64::NEG_INFINITY, f64::max);
    let contrast = if center <= 0.0 {
        1.0
    } else if max <= center {
        0.0
    } else {
        (1.0 - center / max).clamp(0.0, 1.0)
    };

    let step = spectrum.points.get(1).map(|p| p.delta - spectrum.points[0].delta).unwrap_or(0.0);
    let peaks: Vec<Peak> = find_peaks(spectrum).into_iter().filter(|p| p.delta.abs() <= half_window).collect();
    let best = |side: f64| {
        peaks
            .iter()
            .filter(|p| p.delta * side > 0.5 * step)
            .max_by(|a, b| a.height.total_cmp(&b.height))
            .map(|p| p.delta)
    };
    let split = match (best(-1.0), best(1.0)) {
        (Some(lower), Some(upper)) => PeakPair::Split { lower, upper },
        _ => PeakPair::Unsplit,
    };
    DipMetrics { center_absorption: center, contrast, split }
}
