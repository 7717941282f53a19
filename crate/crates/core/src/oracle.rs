//! Independent check of the analytic steady state on the six-state basis
//!
//! ```text
//! |g,v−1,n+1⟩ |g,v,n⟩ |g,v+1,n−1⟩ | |e,v−1,m+1⟩ |e,v,m⟩ |e,v+1,m−1⟩
//! ```
//!
//! coupled by the linearized beam-splitter Hamiltonian and the x-ray drive.
//! Decoherence: excited states leak out of the truncated space at Γ, and
//! every coherence between distinct basis states dephases at κ + γ_m, so an
//! e–g coherence decays at s = Γ/2 + κ + γ_m and a g–g′ coherence at κ + γ_m.
//!
//! Energies are measured from the reference ground state |g,v,n⟩ and the
//! excited states sit at −Δ (rotating frame of the x-ray field), so the line
//! with m − n = d is resonant at Δ = d·ω_m.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::franck_condon;
use crate::optomech::DerivedOptomech;
use crate::spectrum::{self, CoherenceSet, FcSubstitution, SpectrumParams, SIDEBAND_WINDOW};

pub const DECOHERENCE_MODEL_ID: &str = "excited-loss-gamma+uniform-dephasing-kappa-gamma_m/v1";

/// Relative agreement required between the oracle and the analytic formula.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Ground,
    Excited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub level: Level,
    pub photons: u64,
    pub phonons: u64,
}

impl BasisState {
    fn new(level: Level, photons: u64, phonons: u64) -> Self {
        Self { level, photons, phonons }
    }

    pub fn is_excited(&self) -> bool {
        self.level == Level::Excited
    }
}

/// Up to three ground and three excited states; any state that would need a
/// negative occupation is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedBasis {
    pub n: u64,
    pub m: u64,
    pub v: u64,
    pub states: Vec<BasisState>,
}

impl TruncatedBasis {
    pub fn new(n: u64, m: u64, v: u64) -> Self {
        let mut states = Vec::with_capacity(6);
        for (level, phonons) in [(Level::Ground, n), (Level::Excited, m)] {
            if v >= 1 {
                states.push(BasisState::new(level, v - 1, phonons + 1));
            }
            states.push(BasisState::new(level, v, phonons));
            if phonons >= 1 {
                states.push(BasisState::new(level, v + 1, phonons - 1));
            }
        }
        Self { n, m, v, states }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Index of |g,v,n⟩.
    pub fn reference(&self) -> usize {
        self.index_of(&BasisState::new(Level::Ground, self.v, self.n)).expect("reference state is always present")
    }

    /// Index of |e,v,m⟩.
    pub fn drive_target(&self) -> usize {
        self.index_of(&BasisState::new(Level::Excited, self.v, self.m)).expect("drive target is always present")
    }

    fn indices(&self, level: Level) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().enumerate().filter(move |(_, s)| s.level == level).map(|(i, _)| i)
    }
}

/// Rates and couplings of the linearized model, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub omega_m: f64,
    /// Cavity detuning Δ_c entering −Δ_c a†a.
    pub laser_detuning: f64,
    pub g: f64,
    pub rabi: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub eta: f64,
}

impl OracleParams {
    pub fn from_derived(d: &DerivedOptomech) -> Self {
        Self {
            omega_m: d.omega_m,
            laser_detuning: d.effective_detuning,
            g: d.g,
            rabi: d.rabi,
            gamma: d.gamma,
            kappa: d.kappa,
            gamma_m: d.gamma_m,
            eta: d.eta,
        }
    }

    pub fn s(&self) -> f64 {
        self.gamma / 2.0 + self.kappa + self.gamma_m
    }

    /// The same physics expressed for the analytic formula, with the
    /// complex Franck-Condon coefficients kept.
    pub fn spectrum_params(&self) -> SpectrumParams {
        SpectrumParams {
            omega_m: self.omega_m,
            s: self.s(),
            gamma: self.gamma,
            g: self.g,
            rabi: self.rabi,
            eta: self.eta,
            substitution: FcSubstitution::None,
        }
    }

    pub fn decoherence(&self) -> DecoherenceModel {
        DecoherenceModel { excited_loss: self.gamma, dephasing: self.kappa + self.gamma_m }
    }

    /// s > G and G ≫ Ω (factor 10), Ω < s.
    pub fn perturbative(&self) -> bool {
        let s = self.s();
        s > self.g && self.rabi < s && (self.g == 0.0 || self.g >= 10.0 * self.rabi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceModel {
    /// Population loss of excited states, Γ.
    pub excited_loss: f64,
    /// Dephasing of every coherence between distinct states, κ + γ_m.
    pub dephasing: f64,
}

impl DecoherenceModel {
    pub fn none() -> Self {
        Self { excited_loss: 0.0, dephasing: 0.0 }
    }

    /// Decay rate of ρ_ij.
    pub fn rate(&self, a: &BasisState, b: &BasisState) -> f64 {
        let loss = |s: &BasisState| if s.is_excited() { self.excited_loss } else { 0.0 };
        let dephase = if a == b { 0.0 } else { self.dephasing };
        0.5 * (loss(a) + loss(b)) + dephase
    }

    fn rates(&self, basis: &TruncatedBasis) -> DMatrix<f64> {
        let d = basis.dim();
        DMatrix::from_fn(d, d, |i, j| self.rate(&basis.states[i], &basis.states[j]))
    }
}

/// The 6×6 (or smaller) Hamiltonian in units of ħ.
pub fn build_hamiltonian(basis: &TruncatedBasis, params: &OracleParams, delta: f64) -> DMatrix<Complex64> {
    let dim = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let (n, v) = (basis.n as i64, basis.v as i64);
    for (i, st) in basis.states.iter().enumerate() {
        // integer offsets from the reference keep the diagonal exact for n ~ 10⁶
        let dphonon = (st.phonons as i64 - n) as f64;
        let dphoton = (st.photons as i64 - v) as f64;
        let mut e = params.omega_m * dphonon - params.laser_detuning * dphoton;
        if st.is_excited() {
            e -= delta;
        }
        h[(i, i)] = Complex64::new(e, 0.0);
    }
    for (i, a) in basis.states.iter().enumerate() {
        for (j, b) in basis.states.iter().enumerate() {
            // ⟨c+1, μ−1| a†b |c, μ⟩ = √((c+1)μ)
            if a.level == b.level && b.photons == a.photons + 1 && b.phonons + 1 == a.phonons {
                let amp = -params.g * (((a.photons + 1) * a.phonons) as f64).sqrt();
                h[(j, i)] = Complex64::new(amp, 0.0);
                h[(i, j)] = Complex64::new(amp, 0.0);
            }
            if a.level == Level::Ground && b.level == Level::Excited && a.photons == b.photons {
                let f = franck_condon::coefficient(b.phonons, a.phonons, params.eta)
                    .map(|c| c.value())
                    .unwrap_or_default();
                let coupling = -0.5 * params.rabi * f;
                h[(j, i)] = coupling;
                h[(i, j)] = coupling.conj();
            }
        }
    }
    h
}

/// How the ground manifold is treated in the weak-drive closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundClosure {
    /// Ground state pinned to |g,v,n⟩⟨g,v,n|; ground beam-splitter ignored.
    #[default]
    Frozen,
    /// Ground populations pinned, but the beam-splitter-induced ground
    /// coherences ρ_{g′,g} are kept at their zeroth-order steady state and
    /// feed the drive; their back-action on e–g coherences is dropped.
    RamanSource,
}

impl GroundClosure {
    pub fn as_str(self) -> &'static str {
        match self {
            GroundClosure::Frozen => "frozen",
            GroundClosure::RamanSource => "raman_source",
        }
    }
}

/// Steady-state coherences ρ_{e_j, g_ref} for every excited state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub basis: TruncatedBasis,
    pub closure: GroundClosure,
    pub excited: Vec<(BasisState, Complex64)>,
    /// Ground coherences ρ_{g_k, g_ref} used as sources (empty when frozen).
    pub ground: Vec<(BasisState, Complex64)>,
}

impl OracleSolution {
    /// ⟨e,v,m|ρ|g,v,n⟩, the coherence the analytic formula describes.
    pub fn target(&self) -> Complex64 {
        let target = BasisState::new(Level::Excited, self.basis.v, self.basis.m);
        self.excited.iter().find(|(s, _)| *s == target).map(|(_, c)| *c).expect("target present")
    }
}

fn solve(a: DMatrix<Complex64>, b: DVector<Complex64>) -> Result<DVector<Complex64>> {
    a.lu().solve(&b).ok_or_else(|| Error::Numerical("singular steady-state system".into()))
}

pub fn steady_state_solve(
    basis: &TruncatedBasis,
    params: &OracleParams,
    delta: f64,
    closure: GroundClosure,
) -> Result<OracleSolution> {
    let h = build_hamiltonian(basis, params, delta);
    let model = params.decoherence();
    let r = basis.reference();
    let href = h[(r, r)];
    let ground: Vec<usize> = basis.indices(Level::Ground).filter(|&k| k != r).collect();
    let excited: Vec<usize> = basis.indices(Level::Excited).collect();
    let i = Complex64::i();

    let ground_coh = match closure {
        GroundClosure::Frozen => vec![Complex64::new(0.0, 0.0); ground.len()],
        GroundClosure::RamanSource if ground.is_empty() => Vec::new(),
        GroundClosure::RamanSource => {
            let a = DMatrix::from_fn(ground.len(), ground.len(), |p, q| {
                let (k, kk) = (ground[p], ground[q]);
                let mut x = h[(k, kk)];
                if p == q {
                    x -= href + i * model.rate(&basis.states[k], &basis.states[r]);
                }
                x
            });
            let b = DVector::from_fn(ground.len(), |p, _| -h[(ground[p], r)]);
            solve(a, b)?.iter().copied().collect()
        }
    };

    let a = DMatrix::from_fn(excited.len(), excited.len(), |p, q| {
        let (e, ee) = (excited[p], excited[q]);
        let mut x = h[(e, ee)];
        if p == q {
            x -= href + i * model.rate(&basis.states[e], &basis.states[r]);
        }
        x
    });
    let b = DVector::from_fn(excited.len(), |p, _| {
        let e = excited[p];
        let source: Complex64 = ground.iter().zip(&ground_coh).map(|(&k, y)| h[(e, k)] * y).sum();
        -h[(e, r)] - source
    });
    let x = solve(a, b)?;

    Ok(OracleSolution {
        basis: basis.clone(),
        closure,
        excited: excited.iter().zip(x.iter()).map(|(&e, c)| (basis.states[e], *c)).collect(),
        ground: ground.iter().zip(ground_coh).map(|(&k, c)| (basis.states[k], c)).collect(),
    })
}

/// Oracle coherences ⟨e,v,n+d|ρ|g,v,n⟩ over the sideband window.
pub fn oracle_coherence_set(
    n: u64,
    v: u64,
    delta: f64,
    params: &OracleParams,
    closure: GroundClosure,
) -> Result<CoherenceSet> {
    let mut entries = BTreeMap::new();
    for d in -SIDEBAND_WINDOW..=SIDEBAND_WINDOW {
        let m = n as i64 + d;
        if m < 0 {
            continue;
        }
        let basis = TruncatedBasis::new(n, m as u64, v);
        entries.insert(d, steady_state_solve(&basis, params, delta, closure)?.target());
    }
    Ok(CoherenceSet { base_n: n, detuning: delta, entries })
}

/// A density matrix on a [`TruncatedBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub DMatrix<Complex64>);

impl DensityMatrix {
    pub fn pure(dim: usize, index: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Self {
        let psi = DVector::from_column_slice(amplitudes);
        Self(&psi * psi.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ⟨H⟩ = Re tr(Hρ).
    pub fn expectation(&self, h: &DMatrix<Complex64>) -> f64 {
        (h * &self.0).trace().re
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }
}

/// Which couplings the time evolution keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundDynamics {
    /// Full Hamiltonian including the ground-block beam splitter.
    #[default]
    Full,
    /// Ground-block beam splitter removed, matching [`GroundClosure::Frozen`].
    Frozen,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

/// Largest step accepted by [`time_evolve`].
pub fn max_step(basis: &TruncatedBasis, params: &OracleParams, h: &DMatrix<Complex64>) -> f64 {
    let _ = basis;
    let element = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fastest = [params.omega_m, params.laser_detuning.abs(), params.s(), params.g, params.rabi, element]
        .into_iter()
        .fold(0.0, f64::max);
    0.05 / fastest
}

pub struct Evolution {
    pub h: DMatrix<Complex64>,
    rates: DMatrix<f64>,
}

impl Evolution {
    pub fn new(basis: &TruncatedBasis, params: &OracleParams, delta: f64, dynamics: GroundDynamics, model: DecoherenceModel) -> Self {
        let mut h = build_hamiltonian(basis, params, delta);
        if dynamics == GroundDynamics::Frozen {
            let ground: Vec<usize> = basis.indices(Level::Ground).collect();
            for &a in &ground {
                for &b in &ground {
                    if a != b {
                        h[(a, b)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        Self { h, rates: model.rates(basis) }
    }

    /// dρ/dt = −i[H, ρ] − rate_ij ρ_ij.
    pub fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let commutator = &self.h * rho - rho * &self.h;
        let mut out = commutator * Complex64::new(0.0, -1.0);
        for (o, (r, rate)) in out.iter_mut().zip(rho.iter().zip(self.rates.iter())) {
            *o -= r * *rate;
        }
        out
    }

    pub fn step(&self, rho: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
        let half = Complex64::new(0.5 * dt, 0.0);
        let full = Complex64::new(dt, 0.0);
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(rho + &k1 * half));
        let k3 = self.rhs(&(rho + &k2 * half));
        let k4 = self.rhs(&(rho + &k3 * full));
        rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0)
    }
}

/// Fixed-step RK4 integration of the master equation.
///
/// `record_every` controls how many steps pass between stored states; the
/// final state is always stored.
#[allow(clippy::too_many_arguments)]
pub fn time_evolve(
    rho0: &DensityMatrix,
    basis: &TruncatedBasis,
    params: &OracleParams,
    delta: f64,
    t_end: f64,
    dt: f64,
    dynamics: GroundDynamics,
    record_every: usize,
) -> Result<Trajectory> {
    time_evolve_with(rho0, basis, params, delta, t_end, dt, dynamics, params.decoherence(), record_every)
}

#[allow(clippy::too_many_arguments)]
pub fn time_evolve_with(
    rho0: &DensityMatrix,
    basis: &TruncatedBasis,
    params: &OracleParams,
    delta: f64,
    t_end: f64,
    dt: f64,
    dynamics: GroundDynamics,
    model: DecoherenceModel,
    record_every: usize,
) -> Result<Trajectory> {
    if rho0.0.nrows() != basis.dim() || rho0.0.ncols() != basis.dim() {
        return Err(Error::Input(format!("initial state is {}x{}, basis has {} states", rho0.0.nrows(), rho0.0.ncols(), basis.dim())));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::domain("t_end must be non-negative", t_end));
    }
    let evolution = Evolution::new(basis, params, delta, dynamics, model);
    let limit = max_step(basis, params, &evolution.h);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::Input(format!("time step {dt:e} s does not resolve the fastest scale (need <= {limit:e} s)")));
    }
    let steps = (t_end / dt).round() as usize;
    let every = record_every.max(1);
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rho = rho0.0.clone();
    for k in 1..=steps {
        rho = evolution.step(&rho, dt);
        if k % every == 0 || k == steps {
            times.push(k as f64 * dt);
            states.push(DensityMatrix(rho.clone()));
        }
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRegime {
    pub perturbative: bool,
    pub rabi_over_g: f64,
    pub g_over_s: f64,
    /// The analytic coherences keep G²m only, i.e. the v = 0 couplings.
    pub matched_truncation: bool,
}

/// Machine-readable comparison between the analytic formula and the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub decoherence_model_id: String,
    pub closure: GroundClosure,
    pub n: u64,
    pub v: u64,
    pub grid: Vec<f64>,
    pub per_offset_max_rel_err: BTreeMap<i64, f64>,
    pub per_offset_median_rel_err: BTreeMap<i64, f64>,
    pub global_max: f64,
    pub global_median: f64,
    /// Largest |ΔA| of the |F|-substituted absorption relative to the
    /// analytic peak absorption on the grid.
    pub absorption_max_rel_err: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub regime_flags: OracleRegime,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

pub fn compare_with_analytic(
    params: &OracleParams,
    n: u64,
    v: u64,
    grid: &[f64],
    closure: GroundClosure,
) -> Result<DiscrepancyReport> {
    let analytic = params.spectrum_params();
    let mut per_offset: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut abs_err: f64 = 0.0;
    let mut abs_peak: f64 = 0.0;
    for &delta in grid {
        let exact = spectrum::coherence_set(n, delta, &analytic)?;
        let oracle = oracle_coherence_set(n, v, delta, params, closure)?;
        let (mut a_sum, mut o_sum) = (0.0, 0.0);
        for (d, a) in &exact.entries {
            let o = oracle.entries[d];
            let err = (a - o).norm() / a.norm().max(f64::MIN_POSITIVE);
            per_offset.entry(*d).or_default().push(err);
            // |F| substitution: every coefficient for offset d carries the same phase i^d
            let unphase = franck_condon::quarter_turn(d.unsigned_abs()).conj();
            a_sum += (a * unphase).im;
            o_sum += (o * unphase).im;
        }
        abs_err = abs_err.max((a_sum - o_sum).abs());
        abs_peak = abs_peak.max(a_sum.abs());
    }
    let all: Vec<f64> = per_offset.values().flatten().copied().collect();
    let global_max = all.iter().copied().fold(0.0, f64::max);
    let s = params.s();
    Ok(DiscrepancyReport {
        decoherence_model_id: DECOHERENCE_MODEL_ID.to_string(),
        closure,
        n,
        v,
        grid: grid.to_vec(),
        per_offset_max_rel_err: per_offset.iter().map(|(d, e)| (*d, e.iter().copied().fold(0.0, f64::max))).collect(),
        per_offset_median_rel_err: per_offset.iter().map(|(d, e)| (*d, median(e.clone()))).collect(),
        global_max,
        global_median: median(all),
        absorption_max_rel_err: if abs_peak > 0.0 { abs_err / abs_peak } else { 0.0 },
        tolerance: EQUIVALENCE_TOLERANCE,
        within_tolerance: global_max < EQUIVALENCE_TOLERANCE,
        regime_flags: OracleRegime {
            perturbative: params.perturbative(),
            rabi_over_g: if params.g > 0.0 { params.rabi / params.g } else { f64::INFINITY },
            g_over_s: params.g / s,
            matched_truncation: v == 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    const N: u64 = 5_000_000;

    fn zinc(g: f64) -> OracleParams {
        OracleParams {
            omega_m: TAU * 0.95e6,
            laser_detuning: -TAU * 0.95e6,
            g,
            rabi: 1e-3 * g.max(1.0),
            gamma: TAU * 0.08e6,
            kappa: TAU * 0.2e6,
            gamma_m: TAU * 140.0,
            eta: 1.1878e-4,
        }
    }

    #[test]
    fn basis_shrinks_at_boundaries() {
        assert_eq!(TruncatedBasis::new(5, 6, 3).dim(), 6);
        let b = TruncatedBasis::new(0, 0, 0);
        assert_eq!(b.dim(), 2);
        assert_eq!(b.reference(), 0);
        assert_eq!(b.drive_target(), 1);
        let b = TruncatedBasis::new(4, 4, 0);
        assert_eq!(b.dim(), 4);
        assert!(b.states.iter().filter(|s| s.is_excited()).count() <= 3);
    }

    #[test]
    fn uncoupled_undriven_is_diagonal() {
        let p = OracleParams { rabi: 0.0, ..zinc(0.0) };
        let h = build_hamiltonian(&TruncatedBasis::new(N, N + 2, 4), &p, 3e5);
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if i != j {
                    assert_eq!(h[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        for (n, m, v) in [(N, N + 3, 7), (0, 2, 0), (3, 0, 1), (10, 9, 2)] {
            let h = build_hamiltonian(&TruncatedBasis::new(n, m, v), &zinc(700.0), 1.2e6);
            assert_eq!(h, h.adjoint());
        }
    }

    /// Dense ladder operators on photons ≤ 3 ⊗ phonons ≤ 11.
    fn ladder_matrix_element(c: u64, mu: u64, c2: u64, mu2: u64) -> f64 {
        let (np, nm) = (4usize, 12usize);
        let lower = |dim: usize| DMatrix::<f64>::from_fn(dim, dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 });
        let (a, b) = (lower(np), lower(nm));
        let a_full = a.kronecker(&DMatrix::identity(nm, nm));
        let b_full = DMatrix::identity(np, np).kronecker(&b);
        let op = a_full.transpose() * &b_full + &a_full * b_full.transpose();
        let idx = |c: u64, mu: u64| c as usize * nm + mu as usize;
        op[(idx(c2, mu2), idx(c, mu))]
    }

    #[test]
    fn beam_splitter_elements_match_ladder_operators() {
        let p = zinc(3.0);
        for n in 1..=10u64 {
            for v in 0..=2u64 {
                let basis = TruncatedBasis::new(n, n, v);
                let h = build_hamiltonian(&basis, &p, 0.0);
                for (i, a) in basis.states.iter().enumerate() {
                    for (j, b) in basis.states.iter().enumerate() {
                        if a.level != b.level || i == j {
                            continue;
                        }
                        let expected = -p.g * ladder_matrix_element(a.photons, a.phonons, b.photons, b.phonons);
                        assert_relative_eq!(h[(j, i)].re, expected, max_relative = 1e-14);
                    }
                }
                let e = basis.drive_target();
                let plus = basis.index_of(&BasisState::new(Level::Excited, v + 1, n - 1)).unwrap();
                assert_relative_eq!(h[(plus, e)].norm(), p.g * (((v + 1) * n) as f64).sqrt(), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn uncoupled_solve_matches_reduction() {
        let p = zinc(0.0);
        let sp = p.spectrum_params();
        for d in -6i64..=6 {
            for delta in [-1e7, 0.0, 3.3e6, d as f64 * p.omega_m] {
                let m = (N as i64 + d) as u64;
                let o = steady_state_solve(&TruncatedBasis::new(N, m, 0), &p, delta, GroundClosure::Frozen).unwrap().target();
                let a = spectrum::steady_state_coherence(m, N, delta, &sp).unwrap();
                assert!((a - o).norm() <= 1e-12 * a.norm(), "d={d} delta={delta}: {a} vs {o}");
            }
        }
    }

    #[test]
    fn zero_drive_gives_zero_coherence() {
        let p = OracleParams { rabi: 0.0, ..zinc(600.0) };
        let set = oracle_coherence_set(N, 0, 1e5, &p, GroundClosure::RamanSource).unwrap();
        assert!(set.entries.values().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn raman_closure_reproduces_analytic_formula() {
        for g in [100.0, 630.0, 1000.0] {
            let p = zinc(g);
            let grid: Vec<f64> = (0..41).map(|k| (k as f64 - 20.0) * 0.15 * p.omega_m).collect();
            let r = compare_with_analytic(&p, N, 0, &grid, GroundClosure::RamanSource).unwrap();
            assert!(r.global_max < 1e-9, "g={g}: {}", r.global_max);
            assert!(r.within_tolerance);
        }
    }

    #[test]
    fn frozen_closure_misses_cross_term() {
        let p = zinc(630.0);
        let grid = [0.0, 0.3 * p.omega_m];
        let r = compare_with_analytic(&p, N, 0, &grid, GroundClosure::Frozen).unwrap();
        assert!(!r.within_tolerance);
        assert!(r.per_offset_max_rel_err[&0] > 0.1);
        assert!(r.regime_flags.perturbative);
        // the gap is exactly the −2iG²F^{m−1}_{n−1}√(mn) pathway
        let sp = p.spectrum_params();
        let a = spectrum::steady_state_coherence(N, N, 0.0, &sp).unwrap();
        let s = sp.s;
        let x = Complex64::new(s, 0.0);
        let cross = Complex64::i() * p.rabi * 2.0 * p.g * p.g * N as f64 / (2.0 * (2.0 * s - sp.gamma) * (x * x + p.g * p.g * N as f64));
        let o = steady_state_solve(&TruncatedBasis::new(N, N, 0), &p, 0.0, GroundClosure::Frozen).unwrap().target();
        assert!((a + cross - o).norm() < 1e-9 * a.norm(), "{a} {o} {cross}");
    }

    #[test]
    fn regime_violation_is_flagged() {
        let p = OracleParams { rabi: 0.5 * 630.0, ..zinc(630.0) };
        let r = compare_with_analytic(&p, N, 0, &[0.0], GroundClosure::Frozen).unwrap();
        assert!(!r.regime_flags.perturbative);
    }

    #[test]
    fn report_serializes_required_fields() {
        let p = zinc(630.0);
        let r = compare_with_analytic(&p, N, 0, &[0.0, 1e6], GroundClosure::RamanSource).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["grid", "per_offset_max_rel_err", "global_max", "regime_flags", "decoherence_model_id"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn truncation_boundary_agrees() {
        // n = 0: no (g, v+1, n−1) state and no √(mn) pathway on either side
        let p = zinc(800.0);
        for closure in [GroundClosure::Frozen, GroundClosure::RamanSource] {
            for m in 0..=6u64 {
                let basis = TruncatedBasis::new(0, m, 0);
                assert!(basis.index_of(&BasisState::new(Level::Ground, 1, 0)).is_none());
                let o = steady_state_solve(&basis, &p, 2e5, closure).unwrap().target();
                let a = spectrum::steady_state_coherence(m, 0, 2e5, &p.spectrum_params()).unwrap();
                assert!((a - o).norm() <= 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn coherence_decays_at_s() {
        let p = OracleParams { rabi: 0.0, ..zinc(0.0) };
        let basis = TruncatedBasis::new(N, N, 0);
        let (g, e) = (basis.reference(), basis.drive_target());
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[g] = Complex64::new(0.6, 0.0);
        amps[e] = Complex64::new(0.8, 0.0);
        let rho0 = DensityMatrix::from_amplitudes(&amps);
        let dt = 2e-9;
        let traj = time_evolve(&rho0, &basis, &p, 0.0, 2e-6, dt, GroundDynamics::Full, 1000).unwrap();
        let t = *traj.times.last().unwrap();
        let expected = 0.48 * (-p.s() * t).exp();
        assert_relative_eq!(traj.last().get(e, g).re, expected, max_relative = 1e-8);
    }

    #[test]
    fn step_size_is_checked() {
        let p = zinc(630.0);
        let basis = TruncatedBasis::new(N, N, 0);
        let rho0 = DensityMatrix::pure(basis.dim(), basis.reference());
        assert!(time_evolve(&rho0, &basis, &p, 0.0, 1e-6, 1e-6, GroundDynamics::Full, 1).is_err());
    }

    #[test]
    fn long_time_limit_is_the_steady_state() {
        let p = zinc(630.0);
        for d in [0i64, 1, -2] {
            let m = (N as i64 + d) as u64;
            let basis = TruncatedBasis::new(N, m, 0);
            let delta = d as f64 * p.omega_m + 2e5;
            let h = build_hamiltonian(&basis, &p, delta);
            let dt = 0.5 * max_step(&basis, &p, &h);
            let rho0 = DensityMatrix::pure(basis.dim(), basis.reference());
            let traj = time_evolve(&rho0, &basis, &p, delta, 30.0 / p.s(), dt, GroundDynamics::Frozen, usize::MAX).unwrap();
            let solved = steady_state_solve(&basis, &p, delta, GroundClosure::Frozen).unwrap();
            let r = basis.reference();
            for (state, c) in &solved.excited {
                let i = basis.index_of(state).unwrap();
                let got = traj.last().get(i, r);
                assert!((got - c).norm() <= 1e-5 * solved.target().norm(), "d={d} {state:?}: {got} vs {c}");
            }
        }
    }

    #[test]
    fn closed_ground_dynamics_match_matrix_exponential() {
        let p = OracleParams { rabi: 0.0, gamma: 0.0, kappa: 0.0, gamma_m: 0.0, ..zinc(630.0) };
        let basis = TruncatedBasis::new(N, N, 1);
        let rho0 = DensityMatrix::pure(basis.dim(), basis.reference());
        let h = build_hamiltonian(&basis, &p, 0.0);
        let dt = 0.2 * max_step(&basis, &p, &h);
        let t_end = 2000.0 * dt;
        let traj = time_evolve(&rho0, &basis, &p, 0.0, t_end, dt, GroundDynamics::Full, 500).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let u = (&h * Complex64::new(0.0, -t)).exp();
            let exact = &u * &rho0.0 * u.adjoint();
            let err = (&rho.0 - &exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "t={t}: {err}");
        }
        // population actually leaves |g,v,n⟩
        let r = basis.reference();
        let min_pop = traj.states.iter().map(|s| s.get(r, r).re).fold(1.0, f64::min);
        assert!(min_pop < 0.5);
    }

    #[test]
    fn closed_dynamics_conserve_trace_and_energy() {
        let p = zinc(630.0);
        let basis = TruncatedBasis::new(N, N + 1, 2);
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[basis.reference()] = Complex64::new(0.8, 0.0);
        amps[basis.drive_target()] = Complex64::new(0.0, 0.6);
        let rho0 = DensityMatrix::from_amplitudes(&amps);
        let h = build_hamiltonian(&basis, &p, 4e5);
        let dt = max_step(&basis, &p, &h);
        let traj = time_evolve_with(&rho0, &basis, &p, 4e5, 10_000.0 * dt, dt, GroundDynamics::Full, DecoherenceModel::none(), 10_000)
            .unwrap();
        let last = traj.last();
        assert!((last.trace() - rho0.trace()).norm() < 1e-10);
        let e0 = rho0.expectation(&h);
        assert!((last.expectation(&h) - e0).abs() <= 1e-8 * e0.abs().max(1.0));
        assert!(last.hermiticity_error() < 1e-10);
    }

    #[test]
    fn damped_trajectory_stays_physical() {
        let p = OracleParams { rabi: 2e4, ..zinc(630.0) };
        let basis = TruncatedBasis::new(N, N, 1);
        let rho0 = DensityMatrix::pure(basis.dim(), basis.reference());
        let h = build_hamiltonian(&basis, &p, 0.0);
        let dt = max_step(&basis, &p, &h);
        let traj = time_evolve(&rho0, &basis, &p, 0.0, 3000.0 * dt, dt, GroundDynamics::Full, 50).unwrap();
        let mut prev = 1.0 + 1e-12;
        for rho in &traj.states {
            assert!(rho.hermiticity_error() < 1e-10);
            let tr = rho.trace().re;
            assert!(tr <= prev + 1e-12 && tr >= 0.0);
            assert!(rho.min_eigenvalue() > -1e-10);
            prev = tr;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn solve_is_linear_in_rabi(delta in -2e7f64..2e7, d in -6i64..=6, scale in 0.1f64..10.0) {
            let p = zinc(630.0);
            let q = OracleParams { rabi: p.rabi * scale, ..p };
            let m = (N as i64 + d) as u64;
            let basis = TruncatedBasis::new(N, m, 1);
            for closure in [GroundClosure::Frozen, GroundClosure::RamanSource] {
                let a = steady_state_solve(&basis, &p, delta, closure).unwrap();
                let b = steady_state_solve(&basis, &q, delta, closure).unwrap();
                for ((_, x), (_, y)) in a.excited.iter().zip(&b.excited) {
                    prop_assert!((x * scale - y).norm() <= 1e-12 * (x * scale).norm().max(1e-300));
                }
            }
        }
    }
}
