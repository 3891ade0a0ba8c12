//! Square-pulse drive: exact one-period evolution operator, quasienergies,
//! and stroboscopic dynamics of the correlator
//! `ΔC = Σ_j (σᶻ_j σᶻ_{j+1} - σʸ_j σʸ_{j+1})`.
//!
//! The field is `h = -h0` on the first half period and `+h0` on the second,
//! so `U(T, 0) = exp(-i H_second T/2) exp(-i H_first T/2)` with
//! `H_first = +h0 Σσˣ + H_1`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{BasisTag, StateVector};
use crate::hilbert::{bond_correlator, total_sx, Axis, OperatorMatrix, SpinBasis, SymmetricSector};
use crate::models::segment_hamiltonians;
use crate::spectra::diagonalize;
use crate::C64;

pub const UNITARITY_TOL: f64 = 1e-10;
/// Accumulated norm error that aborts a stroboscopic run.
pub const STROBOSCOPIC_DRIFT_TOL: f64 = 1e-6;
/// Phases this close to `±π` make the principal logarithm ambiguous.
pub const BRANCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriveConfig {
    pub h0: f64,
    pub omega_d: f64,
    pub v0: f64,
    /// Set when `ω_D = h0 / p`.
    pub p_special: Option<u32>,
}

impl DriveConfig {
    pub fn new(h0: f64, omega_d: f64, v0: f64) -> Result<Self> {
        if !(h0 > 0.0) || !h0.is_finite() {
            return Err(Error::Config(format!("h0 must be positive, got {h0}")));
        }
        if !(omega_d > 0.0) || !omega_d.is_finite() {
            return Err(Error::Config(format!("drive frequency must be positive, got {omega_d}")));
        }
        if !v0.is_finite() {
            return Err(Error::Config(format!("V0 must be finite, got {v0}")));
        }
        Ok(DriveConfig {
            h0,
            omega_d,
            v0,
            p_special: None,
        })
    }

    /// Drive at the special frequency `ω_p* = h0 / p`.
    pub fn special(h0: f64, v0: f64, p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("special-frequency index p must be at least 1".into()));
        }
        let mut d = Self::new(h0, h0 / p as f64, v0)?;
        d.p_special = Some(p);
        Ok(d)
    }

    /// Drive with `h0 / ω_D` fixed.
    pub fn with_ratio(h0: f64, h0_over_omega: f64, v0: f64) -> Result<Self> {
        if !(h0_over_omega > 0.0) {
            return Err(Error::Config(format!("h0/omega must be positive, got {h0_over_omega}")));
        }
        Self::new(h0, h0 / h0_over_omega, v0)
    }

    /// `T = 2π / ω_D`; at a special frequency it is computed as `2πp / h0`
    /// so that `h0 T = 2πp` to rounding.
    pub fn period(&self) -> f64 {
        match self.p_special {
            Some(p) => 2.0 * PI * p as f64 / self.h0,
            None => 2.0 * PI / self.omega_d,
        }
    }

    pub fn with_v0(&self, v0: f64) -> Self {
        DriveConfig { v0, ..*self }
    }
}

/// `ω_p* = h0 / p` for `p = 1..=p_max`.
pub fn special_frequencies(h0: f64, p_max: u32) -> Vec<(u32, f64)> {
    (1..=p_max).map(|p| (p, h0 / p as f64)).collect()
}

#[derive(Clone, Debug)]
pub struct FloquetOperator {
    u: DMatrix<C64>,
    period: f64,
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.ad_mul(u);
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

impl FloquetOperator {
    pub fn new(u: DMatrix<C64>, period: f64) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: u.ncols(),
            });
        }
        let defect = unitarity_defect(&u);
        if !(defect < UNITARITY_TOL) {
            return Err(Error::NonUnitary { defect });
        }
        Ok(FloquetOperator { u, period })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        &self.u * psi
    }
}

/// `exp(-i H t)` as a dense matrix.
pub fn dense_exponential(h: &OperatorMatrix, t: f64) -> Result<DMatrix<C64>> {
    let es = diagonalize(h)?;
    let v = es.vectors().to_complex();
    let phases: Vec<C64> = es.values().iter().map(|&e| C64::new(0.0, -e * t).exp()).collect();
    let mut scaled = v.clone();
    for (c, ph) in phases.iter().enumerate() {
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= ph;
        }
    }
    Ok(scaled * v.adjoint())
}

/// `U = exp(-i H_second T/2) exp(-i H_first T/2)`.
pub fn build_floquet(h_first: &OperatorMatrix, h_second: &OperatorMatrix, period: f64) -> Result<FloquetOperator> {
    if h_first.dim() != h_second.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_first.dim(),
            found: h_second.dim(),
        });
    }
    if !(period > 0.0) {
        return Err(Error::Config(format!("period must be positive, got {period}")));
    }
    let u1 = dense_exponential(h_first, period / 2.0)?;
    let u2 = dense_exponential(h_second, period / 2.0)?;
    FloquetOperator::new(u2 * u1, period)
}

/// Floquet operator of the chain on the full `2^L` space.
pub fn drive_operator(basis: &SpinBasis, drive: &DriveConfig) -> Result<FloquetOperator> {
    let (a, b) = segment_hamiltonians(basis, drive.h0, drive.v0)?;
    build_floquet(&a, &b, drive.period())
}

#[derive(Clone, Debug)]
pub struct QuasiSpectrum {
    /// `θ = arg λ` in `(-π, π]`.
    pub phases: Vec<f64>,
    /// `-θ / T`.
    pub quasienergies: Vec<f64>,
    /// `-arccos(Re λ) / T`, which forgets the sign of `θ`.
    pub arccos_quasienergies: Vec<f64>,
    /// Column `α` is the eigenvector of `λ_α`.
    pub eigenvectors: DMatrix<C64>,
    /// Set when some phase lies within [`BRANCH_TOL`] of `±π`.
    pub branch_warning: bool,
}

/// Eigen-decomposition of a unitary via the complex Schur form, which is
/// diagonal for normal matrices.
pub fn quasienergies(u: &FloquetOperator) -> Result<QuasiSpectrum> {
    let n = u.dim();
    let schur = nalgebra::Schur::try_new(u.u.clone(), 1e-15, 10_000 * n.max(1))
        .ok_or_else(|| Error::Config("Schur decomposition of the Floquet operator did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut phases = Vec::with_capacity(n);
    for k in 0..n {
        let lam = t[(k, k)];
        let mut th = lam.arg();
        if th <= -PI {
            th += 2.0 * PI;
        }
        phases.push(th);
    }
    let period = u.period;
    let branch_warning = phases.iter().any(|&th| PI - th.abs() < BRANCH_TOL);
    let quasienergies = phases.iter().map(|&th| -th / period).collect();
    let arccos_quasienergies = (0..n)
        .map(|k| -(t[(k, k)].re.clamp(-1.0, 1.0)).acos() / period)
        .collect();
    Ok(QuasiSpectrum {
        phases,
        quasienergies,
        arccos_quasienergies,
        eigenvectors: q,
        branch_warning,
    })
}

impl QuasiSpectrum {
    /// `max_α |U v_α - e^{iθ_α} v_α|`.
    pub fn residual(&self, u: &FloquetOperator) -> f64 {
        let uv = &u.u * &self.eigenvectors;
        let mut worst = 0.0f64;
        for (k, &th) in self.phases.iter().enumerate() {
            let lam = C64::new(0.0, th).exp();
            let d = uv.column(k) - self.eigenvectors.column(k) * lam;
            worst = worst.max(d.camax());
        }
        worst
    }

    /// `H_F = (i/T) log U = -(1/T) Σ_α θ_α |v_α⟩⟨v_α|`.
    pub fn floquet_hamiltonian(&self, period: f64) -> DMatrix<C64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (c, &th) in self.phases.iter().enumerate() {
            for r in 0..scaled.nrows() {
                scaled[(r, c)] *= -th / period;
            }
        }
        let h = scaled * v.adjoint();
        (&h + h.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Largest circular distance in an optimal pairing of two phase multisets,
/// or `None` when the sizes differ.
pub fn phase_multiset_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let wrap = |x: f64| x.rem_euclid(2.0 * PI);
    let mut x: Vec<f64> = a.iter().map(|&v| wrap(v)).collect();
    let mut y: Vec<f64> = b.iter().map(|&v| wrap(v)).collect();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let n = x.len();
    if n == 0 {
        return Some(0.0);
    }
    let circ = |p: f64, q: f64| {
        let d = (p - q).abs();
        d.min(2.0 * PI - d)
    };
    // sorted circular lists pair up under some rotation; small shifts suffice
    // because points near 0 and 2π may swap ends
    let mut best = f64::INFINITY;
    for shift in [0usize, 1, 2, n - 1, n - 2]
        .into_iter()
        .filter(|&s| s < n)
    {
        let worst = (0..n).map(|i| circ(x[i], y[(i + shift) % n])).fold(0.0, f64::max);
        best = best.min(worst);
    }
    Some(best)
}

/// Normalized `cos θ |+⟩^L + sin θ |↑⟩^L`.
pub fn initial_state(basis: &SpinBasis, theta: f64) -> Result<StateVector> {
    if !(0.0..=PI / 2.0 + 1e-15).contains(&theta) {
        return Err(Error::Config(format!("initial-state angle must lie in [0, π/2], got {theta}")));
    }
    let n = basis.dim();
    let plus = 1.0 / (n as f64).sqrt();
    let mut amps = DVector::from_element(n, C64::new(theta.cos() * plus, 0.0));
    amps[n - 1] += C64::new(theta.sin(), 0.0);
    StateVector::normalized(amps, BasisTag::Full { sites: basis.sites() })
}

/// `Σ_j (σᶻ_j σᶻ_{j+1} - σʸ_j σʸ_{j+1})`.
pub fn delta_c_operator(basis: &SpinBasis) -> OperatorMatrix {
    let zz = bond_correlator(basis, Axis::Z);
    let yy = bond_correlator(basis, Axis::Y);
    (&zz - &yy).tagged_hermitian().expect("difference of Hermitian operators")
}

/// `⟨ψ| C_zz - C_yy |ψ⟩` for a state on the full space.
pub fn delta_c(basis: &SpinBasis, psi: &StateVector) -> Result<f64> {
    Ok(psi.expectation(&delta_c_operator(basis)).re)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StroboscopicTrace {
    pub m: Vec<usize>,
    pub delta_c: Vec<f64>,
    /// `⟨Σσˣ⟩` at the same times.
    pub sx: Vec<f64>,
    pub max_norm_drift: f64,
}

impl StroboscopicTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,delta_c,sx")?;
        for k in 0..self.m.len() {
            writeln!(w, "{},{:.12e},{:.12e}", self.m[k], self.delta_c[k], self.sx[k])?;
        }
        Ok(())
    }

    /// `max_m |ΔC(mT)|`.
    pub fn band(&self) -> f64 {
        self.delta_c.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max ΔC - min ΔC` over the trace.
    pub fn peak_to_peak(&self) -> f64 {
        let hi = self.delta_c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.delta_c.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Observables recorded by [`stroboscopic_run`], in the space of the state.
#[derive(Clone, Debug)]
pub struct DriveObservables {
    pub delta_c: OperatorMatrix,
    pub sx: OperatorMatrix,
}

impl DriveObservables {
    pub fn full(basis: &SpinBasis) -> Self {
        DriveObservables {
            delta_c: delta_c_operator(basis),
            sx: total_sx(basis),
        }
    }
}

fn real_expectation(op: &OperatorMatrix, psi: &DVector<C64>) -> Result<f64> {
    let v = op.expectation(psi);
    if v.im.abs() > 1e-10 * (1.0 + v.re.abs()) {
        return Err(Error::NotHermitian { defect: v.im.abs() });
    }
    Ok(v.re)
}

/// Applies `U` `m_max` times, recording the observables at `m = 0..=m_max`.
pub fn stroboscopic_run(
    u: &FloquetOperator,
    psi0: &DVector<C64>,
    m_max: usize,
    obs: &DriveObservables,
) -> Result<StroboscopicTrace> {
    if m_max < 1 {
        return Err(Error::Config("m_max must be at least 1".into()));
    }
    if psi0.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: psi0.len(),
        });
    }
    let norm0 = psi0.norm();
    let mut psi = psi0.clone();
    let mut trace = StroboscopicTrace::default();
    for m in 0..=m_max {
        if m > 0 {
            psi = u.apply(&psi);
        }
        let drift = (psi.norm() - norm0).abs();
        trace.max_norm_drift = trace.max_norm_drift.max(drift);
        if drift > STROBOSCOPIC_DRIFT_TOL {
            return Err(Error::NonUnitary { defect: drift });
        }
        trace.m.push(m);
        trace.delta_c.push(real_expectation(&obs.delta_c, &psi)?);
        trace.sx.push(real_expectation(&obs.sx, &psi)?);
    }
    Ok(trace)
}

/// Sampling of the long-time average: `m = m0 + stride, m0 + 2 stride, …,
/// m0 + window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AverageWindow {
    pub m0: usize,
    pub window: usize,
    pub stride: usize,
}

impl Default for AverageWindow {
    fn default() -> Self {
        AverageWindow {
            m0: 1500,
            window: 1000,
            stride: 5,
        }
    }
}

impl AverageWindow {
    pub fn end(&self) -> usize {
        self.m0 + self.window
    }

    pub fn samples(&self) -> usize {
        self.window / self.stride
    }
}

pub fn long_time_average(trace: &StroboscopicTrace, w: AverageWindow) -> Result<f64> {
    if w.stride == 0 || w.window < w.stride {
        return Err(Error::Config(format!(
            "averaging window {} with stride {} has no samples",
            w.window, w.stride
        )));
    }
    let last = trace.m.last().copied().unwrap_or(0);
    if w.end() > last {
        return Err(Error::Config(format!(
            "averaging window ends at m = {} but the trace stops at {last}",
            w.end()
        )));
    }
    let first = trace.m.first().copied().unwrap_or(0);
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut m = w.m0 + w.stride;
    while m <= w.end() {
        sum += trace.delta_c[m - first];
        n += 1;
        m += w.stride;
    }
    Ok(sum / n as f64)
}

/// A drive prepared for repeated stroboscopic runs, optionally restricted to
/// the translation- and reflection-symmetric sector (the drive, `ΔC`, `Σσˣ`
/// and every initial state of [`initial_state`] are uniform on the ring).
#[derive(Clone, Debug)]
pub struct FloquetSetup {
    pub basis: SpinBasis,
    pub drive: DriveConfig,
    pub sector: Option<SymmetricSector>,
    pub u: FloquetOperator,
    pub obs: DriveObservables,
}

impl FloquetSetup {
    pub fn new(l: usize, drive: DriveConfig, symmetric: bool) -> Result<Self> {
        let basis = SpinBasis::new(l)?;
        let (a, b) = segment_hamiltonians(&basis, drive.h0, drive.v0)?;
        let full_obs = DriveObservables::full(&basis);
        if symmetric {
            let sec = SymmetricSector::full(l)?;
            let u = build_floquet(&sec.project(&a)?, &sec.project(&b)?, drive.period())?;
            let obs = DriveObservables {
                delta_c: sec.project(&full_obs.delta_c)?,
                sx: sec.project(&full_obs.sx)?,
            };
            Ok(FloquetSetup {
                basis,
                drive,
                sector: Some(sec),
                u,
                obs,
            })
        } else {
            let u = build_floquet(&a, &b, drive.period())?;
            Ok(FloquetSetup {
                basis,
                drive,
                sector: None,
                u,
                obs: full_obs,
            })
        }
    }

    /// The initial state in the working space.
    pub fn initial_amplitudes(&self, theta: f64) -> Result<DVector<C64>> {
        let psi = initial_state(&self.basis, theta)?;
        match &self.sector {
            Some(sec) => sec.restrict(psi.amplitudes()),
            None => Ok(psi.into_amplitudes()),
        }
    }

    pub fn run(&self, theta: f64, m_max: usize) -> Result<StroboscopicTrace> {
        stroboscopic_run(&self.u, &self.initial_amplitudes(theta)?, m_max, &self.obs)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FloquetSummary {
    pub sites: usize,
    pub h0: f64,
    pub omega_d: f64,
    pub v0: f64,
    pub theta: f64,
    pub m_max: usize,
    pub window: AverageWindow,
    pub delta_c_bar: f64,
    pub band: f64,
    pub peak_to_peak: f64,
    pub max_norm_drift: f64,
}

impl FloquetSummary {
    pub fn new(setup: &FloquetSetup, theta: f64, trace: &StroboscopicTrace, window: AverageWindow) -> Result<Self> {
        Ok(FloquetSummary {
            sites: setup.basis.sites(),
            h0: setup.drive.h0,
            omega_d: setup.drive.omega_d,
            v0: setup.drive.v0,
            theta,
            m_max: trace.m.last().copied().unwrap_or(0),
            window,
            delta_c_bar: long_time_average(trace, window)?,
            band: trace.band(),
            peak_to_peak: trace.peak_to_peak(),
            max_norm_drift: trace.max_norm_drift,
        })
    }
}
