//! State propagation.
//!
//! Three engines share one entry point, [`propagate`]:
//!
//! - `EigenExponential`: exact `exp(-iH dt)` through the eigen-decomposition.
//!   Constant Hamiltonians are done in one shot; time-dependent ones use the
//!   fourth-order commutator-free exponential integrator (two Gauss points,
//!   two exponentials per step).
//! - `EigenbasisOde`: the amplitudes `c_n` in the eigenbasis of a reference
//!   Hamiltonian `H_f` obey `i ċ_n = ε_n c_n + g(t) Σ_m Λ_nm c_m` with
//!   `Λ = V† D V` when `H(t) = H_f + g(t) D`. Both pieces are diagonalized
//!   once and stepped with a fourth-order (Yoshida) composition of Strang
//!   splittings, which is unitary to rounding.
//! - `DirectRk4`: classical Runge-Kutta on `i ∂_t ψ = H(t) ψ` in the
//!   computational basis. Not unitary; kept as an independent oracle.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::OperatorMatrix;
use crate::linalg::DenseMatrix;
use crate::models::AffineHamiltonian;
use crate::spectra::{diagonalize, EigenSystem};
use crate::{C64, I};

/// Norm drift above which the RK4 oracle flags its result.
pub const RK4_DRIFT_WARNING: f64 = 1e-6;

/// Which Hilbert space a state lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    Full { sites: usize },
    Constrained { sites: usize, dim: usize },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match self {
            BasisTag::Full { sites } => 1 << sites,
            BasisTag::Constrained { dim, .. } => *dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    basis: BasisTag,
}

impl StateVector {
    pub fn new(amps: DVector<C64>, basis: BasisTag) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(StateVector { amps, basis })
    }

    /// Normalizes `amps` before wrapping them.
    pub fn normalized(amps: DVector<C64>, basis: BasisTag) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) {
            return Err(Error::Config("cannot normalize a zero vector".into()));
        }
        Self::new(amps.unscale(n), basis)
    }

    pub fn basis_state(index: usize, basis: BasisTag) -> Result<Self> {
        let mut amps = DVector::zeros(basis.dim());
        if index >= amps.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: index + 1,
            });
        }
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps, basis)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        op.expectation(&self.amps)
    }

    fn with_amps(&self, amps: DVector<C64>) -> StateVector {
        StateVector {
            amps,
            basis: self.basis,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    EigenExponential,
    EigenbasisOde,
    DirectRk4,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen-exponential" => Ok(Method::EigenExponential),
            "eigenbasis-ode" => Ok(Method::EigenbasisOde),
            "direct-rk4" => Ok(Method::DirectRk4),
            other => Err(Error::Config(format!("unknown propagation method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Method::EigenExponential => "eigen-exponential",
            Method::EigenbasisOde => "eigenbasis-ode",
            Method::DirectRk4 => "direct-rk4",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorPlan {
    pub method: Method,
    /// Largest step.
    pub dt: f64,
    /// Allowed norm drift.
    pub tol: f64,
}

impl PropagatorPlan {
    pub fn new(method: Method, dt: f64, tol: f64) -> Result<Self> {
        if !(dt > 0.0) || !(tol > 0.0) {
            return Err(Error::Config(format!(
                "propagator needs dt > 0 and tol > 0 (got dt = {dt}, tol = {tol})"
            )));
        }
        Ok(PropagatorPlan { method, dt, tol })
    }

    /// Default ramp plan: eigenbasis ODE with `dt = min(τ/5000, dt_max)`.
    pub fn for_ramp(tau: f64, dt_max: f64) -> Result<Self> {
        Self::new(Method::EigenbasisOde, (tau / 5000.0).min(dt_max), 1e-8)
    }
}

/// `H(t)` for the propagators.
pub trait TimeDependentHamiltonian: Sync {
    fn dim(&self) -> usize;

    fn matrix_at(&self, t: f64) -> OperatorMatrix;

    /// `y = H(t) x`.
    fn apply_at(&self, t: f64, x: &[C64], y: &mut [C64]) {
        self.matrix_at(t).apply_into(x, y);
    }
}

/// `H(t) = base + s(t) · drive`.
pub struct ScheduledHamiltonian<'a> {
    pub affine: &'a AffineHamiltonian,
    pub schedule: &'a (dyn Fn(f64) -> f64 + Sync),
}

impl<'a> ScheduledHamiltonian<'a> {
    pub fn new(affine: &'a AffineHamiltonian, schedule: &'a (dyn Fn(f64) -> f64 + Sync)) -> Self {
        ScheduledHamiltonian { affine, schedule }
    }
}

impl TimeDependentHamiltonian for ScheduledHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.affine.dim()
    }

    fn matrix_at(&self, t: f64) -> OperatorMatrix {
        self.affine.at((self.schedule)(t))
    }

    fn apply_at(&self, t: f64, x: &[C64], y: &mut [C64]) {
        let s = (self.schedule)(t);
        self.affine.base.apply_into(x, y);
        let mut tmp = vec![C64::new(0.0, 0.0); x.len()];
        self.affine.drive.apply_into(x, &mut tmp);
        for (a, b) in y.iter_mut().zip(tmp) {
            *a += b * s;
        }
    }
}

/// A time-independent Hamiltonian.
pub struct ConstantHamiltonian<'a>(pub &'a OperatorMatrix);

impl TimeDependentHamiltonian for ConstantHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn matrix_at(&self, _t: f64) -> OperatorMatrix {
        self.0.clone()
    }

    fn apply_at(&self, _t: f64, x: &[C64], y: &mut [C64]) {
        self.0.apply_into(x, y);
    }
}

/// Exact `exp(-i H dt)` from a cached eigen-decomposition.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    es: EigenSystem,
}

impl ExactPropagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        Ok(ExactPropagator { es: diagonalize(h)? })
    }

    pub fn from_eigensystem(es: EigenSystem) -> Self {
        ExactPropagator { es }
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.es
    }

    pub fn apply_amplitudes(&self, dt: f64, psi: &DVector<C64>) -> DVector<C64> {
        let mut c = self.es.to_eigenbasis(psi);
        for (ck, &e) in c.iter_mut().zip(self.es.values()) {
            *ck *= C64::from_polar(1.0, -e * dt);
        }
        self.es.from_eigenbasis(&c)
    }

    pub fn apply(&self, dt: f64, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.es.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.es.dim(),
                found: psi.dim(),
            });
        }
        Ok(psi.with_amps(self.apply_amplitudes(dt, &psi.amps)))
    }
}

/// `ψ' = Σ_n e^{-i ε_n dt} ⟨n|ψ⟩ |n⟩`.
pub fn expm_apply(h: &OperatorMatrix, dt: f64, psi: &StateVector) -> Result<StateVector> {
    if h.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.dim(),
        });
    }
    ExactPropagator::new(h)?.apply(dt, psi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftStatus {
    Ok,
    NormDriftWarning,
}

#[derive(Clone, Debug)]
pub struct DirectOutcome {
    pub state: StateVector,
    pub max_norm_drift: f64,
    pub status: DriftStatus,
}

fn rk4_step(h: &dyn TimeDependentHamiltonian, t: f64, dt: f64, y: &mut [C64], ws: &mut [Vec<C64>; 5]) {
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = ws;
    let minus_i = -I;
    h.apply_at(t, y, k1);
    k1.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (dt / 2.0);
    }
    h.apply_at(t + dt / 2.0, tmp, k2);
    k2.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (dt / 2.0);
    }
    h.apply_at(t + dt / 2.0, tmp, k3);
    k3.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * dt;
    }
    h.apply_at(t + dt, tmp, k4);
    k4.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

fn substeps(span: f64, dt: f64) -> usize {
    ((span.abs() / dt).ceil() as usize).max(1)
}

/// Fourth-order Runge-Kutta from `t0` to `t1`; drift beyond
/// [`RK4_DRIFT_WARNING`] is reported, not corrected.
pub fn evolve_direct(
    h: &dyn TimeDependentHamiltonian,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    plan: &PropagatorPlan,
) -> Result<DirectOutcome> {
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    let n0 = psi0.norm();
    let mut y: Vec<C64> = psi0.amps.iter().copied().collect();
    let mut ws: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); y.len()]);
    let steps = if t1 == t0 { 0 } else { substeps(t1 - t0, plan.dt) };
    let dt = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
    let mut max_drift: f64 = 0.0;
    for k in 0..steps {
        rk4_step(h, t0 + k as f64 * dt, dt, &mut y, &mut ws);
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        max_drift = max_drift.max((norm - n0).abs());
    }
    let status = if max_drift > RK4_DRIFT_WARNING {
        DriftStatus::NormDriftWarning
    } else {
        DriftStatus::Ok
    };
    Ok(DirectOutcome {
        state: psi0.with_amps(DVector::from_vec(y)),
        max_norm_drift: max_drift,
        status,
    })
}

/// States at the requested times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Config("time grid must be nondecreasing".into()));
    }
    Ok(())
}

/// The eigenbasis-ODE engine: diagonalizes `H_f = base + s_ref · drive` and
/// the coupling `Λ = V† drive V` once, then steps the amplitudes.
#[derive(Clone, Debug)]
pub struct EigenbasisEngine {
    hf: EigenSystem,
    coupling_values: Vec<f64>,
    coupling_vectors: DenseMatrix,
    s_ref: f64,
}

/// Triple-jump weights turning a symmetric second-order step into a
/// fourth-order one.
const YOSHIDA: [f64; 3] = {
    // w1 = 1 / (2 - 2^(1/3)), w0 = 1 - 2 w1
    let w1 = 1.351_207_191_959_657_8;
    [w1, 1.0 - 2.0 * w1, w1]
};

impl EigenbasisEngine {
    pub fn new(affine: &AffineHamiltonian, s_ref: f64) -> Result<Self> {
        let hf = diagonalize(&affine.at(s_ref))?;
        Self::from_parts(hf, &affine.drive, s_ref)
    }

    /// `hf` must diagonalize `H(s_ref)`; `coupling` is the operator multiplying
    /// `s(t) − s_ref`.
    pub fn from_parts(hf: EigenSystem, coupling: &OperatorMatrix, s_ref: f64) -> Result<Self> {
        if coupling.dim() != hf.dim() {
            return Err(Error::DimensionMismatch {
                expected: hf.dim(),
                found: coupling.dim(),
            });
        }
        let lambda = hf.matrix_elements(coupling);
        let lambda_op = match &lambda {
            DenseMatrix::Real(m) => OperatorMatrix::from_real_dense(m, false)?,
            DenseMatrix::Complex(m) => OperatorMatrix::from_dense(m.clone(), false)?,
        };
        // Λ is Hermitian up to rounding of the congruence
        let lambda_op = symmetrize(lambda_op)?;
        let ces = diagonalize(&lambda_op)?;
        Ok(EigenbasisEngine {
            coupling_values: ces.values().to_vec(),
            coupling_vectors: ces.vectors().clone(),
            hf,
            s_ref,
        })
    }

    pub fn reference(&self) -> &EigenSystem {
        &self.hf
    }

    fn strang(&self, c: &mut DVector<C64>, t: f64, h: f64, schedule: &dyn Fn(f64) -> f64) {
        let half = |c: &mut DVector<C64>| {
            for (ck, &e) in c.iter_mut().zip(self.hf.values()) {
                *ck *= C64::from_polar(1.0, -e * h / 2.0);
            }
        };
        half(c);
        let g = schedule(t + h / 2.0) - self.s_ref;
        if g != 0.0 {
            let mut d = self.coupling_vectors.adjoint_mul_vec(c);
            for (dk, &mu) in d.iter_mut().zip(&self.coupling_values) {
                *dk *= C64::from_polar(1.0, -g * mu * h);
            }
            *c = self.coupling_vectors.mul_vec(&d);
        }
        half(c);
    }

    fn step(&self, c: &mut DVector<C64>, t: f64, h: f64, schedule: &dyn Fn(f64) -> f64) {
        let mut tt = t;
        for w in YOSHIDA {
            self.strang(c, tt, w * h, schedule);
            tt += w * h;
        }
    }

    /// Eigenbasis amplitudes advanced from `t0` to `t1`.
    pub fn advance(
        &self,
        c: &DVector<C64>,
        t0: f64,
        t1: f64,
        dt: f64,
        schedule: &dyn Fn(f64) -> f64,
    ) -> DVector<C64> {
        let mut c = c.clone();
        if t1 == t0 {
            return c;
        }
        let n = substeps(t1 - t0, dt);
        let h = (t1 - t0) / n as f64;
        for k in 0..n {
            self.step(&mut c, t0 + k as f64 * h, h, schedule);
        }
        c
    }

    /// [`EigenbasisEngine::advance`] with the norm check: the interval is
    /// retried with halved steps (up to 6 times) while the drift exceeds
    /// `plan.tol`. Returns the amplitudes and the accepted drift.
    pub fn advance_checked(
        &self,
        c: &DVector<C64>,
        t0: f64,
        t1: f64,
        plan: &PropagatorPlan,
        schedule: &dyn Fn(f64) -> f64,
    ) -> Result<(DVector<C64>, f64)> {
        let n0 = c.norm();
        let mut dt = plan.dt;
        for _ in 0..=6 {
            let next = self.advance(c, t0, t1, dt, schedule);
            let drift = (next.norm() - n0).abs();
            if drift <= plan.tol {
                return Ok((next, drift));
            }
            dt /= 2.0;
        }
        let drift = (self.advance(c, t0, t1, dt, schedule).norm() - n0).abs();
        Err(Error::Integration {
            reason: format!("norm drift above {:e} on [{t0}, {t1}]", plan.tol),
            max_drift: drift,
        })
    }

    /// Runs over `t_grid` starting from `psi0` at `t_grid[0]`.
    pub fn run(
        &self,
        schedule: &dyn Fn(f64) -> f64,
        psi0: &StateVector,
        t_grid: &[f64],
        plan: &PropagatorPlan,
    ) -> Result<Trajectory> {
        check_grid(t_grid)?;
        if psi0.dim() != self.hf.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.hf.dim(),
                found: psi0.dim(),
            });
        }
        let mut c = self.hf.to_eigenbasis(&psi0.amps);
        let mut states = vec![psi0.clone()];
        let mut max_drift: f64 = 0.0;
        for w in t_grid.windows(2) {
            let (next, drift) = self.advance_checked(&c, w[0], w[1], plan, schedule)?;
            max_drift = max_drift.max(drift);
            c = next;
            states.push(psi0.with_amps(self.hf.from_eigenbasis(&c)));
        }
        Ok(Trajectory {
            times: t_grid.to_vec(),
            states,
            max_norm_drift: max_drift,
        })
    }
}

fn symmetrize(op: OperatorMatrix) -> Result<OperatorMatrix> {
    let sym = &(&op + &op.adjoint()) * 0.5;
    sym.tagged_hermitian()
}

/// Integrates `i ċ_n = ε_n c_n + Σ_m Λ_nm(t) c_m` with `Λ(t) = g(t) V† D V`,
/// starting from `c_n(t_0) = ⟨n|ψ_0⟩`, and returns `ψ(t)` at every grid time.
pub fn evolve_ramp_eigenbasis(
    hf: &EigenSystem,
    coupling: &OperatorMatrix,
    g: &dyn Fn(f64) -> f64,
    psi0: &StateVector,
    t_grid: &[f64],
    plan: &PropagatorPlan,
) -> Result<Trajectory> {
    let engine = EigenbasisEngine::from_parts(hf.clone(), coupling, 0.0)?;
    engine.run(g, psi0, t_grid, plan)
}

/// Coefficients of the fourth-order commutator-free exponential integrator.
const CF4_C: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const CF4_A: [f64; 2] = [
    (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0,
    (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0,
];

fn cf4_step(h: &dyn TimeDependentHamiltonian, t: f64, dt: f64, psi: &DVector<C64>) -> Result<DVector<C64>> {
    let h1 = h.matrix_at(t + CF4_C[0] * dt);
    let h2 = h.matrix_at(t + CF4_C[1] * dt);
    let first = symmetrize(&(&h1 * CF4_A[1]) + &(&h2 * CF4_A[0]))?;
    let second = symmetrize(&(&h1 * CF4_A[0]) + &(&h2 * CF4_A[1]))?;
    let psi = ExactPropagator::new(&first)?.apply_amplitudes(dt, psi);
    Ok(ExactPropagator::new(&second)?.apply_amplitudes(dt, &psi))
}

fn propagate_exponential(
    h: &dyn TimeDependentHamiltonian,
    psi0: &StateVector,
    t_grid: &[f64],
    plan: &PropagatorPlan,
    constant: bool,
) -> Result<Trajectory> {
    let n0 = psi0.norm();
    let mut psi = psi0.amps.clone();
    let mut states = vec![psi0.clone()];
    let mut max_drift: f64 = 0.0;
    let fixed = if constant {
        Some(ExactPropagator::new(&h.matrix_at(t_grid[0]))?)
    } else {
        None
    };
    for w in t_grid.windows(2) {
        if let Some(p) = &fixed {
            psi = p.apply_amplitudes(w[1] - w[0], &psi);
        } else if w[1] > w[0] {
            let n = substeps(w[1] - w[0], plan.dt);
            let dt = (w[1] - w[0]) / n as f64;
            for k in 0..n {
                psi = cf4_step(h, w[0] + k as f64 * dt, dt, &psi)?;
            }
        }
        max_drift = max_drift.max((psi.norm() - n0).abs());
        states.push(psi0.with_amps(psi.clone()));
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        max_norm_drift: max_drift,
    })
}

fn propagate_rk4(
    h: &dyn TimeDependentHamiltonian,
    psi0: &StateVector,
    t_grid: &[f64],
    plan: &PropagatorPlan,
) -> Result<Trajectory> {
    let mut states = vec![psi0.clone()];
    let mut max_drift: f64 = 0.0;
    let n0 = psi0.norm();
    for w in t_grid.windows(2) {
        let out = evolve_direct(h, states.last().unwrap(), w[0], w[1], plan)?;
        max_drift = max_drift.max((out.state.norm() - n0).abs()).max(out.max_norm_drift);
        states.push(out.state);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        max_norm_drift: max_drift,
    })
}

/// Propagates `psi0` (given at `t_grid[0]`) under `base + s(t) drive` with
/// the plan's method. For the eigenbasis ODE the reference Hamiltonian is
/// `H(s(t_last))`.
pub fn propagate(
    affine: &AffineHamiltonian,
    schedule: &(dyn Fn(f64) -> f64 + Sync),
    psi0: &StateVector,
    t_grid: &[f64],
    plan: &PropagatorPlan,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    if affine.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: affine.dim(),
            found: psi0.dim(),
        });
    }
    let ham = ScheduledHamiltonian::new(affine, schedule);
    match plan.method {
        Method::EigenbasisOde => {
            let s_ref = schedule(*t_grid.last().unwrap());
            EigenbasisEngine::new(affine, s_ref)?.run(schedule, psi0, t_grid, plan)
        }
        Method::EigenExponential => propagate_exponential(&ham, psi0, t_grid, plan, false),
        Method::DirectRk4 => propagate_rk4(&ham, psi0, t_grid, plan),
    }
}

/// Propagation under a constant Hamiltonian with any method.
pub fn propagate_constant(
    h: &OperatorMatrix,
    psi0: &StateVector,
    t_grid: &[f64],
    plan: &PropagatorPlan,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let ham = ConstantHamiltonian(h);
    match plan.method {
        Method::EigenExponential => propagate_exponential(&ham, psi0, t_grid, plan, true),
        Method::DirectRk4 => propagate_rk4(&ham, psi0, t_grid, plan),
        Method::EigenbasisOde => {
            let zero = OperatorMatrix::zeros(h.dim());
            let engine = EigenbasisEngine::from_parts(diagonalize(h)?, &zero, 0.0)?;
            engine.run(&|_| 0.0, psi0, t_grid, plan)
        }
    }
}
