//! Ramp protocols, the fidelity/residual-energy observables and τ sweeps.
//!
//! Ramps run in the fully symmetric sector by default (see
//! [`SymmetricSector`]); the ground state, the drive and both observables
//! live there, so `F` and `Q` are unchanged.

use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{propagate, BasisTag, EigenbasisEngine, Method, PropagatorPlan, StateVector};
use crate::hilbert::SymmetricSector;
use crate::models::{AffineHamiltonian, ChainModel, PXP_CRITICAL_RATIO};
use crate::spectra::{default_degeneracy_tol, diagonalize, linear_grid, EigenSystem};
use crate::C64;

/// Lower clamp for `F`, roughly `ln 1e-300`.
pub const F_FLOOR: f64 = -690.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampKind {
    /// `h = h0 (2t/τ - 1)`
    LinearDegen,
    /// `h = h0 cos(2πt/τ)`
    CosineDegen,
    /// `λ = λ_c + λ0 (2t/τ - 1)`
    LinearPxp,
    /// `λ = λ_c + λ0 cos(2πt/τ)`
    CosinePxp,
}

impl RampKind {
    pub fn is_pxp(self) -> bool {
        matches!(self, RampKind::LinearPxp | RampKind::CosinePxp)
    }

    pub fn is_linear(self) -> bool {
        matches!(self, RampKind::LinearDegen | RampKind::LinearPxp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RampKind::LinearDegen => "linear-degen",
            RampKind::CosineDegen => "cosine-degen",
            RampKind::LinearPxp => "linear-pxp",
            RampKind::CosinePxp => "cosine-pxp",
        }
    }
}

impl std::str::FromStr for RampKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-degen" => Ok(RampKind::LinearDegen),
            "cosine-degen" => Ok(RampKind::CosineDegen),
            "linear-pxp" => Ok(RampKind::LinearPxp),
            "cosine-pxp" => Ok(RampKind::CosinePxp),
            other => Err(Error::Config(format!("unknown ramp kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for RampKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub kind: RampKind,
    /// `0` for the degenerate chain, `λ_c` for PXP.
    pub center: f64,
    /// `h0` or `λ0`.
    pub amplitude: f64,
    pub tau: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl RampProtocol {
    /// A full ramp `[0, τ]` on `model`; the kind must match the model.
    pub fn for_model(model: &ChainModel, kind: RampKind, amplitude: f64, tau: f64) -> Result<Self> {
        let center = match (model, kind.is_pxp()) {
            (ChainModel::Degenerate { .. }, false) => 0.0,
            (ChainModel::Pxp { w, .. }, true) => PXP_CRITICAL_RATIO * w,
            _ => {
                return Err(Error::Config(format!(
                    "ramp kind {kind} does not apply to the {} model",
                    model.name()
                )))
            }
        };
        Self::new(kind, center, amplitude, tau, 0.0, tau)
    }

    pub fn new(kind: RampKind, center: f64, amplitude: f64, tau: f64, t_start: f64, t_end: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Config(format!("ramp time must be positive, got τ = {tau}")));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(Error::Config("ramp amplitude and center must be finite".into()));
        }
        if !(0.0 <= t_start && t_start < t_end && t_end <= tau * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "ramp window must satisfy 0 <= t_start < t_end <= τ (got [{t_start}, {t_end}], τ = {tau})"
            )));
        }
        Ok(RampProtocol {
            kind,
            center,
            amplitude,
            tau,
            t_start,
            t_end: t_end.min(tau),
        })
    }

    pub fn with_window(&self, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(self.kind, self.center, self.amplitude, self.tau, t_start, t_end)
    }

    /// `[0, τ/2]`.
    pub fn half(&self) -> Result<Self> {
        self.with_window(0.0, self.tau / 2.0)
    }

    /// The control at `t`; valid for any real `t`.
    pub fn value(&self, t: f64) -> f64 {
        let x = t / self.tau;
        let shape = if self.kind.is_linear() {
            2.0 * x - 1.0
        } else {
            (2.0 * std::f64::consts::PI * x).cos()
        };
        self.center + self.amplitude * shape
    }

    /// The control at `t ∈ [0, τ]`.
    pub fn field_of_t(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.tau;
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(Error::TimeOutOfRange { t, tau: self.tau });
        }
        Ok(self.value(t))
    }
}

/// Same as [`RampProtocol::field_of_t`].
pub fn field_of_t(p: &RampProtocol, t: f64) -> Result<f64> {
    p.field_of_t(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampOptions {
    /// Samples of the trace, including both ends.
    pub n_samples: usize,
    pub method: Method,
    /// Explicit step; otherwise `min(τ/5000, dt_max)`.
    pub dt: Option<f64>,
    pub dt_max: f64,
    pub tol: f64,
    /// Simulate in the fully symmetric sector.
    pub symmetric: bool,
}

impl Default for RampOptions {
    fn default() -> Self {
        RampOptions {
            n_samples: 201,
            method: Method::EigenbasisOde,
            dt: None,
            dt_max: 0.01,
            tol: 1e-8,
            symmetric: true,
        }
    }
}

impl RampOptions {
    pub fn plan(&self, tau: f64) -> Result<PropagatorPlan> {
        let dt = self.dt.unwrap_or((tau / 5000.0).min(self.dt_max));
        PropagatorPlan::new(self.method, dt, self.tol)
    }
}

/// Observables of one ramp, sampled uniformly in `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampTrace {
    pub model: String,
    pub sites: usize,
    pub scale: f64,
    pub protocol: RampProtocol,
    pub times: Vec<f64>,
    pub control: Vec<f64>,
    pub f: Vec<f64>,
    pub q: Vec<f64>,
    pub e_g: Vec<f64>,
    /// Samples where the instantaneous ground level is degenerate; `F` there
    /// uses the weight on the whole ground manifold.
    pub degenerate: Vec<bool>,
    pub max_norm_drift: f64,
}

impl RampTrace {
    /// Columns `t_over_tau,control,F,Q_over_scale,E_G,degenerate`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_over_tau,control,F,Q_over_scale,E_G,degenerate")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.times[k] / self.protocol.tau,
                self.control[k],
                self.f[k],
                self.q[k] / self.scale,
                self.e_g[k],
                u8::from(self.degenerate[k])
            )?;
        }
        Ok(())
    }
}

/// `ln p` clamped to [`F_FLOOR`], with `p` clamped to at most 1.
pub fn log_fidelity(p: f64) -> f64 {
    if !(p >= 1e-300) {
        F_FLOOR
    } else {
        p.min(1.0).ln()
    }
}

struct Space {
    aff: AffineHamiltonian,
    tag: BasisTag,
}

fn space(model: &ChainModel, symmetric: bool) -> Result<Space> {
    let l = model.sites();
    if symmetric {
        let (aff, sec): (AffineHamiltonian, SymmetricSector) = model.symmetric_affine()?;
        let dim = sec.dim();
        Ok(Space {
            aff,
            tag: BasisTag::Constrained { sites: l, dim },
        })
    } else {
        let tag = match model {
            ChainModel::Degenerate { .. } => BasisTag::Full { sites: l },
            ChainModel::Pxp { sub, .. } => BasisTag::Constrained { sites: l, dim: sub.dim() },
        };
        Ok(Space {
            aff: model.affine(),
            tag,
        })
    }
}

fn check_model(model: &ChainModel, kind: RampKind) -> Result<()> {
    if kind.is_pxp() != matches!(model, ChainModel::Pxp { .. }) {
        return Err(Error::Config(format!(
            "ramp kind {kind} does not apply to the {} model",
            model.name()
        )));
    }
    Ok(())
}

/// Ground weight and energy of `psi` against an instantaneous spectrum.
fn observables(es: &EigenSystem, psi: &DVector<C64>, h: &crate::hilbert::OperatorMatrix) -> (f64, f64, f64, bool) {
    let tol = default_degeneracy_tol(es);
    let manifold = es.ground_manifold(tol);
    let weight = es.ground_weight(psi, tol);
    let e_g = es.ground_energy();
    let q = h.expectation(psi).re - e_g;
    (log_fidelity(weight), q, e_g, manifold.len() > 1)
}

/// Runs one ramp from the ground state of `H(t_start)` and records `F`, `Q`
/// and `E_G` at `opts.n_samples` uniform times.
pub fn run_ramp(model: &ChainModel, p: &RampProtocol, opts: &RampOptions) -> Result<RampTrace> {
    check_model(model, p.kind)?;
    if opts.n_samples < 2 {
        return Err(Error::Config("a ramp trace needs at least 2 samples".into()));
    }
    let sp = space(model, opts.symmetric)?;
    let es0 = diagonalize(&sp.aff.at(p.value(p.t_start)))?;
    let psi0 = StateVector::new(es0.vector(0), sp.tag)?;
    let grid = linear_grid(p.t_start, p.t_end, opts.n_samples);
    let schedule = |t: f64| p.value(t);
    let traj = propagate(&sp.aff, &schedule, &psi0, &grid, &opts.plan(p.tau)?)?;
    let control: Vec<f64> = grid.iter().map(|&t| p.value(t)).collect();
    let obs = control
        .par_iter()
        .zip(traj.states.par_iter())
        .map(|(&s, psi)| {
            let h = sp.aff.at(s);
            let es = diagonalize(&h)?;
            Ok(observables(&es, psi.amplitudes(), &h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RampTrace {
        model: model.name().to_string(),
        sites: model.sites(),
        scale: model.energy_scale(),
        protocol: *p,
        times: grid,
        control,
        f: obs.iter().map(|o| o.0).collect(),
        q: obs.iter().map(|o| o.1).collect(),
        e_g: obs.iter().map(|o| o.2).collect(),
        degenerate: obs.iter().map(|o| o.3).collect(),
        max_norm_drift: traj.max_norm_drift,
    })
}

/// Terminal observables of one sweep point. Failed points keep their `τ` and
/// carry the error text instead of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub q: f64,
    pub f: f64,
    pub q_per_l: f64,
    pub q_per_scale_l: f64,
    pub max_norm_drift: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub model: String,
    pub sites: usize,
    pub scale: f64,
    pub kind: RampKind,
    pub amplitude: f64,
    /// `t_end / τ`.
    pub endpoint: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Columns `tau,Q,F,Q_over_L,Q_over_scale_L,max_norm_drift,error`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau,Q,F,Q_over_L,Q_over_scale_L,max_norm_drift,error")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.tau,
                r.q,
                r.f,
                r.q_per_l,
                r.q_per_scale_l,
                r.max_norm_drift,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            )?;
        }
        Ok(())
    }

    /// `(τ, Q)` of the successful points.
    pub fn q_series(&self) -> (Vec<f64>, Vec<f64>) {
        self.rows.iter().filter(|r| r.is_ok()).map(|r| (r.tau, r.q)).unzip()
    }
}

/// Everything a sweep shares across `τ`: with `t_start = 0` and a fixed
/// `t_end/τ`, the initial and final Hamiltonians do not depend on `τ`.
pub struct SweepContext {
    model_name: &'static str,
    sites: usize,
    scale: f64,
    kind: RampKind,
    center: f64,
    amplitude: f64,
    endpoint: f64,
    opts: RampOptions,
    aff: AffineHamiltonian,
    tag: BasisTag,
    engine: EigenbasisEngine,
    c0: DVector<C64>,
    psi0: StateVector,
    ground: Vec<usize>,
}

impl SweepContext {
    pub fn new(model: &ChainModel, kind: RampKind, amplitude: f64, endpoint: f64, opts: &RampOptions) -> Result<Self> {
        check_model(model, kind)?;
        if !(endpoint > 0.0 && endpoint <= 1.0) {
            return Err(Error::Config(format!("sweep endpoint must lie in (0, 1], got {endpoint}")));
        }
        let proto = RampProtocol::for_model(model, kind, amplitude, 1.0)?;
        let sp = space(model, opts.symmetric)?;
        let es0 = diagonalize(&sp.aff.at(proto.value(0.0)))?;
        let psi0 = StateVector::new(es0.vector(0), sp.tag)?;
        let engine = EigenbasisEngine::new(&sp.aff, proto.value(endpoint))?;
        let c0 = engine.reference().to_eigenbasis(psi0.amplitudes());
        let tol = default_degeneracy_tol(engine.reference());
        let ground = engine.reference().ground_manifold(tol);
        Ok(SweepContext {
            model_name: model.name(),
            sites: model.sites(),
            scale: model.energy_scale(),
            kind,
            center: proto.center,
            amplitude,
            endpoint,
            opts: *opts,
            aff: sp.aff,
            tag: sp.tag,
            engine,
            c0,
            psi0,
            ground,
        })
    }

    pub fn protocol(&self, tau: f64) -> Result<RampProtocol> {
        RampProtocol::new(self.kind, self.center, self.amplitude, tau, 0.0, self.endpoint * tau)
    }

    fn terminal(&self, tau: f64) -> Result<(DVector<C64>, f64)> {
        let p = self.protocol(tau)?;
        let plan = self.opts.plan(tau)?;
        let schedule = |t: f64| p.value(t);
        match plan.method {
            Method::EigenbasisOde => self.engine.advance_checked(&self.c0, 0.0, p.t_end, &plan, &schedule),
            _ => {
                let traj = propagate(&self.aff, &schedule, &self.psi0, &[0.0, p.t_end], &plan)?;
                let c = self.engine.reference().to_eigenbasis(traj.last().amplitudes());
                Ok((c, traj.max_norm_drift))
            }
        }
    }

    /// One sweep point; errors are folded into the row.
    pub fn point(&self, tau: f64) -> SweepRow {
        match self.terminal(tau) {
            Ok((c, drift)) => {
                let es = self.engine.reference();
                let energy: f64 = c.iter().zip(es.values()).map(|(ck, e)| ck.norm_sqr() * e).sum();
                let q = energy - es.ground_energy();
                let weight: f64 = self.ground.iter().map(|&k| c[k].norm_sqr()).sum();
                let l = self.sites as f64;
                SweepRow {
                    tau,
                    q,
                    f: log_fidelity(weight),
                    q_per_l: q / l,
                    q_per_scale_l: q / (self.scale * l),
                    max_norm_drift: drift,
                    error: None,
                }
            }
            Err(e) => SweepRow {
                tau,
                q: f64::NAN,
                f: f64::NAN,
                q_per_l: f64::NAN,
                q_per_scale_l: f64::NAN,
                max_norm_drift: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn table(&self, rows: Vec<SweepRow>) -> SweepTable {
        SweepTable {
            model: self.model_name.to_string(),
            sites: self.sites,
            scale: self.scale,
            kind: self.kind,
            amplitude: self.amplitude,
            endpoint: self.endpoint,
            rows,
        }
    }

    /// Dimension of the simulated space.
    pub fn dim(&self) -> usize {
        self.tag.dim()
    }
}

/// Terminal `(τ, Q, F)` for every `τ` of an ascending list, ending at
/// `t_end = endpoint · τ`.
pub fn sweep_tau(
    model: &ChainModel,
    kind: RampKind,
    amplitude: f64,
    tau_list: &[f64],
    endpoint: f64,
    opts: &RampOptions,
) -> Result<SweepTable> {
    if tau_list.is_empty() {
        return Err(Error::Config("τ list is empty".into()));
    }
    if tau_list.windows(2).any(|w| !(w[1] > w[0])) || !(tau_list[0] > 0.0) {
        return Err(Error::Config("τ list must be positive and strictly ascending".into()));
    }
    let ctx = SweepContext::new(model, kind, amplitude, endpoint, opts)?;
    let rows = tau_list.par_iter().map(|&tau| ctx.point(tau)).collect();
    Ok(ctx.table(rows))
}

/// `n` log-spaced points on `[lo, hi]`; the ends are exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = linear_grid(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let Some(first) = g.first_mut() {
        *first = lo;
    }
    if n > 1 {
        g[n - 1] = hi;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degen(l: usize) -> ChainModel {
        ChainModel::degenerate(l, 1.0).unwrap()
    }

    #[test]
    fn protocol_values() {
        let m = degen(4);
        let lin = RampProtocol::for_model(&m, RampKind::LinearDegen, 5.0, 8.0).unwrap();
        assert_eq!(lin.field_of_t(4.0).unwrap(), 0.0);
        assert_eq!(lin.field_of_t(0.0).unwrap(), -5.0);
        let cos = RampProtocol::for_model(&m, RampKind::CosineDegen, 5.0, 8.0).unwrap();
        assert!(cos.field_of_t(2.0).unwrap().abs() < 1e-14);
        assert!(cos.field_of_t(6.0).unwrap().abs() < 1e-14);
        let p = ChainModel::pxp(6, 1.0).unwrap();
        let lp = RampProtocol::for_model(&p, RampKind::LinearPxp, 5.0, 8.0).unwrap();
        assert_eq!(lp.field_of_t(4.0).unwrap(), -1.31);
        assert!(matches!(lin.field_of_t(8.5), Err(Error::TimeOutOfRange { .. })));
        assert!(RampProtocol::for_model(&m, RampKind::LinearPxp, 5.0, 8.0).is_err());
        assert!(lin.with_window(5.0, 4.0).is_err());
        assert!(lin.with_window(0.0, 9.0).is_err());
    }

    #[test]
    fn trace_starts_at_zero() {
        let m = degen(4);
        let p = RampProtocol::for_model(&m, RampKind::LinearDegen, 5.0, 2.0).unwrap();
        let opts = RampOptions {
            n_samples: 11,
            ..Default::default()
        };
        let tr = run_ramp(&m, &p, &opts).unwrap();
        assert_eq!(tr.f[0], 0.0);
        assert!(tr.q[0].abs() < 1e-12);
        assert!(tr.f.iter().all(|&f| f <= 1e-12));
        assert!(tr.q.iter().all(|&q| q >= -1e-9));
        // h = 0 sits at the middle sample
        assert!(tr.degenerate[5]);
        assert!(!tr.degenerate[0]);
    }

    #[test]
    fn sector_matches_full_space() {
        let m = degen(6);
        let p = RampProtocol::for_model(&m, RampKind::LinearDegen, 5.0, 3.0).unwrap();
        let mut opts = RampOptions {
            n_samples: 5,
            ..Default::default()
        };
        let a = run_ramp(&m, &p, &opts).unwrap();
        opts.symmetric = false;
        let b = run_ramp(&m, &p, &opts).unwrap();
        for k in 0..5 {
            assert!((a.q[k] - b.q[k]).abs() < 1e-9 * a.q[k].abs().max(1.0), "{k}: {} vs {}", a.q[k], b.q[k]);
            assert!((a.f[k].exp() - b.f[k].exp()).abs() < 1e-10, "{k}: {} vs {}", a.f[k], b.f[k]);
            assert!((a.e_g[k] - b.e_g[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_point_matches_trace_end() {
        let m = degen(6);
        let opts = RampOptions {
            n_samples: 3,
            ..Default::default()
        };
        let table = sweep_tau(&m, RampKind::LinearDegen, 5.0, &[0.5, 2.0], 0.5, &opts).unwrap();
        let p = RampProtocol::for_model(&m, RampKind::LinearDegen, 5.0, 2.0).unwrap().half().unwrap();
        let tr = run_ramp(&m, &p, &opts).unwrap();
        let row = &table.rows[1];
        assert!((row.q - tr.q[2]).abs() < 1e-9);
        assert!((row.f - tr.f[2]).abs() < 1e-8);
        assert!((row.q_per_l * 6.0 - row.q).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let m = degen(4);
        let o = RampOptions::default();
        assert!(sweep_tau(&m, RampKind::LinearDegen, 5.0, &[], 0.5, &o).is_err());
        assert!(sweep_tau(&m, RampKind::LinearDegen, 5.0, &[2.0, 1.0], 0.5, &o).is_err());
    }

    #[test]
    fn log_fidelity_floor() {
        assert_eq!(log_fidelity(0.0), F_FLOOR);
        assert_eq!(log_fidelity(1.0 + 1e-15), 0.0);
    }
}
