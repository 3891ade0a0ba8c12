use degenchain::evolve::{propagate, BasisTag, Method, PropagatorPlan, StateVector};
use degenchain::models::ChainModel;
use degenchain::spectra::diagonalize;

// the three propagation methods on the same linear ramp

fn main() -> degenchain::Result<()> {
    let model = ChainModel::degenerate(6, 1.0)?;
    let (aff, sec) = model.symmetric_affine()?;
    let tau = 10.0;
    let schedule = |t: f64| 5.0 * (2.0 * t / tau - 1.0);
    let es = diagonalize(&aff.at(schedule(0.0)))?;
    let psi0 = StateVector::new(es.vector(0), BasisTag::Constrained { sites: 6, dim: sec.dim() })?;
    let mut finals = Vec::new();
    for (method, dt) in [(Method::EigenExponential, 1e-3), (Method::EigenbasisOde, 1e-3), (Method::DirectRk4, 1e-4)] {
        let plan = PropagatorPlan::new(method, dt, 1e-8)?;
        let traj = propagate(&aff, &schedule, &psi0, &[0.0, tau], &plan)?;
        println!("{method:>18}: norm drift {:.1e}", traj.max_norm_drift);
        finals.push(traj.last().clone());
    }
    for k in 1..finals.len() {
        println!("fidelity with the first: {:.12}", finals[0].fidelity(&finals[k]));
    }
    Ok(())
}
