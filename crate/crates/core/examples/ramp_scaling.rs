use degenchain::analysis::{detect_crossover, fit_powerlaw, local_exponents};
use degenchain::models::ChainModel;
use degenchain::ramp::{log_grid, sweep_tau, RampKind, RampOptions};

// residual energy after a half ramp into the degenerate point, over four
// decades of ramp time: a plateau at fast ramps, then 1/τ² once the ramp is
// slow enough for the gap at the start

fn main() -> degenchain::Result<()> {
    let model = ChainModel::degenerate(8, 1.0)?;
    let taus = log_grid(0.1, 1000.0, 33);
    let table = sweep_tau(&model, RampKind::LinearDegen, 5.0, &taus, 0.5, &RampOptions::default())?;
    let (t, q) = table.q_series();
    let pts: Vec<(f64, f64)> = t.into_iter().zip(q).collect();

    for (tau, b) in local_exponents(&pts).iter().step_by(4) {
        println!("tau ~ {tau:8.2}  local exponent {b:.2}");
    }
    let fit = fit_powerlaw(&pts, (100.0, 1000.0))?;
    println!("fit on [100, 1000]: Q = {:.3e} / tau^{:.3} (r2 {:.5})", fit.a, fit.b, fit.r2);

    let seg = detect_crossover(&pts, &[0.0, 1.0, 2.0], 0.1)?;
    for d in &seg.decades {
        println!("decade [{}, {}]: b = {:.2} -> label {}", d.lo, d.hi, d.b, d.label);
    }
    Ok(())
}
