use degenchain::analysis::oscillation_metric;
use degenchain::models::ChainModel;
use degenchain::ramp::{log_grid, sweep_tau, RampKind, RampOptions};

// full-cycle cosine ramps pass the critical region twice; the two passages
// interfere for PXP, while the degenerate chain washes the fringes out

fn main() -> degenchain::Result<()> {
    let taus = log_grid(30.0, 1000.0, 40);
    let opts = RampOptions::default();
    let runs = [
        ("pxp", ChainModel::pxp(10, 1.0)?, RampKind::CosinePxp),
        ("degenerate", ChainModel::degenerate(10, 1.0)?, RampKind::CosineDegen),
    ];
    for (name, model, kind) in runs {
        let table = sweep_tau(&model, kind, 5.0, &taus, 1.0, &opts)?;
        let (t, q) = table.q_series();
        let pts: Vec<(f64, f64)> = t.into_iter().zip(q).collect();
        let m = oscillation_metric(&pts)?;
        println!(
            "{name:>10}: {} extrema, relative amplitude {:.3}",
            m.n_extrema, m.relative_amplitude
        );
    }
    Ok(())
}
