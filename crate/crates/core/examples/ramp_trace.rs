use degenchain::models::ChainModel;
use degenchain::ramp::{run_ramp, RampKind, RampOptions, RampProtocol};

// a linear ramp of the transverse field through h = 0, stopped at the
// degenerate point; F and Q along the way

fn main() -> degenchain::Result<()> {
    let model = ChainModel::degenerate(8, 1.0)?;
    let opts = RampOptions {
        n_samples: 11,
        ..RampOptions::default()
    };
    for tau in [1.0, 10.0, 100.0] {
        let p = RampProtocol::for_model(&model, RampKind::LinearDegen, 5.0, tau)?.half()?;
        let trace = run_ramp(&model, &p, &opts)?;
        println!("tau = {tau}");
        for k in 0..trace.times.len() {
            println!(
                "  t/tau = {:.2}  h = {:+.2}  F = {:+.4}  Q = {:.5}{}",
                trace.times[k] / tau,
                trace.control[k],
                trace.f[k],
                trace.q[k],
                if trace.degenerate[k] { "  (degenerate)" } else { "" }
            );
        }
    }
    Ok(())
}
