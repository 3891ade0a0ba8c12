use std::f64::consts::PI;

use degenchain::fpt::fpt_report;
use degenchain::hilbert::SpinBasis;

// every identity of the perturbative expansion, at a generic and at a
// special drive period

fn main() -> degenchain::Result<()> {
    let basis = SpinBasis::new(4)?;
    for (v0, h0, period) in [(0.3, 1.0, 1.3), (0.2, 2.0, 2.0 * PI / 2.0)] {
        let r = fpt_report(&basis, v0, h0, period)?;
        println!("V0 = {v0}, h0 = {h0}, T = {period:.4} (h0 T / 2π = {:.3})", r.cycles);
        for c in &r.checks {
            println!("  {:<30} {:.2e}  <= {:.1e}  {}", c.name, c.residual, c.tol, if c.passed { "ok" } else { "FAIL" });
        }
        if let Some(c) = &r.published_block {
            println!("  {:<30} {:.2e}  (printed string form, informational)", c.name, c.residual);
        }
        println!("  |[H_F^(1), Σσx]| = {:.2e}, |[H_F^(3), Σσx]| = {:.2e}", r.hf1_sx_commutator, r.hf3_sx_commutator);
    }
    Ok(())
}
