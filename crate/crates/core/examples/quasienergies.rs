use degenchain::floquet::{drive_operator, quasienergies, DriveConfig};
use degenchain::fpt::{exact_hf, hf1};
use degenchain::hilbert::SpinBasis;

// quasienergies of the one-period evolution operator, and how close the
// first-order Floquet Hamiltonian gets at high frequency

fn main() -> degenchain::Result<()> {
    let basis = SpinBasis::new(4)?;
    let drive = DriveConfig::new(1.0, 2.0 * std::f64::consts::PI / 1.3, 0.1)?;
    let u = drive_operator(&basis, &drive)?;
    let qs = quasienergies(&u)?;
    println!("eigenvalue residual {:.2e}", qs.residual(&u));
    let mut e = qs.quasienergies.clone();
    e.sort_by(f64::total_cmp);
    println!("quasienergies: {:?}", e.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>());

    let exact = exact_hf(&u)?;
    let first = hf1(&basis, drive.v0, drive.h0, drive.period())?;
    let diff = exact.op.max_abs_diff(&first.op);
    println!("max |H_F - H_F^(1)| = {diff:.3e} (V0 = {})", drive.v0);
    Ok(())
}
