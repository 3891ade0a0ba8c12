use degenchain::hilbert::{count_blockaded, count_blockaded_formula, SpinBasis};
use degenchain::spectra::{linear_grid, spectrum_scan};

// zero-energy manifold of the chain at h = 0, then a few levels of H(h)

fn main() -> degenchain::Result<()> {
    println!("{:>3} {:>6} {:>6} {:>10}", "L", "zeros", "N(L)", "formula");
    for l in 3..=10 {
        let basis = SpinBasis::new(l)?;
        let table = spectrum_scan(&basis, 1.0, &[0.0])?;
        let zeros = table.rows[0].energies.iter().filter(|e| e.abs() < 1e-10).count();
        println!(
            "{l:>3} {zeros:>6} {:>6} {:>10.3}",
            count_blockaded(l),
            count_blockaded_formula(l)
        );
    }

    // the manifold splits linearly in h; print the lowest levels at L = 6
    let basis = SpinBasis::new(6)?;
    let table = spectrum_scan(&basis, 1.0, &linear_grid(-0.2, 0.2, 5))?;
    for row in &table.rows {
        let low: Vec<String> = row.energies[..6].iter().map(|e| format!("{e:+.4}")).collect();
        println!("h = {:+.2}: {}", row.h, low.join(" "));
    }
    Ok(())
}
