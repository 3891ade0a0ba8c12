//! Dense Hermitian diagonalization, degeneracy counting and spectrum scans.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, SpinBasis};
use crate::linalg::DenseMatrix;
use crate::models::{build_h, DegenerateModelParams};
use crate::C64;

/// Largest dimension handed to the dense eigensolver.
pub const DENSE_CAP: usize = 1 << 14;

/// Relative factor of the default degeneracy tolerance `1e-10 · max(1, ‖H‖)`.
pub const DEGENERACY_RTOL: f64 = 1e-10;

/// Full eigen-decomposition with ascending eigenvalues.
///
/// Each eigenvector has its largest-magnitude component made real and
/// positive (the first such component on ties).
#[derive(Clone, Debug)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: DenseMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k)
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// `V† ψ`: amplitudes in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.adjoint_mul_vec(psi)
    }

    /// `V c`: back to the computational basis.
    pub fn from_eigenbasis(&self, coeffs: &DVector<C64>) -> DVector<C64> {
        self.vectors.mul_vec(coeffs)
    }

    /// `V† A V`.
    pub fn matrix_elements(&self, op: &OperatorMatrix) -> DenseMatrix {
        let a = match op.to_real_dense() {
            Some(r) => DenseMatrix::Real(r),
            None => DenseMatrix::Complex(op.to_dense()),
        };
        self.vectors.congruence(&a)
    }

    /// Indices of the levels within `tol` of the lowest one.
    pub fn ground_manifold(&self, tol: f64) -> Vec<usize> {
        let e0 = self.values[0];
        self.values
            .iter()
            .take_while(|&&v| v - e0 <= tol)
            .enumerate()
            .map(|(i, _)| i)
            .collect()
    }

    /// `Σ_{k ∈ ground manifold} |⟨v_k|ψ⟩|²`.
    pub fn ground_weight(&self, psi: &DVector<C64>, tol: f64) -> f64 {
        let coeffs = self.to_eigenbasis(psi);
        self.ground_manifold(tol)
            .into_iter()
            .map(|k| coeffs[k].norm_sqr())
            .sum()
    }

    /// `max_k ‖A v_k − ε_k v_k‖`.
    pub fn max_residual(&self, op: &OperatorMatrix) -> f64 {
        (0..self.dim())
            .map(|k| {
                let v = self.vector(k);
                (op.apply(&v) - &v * C64::new(self.values[k], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.vectors.to_complex();
        let g = v.ad_mul(&v) - DMatrix::<C64>::identity(self.dim(), self.dim());
        g.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Default degeneracy tolerance for a spectrum.
pub fn default_degeneracy_tol(es: &EigenSystem) -> f64 {
    DEGENERACY_RTOL * es.spectral_norm().max(1.0)
}

fn fix_phases_real(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() * (1.0 + 1e-12) {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn fix_phases_complex(vectors: &mut DMatrix<C64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.norm() > col[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let n = col[best].norm();
        if n > 0.0 {
            let phase = col[best].conj() / n;
            col.iter_mut().for_each(|v| *v *= phase);
        }
    }
}

// nalgebra's symmetric_eigen loses accuracy on some highly degenerate
// spectra, so the decomposition itself goes through faer.
fn real_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]).selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    (DVector::from_fn(n, |i, _| s.read(i)), DMatrix::from_fn(n, n, |i, j| u.read(i, j)))
}

fn complex_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    use faer::complex_native::c64;
    let n = m.nrows();
    let a = faer::Mat::<c64>::from_fn(n, n, |i, j| c64::new(m[(i, j)].re, m[(i, j)].im));
    let eig = a.selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let vecs = DMatrix::from_fn(n, n, |i, j| {
        let z = u.read(i, j);
        C64::new(z.re, z.im)
    });
    (DVector::from_fn(n, |i, _| s.read(i).re), vecs)
}

/// Sorts eigenpairs ascending and applies the phase convention.
fn sorted<T: nalgebra::Scalar + Copy>(values: &DVector<f64>, vectors: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&k| values[k]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, order[c])]);
    (vals, vecs)
}

/// Full eigen-decomposition of a Hermitian operator.
pub fn diagonalize(op: &OperatorMatrix) -> Result<EigenSystem> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: op.hermitian_defect(),
        });
    }
    if op.dim() > DENSE_CAP {
        return Err(Error::DimensionCap {
            dim: op.dim(),
            cap: DENSE_CAP,
        });
    }
    if let Some(real) = op.to_real_dense() {
        let (w, v) = real_eigen(&real);
        let (values, mut vecs) = sorted(&w, &v);
        fix_phases_real(&mut vecs);
        Ok(EigenSystem {
            values,
            vectors: DenseMatrix::Real(vecs),
        })
    } else {
        let (w, v) = complex_eigen(&op.to_dense());
        let (values, mut vecs) = sorted(&w, &v);
        fix_phases_complex(&mut vecs);
        Ok(EigenSystem {
            values,
            vectors: DenseMatrix::Complex(vecs),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub target_energy: f64,
    pub tol: f64,
    pub count: usize,
    pub members: Vec<usize>,
}

/// Levels in `[energy − tol, energy + tol]`.
pub fn degeneracy_count(es: &EigenSystem, energy: f64, tol: f64) -> Result<DegeneracyReport> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("degeneracy tolerance must be positive, got {tol}")));
    }
    let members: Vec<usize> = es
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| (v - energy).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    Ok(DegeneracyReport {
        target_energy: energy,
        tol,
        count: members.len(),
        members,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub h: f64,
    pub energies: Vec<f64>,
}

/// Sorted spectra of `H(h)` on a grid of transverse fields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub l: usize,
    pub v0: f64,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    /// CSV with columns `h,n,energy`, one row per eigenvalue.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "h,n,energy")?;
        for row in &self.rows {
            for (n, e) in row.energies.iter().enumerate() {
                writeln!(w, "{},{},{}", row.h, n, e)?;
            }
        }
        Ok(())
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Spectrum of the degenerate chain at every `h` of the grid.
pub fn spectrum_scan(basis: &SpinBasis, v0: f64, h_grid: &[f64]) -> Result<SpectrumTable> {
    if h_grid.is_empty() {
        return Err(Error::Config("spectrum scan needs a nonempty h grid".into()));
    }
    let rows = h_grid
        .par_iter()
        .map(|&h| {
            let params = DegenerateModelParams::new(h, v0)?;
            let es = diagonalize(&build_h(basis, &params))?;
            Ok(SpectrumRow {
                h,
                energies: es.values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable {
        l: basis.sites(),
        v0,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, count_blockaded, pauli_op, Axis};

    fn degenerate_h(l: usize, h: f64, v0: f64) -> OperatorMatrix {
        build_h(&build_basis(l).unwrap(), &DegenerateModelParams::new(h, v0).unwrap())
    }

    #[test]
    fn identity_spectrum() {
        let es = diagonalize(&OperatorMatrix::identity(5)).unwrap();
        assert!(es.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn single_sigma_z() {
        let b = build_basis(3).unwrap();
        let es = diagonalize(&pauli_op(&b, 1, Axis::Z).unwrap()).unwrap();
        let neg = es.values().iter().filter(|&&v| (v + 1.0).abs() < 1e-14).count();
        let pos = es.values().iter().filter(|&&v| (v - 1.0).abs() < 1e-14).count();
        assert_eq!((neg, pos), (4, 4));
    }

    #[test]
    fn zero_field_degeneracy_l4_and_l8() {
        for l in [4usize, 8] {
            let h = degenerate_h(l, 0.0, 1.0);
            let es = diagonalize(&h).unwrap();
            let rep = degeneracy_count(&es, 0.0, 1e-10).unwrap();
            assert_eq!(rep.count as u64, count_blockaded(l));
        }
        let es = diagonalize(&degenerate_h(8, 0.5, 1.0)).unwrap();
        let rep = degeneracy_count(&es, 0.0, 1e-10).unwrap();
        assert!(rep.count < 10, "degeneracy should be lifted, got {}", rep.count);
        let all = degeneracy_count(&es, 0.0, f64::INFINITY).unwrap();
        assert_eq!(all.count, 256);
        assert!(degeneracy_count(&es, 0.0, 0.0).is_err());
    }

    #[test]
    fn eigensystem_invariants() {
        let h = degenerate_h(6, 0.37, 1.0);
        let es = diagonalize(&h).unwrap();
        assert!(es.values().windows(2).all(|w| w[0] <= w[1]));
        assert!(es.max_residual(&h) < 1e-9 * es.spectral_norm());
        assert!(es.orthonormality_defect() < 1e-10);
        let trace: f64 = es.values().iter().sum();
        assert!((trace - h.trace().re).abs() < 1e-8 * trace.abs().max(1.0));
    }

    #[test]
    fn complex_hermitian_path() {
        let b = build_basis(3).unwrap();
        let y = pauli_op(&b, 0, Axis::Y).unwrap();
        let z = pauli_op(&b, 1, Axis::Z).unwrap();
        let h = (&y + &(&z * 0.5)).tagged_hermitian().unwrap();
        let es = diagonalize(&h).unwrap();
        assert!(matches!(es.vectors(), DenseMatrix::Complex(_)));
        assert!(es.max_residual(&h) < 1e-12);
        // phase convention: largest component real positive
        for k in 0..es.dim() {
            let v = es.vector(k);
            let big = v.iter().fold(C64::new(0.0, 0.0), |a, &x| if x.norm() > a.norm() * (1.0 + 1e-12) { x } else { a });
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn rejects_untagged() {
        let op = OperatorMatrix::identity(4).untagged();
        assert!(matches!(diagonalize(&op), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn ground_state_of_pxp_deep_ordered_phase_is_neel_like() {
        use crate::hilbert::enumerate_blockaded;
        use crate::models::{build_pxp, PxpParams};
        let b = build_basis(6).unwrap();
        let sub = enumerate_blockaded(&b);
        let es = diagonalize(&build_pxp(&sub, &PxpParams::new(1.0, -40.0).unwrap())).unwrap();
        let g = es.vector(0);
        let neel: f64 = [0b010101usize, 0b101010]
            .iter()
            .map(|&i| g[sub.position(i).unwrap()].norm_sqr())
            .sum();
        assert!(neel > 0.99);
    }

    #[test]
    fn scan_symmetry_under_field_reversal() {
        let b = build_basis(6).unwrap();
        let table = spectrum_scan(&b, 1.0, &[-0.7, 0.7]).unwrap();
        for (a, c) in table.rows[0].energies.iter().zip(&table.rows[1].energies) {
            assert!((a - c).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 64);
        assert!(spectrum_scan(&b, 1.0, &[]).is_err());
    }
}
