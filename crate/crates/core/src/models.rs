//! Hamiltonians: the degenerate chain, the PXP chain in a longitudinal field,
//! and the two square-pulse drive segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    enumerate_blockaded, project_operator, total_pauli, total_sx, Axis, ConstrainedSubspace,
    OperatorMatrix, SpinBasis, SymmetricSector,
};
use crate::c;

/// Critical longitudinal field of the PXP chain in units of `w`.
pub const PXP_CRITICAL_RATIO: f64 = -1.31;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateModelParams {
    /// Transverse field.
    pub h: f64,
    /// Nearest-neighbour up-up interaction, `V0 > 0`.
    pub v0: f64,
}

impl DegenerateModelParams {
    pub fn new(h: f64, v0: f64) -> Result<Self> {
        if !(v0 > 0.0) {
            return Err(Error::Config(format!("V0 must be positive, got {v0}")));
        }
        Ok(DegenerateModelParams { h, v0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PxpParams {
    pub w: f64,
    pub lambda: f64,
}

impl PxpParams {
    pub fn new(w: f64, lambda: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(Error::Config(format!("w must be positive, got {w}")));
        }
        Ok(PxpParams { w, lambda })
    }

    /// `λ_c = -1.31 w`.
    pub fn lambda_c(&self) -> f64 {
        PXP_CRITICAL_RATIO * self.w
    }
}

/// `H_1 = (V0/4) Σ_j (1 + σᶻ_j)(1 + σᶻ_{j+1}) = V0 Σ_j n_j n_{j+1}`.
///
/// Diagonal; the entry of a configuration is `V0` times its number of up-up
/// bonds, so the kernel is exactly the blockaded sector.
pub fn build_h1(basis: &SpinBasis, v0: f64) -> OperatorMatrix {
    let diag: Vec<f64> = (0..basis.dim())
        .map(|i| v0 * basis.up_up_bonds(i) as f64)
        .collect();
    OperatorMatrix::diagonal(&diag)
}

/// `H = -h Σ σˣ + H_1`.
pub fn build_h(basis: &SpinBasis, params: &DegenerateModelParams) -> OperatorMatrix {
    &(&total_sx(basis) * -params.h) + &build_h1(basis, params.v0)
}

/// `Σ_j P_{j-1} σˣ_j P_{j+1}` restricted to the blockaded sector.
///
/// Inside the sector a flip of site `j` is allowed exactly when both of its
/// neighbours are down, which is the same as the image staying in the sector.
pub fn constrained_flip(sub: &ConstrainedSubspace) -> OperatorMatrix {
    let l = sub.sites();
    let mut trip = Vec::new();
    for (col, &idx) in sub.states().iter().enumerate() {
        for j in 0..l {
            if let Some(row) = sub.position(idx ^ (1 << j)) {
                trip.push((row, col, c(1.0, 0.0)));
            }
        }
    }
    OperatorMatrix::from_triplets(sub.dim(), trip, true).expect("flip operator is symmetric")
}

/// `(1/2) Σ_j σᶻ_j` restricted to the blockaded sector.
pub fn constrained_half_sz(sub: &ConstrainedSubspace) -> OperatorMatrix {
    let l = sub.sites() as f64;
    let diag: Vec<f64> = sub
        .states()
        .iter()
        .map(|&i| (2.0 * i.count_ones() as f64 - l) / 2.0)
        .collect();
    OperatorMatrix::diagonal(&diag)
}

/// `H' = Σ_j (-w σ̃ˣ_j + λ σᶻ_j / 2)` in the blockaded sector.
pub fn build_pxp(sub: &ConstrainedSubspace, params: &PxpParams) -> OperatorMatrix {
    &(&constrained_flip(sub) * -params.w) + &(&constrained_half_sz(sub) * params.lambda)
}

/// The two halves of the square-pulse period: `h = -h0` for the first half
/// and `h = +h0` for the second, i.e. `(+h0 Σσˣ + H_1, -h0 Σσˣ + H_1)`.
pub fn segment_hamiltonians(
    basis: &SpinBasis,
    h0: f64,
    v0: f64,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if !(h0 > 0.0) {
        return Err(Error::Config(format!("drive amplitude h0 must be positive, got {h0}")));
    }
    let sx = total_sx(basis);
    let h1 = build_h1(basis, v0);
    Ok((&(&sx * h0) + &h1, &(&sx * -h0) + &h1))
}

/// A Hamiltonian affine in one scalar control: `H(s) = base + s · drive`.
#[derive(Clone, Debug)]
pub struct AffineHamiltonian {
    pub base: OperatorMatrix,
    pub drive: OperatorMatrix,
}

impl AffineHamiltonian {
    pub fn new(base: OperatorMatrix, drive: OperatorMatrix) -> Result<Self> {
        if base.dim() != drive.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: drive.dim(),
            });
        }
        Ok(AffineHamiltonian { base, drive })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn at(&self, s: f64) -> OperatorMatrix {
        &self.base + &(&self.drive * s)
    }
}

/// The two chains a ramp can act on, each with its scalar control.
#[derive(Clone, Debug)]
pub enum ChainModel {
    /// Control is the transverse field `h`.
    Degenerate { basis: SpinBasis, v0: f64 },
    /// Control is the longitudinal field `λ`; dynamics stay in the blockaded sector.
    Pxp {
        basis: SpinBasis,
        sub: ConstrainedSubspace,
        w: f64,
    },
}

impl ChainModel {
    pub fn degenerate(l: usize, v0: f64) -> Result<Self> {
        DegenerateModelParams::new(0.0, v0)?;
        Ok(ChainModel::Degenerate {
            basis: SpinBasis::new(l)?,
            v0,
        })
    }

    pub fn pxp(l: usize, w: f64) -> Result<Self> {
        PxpParams::new(w, 0.0)?;
        let basis = SpinBasis::new(l)?;
        let sub = enumerate_blockaded(&basis);
        Ok(ChainModel::Pxp { basis, sub, w })
    }

    pub fn sites(&self) -> usize {
        match self {
            ChainModel::Degenerate { basis, .. } | ChainModel::Pxp { basis, .. } => basis.sites(),
        }
    }

    /// `V0` or `w`.
    pub fn energy_scale(&self) -> f64 {
        match self {
            ChainModel::Degenerate { v0, .. } => *v0,
            ChainModel::Pxp { w, .. } => *w,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChainModel::Degenerate { .. } => "degenerate",
            ChainModel::Pxp { .. } => "pxp",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ChainModel::Degenerate { basis, .. } => basis.dim(),
            ChainModel::Pxp { sub, .. } => sub.dim(),
        }
    }

    /// The Hamiltonian as a function of the control parameter.
    pub fn affine(&self) -> AffineHamiltonian {
        match self {
            ChainModel::Degenerate { basis, v0 } => AffineHamiltonian {
                base: build_h1(basis, *v0),
                drive: &total_sx(basis) * -1.0,
            },
            ChainModel::Pxp { sub, w, .. } => AffineHamiltonian {
                base: &constrained_flip(sub) * -*w,
                drive: constrained_half_sz(sub),
            },
        }
    }

    /// The fully symmetric sector of the model's Hilbert space.
    pub fn symmetric_sector(&self) -> Result<SymmetricSector> {
        match self {
            ChainModel::Degenerate { basis, .. } => SymmetricSector::full(basis.sites()),
            ChainModel::Pxp { basis, sub, .. } => SymmetricSector::new(basis.sites(), sub.states()),
        }
    }

    /// [`ChainModel::affine`] restricted to the fully symmetric sector.
    pub fn symmetric_affine(&self) -> Result<(AffineHamiltonian, SymmetricSector)> {
        let sec = self.symmetric_sector()?;
        let full = self.affine();
        let aff = AffineHamiltonian::new(sec.project(&full.base)?, sec.project(&full.drive)?)?;
        Ok((aff, sec))
    }

    /// `Σ σᶻ` in the model's Hilbert space.
    pub fn total_sz(&self) -> Result<OperatorMatrix> {
        match self {
            ChainModel::Degenerate { basis, .. } => Ok(total_pauli(basis, Axis::Z)),
            ChainModel::Pxp { basis, sub, .. } => project_operator(&total_pauli(basis, Axis::Z), sub),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, count_blockaded, translate};

    #[test]
    fn h1_counts_up_up_bonds() {
        let b = build_basis(3).unwrap();
        let h1 = build_h1(&b, 1.7);
        assert!((h1.get(7, 7).re - 3.0 * 1.7).abs() < 1e-15);
        assert_eq!(h1.get(0b010, 0b010).re, 0.0);
        let b10 = build_basis(10).unwrap();
        let h1 = build_h1(&b10, 1.0);
        let kernel = (0..1024).filter(|&i| h1.get(i, i).re == 0.0).count();
        assert_eq!(kernel as u64, count_blockaded(10));
    }

    #[test]
    fn h1_kernel_is_the_blockaded_sector() {
        let b = build_basis(8).unwrap();
        let h1 = build_h1(&b, 1.0);
        let sub = enumerate_blockaded(&b);
        for i in 0..b.dim() {
            assert_eq!(h1.get(i, i).re == 0.0, sub.contains(i));
        }
    }

    #[test]
    fn h1_matches_projector_product_form() {
        use crate::hilbert::PauliSum;
        let b = build_basis(5).unwrap();
        let mut s = PauliSum::new();
        let v0 = 0.8;
        for j in 0..5 {
            let k = b.right(j);
            s.push_real(v0 / 4.0, &[]);
            s.push_real(v0 / 4.0, &[(j, Axis::Z)]);
            s.push_real(v0 / 4.0, &[(k, Axis::Z)]);
            s.push_real(v0 / 4.0, &[(j, Axis::Z), (k, Axis::Z)]);
        }
        let direct = s.build(&b, true).unwrap();
        assert!(direct.max_abs_diff(&build_h1(&b, v0)) < 1e-14);
    }

    #[test]
    fn h_is_linear_in_h_and_v0() {
        let b = build_basis(4).unwrap();
        let p = |h, v| build_h(&b, &DegenerateModelParams::new(h, v).unwrap());
        let lin_h = &(&p(0.3, 1.0) + &p(0.9, 1.0)) - &p(1.2, 2.0);
        assert!(lin_h.max_abs() < 1e-14);
        let lin_v = &(&p(0.5, 0.4) * 3.0) - &p(1.5, 1.2);
        assert!(lin_v.max_abs() < 1e-14);
        assert!(p(0.5, 0.5).is_hermitian());
    }

    #[test]
    fn v0_must_be_positive() {
        assert!(DegenerateModelParams::new(1.0, 0.0).is_err());
        assert!(PxpParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn pxp_is_real_symmetric_and_translation_invariant() {
        let b = build_basis(6).unwrap();
        let sub = enumerate_blockaded(&b);
        let h = build_pxp(&sub, &PxpParams::new(1.0, -0.4).unwrap());
        assert!(h.is_real());
        assert_eq!(h.hermitian_defect(), 0.0);
        // translation permutation inside the sector
        let perm: Vec<usize> = sub
            .states()
            .iter()
            .map(|&i| sub.position(translate(i, 6)).unwrap())
            .collect();
        for (r, c, v) in h.triplets() {
            assert_eq!(h.get(perm[r], perm[c]), v);
        }
    }

    #[test]
    fn pxp_flips_need_down_neighbours() {
        let b = build_basis(4).unwrap();
        let sub = enumerate_blockaded(&b);
        let flip = constrained_flip(&sub);
        // |0001> -> |0101> allowed (sites 0 and 2 are not neighbours), |0011> is not in the sector
        let a = sub.position(0b0001).unwrap();
        let bb = sub.position(0b0101).unwrap();
        assert_eq!(flip.get(bb, a).re, 1.0);
        assert!(!sub.contains(0b0011));
    }

    #[test]
    fn segments() {
        let b = build_basis(4).unwrap();
        let (first, second) = segment_hamiltonians(&b, 2.0, 0.0).unwrap();
        assert!((&first + &second).max_abs() < 1e-15);
        let (first, second) = segment_hamiltonians(&b, 2.0, 1.0).unwrap();
        let twice_h1 = &build_h1(&b, 1.0) * 2.0;
        assert!((&first + &second).max_abs_diff(&twice_h1) < 1e-15);
        assert!(first.is_hermitian() && second.is_hermitian());
        assert!(segment_hamiltonians(&b, 0.0, 1.0).is_err());
    }

    #[test]
    fn affine_forms_match_direct_builders() {
        let m = ChainModel::degenerate(4, 0.7).unwrap();
        let direct = build_h(&build_basis(4).unwrap(), &DegenerateModelParams::new(0.25, 0.7).unwrap());
        assert!(m.affine().at(0.25).max_abs_diff(&direct) < 1e-15);
        let p = ChainModel::pxp(6, 1.3).unwrap();
        if let ChainModel::Pxp { sub, .. } = &p {
            let direct = build_pxp(sub, &PxpParams::new(1.3, -2.0).unwrap());
            assert!(p.affine().at(-2.0).max_abs_diff(&direct) < 1e-15);
        }
        assert!((PxpParams::new(2.0, 0.0).unwrap().lambda_c() + 2.62).abs() < 1e-15);
    }
}
