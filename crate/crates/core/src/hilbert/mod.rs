//! Basis encoding, Pauli operators and the blockade-constrained subspace.
//!
//! Basis state index `i` of an `L`-site ring stores site `j` in bit `j`; bit
//! value 1 is spin up (σᶻ = +1). Boundary conditions are periodic: site `L-1`
//! bonds to site 0.

mod operator;
mod sector;

pub use operator::{OperatorMatrix, HERMITIAN_TOL};
pub use sector::{reflect, SymmetricSector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{c, C64, I};

/// Default upper bound on the chain length.
pub const DEFAULT_MAX_SITES: usize = 14;

/// Computational basis of an `L`-site periodic spin-1/2 chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinBasis {
    l: usize,
}

impl SpinBasis {
    /// A ring of `l` sites with `3 <= l <= DEFAULT_MAX_SITES`.
    pub fn new(l: usize) -> Result<Self> {
        Self::with_max(l, DEFAULT_MAX_SITES)
    }

    pub fn with_max(l: usize, max_sites: usize) -> Result<Self> {
        if l < 3 {
            return Err(Error::Config(format!(
                "L = {l} is too small: a periodic chain needs L >= 3 so that bonds are distinct"
            )));
        }
        if l > max_sites {
            return Err(Error::Config(format!("L = {l} exceeds the maximum L = {max_sites}")));
        }
        Ok(SpinBasis { l })
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    /// Spin at `site` in basis state `index`: true for up.
    pub fn is_up(&self, index: usize, site: usize) -> bool {
        index >> site & 1 == 1
    }

    /// Number of up-up nearest-neighbour bonds on the ring.
    pub fn up_up_bonds(&self, index: usize) -> u32 {
        (index & rotate_right(index, self.l)).count_ones()
    }

    pub fn site_index(&self, site: usize) -> Result<usize> {
        if site >= self.l {
            return Err(Error::SiteOutOfRange { site, l: self.l });
        }
        Ok(site)
    }

    /// Next site on the ring.
    pub fn right(&self, site: usize) -> usize {
        (site + 1) % self.l
    }
}

/// Same as [`SpinBasis::new`].
pub fn build_basis(l: usize) -> Result<SpinBasis> {
    SpinBasis::new(l)
}

/// Rotation of the low `l` bits: bit `j` moves to bit `j-1` (mod `l`), so that
/// `i & rotate_right(i)` marks site `j` when sites `j` and `j+1` are both up.
fn rotate_right(i: usize, l: usize) -> usize {
    let mask = (1usize << l) - 1;
    ((i >> 1) | (i << (l - 1))) & mask
}

/// Cyclic translation by one site: the spin on site `j` moves to site `j+1`.
pub fn translate(i: usize, l: usize) -> usize {
    let mask = (1usize << l) - 1;
    ((i << 1) | (i >> (l - 1))) & mask
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A product of single-site Pauli matrices on distinct sites, acting on a
/// basis index. Returns the image index and its amplitude.
fn act_string(index: usize, factors: &[(usize, Axis)]) -> (usize, C64) {
    let mut amp = c(1.0, 0.0);
    let mut out = index;
    // rightmost factor acts first
    for &(site, axis) in factors.iter().rev() {
        let up = out >> site & 1 == 1;
        match axis {
            Axis::X => out ^= 1 << site,
            Axis::Y => {
                // σʸ|↑⟩ = i|↓⟩, σʸ|↓⟩ = -i|↑⟩
                amp *= if up { I } else { -I };
                out ^= 1 << site;
            }
            Axis::Z => {
                if !up {
                    amp = -amp;
                }
            }
        }
    }
    (out, amp)
}

/// A weighted sum of Pauli strings, `Σ_k w_k Π σ^{a}_{j}`.
#[derive(Clone, Debug, Default)]
pub struct PauliSum {
    terms: Vec<(C64, Vec<(usize, Axis)>)>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight × Π factors`; factors are applied right to left and may
    /// repeat a site.
    pub fn push(&mut self, weight: C64, factors: &[(usize, Axis)]) -> &mut Self {
        self.terms.push((weight, factors.to_vec()));
        self
    }

    pub fn push_real(&mut self, weight: f64, factors: &[(usize, Axis)]) -> &mut Self {
        self.push(c(weight, 0.0), factors)
    }

    pub fn build(&self, basis: &SpinBasis, hermitian: bool) -> Result<OperatorMatrix> {
        for (_, f) in &self.terms {
            for &(s, _) in f {
                basis.site_index(s)?;
            }
        }
        let dim = basis.dim();
        let mut trip = Vec::with_capacity(dim * self.terms.len());
        for (w, f) in &self.terms {
            for i in 0..dim {
                let (j, a) = act_string(i, f);
                trip.push((j, i, *w * a));
            }
        }
        OperatorMatrix::from_triplets(dim, trip, hermitian)
    }
}

/// Single-site Pauli operator `σ^{axis}_{site}`.
pub fn pauli_op(basis: &SpinBasis, site: usize, axis: Axis) -> Result<OperatorMatrix> {
    basis.site_index(site)?;
    PauliSum::new().push_real(1.0, &[(site, axis)]).build(basis, true)
}

/// `Σ_j σ^{axis}_j`.
pub fn total_pauli(basis: &SpinBasis, axis: Axis) -> OperatorMatrix {
    let mut sum = PauliSum::new();
    for j in 0..basis.sites() {
        sum.push_real(1.0, &[(j, axis)]);
    }
    sum.build(basis, true).expect("sites are in range")
}

/// `Σ_j σˣ_j`, the drive operator.
pub fn total_sx(basis: &SpinBasis) -> OperatorMatrix {
    total_pauli(basis, Axis::X)
}

/// `Σ_j σ^a_j σ^a_{j+1}` on the ring.
pub fn bond_correlator(basis: &SpinBasis, axis: Axis) -> OperatorMatrix {
    let mut sum = PauliSum::new();
    for j in 0..basis.sites() {
        sum.push_real(1.0, &[(j, axis), (basis.right(j), axis)]);
    }
    sum.build(basis, true).expect("sites are in range")
}

/// Number of blockaded configurations on a ring of `l` sites,
/// `trace(T^l)` with `T = [[1, 1], [1, 0]]` (state 0 = down, 1 = up).
pub fn count_blockaded(l: usize) -> u64 {
    fn mul(a: [[u128; 2]; 2], b: [[u128; 2]; 2]) -> [[u128; 2]; 2] {
        let mut out = [[0u128; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
    let mut acc = [[1u128, 0], [0, 1]];
    let mut base = [[1u128, 1], [1, 0]];
    let mut e = l;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        e >>= 1;
    }
    (acc[0][0] + acc[1][1]) as u64
}

/// Closed form `φ^L + (-1/φ)^L` with the golden ratio `φ`.
pub fn count_blockaded_formula(l: usize) -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    phi.powi(l as i32) + (-1.0 / phi).powi(l as i32)
}

/// The blockaded sector: configurations with no two adjacent up spins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedSubspace {
    l: usize,
    states: Vec<usize>,
}

impl ConstrainedSubspace {
    pub fn sites(&self) -> usize {
        self.l
    }

    /// Basis indices in ascending order.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Position of a full-space index inside the sector.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.states.binary_search(&index).ok()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.position(index).is_some()
    }
}

pub fn is_blockaded(index: usize, l: usize) -> bool {
    index & rotate_right(index, l) == 0
}

pub fn enumerate_blockaded(basis: &SpinBasis) -> ConstrainedSubspace {
    let l = basis.sites();
    let states = (0..basis.dim()).filter(|&i| is_blockaded(i, l)).collect();
    ConstrainedSubspace { l, states }
}

/// Restriction of a full-space operator to the blockaded sector.
pub fn project_operator(op: &OperatorMatrix, sub: &ConstrainedSubspace) -> Result<OperatorMatrix> {
    let full = 1usize << sub.sites();
    if op.dim() != full {
        return Err(Error::DimensionMismatch {
            expected: full,
            found: op.dim(),
        });
    }
    let trip = op.triplets().into_iter().filter_map(|(r, col, v)| {
        let pr = sub.position(r)?;
        let pc = sub.position(col)?;
        Some((pr, pc, v))
    });
    OperatorMatrix::from_triplets(sub.dim(), trip, op.is_hermitian())
}

/// Embeds a sector vector into the full `2^L` space.
pub fn embed_vector(amps: &[C64], sub: &ConstrainedSubspace) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); 1 << sub.sites()];
    for (&idx, &a) in sub.states().iter().zip(amps) {
        out[idx] = a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(build_basis(3).unwrap().dim(), 8);
        assert_eq!(build_basis(10).unwrap().dim(), 1024);
        assert!(matches!(build_basis(2), Err(Error::Config(_))));
        assert!(build_basis(15).is_err());
        assert!(SpinBasis::with_max(15, 16).is_ok());
    }

    #[test]
    fn sigma_z_on_all_down_is_minus_one() {
        let b = build_basis(3).unwrap();
        let z = pauli_op(&b, 0, Axis::Z).unwrap();
        assert!(close(z.get(0, 0), c(-1.0, 0.0)));
    }

    #[test]
    fn sigma_x_flips_bit() {
        let b = build_basis(3).unwrap();
        let x = pauli_op(&b, 0, Axis::X).unwrap();
        let mut e0 = DVector::zeros(8);
        e0[0] = c(1.0, 0.0);
        let out = x.apply(&e0);
        assert!(close(out[1], c(1.0, 0.0)));
        assert!(out.iter().enumerate().all(|(i, v)| i == 1 || v.norm() == 0.0));
    }

    #[test]
    fn sigma_y_squares_to_identity() {
        let b = build_basis(4).unwrap();
        for site in 0..4 {
            let y = pauli_op(&b, site, Axis::Y).unwrap();
            assert!(y.matmul(&y).max_abs_diff(&OperatorMatrix::identity(16)) < 1e-15);
        }
    }

    #[test]
    fn site_out_of_range() {
        let b = build_basis(4).unwrap();
        assert!(matches!(pauli_op(&b, 4, Axis::X), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn pauli_algebra_xy_is_iz() {
        let b = build_basis(3).unwrap();
        let x = pauli_op(&b, 1, Axis::X).unwrap();
        let y = pauli_op(&b, 1, Axis::Y).unwrap();
        let z = pauli_op(&b, 1, Axis::Z).unwrap();
        let prod = x.matmul(&y);
        assert!(prod.max_abs_diff(&(&z * I)) < 1e-15);
        // a product string applies its factors right to left
        let s = PauliSum::new().push_real(1.0, &[(1, Axis::X), (1, Axis::Y)]).build(&b, false).unwrap();
        assert!(s.max_abs_diff(&prod) < 1e-15);
    }

    #[test]
    fn blockade_counts() {
        assert_eq!(count_blockaded(3), 4);
        assert_eq!(count_blockaded(10), 123);
        assert_eq!(count_blockaded(16), 2207);
        for l in 2..40 {
            assert_eq!(count_blockaded_formula(l).round() as u64, count_blockaded(l));
        }
    }

    #[test]
    fn enumerate_small_rings() {
        let s3 = enumerate_blockaded(&build_basis(3).unwrap());
        assert_eq!(s3.states(), &[0b000, 0b001, 0b010, 0b100]);
        let b4 = build_basis(4).unwrap();
        let brute = (0..16usize)
            .filter(|&i| (0..4).all(|j| !(i >> j & 1 == 1 && i >> ((j + 1) % 4) & 1 == 1)))
            .count();
        assert_eq!(brute, 7);
        assert_eq!(enumerate_blockaded(&b4).dim(), 7);
    }

    #[test]
    fn projections() {
        let b = build_basis(3).unwrap();
        let sub = enumerate_blockaded(&b);
        let id = project_operator(&OperatorMatrix::identity(8), &sub).unwrap();
        assert!(id.max_abs_diff(&OperatorMatrix::identity(4)) == 0.0);
        let sz = project_operator(&total_pauli(&b, Axis::Z), &sub).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| sz.get(i, i).re).collect();
        assert_eq!(diag, vec![-3.0, -1.0, -1.0, -1.0]);
        assert!(sz.is_hermitian());
        let wrong = OperatorMatrix::identity(4);
        assert!(matches!(project_operator(&wrong, &sub), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn translation_is_a_cyclic_shift() {
        assert_eq!(translate(0b001, 3), 0b010);
        assert_eq!(translate(0b100, 3), 0b001);
    }
}
