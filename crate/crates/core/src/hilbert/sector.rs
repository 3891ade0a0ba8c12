//! The fully symmetric sector: zero momentum, even under the ring reflection.
//!
//! Every Hamiltonian, drive and observable used by the ramps and the Floquet
//! runs is a uniform sum over the ring, and every initial state is a
//! translation- and reflection-invariant product state or a nondegenerate
//! ground state. Dynamics started there never leave the sector, so it can be
//! simulated in a space roughly `2L` times smaller.

use nalgebra::DVector;

use super::{translate, OperatorMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Site `j` goes to site `L-1-j`.
pub fn reflect(i: usize, l: usize) -> usize {
    let mut out = 0;
    for j in 0..l {
        out |= (i >> j & 1) << (l - 1 - j);
    }
    out
}

/// Orbit sums of a symmetry-closed list of basis states.
#[derive(Clone, Debug)]
pub struct SymmetricSector {
    l: usize,
    parent_dim: usize,
    /// For each sector vector: parent positions and the common amplitude.
    orbits: Vec<(Vec<usize>, f64)>,
    /// Parent position -> (sector index, amplitude).
    owner: Vec<(usize, f64)>,
}

impl SymmetricSector {
    /// `states[k]` is the basis index stored at parent position `k`; the list
    /// must be closed under translation and reflection.
    pub fn new(l: usize, states: &[usize]) -> Result<Self> {
        let position = |s: usize| -> Result<usize> {
            states
                .binary_search(&s)
                .map_err(|_| Error::Config(format!("state {s} has a symmetry image outside the list")))
        };
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sector states must be strictly ascending".into()));
        }
        let mut owner = vec![(usize::MAX, 0.0); states.len()];
        let mut orbits = Vec::new();
        for (k, &s) in states.iter().enumerate() {
            if owner[k].0 != usize::MAX {
                continue;
            }
            let mut members = Vec::new();
            let mut t = s;
            for _ in 0..l {
                members.push(position(t)?);
                members.push(position(reflect(t, l))?);
                t = translate(t, l);
            }
            members.sort_unstable();
            members.dedup();
            let amp = 1.0 / (members.len() as f64).sqrt();
            for &m in &members {
                owner[m] = (orbits.len(), amp);
            }
            orbits.push((members, amp));
        }
        Ok(SymmetricSector {
            l,
            parent_dim: states.len(),
            orbits,
            owner,
        })
    }

    /// Sector of the full `2^L` space.
    pub fn full(l: usize) -> Result<Self> {
        let states: Vec<usize> = (0..1usize << l).collect();
        Self::new(l, &states)
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.orbits.len()
    }

    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    /// `B† A B` with `B` the orbit-sum isometry.
    pub fn project(&self, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        if op.dim() != self.parent_dim {
            return Err(Error::DimensionMismatch {
                expected: self.parent_dim,
                found: op.dim(),
            });
        }
        // A B e_c = A (amp Σ_members e_m); row r of the image lands in owner(r)
        let mut trip = Vec::new();
        let mut x = vec![C64::new(0.0, 0.0); self.parent_dim];
        let mut y = vec![C64::new(0.0, 0.0); self.parent_dim];
        for (col, (members, amp)) in self.orbits.iter().enumerate() {
            x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for &m in members {
                x[m] = C64::new(*amp, 0.0);
            }
            op.apply_into(&x, &mut y);
            let mut acc = vec![C64::new(0.0, 0.0); self.dim()];
            for (r, &v) in y.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    let (row, a) = self.owner[r];
                    acc[row] += v * a;
                }
            }
            for (row, v) in acc.into_iter().enumerate() {
                if v.norm() > 1e-15 {
                    trip.push((row, col, v));
                }
            }
        }
        let out = OperatorMatrix::from_triplets(self.dim(), trip, false)?;
        if op.is_hermitian() {
            let sym = &(&out + &out.adjoint()) * 0.5;
            sym.tagged_hermitian()
        } else {
            Ok(out)
        }
    }

    /// `B† v`: components of a parent vector along the orbit sums.
    pub fn restrict(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.parent_dim {
            return Err(Error::DimensionMismatch {
                expected: self.parent_dim,
                found: v.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.dim(),
            self.orbits
                .iter()
                .map(|(members, amp)| members.iter().map(|&m| v[m]).sum::<C64>() * *amp),
        ))
    }

    /// `B c`: the parent vector of sector amplitudes.
    pub fn embed(&self, c: &DVector<C64>) -> Result<DVector<C64>> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.len(),
            });
        }
        let mut out = DVector::zeros(self.parent_dim);
        for ((members, amp), &ck) in self.orbits.iter().zip(c.iter()) {
            for &m in members {
                out[m] = ck * *amp;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, enumerate_blockaded, total_sx};
    use crate::models::build_h1;

    #[test]
    fn sector_sizes() {
        // binary bracelets
        assert_eq!(SymmetricSector::full(4).unwrap().dim(), 6);
        assert_eq!(SymmetricSector::full(6).unwrap().dim(), 13);
        assert_eq!(SymmetricSector::full(10).unwrap().dim(), 78);
        let b = build_basis(8).unwrap();
        let sub = enumerate_blockaded(&b);
        // 47 blockaded states, bracelets of length 8 without adjacent ones
        assert_eq!(SymmetricSector::new(8, sub.states()).unwrap().dim(), 8);
    }

    #[test]
    fn reflection_is_an_involution() {
        for i in 0..64 {
            assert_eq!(reflect(reflect(i, 6), 6), i);
        }
        assert_eq!(reflect(0b000011, 6), 0b110000);
    }

    #[test]
    fn projection_commutes_with_restriction() {
        let b = build_basis(6).unwrap();
        let h = &(&total_sx(&b) * 0.7) + &build_h1(&b, 1.3);
        let sec = SymmetricSector::full(6).unwrap();
        let hs = sec.project(&h).unwrap();
        assert!(hs.is_hermitian());
        let c = DVector::from_fn(sec.dim(), |k, _| C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05));
        let lhs = sec.restrict(&h.apply(&sec.embed(&c).unwrap())).unwrap();
        let rhs = hs.apply(&c);
        assert!((lhs - rhs).norm() < 1e-12);
        // the image of a symmetric vector stays symmetric
        let v = sec.embed(&c).unwrap();
        let hv = h.apply(&v);
        assert!((sec.embed(&sec.restrict(&hv).unwrap()).unwrap() - hv).norm() < 1e-12);
    }

    #[test]
    fn open_list_is_rejected() {
        assert!(SymmetricSector::new(4, &[0, 1]).is_err());
    }
}
