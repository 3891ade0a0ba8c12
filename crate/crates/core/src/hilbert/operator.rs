use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance on `max |A - A†|` for an operator tagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Compressed sparse row storage.
#[derive(Clone, Debug, PartialEq)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        // drop entries that cancelled exactly
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.row_ptr.len() - 1).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Sparse(Csr),
    Dense(DMatrix<C64>),
}

/// A square operator on a (possibly constrained) spin Hilbert space.
///
/// Construction happens in sparse form; products of dense operands and
/// anything that needs a full matrix go through [`OperatorMatrix::to_dense`].
/// The `hermitian` tag is only ever set after the defect has been checked.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    storage: Storage,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Builds a sparse operator; duplicate entries are summed.
    pub fn from_triplets<I>(dim: usize, entries: I, hermitian: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let trip: Vec<_> = entries.into_iter().collect();
        for &(r, c, _) in &trip {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.max(c) + 1,
                });
            }
        }
        let op = OperatorMatrix {
            dim,
            storage: Storage::Sparse(Csr::from_triplets(dim, trip)),
            hermitian: false,
        };
        if hermitian {
            op.tagged_hermitian()
        } else {
            Ok(op)
        }
    }

    pub fn from_dense(m: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let op = OperatorMatrix {
            dim: m.nrows(),
            storage: Storage::Dense(m),
            hermitian: false,
        };
        if hermitian {
            op.tagged_hermitian()
        } else {
            Ok(op)
        }
    }

    pub fn from_real_dense(m: &DMatrix<f64>, hermitian: bool) -> Result<Self> {
        Self::from_dense(m.map(|x| C64::new(x, 0.0)), hermitian)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let trip = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, C64::new(v, 0.0)));
        OperatorMatrix {
            dim: values.len(),
            storage: Storage::Sparse(Csr::from_triplets(values.len(), trip.collect())),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            storage: Storage::Sparse(Csr::from_triplets(dim, Vec::new())),
            hermitian: true,
        }
    }

    /// Checks the Hermitian defect and sets the tag.
    pub fn tagged_hermitian(mut self) -> Result<Self> {
        let defect = self.hermitian_defect();
        if defect >= HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Drops the Hermitian tag (e.g. before using the operator as a generic matrix).
    pub fn untagged(mut self) -> Self {
        self.hermitian = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse(s) => s.vals.len(),
            Storage::Dense(d) => d.iter().filter(|v| **v != C64::new(0.0, 0.0)).count(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match &self.storage {
            Storage::Sparse(s) => s.get(r, c),
            Storage::Dense(d) => d[(r, c)],
        }
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.storage {
            Storage::Sparse(s) => s.triplets().collect(),
            Storage::Dense(d) => {
                let mut out = Vec::new();
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        let v = d[(r, c)];
                        if v != C64::new(0.0, 0.0) {
                            out.push((r, c, v));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Sparse(s) => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (r, c, v) in s.triplets() {
                    m[(r, c)] = v;
                }
                m
            }
        }
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        match &self.storage {
            Storage::Sparse(s) => s.vals.iter().all(|v| v.im == 0.0),
            Storage::Dense(d) => d.iter().all(|v| v.im == 0.0),
        }
    }

    pub fn to_real_dense(&self) -> Option<DMatrix<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(match &self.storage {
            Storage::Dense(d) => d.map(|v| v.re),
            Storage::Sparse(s) => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (r, c, v) in s.triplets() {
                    m[(r, c)] = v.re;
                }
                m
            }
        })
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim, "operator/vector dimension mismatch");
        assert_eq!(y.len(), self.dim, "operator/vector dimension mismatch");
        match &self.storage {
            Storage::Sparse(s) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                        acc += s.vals[k] * x[s.cols[k]];
                    }
                    *yr = acc;
                }
            }
            Storage::Dense(d) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, xc) in x.iter().enumerate() {
                        acc += d[(r, c)] * xc;
                    }
                    *yr = acc;
                }
            }
        }
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim);
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `⟨x| A |x⟩`.
    pub fn expectation(&self, x: &DVector<C64>) -> C64 {
        x.dotc(&self.apply(x))
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d.adjoint()),
            Storage::Sparse(s) => Storage::Sparse(Csr::from_triplets(
                self.dim,
                s.triplets().map(|(r, c, v)| (c, r, v.conj())).collect(),
            )),
        };
        OperatorMatrix {
            dim: self.dim,
            storage,
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Sparse(s) => s.vals.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Dense(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.storage {
            Storage::Sparse(s) => s.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
            Storage::Dense(d) => d.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        (self - other).max_abs()
    }

    /// `max |A - A†|`.
    pub fn hermitian_defect(&self) -> f64 {
        match &self.storage {
            Storage::Sparse(s) => s
                .triplets()
                .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
                .fold(0.0, f64::max),
            Storage::Dense(d) => {
                let mut worst: f64 = 0.0;
                for r in 0..self.dim {
                    for c in r..self.dim {
                        worst = worst.max((d[(r, c)] - d[(c, r)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scaled_complex(C64::new(s, 0.0)).with_tag(self.hermitian)
    }

    pub fn scaled_complex(&self, s: C64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d * s),
            Storage::Sparse(sp) => {
                let mut sp = sp.clone();
                sp.vals.iter_mut().for_each(|v| *v *= s);
                if s == C64::new(0.0, 0.0) {
                    sp = Csr::from_triplets(self.dim, Vec::new());
                }
                Storage::Sparse(sp)
            }
        };
        OperatorMatrix {
            dim: self.dim,
            storage,
            hermitian: false,
        }
    }

    fn with_tag(mut self, hermitian: bool) -> Self {
        self.hermitian = hermitian;
        self
    }

    fn combine(&self, other: &OperatorMatrix, sign: f64) -> OperatorMatrix {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let hermitian = self.hermitian && other.hermitian;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let trip = a
                    .triplets()
                    .chain(b.triplets().map(|(r, c, v)| (r, c, v * sign)))
                    .collect();
                Storage::Sparse(Csr::from_triplets(self.dim, trip))
            }
            _ => {
                let b = other.to_dense();
                Storage::Dense(self.to_dense() + b * C64::new(sign, 0.0))
            }
        };
        OperatorMatrix {
            dim: self.dim,
            storage,
            hermitian,
        }
    }

    /// Matrix product `A B`; sparse when both factors are sparse.
    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut trip = Vec::new();
                let mut acc = vec![C64::new(0.0, 0.0); self.dim];
                let mut touched: Vec<usize> = Vec::new();
                for r in 0..self.dim {
                    for ka in a.row_ptr[r]..a.row_ptr[r + 1] {
                        let mid = a.cols[ka];
                        let av = a.vals[ka];
                        for kb in b.row_ptr[mid]..b.row_ptr[mid + 1] {
                            let c = b.cols[kb];
                            if acc[c] == C64::new(0.0, 0.0) {
                                touched.push(c);
                            }
                            acc[c] += av * b.vals[kb];
                        }
                    }
                    for &c in &touched {
                        trip.push((r, c, acc[c]));
                        acc[c] = C64::new(0.0, 0.0);
                    }
                    touched.clear();
                }
                Storage::Sparse(Csr::from_triplets(self.dim, trip))
            }
            _ => Storage::Dense(self.to_dense() * other.to_dense()),
        };
        OperatorMatrix {
            dim: self.dim,
            storage,
            hermitian: false,
        }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(&self.matmul(other) - &other.matmul(self))
    }

    pub fn into_dense(self) -> OperatorMatrix {
        let d = self.to_dense();
        OperatorMatrix {
            dim: self.dim,
            storage: Storage::Dense(d),
            hermitian: self.hermitian,
        }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.combine(rhs, -1.0)
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: OperatorMatrix) -> OperatorMatrix {
        &self + &rhs
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: OperatorMatrix) -> OperatorMatrix {
        &self - &rhs
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, s: f64) -> OperatorMatrix {
        self.scaled(s)
    }
}

impl Mul<f64> for OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, s: f64) -> OperatorMatrix {
        self.scaled(s)
    }
}

impl Mul<C64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, s: C64) -> OperatorMatrix {
        self.scaled_complex(s)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicate_triplets_are_summed_and_cancellations_dropped() {
        let op = OperatorMatrix::from_triplets(
            2,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 0, c(-1.0, 0.0))],
            false,
        )
        .unwrap();
        assert_eq!(op.get(0, 1), c(3.0, 0.0));
        assert_eq!(op.nnz(), 1);
    }

    #[test]
    fn hermitian_tag_is_checked() {
        let err = OperatorMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0))], true);
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
        let ok = OperatorMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))], true);
        assert!(ok.unwrap().is_hermitian());
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(OperatorMatrix::from_triplets(2, vec![(2, 0, c(1.0, 0.0))], false).is_err());
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let a = OperatorMatrix::from_triplets(
            3,
            vec![(0, 1, c(1.0, 2.0)), (1, 2, c(-1.0, 0.5)), (2, 0, c(0.3, 0.0)), (1, 1, c(2.0, 0.0))],
            false,
        )
        .unwrap();
        let b = a.adjoint();
        let sparse = a.matmul(&b);
        let dense = a.clone().into_dense().matmul(&b);
        assert!(sparse.is_sparse());
        assert!(!dense.is_sparse());
        assert!(sparse.max_abs_diff(&dense) < 1e-15);
        let comm = a.commutator(&b).unwrap();
        let manual = &a.to_dense() * &b.to_dense() - &b.to_dense() * &a.to_dense();
        assert!((comm.to_dense() - manual).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn apply_matches_dense_product() {
        let a = OperatorMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))], true).unwrap();
        let x = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let y = a.apply(&x);
        let yd = a.to_dense() * &x;
        assert_eq!(y, yd);
        assert!((a.expectation(&x).im).abs() < 1e-15);
    }
}
