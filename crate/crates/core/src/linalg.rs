//! Dense helpers shared by the propagators.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// A dense matrix that stays real when its source was real, so that
/// products with complex vectors cost two real passes instead of four.
#[derive(Clone, Debug)]
pub enum DenseMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

fn split(x: &DVector<C64>) -> DMatrix<f64> {
    let n = x.len();
    let mut m = DMatrix::zeros(n, 2);
    for (i, v) in x.iter().enumerate() {
        m[(i, 0)] = v.re;
        m[(i, 1)] = v.im;
    }
    m
}

fn join(m: &DMatrix<f64>) -> DVector<C64> {
    DVector::from_fn(m.nrows(), |i, _| C64::new(m[(i, 0)], m[(i, 1)]))
}

impl DenseMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            DenseMatrix::Real(m) => m.nrows(),
            DenseMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            DenseMatrix::Real(m) => m.ncols(),
            DenseMatrix::Complex(m) => m.ncols(),
        }
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        match self {
            DenseMatrix::Real(m) => join(&(m * split(x))),
            DenseMatrix::Complex(m) => m * x,
        }
    }

    /// `M† x`.
    pub fn adjoint_mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        match self {
            DenseMatrix::Real(m) => join(&m.tr_mul(&split(x))),
            DenseMatrix::Complex(m) => m.ad_mul(x),
        }
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match self {
            DenseMatrix::Real(m) => m.map(|v| C64::new(v, 0.0)),
            DenseMatrix::Complex(m) => m.clone(),
        }
    }

    pub fn column(&self, k: usize) -> DVector<C64> {
        match self {
            DenseMatrix::Real(m) => m.column(k).map(|v| C64::new(v, 0.0)),
            DenseMatrix::Complex(m) => m.column(k).into_owned(),
        }
    }

    /// `M† A M` for a dense operator `A` of matching kind.
    pub fn congruence(&self, a: &DenseMatrix) -> DenseMatrix {
        match (self, a) {
            (DenseMatrix::Real(m), DenseMatrix::Real(a)) => DenseMatrix::Real(m.tr_mul(&(a * m))),
            _ => {
                let m = self.to_complex();
                let a = a.to_complex();
                DenseMatrix::Complex(m.ad_mul(&(a * &m)))
            }
        }
    }
}
