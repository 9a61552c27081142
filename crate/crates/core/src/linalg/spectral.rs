use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::{Operator, C64, HERMITIAN_TOL, ZERO};
use crate::error::{Error, Result};

/// Spectral decomposition of a Hermitian operator: eigenvalues ascending,
/// eigenvectors as the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

impl Eigh {
    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = Operator::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..n {
                    if fl[k] != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * fl[k];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Operator {
        self.reconstruct_with(|x| x)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

pub(crate) fn to_dmatrix(m: &Operator) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_dmatrix(m: &DMatrix<C64>) -> Operator {
    Operator::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigendecomposition of a Hermitian matrix held by nalgebra, ascending.
pub(crate) fn eigh_dmatrix(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

impl Operator {
    /// Eigendecomposition of a Hermitian operator.
    pub fn eigh(&self) -> Result<Eigh> {
        self.require_square()?;
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let (values, vectors) = eigh_dmatrix(to_dmatrix(&self.hermitian_part()));
        Ok(Eigh {
            values,
            vectors: from_dmatrix(&vectors),
        })
    }

    /// Eigenvalues of the Hermitian part, ascending, without the tolerance check.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = to_dmatrix(&self.hermitian_part())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.require_hermitian()?;
        Ok(self.hermitian_eigenvalues()[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        self.require_hermitian()?;
        Ok(*self.hermitian_eigenvalues().last().unwrap())
    }

    /// Sum of singular values. Hermitian inputs use `Σ|λ|` directly.
    pub fn trace_norm(&self) -> Result<f64> {
        self.require_square()?;
        if self.is_hermitian(HERMITIAN_TOL) {
            return Ok(self.hermitian_eigenvalues().iter().map(|x| x.abs()).sum());
        }
        Ok(self.singular_values().iter().sum())
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let gram = self.adjoint().matmul(self);
        let mut s: Vec<f64> = gram
            .hermitian_eigenvalues()
            .into_iter()
            .map(|x| x.max(0.0).sqrt())
            .collect();
        s.reverse();
        s
    }

    /// Principal square root of a PSD operator; negative eigenvalues clip to 0.
    pub fn sqrt_psd(&self) -> Result<Operator> {
        let dims = self.dims.clone();
        Ok(self.eigh()?.reconstruct_with(|x| x.max(0.0).sqrt()).with_dims_unchecked(dims))
    }

    /// Largest eigenvalue and a matching unit eigenvector.
    pub(crate) fn top_eigenpair(&self) -> (f64, Vec<C64>) {
        let (values, vectors) = eigh_dmatrix(to_dmatrix(&self.hermitian_part()));
        let k = values.len() - 1;
        (values[k], vectors.column(k).iter().copied().collect())
    }
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    Ok(0.5 * (a - b).trace_norm()?)
}
