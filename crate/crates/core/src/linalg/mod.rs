//! Dense complex operators over multi-factor Hilbert spaces.
//!
//! An [`Operator`] is a row-major complex matrix that carries the tensor
//! factorization of its row space (`dims`). Square operators use the same
//! factorization for their columns. A [`Ket`] is the vector counterpart.

mod random;
pub(crate) mod spectral;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub use random::{
    sample_ginibre, sample_haar_isometry, sample_haar_pure, sample_haar_unitary, sample_hs_density,
    stream, RNG_STREAM_ID,
};
pub use spectral::{trace_distance, Eigh};

pub type C64 = num_complex::Complex64;

/// Hermiticity tolerance (max-abs of `m - m†`).
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Positivity tolerance on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    rows: usize,
    cols: usize,
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            dims: vec![rows],
            data: vec![ZERO; rows * cols],
        }
    }

    /// Square zero operator on the space with factor dimensions `dims`.
    pub fn zeros_on(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            rows: n,
            cols: n,
            dims: dims.to_vec(),
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn identity_on(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self::identity(n).with_dims_unchecked(dims.to_vec())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            dims: vec![rows],
            data,
        }
    }

    /// Builds an operator from row-major data.
    pub fn from_data(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} entries for a {rows}x{cols} operator",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            dims: vec![rows],
            data,
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(*v, 0.0);
        }
        m
    }

    /// `|i⟩⟨j|` on an `n`-dimensional space.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        Self::unit_rect(n, n, i, j)
    }

    /// `|i⟩⟨j|` as a `rows x cols` matrix.
    pub fn unit_rect(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data[i * cols + j] = ONE;
        m
    }

    /// Replaces the factor dimensions of the row space.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        if prod != self.rows || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(alloc::format!(
                "factor dims {dims:?} do not multiply to {}",
                self.rows
            )));
        }
        Ok(Self { dims, ..self })
    }

    pub(crate) fn with_dims_unchecked(self, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), self.rows);
        Self { dims, ..self }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub(crate) fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj());
        if self.is_square() {
            out.dims = self.dims.clone();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)]);
        if self.is_square() {
            out.dims = self.dims.clone();
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            data: self.data.iter().map(|&z| f(z)).collect(),
            ..self.clone()
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-abs entry of `self - self†`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        self.require_square()?;
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
            }
        }
        out
    }

    /// Matrix product. Panics on shape mismatch.
    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut data = vec![ZERO; n * m];
        for i in 0..n {
            let out_row = &mut data[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[l * m..(l + 1) * m];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        let dims = if n == m && self.is_square() {
            self.dims.clone()
        } else {
            vec![n]
        };
        Operator {
            rows: n,
            cols: m,
            dims,
            data,
        }
    }

    pub fn apply_to(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Hilbert-Schmidt inner product `tr(self† rhs)`.
    pub fn inner(&self, rhs: &Operator) -> C64 {
        assert_eq!(self.data.len(), rhs.data.len());
        self.data.iter().zip(&rhs.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|v⟩⟨v|`, keeping the ket's factor dimensions.
    pub fn projector(v: &Ket) -> Self {
        let n = v.len();
        let mut data = Vec::with_capacity(n * n);
        for a in &v.amps {
            for b in &v.amps {
                data.push(a * b.conj());
            }
        }
        Operator {
            rows: n,
            cols: n,
            dims: v.dims.clone(),
            data,
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Kronecker product; factor dims concatenate.
    pub fn kron(&self, b: &Operator) -> Operator {
        let (ar, ac, br, bc) = (self.rows, self.cols, b.rows, b.cols);
        let rows = ar * br;
        let cols = ac * bc;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..ar {
            for j in 0..ac {
                let a = self.data[i * ac + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..br {
                    let base = (i * br + k) * cols + j * bc;
                    let brow = &b.data[k * bc..(k + 1) * bc];
                    for (o, v) in data[base..base + bc].iter_mut().zip(brow) {
                        *o = a * v;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&b.dims);
        Operator {
            rows,
            cols,
            dims,
            data,
        }
    }

    /// Traces out every factor not listed in `keep`. The result's factors
    /// follow the order of `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        self.require_square()?;
        let nf = self.dims.len();
        let mut seen = vec![false; nf];
        for &k in keep {
            if k >= nf {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    factors: nf,
                });
            }
            if seen[k] {
                return Err(Error::MalformedPermutation(alloc::format!(
                    "factor {k} listed twice"
                )));
            }
            seen[k] = true;
        }
        let mut perm: Vec<usize> = keep.to_vec();
        perm.extend((0..nf).filter(|k| !seen[*k]));
        let reordered = self.reorder_factors(&perm)?;
        let dk: usize = keep.iter().map(|&k| self.dims[k]).product();
        let dt = self.rows / dk;
        let n = self.rows;
        let mut out = Operator::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += reordered.data[(i * dt + t) * n + j * dt + t];
                }
                out.data[i * dk + j] = acc;
            }
        }
        let dims = if keep.is_empty() {
            vec![1]
        } else {
            keep.iter().map(|&k| self.dims[k]).collect()
        };
        Ok(out.with_dims_unchecked(dims))
    }

    /// Conjugation by the unitary that moves old factor `perm[k]` into slot `k`.
    pub fn reorder_factors(&self, perm: &[usize]) -> Result<Operator> {
        self.require_square()?;
        let map = factor_index_map(&self.dims, perm)?;
        let n = self.rows;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            let ni = map[i] * n;
            for j in 0..n {
                data[ni + map[j]] = self.data[i * n + j];
            }
        }
        Ok(Operator {
            rows: n,
            cols: n,
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            data,
        })
    }
}

/// For each basis index of the space with factor dims `dims`, the index it
/// moves to when factor `perm[k]` is placed in slot `k`.
pub(crate) fn factor_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    validate_permutation(perm, dims.len())?;
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut new_strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        new_strides[k] = new_strides[k + 1] * new_dims[k + 1];
    }
    // stride of old factor f in the new layout
    let mut stride_of_old = vec![0usize; dims.len()];
    for (k, &p) in perm.iter().enumerate() {
        stride_of_old[p] = new_strides[k];
    }
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; dims.len()];
    for entry in map.iter_mut() {
        *entry = digits
            .iter()
            .zip(&stride_of_old)
            .map(|(d, s)| d * s)
            .sum();
        for f in (0..dims.len()).rev() {
            digits[f] += 1;
            if digits[f] < dims[f] {
                break;
            }
            digits[f] = 0;
        }
    }
    Ok(map)
}

pub(crate) fn validate_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::MalformedPermutation(alloc::format!(
            "length {} for {len} factors",
            perm.len()
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(Error::MalformedPermutation(alloc::format!("{perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `a ⊗ b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kron(b)
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.map(|z| -z)
    }
}

/// A (not necessarily normalized) vector with tensor-factor dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.iter().product::<usize>() != amps.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "factor dims {dims:?} for a vector of length {}",
                amps.len()
            )));
        }
        Ok(Self { dims, amps })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self {
            dims: vec![dim],
            amps,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
        self
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Ket::new(dims, self.amps)
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ket { dims, amps }
    }

    pub fn reorder_factors(&self, perm: &[usize]) -> Result<Ket> {
        let map = factor_index_map(&self.dims, perm)?;
        let mut amps = vec![ZERO; self.len()];
        for (i, a) in self.amps.iter().enumerate() {
            amps[map[i]] = *a;
        }
        Ok(Ket {
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            amps,
        })
    }

    /// Reshapes into a `rows x (len / rows)` matrix, row-major.
    pub fn to_matrix(&self, rows: usize) -> Result<Operator> {
        if rows == 0 || self.len() % rows != 0 {
            return Err(Error::DimensionMismatch(alloc::format!(
                "cannot split length {} into {rows} rows",
                self.len()
            )));
        }
        Operator::from_data(rows, self.len() / rows, self.amps.clone())
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identities() {
        let i2 = Operator::identity(2);
        assert_eq!(i2.kron(&i2).data(), Operator::identity(4).data());
        assert_eq!(i2.kron(&i2).dims(), &[2, 2]);
    }

    #[test]
    fn kron_diagonals() {
        let k = Operator::diag(&[1.0, 2.0]).kron(&Operator::diag(&[1.0, 3.0]));
        assert_eq!(k.data(), Operator::diag(&[1.0, 3.0, 2.0, 6.0]).data());
    }

    #[test]
    fn kron_basis_projectors() {
        let k = Operator::unit(2, 0, 0).kron(&Operator::unit(2, 1, 1));
        assert_eq!(k.data(), Operator::unit(4, 1, 1).data());
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let bell = Ket::new(vec![2, 2], vec![c(s), ZERO, ZERO, c(s)]).unwrap();
        let rho = Operator::projector(&bell);
        let red = rho.partial_trace(&[0]).unwrap();
        assert!((&red - &Operator::identity(2).scale(0.5)).max_abs() < 1e-15);
        assert_eq!(red.dims(), &[2]);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = Operator::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let sigma = Operator::diag(&[0.25, 0.25, 0.5]);
        let prod = rho.kron(&sigma);
        let red = prod.partial_trace(&[0]).unwrap();
        assert!((&red - &rho).max_abs() < 1e-15);
        let other = prod.partial_trace(&[1]).unwrap();
        assert!((&other - &sigma).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let m = Operator::identity_on(&[2, 2]);
        assert!(matches!(
            m.partial_trace(&[2]),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn reorder_swaps_factors() {
        let m = Operator::unit(4, 1, 1).with_dims(vec![2, 2]).unwrap();
        let swapped = m.reorder_factors(&[1, 0]).unwrap();
        assert_eq!(swapped.data(), Operator::unit(4, 2, 2).data());
        let same = m.reorder_factors(&[0, 1]).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn reorder_rejects_malformed() {
        let m = Operator::identity_on(&[2, 2]);
        assert!(m.reorder_factors(&[0, 0]).is_err());
        assert!(m.reorder_factors(&[0]).is_err());
    }

    #[test]
    fn interleave_round_trip_is_exact() {
        let m = Operator::from_fn(16, 16, |i, j| C64::new(i as f64 * 0.37, j as f64 - 0.5))
            .with_dims(vec![2, 2, 2, 2])
            .unwrap();
        let to_block = [0, 2, 1, 3];
        let back = m.reorder_factors(&to_block).unwrap().reorder_factors(&to_block).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ket_reorder_matches_operator_reorder() {
        let k = Ket::new(
            vec![2, 3],
            (0..6).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect(),
        )
        .unwrap();
        let lhs = Operator::projector(&k.reorder_factors(&[1, 0]).unwrap());
        let rhs = Operator::projector(&k).reorder_factors(&[1, 0]).unwrap();
        assert_eq!(lhs, rhs);
    }
}
