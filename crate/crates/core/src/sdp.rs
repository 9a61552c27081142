//! A small primal-dual interior-point solver for complex Hermitian block SDPs.
//!
//! Problems are stated in the standard pair
//!
//! ```text
//! (P)  min Σ_k Re tr(C_k X_k)   s.t.  Σ_k Re tr(A_{k,i} X_k) = b_i,  X_k ⪰ 0
//! (D)  max bᵀy                  s.t.  S_k = C_k − Σ_i y_i A_{k,i} ⪰ 0
//! ```
//!
//! and solved with the HKM search direction and Mehrotra's predictor-corrector.
//! Constraint matrices are sparse lists of entries.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::spectral::{from_dmatrix, to_dmatrix};
use crate::linalg::{Operator, C64};

/// A Hermitian matrix stored as `(row, col, value)` entries (both triangles).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseHermitian {
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new(entries: Vec<(usize, usize, C64)>) -> Self {
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Re tr(A Y)`.
    fn pair(&self, y: &DMatrix<C64>) -> f64 {
        self.entries.iter().map(|&(p, q, v)| (v * y[(q, p)]).re).sum()
    }

    fn add_scaled_to(&self, target: &mut DMatrix<C64>, s: f64) {
        for &(p, q, v) in &self.entries {
            target[(p, q)] += v * s;
        }
    }
}

/// One semidefinite block: cost `C` and one constraint matrix per dual variable.
#[derive(Clone, Debug)]
pub struct SdpBlock {
    pub c: Operator,
    pub a: Vec<SparseHermitian>,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub b: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub max_iter: usize,
    /// Target for relative gap and relative primal/dual infeasibility.
    pub tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<Operator>,
    pub s: Vec<Operator>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Block {
    c: DMatrix<C64>,
    a: Vec<SparseHermitian>,
    active: Vec<usize>,
}

impl Block {
    fn size(&self) -> usize {
        self.c.nrows()
    }

    fn adjoint_map(&self, y: &[f64]) -> DMatrix<C64> {
        let n = self.size();
        let mut out = DMatrix::zeros(n, n);
        for &i in &self.active {
            self.a[i].add_scaled_to(&mut out, y[i]);
        }
        out
    }
}

fn herm(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn re_trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

/// Largest `α` with `X + α dX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<C64, nalgebra::Dyn>, dx: &DMatrix<C64>) -> f64 {
    let l = chol.l();
    let Some(t) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&t.adjoint()) else {
        return 0.0;
    };
    let w = herm(&w);
    let min = w
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

/// Solves `(P)`/`(D)`. A non-converged run still returns its last iterate
/// with `converged = false`; only a breakdown of the linear algebra is an error.
pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution> {
    let m = problem.b.len();
    let blocks: Vec<Block> = problem
        .blocks
        .iter()
        .map(|blk| {
            if blk.a.len() != m || !blk.c.is_square() {
                return Err(Error::DimensionMismatch(
                    "every SDP block needs a square cost and one constraint per dual variable".into(),
                ));
            }
            let active = (0..m).filter(|&i| !blk.a[i].is_empty()).collect();
            Ok(Block {
                c: herm(&to_dmatrix(&blk.c)),
                a: blk.a.clone(),
                active,
            })
        })
        .collect::<Result<_>>()?;
    let b = DVector::from_column_slice(&problem.b);
    let n_total: usize = blocks.iter().map(Block::size).sum();

    let b_norm = b.norm();
    let c_norm = blocks.iter().map(|k| k.c.norm_squared()).sum::<f64>().sqrt();
    let a_max = blocks
        .iter()
        .flat_map(|k| k.a.iter())
        .map(|a| a.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let root_n = (n_total as f64).sqrt();
    let xi = root_n.max(10.0) * (1.0 + b_norm).max(1.0) / (1.0 + a_max);
    let eta = root_n.max(10.0).max(c_norm).max(a_max);

    let mut x: Vec<DMatrix<C64>> = blocks
        .iter()
        .map(|k| DMatrix::identity(k.size(), k.size()) * C64::new(xi, 0.0))
        .collect();
    let mut s: Vec<DMatrix<C64>> = blocks
        .iter()
        .map(|k| DMatrix::identity(k.size(), k.size()) * C64::new(eta, 0.0))
        .collect();
    let mut y = vec![0.0; m];

    let apply_a = |mats: &[DMatrix<C64>]| -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (k, blk) in blocks.iter().enumerate() {
            for &i in &blk.active {
                out[i] += blk.a[i].pair(&mats[k]);
            }
        }
        out
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut report: (f64, f64, f64, f64);
    loop {
        let ax = apply_a(&x);
        let rp = &b - &ax;
        let rd: Vec<DMatrix<C64>> = blocks
            .iter()
            .enumerate()
            .map(|(k, blk)| &blk.c - &s[k] - blk.adjoint_map(&y))
            .collect();
        let pobj: f64 = blocks.iter().zip(&x).map(|(blk, xk)| re_trace_product(&blk.c, xk)).sum();
        let dobj = b.dot(&DVector::from_column_slice(&y));
        let xs: f64 = x.iter().zip(&s).map(|(xk, sk)| re_trace_product(xk, sk)).sum();
        let mu = xs / n_total as f64;
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let rel_gap = xs.abs().max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        report = (pobj, dobj, pinf, dinf);
        if rel_gap < options.tol && pinf < options.tol && dinf < options.tol {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let s_chol: Vec<_> = s.iter().map(|sk| Cholesky::new(sk.clone())).collect();
        let x_chol: Vec<_> = x.iter().map(|xk| Cholesky::new(xk.clone())).collect();
        if s_chol.iter().chain(&x_chol).any(Option::is_none) {
            break;
        }
        let s_chol: Vec<_> = s_chol.into_iter().map(Option::unwrap).collect();
        let x_chol: Vec<_> = x_chol.into_iter().map(Option::unwrap).collect();
        let s_inv: Vec<DMatrix<C64>> = s_chol.iter().map(|c| c.inverse()).collect();

        // Schur complement M_ij = Re tr(A_i X A_j S⁻¹)
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (k, blk) in blocks.iter().enumerate() {
            let (xk, sik) = (&x[k], &s_inv[k]);
            for (ai, &i) in blk.active.iter().enumerate() {
                for &j in &blk.active[ai..] {
                    let mut acc = 0.0;
                    for &(p, q, v) in &blk.a[i].entries {
                        for &(r, t, w) in &blk.a[j].entries {
                            acc += (v * xk[(q, r)] * w * sik[(t, p)]).re;
                        }
                    }
                    schur[(i, j)] += acc;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                schur[(i, j)] = schur[(j, i)];
            }
        }
        let solver = SchurSolver::new(schur)?;

        let x_rd_sinv: Vec<DMatrix<C64>> = (0..blocks.len()).map(|k| &x[k] * &rd[k] * &s_inv[k]).collect();
        let base_rhs = &b + apply_a(&x_rd_sinv);

        let direction = |rhs: &DVector<f64>, sigma_mu: f64, second: Option<&[DMatrix<C64>]>| {
            let dy = solver.solve(rhs);
            let dys: Vec<f64> = dy.iter().copied().collect();
            let mut dxs = Vec::with_capacity(blocks.len());
            let mut dss = Vec::with_capacity(blocks.len());
            for (k, blk) in blocks.iter().enumerate() {
                let ds = &rd[k] - blk.adjoint_map(&dys);
                let mut dx = &s_inv[k] * C64::new(sigma_mu, 0.0) - &x[k] - &x[k] * &ds * &s_inv[k];
                if let Some(corr) = second {
                    dx -= &corr[k] * &s_inv[k];
                }
                dxs.push(herm(&dx));
                dss.push(herm(&ds));
            }
            (dy, dxs, dss)
        };
        let steps = |dxs: &[DMatrix<C64>], dss: &[DMatrix<C64>]| {
            let ap = x_chol.iter().zip(dxs).map(|(c, d)| max_step(c, d)).fold(f64::INFINITY, f64::min);
            let ad = s_chol.iter().zip(dss).map(|(c, d)| max_step(c, d)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // predictor
        let (_, dxa, dsa) = direction(&base_rhs, 0.0, None);
        let (ap, ad) = steps(&dxa, &dsa);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xs_aff = 0.0;
        for k in 0..blocks.len() {
            let xa = &x[k] + &dxa[k] * C64::new(ap, 0.0);
            let sa = &s[k] + &dsa[k] * C64::new(ad, 0.0);
            xs_aff += re_trace_product(&xa, &sa);
        }
        let sigma = ((xs_aff / n_total as f64) / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let cross: Vec<DMatrix<C64>> = (0..blocks.len()).map(|k| &dxa[k] * &dsa[k]).collect();
        let cross_sinv: Vec<DMatrix<C64>> = (0..blocks.len()).map(|k| &cross[k] * &s_inv[k]).collect();
        let sinv_term = apply_a(&s_inv);
        let rhs = &base_rhs - sinv_term * (sigma * mu) + apply_a(&cross_sinv);
        let (dy, dx, ds) = direction(&rhs, sigma * mu, Some(&cross));
        let (ap, ad) = steps(&dx, &ds);
        let gamma = 0.95;
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        for k in 0..blocks.len() {
            x[k] = herm(&(&x[k] + &dx[k] * C64::new(ap, 0.0)));
            s[k] = herm(&(&s[k] + &ds[k] * C64::new(ad, 0.0)));
        }
        for (yi, d) in y.iter_mut().zip(dy.iter()) {
            *yi += ad * d;
        }
    }

    Ok(SdpSolution {
        x: x.iter().map(from_dmatrix).collect(),
        s: s.iter().map(from_dmatrix).collect(),
        y,
        primal_objective: report.0,
        dual_objective: report.1,
        primal_infeasibility: report.2,
        dual_infeasibility: report.3,
        iterations,
        converged,
    })
}

enum SchurSolver {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurSolver {
    fn new(schur: DMatrix<f64>) -> Result<Self> {
        if let Some(c) = Cholesky::new(schur.clone()) {
            return Ok(Self::Chol(c));
        }
        let lu = schur.lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical("singular Schur complement"));
        }
        Ok(Self::Lu(lu))
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Chol(c) => c.solve(rhs),
            Self::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(i: usize, j: usize) -> SparseHermitian {
        if i == j {
            SparseHermitian::new(vec![(i, i, C64::new(1.0, 0.0))])
        } else {
            SparseHermitian::new(vec![(i, j, C64::new(0.5, 0.0)), (j, i, C64::new(0.5, 0.0))])
        }
    }

    #[test]
    fn largest_eigenvalue_as_sdp() {
        // max bᵀy with y·I ⪯ C  ⇔  y ≤ λmin(C); here b = 1
        let c = Operator::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let a = SparseHermitian::new(vec![(0, 0, C64::new(1.0, 0.0)), (1, 1, C64::new(1.0, 0.0))]);
        let p = SdpProblem {
            b: vec![1.0],
            blocks: vec![SdpBlock { c, a: vec![a] }],
        };
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.y[0] - 1.0).abs() < 1e-8, "{}", sol.y[0]);
        assert!((sol.primal_objective - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_constraint_problem() {
        // min tr(C X), X ⪰ 0, X00 = 1, X11 = 1 with C = [[0,1],[1,0]] → −2
        let c = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = SdpProblem {
            b: vec![1.0, 1.0],
            blocks: vec![SdpBlock {
                c,
                a: vec![one(0, 0), one(1, 1)],
            }],
        };
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.dual_objective + 2.0).abs() < 1e-8);
        assert!((sol.primal_objective + 2.0).abs() < 1e-8);
    }

    #[test]
    fn complex_cost() {
        // min tr(C X) with tr X = 1 equals λmin(C) for C = σ_y
        let c = Operator::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        });
        let a = SparseHermitian::new(vec![(0, 0, C64::new(1.0, 0.0)), (1, 1, C64::new(1.0, 0.0))]);
        let p = SdpProblem {
            b: vec![1.0],
            blocks: vec![SdpBlock { c, a: vec![a] }],
        };
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!((sol.primal_objective + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let p = SdpProblem {
            b: vec![1.0, 2.0],
            blocks: vec![SdpBlock {
                c: Operator::identity(2),
                a: vec![one(0, 0)],
            }],
        };
        assert!(solve(&p, &SdpOptions::default()).is_err());
    }
}
