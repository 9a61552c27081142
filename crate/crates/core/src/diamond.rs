//! Diamond norm of Hermiticity-preserving maps.
//!
//! The upper bound comes from a dual-feasible point of
//! `min ‖Tr_out Z‖_∞` subject to `Z ⪰ J`, `Z ⪰ −J`, made exactly feasible
//! by an eigenvalue shift. The lower bound is a seesaw over pure inputs on
//! `input ⊗ reference` with the reference as large as the input.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channels::{trace_out_output, LinearMap};
use crate::error::{Error, Result};
use crate::linalg::{sample_haar_pure, Ket, Operator, C64, ONE, ZERO};
use crate::sdp::{self, SdpBlock, SdpOptions, SdpProblem, SparseHermitian};

/// Default largest Choi dimension `din · dout` handed to the SDP.
pub const DIAMOND_SIZE_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct DiamondOptions {
    /// Largest accepted `upper − lower`.
    pub tol: f64,
    /// Haar-random seesaw starts in addition to the SDP warm start.
    pub restarts: usize,
    /// Iteration cap per seesaw run.
    pub max_iter: usize,
    /// A seesaw run stops once an iteration improves by less than this.
    pub improvement: f64,
    /// Largest Choi dimension `din · dout` accepted.
    pub size_limit: usize,
    pub sdp: SdpOptions,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            restarts: 16,
            max_iter: 500,
            improvement: 1e-9,
            size_limit: DIAMOND_SIZE_LIMIT,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiamondResult {
    /// Reported norm; equal to `upper`.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    /// Rank-one input on `input ⊗ reference` attaining `lower`.
    pub witness: Operator,
    pub restarts: usize,
    /// Seesaw iterations summed over all runs.
    pub iterations: usize,
    pub sdp_iterations: usize,
}

impl DiamondResult {
    pub fn converged(&self, tol: f64) -> bool {
        self.gap <= tol
    }
}

/// `‖(m ⊗ id_R)(ρ)‖₁` for `ρ` on `input ⊗ R`.
pub fn output_trace_norm<M: LinearMap>(m: &M, rho: &Operator) -> Result<f64> {
    apply_with_reference(m, rho)?.trace_norm()
}

/// `(m ⊗ id_R)(ρ)` for `ρ` on `input ⊗ R`, laid out as `output ⊗ R`.
pub fn apply_with_reference<M: LinearMap>(m: &M, rho: &Operator) -> Result<Operator> {
    let (din, dout) = (m.din(), m.dout());
    let dref = reference_dim(din, rho.rows())?;
    rho.require_square()?;
    let j = m.choi();
    let mut out = Operator::zeros(dout * dref, dout * dref);
    for a in 0..dout {
        for b in 0..dout {
            for i in 0..din {
                for jj in 0..din {
                    let jv = j[(a * din + i, b * din + jj)];
                    if jv == ZERO {
                        continue;
                    }
                    for r in 0..dref {
                        let src = &rho.row(i * dref + r)[jj * dref..(jj + 1) * dref];
                        let dst = (a * dref + r) * dout * dref + b * dref;
                        for (o, v) in out.data_mut()[dst..dst + dref].iter_mut().zip(src) {
                            *o += jv * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out.with_dims_unchecked(vec![dout, dref]))
}

fn reference_dim(din: usize, total: usize) -> Result<usize> {
    if total == 0 || total % din != 0 {
        return Err(Error::DimensionMismatch(alloc::format!(
            "input of dimension {total} does not contain the map input ({din})"
        )));
    }
    Ok(total / din)
}

/// `‖(m ⊗ id_R)(|ψ⟩⟨ψ|)‖₁` for a pure input on `input ⊗ R`.
///
/// Evaluated as `‖(I ⊗ √ρᵀ) J (I ⊗ √ρᵀ)‖₁` with `ρ` the input marginal,
/// so `R` may be large.
pub fn output_trace_norm_pure<M: LinearMap>(m: &M, psi: &Ket) -> Result<f64> {
    reference_dim(m.din(), psi.len())?;
    let a = psi.to_matrix(m.din())?;
    let marginal = a.matmul(&a.adjoint()).hermitian_part();
    marginal_trace_norm(m, &marginal)
}

/// `‖(I ⊗ √ρᵀ) J (I ⊗ √ρᵀ)‖₁`, the output trace norm on any purification of `ρ`.
pub fn marginal_trace_norm<M: LinearMap>(m: &M, marginal: &Operator) -> Result<f64> {
    if marginal.rows() != m.din() || !marginal.is_square() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "input marginal must be {}x{}",
            m.din(),
            m.din()
        )));
    }
    let root = marginal.transpose().sqrt_psd()?;
    let k = Operator::identity(m.dout()).kron(&root);
    k.matmul(m.choi()).matmul(&k).hermitian_part().trace_norm()
}

/// `(m ⊗ id)(|ψ⟩⟨ψ|)` for `ψ` on `input ⊗ R`, laid out as `output ⊗ R`.
pub fn pure_output<M: LinearMap>(m: &M, psi: &Ket) -> Result<Operator> {
    let dref = reference_dim(m.din(), psi.len())?;
    let a = psi.to_matrix(m.din())?;
    let k = Operator::identity(m.dout()).kron(&a.transpose());
    Ok(k.matmul(m.choi())
        .matmul(&k.adjoint())
        .hermitian_part()
        .with_dims_unchecked(vec![m.dout(), dref]))
}

/// One seesaw ascent.
#[derive(Clone, Debug)]
pub struct SeesawRun {
    pub value: f64,
    pub state: Ket,
    /// Output trace norm after each step, starting with the initial state.
    pub history: Vec<f64>,
}

/// Alternates the Helstrom observable of the current output with the top
/// eigenvector of the induced operator on inputs. `start` lives on
/// `input ⊗ input`.
pub fn seesaw<M: LinearMap>(m: &M, start: &Ket, max_iter: usize, improvement: f64) -> Result<SeesawRun> {
    let (din, dout) = (m.din(), m.dout());
    if start.len() != din * din {
        return Err(Error::DimensionMismatch(alloc::format!(
            "seesaw start must have dimension {}",
            din * din
        )));
    }
    let j = m.choi();
    let mut state = start.clone().normalized();
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, state.clone());
    for _ in 0..=max_iter {
        let out = pure_output(m, &state)?;
        let eig = out.eigh()?;
        let value: f64 = eig.values.iter().map(|x| x.abs()).sum();
        history.push(value);
        if value > best.0 {
            best = (value, state.clone());
        }
        if history.len() > 1 && value - history[history.len() - 2] < improvement {
            break;
        }
        if history.len() > max_iter {
            break;
        }
        let w = eig.reconstruct_with(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
        // M[(j,s),(i,r)] = Σ_ab J[(a,i),(b,j)] W[(b,s),(a,r)]
        let n = din * din;
        let mut op = Operator::zeros(n, n);
        for a in 0..dout {
            for b in 0..dout {
                for i in 0..din {
                    for jj in 0..din {
                        let jv = j[(a * din + i, b * din + jj)];
                        if jv == ZERO {
                            continue;
                        }
                        for s in 0..din {
                            for r in 0..din {
                                op[(jj * din + s, i * din + r)] += jv * w[(b * din + s, a * din + r)];
                            }
                        }
                    }
                }
            }
        }
        let (_, top) = op.top_eigenpair();
        state = Ket::new(vec![din, din], top)?;
    }
    Ok(SeesawRun {
        value: best.0,
        state: best.1.with_dims(vec![din, din])?,
        history,
    })
}

struct DualSolution {
    upper: f64,
    input_marginal: Operator,
    iterations: usize,
}

/// Certified upper bound from the SDP plus the primal input marginal.
fn dual_bound<M: LinearMap>(m: &M, options: &SdpOptions) -> Result<DualSolution> {
    let (din, dout) = (m.din(), m.dout());
    let n = din * dout;
    let j = m.choi().hermitian_part();

    // Hermitian coordinates of Z, orthonormal for Re tr(A B)
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut coords: Vec<SparseHermitian> = Vec::with_capacity(n * n);
    for k in 0..n {
        coords.push(SparseHermitian::new(vec![(k, k, ONE)]));
    }
    for k in 0..n {
        for l in k + 1..n {
            coords.push(SparseHermitian::new(vec![(k, l, C64::new(h, 0.0)), (l, k, C64::new(h, 0.0))]));
            coords.push(SparseHermitian::new(vec![(k, l, C64::new(0.0, h)), (l, k, C64::new(0.0, -h))]));
        }
    }
    let reduce = |b: &SparseHermitian| {
        SparseHermitian::new(
            b.entries
                .iter()
                .filter(|&&(p, q, _)| p / din == q / din)
                .map(|&(p, q, v)| (p % din, q % din, v))
                .collect(),
        )
    };
    let neg = |b: &SparseHermitian| SparseHermitian::new(b.entries.iter().map(|&(p, q, v)| (p, q, -v)).collect());

    let mut a1: Vec<SparseHermitian> = coords.iter().map(neg).collect();
    a1.push(SparseHermitian::default());
    let a2 = a1.clone();
    let mut a3: Vec<SparseHermitian> = coords.iter().map(reduce).collect();
    a3.push(SparseHermitian::new((0..din).map(|i| (i, i, -ONE)).collect()));
    let mut b = vec![0.0; coords.len()];
    b.push(-1.0);
    let problem = SdpProblem {
        b,
        blocks: vec![
            SdpBlock { c: -&j, a: a1 },
            SdpBlock { c: j.clone(), a: a2 },
            SdpBlock {
                c: Operator::zeros(din, din),
                a: a3,
            },
        ],
    };
    let sol = sdp::solve(&problem, options)?;

    let mut z = Operator::zeros(n, n);
    for (c, coord) in coords.iter().enumerate() {
        for &(p, q, v) in &coord.entries {
            z[(p, q)] += v * sol.y[c];
        }
    }
    let z = z.hermitian_part();
    let low_minus = (&z - &j).hermitian_eigenvalues()[0];
    let low_plus = (&z + &j).hermitian_eigenvalues()[0];
    let shift = 0.0f64.max(-low_minus).max(-low_plus);
    let top = *trace_out_output(&z, din, dout).hermitian_eigenvalues().last().unwrap();
    let upper = top + shift * dout as f64;

    let x3 = sol.x[2].hermitian_part();
    let tr = x3.trace().re;
    let input_marginal = if tr > 0.0 {
        x3.transpose().scale(1.0 / tr)
    } else {
        Operator::identity(din).scale(1.0 / din as f64)
    };
    Ok(DualSolution {
        upper,
        input_marginal,
        iterations: sol.iterations,
    })
}

/// Diamond norm bounds, returned even when `gap` exceeds the tolerance.
pub fn diamond_bounds<M: LinearMap, R: Rng + ?Sized>(m: &M, options: &DiamondOptions, rng: &mut R) -> Result<DiamondResult> {
    let (din, dout) = (m.din(), m.dout());
    let deviation = m.choi().hermitian_deviation();
    if deviation > crate::linalg::HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    if din * dout > options.size_limit {
        return Err(Error::SizeGuard {
            what: "diamond norm Choi dimension",
            size: (din * dout) as u128,
            limit: options.size_limit as u128,
        });
    }
    let mut starts = Vec::with_capacity(options.restarts + 1);
    if m.choi().max_abs() == 0.0 {
        let witness = Operator::projector(&Ket::basis(din * din, 0)).with_dims_unchecked(vec![din, din]);
        return Ok(DiamondResult {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            gap: 0.0,
            witness,
            restarts: 0,
            iterations: 0,
            sdp_iterations: 0,
        });
    }
    let dual = dual_bound(m, &options.sdp)?;
    let root = dual.input_marginal.sqrt_psd()?;
    starts.push(Ket::new(vec![din, din], root.data().to_vec())?.normalized());
    for _ in 0..options.restarts {
        starts.push(sample_haar_pure(din * din, rng).with_dims(vec![din, din])?);
    }
    let mut best: Option<SeesawRun> = None;
    let mut iterations = 0;
    for start in &starts {
        let run = seesaw(m, start, options.max_iter, options.improvement)?;
        iterations += run.history.len() - 1;
        if best.as_ref().map_or(true, |b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least the warm start");
    let lower = best.value;
    let upper = dual.upper.max(lower);
    Ok(DiamondResult {
        value: upper,
        lower,
        upper,
        gap: upper - lower,
        witness: Operator::projector(&best.state).with_dims_unchecked(vec![din, din]),
        restarts: options.restarts,
        iterations,
        sdp_iterations: dual.iterations,
    })
}

/// Diamond norm; fails with [`Error::NotConverged`] when the certified gap
/// exceeds `options.tol`.
pub fn diamond_norm<M: LinearMap, R: Rng + ?Sized>(m: &M, options: &DiamondOptions, rng: &mut R) -> Result<DiamondResult> {
    let r = diamond_bounds(m, options, rng)?;
    if r.gap > options.tol {
        return Err(Error::NotConverged {
            lower: r.lower,
            upper: r.upper,
        });
    }
    Ok(r)
}

/// Optimal success probability `½ + ¼‖E − F‖_◊` of telling `e` from `f`.
pub fn distinguish_probability<A: LinearMap, B: LinearMap, R: Rng + ?Sized>(
    e: &A,
    f: &B,
    options: &DiamondOptions,
    rng: &mut R,
) -> Result<f64> {
    let diff = crate::channels::subtract(e, f)?;
    let r = diamond_norm(&diff, options, rng)?;
    Ok((0.5 + 0.25 * r.value).clamp(0.5, 1.0))
}
