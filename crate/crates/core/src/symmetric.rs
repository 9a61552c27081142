//! Permutation operators, the symmetric subspace and the de Finetti family.
//!
//! Objects on `Sym^n(H ⊗ K)` are built in the interleaved layout
//! `(H ⊗ K)^⊗n` with factor dims `[d; 2n]` ordered `h1 k1 h2 k2 …`.
//! [`interleaved_to_block`] gives the factor order `h1 … hn k1 … kn`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{factor_index_map, sample_hs_density, Ket, Operator, C64, HERMITIAN_TOL, ONE, PSD_TOL, ZERO};

/// Largest dense size `(d²)^n · g` accepted by [`tau_family`].
pub const TAU_SIZE_LIMIT: u128 = 200_000;
/// Largest `n` accepted by [`symmetrize_state`] (register of size `n!`).
pub const SYMMETRIZE_MAX_COPIES: usize = 5;
/// Support and invariance tolerance for inputs to the symmetric machinery.
pub const SUPPORT_TOL: f64 = 1e-9;

/// A permutation of `{0, …, n-1}` stored by images: `π(k) = images[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        crate::linalg::validate_permutation(&images, images.len())?;
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Exchanges `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n {
            return Err(Error::MalformedPermutation(alloc::format!(
                "transposition ({i} {j}) on {n} points"
            )));
        }
        let mut p = Self::identity(n);
        p.0.swap(i, j);
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// `self ∘ other`, i.e. `k ↦ self(other(k))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation(other.0.iter().map(|&k| self.0[k]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (k, &p) in self.0.iter().enumerate() {
            inv[p] = k;
        }
        Permutation(inv)
    }

    /// All of `S_n` in lexicographic order of the image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }

    /// Position of `p` in [`Permutation::all`].
    pub fn lex_index(p: &Permutation) -> usize {
        let n = p.len();
        let mut index = 0;
        let mut fact = (1..n).product::<usize>().max(1);
        let mut remaining: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pos = remaining.iter().position(|&x| x == p.0[k]).unwrap();
            index += pos * fact;
            remaining.remove(pos);
            if n - 1 - k > 0 {
                fact /= n - 1 - k;
            }
        }
        index
    }
}

/// The unitary `P_π` on `(C^d)^⊗n` with `P_π|i_1 … i_n⟩ = |i_{π⁻¹(1)} … i_{π⁻¹(n)}⟩`.
pub fn perm_operator(n: usize, d: usize, pi: &Permutation) -> Result<Operator> {
    if pi.len() != n {
        return Err(Error::MalformedPermutation(alloc::format!(
            "permutation of {} points acting on {n} factors",
            pi.len()
        )));
    }
    let dims = vec![d; n];
    let map = factor_index_map(&dims, pi.inverse().images())?;
    let total = map.len();
    let mut p = Operator::zeros(total, total);
    for (i, &j) in map.iter().enumerate() {
        p[(j, i)] = ONE;
    }
    Ok(p.with_dims_unchecked(dims))
}

/// `(P_π ⊗ I) ρ (P_π ⊗ I)†` where the first `pi.len()` factors of `rho` are permuted.
pub fn conjugate_by_permutation(rho: &Operator, pi: &Permutation) -> Result<Operator> {
    let nf = rho.dims().len();
    if pi.len() > nf {
        return Err(Error::DimensionMismatch(alloc::format!(
            "permutation of {} factors on an operator with {nf}",
            pi.len()
        )));
    }
    let mut order: Vec<usize> = pi.inverse().images().to_vec();
    order.extend(pi.len()..nf);
    rho.reorder_factors(&order)
}

/// Factor order taking `h1 k1 … hn kn` to `h1 … hn k1 … kn`.
pub fn interleaved_to_block(n: usize) -> Vec<usize> {
    (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect()
}

/// Factor order taking `h1 … hn k1 … kn` to `h1 k1 … hn kn`.
pub fn block_to_interleaved(n: usize) -> Vec<usize> {
    (0..2 * n).map(|s| if s % 2 == 0 { s / 2 } else { n + s / 2 }).collect()
}

/// Exact binomial coefficient.
pub fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 1..=k {
        // c = C(n - k + j, j), always an integer
        c = c
            .checked_mul(n - k + j)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / j;
    }
    Ok(c)
}

/// `g_{n,d} = C(n + d² - 1, n)` together with the bound `(n+1)^{d²-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gnd {
    pub g: u128,
    pub bound: u128,
}

pub fn g_nd(n: usize, d: usize) -> Result<Gnd> {
    if n == 0 || d == 0 {
        return Err(Error::OutOfRange(alloc::format!("g_nd needs n, d >= 1 (n = {n}, d = {d})")));
    }
    let dd = (d as u128).checked_mul(d as u128).ok_or(Error::Overflow("d²"))?;
    let g = binomial(n as u128 + dd - 1, n as u128)?;
    let exp = u32::try_from(dd - 1).map_err(|_| Error::Overflow("(n+1)^(d²-1)"))?;
    let bound = (n as u128 + 1)
        .checked_pow(exp)
        .ok_or(Error::Overflow("(n+1)^(d²-1)"))?;
    assert!(g <= bound, "g_nd exceeds (n+1)^(d²-1)");
    Ok(Gnd { g, bound })
}

/// `Sym^n(C^D)` with its occupation-number basis embedded in `(C^D)^⊗n`.
///
/// Basis vectors are indexed by nondecreasing index tuples
/// `i_1 ≤ … ≤ i_n`, ordered lexicographically (so `|0…0⟩` comes first);
/// each is the normalized uniform superposition over its orbit.
#[derive(Clone, Debug)]
pub struct SymSpace {
    n: usize,
    local_dim: usize,
    dim: usize,
    basis: Operator,
    /// for each product basis index: (column, orbit size)
    orbit_of: Vec<(usize, usize)>,
}

impl SymSpace {
    pub fn new(n: usize, local_dim: usize) -> Result<Self> {
        if n == 0 || local_dim == 0 {
            return Err(Error::OutOfRange(alloc::format!(
                "symmetric subspace needs n, D >= 1 (n = {n}, D = {local_dim})"
            )));
        }
        let total = u32::try_from(n)
            .ok()
            .and_then(|e| local_dim.checked_pow(e))
            .ok_or(Error::Overflow("D^n"))?;
        let mut keys: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut key_of = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for _ in 0..total {
            let mut sorted = digits.clone();
            sorted.sort_unstable();
            *keys.entry(sorted.clone()).or_insert(0) += 1;
            key_of.push(sorted);
            for f in (0..n).rev() {
                digits[f] += 1;
                if digits[f] < local_dim {
                    break;
                }
                digits[f] = 0;
            }
        }
        let column: BTreeMap<&Vec<usize>, (usize, usize)> = keys
            .iter()
            .enumerate()
            .map(|(c, (k, &size))| (k, (c, size)))
            .collect();
        let dim = keys.len();
        let orbit_of: Vec<(usize, usize)> = key_of.iter().map(|k| column[k]).collect();
        let mut basis = Operator::zeros(total, dim);
        for (x, &(c, size)) in orbit_of.iter().enumerate() {
            basis[(x, c)] = C64::new(1.0 / (size as f64).sqrt(), 0.0);
        }
        Ok(Self {
            n,
            local_dim,
            dim,
            basis,
            orbit_of,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Orthonormal basis as columns of a `D^n x dim` operator.
    pub fn basis(&self) -> &Operator {
        &self.basis
    }

    /// `B B†`, the orthogonal projector onto the subspace.
    pub fn projector(&self) -> Operator {
        let total = self.basis.rows();
        let mut p = Operator::zeros(total, total);
        for x in 0..total {
            let (cx, sx) = self.orbit_of[x];
            for y in 0..total {
                let (cy, sy) = self.orbit_of[y];
                if cx == cy {
                    p[(x, y)] = C64::new(1.0 / (sx as f64).sqrt() / (sy as f64).sqrt(), 0.0);
                }
            }
        }
        p.with_dims_unchecked(vec![self.local_dim; self.n])
    }

    /// `(1/n!) Σ_π P_π`, computed by explicit summation.
    pub fn projector_by_average(&self) -> Result<Operator> {
        let perms = Permutation::all(self.n);
        let total = self.basis.rows();
        let mut acc = Operator::zeros(total, total);
        for pi in &perms {
            acc += &perm_operator(self.n, self.local_dim, pi)?;
        }
        Ok(acc.scale(1.0 / perms.len() as f64).with_dims_unchecked(vec![self.local_dim; self.n]))
    }

    /// `B† ρ B`, the compression of `ρ` onto the subspace.
    pub fn compress(&self, rho: &Operator) -> Operator {
        self.basis.adjoint().matmul(rho).matmul(&self.basis)
    }
}

/// `Sym^n(C^D)`.
pub fn sym_space(n: usize, local_dim: usize) -> Result<SymSpace> {
    SymSpace::new(n, local_dim)
}

/// The de Finetti state `τ_{H^n}`, its extension `τ_{H^nK^n}` and the
/// purification `τ_{H^nK^nN}` with `N ≅ Sym^n(H ⊗ K)`.
#[derive(Clone, Debug)]
pub struct TauFamily {
    pub n: usize,
    pub d: usize,
    pub g: u128,
    /// `τ_{H^n}`, factor dims `[d; n]`.
    pub tau_reduced: Operator,
    /// `τ_{H^nK^n} = P_Sym / g`, interleaved layout, factor dims `[d; 2n]`.
    pub tau_full: Operator,
    /// `g^{-1/2} Σ_k |e_k⟩ ⊗ |k⟩_N`, factor dims `[d; 2n] ++ [g]`.
    pub tau_purification: Ket,
    sym: SymSpace,
}

pub fn tau_family(n: usize, d: usize) -> Result<TauFamily> {
    tau_family_with_limit(n, d, TAU_SIZE_LIMIT)
}

/// As [`tau_family`] with a caller-chosen bound on `(d²)^n · g`.
pub fn tau_family_with_limit(n: usize, d: usize, limit: u128) -> Result<TauFamily> {
    let gnd = g_nd(n, d)?;
    let dd = d * d;
    let local_total = (dd as u128)
        .checked_pow(n as u32)
        .ok_or(Error::Overflow("(d²)^n"))?;
    let size = local_total.saturating_mul(gnd.g);
    if size > limit {
        return Err(Error::SizeGuard {
            what: "de Finetti family (d²)^n · g",
            size,
            limit,
        });
    }
    let sym = SymSpace::new(n, dd)?;
    debug_assert_eq!(sym.dim() as u128, gnd.g);
    let g = sym.dim();
    let tau_full = sym
        .projector()
        .scale(1.0 / g as f64)
        .with_dims_unchecked(vec![d; 2 * n]);
    let total = sym.basis().rows();
    let amp = 1.0 / (g as f64).sqrt();
    let mut amps = vec![ZERO; total * g];
    for x in 0..total {
        let (c, size) = sym.orbit_of[x];
        amps[x * g + c] = C64::new(amp / (size as f64).sqrt(), 0.0);
    }
    let mut dims = vec![d; 2 * n];
    dims.push(g);
    let tau_purification = Ket::new(dims, amps)?;
    let keep: Vec<usize> = (0..n).map(|k| 2 * k).collect();
    let tau_reduced = tau_full.partial_trace(&keep)?;
    Ok(TauFamily {
        n,
        d,
        g: gnd.g,
        tau_reduced,
        tau_full,
        tau_purification,
        sym,
    })
}

impl TauFamily {
    /// The symmetric subspace `Sym^n(H ⊗ K)` the family lives on.
    pub fn sym_space(&self) -> &SymSpace {
        &self.sym
    }

    /// The purification reordered to `H^n ⊗ K^n ⊗ N`, factor dims
    /// `[d; n] ++ [d; n] ++ [g]`.
    pub fn purification_block_layout(&self) -> Ket {
        let mut order = interleaved_to_block(self.n);
        order.push(2 * self.n);
        self.tau_purification
            .reorder_factors(&order)
            .expect("static factor order")
    }

    /// The measurement `M` on `N` with `ρ = g · (id ⊗ T_M)(τ_{H^nK^nN})`,
    /// `T_M(σ) = tr(σ M)`; equal to `(B† ρ B)ᵀ` in the canonical basis.
    pub fn postselect_measurement(&self, rho: &Operator) -> Result<Operator> {
        let total = self.sym.basis().rows();
        if !rho.is_square() || rho.rows() != total {
            return Err(Error::DimensionMismatch(alloc::format!(
                "expected an operator on (H⊗K)^⊗{} of dimension {total}, got {}x{}",
                self.n,
                rho.rows(),
                rho.cols()
            )));
        }
        require_density(rho)?;
        let compressed = self.sym.compress(rho);
        let weight = compressed.trace().re;
        if weight < 1.0 - SUPPORT_TOL {
            return Err(Error::SupportViolation { weight });
        }
        Ok(compressed.transpose().hermitian_part())
    }

    /// `g · (id ⊗ T_M)(|Ψ⟩⟨Ψ|)` evaluated directly on the purification.
    pub fn reconstruct_from_measurement(&self, m: &Operator) -> Result<Operator> {
        let g = self.sym.dim();
        if m.rows() != g || !m.is_square() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "measurement must act on N of dimension {g}"
            )));
        }
        let total = self.sym.basis().rows();
        let psi = self.tau_purification.to_matrix(total)?;
        let out = psi
            .matmul(&m.transpose())
            .matmul(&psi.adjoint())
            .scale(g as f64);
        Ok(out.with_dims_unchecked(vec![self.d; 2 * self.n]))
    }
}

fn require_density(rho: &Operator) -> Result<()> {
    rho.require_square()?;
    let deviation = rho.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > SUPPORT_TOL {
        return Err(Error::NotDensity(alloc::format!("trace {tr}")));
    }
    let min = rho.hermitian_eigenvalues()[0];
    if min < -PSD_TOL {
        return Err(Error::NotDensity(alloc::format!("min eigenvalue {min:e}")));
    }
    Ok(())
}

/// Empirical mean of `σ^⊗n` over `samples` Hilbert-Schmidt draws of `σ`.
pub fn tau_monte_carlo<R: Rng + ?Sized>(n: usize, d: usize, samples: usize, rng: &mut R) -> Result<Operator> {
    if samples == 0 || n == 0 {
        return Err(Error::OutOfRange("tau_monte_carlo needs samples, n >= 1".into()));
    }
    let total = d.pow(n as u32);
    let mut acc = Operator::zeros(total, total);
    for _ in 0..samples {
        let sigma = sample_hs_density(d, rng);
        let mut power = sigma.clone();
        for _ in 1..n {
            power = power.kron(&sigma);
        }
        acc += &power;
    }
    Ok(acc.scale(1.0 / samples as f64).with_dims_unchecked(vec![d; n]))
}

/// Largest deviation `‖P_g ρ P_g† − ρ‖_F` over adjacent transpositions `g`
/// acting on the first `n` factors, with the worst generator.
pub fn invariance_deviation(rho: &Operator, n: usize) -> Result<(usize, f64)> {
    let mut worst = (0, 0.0);
    for k in 0..n.saturating_sub(1) {
        let t = Permutation::transposition(n, k, k + 1)?;
        let dev = (&conjugate_by_permutation(rho, &t)? - rho).frobenius_norm();
        if dev > worst.1 {
            worst = (k, dev);
        }
    }
    Ok(worst)
}

fn with_local_dims(rho: &Operator, n: usize, d: usize) -> Result<Operator> {
    let hn = u32::try_from(n)
        .ok()
        .and_then(|e| d.checked_pow(e))
        .ok_or(Error::Overflow("d^n"))?;
    if !rho.is_square() || rho.rows() % hn != 0 {
        return Err(Error::DimensionMismatch(alloc::format!(
            "operator of dimension {} has no (C^{d})^⊗{n} prefix",
            rho.rows()
        )));
    }
    let mut dims = vec![d; n];
    let rest = rho.rows() / hn;
    if rest > 1 {
        dims.push(rest);
    }
    rho.clone().with_dims(dims)
}

/// Canonical purification `(√ρ ⊗ I)|Φ⟩` of a permutation-invariant state on
/// `H^⊗n`, returned in the interleaved `(H ⊗ K)^⊗n` layout, which puts it
/// in `Sym^n(H ⊗ K)`.
pub fn purify_to_sym(rho: &Operator, n: usize, d: usize) -> Result<Ket> {
    let rho = with_local_dims(rho, n, d)?;
    if rho.dims().len() != n {
        return Err(Error::DimensionMismatch("purify_to_sym expects an operator on H^⊗n only".into()));
    }
    rho.require_hermitian()?;
    let (generator, deviation) = invariance_deviation(&rho, n)?;
    if deviation > SUPPORT_TOL {
        return Err(Error::NotInvariant { generator, deviation });
    }
    let root = rho.sqrt_psd()?;
    let amps = root.data().to_vec();
    let block = Ket::new(vec![d; 2 * n], amps)?;
    block.reorder_factors(&block_to_interleaved(n))
}

/// `(1/n!) Σ_π (P_π ⊗ I) ρ (P_π ⊗ I)† ⊗ |π⟩⟨π|` for `ρ` on `H^⊗n ⊗ R′`;
/// the `n!`-dimensional register is appended as the last factor.
pub fn symmetrize_state(rho: &Operator, n: usize, d: usize) -> Result<Operator> {
    if n > SYMMETRIZE_MAX_COPIES {
        return Err(Error::CopiesCap {
            what: "state symmetrization",
            n,
            cap: SYMMETRIZE_MAX_COPIES,
        });
    }
    let rho = with_local_dims(rho, n, d)?;
    let perms = Permutation::all(n);
    let reg = perms.len();
    let base = rho.rows();
    let mut out = Operator::zeros(base * reg, base * reg);
    let w = 1.0 / reg as f64;
    for (p, pi) in perms.iter().enumerate() {
        let conj = conjugate_by_permutation(&rho, pi)?;
        for x in 0..base {
            for y in 0..base {
                out[(x * reg + p, y * reg + p)] = conj[(x, y)] * w;
            }
        }
    }
    let mut dims = rho.dims().to_vec();
    dims.push(reg);
    Ok(out.with_dims_unchecked(dims))
}
