//! Quantum channels and Hermiticity-preserving maps as Choi matrices.
//!
//! Convention, used everywhere in the crate: the Choi matrix of a map `E`
//! from a `din`-dimensional space to a `dout`-dimensional space is
//!
//! ```text
//! J(E) = Σ_ij E(|i⟩⟨j|) ⊗ |i⟩⟨j|        (output ⊗ input, unnormalized)
//! ```
//!
//! so `J[(a,i),(b,j)] = E(|i⟩⟨j|)[a,b]` and the Choi operator carries the
//! factor dims `[dout, din]`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{factor_index_map, sample_haar_isometry, Operator, C64, HERMITIAN_TOL, ZERO};
use crate::symmetric::Permutation;

/// Largest `n` for which the plain permutation twirl is materialized.
pub const TWIRL_MAX_COPIES: usize = 6;
/// Largest `n` for the twirl with an `n!`-dimensional transcript register.
pub const TRANSCRIPT_MAX_COPIES: usize = 5;
/// Tolerance used when validating channels.
pub const CPTP_TOL: f64 = 1e-9;

pub(crate) mod sealed {
    use crate::linalg::Operator;

    pub trait FromChoi {
        fn from_parts(din: usize, dout: usize, choi: Operator) -> Self;
    }
}

/// Outcome of a complete-positivity / trace-preservation check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    pub min_eigenvalue: f64,
    pub tp_deviation: f64,
}

/// Behaviour shared by every map represented through its Choi matrix.
pub trait LinearMap: sealed::FromChoi + Sized {
    fn din(&self) -> usize;
    fn dout(&self) -> usize;
    fn choi(&self) -> &Operator;

    /// The map's action on `rho`.
    fn apply(&self, rho: &Operator) -> Result<Operator> {
        apply_choi(self.choi(), self.din(), self.dout(), rho)
    }

    /// `self ⊗ id_dref`; the reference factor follows the system factor on
    /// both sides.
    fn tensor_with_identity(&self, dref: usize) -> Self {
        if dref == 1 {
            return Self::from_parts(self.din(), self.dout(), self.choi().clone());
        }
        let (din, dout) = (self.din(), self.dout());
        let mut phi = Operator::zeros(dref * dref, dref * dref);
        for r in 0..dref {
            for s in 0..dref {
                phi[(r * dref + r, s * dref + s)] = C64::new(1.0, 0.0);
            }
        }
        let phi = phi.with_dims_unchecked(vec![dref, dref]);
        let big = self
            .choi()
            .clone()
            .with_dims_unchecked(vec![dout, din])
            .kron(&phi)
            .reorder_factors(&[0, 2, 1, 3])
            .expect("static permutation")
            .with_dims_unchecked(vec![dout * dref, din * dref]);
        Self::from_parts(din * dref, dout * dref, big)
    }

    fn cptp_report(&self, tol: f64) -> CptpReport {
        let choi = self.choi();
        let min_eigenvalue = choi.hermitian_eigenvalues()[0];
        let herm_ok = choi.hermitian_deviation() <= tol;
        let tp_deviation = trace_out_output(choi, self.din(), self.dout())
            .data()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let target = if k / self.din() == k % self.din() { 1.0 } else { 0.0 };
                (z - C64::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        CptpReport {
            cp: herm_ok && min_eigenvalue >= -tol,
            tp: tp_deviation <= tol,
            min_eigenvalue,
            tp_deviation,
        }
    }

    /// `self ∘ π`, i.e. `ρ ↦ self(P_π ρ P_π†)` for a permutation of the
    /// `n = pi.len()` input factors of dimension `dlocal`.
    fn precompose_permutation(&self, pi: &Permutation, dlocal: usize) -> Result<Self> {
        let n = pi.len();
        check_power(self.din(), dlocal, n)?;
        let sigma = permutation_index_map(pi, dlocal);
        let choi = permuted_choi(self.choi(), self.din(), self.dout(), &sigma, 1.0);
        Ok(Self::from_parts(self.din(), self.dout(), choi))
    }

    /// `ρ ↦ (1/n!) Σ_π self(P_π ρ P_π†)`.
    fn twirl_permutation(&self, n: usize, dlocal: usize) -> Result<Self> {
        check_power(self.din(), dlocal, n)?;
        if n > TWIRL_MAX_COPIES {
            return Err(Error::CopiesCap {
                what: "permutation twirl",
                n,
                cap: TWIRL_MAX_COPIES,
            });
        }
        let perms = Permutation::all(n);
        let weight = 1.0 / perms.len() as f64;
        let n_choi = self.choi().rows();
        let mut acc = Operator::zeros(n_choi, n_choi);
        for pi in &perms {
            let sigma = permutation_index_map(pi, dlocal);
            add_permuted_choi(&mut acc, self.choi(), self.din(), self.dout(), &sigma, weight);
        }
        let acc = acc.with_dims_unchecked(vec![self.dout(), self.din()]);
        Ok(Self::from_parts(self.din(), self.dout(), acc))
    }

    /// View as a Hermiticity-preserving map.
    fn to_hp(&self) -> HpMap {
        HpMap::from_parts(self.din(), self.dout(), self.choi().clone())
    }
}

/// A completely positive trace-preserving map.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    din: usize,
    dout: usize,
    choi: Operator,
}

/// A Hermiticity-preserving map, typically the difference of two channels.
#[derive(Clone, Debug, PartialEq)]
pub struct HpMap {
    din: usize,
    dout: usize,
    choi: Operator,
}

macro_rules! impl_linear_map {
    ($ty:ty) => {
        impl sealed::FromChoi for $ty {
            fn from_parts(din: usize, dout: usize, choi: Operator) -> Self {
                let choi = choi.with_dims_unchecked(vec![dout, din]);
                Self { din, dout, choi }
            }
        }

        impl LinearMap for $ty {
            fn din(&self) -> usize {
                self.din
            }
            fn dout(&self) -> usize {
                self.dout
            }
            fn choi(&self) -> &Operator {
                &self.choi
            }
        }
    };
}

impl_linear_map!(Channel);
impl_linear_map!(HpMap);

use sealed::FromChoi;

fn check_choi_shape(din: usize, dout: usize, choi: &Operator) -> Result<()> {
    if din == 0 || dout == 0 || choi.rows() != din * dout || !choi.is_square() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "Choi of a {din} -> {dout} map must be {0}x{0}, got {1}x{2}",
            din * dout,
            choi.rows(),
            choi.cols()
        )));
    }
    Ok(())
}

impl Channel {
    /// Validates complete positivity and trace preservation.
    pub fn from_choi(din: usize, dout: usize, choi: Operator) -> Result<Self> {
        check_choi_shape(din, dout, &choi)?;
        let ch = Self::from_parts(din, dout, choi);
        let report = ch.cptp_report(CPTP_TOL);
        if !(report.cp && report.tp) {
            return Err(Error::NotCptp {
                min_eigenvalue: report.min_eigenvalue,
                tp_deviation: report.tp_deviation,
            });
        }
        Ok(ch)
    }

    /// Channel `ρ ↦ Σ_k K_k ρ K_k†`. Rejects incomplete Kraus families.
    pub fn from_kraus(kraus: &[Operator]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty Kraus family".into()))?;
        let (dout, din) = (first.rows(), first.cols());
        let mut completeness = Operator::zeros(din, din);
        for k in kraus {
            if (k.rows(), k.cols()) != (dout, din) {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "Kraus operator {}x{} in a {dout}x{din} family",
                    k.rows(),
                    k.cols()
                )));
            }
            completeness += &k.adjoint().matmul(k);
        }
        let deviation = (&completeness - &Operator::identity(din)).max_abs();
        if deviation > CPTP_TOL {
            return Err(Error::KrausIncomplete { deviation });
        }
        let n = din * dout;
        let mut choi = Operator::zeros(n, n);
        for k in kraus {
            // |K⟩⟩ with entries K[a,i] at index (a,i)
            let v = k.data();
            for p in 0..n {
                if v[p] == ZERO {
                    continue;
                }
                for q in 0..n {
                    choi[(p, q)] += v[p] * v[q].conj();
                }
            }
        }
        Ok(Self::from_parts(din, dout, choi))
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&Operator::identity(d))
    }

    /// `ρ ↦ U ρ U†`; `u` must be unitary.
    pub fn unitary(u: &Operator) -> Self {
        Self::from_kraus(core::slice::from_ref(u)).expect("unitary Kraus operator")
    }

    /// `ρ ↦ (1-p) ρ + p tr(ρ) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        let id = Self::identity(d);
        let noise = Operator::identity(d * d).scale(1.0 / d as f64);
        let choi = &id.choi.scale(1.0 - p) + &noise.scale(p);
        Self::from_choi(d, d, choi)
    }

    /// `ρ ↦ tr(ρ) σ`.
    pub fn replacement(din: usize, sigma: &Operator) -> Result<Self> {
        let dout = sigma.rows();
        let choi = sigma.kron(&Operator::identity(din));
        Self::from_choi(din, dout, choi)
    }

    /// Measure-and-forget channel: `ρ ↦ Σ_k ⟨k|ρ|k⟩ |k⟩⟨k|`.
    pub fn dephasing(d: usize) -> Self {
        let kraus: Vec<Operator> = (0..d).map(|k| Operator::unit(d, k, k)).collect();
        Self::from_kraus(&kraus).expect("complete projective measurement")
    }

    /// Random channel from a Haar-random Stinespring isometry with `rank`
    /// Kraus operators, raised to `⌈din/dout⌉` when smaller.
    pub fn random<R: Rng + ?Sized>(din: usize, dout: usize, rank: usize, rng: &mut R) -> Self {
        let rank = rank.max(din.div_ceil(dout));
        let v = sample_haar_isometry(dout * rank, din, rng);
        let kraus: Vec<Operator> = (0..rank)
            .map(|k| Operator::from_fn(dout, din, |a, i| v[(a * rank + k, i)]))
            .collect();
        let n = din * dout;
        let mut choi = Operator::zeros(n, n);
        for kr in &kraus {
            let d = kr.data();
            for p in 0..n {
                for q in 0..n {
                    choi[(p, q)] += d[p] * d[q].conj();
                }
            }
        }
        Self::from_parts(din, dout, choi)
    }
}

impl HpMap {
    /// Validates Hermiticity of the Choi matrix.
    pub fn from_choi(din: usize, dout: usize, choi: Operator) -> Result<Self> {
        check_choi_shape(din, dout, &choi)?;
        let deviation = choi.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_parts(din, dout, choi))
    }

    pub fn zero(din: usize, dout: usize) -> Self {
        Self::from_parts(din, dout, Operator::zeros(din * dout, din * dout))
    }

    /// The transpose map `ρ ↦ ρᵀ`; its Choi matrix is the swap operator.
    pub fn transpose_map(d: usize) -> Self {
        let n = d * d;
        let mut choi = Operator::zeros(n, n);
        for i in 0..d {
            for j in 0..d {
                choi[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
            }
        }
        Self::from_parts(d, d, choi)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(self.din, self.dout, self.choi.scale(s))
    }

    pub fn add(&self, other: &HpMap) -> Result<Self> {
        same_shape(self, other)?;
        Ok(Self::from_parts(self.din, self.dout, &self.choi + &other.choi))
    }
}

fn same_shape<A: LinearMap, B: LinearMap>(a: &A, b: &B) -> Result<()> {
    if (a.din(), a.dout()) != (b.din(), b.dout()) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "maps {} -> {} and {} -> {}",
            a.din(),
            a.dout(),
            b.din(),
            b.dout()
        )));
    }
    Ok(())
}

fn check_power(din: usize, dlocal: usize, n: usize) -> Result<()> {
    let ok = dlocal >= 1
        && n >= 1
        && u32::try_from(n)
            .ok()
            .and_then(|e| dlocal.checked_pow(e))
            .is_some_and(|p| p == din);
    if ok {
        Ok(())
    } else {
        Err(Error::NotTensorPower { din, dlocal, n })
    }
}

/// Basis-index action of `P_π` on `(C^dlocal)^⊗n`: `P_π|i⟩ = |σ(i)⟩`.
pub(crate) fn permutation_index_map(pi: &Permutation, dlocal: usize) -> Vec<usize> {
    let dims = vec![dlocal; pi.len()];
    factor_index_map(&dims, pi.inverse().images()).expect("valid permutation")
}

/// Adds `w · J[(a,σ(i)),(b,σ(j))]` into `target[(a,i),(b,j)]`.
fn add_permuted_choi(
    target: &mut Operator,
    choi: &Operator,
    din: usize,
    dout: usize,
    sigma: &[usize],
    weight: f64,
) {
    for a in 0..dout {
        for i in 0..din {
            let row = a * din + i;
            let src_row = a * din + sigma[i];
            for b in 0..dout {
                for j in 0..din {
                    target[(row, b * din + j)] += choi[(src_row, b * din + sigma[j])] * weight;
                }
            }
        }
    }
}

fn permuted_choi(choi: &Operator, din: usize, dout: usize, sigma: &[usize], weight: f64) -> Operator {
    let mut out = Operator::zeros(din * dout, din * dout);
    add_permuted_choi(&mut out, choi, din, dout, sigma, weight);
    out
}

fn apply_choi(choi: &Operator, din: usize, dout: usize, rho: &Operator) -> Result<Operator> {
    if !rho.is_square() || rho.rows() != din {
        return Err(Error::DimensionMismatch(alloc::format!(
            "input {}x{} for a map on dimension {din}",
            rho.rows(),
            rho.cols()
        )));
    }
    let mut out = Operator::zeros(dout, dout);
    for a in 0..dout {
        for b in 0..dout {
            let mut acc = ZERO;
            for i in 0..din {
                let row = choi.row(a * din + i);
                let block = &row[b * din..(b + 1) * din];
                for (j, jv) in block.iter().enumerate() {
                    acc += jv * rho[(i, j)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// `Tr_out J`, an operator on the input space.
pub(crate) fn trace_out_output(choi: &Operator, din: usize, dout: usize) -> Operator {
    let mut out = Operator::zeros(din, din);
    for a in 0..dout {
        for i in 0..din {
            for j in 0..din {
                out[(i, j)] += choi[(a * din + i, a * din + j)];
            }
        }
    }
    out
}

/// Complete-positivity / trace-preservation report for any Choi-represented map.
pub fn is_cptp<M: LinearMap>(m: &M, tol: f64) -> CptpReport {
    m.cptp_report(tol)
}

/// `f ∘ e` as a Hermiticity-preserving map.
pub fn compose_hp<F: LinearMap, E: LinearMap>(f: &F, e: &E) -> Result<HpMap> {
    if f.din() != e.dout() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "cannot compose a map on {} after a map into {}",
            f.din(),
            e.dout()
        )));
    }
    let (din, dmid, dout) = (e.din(), e.dout(), f.dout());
    let (jf, je) = (f.choi(), e.choi());
    let n = din * dout;
    let mut choi = Operator::zeros(n, n);
    for i in 0..din {
        for j in 0..din {
            for c in 0..dout {
                for d in 0..dout {
                    let mut acc = ZERO;
                    for a in 0..dmid {
                        for b in 0..dmid {
                            let ev = je[(a * din + i, b * din + j)];
                            if ev != ZERO {
                                acc += jf[(c * dmid + a, d * dmid + b)] * ev;
                            }
                        }
                    }
                    choi[(c * din + i, d * din + j)] = acc;
                }
            }
        }
    }
    Ok(HpMap::from_parts(din, dout, choi))
}

/// `f ∘ e`: apply `e`, then `f`.
pub fn compose(f: &Channel, e: &Channel) -> Result<Channel> {
    let hp = compose_hp(f, e)?;
    Ok(Channel::from_parts(hp.din, hp.dout, hp.choi))
}

/// `e - f`.
pub fn subtract<A: LinearMap, B: LinearMap>(e: &A, f: &B) -> Result<HpMap> {
    same_shape(e, f)?;
    Ok(HpMap::from_parts(e.din(), e.dout(), e.choi() - f.choi()))
}

/// `ρ ↦ (1/n!) Σ_π m(P_π ρ P_π†) ⊗ |π⟩⟨π|`, with the `n!`-dimensional
/// classical transcript register as the last output factor (permutations
/// in lexicographic order, see [`Permutation::all`]).
pub fn twirl_with_transcript(m: &Channel, n: usize, dlocal: usize) -> Result<Channel> {
    check_power(m.din, dlocal, n)?;
    if n > TRANSCRIPT_MAX_COPIES {
        return Err(Error::CopiesCap {
            what: "transcript twirl",
            n,
            cap: TRANSCRIPT_MAX_COPIES,
        });
    }
    let perms = Permutation::all(n);
    let reg = perms.len();
    let weight = 1.0 / reg as f64;
    let (din, dout) = (m.din, m.dout);
    let big_out = dout * reg;
    let mut choi = Operator::zeros(big_out * din, big_out * din);
    for (p, pi) in perms.iter().enumerate() {
        let sigma = permutation_index_map(pi, dlocal);
        let branch = permuted_choi(&m.choi, din, dout, &sigma, weight);
        for a in 0..dout {
            for i in 0..din {
                let row = (a * reg + p) * din + i;
                for b in 0..dout {
                    for j in 0..din {
                        choi[(row, (b * reg + p) * din + j)] = branch[(a * din + i, b * din + j)];
                    }
                }
            }
        }
    }
    Ok(Channel::from_parts(din, big_out, choi))
}

/// The register relabeling `K_π : |σ⟩ ↦ |σ∘π⁻¹⟩` on `inner ⊗ C^{n!}`, which
/// satisfies `T ∘ π = K_π ∘ T` for `T` built by [`twirl_with_transcript`].
pub fn transcript_relabeling(inner_dout: usize, pi: &Permutation) -> Channel {
    let perms = Permutation::all(pi.len());
    let reg = perms.len();
    let inv = pi.inverse();
    let d = inner_dout * reg;
    let mut u = Operator::zeros(d, d);
    for (p, sigma) in perms.iter().enumerate() {
        let q = Permutation::lex_index(&sigma.compose(&inv));
        for a in 0..inner_dout {
            u[(a * reg + q, a * reg + p)] = C64::new(1.0, 0.0);
        }
    }
    Channel::unitary(&u)
}
