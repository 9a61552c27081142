//! Security-parameter arithmetic for the collective-to-general reduction and
//! a two-qubit-per-signal toy protocol.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channels::{compose, subtract, Channel, HpMap, LinearMap};
use crate::diamond::{diamond_bounds, output_trace_norm, output_trace_norm_pure, DiamondOptions};
use crate::error::{Error, Result};
use crate::linalg::{sample_haar_pure, Ket, Operator};
use crate::symmetric::{g_nd, tau_family};

/// Largest `n` such that `d^n` fits the toy's dense matrices.
pub const TOY_MAX_SIGNALS: usize = 2;
/// Per-signal dimension of the toy (one qubit each for Alice and Bob).
pub const TOY_SIGNAL_DIM: usize = 4;
/// A collective value at or above this marks the toy as insecure.
pub const INSECURE_THRESHOLD: f64 = 1.0;
/// Slack allowed in the mixture-versus-maximum comparison.
pub const MIXTURE_TOL: f64 = 1e-9;

/// Which side of `ε̄ = ε (n+1)^{-(d²-1)}` is given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsInput {
    Eps(f64),
    EpsBar(f64),
}

/// Parameters of the reduction from collective to general attacks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityParams {
    pub n: u64,
    pub d: u64,
    pub eps: f64,
    pub eps_bar: f64,
    pub log2_eps: f64,
    pub log2_eps_bar: f64,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    /// `2(d²-1) log₂(n+1)`.
    pub key_penalty_bits: f64,
}

impl SecurityParams {
    /// `ε > 1`, i.e. no security statement at all.
    pub fn is_vacuous(&self) -> bool {
        self.log2_eps > 0.0
    }
}

fn check_nd(n: u64, d: u64) -> Result<()> {
    if n < 1 || d < 2 {
        return Err(Error::OutOfRange(alloc::format!("need n >= 1 and d >= 2 (n = {n}, d = {d})")));
    }
    Ok(())
}

fn signal_exponent(d: u64) -> Result<u64> {
    d.checked_mul(d)
        .map(|x| x - 1)
        .ok_or(Error::Overflow("d²-1"))
}

/// `(n+1)^{d²-1}` when it is an integer below `2^53`.
fn exact_factor(n: u64, k: u64) -> Option<f64> {
    let e = u32::try_from(k).ok()?;
    let f = (n as u128 + 1).checked_pow(e)?;
    (f <= 1u128 << 53).then_some(f as f64)
}

/// Fills in the missing one of `ε`, `ε̄`.
pub fn eps_reduction(input: EpsInput, n: u64, d: u64) -> Result<SecurityParams> {
    check_nd(n, d)?;
    let given = match input {
        EpsInput::Eps(x) | EpsInput::EpsBar(x) => x,
    };
    if !(given > 0.0 && given <= 2.0) {
        return Err(Error::OutOfRange(alloc::format!("security parameter {given} not in (0, 2]")));
    }
    let k = signal_exponent(d)?;
    let log2_factor = k as f64 * ((n + 1) as f64).log2();
    let (eps, eps_bar) = match (input, exact_factor(n, k)) {
        (EpsInput::Eps(e), Some(f)) => (e, e / f),
        (EpsInput::EpsBar(b), Some(f)) => (b * f, b),
        (EpsInput::Eps(e), None) => (e, e * (-log2_factor).exp2()),
        (EpsInput::EpsBar(b), None) => (b * log2_factor.exp2(), b),
    };
    let (log2_eps, log2_eps_bar) = match input {
        EpsInput::Eps(e) => (e.log2(), e.log2() - log2_factor),
        EpsInput::EpsBar(b) => (b.log2() + log2_factor, b.log2()),
    };
    Ok(SecurityParams {
        n,
        d,
        eps,
        eps_bar,
        log2_eps,
        log2_eps_bar,
        delta: None,
        c: None,
        key_penalty_bits: 2.0 * log2_factor,
    })
}

/// Key shortening in bits: `2 log₂ g_{n,d}` and its bound `2(d²-1) log₂(n+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyPenalty {
    pub exact_bits: f64,
    pub bound_bits: f64,
}

pub fn key_penalty(n: u64, d: u64) -> Result<KeyPenalty> {
    check_nd(n, d)?;
    let k = signal_exponent(d)?;
    // log₂ C(n+k, k) = Σ_j log₂((n+j)/j)
    let exact_bits = 2.0 * (1..=k).map(|j| ((n + j) as f64 / j as f64).log2()).sum::<f64>();
    let bound_bits = 2.0 * k as f64 * ((n + 1) as f64).log2();
    assert!(exact_bits <= bound_bits * (1.0 + 1e-12), "penalty exceeds its bound");
    Ok(KeyPenalty { exact_bits, bound_bits })
}

/// `ε ≤ 2^{-cδ²n + (d²-1) log₂(n+1)}`, evaluated in the log domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralBound {
    pub exponent: f64,
    /// `min(1, 2^exponent)`.
    pub bound: f64,
    /// `exponent > 0`: the unclamped bound exceeds 1.
    pub vacuous: bool,
}

fn check_rate(c: f64, delta: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange(alloc::format!("exponent constant c = {c} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(alloc::format!("δ = {delta} not in (0, 1)")));
    }
    Ok(())
}

fn exponent(a: f64, k: f64, n: u64) -> f64 {
    -a * n as f64 + k * ((n as f64) + 1.0).log2()
}

pub fn general_bound(c: f64, delta: f64, n: u64, d: u64) -> Result<GeneralBound> {
    check_rate(c, delta)?;
    check_nd(n, d)?;
    let k = signal_exponent(d)? as f64;
    let e = exponent(c * delta * delta, k, n);
    Ok(GeneralBound {
        exponent: e,
        bound: e.exp2().min(1.0),
        vacuous: e > 0.0,
    })
}

/// Search cap for [`crossover_n`].
pub const CROSSOVER_CAP: u64 = 1 << 63;

/// Smallest `n` from which on the general bound stays at or below `target`.
pub fn crossover_n(c: f64, delta: f64, d: u64, target: f64) -> Result<u64> {
    if !(target > 0.0) {
        return Err(Error::OutOfRange(alloc::format!("target {target} must be positive")));
    }
    crossover_n_log2(c, delta, d, target.log2())
}

/// As [`crossover_n`] with the target given as `log₂ target`.
pub fn crossover_n_log2(c: f64, delta: f64, d: u64, log2_target: f64) -> Result<u64> {
    check_rate(c, delta)?;
    check_nd(1, d)?;
    let a = c * delta * delta;
    let k = signal_exponent(d)? as f64;
    let f = |n: u64| exponent(a, k, n);
    // integer maximiser of the concave exponent
    let peak = k / (a * core::f64::consts::LN_2) - 1.0;
    let m = if peak <= 1.0 {
        1
    } else if peak >= CROSSOVER_CAP as f64 {
        return Err(Error::Unreachable { cap: CROSSOVER_CAP });
    } else {
        let lo = peak.floor() as u64;
        if f(lo + 1) > f(lo) {
            lo + 1
        } else {
            lo.max(1)
        }
    };
    if f(m) <= log2_target {
        return Ok(1);
    }
    let mut lo = m;
    let mut hi = m.saturating_mul(2).max(2);
    while f(hi) > log2_target {
        if hi == CROSSOVER_CAP {
            return Err(Error::Unreachable { cap: CROSSOVER_CAP });
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(CROSSOVER_CAP);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) <= log2_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The toy protocol: each of `n` signals is a qubit pair measured in the
/// computational basis by Alice and Bob; the raw bits are the keys
/// `(S_A, S_B)` and the transcript is empty. `F = S ∘ E` replaces the keys by
/// a uniform shared key of `ℓ = n` bits.
#[derive(Clone, Debug)]
pub struct ToyProtocol {
    pub n: usize,
    pub e: Channel,
    pub f: Channel,
    pub key_bits: usize,
}

impl ToyProtocol {
    /// Per-signal dimension `dim(H_A ⊗ H_B)`.
    pub fn signal_dim(&self) -> usize {
        TOY_SIGNAL_DIM
    }

    /// Key register `S_A` (equal in size to `S_B`).
    pub fn key_dim(&self) -> usize {
        1 << self.key_bits
    }

    /// Replaces the ideal map.
    pub fn with_ideal(mut self, f: Channel) -> Result<Self> {
        if f.din() != self.e.din() || f.dout() != self.e.dout() {
            return Err(Error::DimensionMismatch("ideal map must have the shape of E".into()));
        }
        self.f = f;
        Ok(self)
    }

    pub fn difference(&self) -> HpMap {
        subtract(&self.e, &self.f).expect("E and F share a shape")
    }
}

pub fn build_toy_protocol(n: usize) -> Result<ToyProtocol> {
    if n == 0 || n > TOY_MAX_SIGNALS {
        return Err(Error::CopiesCap {
            what: "toy protocol signals",
            n,
            cap: TOY_MAX_SIGNALS,
        });
    }
    let keys = 1usize << n;
    let din = TOY_SIGNAL_DIM.pow(n as u32);
    let dout = keys * keys;
    // input index x has digits (a_1 b_1 … a_n b_n)
    let key_of = |x: usize| {
        let (mut sa, mut sb) = (0, 0);
        for k in 0..n {
            let pair = (x >> (2 * (n - 1 - k))) & 3;
            sa = (sa << 1) | (pair >> 1);
            sb = (sb << 1) | (pair & 1);
        }
        sa * keys + sb
    };
    let kraus: Vec<Operator> = (0..din).map(|x| Operator::unit_rect(dout, din, key_of(x), x)).collect();
    let e = Channel::from_kraus(&kraus)?;
    let mut ideal = Operator::zeros(dout, dout);
    for k in 0..keys {
        ideal[(k * keys + k, k * keys + k)] = crate::linalg::C64::new(1.0 / keys as f64, 0.0);
    }
    let s = Channel::replacement(dout, &ideal)?;
    let f = compose(&s, &e)?;
    Ok(ToyProtocol { n, e, f, key_bits: n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyMode {
    Collective,
    PostSelection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyReport {
    pub n: usize,
    pub d: usize,
    pub mode: ToyMode,
    /// `max_σ ‖((E−F) ⊗ id)(σ_{HK}^{⊗n})‖₁` over pure `σ`.
    pub collective: f64,
    /// True when `collective` is certified (the single-signal diamond norm);
    /// otherwise it is the best value of a heuristic search.
    pub collective_certified: bool,
    /// `‖((E−F) ⊗ id)(τ_{HK})‖₁` on the mixed de Finetti state.
    pub mixture: Option<f64>,
    /// `mixture ≤ collective + 1e-9`.
    pub mixture_ok: Option<bool>,
    pub g: Option<u128>,
    /// `‖((E−F) ⊗ id)(τ_pur)‖₁`.
    pub tau_trace_norm: Option<f64>,
    /// `g · tau_trace_norm`.
    pub postselection_rhs: Option<f64>,
    /// `ε = ε̄ (n+1)^{d²-1}` with `ε̄ = collective`.
    pub eps_implied: Option<f64>,
    pub insecure: bool,
}

/// Evaluates the toy in the requested mode. Post-selection mode supports
/// `n = 1` only.
pub fn toy_security_eval<R: Rng + ?Sized>(
    tp: &ToyProtocol,
    mode: ToyMode,
    options: &DiamondOptions,
    rng: &mut R,
) -> Result<ToyReport> {
    let n = tp.n;
    let d = TOY_SIGNAL_DIM;
    if mode == ToyMode::PostSelection && n > 1 {
        return Err(Error::SizeGuard {
            what: "toy post-selection signals",
            size: n as u128,
            limit: 1,
        });
    }
    let delta = tp.difference();
    let (collective, certified) = if n == 1 {
        (diamond_bounds(&delta, options, rng)?.value, true)
    } else {
        (collective_search(&delta, n, options.restarts, rng)?, false)
    };
    let mut report = ToyReport {
        n,
        d,
        mode,
        collective,
        collective_certified: certified,
        mixture: None,
        mixture_ok: None,
        g: None,
        tau_trace_norm: None,
        postselection_rhs: None,
        eps_implied: None,
        insecure: collective >= INSECURE_THRESHOLD,
    };
    if n == 1 {
        let tau = tau_family(1, d)?;
        let mixture = output_trace_norm(&delta, &tau.tau_full)?;
        report.mixture = Some(mixture);
        report.mixture_ok = Some(mixture <= collective + MIXTURE_TOL);
    }
    if mode == ToyMode::PostSelection {
        let tau = tau_family(n, d)?;
        let tnorm = output_trace_norm_pure(&delta, &tau.purification_block_layout())?;
        report.g = Some(g_nd(n, d)?.g);
        report.tau_trace_norm = Some(tnorm);
        report.postselection_rhs = Some(tau.g as f64 * tnorm);
        let k = (d * d - 1) as i32;
        report.eps_implied = Some(collective * ((n + 1) as f64).powi(k));
    }
    Ok(report)
}

/// `‖(Δ ⊗ id)((ψψ†)^{⊗n})‖₁` for `ψ` on `H ⊗ K` with `dim K = dim H`.
pub fn iid_output_norm(delta: &HpMap, psi: &Ket, n: usize) -> Result<f64> {
    let mut power = psi.clone();
    for _ in 1..n {
        power = power.kron(psi);
    }
    let dh = (psi.len() as f64).sqrt().round() as usize;
    let power = power.with_dims(vec![dh; 2 * n])?;
    let block = power.reorder_factors(&crate::symmetric::interleaved_to_block(n))?;
    output_trace_norm_pure(delta, &block)
}

/// Heuristic maximum over i.i.d. pure inputs: product basis states with a
/// trivial reference, the single-copy optimum, and Haar-random states.
fn collective_search<R: Rng + ?Sized>(delta: &HpMap, n: usize, restarts: usize, rng: &mut R) -> Result<f64> {
    let dh = TOY_SIGNAL_DIM;
    let mut candidates: Vec<Ket> = (0..dh).map(|h| Ket::basis(dh * dh, h * dh)).collect();
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let bell = Ket::new(
        vec![dh * dh],
        (0..dh * dh)
            .map(|x| {
                let v = if x == 0 || x == 3 * dh + 3 { h } else { 0.0 };
                crate::linalg::C64::new(v, 0.0)
            })
            .collect(),
    )?;
    candidates.push(bell);
    for _ in 0..restarts {
        candidates.push(sample_haar_pure(dh * dh, rng));
    }
    let mut best = 0.0f64;
    for c in &candidates {
        best = best.max(iid_output_norm(delta, c, n)?);
    }
    Ok(best)
}
