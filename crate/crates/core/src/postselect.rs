//! The post-selection inequality `‖Δ‖_◊ ≤ g_{n,d} ‖(Δ ⊗ id)(τ_{H^nR})‖₁`
//! for permutation-covariant maps `Δ` on `H^⊗n`.

use alloc::vec::Vec;

use rand::Rng;

use crate::channels::{compose_hp, subtract, transcript_relabeling, Channel, HpMap, LinearMap};
use crate::diamond::{diamond_bounds, output_trace_norm_pure, DiamondOptions, DiamondResult};
use crate::error::{Error, Result};
use crate::symmetric::{tau_family, Permutation, TauFamily};

/// Largest Choi deviation accepted by [`check_covariance`].
pub const COVARIANCE_TOL: f64 = 1e-9;
/// Allowance on `rhs` when deciding whether the inequality holds.
pub const SLACK_TOL: f64 = 1e-7;

/// How `Δ ∘ π = K_π ∘ Δ` is realised.
#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    /// `K_π = id`.
    Strict,
    /// `K_π` relabels a permutation register appended to an output of
    /// dimension `inner_dout`.
    Transcript { inner_dout: usize },
    /// One channel per adjacent transposition `(k, k+1)`, `k = 0..n-1`.
    Supplied(Vec<Channel>),
}

/// A map whose covariance has been checked on every adjacent transposition.
#[derive(Clone, Debug)]
pub struct CovariantMap {
    delta: HpMap,
    n: usize,
    d: usize,
    kind: Covariance,
    max_deviation: f64,
}

impl CovariantMap {
    pub fn delta(&self) -> &HpMap {
        &self.delta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &Covariance {
        &self.kind
    }

    /// Worst Choi Frobenius deviation seen during the check.
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }
}

/// Verifies `‖Δ ∘ π − K_π ∘ Δ‖_F ≤ 1e-9` on the Choi matrices for every
/// adjacent transposition `π`.
pub fn check_covariance(delta: &HpMap, n: usize, d: usize, kind: Covariance) -> Result<CovariantMap> {
    let din = u32::try_from(n)
        .ok()
        .and_then(|e| d.checked_pow(e))
        .ok_or(Error::Overflow("d^n"))?;
    if n == 0 || d == 0 || delta.din() != din {
        return Err(Error::NotTensorPower {
            din: delta.din(),
            dlocal: d,
            n,
        });
    }
    match &kind {
        Covariance::Transcript { inner_dout } => {
            let reg: usize = (1..=n).product();
            if inner_dout * reg != delta.dout() {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "output dimension {} is not {inner_dout} x {reg}",
                    delta.dout()
                )));
            }
        }
        Covariance::Supplied(family) => {
            if family.len() != n.saturating_sub(1) {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "expected {} channels K_π, got {}",
                    n.saturating_sub(1),
                    family.len()
                )));
            }
            if let Some(k) = family.iter().find(|k| k.din() != delta.dout()) {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "K_π has input {} but the map outputs {}",
                    k.din(),
                    delta.dout()
                )));
            }
        }
        Covariance::Strict => {}
    }
    let mut worst = (0, 0.0f64);
    for k in 0..n.saturating_sub(1) {
        let pi = Permutation::transposition(n, k, k + 1)?;
        let lhs = delta.precompose_permutation(&pi, d)?;
        let deviation = match &kind {
            Covariance::Strict => (lhs.choi() - delta.choi()).frobenius_norm(),
            Covariance::Transcript { inner_dout } => {
                let rhs = compose_hp(&transcript_relabeling(*inner_dout, &pi), delta)?;
                (lhs.choi() - rhs.choi()).frobenius_norm()
            }
            Covariance::Supplied(family) => {
                let rhs = compose_hp(&family[k], delta)?;
                (lhs.choi() - rhs.choi()).frobenius_norm()
            }
        };
        if deviation > worst.1 {
            worst = (k, deviation);
        }
    }
    if worst.1 > COVARIANCE_TOL {
        return Err(Error::CovarianceViolation {
            generator: worst.0,
            deviation: worst.1,
        });
    }
    Ok(CovariantMap {
        delta: delta.clone(),
        n,
        d,
        kind,
        max_deviation: worst.1,
    })
}

/// Right-hand side of the inequality and its ingredients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem1Rhs {
    pub g: u128,
    /// `‖(Δ ⊗ id)(τ_{H^nK^nN})‖₁`.
    pub tau_trace_norm: f64,
    /// `g · tau_trace_norm`.
    pub rhs: f64,
}

/// `g_{n,d} ‖(Δ ⊗ id)(τ_{H^nR})‖₁` with `R = K^⊗n ⊗ N`.
pub fn theorem1_rhs(cm: &CovariantMap) -> Result<Theorem1Rhs> {
    let tau = tau_family(cm.n, cm.d)?;
    theorem1_rhs_with(cm, &tau)
}

/// As [`theorem1_rhs`] with a precomputed family.
pub fn theorem1_rhs_with(cm: &CovariantMap, tau: &TauFamily) -> Result<Theorem1Rhs> {
    if tau.n != cm.n || tau.d != cm.d {
        return Err(Error::DimensionMismatch("de Finetti family does not match the map".into()));
    }
    let psi = tau.purification_block_layout();
    let tau_trace_norm = output_trace_norm_pure(&cm.delta, &psi)?;
    Ok(Theorem1Rhs {
        g: tau.g,
        tau_trace_norm,
        rhs: tau.g as f64 * tau_trace_norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelectionReport {
    pub n: usize,
    pub d: usize,
    pub g: u128,
    pub lhs: DiamondResult,
    pub rhs: f64,
    /// `rhs − lhs.value`.
    pub slack: f64,
    /// `lhs.upper ≤ rhs + 1e-7`.
    pub holds: bool,
    pub tau_trace_norm: f64,
}

pub fn theorem1_check<R: Rng + ?Sized>(cm: &CovariantMap, options: &DiamondOptions, rng: &mut R) -> Result<PostSelectionReport> {
    let tau = tau_family(cm.n, cm.d)?;
    theorem1_check_with(cm, &tau, options, rng)
}

/// As [`theorem1_check`] with a precomputed family.
pub fn theorem1_check_with<R: Rng + ?Sized>(
    cm: &CovariantMap,
    tau: &TauFamily,
    options: &DiamondOptions,
    rng: &mut R,
) -> Result<PostSelectionReport> {
    let rhs = theorem1_rhs_with(cm, tau)?;
    let lhs = diamond_bounds(&cm.delta, options, rng)?;
    Ok(PostSelectionReport {
        n: cm.n,
        d: cm.d,
        g: rhs.g,
        slack: rhs.rhs - lhs.value,
        holds: lhs.upper <= rhs.rhs + SLACK_TOL,
        lhs,
        rhs: rhs.rhs,
        tau_trace_norm: rhs.tau_trace_norm,
    })
}

/// `twirl(E − F)` for Haar-random channels `E, F : (C^d)^⊗n → C^d`.
pub fn random_twirled_difference<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<HpMap> {
    let din = d.pow(n as u32);
    let e = Channel::random(din, d, rng.random_range(1..=3), rng);
    let f = Channel::random(din, d, rng.random_range(1..=3), rng);
    subtract(&e, &f)?.twirl_permutation(n, d)
}
