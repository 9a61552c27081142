//! Reference values computed independently of the code under test.

use postsel_core::channels::{subtract, Channel, HpMap, LinearMap};
use postsel_core::diamond::{apply_with_reference, diamond_norm, output_trace_norm, output_trace_norm_pure, DiamondOptions};
use postsel_core::linalg::{sample_haar_isometry, stream, Ket, Operator, C64};
use postsel_core::postselect::{check_covariance, theorem1_rhs, Covariance};
use postsel_core::symmetric::{perm_operator, tau_family, Permutation};

fn id_minus_depol(d: usize, p: f64) -> HpMap {
    subtract(&Channel::identity(d), &Channel::depolarizing(d, p).unwrap()).unwrap()
}

/// Closed form of `‖id − D_p‖_◊` on a qubit.
fn depol_oracle(p: f64) -> f64 {
    1.5 * p
}

/// `max ‖(Δ ⊗ id)(ψ)‖₁` over `cos t |00⟩ + e^{iφ} sin t |11⟩` on a dense grid.
fn grid_search(delta: &HpMap) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..=200 {
        let t = std::f64::consts::FRAC_PI_2 * a as f64 / 200.0;
        for b in 0..8 {
            let phi = std::f64::consts::TAU * b as f64 / 8.0;
            let amps = vec![
                C64::new(t.cos(), 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::from_polar(t.sin(), phi),
            ];
            let psi = Ket::new(vec![2, 2], amps).unwrap();
            best = best.max(output_trace_norm(delta, &Operator::projector(&psi)).unwrap());
        }
    }
    best
}

#[test]
fn depolarizing_norm_matches_closed_form_and_grid() {
    for p in [0.25, 0.5, 1.0] {
        let delta = id_minus_depol(2, p);
        let r = diamond_norm(&delta, &DiamondOptions::default(), &mut stream(11, 0)).unwrap();
        assert!((r.value - depol_oracle(p)).abs() < 1e-5);
        assert!((grid_search(&delta) - depol_oracle(p)).abs() < 1e-9);
        assert!(r.gap <= 1e-6);
    }
}

#[test]
fn bell_spectrum_oracle() {
    // Φ⁺ − I/4 has spectrum {3/4, −1/4, −1/4, −1/4}
    let oracle = 0.75 + 3.0 * 0.25;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let bell = Ket::new(vec![2, 2], vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap();
    let got = output_trace_norm(&id_minus_depol(2, 1.0), &Operator::projector(&bell)).unwrap();
    assert!((got - oracle).abs() < 1e-12);
}

/// `τ_{H²} = αI + βF` with `tr τ = 1` and `tr(τF) = E tr σ² = 2d/(d²+1)`.
fn two_copy_tau(d: usize) -> Operator {
    let df = d as f64;
    let purity = 2.0 * df / (df * df + 1.0);
    // d²α + dβ = 1 and dα + d²β = purity
    let det = df.powi(4) - df * df;
    let alpha = (df * df - df * purity) / det;
    let beta = (df * df * purity - df) / det;
    let swap = perm_operator(2, d, &Permutation::transposition(2, 0, 1).unwrap()).unwrap();
    &Operator::identity(d * d).scale(alpha) + &swap.scale(beta)
}

#[test]
fn two_copy_de_finetti_state() {
    for d in [2, 3] {
        let t = tau_family(2, d).unwrap();
        assert!((&t.tau_reduced - &two_copy_tau(d)).max_abs() < 1e-12, "d = {d}");
    }
    let eig = tau_family(2, 2).unwrap().tau_reduced.hermitian_eigenvalues();
    for (a, b) in eig.iter().zip([0.1, 0.3, 0.3, 0.3]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn worked_rhs_single_copy() {
    let cm = check_covariance(&id_minus_depol(2, 1.0), 1, 2, Covariance::Strict).unwrap();
    let rhs = theorem1_rhs(&cm).unwrap();
    assert_eq!(rhs.g, 4);
    assert!((rhs.rhs - 4.0 * 1.5).abs() < 1e-10);
}

/// Output trace norm on the full purification, without Schmidt compression.
fn direct_rhs(delta: &HpMap, n: usize, d: usize) -> f64 {
    let t = tau_family(n, d).unwrap();
    let psi = t.purification_block_layout();
    let rho = Operator::projector(&psi);
    t.g as f64 * apply_with_reference(delta, &rho).unwrap().trace_norm().unwrap()
}

#[test]
fn two_copy_rhs_golden() {
    let delta = id_minus_depol(4, 1.0).twirl_permutation(2, 2).unwrap();
    let cm = check_covariance(&delta, 2, 2, Covariance::Strict).unwrap();
    let rhs = theorem1_rhs(&cm).unwrap();
    let direct = direct_rhs(&delta, 2, 2);
    assert!((rhs.rhs - direct).abs() < 1e-10);
    assert!((rhs.rhs - TWO_COPY_GOLDEN).abs() < 1e-10, "{}", rhs.rhs);
}

/// `10 · ‖(Δ ⊗ id)(τ_pur)‖₁` for the twirl of `id − D₁` on two qubits.
const TWO_COPY_GOLDEN: f64 = 18.0;

#[test]
fn rhs_is_invariant_under_reference_isometries() {
    let mut rng = stream(12, 0);
    let delta = id_minus_depol(4, 0.7);
    let t = tau_family(2, 2).unwrap();
    let psi = t.purification_block_layout();
    let dref = psi.len() / 4;
    let v = sample_haar_isometry(dref + 7, dref, &mut rng);
    let a = psi.to_matrix(4).unwrap();
    let moved = a.matmul(&v.transpose());
    let moved = Ket::new(vec![4, dref + 7], moved.data().to_vec()).unwrap();
    let before = output_trace_norm_pure(&delta, &psi).unwrap();
    let after = output_trace_norm_pure(&delta, &moved).unwrap();
    let after_direct = output_trace_norm(&delta, &Operator::projector(&moved)).unwrap();
    assert!((before - after).abs() < 1e-10);
    assert!((before - after_direct).abs() < 1e-10);
}

#[test]
fn purification_matches_bell_state_for_one_copy() {
    // with n = 1 the purification of I/2 is maximally entangled across H and K ⊗ N
    let delta = id_minus_depol(2, 1.0);
    let t = tau_family(1, 2).unwrap();
    assert!((output_trace_norm_pure(&delta, &t.purification_block_layout()).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(delta.din(), 2);
}
