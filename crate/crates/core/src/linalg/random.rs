//! Seeded samplers for the Hilbert-Schmidt and Haar measures.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Ket, Operator, C64};

/// Identifier of the pseudo-random stream family, fixed per release.
pub const RNG_STREAM_ID: &str = "chacha8-stream-v1";

/// Independent substream `index` of the stream family rooted at `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// `rows x cols` matrix of independent standard complex Gaussians.
pub fn sample_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Operator {
    Operator::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Density operator drawn from the Hilbert-Schmidt measure: `GG† / tr(GG†)`
/// with `G` a square Ginibre matrix.
pub fn sample_hs_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = sample_ginibre(d, d, rng);
    let gg = g.matmul(&g.adjoint());
    let t = gg.trace().re;
    gg.scale(1.0 / t).hermitian_part()
}

/// Haar-random unit vector in `C^dim`.
pub fn sample_haar_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let amps: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    Ket::new(alloc::vec![dim], amps).unwrap().normalized()
}

/// Haar-random isometry `C^din -> C^dout` (`dout >= din`), via Gram-Schmidt
/// on Gaussian columns.
pub fn sample_haar_isometry<R: Rng + ?Sized>(dout: usize, din: usize, rng: &mut R) -> Operator {
    assert!(dout >= din, "isometry needs dout >= din");
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(din);
    while cols.len() < din {
        let mut v: Vec<C64> = (0..dout).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= overlap * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    Operator::from_fn(dout, din, |i, j| cols[j][i])
}

pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    sample_haar_isometry(d, d, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_samples_are_trivial() {
        let mut rng = stream(7, 0);
        let rho = sample_hs_density(1, &mut rng);
        assert!((rho[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let psi = sample_haar_pure(1, &mut rng);
        assert!((Operator::projector(&psi)[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_samples_have_unit_trace() {
        let mut rng = stream(1, 3);
        for _ in 0..100 {
            let p = Operator::projector(&sample_haar_pure(5, &mut rng));
            assert!((p.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_samples_are_states() {
        let mut rng = stream(2, 0);
        for _ in 0..50 {
            let rho = sample_hs_density(3, &mut rng);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(rho.min_eigenvalue().unwrap() > -1e-12);
        }
    }

    #[test]
    fn isometry_is_isometric() {
        let mut rng = stream(3, 0);
        let v = sample_haar_isometry(7, 4, &mut rng);
        let gram = v.adjoint().matmul(&v);
        assert!((&gram - &Operator::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn substreams_differ_and_repeat() {
        let a: u64 = stream(5, 0).random();
        let b: u64 = stream(5, 1).random();
        let a2: u64 = stream(5, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }
}
