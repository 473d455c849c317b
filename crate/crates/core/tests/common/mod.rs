#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use opfree::random::random_normalized;
use opfree::{Algebra, Complex, Elem, Fock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

/// `ℂ³` with random weights.
pub fn diag3(rng: &mut ChaCha8Rng) -> Arc<Algebra> {
    Algebra::diagonal(random_weights(rng, 3)).unwrap()
}

/// One of `ℂ³` (random weights), `M₂`, or `ℂ ⊕ M₂` (random weights).
pub fn random_algebra(rng: &mut ChaCha8Rng) -> Arc<Algebra> {
    match rng.gen_range(0..3) {
        0 => diag3(rng),
        1 => Algebra::full(2).unwrap(),
        _ => Algebra::blocks(vec![1, 2], random_weights(rng, 2)).unwrap(),
    }
}

pub fn space_on(alg: &Arc<Algebra>, rng: &mut ChaCha8Rng, d: usize, depth: usize) -> Arc<Fock> {
    let etas = (0..d).map(|_| random_normalized(alg, rng, 2)).collect();
    Fock::new(alg, etas, depth).unwrap()
}

pub fn random_space(rng: &mut ChaCha8Rng, d: usize, depth: usize) -> Arc<Fock> {
    let alg = random_algebra(rng);
    space_on(&alg, rng, d, depth)
}

/// Eigenvalues of a Hermitian element in its dense representation.
pub fn hermitian_eigenvalues(b: &Elem) -> Vec<f64> {
    let m = b.to_dense();
    let n = m.dim();
    let dm = DMatrix::<Complex>::from_fn(n, n, |i, j| m.get(i, j));
    let sym = (&dm + dm.adjoint()) * Complex::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}
