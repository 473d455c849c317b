//! Seeded random generators for algebra elements, variance maps and
//! polynomials. All draws go through a caller-supplied RNG so that a seed
//! determines every instance.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::balgebra::{BAlgebra, BElem, CPMap};
use crate::chebyshev::{ChebProduct, ChebSpec};
use crate::mat::CMat;
use crate::ncpoly::{BiTensor, NCPoly, Word};
use crate::scalar::{Real, C};

fn gauss<T: Real, R: Rng + ?Sized>(rng: &mut R, scale: f64) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::lit(re * scale), T::lit(im * scale))
}

/// Element with independent complex Gaussian entries in every block.
pub fn random_elem<T: Real, R: Rng + ?Sized>(alg: &Arc<BAlgebra<T>>, rng: &mut R, scale: f64) -> BElem<T> {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&s| CMat::from_rows(s, (0..s * s).map(|_| gauss(rng, scale)).collect()))
        .collect();
    BElem::from_blocks(alg, blocks).expect("shapes follow the algebra")
}

/// Random diagonal element (commutes with every diagonal element).
pub fn random_diag<T: Real, R: Rng + ?Sized>(alg: &Arc<BAlgebra<T>>, rng: &mut R, scale: f64) -> BElem<T> {
    let entries: Vec<C<T>> = (0..alg.dim()).map(|_| gauss(rng, scale)).collect();
    BElem::diag(alg, &entries).expect("dimension matches")
}

/// Variance map `Σ_i (A_i* b A_i + A_i b A_i*)` from `count` random operators.
///
/// Star-closed families are trace symmetric for every block-diagonal algebra
/// with a block-weighted normalized trace.
pub fn random_star_closed<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    rng: &mut R,
    count: usize,
    scale: f64,
) -> CPMap<T> {
    let mut kraus = Vec::with_capacity(2 * count);
    for _ in 0..count.max(1) {
        let a = random_elem(alg, rng, scale);
        kraus.push(a.adjoint());
        kraus.push(a);
    }
    CPMap::new(alg, kraus).expect("nonempty Kraus family")
}

/// Star-closed variance map rescaled so that `max_abs(η(1)) = 1`.
pub fn random_normalized<T: Real, R: Rng + ?Sized>(alg: &Arc<BAlgebra<T>>, rng: &mut R, count: usize) -> CPMap<T> {
    let eta = random_star_closed(alg, rng, count, 1.0);
    let size = eta.apply(&BElem::one(alg)).max_abs();
    let c = C::new(T::one() / size.sqrt(), T::zero());
    CPMap::new(alg, eta.kraus().iter().map(|k| k.scale(c)).collect()).expect("nonempty Kraus family")
}

/// Random monomial of exact degree `degree` in `d` letters.
pub fn random_word<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    d: usize,
    degree: usize,
    rng: &mut R,
    scale: f64,
) -> Word<T> {
    let letters = (0..degree).map(|_| rng.gen_range(0..d)).collect();
    let coeffs = (0..=degree).map(|_| random_elem(alg, rng, scale)).collect();
    Word::new(letters, coeffs).expect("arity matches")
}

/// Sum of `terms` random monomials with degrees uniform in `0..=max_degree`.
pub fn random_poly<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    d: usize,
    max_degree: usize,
    terms: usize,
    rng: &mut R,
    scale: f64,
) -> NCPoly<T> {
    let words = (0..terms).map(|_| {
        let deg = rng.gen_range(0..=max_degree);
        random_word(alg, d, deg, rng, scale)
    });
    NCPoly::from_words(alg, d, words.collect()).expect("consistent words")
}

/// Sum of `terms` simple tensors whose legs have degree at most `max_degree`.
pub fn random_tensor<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    d: usize,
    max_degree: usize,
    terms: usize,
    rng: &mut R,
    scale: f64,
) -> BiTensor<T> {
    let pairs = (0..terms)
        .map(|_| {
            let l = rng.gen_range(0..=max_degree);
            let r = rng.gen_range(0..=max_degree);
            (random_word(alg, d, l, rng, scale), random_word(alg, d, r, rng, scale))
        })
        .collect();
    BiTensor::from_pairs(alg, d, pairs).expect("consistent words")
}

pub fn random_cheb_spec<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    letter: usize,
    n: usize,
    rng: &mut R,
    scale: f64,
) -> ChebSpec<T> {
    let pairs = (0..n).map(|_| (random_elem(alg, rng, scale), random_elem(alg, rng, scale))).collect();
    ChebSpec::new(letter, pairs).expect("n >= 1")
}

/// Random alternating Chebyshev product with the given degree vector.
pub fn random_cheb_product<T: Real, R: Rng + ?Sized>(
    alg: &Arc<BAlgebra<T>>,
    d: usize,
    degrees: &[usize],
    rng: &mut R,
    scale: f64,
) -> ChebProduct<T> {
    assert!(d >= 2 || degrees.len() <= 1, "alternation needs two letters");
    let mut factors: Vec<ChebSpec<T>> = Vec::with_capacity(degrees.len());
    for &n in degrees {
        let letter = loop {
            let j = rng.gen_range(0..d);
            if factors.last().is_none_or(|f| f.letter() != j) {
                break j;
            }
        };
        factors.push(random_cheb_spec(alg, letter, n, rng, scale));
    }
    ChebProduct::new(factors).expect("alternating by construction")
}

/// Random composition of `total` into `parts` positive integers.
pub fn random_composition<R: Rng + ?Sized>(total: usize, rng: &mut R) -> Vec<usize> {
    let mut parts = Vec::new();
    let mut left = total;
    while left > 0 {
        let n = rng.gen_range(1..=left);
        parts.push(n);
        left -= n;
    }
    parts
}
