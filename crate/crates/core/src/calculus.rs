//! Divergence `∂_j*`, the number operator, Stein's equation, integration by
//! parts and the free Poincaré inequality, all evaluated on the Fock
//! realization of the semicircular system.
//!
//! Identity checks return both sides (or residual norms); tolerances belong
//! to the caller.

use std::sync::Arc;

use serde::Serialize;

use crate::balgebra::BElem;
use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::moments::moment_word;
use crate::ncpoly::{fdq, BiTensor, NCPoly, Word};
use crate::scalar::{Real, C};

/// How `E∘ev_S` is evaluated inside the divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpectEngine {
    #[default]
    Fock,
    /// Non-crossing pairing sums; independent of the Fock space.
    Oracle,
}

fn expect_word<T: Real>(space: &Arc<FockSpace<T>>, w: &Word<T>, engine: ExpectEngine) -> Result<BElem<T>> {
    match engine {
        ExpectEngine::Fock => space.expect_word(w),
        ExpectEngine::Oracle => moment_word(w, space.etas()),
    }
}

fn check_tensor<T: Real>(space: &FockSpace<T>, j: usize, t: &BiTensor<T>, slack: usize) -> Result<()> {
    space.eta(j)?;
    if t.d() != space.d() {
        return Err(Error::VariableCountMismatch { left: t.d(), right: space.d() });
    }
    if !(Arc::ptr_eq(t.algebra(), space.algebra()) || **t.algebra() == **space.algebra()) {
        return Err(Error::AlgebraMismatch);
    }
    let needed = t.leg_degree() + slack;
    if needed > space.depth() {
        return Err(Error::DepthExceeded { needed, depth: space.depth() });
    }
    Ok(())
}

/// `∂_j*(ξ_1⊗ξ_2) = ξ_1 X_j ξ_2 − Σ_{ξ_2=uX_jv} ξ_1 η_j(E[u]) v − Σ_{ξ_1=uX_jv} u η_j(E[v]) ξ_2`.
pub fn divergence<T: Real>(space: &Arc<FockSpace<T>>, j: usize, t: &BiTensor<T>) -> Result<NCPoly<T>> {
    divergence_with(space, j, t, ExpectEngine::Fock)
}

pub fn divergence_with<T: Real>(space: &Arc<FockSpace<T>>, j: usize, t: &BiTensor<T>, engine: ExpectEngine) -> Result<NCPoly<T>> {
    check_tensor(space, j, t, 1)?;
    let eta = space.eta(j)?;
    let mut words = Vec::new();
    for (l, r) in t.pairs() {
        words.push(Word::splice(l, j, r));
        for (pos, _) in r.letters().iter().enumerate().filter(|(_, &x)| x == j) {
            let (u, v) = r.split_at_letter(pos);
            let mid = eta.apply(&expect_word(space, &u, engine)?);
            words.push(l.concat(&Word::constant(mid)).concat(&v).scale(-C::<T>::from(T::one())));
        }
        for (pos, _) in l.letters().iter().enumerate().filter(|(_, &x)| x == j) {
            let (u, v) = l.split_at_letter(pos);
            let mid = eta.apply(&expect_word(space, &v, engine)?);
            words.push(u.concat(&Word::constant(mid)).concat(r).scale(-C::<T>::from(T::one())));
        }
    }
    NCPoly::from_words(space.algebra(), space.d(), words)
}

/// `(ξ_1⊗ξ_2, ξ_3⊗ξ_4)_j = ξ_1 η_j(E[ξ_2 ξ_3]) ξ_4`, extended bilinearly.
pub fn eta_pairing<T: Real>(space: &Arc<FockSpace<T>>, j: usize, t1: &BiTensor<T>, t2: &BiTensor<T>) -> Result<NCPoly<T>> {
    check_tensor(space, j, t1, 0)?;
    check_tensor(space, j, t2, 0)?;
    let eta = space.eta(j)?;
    let mut words = Vec::new();
    for (x1, x2) in t1.pairs() {
        for (x3, x4) in t2.pairs() {
            let inner = x2.concat(x3);
            if inner.degree() > space.depth() {
                return Err(Error::DepthExceeded { needed: inner.degree(), depth: space.depth() });
            }
            let mid = eta.apply(&space.expect_word(&inner)?);
            words.push(x1.concat(&Word::constant(mid)).concat(x4));
        }
    }
    NCPoly::from_words(space.algebra(), space.d(), words)
}

/// Residual norms of the two product rules
/// `∂_j*[(a⊗1)Ξ] = a∂_j*[Ξ] − (∂_j a, Ξ)_j` and
/// `∂_j*[Ξ(1⊗a)] = ∂_j*[Ξ]a − (Ξ, ∂_j a)_j`.
pub fn product_rule_residuals<T: Real>(space: &Arc<FockSpace<T>>, j: usize, a: &NCPoly<T>, t: &BiTensor<T>) -> Result<(T, T)> {
    let da = fdq(a, j)?;
    let div_t = divergence(space, j, t)?;
    let left = divergence(space, j, &t.lmul(a)?)?;
    let left_rhs = a.checked_mul(&div_t)?.checked_sub(&eta_pairing(space, j, &da, t)?)?;
    let right = divergence(space, j, &t.rmul(a)?)?;
    let right_rhs = div_t.checked_mul(a)?.checked_sub(&eta_pairing(space, j, t, &da)?)?;
    Ok((left.checked_sub(&left_rhs)?.residual_norm(), right.checked_sub(&right_rhs)?.residual_norm()))
}

/// `∂_j*∂_j p`.
pub fn number_op<T: Real>(space: &Arc<FockSpace<T>>, j: usize, p: &NCPoly<T>) -> Result<NCPoly<T>> {
    divergence(space, j, &fdq(p, j)?)
}

/// `(⟨S_j, P(S)⟩_τ, ⟨1⊗1, ∂_j P⟩_{η_j})`.
pub fn stein_residual<T: Real>(space: &Arc<FockSpace<T>>, j: usize, p: &NCPoly<T>) -> Result<(C<T>, C<T>)> {
    let x = NCPoly::var(space.algebra(), space.d(), j)?;
    let lhs = space.inner_tau(&x, p)?;
    let rhs = space.inner_eta(j, &BiTensor::unit(space.algebra(), space.d()), &fdq(p, j)?)?;
    Ok((lhs, rhs))
}

/// `(⟨∂_j*Ξ, ξ⟩_τ, ⟨Ξ, ∂_j ξ⟩_{η_j})`; needs `η_j` trace symmetric.
pub fn ibp_residual<T: Real>(space: &Arc<FockSpace<T>>, j: usize, xi_t: &BiTensor<T>, xi: &NCPoly<T>) -> Result<(C<T>, C<T>)> {
    let eta = space.eta(j)?;
    let scale = T::one() + eta.apply(&BElem::one(space.algebra())).max_abs();
    if !eta.check_trace_symmetry(T::epsilon() * T::lit(1e4) * scale) {
        return Err(Error::TraceSymmetryRequired { letter: j });
    }
    let lhs = space.inner_tau(&divergence(space, j, xi_t)?, xi)?;
    let rhs = space.inner_eta(j, xi_t, &fdq(xi, j)?)?;
    Ok((lhs, rhs))
}

/// Both sides of `‖P − E[P]‖_τ² ≤ Σ_j ‖∂_j P‖_{η_j}²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport<T> {
    pub lhs_sq: T,
    pub rhs_sq_by_letter: Vec<T>,
    pub gap: T,
}

impl<T: Real> PoincareReport<T> {
    pub fn rhs_sq(&self) -> T {
        self.rhs_sq_by_letter.iter().fold(T::zero(), |a, &x| a + x)
    }
}

pub fn poincare_report<T: Real>(space: &Arc<FockSpace<T>>, p: &NCPoly<T>) -> Result<PoincareReport<T>> {
    let mean = space.expect(p)?;
    let centered = p.checked_sub(&NCPoly::constant(space.algebra(), space.d(), mean))?;
    let lhs_sq = space.norm_sq_tau(&centered)?;
    let rhs_sq_by_letter = (0..space.d())
        .map(|j| {
            let dp = fdq(p, j)?;
            Ok(space.inner_eta(j, &dp, &dp)?.re)
        })
        .collect::<Result<Vec<T>>>()?;
    let total = rhs_sq_by_letter.iter().fold(T::zero(), |a, &x| a + x);
    Ok(PoincareReport { lhs_sq, rhs_sq_by_letter, gap: total - lhs_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balgebra::{BAlgebra, CPMap};
    use crate::chebyshev::{cheb, ChebProduct};
    use crate::random::{random_cheb_product, random_cheb_spec, random_elem, random_poly, random_star_closed, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, depth: usize) -> (Arc<FockSpace<f64>>, ChaCha8Rng) {
        let alg = BAlgebra::full(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let etas = (0..d).map(|_| random_star_closed(&alg, &mut rng, 2, 0.6)).collect();
        (FockSpace::new(&alg, etas, depth).unwrap(), rng)
    }

    fn c(x: f64) -> C<f64> {
        C::new(x, 0.0)
    }

    #[test]
    fn divergence_examples() {
        let (fs, mut rng) = setup(2, 4);
        let alg = fs.algebra().clone();
        let unit = BiTensor::unit(&alg, 2);
        let x1 = NCPoly::var(&alg, 2, 0).unwrap();
        assert!((&divergence(&fs, 0, &unit).unwrap() - &x1).is_zero(0.0));

        let b = random_elem(&alg, &mut rng, 1.0);
        let cc = random_elem(&alg, &mut rng, 1.0);
        let t = BiTensor::from_pairs(&alg, 2, vec![(Word::constant(b.clone()), Word::constant(cc.clone()))]).unwrap();
        let expect = NCPoly::from_word(&alg, 2, Word::new(vec![1], vec![b, cc]).unwrap()).unwrap();
        assert!((&divergence(&fs, 1, &t).unwrap() - &expect).is_zero(0.0));

        let one = NCPoly::one(&alg, 2);
        let t = BiTensor::tensor(&x1, &one).unwrap();
        let eta1 = NCPoly::constant(&alg, 2, fs.etas()[0].apply(&BElem::one(&alg)));
        let expect = &(&x1 * &x1) - &eta1;
        assert!((&divergence(&fs, 0, &t).unwrap() - &expect).is_zero(1e-14));
    }

    #[test]
    fn engines_agree() {
        let (fs, mut rng) = setup(2, 6);
        for _ in 0..10 {
            let t = random_tensor(fs.algebra(), 2, 2, 2, &mut rng, 0.7);
            let a = divergence_with(&fs, 0, &t, ExpectEngine::Fock).unwrap();
            let b = divergence_with(&fs, 0, &t, ExpectEngine::Oracle).unwrap();
            assert!((&a - &b).residual_norm() < 1e-12);
        }
    }

    #[test]
    fn pairing_examples() {
        let (fs, mut rng) = setup(1, 4);
        let alg = fs.algebra().clone();
        let unit = BiTensor::unit(&alg, 1);
        let eta = &fs.etas()[0];
        let one = BElem::one(&alg);
        let got = eta_pairing(&fs, 0, &unit, &unit).unwrap();
        assert!((&got - &NCPoly::constant(&alg, 1, eta.apply(&one))).is_zero(1e-15));

        let b: Vec<BElem<f64>> = (0..4).map(|_| random_elem(&alg, &mut rng, 1.0)).collect();
        let t1 = BiTensor::from_pairs(&alg, 1, vec![(Word::constant(b[0].clone()), Word::constant(b[1].clone()))]).unwrap();
        let t2 = BiTensor::from_pairs(&alg, 1, vec![(Word::constant(b[2].clone()), Word::constant(b[3].clone()))]).unwrap();
        let expect = &(&b[0] * &eta.apply(&(&b[1] * &b[2]))) * &b[3];
        let got = eta_pairing(&fs, 0, &t1, &t2).unwrap();
        assert!((&got - &NCPoly::constant(&alg, 1, expect)).is_zero(1e-13));

        let x = NCPoly::var(&alg, 1, 0).unwrap();
        let o = NCPoly::one(&alg, 1);
        let got = eta_pairing(&fs, 0, &BiTensor::tensor(&o, &x).unwrap(), &BiTensor::tensor(&x, &o).unwrap()).unwrap();
        let expect = NCPoly::constant(&alg, 1, eta.apply(&eta.apply(&one)));
        assert!((&got - &expect).is_zero(1e-14));
    }

    #[test]
    fn product_rules() {
        let (fs, mut rng) = setup(2, 8);
        let alg = fs.algebra().clone();
        let b = NCPoly::constant(&alg, 2, random_elem(&alg, &mut rng, 1.0));
        let t = random_tensor(&alg, 2, 2, 2, &mut rng, 0.7);
        let (l, r) = product_rule_residuals(&fs, 0, &b, &t).unwrap();
        assert!(l < 1e-13 && r < 1e-13);
        let x = NCPoly::var(&alg, 2, 0).unwrap();
        let (l, r) = product_rule_residuals(&fs, 0, &x, &BiTensor::unit(&alg, 2)).unwrap();
        assert!(l < 1e-14 && r < 1e-14);
        for _ in 0..10 {
            let a = random_poly(&alg, 2, 3, 2, &mut rng, 0.7);
            let t = random_tensor(&alg, 2, 2, 2, &mut rng, 0.7);
            let (l, r) = product_rule_residuals(&fs, 1, &a, &t).unwrap();
            assert!(l < 1e-10 && r < 1e-10, "{l} {r}");
        }
    }

    #[test]
    fn number_operator_on_chebyshev() {
        let (fs, mut rng) = setup(2, 6);
        let alg = fs.algebra().clone();
        for n in 1..=4 {
            let spec = random_cheb_spec(&alg, 1, n, &mut rng, 0.6);
            let u = cheb(&spec, fs.etas()).unwrap();
            let got = number_op(&fs, 1, &u).unwrap();
            assert!((&got - &u.scale(c(n as f64))).residual_norm() < 1e-10, "n = {n}");
        }
        let b = NCPoly::constant(&alg, 2, random_elem(&alg, &mut rng, 1.0));
        assert!(number_op(&fs, 0, &b).unwrap().terms().is_empty());
        let prod = random_cheb_product(&alg, 2, &[2, 1, 1], &mut rng, 0.6);
        let p = prod.poly(fs.etas()).unwrap();
        for j in 0..2 {
            let eig: usize = prod.factors().iter().filter(|f| f.letter() == j).map(|f| f.degree()).sum();
            let got = number_op(&fs, j, &p).unwrap();
            assert!((&got - &p.scale(c(eig as f64))).residual_norm() < 1e-10);
        }
    }

    #[test]
    fn stein_examples() {
        let (fs, mut rng) = setup(2, 6);
        let alg = fs.algebra().clone();
        let b = NCPoly::constant(&alg, 2, random_elem(&alg, &mut rng, 1.0));
        assert_eq!(stein_residual(&fs, 0, &b).unwrap(), (c(0.0), c(0.0)));
        let spec = random_cheb_spec(&alg, 0, 1, &mut rng, 1.0);
        let (bb, bp) = spec.pairs()[0].clone();
        let expect = (&fs.etas()[0].apply(&bb) * &bp).tau();
        let (l, r) = stein_residual(&fs, 0, &cheb(&spec, fs.etas()).unwrap()).unwrap();
        assert!((l - expect).norm() < 1e-13 && (r - expect).norm() < 1e-13);
        let prod = random_cheb_product(&alg, 2, &[1, 2], &mut rng, 0.7);
        let (l, r) = stein_residual(&fs, prod.letters()[0], &prod.poly(fs.etas()).unwrap()).unwrap();
        assert!(l.norm() < 1e-12 && r.norm() < 1e-12);
    }

    #[test]
    fn ibp_needs_symmetry() {
        let alg = BAlgebra::<f64>::full(2).unwrap();
        let mut a = crate::mat::CMat::zeros(2);
        a.set(0, 1, c(1.0));
        let nil = BElem::from_dense(&alg, &a).unwrap();
        let fs = FockSpace::new(&alg, vec![CPMap::new(&alg, vec![nil]).unwrap()], 4).unwrap();
        let unit = BiTensor::unit(&alg, 1);
        let one = NCPoly::one(&alg, 1);
        assert_eq!(ibp_residual(&fs, 0, &unit, &one).unwrap_err(), Error::TraceSymmetryRequired { letter: 0 });
    }

    #[test]
    fn ibp_random() {
        let (fs, mut rng) = setup(2, 8);
        for _ in 0..10 {
            let t = random_tensor(fs.algebra(), 2, 3, 2, &mut rng, 0.6);
            let xi = random_poly(fs.algebra(), 2, 3, 2, &mut rng, 0.6);
            let (l, r) = ibp_residual(&fs, 0, &t, &xi).unwrap();
            assert!((l - r).norm() < 1e-9, "{l} {r}");
        }
    }

    #[test]
    fn poincare_examples() {
        let (fs, mut rng) = setup(2, 6);
        let alg = fs.algebra().clone();
        let b = NCPoly::constant(&alg, 2, random_elem(&alg, &mut rng, 1.0));
        let rep = poincare_report(&fs, &b).unwrap();
        assert_eq!(rep.rhs_sq_by_letter, vec![0.0, 0.0]);
        assert!(rep.lhs_sq.abs() < 1e-15 && rep.gap.abs() < 1e-15);

        let spec = random_cheb_spec(&alg, 1, 1, &mut rng, 1.0);
        let rep = poincare_report(&fs, &cheb(&spec, fs.etas()).unwrap()).unwrap();
        assert!(rep.gap.abs() < 1e-12);

        let prod: ChebProduct<f64> = random_cheb_product(&alg, 2, &[2, 1], &mut rng, 0.7);
        let rep = poincare_report(&fs, &prod.poly(fs.etas()).unwrap()).unwrap();
        assert!((rep.rhs_sq() - 3.0 * rep.lhs_sq).abs() < 1e-9);

        for _ in 0..20 {
            let p = random_poly(&alg, 2, 4, 3, &mut rng, 0.7);
            assert!(poincare_report(&fs, &p).unwrap().gap >= -1e-9);
        }
    }
}
