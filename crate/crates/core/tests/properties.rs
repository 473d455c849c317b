mod common;

use common::{hermitian_eigenvalues, random_algebra, random_space, rng};
use opfree::amplify::amplify;
use opfree::amplify::amplified_cheb_block;
use opfree::calculus::stein_residual;
use opfree::chebyshev::graded_components;
use opfree::counterexample::build_ce_space;
use opfree::moments::{expect_oracle, nc2_enumerate};
use opfree::random::{
    random_cheb_product, random_cheb_spec, random_composition, random_elem, random_poly, random_star_closed, random_word,
};
use opfree::{
    cheb, cheb_decompose, cheb_decompose_single, fdq, make_texpr, BiTensor, ChebSpec, Complex, NCPoly, Poly, Word,
};
use proptest::prelude::*;
use rand::Rng;

fn c(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tau_is_faithful(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let b = random_elem(&alg, &mut r, 1.0);
        prop_assume!(b.max_abs() > 1e-3);
        prop_assert!((&b.adjoint() * &b).tau().re > 1e-14);
    }

    #[test]
    fn cp_maps_are_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let eta = random_star_closed(&alg, &mut r, 2, 0.8);
        let b = random_elem(&alg, &mut r, 1.0);
        let img = eta.apply(&(&b.adjoint() * &b));
        let min = hermitian_eigenvalues(&img).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-12, "{min}");
        prop_assert!(eta.check_trace_symmetry(1e-12));
    }

    #[test]
    fn fdq_is_a_derivation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let d = r.gen_range(1..=3);
        let j = r.gen_range(0..d);
        let p = random_poly(&alg, d, 2, 2, &mut r, 0.7);
        let q = random_poly(&alg, d, 2, 2, &mut r, 0.7);
        let lhs = fdq(&(&p * &q), j).unwrap();
        let rhs = fdq(&p, j).unwrap().rmul(&q).unwrap().add(&fdq(&q, j).unwrap().lmul(&p).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero(1e-10));
    }

    #[test]
    fn word_degrees_add(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let (m, n) = (r.gen_range(0..4), r.gen_range(0..4));
        let p = NCPoly::from_word(&alg, 2, random_word(&alg, 2, m, &mut r, 1.0)).unwrap();
        let q = NCPoly::from_word(&alg, 2, random_word(&alg, 2, n, &mut r, 1.0)).unwrap();
        prop_assert_eq!((&p * &q).degree(), m + n);
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let p = random_poly(&alg, 3, 4, 3, &mut r, 1.0);
        prop_assert!(p.adjoint().adjoint().terms() == p.terms());
    }

    #[test]
    fn fdq_commutes_with_scalars(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut r = rng(seed);
        let alg = random_algebra(&mut r);
        let p = random_poly(&alg, 2, 3, 3, &mut r, 0.7);
        let z = Complex::new(re, im);
        let lhs = fdq(&p.scale(z), 1).unwrap();
        let rhs = fdq(&p, 1).unwrap().scale(z);
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero(1e-12));
    }

    #[test]
    fn creation_and_annihilation_are_adjoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 5);
        let alg = fs.algebra().clone();
        let j = r.gen_range(0..2);
        let v = fs.word_vec(&random_word(&alg, 2, r.gen_range(0..4), &mut r, 0.8)).unwrap();
        let w = fs.word_vec(&random_word(&alg, 2, r.gen_range(1..5), &mut r, 0.8)).unwrap();
        let lhs = fs.fock_inner(&fs.create(j, &v).unwrap(), &w).unwrap();
        let rhs = fs.fock_inner(&v, &fs.annihilate(j, &w).unwrap()).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
    }

    #[test]
    fn tau_expect_is_tracial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 6);
        let alg = fs.algebra().clone();
        prop_assert!(fs.etas().iter().all(|e| e.check_trace_symmetry(1e-12)));
        let p = random_poly(&alg, 2, 3, 2, &mut r, 0.7);
        let q = random_poly(&alg, 2, 3, 2, &mut r, 0.7);
        let pq = fs.expect(&(&p * &q)).unwrap().tau();
        let qp = fs.expect(&(&q * &p)).unwrap().tau();
        prop_assert!((pq - qp).norm() < 1e-9);
    }

    #[test]
    fn gram_matrices_are_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 6);
        let alg = fs.algebra().clone();
        let vecs: Vec<_> = (0..4)
            .map(|_| fs.apply_poly(&random_poly(&alg, 2, 3, 2, &mut r, 0.7), &fs.vacuum()).unwrap())
            .collect();
        let gram = nalgebra::DMatrix::<Complex>::from_fn(4, 4, |i, k| fs.fock_inner(&vecs[i], &vecs[k]).unwrap().tau());
        let herm = (&gram + gram.adjoint()) * c(0.5);
        let scale = 1.0 + herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let min = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10 * scale, "{min}");
    }

    #[test]
    fn odd_moments_vanish(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 3, 5);
        let alg = fs.algebra().clone();
        let deg = 2 * r.gen_range(0..3) + 1;
        let p = NCPoly::from_word(&alg, 3, random_word(&alg, 3, deg, &mut r, 1.0)).unwrap();
        prop_assert!(expect_oracle(&p, fs.etas()).unwrap().is_exact_zero());
        prop_assert!(fs.expect(&p).unwrap().is_exact_zero());
    }

    #[test]
    fn centered_alternating_products_vanish(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 6);
        let alg = fs.algebra().clone();
        let k = r.gen_range(2..=3);
        let mut prod = Poly::one(&alg, 2);
        for f in 0..k {
            let j = f % 2;
            let words = (0..2).map(|_| {
                let deg = r.gen_range(1..=2);
                let coeffs = (0..=deg).map(|_| random_elem(&alg, &mut r, 0.7)).collect();
                Word::new(vec![j; deg], coeffs).unwrap()
            }).collect();
            let q = Poly::from_words(&alg, 2, words).unwrap();
            let centered = &q - &Poly::constant(&alg, 2, expect_oracle(&q, fs.etas()).unwrap());
            prod = &prod * &centered;
        }
        prop_assert!(expect_oracle(&prod, fs.etas()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn chebyshev_recursion(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 2);
        let alg = fs.algebra().clone();
        let n = r.gen_range(1..=6);
        let j = r.gen_range(0..2);
        let spec = random_cheb_spec(&alg, j, n, &mut r, 0.7);
        let p = spec.pairs();
        let sub = |from: usize| -> Poly {
            if from >= n { Poly::one(&alg, 2) } else { cheb(&ChebSpec::new(j, p[from..].to_vec()).unwrap(), fs.etas()).unwrap() }
        };
        let u1 = Poly::from_word(&alg, 2, Word::new(vec![j], vec![p[0].0.clone(), p[0].1.clone()]).unwrap()).unwrap();
        let mut expect = &u1 * &sub(1);
        if n >= 2 {
            let corr = &(&p[0].0 * &fs.etas()[j].apply(&(&p[0].1 * &p[1].0))) * &p[1].1;
            expect = &expect - &sub(2).lmul_b(&corr);
        }
        prop_assert!((&cheb(&spec, fs.etas()).unwrap() - &expect).is_zero(1e-12));
    }

    #[test]
    fn chebyshev_products_are_centered(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 3, 5);
        let degrees = random_composition(r.gen_range(1..=5), &mut r);
        let prod = random_cheb_product(fs.algebra(), 3, &degrees, &mut r, 0.7);
        prop_assert!(fs.expect(&prod.poly(fs.etas()).unwrap()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn decomposition_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.gen_range(1..=3);
        let fs = random_space(&mut r, d, 2);
        let p = random_poly(fs.algebra(), d, 5, 3, &mut r, 0.7);
        let dec = cheb_decompose(&p, fs.etas()).unwrap();
        prop_assert!((&dec.reconstruct(d, fs.etas()).unwrap() - &p).is_zero(1e-10));
    }

    #[test]
    fn single_letter_components_are_unique(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 1, 2);
        let p = random_poly(fs.algebra(), 1, 4, 3, &mut r, 0.7);
        let (s, specs) = cheb_decompose_single(&p, 0, fs.etas()).unwrap();
        let first = graded_components(&s, &specs, fs.etas()).unwrap();
        let rebuilt = first.iter().fold(Poly::zero(fs.algebra(), 1), |a, q| &a + q);
        let (s2, specs2) = cheb_decompose_single(&rebuilt, 0, fs.etas()).unwrap();
        let second = graded_components(&s2, &specs2, fs.etas()).unwrap();
        prop_assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(&second) {
            prop_assert!((a - b).is_zero(1e-10));
        }
    }

    #[test]
    fn stein_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 5);
        let p = random_poly(fs.algebra(), 2, 4, 3, &mut r, 0.7);
        let (l, rr) = stein_residual(&fs, r.gen_range(0..2), &p).unwrap();
        prop_assert!((l - rr).norm() < 1e-10);
    }

    #[test]
    fn block_chebyshev_amplification(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fs = random_space(&mut r, 2, 2);
        let blocks = r.gen_range(1..=3);
        let n = r.gen_range(1..=4);
        let j = r.gen_range(0..2);
        let specs: Vec<_> = (0..blocks).map(|_| random_cheb_spec(fs.algebra(), j, n, &mut r, 0.7)).collect();
        let ctx = amplify(fs.algebra(), fs.etas(), blocks).unwrap();
        prop_assert!(amplified_cheb_block(&ctx, &specs).unwrap() <= 1e-12);
    }
}

#[test]
fn catalan_counts() {
    let catalan = [1, 1, 2, 5, 14, 42, 132];
    for (m, &c) in catalan.iter().enumerate() {
        assert_eq!(nc2_enumerate(2 * m).len(), c);
    }
}

#[test]
fn amplified_expressions_are_valid() {
    let mut r = rng(5);
    let fs = random_space(&mut r, 2, 4);
    for _ in 0..5 {
        let p = random_poly(fs.algebra(), 2, 3, 3, &mut r, 0.7);
        let rep = opfree::amplify::embed_corner(&fs, &p).unwrap();
        let again = make_texpr(rep.texpr.scalar().clone(), rep.texpr.products().to_vec());
        assert!(again.is_ok());
    }
}

#[test]
fn remainder_projection_is_never_touched() {
    let s = build_ce_space::<f64>(30).unwrap();
    for n in [1, 7, 30] {
        assert_eq!(s.remainder_mass(n).unwrap(), 0.0);
    }
    let rows = s.ce_table(30).unwrap();
    assert!(rows.windows(2).all(|w| w[1].min_c > w[0].min_c));
}

#[test]
fn unit_tensor_is_fdq_of_the_variable() {
    let alg = opfree::Algebra::full(2).unwrap();
    let x = Poly::var(&alg, 2, 1).unwrap();
    assert!(fdq(&x, 1).unwrap().sub(&BiTensor::unit(&alg, 2)).unwrap().is_zero(0.0));
    assert!(fdq(&x, 0).unwrap().is_zero(0.0));
}
