//! The B-valued Chebyshev family `U_n^η`, its free difference quotient, and
//! the decomposition of polynomials into alternating Chebyshev products.
//!
//! `U_n` is given symbolically by its coefficient pairs
//! `(b_1,b_1'),…,(b_n,b_n')` and expanded only on demand:
//!
//! ```text
//! U_0 = 1,  U_1(b;b') = b X b',
//! U_n(p_1,…,p_n) = U_1(p_1) U_{n−1}(p_2,…) − b_1 η(b_1' b_2) b_2' U_{n−2}(p_3,…).
//! ```
//!
//! `U_n` is left linear in `b_1` and right linear in `b_n'`; the decomposition
//! routines use this to absorb coefficients of `B` into the outer factors.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::balgebra::{BAlgebra, BElem, CPMap};
use crate::error::{Error, Result};
use crate::ncpoly::{BiTensor, NCPoly, Word};
use crate::scalar::Real;

type Pair<T> = (BElem<T>, BElem<T>);

/// `U_n^{η_j}(b_1,b_1';…;b_n,b_n')(X_j)`.
#[derive(Debug, Clone)]
pub struct ChebSpec<T> {
    letter: usize,
    pairs: Vec<Pair<T>>,
}

impl<T: Real> PartialEq for ChebSpec<T> {
    fn eq(&self, other: &Self) -> bool {
        self.letter == other.letter && self.pairs == other.pairs
    }
}

impl<T: Real> ChebSpec<T> {
    pub fn new(letter: usize, pairs: Vec<Pair<T>>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyPairs);
        }
        let first = &pairs[0].0;
        if pairs.iter().any(|(b, c)| !b.same_algebra(first) || !c.same_algebra(first)) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(ChebSpec { letter, pairs })
    }

    pub fn letter(&self) -> usize {
        self.letter
    }

    pub fn pairs(&self) -> &[Pair<T>] {
        &self.pairs
    }

    pub fn degree(&self) -> usize {
        self.pairs.len()
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        self.pairs[0].0.algebra()
    }

    /// `b·U_n(b_1,…) = U_n(b b_1,…)`.
    pub fn lmul_b(&self, b: &BElem<T>) -> Self {
        let mut s = self.clone();
        s.pairs[0].0 = b * &s.pairs[0].0;
        s
    }

    /// `U_n(…,b_n')·b = U_n(…,b_n' b)`.
    pub fn rmul_b(&self, b: &BElem<T>) -> Self {
        let mut s = self.clone();
        let last = s.pairs.len() - 1;
        s.pairs[last].1 = &s.pairs[last].1 * b;
        s
    }
}

fn family<T: Real>(etas: &[CPMap<T>], letter: usize) -> Result<(&Arc<BAlgebra<T>>, &CPMap<T>)> {
    let eta = etas.get(letter).ok_or(Error::LetterOutOfRange { letter, d: etas.len() })?;
    Ok((eta.algebra(), eta))
}

/// Expands `U_n` for an arbitrary (possibly empty) pair list.
fn u_poly<T: Real>(alg: &Arc<BAlgebra<T>>, d: usize, j: usize, eta: &CPMap<T>, pairs: &[Pair<T>]) -> NCPoly<T> {
    let n = pairs.len();
    // suffix polynomials U(p_k,…,p_n), built from the right
    let mut after_next = NCPoly::zero(alg, d);
    let mut next = NCPoly::one(alg, d);
    for k in (0..n).rev() {
        let (b, bp) = &pairs[k];
        let u1 = NCPoly::from_word(alg, d, Word::new(vec![j], vec![b.clone(), bp.clone()]).expect("arity"))
            .expect("letter checked by caller");
        let mut cur = &u1 * &next;
        if k + 1 < n {
            let (c, cp) = &pairs[k + 1];
            let corr = &(b * &eta.apply(&(bp * c))) * cp;
            cur = &cur - &after_next.lmul_b(&corr);
        }
        after_next = next;
        next = cur;
    }
    next
}

/// The polynomial `U_n^{η_j}` described by `spec`.
pub fn cheb<T: Real>(spec: &ChebSpec<T>, etas: &[CPMap<T>]) -> Result<NCPoly<T>> {
    let (alg, eta) = family(etas, spec.letter)?;
    Ok(u_poly(alg, etas.len(), spec.letter, eta, &spec.pairs))
}

/// `∂_j U_n` from the closed formula, without differentiating the expansion.
pub fn cheb_fdq<T: Real>(spec: &ChebSpec<T>, etas: &[CPMap<T>]) -> Result<BiTensor<T>> {
    let (alg, eta) = family(etas, spec.letter)?;
    let d = etas.len();
    let j = spec.letter;
    let p = &spec.pairs;
    let n = p.len();
    let u = |pairs: &[Pair<T>]| u_poly(alg, d, j, eta, pairs);
    let konst = |b: &BElem<T>| NCPoly::constant(alg, d, b.clone());
    if n == 1 {
        return BiTensor::tensor(&konst(&p[0].0), &konst(&p[0].1));
    }
    // b_1 ⊗ U_{n−1}(b_1'b_2, b_2'; p_3, …)
    let mut right = p[1..].to_vec();
    right[0].0 = &p[0].1 * &p[1].0;
    let mut out = BiTensor::tensor(&konst(&p[0].0), &u(&right))?;
    // U_{k−1}(…; b_{k−1}, b_{k−1}'b_k) ⊗ U_{n−k}(b_k'b_{k+1}, b_{k+1}'; …), 1-based k
    for k in 2..n {
        let mut left = p[..k - 1].to_vec();
        left[k - 2].1 = &p[k - 2].1 * &p[k - 1].0;
        let mut right = p[k..].to_vec();
        right[0].0 = &p[k - 1].1 * &p[k].0;
        out = out.add(&BiTensor::tensor(&u(&left), &u(&right))?)?;
    }
    // U_{n−1}(…; b_{n−1}, b_{n−1}'b_n) ⊗ b_n'
    let mut left = p[..n - 1].to_vec();
    left[n - 2].1 = &p[n - 2].1 * &p[n - 1].0;
    out.add(&BiTensor::tensor(&u(&left), &konst(&p[n - 1].1))?)
}

/// Alternating product `U_{n(1)}^{η_{i(1)}} ⋯ U_{n(k)}^{η_{i(k)}}`.
#[derive(Debug, Clone)]
pub struct ChebProduct<T> {
    factors: Vec<ChebSpec<T>>,
}

impl<T: Real> PartialEq for ChebProduct<T> {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
    }
}

/// `(k, ℓ, n, i)`: total degree, factor count, degree and letter vectors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub k: usize,
    pub l: usize,
    pub n: Vec<usize>,
    pub i: Vec<usize>,
}

impl<T: Real> ChebProduct<T> {
    pub fn new(factors: Vec<ChebSpec<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ShapeMismatch("a Chebyshev product needs at least one factor".into()));
        }
        if let Some(w) = factors.windows(2).find(|w| w[0].letter == w[1].letter) {
            return Err(Error::NotAlternating { letter: w[0].letter });
        }
        if factors.windows(2).any(|w| !Arc::ptr_eq(w[0].algebra(), w[1].algebra()) && **w[0].algebra() != **w[1].algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(ChebProduct { factors })
    }

    pub fn factors(&self) -> &[ChebSpec<T>] {
        &self.factors
    }

    pub fn letters(&self) -> Vec<usize> {
        self.factors.iter().map(ChebSpec::letter).collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.factors.iter().map(ChebSpec::degree).collect()
    }

    pub fn total_degree(&self) -> usize {
        self.factors.iter().map(ChebSpec::degree).sum()
    }

    pub fn signature(&self) -> Signature {
        Signature { k: self.total_degree(), l: self.factors.len(), n: self.degrees(), i: self.letters() }
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        self.factors[0].algebra()
    }

    pub fn lmul_b(&self, b: &BElem<T>) -> Self {
        let mut out = self.clone();
        out.factors[0] = out.factors[0].lmul_b(b);
        out
    }

    pub fn rmul_b(&self, b: &BElem<T>) -> Self {
        let mut out = self.clone();
        let last = out.factors.len() - 1;
        out.factors[last] = out.factors[last].rmul_b(b);
        out
    }

    pub fn poly(&self, etas: &[CPMap<T>]) -> Result<NCPoly<T>> {
        let mut acc = cheb(&self.factors[0], etas)?;
        for f in &self.factors[1..] {
            acc = acc.checked_mul(&cheb(f, etas)?)?;
        }
        Ok(acc)
    }

    /// The plain monomial `(b_1 X b_1')(b_2 X b_2')⋯` across all factors.
    pub fn leading_word(&self) -> Word<T> {
        let mut w: Option<Word<T>> = None;
        for f in &self.factors {
            for (b, bp) in &f.pairs {
                let u1 = Word::new(vec![f.letter], vec![b.clone(), bp.clone()]).expect("arity");
                w = Some(match w {
                    None => u1,
                    Some(prev) => prev.concat(&u1),
                });
            }
        }
        w.expect("nonempty product")
    }
}

/// `scalar + Σ products`, with repeated signatures allowed.
#[derive(Debug, Clone)]
pub struct Decomp<T> {
    pub scalar: BElem<T>,
    pub products: Vec<ChebProduct<T>>,
}

impl<T: Real> Decomp<T> {
    fn scalar_only(b: BElem<T>) -> Self {
        Decomp { scalar: b, products: Vec::new() }
    }

    fn extend(&mut self, other: Decomp<T>) {
        self.scalar = &self.scalar + &other.scalar;
        self.products.extend(other.products);
    }

    pub fn reconstruct(&self, d: usize, etas: &[CPMap<T>]) -> Result<NCPoly<T>> {
        let alg = self.scalar.algebra();
        let mut acc = NCPoly::constant(alg, d, self.scalar.clone());
        for p in &self.products {
            acc = acc.checked_add(&p.poly(etas)?)?;
        }
        Ok(acc)
    }
}

/// Chebyshev expansion of one single-letter word `b_0 X b_1 ⋯ X b_m`.
///
/// Factors `(b_0,b_1),(1,b_2),…,(1,b_m)` are multiplied in from the right
/// using `U_1(c;c') U_n(q) = U_{n+1}((c,c'),q) + c η(c' q_1) q_1' U_{n−1}(q_2,…)`.
fn decompose_run<T: Real>(w: &Word<T>, eta: &CPMap<T>) -> (BElem<T>, Vec<Vec<Pair<T>>>) {
    let coeffs = w.coeffs();
    let m = w.degree();
    if m == 0 {
        return (coeffs[0].clone(), Vec::new());
    }
    let alg = coeffs[0].algebra();
    let one = BElem::one(alg);
    let mut scalar = one.clone();
    let mut specs: Vec<Vec<Pair<T>>> = Vec::new();
    for f in (0..m).rev() {
        let c = if f == 0 { coeffs[0].clone() } else { one.clone() };
        let cp = &coeffs[f + 1];
        let mut next_scalar = BElem::zero(alg);
        let mut next_specs = Vec::with_capacity(2 * specs.len() + 1);
        if !scalar.is_exact_zero() {
            next_specs.push(vec![(c.clone(), cp * &scalar)]);
        }
        for q in specs {
            let corr = &(&c * &eta.apply(&(cp * &q[0].0))) * &q[0].1;
            if q.len() == 1 {
                next_scalar = &next_scalar + &corr;
            } else {
                let mut lower = q[1..].to_vec();
                lower[0].0 = &corr * &lower[0].0;
                next_specs.push(lower);
            }
            let mut raised = Vec::with_capacity(q.len() + 1);
            raised.push((c.clone(), cp.clone()));
            raised.extend(q);
            next_specs.push(raised);
        }
        scalar = next_scalar;
        specs = next_specs;
    }
    (scalar, specs)
}

/// Decomposes `p ∈ B⟨X_j⟩` as `b + Σ U_{n}(…)`; exact, with one entry per
/// generated Chebyshev term.
pub fn cheb_decompose_single<T: Real>(p: &NCPoly<T>, j: usize, etas: &[CPMap<T>]) -> Result<(BElem<T>, Vec<ChebSpec<T>>)> {
    let (_, eta) = family(etas, j)?;
    if p.terms().iter().any(|w| w.letters().iter().any(|&l| l != j)) {
        return Err(Error::MixedLetters { letter: j });
    }
    let mut scalar = BElem::zero(p.algebra());
    let mut specs = Vec::new();
    for w in p.terms() {
        let (s, ss) = decompose_run(w, eta);
        scalar = &scalar + &s;
        for pairs in ss {
            specs.push(ChebSpec::new(j, pairs)?);
        }
    }
    Ok((scalar, specs))
}

/// Degree-graded components `C_0, C_1, …` of a single-letter decomposition.
pub fn graded_components<T: Real>(scalar: &BElem<T>, specs: &[ChebSpec<T>], etas: &[CPMap<T>]) -> Result<Vec<NCPoly<T>>> {
    let d = etas.len();
    let alg = scalar.algebra();
    let top = specs.iter().map(ChebSpec::degree).max().unwrap_or(0);
    let mut out = vec![NCPoly::zero(alg, d); top + 1];
    out[0] = NCPoly::constant(alg, d, scalar.clone());
    for s in specs {
        out[s.degree()] = out[s.degree()].checked_add(&cheb(s, etas)?)?;
    }
    Ok(out)
}

fn single<T: Real>(spec: ChebSpec<T>) -> ChebProduct<T> {
    ChebProduct { factors: vec![spec] }
}

/// `P·Q` for alternating products, re-expanding the boundary when the
/// touching factors share a letter.
fn mul_products<T: Real>(p: &ChebProduct<T>, q: &ChebProduct<T>, etas: &[CPMap<T>]) -> Result<Decomp<T>> {
    let f = p.factors.last().expect("nonempty");
    let g = &q.factors[0];
    let alg = f.algebra();
    if f.letter != g.letter {
        let mut factors = p.factors.clone();
        factors.extend_from_slice(&q.factors);
        return Ok(Decomp { scalar: BElem::zero(alg), products: vec![ChebProduct { factors }] });
    }
    let boundary = cheb(f, etas)?.checked_mul(&cheb(g, etas)?)?;
    let (t, hs) = cheb_decompose_single(&boundary, f.letter, etas)?;
    let init = &p.factors[..p.factors.len() - 1];
    let tail = &q.factors[1..];
    let mut out = Decomp::scalar_only(BElem::zero(alg));
    for h in hs {
        let mut factors = init.to_vec();
        factors.push(h);
        factors.extend_from_slice(tail);
        out.products.push(ChebProduct { factors });
    }
    if t.is_exact_zero() {
        return Ok(out);
    }
    match (init.is_empty(), tail.is_empty()) {
        (true, true) => out.scalar = t,
        (true, false) => out.products.push(ChebProduct { factors: tail.to_vec() }.lmul_b(&t)),
        (false, true) => out.products.push(ChebProduct { factors: init.to_vec() }.rmul_b(&t)),
        (false, false) => {
            let left = ChebProduct { factors: init.to_vec() }.rmul_b(&t);
            out.extend(mul_products(&left, &ChebProduct { factors: tail.to_vec() }, etas)?);
        }
    }
    Ok(out)
}

fn mul_decomps<T: Real>(a: &Decomp<T>, b: &Decomp<T>, etas: &[CPMap<T>]) -> Result<Decomp<T>> {
    let mut out = Decomp::scalar_only(&a.scalar * &b.scalar);
    if !a.scalar.is_exact_zero() {
        out.products.extend(b.products.iter().map(|q| q.lmul_b(&a.scalar)));
    }
    if !b.scalar.is_exact_zero() {
        out.products.extend(a.products.iter().map(|p| p.rmul_b(&b.scalar)));
    }
    for p in &a.products {
        for q in &b.products {
            out.extend(mul_products(p, q, etas)?);
        }
    }
    Ok(out)
}

fn decompose_word<T: Real>(w: &Word<T>, etas: &[CPMap<T>]) -> Result<Decomp<T>> {
    let letters = w.letters();
    let coeffs = w.coeffs();
    if letters.is_empty() {
        return Ok(Decomp::scalar_only(coeffs[0].clone()));
    }
    let one = BElem::one(coeffs[0].algebra());
    let mut acc: Option<Decomp<T>> = None;
    let mut s = 0;
    while s < letters.len() {
        let j = letters[s];
        let e = (s..letters.len()).find(|&x| letters[x] != j).unwrap_or(letters.len());
        let mut run_coeffs = Vec::with_capacity(e - s + 1);
        run_coeffs.push(if s == 0 { coeffs[0].clone() } else { one.clone() });
        run_coeffs.extend_from_slice(&coeffs[s + 1..=e]);
        let run = Word::new(vec![j; e - s], run_coeffs)?;
        let (_, eta) = family(etas, j)?;
        let (scalar, specs) = decompose_run(&run, eta);
        let products = specs.into_iter().map(|pairs| single(ChebSpec { letter: j, pairs })).collect();
        let piece = Decomp { scalar, products };
        acc = Some(match acc {
            None => piece,
            Some(prev) => mul_decomps(&prev, &piece, etas)?,
        });
        s = e;
    }
    Ok(acc.expect("at least one run"))
}

/// Writes `p` as `b + Σ` alternating Chebyshev products, word by word.
pub fn cheb_decompose<T: Real>(p: &NCPoly<T>, etas: &[CPMap<T>]) -> Result<Decomp<T>> {
    if p.d() != etas.len() {
        return Err(Error::VariableCountMismatch { left: p.d(), right: etas.len() });
    }
    let mut out = Decomp::scalar_only(BElem::zero(p.algebra()));
    for w in p.terms() {
        out.extend(decompose_word(w, etas)?);
    }
    Ok(out)
}

/// A Chebyshev expression in which no signature repeats.
#[derive(Debug, Clone)]
pub struct TExpr<T> {
    scalar: BElem<T>,
    products: Vec<ChebProduct<T>>,
    signatures: Vec<Signature>,
}

impl<T: Real> TExpr<T> {
    pub fn scalar(&self) -> &BElem<T> {
        &self.scalar
    }

    pub fn products(&self) -> &[ChebProduct<T>] {
        &self.products
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn poly(&self, d: usize, etas: &[CPMap<T>]) -> Result<NCPoly<T>> {
        Decomp { scalar: self.scalar.clone(), products: self.products.clone() }.reconstruct(d, etas)
    }
}

/// Accepts the expression only if every `(k, ℓ, n, i)` occurs at most once.
pub fn make_texpr<T: Real>(scalar: BElem<T>, products: Vec<ChebProduct<T>>) -> Result<TExpr<T>> {
    let mut seen = BTreeSet::new();
    let mut signatures = Vec::with_capacity(products.len());
    for p in &products {
        if **p.algebra() != **scalar.algebra() {
            return Err(Error::AlgebraMismatch);
        }
        let sig = p.signature();
        if !seen.insert(sig.clone()) {
            return Err(Error::DuplicateSignature { k: sig.k, l: sig.l, n: sig.n, i: sig.i });
        }
        signatures.push(sig);
    }
    Ok(TExpr { scalar, products, signatures })
}
