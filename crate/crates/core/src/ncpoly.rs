//! Formal noncommutative polynomials `B⟨X_1,…,X_d⟩` with coefficients in a
//! finite-dimensional algebra, the tensor square `B⟨d⟩ ⊗ B⟨d⟩`, and the free
//! difference quotients `∂_j`.
//!
//! Polynomials are kept as plain sums of monomials `b_0 X_{i(1)} b_1 ⋯ X_{i(m)} b_m`.
//! Nothing is merged on construction; equality is decided by
//! [`NCPoly::residual_norm`], which expands every letter group into its dense
//! coefficient tensor in `B^{⊗(m+1)}`.
//!
//! Letters are 0-based in the API and 1-based in JSON.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::balgebra::{matrix_from_json, matrix_to_json, BAlgebra, BElem, MatrixJson};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Monomial `b_0 X_{i(1)} b_1 ⋯ X_{i(m)} b_m`.
#[derive(Debug, Clone)]
pub struct Word<T> {
    letters: Vec<usize>,
    coeffs: Vec<BElem<T>>,
}

impl<T: Real> PartialEq for Word<T> {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters && self.coeffs == other.coeffs
    }
}

impl<T: Real> Word<T> {
    pub fn new(letters: Vec<usize>, coeffs: Vec<BElem<T>>) -> Result<Self> {
        if coeffs.len() != letters.len() + 1 {
            return Err(Error::Parse(format!("{} letters need {} coefficients, got {}", letters.len(), letters.len() + 1, coeffs.len())));
        }
        if coeffs.windows(2).any(|w| !w[0].same_algebra(&w[1])) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Word { letters, coeffs })
    }

    pub fn constant(b: BElem<T>) -> Self {
        Word { letters: Vec::new(), coeffs: vec![b] }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn coeffs(&self) -> &[BElem<T>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        self.coeffs[0].algebra()
    }

    /// Concatenation; the touching coefficients are multiplied.
    pub fn concat(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + other.coeffs.len() - 1);
        coeffs.extend_from_slice(&self.coeffs[..self.coeffs.len() - 1]);
        coeffs.push(self.coeffs.last().unwrap() * &other.coeffs[0]);
        coeffs.extend_from_slice(&other.coeffs[1..]);
        Word { letters, coeffs }
    }

    /// `(b_0 X b_1 ⋯ X b_m)* = b_m* X ⋯ X b_0*`.
    pub fn adjoint(&self) -> Self {
        Word {
            letters: self.letters.iter().rev().copied().collect(),
            coeffs: self.coeffs.iter().rev().map(BElem::adjoint).collect(),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        let mut w = self.clone();
        w.coeffs[0] = w.coeffs[0].scale(c);
        w
    }

    pub fn lmul_b(&self, b: &BElem<T>) -> Self {
        let mut w = self.clone();
        w.coeffs[0] = b * &w.coeffs[0];
        w
    }

    pub fn rmul_b(&self, b: &BElem<T>) -> Self {
        let mut w = self.clone();
        let last = w.coeffs.len() - 1;
        w.coeffs[last] = &w.coeffs[last] * b;
        w
    }

    /// Splits at the letter in position `pos`: returns the prefix ending in
    /// `b_pos` and the suffix starting with `b_{pos+1}`.
    pub fn split_at_letter(&self, pos: usize) -> (Word<T>, Word<T>) {
        let left = Word { letters: self.letters[..pos].to_vec(), coeffs: self.coeffs[..=pos].to_vec() };
        let right = Word { letters: self.letters[pos + 1..].to_vec(), coeffs: self.coeffs[pos + 1..].to_vec() };
        (left, right)
    }

    /// Inserts `X_j` between two words.
    pub fn splice(left: &Word<T>, j: usize, right: &Word<T>) -> Word<T> {
        let mut letters = left.letters.clone();
        letters.push(j);
        letters.extend_from_slice(&right.letters);
        let mut coeffs = left.coeffs.clone();
        coeffs.extend_from_slice(&right.coeffs);
        Word { letters, coeffs }
    }

    fn has_zero_coeff(&self) -> bool {
        self.coeffs.iter().any(BElem::is_exact_zero)
    }

    /// Dense coefficient tensor `b_0 ⊗ ⋯ ⊗ b_m` in the matrix-unit basis.
    fn dense_coeffs(&self) -> Vec<C<T>> {
        kron_chain(self.coeffs.iter())
    }
}

pub(crate) fn kron_chain<'a, T: Real>(chain: impl Iterator<Item = &'a BElem<T>>) -> Vec<C<T>> {
    let mut acc = vec![C::<T>::one()];
    for b in chain {
        let v = b.coords();
        let mut next = Vec::with_capacity(acc.len() * v.len());
        for a in &acc {
            for x in &v {
                next.push(a * x);
            }
        }
        acc = next;
    }
    acc
}

pub(crate) fn accumulate<T: Real>(groups: &mut BTreeMap<Vec<usize>, Vec<C<T>>>, key: Vec<usize>, dense: Vec<C<T>>) {
    match groups.get_mut(&key) {
        Some(acc) => acc.iter_mut().zip(dense).for_each(|(a, x)| *a = *a + x),
        None => {
            groups.insert(key, dense);
        }
    }
}

pub(crate) fn max_abs_groups<T: Real>(groups: &BTreeMap<Vec<usize>, Vec<C<T>>>) -> T {
    groups.values().flatten().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Element of `B⟨X_1,…,X_d⟩`.
#[derive(Debug, Clone)]
pub struct NCPoly<T> {
    alg: Arc<BAlgebra<T>>,
    d: usize,
    terms: Vec<Word<T>>,
}

impl<T: Real> NCPoly<T> {
    pub fn zero(alg: &Arc<BAlgebra<T>>, d: usize) -> Self {
        NCPoly { alg: alg.clone(), d, terms: Vec::new() }
    }

    pub fn constant(alg: &Arc<BAlgebra<T>>, d: usize, b: BElem<T>) -> Self {
        assert!(Arc::ptr_eq(b.algebra(), alg) || **b.algebra() == **alg, "coefficient algebra mismatch");
        NCPoly { alg: alg.clone(), d, terms: vec![Word::constant(b)] }
    }

    pub fn one(alg: &Arc<BAlgebra<T>>, d: usize) -> Self {
        Self::constant(alg, d, BElem::one(alg))
    }

    /// The variable `X_j`.
    pub fn var(alg: &Arc<BAlgebra<T>>, d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::LetterOutOfRange { letter: j, d });
        }
        let one = BElem::one(alg);
        Ok(NCPoly { alg: alg.clone(), d, terms: vec![Word { letters: vec![j], coeffs: vec![one.clone(), one] }] })
    }

    pub fn from_words(alg: &Arc<BAlgebra<T>>, d: usize, words: Vec<Word<T>>) -> Result<Self> {
        for w in &words {
            if !(Arc::ptr_eq(w.algebra(), alg) || **w.algebra() == **alg) {
                return Err(Error::AlgebraMismatch);
            }
            if let Some(&letter) = w.letters.iter().find(|&&l| l >= d) {
                return Err(Error::LetterOutOfRange { letter, d });
            }
        }
        Ok(NCPoly { alg: alg.clone(), d, terms: words })
    }

    pub fn from_word(alg: &Arc<BAlgebra<T>>, d: usize, word: Word<T>) -> Result<Self> {
        Self::from_words(alg, d, vec![word])
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[Word<T>] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Word::degree).max().unwrap_or(0)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if !(Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg) {
            return Err(Error::AlgebraMismatch);
        }
        if self.d != other.d {
            return Err(Error::VariableCountMismatch { left: self.d, right: other.d });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(NCPoly { alg: self.alg.clone(), d: self.d, terms })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(-C::<T>::one()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.concat(b));
            }
        }
        Ok(NCPoly { alg: self.alg.clone(), d: self.d, terms })
    }

    pub fn scale(&self, c: C<T>) -> Self {
        NCPoly { alg: self.alg.clone(), d: self.d, terms: self.terms.iter().map(|w| w.scale(c)).collect() }
    }

    /// The involution fixing every `X_j`.
    pub fn adjoint(&self) -> Self {
        NCPoly { alg: self.alg.clone(), d: self.d, terms: self.terms.iter().map(Word::adjoint).collect() }
    }

    pub fn lmul_b(&self, b: &BElem<T>) -> Self {
        NCPoly { alg: self.alg.clone(), d: self.d, terms: self.terms.iter().map(|w| w.lmul_b(b)).collect() }
    }

    pub fn rmul_b(&self, b: &BElem<T>) -> Self {
        NCPoly { alg: self.alg.clone(), d: self.d, terms: self.terms.iter().map(|w| w.rmul_b(b)).collect() }
    }

    /// Largest entry of the dense coefficient tensors after grouping terms by
    /// letter sequence. Zero exactly when the polynomial is zero.
    pub fn residual_norm(&self) -> T {
        max_abs_groups(&self.dense_groups())
    }

    pub fn is_zero(&self, tol: T) -> bool {
        self.residual_norm() <= tol
    }

    fn dense_groups(&self) -> BTreeMap<Vec<usize>, Vec<C<T>>> {
        let mut groups = BTreeMap::new();
        for w in self.terms.iter().filter(|w| !w.has_zero_coeff()) {
            accumulate(&mut groups, w.letters.clone(), w.dense_coeffs());
        }
        groups
    }

    /// Drops words with a zero coefficient and letter groups that cancel to
    /// within `tol`.
    pub fn canonicalize(&self, tol: T) -> Self {
        let groups = self.dense_groups();
        let terms = self
            .terms
            .iter()
            .filter(|w| !w.has_zero_coeff())
            .filter(|w| groups.get(&w.letters).is_some_and(|g| g.iter().any(|z| z.norm() > tol)))
            .cloned()
            .collect();
        NCPoly { alg: self.alg.clone(), d: self.d, terms }
    }

    /// Keeps the words of exactly the given degree.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        NCPoly {
            alg: self.alg.clone(),
            d: self.d,
            terms: self.terms.iter().filter(|w| w.degree() == degree).cloned().collect(),
        }
    }

    pub fn to_json(&self) -> Vec<WordJson> {
        self.terms
            .iter()
            .map(|w| WordJson {
                letters: w.letters.iter().map(|l| l + 1).collect(),
                coeffs: w.coeffs.iter().map(|b| matrix_to_json(&b.to_dense())).collect(),
            })
            .collect()
    }

    pub fn from_json(alg: &Arc<BAlgebra<T>>, d: usize, words: &[WordJson]) -> Result<Self> {
        let words = words
            .iter()
            .map(|w| {
                if w.letters.contains(&0) {
                    return Err(Error::Parse("letters are numbered from 1".into()));
                }
                let coeffs = w
                    .coeffs
                    .iter()
                    .map(|m| BElem::from_dense(alg, &matrix_from_json(m)?))
                    .collect::<Result<Vec<_>>>()?;
                Word::new(w.letters.iter().map(|l| l - 1).collect(), coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(alg, d, words)
    }
}

impl<'a, T: Real> Add<&'a NCPoly<T>> for &'a NCPoly<T> {
    type Output = NCPoly<T>;
    fn add(self, rhs: &'a NCPoly<T>) -> NCPoly<T> {
        self.checked_add(rhs).expect("incompatible polynomials")
    }
}

impl<'a, T: Real> Sub<&'a NCPoly<T>> for &'a NCPoly<T> {
    type Output = NCPoly<T>;
    fn sub(self, rhs: &'a NCPoly<T>) -> NCPoly<T> {
        self.checked_sub(rhs).expect("incompatible polynomials")
    }
}

impl<'a, T: Real> Mul<&'a NCPoly<T>> for &'a NCPoly<T> {
    type Output = NCPoly<T>;
    fn mul(self, rhs: &'a NCPoly<T>) -> NCPoly<T> {
        self.checked_mul(rhs).expect("incompatible polynomials")
    }
}

impl<T: Real> Neg for &NCPoly<T> {
    type Output = NCPoly<T>;
    fn neg(self) -> NCPoly<T> {
        self.scale(-C::<T>::one())
    }
}

/// JSON form of one monomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordJson {
    pub letters: Vec<usize>,
    pub coeffs: Vec<MatrixJson>,
}

/// Element of `B⟨d⟩ ⊗ B⟨d⟩`, stored as a sum of simple tensors of words.
#[derive(Debug, Clone)]
pub struct BiTensor<T> {
    alg: Arc<BAlgebra<T>>,
    d: usize,
    pairs: Vec<(Word<T>, Word<T>)>,
}

impl<T: Real> BiTensor<T> {
    pub fn zero(alg: &Arc<BAlgebra<T>>, d: usize) -> Self {
        BiTensor { alg: alg.clone(), d, pairs: Vec::new() }
    }

    /// `1 ⊗ 1`.
    pub fn unit(alg: &Arc<BAlgebra<T>>, d: usize) -> Self {
        let one = BElem::one(alg);
        BiTensor { alg: alg.clone(), d, pairs: vec![(Word::constant(one.clone()), Word::constant(one))] }
    }

    pub fn from_pairs(alg: &Arc<BAlgebra<T>>, d: usize, pairs: Vec<(Word<T>, Word<T>)>) -> Result<Self> {
        for (l, r) in &pairs {
            for w in [l, r] {
                if !(Arc::ptr_eq(w.algebra(), alg) || **w.algebra() == **alg) {
                    return Err(Error::AlgebraMismatch);
                }
                if let Some(&letter) = w.letters.iter().find(|&&x| x >= d) {
                    return Err(Error::LetterOutOfRange { letter, d });
                }
            }
        }
        Ok(BiTensor { alg: alg.clone(), d, pairs })
    }

    /// `p ⊗ q` for polynomials, expanded over their words.
    pub fn tensor(p: &NCPoly<T>, q: &NCPoly<T>) -> Result<Self> {
        p.compatible(q)?;
        let pairs = p.terms.iter().flat_map(|a| q.terms.iter().map(move |b| (a.clone(), b.clone()))).collect();
        Ok(BiTensor { alg: p.alg.clone(), d: p.d, pairs })
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(Word<T>, Word<T>)] {
        &self.pairs
    }

    /// Largest degree of either leg.
    pub fn leg_degree(&self) -> usize {
        self.pairs.iter().map(|(l, r)| l.degree().max(r.degree())).max().unwrap_or(0)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if !(Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg) {
            return Err(Error::AlgebraMismatch);
        }
        if self.d != other.d {
            return Err(Error::VariableCountMismatch { left: self.d, right: other.d });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        Ok(BiTensor { alg: self.alg.clone(), d: self.d, pairs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-C::<T>::one()))
    }

    pub fn scale(&self, c: C<T>) -> Self {
        BiTensor { alg: self.alg.clone(), d: self.d, pairs: self.pairs.iter().map(|(l, r)| (l.scale(c), r.clone())).collect() }
    }

    /// `(p ⊗ 1) · Ξ`.
    pub fn lmul(&self, p: &NCPoly<T>) -> Result<Self> {
        self.compatible(&BiTensor::zero(&p.alg, p.d))?;
        let pairs = p
            .terms
            .iter()
            .flat_map(|a| self.pairs.iter().map(move |(l, r)| (a.concat(l), r.clone())))
            .collect();
        Ok(BiTensor { alg: self.alg.clone(), d: self.d, pairs })
    }

    /// `Ξ · (1 ⊗ p)`.
    pub fn rmul(&self, p: &NCPoly<T>) -> Result<Self> {
        self.compatible(&BiTensor::zero(&p.alg, p.d))?;
        let pairs = self
            .pairs
            .iter()
            .flat_map(|(l, r)| p.terms.iter().map(move |a| (l.clone(), r.concat(a))))
            .collect();
        Ok(BiTensor { alg: self.alg.clone(), d: self.d, pairs })
    }

    /// `(p ⊗ q)* = q* ⊗ p*`.
    pub fn adjoint(&self) -> Self {
        BiTensor { alg: self.alg.clone(), d: self.d, pairs: self.pairs.iter().map(|(l, r)| (r.adjoint(), l.adjoint())).collect() }
    }

    pub fn residual_norm(&self) -> T {
        let mut groups = BTreeMap::new();
        for (l, r) in self.pairs.iter().filter(|(l, r)| !l.has_zero_coeff() && !r.has_zero_coeff()) {
            // the separator keeps (ab, c) and (a, bc) apart
            let mut key = l.letters.clone();
            key.push(usize::MAX);
            key.extend_from_slice(&r.letters);
            accumulate(&mut groups, key, kron_chain(l.coeffs.iter().chain(r.coeffs.iter())));
        }
        max_abs_groups(&groups)
    }

    pub fn is_zero(&self, tol: T) -> bool {
        self.residual_norm() <= tol
    }
}

/// Free difference quotient `∂_j`.
pub fn fdq<T: Real>(p: &NCPoly<T>, j: usize) -> Result<BiTensor<T>> {
    if j >= p.d {
        return Err(Error::LetterOutOfRange { letter: j, d: p.d });
    }
    let mut pairs = Vec::new();
    for w in &p.terms {
        for (pos, &l) in w.letters.iter().enumerate() {
            if l == j {
                pairs.push(w.split_at_letter(pos));
            }
        }
    }
    Ok(BiTensor { alg: p.alg.clone(), d: p.d, pairs })
}

/// `m_{X_j}(ξ_1 ⊗ ξ_2) = ξ_1 X_j ξ_2`.
pub fn mul_x<T: Real>(j: usize, t: &BiTensor<T>) -> Result<NCPoly<T>> {
    if j >= t.d {
        return Err(Error::LetterOutOfRange { letter: j, d: t.d });
    }
    let terms = t.pairs.iter().map(|(l, r)| Word::splice(l, j, r)).collect();
    Ok(NCPoly { alg: t.alg.clone(), d: t.d, terms })
}
