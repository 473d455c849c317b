//! Truncated algebraic full Fock space over `B` and the semicircular system
//! `S_j = ℓ_j + ℓ_j*` acting on it.
//!
//! A vector is a finite sum of simple tensors `b_0 X_{i(1)} b_1 ⋯ X_{i(m)} b_m`
//! grouped by letter sequence. The space is graded by word length, so a
//! computation of total degree `D` never leaves the levels `≤ D`; every
//! operation that could climb above `depth` fails instead of truncating.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::balgebra::{BAlgebra, BElem, CPMap};
use crate::error::{Error, Result};
use crate::ncpoly::{accumulate, kron_chain, max_abs_groups, BiTensor, NCPoly, Word};
use crate::scalar::{Real, C};

/// Fock space for `d` letters with covariances `η_1,…,η_d`.
#[derive(Debug, Clone)]
pub struct FockSpace<T> {
    alg: Arc<BAlgebra<T>>,
    etas: Vec<CPMap<T>>,
    depth: usize,
}

/// Sum of simple tensors keyed by letter sequence.
#[derive(Debug, Clone)]
pub struct FockVec<T> {
    space: Arc<FockSpace<T>>,
    comps: BTreeMap<Vec<usize>, Vec<Vec<BElem<T>>>>,
}

impl<T: Real> FockSpace<T> {
    /// One variable per variance map.
    pub fn new(alg: &Arc<BAlgebra<T>>, etas: Vec<CPMap<T>>, depth: usize) -> Result<Arc<Self>> {
        if etas.is_empty() {
            return Err(Error::MalformedAlgebra("Fock space needs at least one variance map".into()));
        }
        if etas.iter().any(|e| !(Arc::ptr_eq(e.algebra(), alg) || **e.algebra() == **alg)) {
            return Err(Error::AlgebraMismatch);
        }
        if depth == 0 {
            return Err(Error::DepthExceeded { needed: 1, depth });
        }
        Ok(Arc::new(FockSpace { alg: alg.clone(), etas, depth }))
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn d(&self) -> usize {
        self.etas.len()
    }

    pub fn etas(&self) -> &[CPMap<T>] {
        &self.etas
    }

    pub fn eta(&self, j: usize) -> Result<&CPMap<T>> {
        self.etas.get(j).ok_or(Error::LetterOutOfRange { letter: j, d: self.d() })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Same algebra, variance maps and a different truncation.
    pub fn with_depth(&self, depth: usize) -> Result<Arc<Self>> {
        Self::new(&self.alg, self.etas.clone(), depth)
    }

    fn fits(&self, needed: usize) -> Result<()> {
        if needed > self.depth {
            return Err(Error::DepthExceeded { needed, depth: self.depth });
        }
        Ok(())
    }

    fn check_letter(&self, j: usize) -> Result<()> {
        if j >= self.d() {
            return Err(Error::LetterOutOfRange { letter: j, d: self.d() });
        }
        Ok(())
    }

    fn check_poly(&self, p: &NCPoly<T>) -> Result<()> {
        if !(Arc::ptr_eq(p.algebra(), &self.alg) || **p.algebra() == *self.alg) {
            return Err(Error::AlgebraMismatch);
        }
        if p.d() != self.d() {
            return Err(Error::VariableCountMismatch { left: p.d(), right: self.d() });
        }
        Ok(())
    }

    fn check_tensor(&self, t: &BiTensor<T>) -> Result<()> {
        if !(Arc::ptr_eq(t.algebra(), &self.alg) || **t.algebra() == *self.alg) {
            return Err(Error::AlgebraMismatch);
        }
        if t.d() != self.d() {
            return Err(Error::VariableCountMismatch { left: t.d(), right: self.d() });
        }
        self.fits(t.leg_degree())
    }

    /// The vector `1 ∈ B ⊂ F`.
    pub fn vacuum(self: &Arc<Self>) -> FockVec<T> {
        self.from_b(BElem::one(&self.alg))
    }

    pub fn from_b(self: &Arc<Self>, b: BElem<T>) -> FockVec<T> {
        let mut comps = BTreeMap::new();
        comps.insert(Vec::new(), vec![vec![b]]);
        FockVec { space: self.clone(), comps }
    }

    /// The monomial vector `b_0 X_{i(1)} b_1 ⋯ X_{i(m)} b_m` itself.
    pub fn from_word(self: &Arc<Self>, w: &Word<T>) -> Result<FockVec<T>> {
        self.fits(w.degree())?;
        if let Some(&letter) = w.letters().iter().find(|&&l| l >= self.d()) {
            return Err(Error::LetterOutOfRange { letter, d: self.d() });
        }
        let mut comps = BTreeMap::new();
        comps.insert(w.letters().to_vec(), vec![w.coeffs().to_vec()]);
        Ok(FockVec { space: self.clone(), comps })
    }

    /// Creation operator `ℓ_j`.
    pub fn create(self: &Arc<Self>, j: usize, v: &FockVec<T>) -> Result<FockVec<T>> {
        self.check_letter(j)?;
        self.fits(v.max_len() + usize::from(!v.comps.is_empty()))?;
        let one = BElem::one(&self.alg);
        let mut out = FockVec::zero(self);
        for (seq, tensors) in &v.comps {
            let mut key = Vec::with_capacity(seq.len() + 1);
            key.push(j);
            key.extend_from_slice(seq);
            let lifted = tensors
                .iter()
                .map(|t| {
                    let mut c = Vec::with_capacity(t.len() + 1);
                    c.push(one.clone());
                    c.extend_from_slice(t);
                    c
                })
                .collect::<Vec<_>>();
            out.comps.entry(key).or_default().extend(lifted);
        }
        Ok(out)
    }

    /// Annihilation operator `ℓ_j*`.
    pub fn annihilate(self: &Arc<Self>, j: usize, v: &FockVec<T>) -> Result<FockVec<T>> {
        self.check_letter(j)?;
        let eta = &self.etas[j];
        let mut out = FockVec::zero(self);
        for (seq, tensors) in v.comps.iter().filter(|(s, _)| s.first() == Some(&j)) {
            let lowered = tensors
                .iter()
                .map(|t| {
                    let mut c = Vec::with_capacity(t.len() - 1);
                    c.push(&eta.apply(&t[0]) * &t[1]);
                    c.extend_from_slice(&t[2..]);
                    c
                })
                .collect::<Vec<_>>();
            out.comps.entry(seq[1..].to_vec()).or_default().extend(lowered);
        }
        Ok(out)
    }

    /// Left action of `b`.
    pub fn mult_b(self: &Arc<Self>, b: &BElem<T>, v: &FockVec<T>) -> FockVec<T> {
        let comps = v
            .comps
            .iter()
            .map(|(seq, ts)| {
                let ts = ts
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        t[0] = b * &t[0];
                        t
                    })
                    .collect();
                (seq.clone(), ts)
            })
            .collect();
        FockVec { space: self.clone(), comps }
    }

    /// `S_j = ℓ_j + ℓ_j*`.
    pub fn apply_s(self: &Arc<Self>, j: usize, v: &FockVec<T>) -> Result<FockVec<T>> {
        let mut out = self.create(j, v)?;
        out.absorb(self.annihilate(j, v)?);
        Ok(out)
    }

    /// `w(S)·v` for a single word, right to left. Components longer than
    /// `keep_at_most + (letters still to apply)` are dropped when a cap is
    /// given; they cannot come back down to that level.
    fn apply_word(self: &Arc<Self>, w: &Word<T>, v: &FockVec<T>, keep_at_most: Option<usize>) -> Result<FockVec<T>> {
        let letters = w.letters();
        let coeffs = w.coeffs();
        let mut cur = self.mult_b(&coeffs[letters.len()], v);
        for pos in (0..letters.len()).rev() {
            cur = self.apply_s(letters[pos], &cur)?;
            if let Some(cap) = keep_at_most {
                cur.comps.retain(|seq, _| seq.len() <= cap + pos);
            }
            cur = self.mult_b(&coeffs[pos], &cur);
        }
        Ok(cur)
    }

    /// `P(S)·v`.
    pub fn apply_poly(self: &Arc<Self>, p: &NCPoly<T>, v: &FockVec<T>) -> Result<FockVec<T>> {
        self.check_poly(p)?;
        self.same_space(v)?;
        self.fits(p.degree() + v.max_len())?;
        let mut out = FockVec::zero(self);
        for w in p.terms() {
            out.absorb(self.apply_word(w, v, None)?);
        }
        Ok(out)
    }

    /// `w(S)·1`.
    pub fn word_vec(self: &Arc<Self>, w: &Word<T>) -> Result<FockVec<T>> {
        self.fits(w.degree())?;
        if let Some(&letter) = w.letters().iter().find(|&&l| l >= self.d()) {
            return Err(Error::LetterOutOfRange { letter, d: self.d() });
        }
        self.apply_word(w, &self.vacuum(), None)
    }

    fn same_space(&self, v: &FockVec<T>) -> Result<()> {
        if std::ptr::eq(self, Arc::as_ptr(&v.space)) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// B-valued inner product `⟨v, w⟩_F`, conjugate linear in `v`.
    pub fn fock_inner(&self, v: &FockVec<T>, w: &FockVec<T>) -> Result<BElem<T>> {
        self.same_space(v)?;
        self.same_space(w)?;
        let mut total = BElem::zero(&self.alg);
        for (seq, ts) in &v.comps {
            let Some(us) = w.comps.get(seq) else { continue };
            for t in ts {
                for u in us {
                    let mut acc = &t[0].adjoint() * &u[0];
                    for (l, &letter) in seq.iter().enumerate() {
                        let inner = self.etas[letter].apply(&acc);
                        acc = &(&t[l + 1].adjoint() * &inner) * &u[l + 1];
                    }
                    total = &total + &acc;
                }
            }
        }
        Ok(total)
    }

    /// `E[P(S)] = ⟨1, P(S)1⟩_F`.
    pub fn expect(self: &Arc<Self>, p: &NCPoly<T>) -> Result<BElem<T>> {
        self.check_poly(p)?;
        self.fits(p.degree())?;
        let vac = self.vacuum();
        let mut total = BElem::zero(&self.alg);
        for w in p.terms() {
            let v = self.apply_word(w, &vac, Some(0))?;
            if let Some(ts) = v.comps.get(&Vec::new()) {
                for t in ts {
                    total = &total + &t[0];
                }
            }
        }
        Ok(total)
    }

    /// `E[w(S)]` for a single word.
    pub fn expect_word(self: &Arc<Self>, w: &Word<T>) -> Result<BElem<T>> {
        self.fits(w.degree())?;
        let v = self.apply_word(w, &self.vacuum(), Some(0))?;
        let mut total = BElem::zero(&self.alg);
        if let Some(ts) = v.comps.get(&Vec::new()) {
            for t in ts {
                total = &total + &t[0];
            }
        }
        Ok(total)
    }

    /// `⟨p, q⟩_τ = τ(E[P(S)* Q(S)])`.
    pub fn inner_tau(self: &Arc<Self>, p: &NCPoly<T>, q: &NCPoly<T>) -> Result<C<T>> {
        let vac = self.vacuum();
        let vp = self.apply_poly(p, &vac)?;
        let vq = self.apply_poly(q, &vac)?;
        Ok(self.fock_inner(&vp, &vq)?.tau())
    }

    /// `‖p‖_τ²`, real by construction.
    pub fn norm_sq_tau(self: &Arc<Self>, p: &NCPoly<T>) -> Result<T> {
        Ok(self.inner_tau(p, p)?.re)
    }

    fn leg_vectors(self: &Arc<Self>, t: &BiTensor<T>) -> Result<Vec<(FockVec<T>, FockVec<T>)>> {
        t.pairs().iter().map(|(l, r)| Ok((self.word_vec(l)?, self.word_vec(r)?))).collect()
    }

    /// `⟨a_1⊗a_2, a_3⊗a_4⟩_{η_j} = τ(a_2* η_j(E[a_1* a_3]) a_4)`, extended
    /// sesquilinearly.
    pub fn inner_eta(self: &Arc<Self>, j: usize, t1: &BiTensor<T>, t2: &BiTensor<T>) -> Result<C<T>> {
        self.check_letter(j)?;
        self.check_tensor(t1)?;
        self.check_tensor(t2)?;
        let eta = &self.etas[j];
        let legs1 = self.leg_vectors(t1)?;
        let legs2 = if std::ptr::eq(t1, t2) { legs1.clone() } else { self.leg_vectors(t2)? };
        let mut total = C::zero();
        for (v1, v2) in &legs1 {
            for (v3, v4) in &legs2 {
                let c = eta.apply(&self.fock_inner(v1, v3)?);
                if c.is_exact_zero() {
                    continue;
                }
                total = total + self.fock_inner(v2, &self.mult_b(&c, v4))?.tau();
            }
        }
        Ok(total)
    }

    /// `⟨a_1⊗a_2, a_3⊗a_4⟩_{τ⊗τ} = τ(a_1* a_3) τ(a_2* a_4)`.
    pub fn inner_tau_tau(self: &Arc<Self>, t1: &BiTensor<T>, t2: &BiTensor<T>) -> Result<C<T>> {
        self.check_tensor(t1)?;
        self.check_tensor(t2)?;
        let legs1 = self.leg_vectors(t1)?;
        let legs2 = if std::ptr::eq(t1, t2) { legs1.clone() } else { self.leg_vectors(t2)? };
        let mut total = C::zero();
        for (v1, v2) in &legs1 {
            for (v3, v4) in &legs2 {
                let left = self.fock_inner(v1, v3)?.tau();
                if left.is_zero() {
                    continue;
                }
                total = total + left * self.fock_inner(v2, v4)?.tau();
            }
        }
        Ok(total)
    }
}

impl<T: Real> FockVec<T> {
    pub fn zero(space: &Arc<FockSpace<T>>) -> Self {
        FockVec { space: space.clone(), comps: BTreeMap::new() }
    }

    pub fn space(&self) -> &Arc<FockSpace<T>> {
        &self.space
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, Vec<Vec<BElem<T>>>> {
        &self.comps
    }

    /// Longest stored letter sequence (0 for the zero vector).
    pub fn max_len(&self) -> usize {
        self.comps.keys().map(Vec::len).max().unwrap_or(0)
    }

    fn absorb(&mut self, other: FockVec<T>) {
        for (seq, ts) in other.comps {
            self.comps.entry(seq).or_default().extend(ts);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        let mut out = self.clone();
        out.absorb(other.clone());
        Ok(out)
    }

    pub fn scale(&self, c: C<T>) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|(seq, ts)| {
                let ts = ts
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        t[0] = t[0].scale(c);
                        t
                    })
                    .collect();
                (seq.clone(), ts)
            })
            .collect();
        FockVec { space: self.space.clone(), comps }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-C::<T>::from(T::one())))
    }

    /// Largest entry of the dense coefficient tensors per letter sequence.
    pub fn residual_norm(&self) -> T {
        let mut groups = BTreeMap::new();
        for (seq, ts) in &self.comps {
            for t in ts.iter().filter(|t| !t.iter().any(BElem::is_exact_zero)) {
                accumulate(&mut groups, seq.clone(), kron_chain(t.iter()));
            }
        }
        max_abs_groups(&groups)
    }

    pub fn is_zero(&self, tol: T) -> bool {
        self.residual_norm() <= tol
    }
}
