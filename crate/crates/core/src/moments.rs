//! Moments of the semicircular family from non-crossing pair partitions.
//!
//! `E[b_0 S_{j_1} b_1 ⋯ S_{j_k} b_k] = Σ_π b_0 η_π(b_1,…,b_{k−1}) b_k`, the sum
//! running over non-crossing pairings whose pairs join equal letters. This is
//! an evaluation path independent of the Fock space and is used to check it.
//!
//! Positions are 0-based: a pair `(a, c)` joins the `a`-th and `c`-th `S`.

use crate::balgebra::{BElem, CPMap};
use crate::error::{Error, Result};
use crate::ncpoly::{NCPoly, Word};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairPartition {
    k: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Validates a pairing of `0..k`: disjoint, covering, `a < c`, non-crossing.
    pub fn new(k: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if !k.is_multiple_of(2) || pairs.len() * 2 != k {
            return Err(Error::MalformedPartition(format!("{} pairs cannot cover {} points", pairs.len(), k)));
        }
        let mut seen = vec![false; k];
        for &(a, c) in &pairs {
            if a >= c || c >= k {
                return Err(Error::MalformedPartition(format!("bad pair ({a}, {c})")));
            }
            for x in [a, c] {
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::MalformedPartition(format!("point {x} used twice")));
                }
            }
        }
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                if a < c && c < b && b < d {
                    return Err(Error::MalformedPartition(format!("({a}, {b}) crosses ({c}, {d})")));
                }
            }
        }
        pairs.sort_unstable();
        Ok(PairPartition { k, pairs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn partners(&self) -> Vec<usize> {
        let mut p = vec![0; self.k];
        for &(a, c) in &self.pairs {
            p[a] = c;
            p[c] = a;
        }
        p
    }
}

/// All non-crossing pairings of `0..k`, in lexicographic order of pair lists.
pub fn nc2_enumerate(k: usize) -> Vec<PairPartition> {
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo >= hi {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        // lo pairs with an odd offset so both sides have even size
        for c in (lo + 1..hi).step_by(2) {
            for inner in rec(lo + 1, c) {
                for outer in rec(c + 1, hi) {
                    let mut ps = vec![(lo, c)];
                    ps.extend_from_slice(&inner);
                    ps.extend_from_slice(&outer);
                    out.push(ps);
                }
            }
        }
        out
    }
    if !k.is_multiple_of(2) {
        return Vec::new();
    }
    let mut all: Vec<PairPartition> = rec(0, k)
        .into_iter()
        .map(|mut pairs| {
            pairs.sort_unstable();
            PairPartition { k, pairs }
        })
        .collect();
    all.sort_by(|a, b| a.pairs.cmp(&b.pairs));
    all
}

/// `η_π(b_1,…,b_{k−1})` with `η_{letters[a]}` applied at each pair `(a, c)`.
///
/// `bs[a]` sits between positions `a` and `a+1`.
pub fn eta_pi<T: Real>(pi: &PairPartition, letters: &[usize], etas: &[CPMap<T>], bs: &[BElem<T>]) -> Result<BElem<T>> {
    let k = pi.k;
    if letters.len() != k || bs.len() + 1 != k.max(1) {
        return Err(Error::MalformedPartition(format!(
            "{} letters and {} interior coefficients for {} points",
            letters.len(),
            bs.len(),
            k
        )));
    }
    for &(a, c) in &pi.pairs {
        if letters[a] != letters[c] {
            return Err(Error::MalformedPartition(format!("pair ({a}, {c}) joins letters {} and {}", letters[a], letters[c])));
        }
        if letters[a] >= etas.len() {
            return Err(Error::LetterOutOfRange { letter: letters[a], d: etas.len() });
        }
    }
    if k == 0 {
        return Err(Error::MalformedPartition("empty pairing has no interior coefficients".into()));
    }
    let partner = pi.partners();
    Ok(segment(0, k, &partner, letters, etas, bs))
}

/// Product of the outer blocks covering `lo..hi`, with the coefficients that
/// separate consecutive blocks. Requires `lo < hi`.
fn segment<T: Real>(lo: usize, hi: usize, partner: &[usize], letters: &[usize], etas: &[CPMap<T>], bs: &[BElem<T>]) -> BElem<T> {
    let mut a = lo;
    let mut acc: Option<BElem<T>> = None;
    while a < hi {
        let c = partner[a];
        let block = if c == a + 1 {
            etas[letters[a]].apply(&bs[a])
        } else {
            let inside = segment(a + 1, c, partner, letters, etas, bs);
            etas[letters[a]].apply(&(&(&bs[a] * &inside) * &bs[c - 1]))
        };
        acc = Some(match acc {
            None => block,
            Some(prev) => &(&prev * &bs[a - 1]) * &block,
        });
        a = c + 1;
    }
    acc.expect("nonempty segment")
}

/// `E[b_0 S_{j_1} b_1 ⋯ S_{j_k} b_k]` for `chain = [(j_1, b_1), …, (j_k, b_k)]`.
pub fn moment<T: Real>(b0: &BElem<T>, chain: &[(usize, BElem<T>)], etas: &[CPMap<T>]) -> Result<BElem<T>> {
    if let Some(&(letter, _)) = chain.iter().find(|(j, _)| *j >= etas.len()) {
        return Err(Error::LetterOutOfRange { letter, d: etas.len() });
    }
    let k = chain.len();
    if k == 0 {
        return Ok(b0.clone());
    }
    let mut total = BElem::zero(b0.algebra());
    if !k.is_multiple_of(2) {
        return Ok(total);
    }
    let letters: Vec<usize> = chain.iter().map(|(j, _)| *j).collect();
    let bs: Vec<BElem<T>> = chain[..k - 1].iter().map(|(_, b)| b.clone()).collect();
    let bk = &chain[k - 1].1;
    for pi in nc2_enumerate(k) {
        if pi.pairs.iter().any(|&(a, c)| letters[a] != letters[c]) {
            continue;
        }
        let partner = pi.partners();
        let mid = segment(0, k, &partner, &letters, etas, &bs);
        total = &total + &(&(b0 * &mid) * bk);
    }
    Ok(total)
}

pub fn moment_word<T: Real>(w: &Word<T>, etas: &[CPMap<T>]) -> Result<BElem<T>> {
    let chain: Vec<(usize, BElem<T>)> = w.letters().iter().copied().zip(w.coeffs()[1..].iter().cloned()).collect();
    moment(&w.coeffs()[0], &chain, etas)
}

/// `E[P(S)]` summed word by word through [`moment`].
pub fn expect_oracle<T: Real>(p: &NCPoly<T>, etas: &[CPMap<T>]) -> Result<BElem<T>> {
    if p.d() != etas.len() {
        return Err(Error::VariableCountMismatch { left: p.d(), right: etas.len() });
    }
    let mut total = BElem::zero(p.algebra());
    for w in p.terms() {
        total = &total + &moment_word(w, etas)?;
    }
    Ok(total)
}
