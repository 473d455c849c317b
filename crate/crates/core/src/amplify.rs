//! Matrix amplification `M_N(B)` with trace `τ⊗tr_N` and variance maps
//! `η_j⊗id_N`, and the corner embedding of an arbitrary polynomial into an
//! amplified Chebyshev expression with pairwise distinct signatures.
//!
//! A polynomial over `M_N(B)` in the variables `Y_j` is compared with `B`-level
//! data through its evaluation at `X_j⊗I_N`: since `X_j⊗I_N` commutes with the
//! matrix units, entry `(a,b)` of `c_0 Y c_1 ⋯ Y c_m` is
//! `Σ c_0[a,a_1] X c_1[a_1,a_2] ⋯ X c_m[a_m,b]`, a polynomial over `B`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::balgebra::{BAlgebra, BElem, CPMap};
use crate::chebyshev::{cheb, cheb_decompose, make_texpr, ChebProduct, ChebSpec, Signature, TExpr};
use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::mat::CMat;
use crate::ncpoly::{fdq, NCPoly, Word};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct AmplifiedContext<T> {
    base: Arc<BAlgebra<T>>,
    n: usize,
    amplified: Arc<BAlgebra<T>>,
    base_etas: Vec<CPMap<T>>,
    lifted_etas: Vec<CPMap<T>>,
}

/// `M_N(B)` together with `η_j⊗id_N`.
pub fn amplify<T: Real>(base: &Arc<BAlgebra<T>>, etas: &[CPMap<T>], n: usize) -> Result<AmplifiedContext<T>> {
    if etas.iter().any(|e| !(Arc::ptr_eq(e.algebra(), base) || **e.algebra() == **base)) {
        return Err(Error::AlgebraMismatch);
    }
    let amplified = base.amplified(n)?;
    let mut ctx = AmplifiedContext { base: base.clone(), n, amplified, base_etas: etas.to_vec(), lifted_etas: Vec::new() };
    ctx.lifted_etas = etas
        .iter()
        .map(|e| CPMap::new(&ctx.amplified, e.kraus().iter().map(|a| ctx.lift(a)).collect()))
        .collect::<Result<_>>()?;
    Ok(ctx)
}

impl<T: Real> AmplifiedContext<T> {
    pub fn base(&self) -> &Arc<BAlgebra<T>> {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn amplified(&self) -> &Arc<BAlgebra<T>> {
        &self.amplified
    }

    pub fn base_etas(&self) -> &[CPMap<T>] {
        &self.base_etas
    }

    pub fn lifted_etas(&self) -> &[CPMap<T>] {
        &self.lifted_etas
    }

    /// The element of `M_N(B)` whose `(a,b)` entry is `f(a,b)`.
    pub fn embed(&self, f: impl Fn(usize, usize) -> Option<BElem<T>>) -> BElem<T> {
        let n = self.n;
        let mut blocks: Vec<CMat<T>> = self.base.block_sizes().iter().map(|&s| CMat::zeros(s * n)).collect();
        for a in 0..n {
            for b in 0..n {
                let Some(e) = f(a, b) else { continue };
                for (p, blk) in e.blocks().iter().enumerate() {
                    let s = blk.dim();
                    for i in 0..s {
                        for k in 0..s {
                            blocks[p].set(i * n + a, k * n + b, blk.get(i, k));
                        }
                    }
                }
            }
        }
        BElem::from_blocks(&self.amplified, blocks).expect("block shapes follow the amplified algebra")
    }

    /// Entry `(a, b)` of an amplified element, as an element of `B`.
    pub fn entry(&self, x: &BElem<T>, a: usize, b: usize) -> BElem<T> {
        let n = self.n;
        let blocks = x
            .blocks()
            .iter()
            .map(|blk| {
                let s = blk.dim() / n;
                let mut m = CMat::zeros(s);
                for i in 0..s {
                    for k in 0..s {
                        m.set(i, k, blk.get(i * n + a, k * n + b));
                    }
                }
                m
            })
            .collect();
        BElem::from_blocks(&self.base, blocks).expect("block shapes follow the base algebra")
    }

    /// `b ⊗ I_N`.
    pub fn lift(&self, b: &BElem<T>) -> BElem<T> {
        self.embed(|a, c| (a == c).then(|| b.clone()))
    }

    /// `diag(b_1,…,b_k,0,…,0)`.
    pub fn block_diag(&self, elems: &[BElem<T>]) -> Result<BElem<T>> {
        if elems.len() > self.n {
            return Err(Error::BlockOverflow { blocks: elems.len(), order: self.n });
        }
        Ok(self.embed(|a, c| (a == c).then(|| elems.get(a).cloned()).flatten()))
    }

    /// First row filled with `1_B`.
    pub fn ones_row(&self) -> BElem<T> {
        let one = BElem::one(&self.base);
        self.embed(|a, _| (a == 0).then(|| one.clone()))
    }

    /// First column filled with `1_B`.
    pub fn ones_col(&self) -> BElem<T> {
        let one = BElem::one(&self.base);
        self.embed(|_, c| (c == 0).then(|| one.clone()))
    }

    /// Entries of `ev_{X⊗I_N}(p)` as polynomials over `B`.
    pub fn ev_entries(&self, p: &NCPoly<T>) -> Result<Vec<Vec<NCPoly<T>>>> {
        if !(Arc::ptr_eq(p.algebra(), &self.amplified) || **p.algebra() == *self.amplified) {
            return Err(Error::AlgebraMismatch);
        }
        let n = self.n;
        let d = p.d();
        let mut words: Vec<Vec<Vec<Word<T>>>> = vec![vec![Vec::new(); n]; n];
        for w in p.terms() {
            let grids: Vec<Vec<Vec<Option<BElem<T>>>>> = w
                .coeffs()
                .iter()
                .map(|c| {
                    (0..n)
                        .map(|a| (0..n).map(|b| Some(self.entry(c, a, b)).filter(|e| !e.is_exact_zero())).collect())
                        .collect()
                })
                .collect();
            for a in 0..n {
                let mut path = Vec::with_capacity(grids.len());
                collect_paths(&grids, a, &mut path, &mut |b, coeffs| {
                    words[a][b].push(Word::new(w.letters().to_vec(), coeffs.to_vec()).expect("arity"));
                });
            }
        }
        words
            .into_iter()
            .map(|row| row.into_iter().map(|ws| NCPoly::from_words(&self.base, d, ws)).collect())
            .collect()
    }

    /// Largest residual of `ev_{X⊗I_N}(p)` against a target given entrywise;
    /// `None` targets mean zero.
    pub fn entrywise_residual(&self, p: &NCPoly<T>, target: impl Fn(usize, usize) -> Option<NCPoly<T>>) -> Result<T> {
        let entries = self.ev_entries(p)?;
        let mut worst = T::zero();
        for (a, row) in entries.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                let r = match target(a, b) {
                    Some(t) => e.checked_sub(&t)?.residual_norm(),
                    None => e.residual_norm(),
                };
                worst = worst.max(r);
            }
        }
        Ok(worst)
    }

    /// `U_n^{η⊗id}` with coefficients `diag(b^{(1)},…,b^{(k)},0,…)`.
    pub fn block_spec(&self, specs: &[ChebSpec<T>]) -> Result<ChebSpec<T>> {
        let first = specs.first().ok_or_else(|| Error::ShapeMismatch("no blocks".into()))?;
        if specs.len() > self.n {
            return Err(Error::BlockOverflow { blocks: specs.len(), order: self.n });
        }
        if specs.iter().any(|s| s.letter() != first.letter() || s.degree() != first.degree()) {
            return Err(Error::ShapeMismatch("blocks differ in letter or degree".into()));
        }
        let pairs = (0..first.degree())
            .map(|t| {
                let left: Vec<BElem<T>> = specs.iter().map(|s| s.pairs()[t].0.clone()).collect();
                let right: Vec<BElem<T>> = specs.iter().map(|s| s.pairs()[t].1.clone()).collect();
                Ok((self.block_diag(&left)?, self.block_diag(&right)?))
            })
            .collect::<Result<Vec<_>>>()?;
        ChebSpec::new(first.letter(), pairs)
    }

    /// `R · Π_f U^{η⊗id}(diag over products of factor f) · C`, with `R`, `C`
    /// the all-ones first row and column. All products must share a signature.
    pub fn padded_product(&self, products: &[ChebProduct<T>]) -> Result<ChebProduct<T>> {
        let first = products.first().ok_or_else(|| Error::ShapeMismatch("no products".into()))?;
        let sig = first.signature();
        if products.iter().any(|p| p.signature() != sig) {
            return Err(Error::ShapeMismatch("products differ in signature".into()));
        }
        let factors = (0..sig.l)
            .map(|f| {
                let column: Vec<ChebSpec<T>> = products.iter().map(|p| p.factors()[f].clone()).collect();
                self.block_spec(&column)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChebProduct::new(factors)?.lmul_b(&self.ones_row()).rmul_b(&self.ones_col()))
    }
}

fn collect_paths<T: Real>(
    grids: &[Vec<Vec<Option<BElem<T>>>>],
    row: usize,
    path: &mut Vec<BElem<T>>,
    emit: &mut dyn FnMut(usize, &[BElem<T>]),
) {
    let depth = path.len();
    let n = grids[depth].len();
    for col in 0..n {
        let Some(e) = &grids[depth][row][col] else { continue };
        path.push(e.clone());
        if depth + 1 == grids.len() {
            emit(col, path);
        } else {
            collect_paths(grids, col, path, emit);
        }
        path.pop();
    }
}

/// Residual of `U_n^{η⊗id_N}(diag blocks) = diag(U_n^η(block)…, 0…)` evaluated
/// entrywise.
pub fn amplified_cheb_block<T: Real>(ctx: &AmplifiedContext<T>, specs: &[ChebSpec<T>]) -> Result<T> {
    let amp = ctx.block_spec(specs)?;
    let lhs = cheb(&amp, ctx.lifted_etas())?;
    let targets = specs.iter().map(|s| cheb(s, ctx.base_etas())).collect::<Result<Vec<_>>>()?;
    ctx.entrywise_residual(&lhs, |a, b| (a == b).then(|| targets.get(a).cloned()).flatten())
}

/// Residual of the padded identity: the amplified product compressed by the
/// all-ones row and column equals `E_{11} ⊗ Σ_s P_s`.
pub fn padded_product_residual<T: Real>(ctx: &AmplifiedContext<T>, products: &[ChebProduct<T>]) -> Result<T> {
    let padded = ctx.padded_product(products)?.poly(ctx.lifted_etas())?;
    let mut sum: Option<NCPoly<T>> = None;
    for p in products {
        let q = p.poly(ctx.base_etas())?;
        sum = Some(match sum {
            None => q,
            Some(s) => s.checked_add(&q)?,
        });
    }
    let sum = sum.expect("nonempty product list");
    ctx.entrywise_residual(&padded, |a, b| (a == 0 && b == 0).then(|| sum.clone()))
}

/// Outcome of embedding `P` as the corner of an amplified Chebyshev expression.
#[derive(Debug, Clone)]
pub struct CornerReport<T> {
    pub order: usize,
    pub texpr: TExpr<T>,
    pub context: AmplifiedContext<T>,
    /// Largest entry residual of `ev(P̃) − E_{11}⊗P`.
    pub residual: T,
    /// `‖∂_{Y_j}P̃‖²_{η_j⊗id} / ‖∂_j P‖²_{η_j}`; `None` when the base norm vanishes.
    pub norm_ratio_by_letter: Vec<Option<T>>,
}

/// Groups the Chebyshev decomposition of `p` by signature, pads each group
/// into one amplified product, and checks the corner identity and the `1/N`
/// norm relation on `space`'s variance maps.
pub fn embed_corner<T: Real>(space: &Arc<FockSpace<T>>, p: &NCPoly<T>) -> Result<CornerReport<T>> {
    let etas = space.etas();
    let dec = cheb_decompose(p, etas).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let mut groups: BTreeMap<Signature, Vec<ChebProduct<T>>> = BTreeMap::new();
    for prod in dec.products {
        groups.entry(prod.signature()).or_default().push(prod);
    }
    let order = groups.values().map(Vec::len).max().unwrap_or(1).max(1);
    let ctx = amplify(space.algebra(), etas, order)?;
    let products = groups.values().map(|g| ctx.padded_product(g)).collect::<Result<Vec<_>>>()?;
    let scalar = ctx.block_diag(&[dec.scalar])?;
    let texpr = make_texpr(scalar, products).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let lifted = texpr.poly(p.d(), ctx.lifted_etas())?;
    let residual = ctx.entrywise_residual(&lifted, |a, b| (a == 0 && b == 0).then(|| p.clone()))?;

    let amp_space = FockSpace::new(ctx.amplified(), ctx.lifted_etas().to_vec(), space.depth())?;
    let norm_ratio_by_letter = (0..p.d())
        .map(|j| {
            let dp = fdq(p, j)?;
            let base = space.inner_eta(j, &dp, &dp)?.re;
            if base.abs() <= T::lit(1e-12) {
                return Ok(None);
            }
            let dl = fdq(&lifted, j)?;
            Ok(Some(amp_space.inner_eta(j, &dl, &dl)?.re / base))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CornerReport { order, texpr, context: ctx, residual, norm_ratio_by_letter })
}
