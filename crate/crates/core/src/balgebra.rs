//! Finite-dimensional coefficient algebras `B`, their faithful tracial
//! states, and completely positive maps in Kraus form.
//!
//! Every supported algebra is a direct sum of full matrix blocks
//! `M_{s_1} ⊕ … ⊕ M_{s_r}` with trace `τ(b) = Σ_p w_p tr(b_p) / s_p`.
//! A diagonal algebra is the case `s_p = 1`, a full matrix algebra the case
//! of one block. Elements are stored block by block, so entries outside the
//! structure are zero by construction.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::CMat;
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Diagonal,
    Full,
    #[serde(alias = "block-diagonal")]
    Blocks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BAlgebra<T> {
    kind: AlgebraKind,
    block_sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    trace_weights: Vec<T>,
}

impl<T: Real> BAlgebra<T> {
    fn build(kind: AlgebraKind, block_sizes: Vec<usize>, weights: Vec<T>, normalize: bool) -> Result<Arc<Self>> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::EmptyAlgebra);
        }
        if weights.len() != block_sizes.len() {
            return Err(Error::MalformedAlgebra(format!(
                "{} trace weights for {} blocks",
                weights.len(),
                block_sizes.len()
            )));
        }
        if let Some(index) = weights.iter().position(|w| !(*w > T::zero())) {
            return Err(Error::NonPositiveWeight { index });
        }
        let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
        let weights = if normalize {
            weights.iter().map(|&w| w / sum).collect()
        } else {
            if (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
                return Err(Error::WeightSumMismatch { sum: sum.to_f64_lossy() });
            }
            weights
        };
        let mut offsets = Vec::with_capacity(block_sizes.len());
        let mut dim = 0;
        for &s in &block_sizes {
            offsets.push(dim);
            dim += s;
        }
        Ok(Arc::new(BAlgebra { kind, block_sizes, offsets, dim, trace_weights: weights }))
    }

    /// Commutative algebra `ℂ^k` with `τ(e_i) = weights[i]`.
    pub fn diagonal(weights: Vec<T>) -> Result<Arc<Self>> {
        let k = weights.len();
        Self::build(AlgebraKind::Diagonal, vec![1; k], weights, false)
    }

    /// `M_k(ℂ)` with the normalized trace.
    pub fn full(k: usize) -> Result<Arc<Self>> {
        Self::build(AlgebraKind::Full, vec![k], vec![T::one()], false)
    }

    /// `M_{s_1} ⊕ … ⊕ M_{s_r}` with block weights.
    pub fn blocks(sizes: Vec<usize>, weights: Vec<T>) -> Result<Arc<Self>> {
        Self::build(AlgebraKind::Blocks, sizes, weights, false)
    }

    /// The scalar algebra `ℂ`.
    pub fn scalars() -> Arc<Self> {
        Self::diagonal(vec![T::one()]).expect("scalar algebra")
    }

    /// `M_n(B)` with trace `τ ⊗ tr_n`.
    ///
    /// Indices are ordered as `(i, a) ↦ i·n + a` with `i` the index of `B` and
    /// `a` the matrix index, so every block of `B` of size `s` becomes a block
    /// of size `s·n` with the same weight.
    pub fn amplified(&self, n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::EmptyAlgebra);
        }
        let sizes: Vec<usize> = self.block_sizes.iter().map(|s| s * n).collect();
        if sizes.len() == 1 {
            Self::full(sizes[0])
        } else {
            Self::build(AlgebraKind::Blocks, sizes, self.trace_weights.clone(), false)
        }
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn trace_weights(&self) -> &[T] {
        &self.trace_weights
    }

    /// Dimension of `B` as a vector space.
    pub fn structure_dim(&self) -> usize {
        self.block_sizes.iter().map(|s| s * s).sum()
    }

    /// Maps a global matrix index to `(block, local index)`.
    pub fn locate(&self, index: usize) -> Option<(usize, usize)> {
        let p = self.offsets.iter().rposition(|&o| o <= index)?;
        let local = index - self.offsets[p];
        (local < self.block_sizes[p]).then_some((p, local))
    }

    /// Restriction of the tracial state to `B`.
    pub fn trace(&self, b: &BElem<T>) -> Result<C<T>> {
        if !self.same_as(&b.alg) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(b.tau())
    }

    fn same_as(&self, other: &BAlgebra<T>) -> bool {
        std::ptr::eq(self, other) || self == other
    }

    /// All matrix units of the structure, in block order.
    pub fn structure_basis(self: &Arc<Self>) -> Vec<BElem<T>> {
        let mut out = Vec::with_capacity(self.structure_dim());
        for (p, &s) in self.block_sizes.iter().enumerate() {
            for i in 0..s {
                for j in 0..s {
                    let mut e = BElem::zero(self);
                    e.blocks[p].set(i, j, C::one());
                    out.push(e);
                }
            }
        }
        out
    }
}

/// Element of a coefficient algebra.
#[derive(Debug, Clone)]
pub struct BElem<T> {
    alg: Arc<BAlgebra<T>>,
    blocks: Vec<CMat<T>>,
}

impl<T: Real> BElem<T> {
    pub fn zero(alg: &Arc<BAlgebra<T>>) -> Self {
        BElem { alg: alg.clone(), blocks: alg.block_sizes.iter().map(|&s| CMat::zeros(s)).collect() }
    }

    pub fn one(alg: &Arc<BAlgebra<T>>) -> Self {
        BElem { alg: alg.clone(), blocks: alg.block_sizes.iter().map(|&s| CMat::identity(s)).collect() }
    }

    pub fn scalar(alg: &Arc<BAlgebra<T>>, c: C<T>) -> Self {
        Self::one(alg).scale(c)
    }

    pub fn from_blocks(alg: &Arc<BAlgebra<T>>, blocks: Vec<CMat<T>>) -> Result<Self> {
        if blocks.len() != alg.block_sizes.len()
            || blocks.iter().zip(&alg.block_sizes).any(|(b, &s)| b.dim() != s)
        {
            return Err(Error::MalformedAlgebra("block shapes do not match the algebra".into()));
        }
        Ok(BElem { alg: alg.clone(), blocks })
    }

    /// Reads a dense `dim × dim` matrix, rejecting nonzero off-structure entries.
    pub fn from_dense(alg: &Arc<BAlgebra<T>>, m: &CMat<T>) -> Result<Self> {
        if m.dim() != alg.dim {
            return Err(Error::MalformedAlgebra(format!("expected {}x{} matrix, got {}x{}", alg.dim, alg.dim, m.dim(), m.dim())));
        }
        let mut out = Self::zero(alg);
        for r in 0..alg.dim {
            for c in 0..alg.dim {
                let v = m.get(r, c);
                match (alg.locate(r), alg.locate(c)) {
                    (Some((p, i)), Some((q, j))) if p == q => out.blocks[p].set(i, j, v),
                    _ if v.is_zero() => {}
                    _ => return Err(Error::StructureViolation { row: r, col: c }),
                }
            }
        }
        Ok(out)
    }

    /// Diagonal element with the given diagonal entries.
    pub fn diag(alg: &Arc<BAlgebra<T>>, entries: &[C<T>]) -> Result<Self> {
        if entries.len() != alg.dim {
            return Err(Error::MalformedAlgebra(format!("{} diagonal entries for dimension {}", entries.len(), alg.dim)));
        }
        let mut out = Self::zero(alg);
        for (idx, &v) in entries.iter().enumerate() {
            let (p, i) = alg.locate(idx).expect("index in range");
            out.blocks[p].set(i, i, v);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> CMat<T> {
        let mut m = CMat::zeros(self.alg.dim);
        for (p, b) in self.blocks.iter().enumerate() {
            let o = self.alg.offsets[p];
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    m.set(o + i, o + j, b.get(i, j));
                }
            }
        }
        m
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn blocks(&self) -> &[CMat<T>] {
        &self.blocks
    }

    pub fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat<T>, &CMat<T>) -> CMat<T>) -> Self {
        assert!(self.same_algebra(other), "coefficient algebra mismatch");
        BElem { alg: self.alg.clone(), blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        BElem { alg: self.alg.clone(), blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        BElem { alg: self.alg.clone(), blocks: self.blocks.iter().map(CMat::adjoint).collect() }
    }

    /// `τ_B(b)`.
    pub fn tau(&self) -> C<T> {
        self.blocks
            .iter()
            .zip(&self.alg.trace_weights)
            .zip(&self.alg.block_sizes)
            .fold(C::zero(), |acc, ((b, &w), &s)| acc + b.trace() * (w / T::lit(s as f64)))
    }

    pub fn max_abs(&self) -> T {
        self.blocks.iter().fold(T::zero(), |m, b| m.max(b.max_abs()))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.blocks.iter().all(CMat::is_exact_zero)
    }

    /// Coordinates in the matrix-unit basis returned by
    /// [`BAlgebra::structure_basis`].
    pub fn coords(&self) -> Vec<C<T>> {
        self.blocks.iter().flat_map(|b| b.entries().iter().copied()).collect()
    }
}

impl<'a, T: Real> Mul<&'a BElem<T>> for &'a BElem<T> {
    type Output = BElem<T>;
    fn mul(self, rhs: &'a BElem<T>) -> BElem<T> {
        self.zip_with(rhs, CMat::matmul)
    }
}

impl<'a, T: Real> Add<&'a BElem<T>> for &'a BElem<T> {
    type Output = BElem<T>;
    fn add(self, rhs: &'a BElem<T>) -> BElem<T> {
        self.zip_with(rhs, CMat::add)
    }
}

impl<'a, T: Real> Sub<&'a BElem<T>> for &'a BElem<T> {
    type Output = BElem<T>;
    fn sub(self, rhs: &'a BElem<T>) -> BElem<T> {
        self.zip_with(rhs, CMat::sub)
    }
}

impl<T: Real> Neg for &BElem<T> {
    type Output = BElem<T>;
    fn neg(self) -> BElem<T> {
        self.scale(-C::<T>::one())
    }
}

impl<T: Real> PartialEq for BElem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.blocks == other.blocks
    }
}

/// Completely positive map `η(b) = Σ_i A_i* b A_i`.
#[derive(Debug, Clone)]
pub struct CPMap<T> {
    alg: Arc<BAlgebra<T>>,
    kraus: Vec<BElem<T>>,
    star_closed: bool,
}

impl<T: Real> CPMap<T> {
    pub fn new(alg: &Arc<BAlgebra<T>>, kraus: Vec<BElem<T>>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        if kraus.iter().any(|a| !(Arc::ptr_eq(a.algebra(), alg) || **a.algebra() == **alg)) {
            return Err(Error::AlgebraMismatch);
        }
        let star_closed = is_star_closed(&kraus);
        Ok(CPMap { alg: alg.clone(), kraus, star_closed })
    }

    pub fn identity(alg: &Arc<BAlgebra<T>>) -> Self {
        Self::new(alg, vec![BElem::one(alg)]).expect("identity map")
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn kraus(&self) -> &[BElem<T>] {
        &self.kraus
    }

    /// Whether the Kraus family is closed under adjoints as a multiset.
    pub fn star_closed(&self) -> bool {
        self.star_closed
    }

    /// `η(b)`; panics if `b` lives in another algebra.
    pub fn apply(&self, b: &BElem<T>) -> BElem<T> {
        let mut acc = BElem::zero(&self.alg);
        for a in &self.kraus {
            let term = &(&a.adjoint() * b) * a;
            acc = &acc + &term;
        }
        acc
    }

    pub fn apply_cp(&self, b: &BElem<T>) -> Result<BElem<T>> {
        if !(Arc::ptr_eq(b.algebra(), &self.alg) || **b.algebra() == *self.alg) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self.apply(b))
    }

    /// Checks `τ(η(E_p) E_q) = τ(E_p η(E_q))` over all pairs of matrix units.
    pub fn check_trace_symmetry(&self, tol: T) -> bool {
        let basis = self.alg.structure_basis();
        let images: Vec<BElem<T>> = basis.iter().map(|e| self.apply(e)).collect();
        for (ep, hp) in basis.iter().zip(&images) {
            for (eq, hq) in basis.iter().zip(&images) {
                let lhs = (hp * eq).tau();
                let rhs = (ep * hq).tau();
                if (lhs - rhs).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

fn is_star_closed<T: Real>(kraus: &[BElem<T>]) -> bool {
    let mut used = vec![false; kraus.len()];
    for a in kraus {
        let adj = a.adjoint();
        match (0..kraus.len()).find(|&j| !used[j] && kraus[j] == adj) {
            Some(j) => used[j] = true,
            None => return false,
        }
    }
    true
}

/// JSON matrix: list of rows, each a list of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausSpec {
    pub kraus: Vec<MatrixJson>,
}

/// Serialized description of a coefficient algebra and its variance maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub kind: AlgebraKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub etas: Vec<KrausSpec>,
}

/// Validates an [`AlgebraSpec`] and builds the algebra.
///
/// Missing trace weights default to the uniform state on the blocks.
pub fn make_algebra<T: Real>(spec: &AlgebraSpec) -> Result<Arc<BAlgebra<T>>> {
    if spec.dim == 0 {
        return Err(Error::EmptyAlgebra);
    }
    let sizes = match spec.kind {
        AlgebraKind::Diagonal => vec![1; spec.dim],
        AlgebraKind::Full => vec![spec.dim],
        AlgebraKind::Blocks => {
            let sizes = spec
                .block_sizes
                .clone()
                .ok_or_else(|| Error::MalformedAlgebra("blocks algebra needs block_sizes".into()))?;
            if sizes.iter().sum::<usize>() != spec.dim {
                return Err(Error::MalformedAlgebra("block sizes do not add up to dim".into()));
            }
            sizes
        }
    };
    let weights: Vec<T> = match (&spec.trace_weights, spec.kind) {
        (_, AlgebraKind::Full) => vec![T::one()],
        (Some(w), _) => w.iter().map(|&x| T::lit(x)).collect(),
        (None, _) => vec![T::one() / T::lit(sizes.len() as f64); sizes.len()],
    };
    BAlgebra::build(spec.kind, sizes, weights, spec.normalize)
}

pub fn matrix_from_json<T: Real>(m: &MatrixJson) -> Result<CMat<T>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::Parse("matrix is not square".into()));
    }
    let data = m.iter().flatten().map(|[re, im]| C::new(T::lit(*re), T::lit(*im))).collect();
    Ok(CMat::from_rows(n, data))
}

pub fn matrix_to_json<T: Real>(m: &CMat<T>) -> MatrixJson {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| { let z = m.get(i, j); [z.re.to_f64_lossy(), z.im.to_f64_lossy()] }).collect())
        .collect()
}

/// Builds the variance maps listed in the spec.
pub fn make_etas<T: Real>(alg: &Arc<BAlgebra<T>>, spec: &AlgebraSpec) -> Result<Vec<CPMap<T>>> {
    spec.etas
        .iter()
        .map(|k| {
            let ops = k
                .kraus
                .iter()
                .map(|m| BElem::from_dense(alg, &matrix_from_json(m)?))
                .collect::<Result<Vec<_>>>()?;
            CPMap::new(alg, ops)
        })
        .collect()
}
