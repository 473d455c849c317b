//! The `τ⊗τ` Poincaré inequality fails over `B = c₀(ℕ)~`.
//!
//! `B` is truncated to `ℂ^{m+1}`: slots `1..=m` carry the projections `e_n`
//! with `τ(e_n) = (6/π²)/n²`, slot `0` is a remainder projection absorbing the
//! leftover trace mass. The polynomials `P_n = Σ_{k≤n} k e_k X e_k` only touch
//! `e_1..e_n`, so every table entry is exact rather than a truncation
//! approximation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::balgebra::{BAlgebra, BElem, CPMap};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVec};
use crate::ncpoly::{fdq, NCPoly, Word};
use crate::scalar::{Real, C};

#[derive(Debug, Clone)]
pub struct CESpace<T> {
    m: usize,
    alg: Arc<BAlgebra<T>>,
    fock: Arc<FockSpace<T>>,
}

/// `6/π²`.
pub fn base_weight<T: Real>() -> T {
    T::lit(6.0 / (std::f64::consts::PI * std::f64::consts::PI))
}

pub fn build_ce_space<T: Real>(m: usize) -> Result<CESpace<T>> {
    if m == 0 {
        return Err(Error::EmptyAlgebra);
    }
    let c = base_weight::<T>();
    let mut weights: Vec<T> = (0..=m).map(|n| if n == 0 { T::zero() } else { c / T::lit((n * n) as f64) }).collect();
    let used = weights.iter().fold(T::zero(), |a, &w| a + w);
    weights[0] = T::one() - used;
    let alg = BAlgebra::diagonal(weights)?;
    let fock = FockSpace::new(&alg, vec![CPMap::identity(&alg)], 2)?;
    Ok(CESpace { m, alg, fock })
}

impl<T: Real> CESpace<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn algebra(&self) -> &Arc<BAlgebra<T>> {
        &self.alg
    }

    pub fn fock(&self) -> &Arc<FockSpace<T>> {
        &self.fock
    }

    pub fn eta(&self) -> &CPMap<T> {
        &self.fock.etas()[0]
    }

    /// `τ(e_n)`; `n = 0` is the remainder.
    pub fn weight(&self, n: usize) -> T {
        self.alg.trace_weights()[n]
    }

    /// The projection `e_n`; `n = 0` is the remainder.
    pub fn e(&self, n: usize) -> Result<BElem<T>> {
        if n > self.m {
            return Err(Error::TruncationExceeded { n, m: self.m });
        }
        let mut entries = vec![C::new(T::zero(), T::zero()); self.m + 1];
        entries[n] = C::new(T::one(), T::zero());
        BElem::diag(&self.alg, &entries)
    }

    /// `P_n(X) = Σ_{k=1}^n k e_k X e_k`.
    pub fn ce_poly(&self, n: usize) -> Result<NCPoly<T>> {
        if n > self.m {
            return Err(Error::TruncationExceeded { n, m: self.m });
        }
        let words = (1..=n)
            .map(|k| {
                let ek = self.e(k)?;
                Word::new(vec![0], vec![ek.scale(C::new(T::lit(k as f64), T::zero())), ek])
            })
            .collect::<Result<Vec<_>>>()?;
        NCPoly::from_words(&self.alg, 1, words)
    }

    /// `bX − Xb`.
    pub fn commutator(&self, b: &BElem<T>) -> Result<NCPoly<T>> {
        let x = NCPoly::var(&self.alg, 1, 0)?;
        x.lmul_b(b).checked_sub(&x.rmul_b(b))
    }

    /// One table row, from the Fock engine.
    pub fn row(&self, n: usize) -> Result<CERow<T>> {
        let p = self.ce_poly(n)?;
        let mean = self.fock.expect(&p)?;
        let centered = p.checked_sub(&NCPoly::constant(&self.alg, 1, mean))?;
        let lhs_sq = self.fock.norm_sq_tau(&centered)?;
        let dp = fdq(&p, 0)?;
        let rhs_sq = self.fock.inner_tau_tau(&dp, &dp)?.re;
        let c = base_weight::<T>();
        let harmonic = (1..=n).fold(T::zero(), |a, k| a + T::one() / T::lit((k * k) as f64));
        Ok(CERow {
            n,
            lhs_sq,
            rhs_sq,
            min_c: (lhs_sq / rhs_sq).sqrt(),
            closed_form_lhs: c * T::lit(n as f64),
            closed_form_rhs: c * c * harmonic,
        })
    }

    pub fn ce_table(&self, n_max: usize) -> Result<Vec<CERow<T>>> {
        (1..=n_max).into_par_iter().map(|n| self.row(n)).collect()
    }

    /// Largest modulus of a remainder-slot entry among all tensor factors of
    /// `(P_n − E[P_n])(S)1` and of the legs of `∂P_n`.
    pub fn remainder_mass(&self, n: usize) -> Result<T> {
        let p = self.ce_poly(n)?;
        let v = self.fock.apply_poly(&p, &self.fock.vacuum())?;
        let mut worst = vec_remainder(&v);
        for (l, r) in fdq(&p, 0)?.pairs() {
            for c in l.coeffs().iter().chain(r.coeffs()) {
                worst = worst.max(c.blocks()[0].get(0, 0).norm());
            }
        }
        Ok(worst)
    }

    /// `‖bX − Xb‖_τ²`; the commutator is a nonzero operator of zero τ-norm.
    pub fn commutation_residual(&self, b: &BElem<T>) -> Result<T> {
        self.fock.norm_sq_tau(&self.commutator(b)?)
    }

    /// `P_b = bX − Xb` lies in the kernel of evaluation but `∂P_b = b⊗1 − 1⊗b`
    /// does not vanish in `L²(τ⊗τ)`.
    pub fn conjugate_kernel_check(&self, b: &BElem<T>) -> Result<KernelCheck<T>> {
        let p = self.commutator(b)?;
        let dp = fdq(&p, 0)?;
        let poly_sq = self.fock.norm_sq_tau(&p)?;
        let tensor_sq = self.fock.inner_tau_tau(&dp, &dp)?.re;
        Ok(KernelCheck { poly_norm: poly_sq.max(T::zero()).sqrt(), tensor_norm: tensor_sq.max(T::zero()).sqrt() })
    }
}

fn vec_remainder<T: Real>(v: &FockVec<T>) -> T {
    let mut worst = T::zero();
    for tensors in v.components().values() {
        for t in tensors {
            for b in t {
                worst = worst.max(b.blocks()[0].get(0, 0).norm());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CERow<T> {
    pub n: usize,
    pub lhs_sq: T,
    pub rhs_sq: T,
    #[serde(rename = "min_C")]
    pub min_c: T,
    pub closed_form_lhs: T,
    pub closed_form_rhs: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheck<T> {
    pub poly_norm: T,
    pub tensor_norm: T,
}

/// Least-squares slope of `log min_C` against `log n` over rows with
/// `lo ≤ n ≤ hi`; `None` with fewer than two such rows.
pub fn loglog_slope<T: Real>(rows: &[CERow<T>], lo: usize, hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| (lo..=hi).contains(&r.n))
        .map(|r| ((r.n as f64).ln(), r.min_c.to_f64_lossy().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct CETable {
    pub m: usize,
    pub rows: Vec<CERow<f64>>,
    /// Fit over `n ∈ [5, n_max]`.
    pub slope: Option<f64>,
}

pub fn ce_report(m: usize, n_max: usize) -> Result<CETable> {
    let space = build_ce_space::<f64>(m)?;
    let rows = space.ce_table(n_max)?;
    let slope = loglog_slope(&rows, 5, n_max);
    Ok(CETable { m, rows, slope })
}

impl CETable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_and_projections() {
        let s = build_ce_space::<f64>(1).unwrap();
        let c = base_weight::<f64>();
        assert!((s.weight(1) - c).abs() < 1e-16 && (s.weight(0) - (1.0 - c)).abs() < 1e-16);
        let s = build_ce_space::<f64>(5).unwrap();
        assert!((&s.e(1).unwrap() * &s.e(2).unwrap()).is_exact_zero());
        assert!((s.e(2).unwrap().tau().re - c / 4.0).abs() < 1e-16);
        assert_eq!(s.e(6).unwrap_err(), Error::TruncationExceeded { n: 6, m: 5 });
    }

    #[test]
    fn polynomial_shape() {
        let s = build_ce_space::<f64>(6).unwrap();
        let p = s.ce_poly(4).unwrap();
        assert_eq!((p.terms().len(), p.degree()), (4, 1));
        assert!(s.fock().expect(&p).unwrap().is_exact_zero());
        let dp = fdq(&p, 0).unwrap();
        for (l, r) in dp.pairs() {
            let k = (1..=4).find(|&k| r.coeffs()[0].blocks()[k].get(0, 0).re == 1.0).unwrap();
            assert_eq!(l.coeffs()[0], s.e(k).unwrap().scale(C::new(k as f64, 0.0)));
        }
        assert_eq!(s.ce_poly(7).unwrap_err(), Error::TruncationExceeded { n: 7, m: 6 });
    }

    #[test]
    fn first_rows() {
        let s = build_ce_space::<f64>(10).unwrap();
        let c = base_weight::<f64>();
        let r1 = s.row(1).unwrap();
        assert!((r1.lhs_sq - c).abs() < 1e-14);
        assert!((r1.rhs_sq - c * c).abs() < 1e-14);
        assert!((r1.min_c - (std::f64::consts::PI.powi(2) / 6.0).sqrt()).abs() < 1e-12);
        assert!((s.row(4).unwrap().lhs_sq - 4.0 * c).abs() < 1e-12);
        for r in s.ce_table(10).unwrap() {
            assert!(r.rhs_sq <= c + 1e-12);
        }
        assert_eq!(s.remainder_mass(10).unwrap(), 0.0);
    }

    #[test]
    fn commutator_is_tau_null() {
        let s = build_ce_space::<f64>(4).unwrap();
        assert_eq!(s.commutation_residual(&BElem::one(s.algebra())).unwrap(), 0.0);
        assert!(s.commutation_residual(&s.e(1).unwrap()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kernel_obstruction() {
        let s = build_ce_space::<f64>(4).unwrap();
        let w1 = s.weight(1);
        let k = s.conjugate_kernel_check(&s.e(1).unwrap()).unwrap();
        assert!(k.poly_norm < 1e-10);
        assert!((k.tensor_norm.powi(2) - 2.0 * (w1 - w1 * w1)).abs() < 1e-12);
        let k = s.conjugate_kernel_check(&BElem::one(s.algebra())).unwrap();
        assert_eq!((k.poly_norm, k.tensor_norm), (0.0, 0.0));
        let b = &s.e(1).unwrap() - &s.e(2).unwrap();
        let k = s.conjugate_kernel_check(&b).unwrap();
        assert!(k.poly_norm < 1e-10 && k.tensor_norm > 0.1);
    }

    #[test]
    fn csv_header() {
        let t = ce_report(3, 2).unwrap();
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("n,lhs_sq,rhs_sq,min_C,closed_form_lhs,closed_form_rhs\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
