//! Seeded identity suites over a configurable coefficient algebra.
//!
//! Every trial draws its inputs from its own RNG seeded by
//! [`trial_seed`]`(run seed, identity stream, trial index)`, so a failing row
//! is replayed from the `trial_seed` it reports. Rows follow a fixed suite and
//! identity order and trials are aggregated by index, which makes reports
//! byte-identical for identical configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplify::{amplified_cheb_block, amplify, embed_corner, padded_product_residual};
use crate::balgebra::{make_algebra, make_etas, AlgebraKind, AlgebraSpec, BAlgebra};
use crate::calculus::{product_rule_residuals, ibp_residual, number_op, poincare_report, stein_residual};
use crate::chebyshev::{cheb, cheb_decompose, cheb_fdq, ChebProduct, ChebSpec};
use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::moments::expect_oracle;
use crate::ncpoly::{fdq, NCPoly};
use crate::random::{
    random_cheb_product, random_cheb_spec, random_composition, random_normalized, random_poly, random_tensor, random_word,
};
use crate::scalar::C;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// Coefficient scale of random inputs; keeps entries O(1) so absolute
/// tolerances are meaningful.
const SCALE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Moments,
    Chebyshev,
    Stein,
    Divergence,
    Ibp,
    Poincare,
    Amplify,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Moments, Suite::Chebyshev, Suite::Stein, Suite::Divergence, Suite::Ibp, Suite::Poincare, Suite::Amplify];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::Chebyshev => "chebyshev",
            Suite::Stein => "stein",
            Suite::Divergence => "divergence",
            Suite::Ibp => "ibp",
            Suite::Poincare => "poincare",
            Suite::Amplify => "amplify",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Suite selection: one suite or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    One(Suite),
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(Selection::All)
        } else {
            s.parse().map(Selection::One)
        }
    }
}

fn default_algebra() -> AlgebraSpec {
    AlgebraSpec { kind: AlgebraKind::Full, dim: 2, block_sizes: None, trace_weights: None, normalize: false, etas: Vec::new() }
}

fn default_depth() -> usize {
    6
}

fn default_seed() -> u64 {
    42
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_gap_tol() -> f64 {
    DEFAULT_GAP_TOL
}

/// Run configuration. Without explicit `etas` in the algebra spec, `d`
/// (default 2) star-closed variance maps with `max_abs(η(1)) = 1` are drawn
/// from the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_algebra")]
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "default_depth")]
    pub fock_depth: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    /// Per-suite tolerance replacing both defaults for that suite.
    #[serde(default)]
    pub suite_tol: BTreeMap<Suite, f64>,
    /// Trials per identity; `None` uses each identity's default.
    #[serde(default)]
    pub trials: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Builds the Fock space the suites run on.
    pub fn space(&self) -> Result<Arc<FockSpace<f64>>> {
        let alg: Arc<BAlgebra<f64>> = make_algebra(&self.algebra)?;
        let etas = if self.algebra.etas.is_empty() {
            let d = self.d.unwrap_or(2);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(self.seed, u64::MAX, 0));
            (0..d).map(|_| random_normalized(&alg, &mut rng, 2)).collect()
        } else {
            let etas = make_etas(&alg, &self.algebra)?;
            if let Some(d) = self.d.filter(|&d| d != etas.len()) {
                return Err(Error::VariableCountMismatch { left: d, right: etas.len() });
            }
            etas
        };
        if self.fock_depth < 2 {
            return Err(Error::DepthExceeded { needed: 2, depth: self.fock_depth });
        }
        FockSpace::new(&alg, etas, self.fock_depth)
    }
}

/// SplitMix64 finalizer over the run seed, identity stream and trial index.
pub fn trial_seed(seed: u64, stream: u64, trial: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tolerance class: exact algebraic identities, or the Poincaré rows whose
/// quantities are sums of squared norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Identity,
    Gap,
}

type TrialFn = fn(&Arc<FockSpace<f64>>, &mut ChaCha8Rng) -> Result<Option<f64>>;

struct Check {
    suite: Suite,
    name: &'static str,
    kind: Kind,
    trials: usize,
    run: TrialFn,
}

const CHECKS: &[Check] = &[
    Check { suite: Suite::Moments, name: "fock_vs_oracle", kind: Kind::Identity, trials: 100, run: t_fock_vs_oracle },
    Check { suite: Suite::Chebyshev, name: "closed_fdq", kind: Kind::Identity, trials: 50, run: t_closed_fdq },
    Check { suite: Suite::Chebyshev, name: "vacuum_monomial", kind: Kind::Identity, trials: 50, run: t_vacuum },
    Check { suite: Suite::Chebyshev, name: "orthogonality", kind: Kind::Identity, trials: 50, run: t_orthogonality },
    Check { suite: Suite::Chebyshev, name: "decompose_roundtrip", kind: Kind::Identity, trials: 30, run: t_roundtrip },
    Check { suite: Suite::Stein, name: "stein", kind: Kind::Identity, trials: 50, run: t_stein },
    Check { suite: Suite::Divergence, name: "product_rule", kind: Kind::Identity, trials: 30, run: t_product_rule },
    Check { suite: Suite::Divergence, name: "number_operator", kind: Kind::Identity, trials: 30, run: t_number_op },
    Check { suite: Suite::Divergence, name: "mixed_eigenvalue", kind: Kind::Identity, trials: 30, run: t_mixed_eigen },
    Check { suite: Suite::Ibp, name: "integration_by_parts", kind: Kind::Identity, trials: 30, run: t_ibp },
    Check { suite: Suite::Poincare, name: "poincare_gap", kind: Kind::Gap, trials: 100, run: t_poincare },
    Check { suite: Suite::Poincare, name: "homogeneous_sharpness", kind: Kind::Gap, trials: 30, run: t_sharpness },
    Check { suite: Suite::Amplify, name: "block_chebyshev", kind: Kind::Identity, trials: 20, run: t_block },
    Check { suite: Suite::Amplify, name: "padded_product", kind: Kind::Identity, trials: 20, run: t_padded },
    Check { suite: Suite::Amplify, name: "corner_identity", kind: Kind::Identity, trials: 10, run: t_corner },
    Check { suite: Suite::Amplify, name: "norm_ratio", kind: Kind::Identity, trials: 10, run: t_ratio },
];

/// One report line. For `poincare_gap` the residual is the negated smallest
/// gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub suite: Suite,
    pub identity: String,
    pub trials: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_trial: Option<usize>,
    /// Seed reproducing the worst trial's inputs.
    pub trial_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the selected suites.
pub fn run(config: &RunConfig, selection: Selection) -> Result<Report> {
    let space = config.space()?;
    let mut rows = Vec::new();
    for (stream, check) in CHECKS.iter().enumerate() {
        if let Selection::One(s) = selection {
            if s != check.suite {
                continue;
            }
        }
        let trials = config.trials.unwrap_or(check.trials);
        let results = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(config.seed, stream as u64, t as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (check.run)(&space, &mut rng).map(|r| (t, seed, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst: Option<(usize, u64, f64)> = None;
        for (t, seed, r) in results {
            let Some(r) = r else { continue };
            // NaN residuals count as worst.
            if worst.is_none_or(|(_, _, w)| r > w || r.is_nan() && !w.is_nan()) {
                worst = Some((t, seed, r));
            }
        }
        let tol = config.suite_tol.get(&check.suite).copied().unwrap_or(match check.kind {
            Kind::Identity => config.tol,
            Kind::Gap => config.gap_tol,
        });
        let max_residual = worst.map_or(0.0, |w| w.2);
        rows.push(ReportRow {
            suite: check.suite,
            identity: check.name.to_string(),
            trials,
            max_residual,
            tol,
            pass: max_residual <= tol,
            worst_trial: worst.map(|w| w.0),
            trial_seed: worst.map(|w| w.1),
        });
    }
    Ok(Report { seed: config.seed, rows })
}

fn letter(fs: &FockSpace<f64>, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(0..fs.d())
}

/// Alternating product of the given total degree; a single factor when `d = 1`.
fn alt_product(fs: &FockSpace<f64>, total: usize, rng: &mut ChaCha8Rng) -> ChebProduct<f64> {
    let degrees = if fs.d() >= 2 { random_composition(total, rng) } else { vec![total] };
    random_cheb_product(fs.algebra(), fs.d(), &degrees, rng, SCALE)
}

fn t_fock_vs_oracle(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let deg = rng.gen_range(0..=fs.depth().min(6));
    let w = random_word(fs.algebra(), fs.d(), deg, rng, 1.0);
    let p = NCPoly::from_word(fs.algebra(), fs.d(), w)?;
    Ok(Some((&fs.expect(&p)? - &expect_oracle(&p, fs.etas())?).max_abs()))
}

fn t_closed_fdq(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let n = rng.gen_range(1..=5);
    let spec = random_cheb_spec(fs.algebra(), letter(fs, rng), n, rng, SCALE);
    let direct = fdq(&cheb(&spec, fs.etas())?, spec.letter())?;
    Ok(Some(cheb_fdq(&spec, fs.etas())?.sub(&direct)?.residual_norm()))
}

fn t_vacuum(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let total = rng.gen_range(1..=fs.depth().min(5));
    let prod = alt_product(fs, total, rng);
    let v = fs.apply_poly(&prod.poly(fs.etas())?, &fs.vacuum())?;
    Ok(Some(v.sub(&fs.from_word(&prod.leading_word())?)?.residual_norm()))
}

fn t_orthogonality(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let max = fs.depth().min(5);
    let a = alt_product(fs, rng.gen_range(1..=max), rng);
    let b = loop {
        let b = alt_product(fs, rng.gen_range(1..=max), rng);
        if b.letters() != a.letters() || b.degrees() != a.degrees() {
            break b;
        }
    };
    let va = fs.apply_poly(&a.poly(fs.etas())?, &fs.vacuum())?;
    let vb = fs.apply_poly(&b.poly(fs.etas())?, &fs.vacuum())?;
    Ok(Some(fs.fock_inner(&va, &vb)?.max_abs()))
}

fn t_roundtrip(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let p = random_poly(fs.algebra(), fs.d(), 3, 3, rng, SCALE);
    let dec = cheb_decompose(&p, fs.etas())?;
    Ok(Some(dec.reconstruct(fs.d(), fs.etas())?.checked_sub(&p)?.residual_norm()))
}

fn t_stein(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let p = random_poly(fs.algebra(), fs.d(), fs.depth().min(5) - 1, 3, rng, SCALE);
    let (l, r) = stein_residual(fs, letter(fs, rng), &p)?;
    Ok(Some((l - r).norm()))
}

fn t_product_rule(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let a = random_poly(fs.algebra(), fs.d(), 2, 2, rng, SCALE);
    let t = random_tensor(fs.algebra(), fs.d(), 2, 2, rng, SCALE);
    let (l, r) = product_rule_residuals(fs, letter(fs, rng), &a, &t)?;
    Ok(Some(l.max(r)))
}

fn t_number_op(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let n = rng.gen_range(1..=fs.depth().min(5));
    let spec = random_cheb_spec(fs.algebra(), letter(fs, rng), n, rng, SCALE);
    let u = cheb(&spec, fs.etas())?;
    let got = number_op(fs, spec.letter(), &u)?;
    Ok(Some(got.checked_sub(&u.scale(C::new(n as f64, 0.0)))?.residual_norm()))
}

fn t_mixed_eigen(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let prod = alt_product(fs, rng.gen_range(1..=fs.depth().min(5)), rng);
    let j = letter(fs, rng);
    let eig: usize = prod.factors().iter().filter(|f| f.letter() == j).map(ChebSpec::degree).sum();
    let p = prod.poly(fs.etas())?;
    let got = number_op(fs, j, &p)?;
    Ok(Some(got.checked_sub(&p.scale(C::new(eig as f64, 0.0)))?.residual_norm()))
}

fn t_ibp(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let leg = (fs.depth() / 2).min(2);
    let t = random_tensor(fs.algebra(), fs.d(), leg, 2, rng, SCALE);
    let xi = random_poly(fs.algebra(), fs.d(), leg + 1, 3, rng, SCALE);
    let (l, r) = ibp_residual(fs, letter(fs, rng), &t, &xi)?;
    Ok(Some((l - r).norm()))
}

fn t_poincare(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let p = random_poly(fs.algebra(), fs.d(), fs.depth().min(4), 3, rng, SCALE);
    Ok(Some(-poincare_report(fs, &p)?.gap))
}

fn t_sharpness(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let k = rng.gen_range(1..=fs.depth().min(4));
    let p = alt_product(fs, k, rng).poly(fs.etas())?;
    let rep = poincare_report(fs, &p)?;
    Ok(Some((rep.rhs_sq() - k as f64 * rep.lhs_sq).abs()))
}

fn t_block(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let blocks = rng.gen_range(1..=3);
    let order = blocks + rng.gen_range(0..=1);
    let (j, n) = (letter(fs, rng), rng.gen_range(1..=4));
    let specs: Vec<_> = (0..blocks).map(|_| random_cheb_spec(fs.algebra(), j, n, rng, SCALE)).collect();
    let ctx = amplify(fs.algebra(), fs.etas(), order)?;
    Ok(Some(amplified_cheb_block(&ctx, &specs)?))
}

fn t_padded(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let count = rng.gen_range(1..=3);
    let shape = alt_product(fs, rng.gen_range(1..=3), rng);
    let products = (0..count)
        .map(|_| {
            let factors = shape
                .factors()
                .iter()
                .map(|f| random_cheb_spec(fs.algebra(), f.letter(), f.degree(), rng, SCALE))
                .collect();
            ChebProduct::new(factors)
        })
        .collect::<Result<Vec<_>>>()?;
    let ctx = amplify(fs.algebra(), fs.etas(), count)?;
    Ok(Some(padded_product_residual(&ctx, &products)?))
}

fn corner_poly(fs: &FockSpace<f64>, rng: &mut ChaCha8Rng) -> NCPoly<f64> {
    random_poly(fs.algebra(), fs.d(), 3, 2, rng, SCALE)
}

fn t_corner(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    Ok(Some(embed_corner(fs, &corner_poly(fs, rng))?.residual))
}

fn t_ratio(fs: &Arc<FockSpace<f64>>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let rep = embed_corner(fs, &corner_poly(fs, rng))?;
    let target = 1.0 / rep.order as f64;
    Ok(rep.norm_ratio_by_letter.iter().flatten().map(|r| (r - target).abs()).reduce(f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let c = RunConfig::default();
        assert_eq!((c.fock_depth, c.seed, c.d, c.tol, c.gap_tol), (6, 42, None, 1e-10, 1e-9));
        assert_eq!(c.space().unwrap().d(), 2);
        assert!(RunConfig::from_json("{\"depth\": 3}").is_err());
        assert!(RunConfig::from_json("{not json").is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> =
            (0..4).flat_map(|a| (0..50).map(move |t| trial_seed(42, a, t))).collect();
        assert_eq!(s.len(), 200);
    }

    #[test]
    fn selection_parsing() {
        assert_eq!("all".parse::<Selection>().unwrap(), Selection::All);
        assert_eq!("ibp".parse::<Selection>().unwrap(), Selection::One(Suite::Ibp));
        assert!("nope".parse::<Selection>().is_err());
    }

    #[test]
    fn small_run_is_reproducible() {
        let config = RunConfig { trials: Some(3), ..RunConfig::default() };
        let a = run(&config, Selection::One(Suite::Chebyshev)).unwrap();
        let b = run(&config, Selection::One(Suite::Chebyshev)).unwrap();
        assert!(a.pass(), "{a:?}");
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 4);
    }
}
