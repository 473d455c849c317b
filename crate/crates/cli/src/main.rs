//! `opfree`: identity suites, the `τ⊗τ` counterexample table, and Chebyshev
//! decomposition listings.
//!
//! Exit codes: 0 pass, 1 identity failure, 2 configuration or input error,
//! 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use opfree::balgebra::{make_algebra, make_etas, matrix_to_json, AlgebraSpec, MatrixJson};
use opfree::counterexample::ce_report;
use opfree::ncpoly::WordJson;
use opfree::verify::{run, RunConfig, Selection};
use opfree::{cheb_decompose, Algebra, ChebProduct, Elem, Poly};

const DECOMPOSE_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "opfree", version, about = "Operator-valued free probability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run identity suites and report per-identity maximal residuals.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// all, moments, chebyshev, stein, divergence, ibp, poincare or amplify.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces every tolerance of the run.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Tabulate the optimal Poincaré constant for the τ⊗τ norm.
    Counterexample {
        #[arg(long, default_value_t = 50)]
        n_max: usize,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Decompose a serialized polynomial into Chebyshev products.
    Decompose {
        poly: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Identity(String),
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Identity(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Identity(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(
    config: Option<PathBuf>,
    suite: &str,
    trials: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(p) => RunConfig::from_json(&read(&p)?).map_err(config_err)?,
        None => RunConfig::default(),
    };
    let selection: Selection = suite.parse().map_err(config_err)?;
    if trials.is_some() {
        cfg.trials = trials;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol {
        cfg.tol = t;
        cfg.gap_tol = t;
        cfg.suite_tol.clear();
    }
    let report = run(&cfg, selection).map_err(config_err)?;
    let text = match format {
        Format::Csv => report.to_csv().map_err(config_err)?,
        Format::Json => report.to_json() + "\n",
    };
    emit(out.as_deref(), &text)?;
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}/{} residual {:e} at trial seed {:?}", r.suite, r.identity, r.max_residual, r.trial_seed))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Identity(failed.join("\n")))
    }
}

fn counterexample(n_max: usize, m: usize, out: Option<PathBuf>, format: Format) -> Result<(), Failure> {
    let table = ce_report(m, n_max).map_err(config_err)?;
    let text = match format {
        Format::Csv => table.to_csv().map_err(config_err)?,
        Format::Json => table.to_json() + "\n",
    };
    emit(out.as_deref(), &text)?;
    let line = match table.slope {
        Some(s) => format!("log-log slope of min_C over n in [5, {n_max}]: {s:.6}"),
        None => "log-log slope needs n_max >= 6".to_string(),
    };
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyFile {
    algebra: AlgebraSpec,
    #[serde(default)]
    d: Option<usize>,
    terms: Vec<WordJson>,
}

#[derive(Serialize)]
struct FactorListing {
    letter: usize,
    degree: usize,
    pairs: Vec<[MatrixJson; 2]>,
}

#[derive(Serialize)]
struct ProductListing {
    name: String,
    factors: Vec<FactorListing>,
}

#[derive(Serialize)]
struct Listing {
    summary: String,
    scalar: MatrixJson,
    products: Vec<ProductListing>,
    residual: f64,
}

/// `Some(c)` when `b = c·1`.
fn scalar_multiple(b: &Elem) -> Option<opfree::Complex> {
    let m = b.to_dense();
    let c = m.get(0, 0);
    let n = m.dim();
    let ok = (0..n).all(|i| (0..n).all(|j| m.get(i, j) == if i == j { c } else { opfree::Complex::new(0.0, 0.0) }));
    ok.then_some(c)
}

fn render_complex(c: opfree::Complex) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

fn product_name(p: &ChebProduct<f64>) -> String {
    p.factors().iter().map(|f| format!("U_{}(X_{})", f.degree(), f.letter() + 1)).collect::<Vec<_>>().join("·")
}

fn decompose(path: &Path, json: bool) -> Result<(), Failure> {
    let file: PolyFile = serde_json::from_str(&read(path)?).map_err(config_err)?;
    let alg: std::sync::Arc<Algebra> = make_algebra(&file.algebra).map_err(config_err)?;
    let etas = make_etas(&alg, &file.algebra).map_err(config_err)?;
    if etas.is_empty() {
        return Err(Failure::Config("algebra spec lists no variance maps".into()));
    }
    let d = file.d.unwrap_or(etas.len());
    if d != etas.len() {
        return Err(Failure::Config(format!("d = {d} but {} variance maps given", etas.len())));
    }
    let p = Poly::from_json(&alg, d, &file.terms).map_err(config_err)?;
    let dec = cheb_decompose(&p, &etas).map_err(config_err)?;
    let residual = dec.reconstruct(d, &etas).map_err(config_err)?.checked_sub(&p).map_err(config_err)?.residual_norm();

    let mut parts: Vec<String> = dec.products.iter().map(product_name).collect();
    if !dec.scalar.is_exact_zero() {
        parts.push(scalar_multiple(&dec.scalar).map_or_else(|| "b".to_string(), render_complex));
    }
    let summary = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
    let listing = Listing {
        summary,
        scalar: matrix_to_json(&dec.scalar.to_dense()),
        products: dec
            .products
            .iter()
            .map(|p| ProductListing {
                name: product_name(p),
                factors: p
                    .factors()
                    .iter()
                    .map(|f| FactorListing {
                        letter: f.letter() + 1,
                        degree: f.degree(),
                        pairs: f.pairs().iter().map(|(b, c)| [matrix_to_json(&b.to_dense()), matrix_to_json(&c.to_dense())]).collect(),
                    })
                    .collect(),
            })
            .collect(),
        residual,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&listing).expect("listing serializes"));
    } else {
        println!("P = {}", listing.summary);
        println!("scalar: {}", serde_json::to_string(&listing.scalar).expect("matrix serializes"));
        for (k, prod) in listing.products.iter().enumerate() {
            println!("product {}: {}", k + 1, prod.name);
            for f in &prod.factors {
                for (t, [b, c]) in f.pairs.iter().enumerate() {
                    println!(
                        "  X_{} pair {}: {} ⊗ {}",
                        f.letter,
                        t + 1,
                        serde_json::to_string(b).expect("matrix serializes"),
                        serde_json::to_string(c).expect("matrix serializes")
                    );
                }
            }
        }
        println!("reconstruction residual: {residual:e}");
    }
    if residual <= DECOMPOSE_TOL {
        Ok(())
    } else {
        Err(Failure::Identity(format!("reconstruction residual {residual:e} exceeds {DECOMPOSE_TOL:e}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { config, suite, trials, seed, tol, out, format } => {
            verify(config, &suite, trials, seed, tol, out, format)
        }
        Command::Counterexample { n_max, m, out, format } => counterexample(n_max, m, out, format),
        Command::Decompose { poly, json } => decompose(&poly, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
