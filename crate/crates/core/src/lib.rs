//! Operator-valued free probability over finite-dimensional coefficient
//! algebras.
//!
//! The engine builds B-valued semicircular systems on a truncated full Fock
//! space, the B-valued Chebyshev family, free difference quotients and the
//! divergence operator, and evaluates the free Poincaré inequality and its
//! failure for the `τ⊗τ` norm.
//!
//! Everything is generic over the real scalar type (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod amplify;
pub mod balgebra;
pub mod calculus;
pub mod chebyshev;
pub mod counterexample;
pub mod error;
pub mod fock;
pub mod mat;
pub mod moments;
pub mod ncpoly;
pub mod random;
pub mod scalar;
pub mod verify;

pub use balgebra::{make_algebra, make_etas, AlgebraKind, AlgebraSpec, BAlgebra, BElem, CPMap};
pub use chebyshev::{cheb, cheb_decompose, cheb_decompose_single, cheb_fdq, make_texpr, ChebProduct, ChebSpec, Decomp, Signature, TExpr};
pub use error::{Error, Result};
pub use fock::{FockSpace, FockVec};
pub use mat::CMat;
pub use ncpoly::{fdq, mul_x, BiTensor, NCPoly, Word};
pub use scalar::{Real, C};

pub type Complex = C<f64>;
pub type Algebra = BAlgebra<f64>;
pub type Elem = BElem<f64>;
pub type Cp = CPMap<f64>;
pub type Poly = NCPoly<f64>;
pub type Tensor = BiTensor<f64>;
pub type Fock = FockSpace<f64>;
pub type Vector = FockVec<f64>;
pub type Spec = ChebSpec<f64>;
pub type Product = ChebProduct<f64>;
