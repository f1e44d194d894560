//! Construction and mechanical verification of the Ferus–Karcher–Münzner (FKM)
//! isoparametric hypersurfaces with multiplicity pair (7,8).
//!
//! The crate builds the two Clifford systems on R^32 from octonion
//! multiplication, evaluates the associated Cartan–Münzner quartic, samples
//! points of the focal manifolds, and checks every algebraic structure the
//! (7,8) classification rests on: Hurwitz matrix equations, the
//! Cartan–Münzner PDEs, the Ozeki–Takeuchi block identities, r-nullity,
//! mirror-point data conversions, kernel-dimension theorems, and rank/kernel
//! bounds of block pencils.
//!
//! All linear algebra is field-generic: every check can run over binary64
//! or over the exact field Q(√2), where residuals are required to vanish
//! identically rather than within a tolerance.

pub mod clifford;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod mat;
pub mod mirror;
pub mod nullity;
pub mod octonion;
pub mod pencil;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod suites;

pub use error::{Error, Result};
pub use mat::Mat;
pub use scalar::{Exact, Scalar};
