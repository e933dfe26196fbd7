//! Spectral shift functions, Witten indices and spectral flow for the model
//! operator `D_A = d/dt + A(t)` with matrix-valued `A`.
//!
//! - [`operator`]: Hermitian matrices with cached eigendecompositions.
//! - [`ssf`]: the spectral shift function of a pair by eigenvalue counting and
//!   by the perturbation determinant, trace formula, spectral averaging.
//! - [`model`]: finite-difference discretizations of `D_A`.
//! - [`witten`]: resolvent and semigroup regularized indices.
//! - [`pushnitski`]: the Abel-type transform relating `xi(.; |D*|^2, |D|^2)` to
//!   `xi(.; A+, A-)`, Lebesgue points.
//! - [`flow`]: spectral flow and the index identities.
//! - [`dirac`]: `-i d/dx + f` on a circle.
//!
//! ```
//! use specshift::{ssf_count, HermitianOperator};
//!
//! let h0 = HermitianOperator::from_diag(&[-1.0, 1.0]).unwrap();
//! let h = HermitianOperator::from_diag(&[-2.0, 2.0]).unwrap();
//! let xi = ssf_count(&h0, &h).unwrap();
//! assert_eq!(xi.eval(-1.5), -1.0);
//! assert_eq!(xi.eval(1.5), 1.0);
//! assert_eq!(xi.integral(), 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bidiag;
pub mod dirac;
pub mod error;
pub mod flow;
pub mod line;
pub mod model;
pub mod operator;
pub mod path;
pub mod pushnitski;
pub mod quad;
pub mod scenario;
pub mod ssf;
pub mod step;
pub mod witten;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ssf.md")]
mod book_ssf {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/model.md")]
mod book_model {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/witten.md")]
mod book_witten {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pushnitski.md")]
mod book_pushnitski {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/flow.md")]
mod book_flow {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dirac.md")]
mod book_dirac {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

pub use error::{Error, Result, Warning};
pub use model::DiscretizedDA;
pub use operator::{HermitianOperator, Interval, SpectralSample};
pub use path::{OperatorPath, Profile, ProfileKind};
pub use ssf::{ssf_count, ssf_det};
pub use step::StepFunction;
pub use witten::WittenEstimate;
