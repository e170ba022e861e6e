//! Spectral learning of rational series from Hankel matrices, with
//! dimension-free concentration bounds on the Hankel estimation error.
//!
//! The pipeline: a [`LinearRepresentation`] defines a series `r(u) = Iᵀ M_u T`;
//! [`sample`] draws strings from it when it is a probabilistic automaton;
//! [`empirical_hankel`] builds the (standard, prefix or factor) Hankel matrix
//! of a sample; [`learn`] recovers a representation by truncated SVD; the
//! [`bounds`] module says how far the empirical Hankel matrix can be from the
//! exact one.
//!
//! ```
//! use spectral_hankel::{bounds, Alphabet, LinearRepresentation, Mode};
//! use nalgebra::{DMatrix, DVector};
//!
//! // p(a^n) = 0.5^(n+1)
//! let rep = LinearRepresentation::new(
//!     Alphabet::new(["a"])?,
//!     DVector::from_element(1, 1.0),
//!     vec![DMatrix::from_element(1, 1, 0.5)],
//!     DVector::from_element(1, 0.5),
//! )?;
//! assert_eq!(rep.evaluate(&[0, 0])?, 0.125);
//!
//! let s2 = rep.moment(2, Mode::Standard, 0.0)?;
//! let report = bounds::bound_standard(s2, 20_000, 0.05)?;
//! assert!(report.value < 0.05);
//! # Ok::<(), spectral_hankel::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod hankel;
pub mod io;
pub mod lang;
pub mod linalg;
pub mod sampling;
pub mod spectral;
pub mod wfa;

pub use error::{Error, Result};
pub use hankel::{
    dilate, empirical_hankel, exact_hankel, induced_norms, per_string_hankel, spectral_norm_diff,
    FactoredHankel, InducedNorms, SparseHankel,
};
pub use lang::{factor_occurrences, is_prefix, Alphabet, Basis, Word};
pub use linalg::NormEstimate;
pub use sampling::{empirical_distribution, sample, Sample};
pub use spectral::{
    extract_representation, l1_distance_upto, learn, learn_from_exact, stewart_bound,
    subspace_distance, truncated_svd, LearnedModel, SvdResult,
};
pub use wfa::{LinearRepresentation, Mode, PfaForm, ValidationReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/representations.md")]
    mod representations {}
    #[doc = include_str!("../../../book/src/hankel.md")]
    mod hankel {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
}
