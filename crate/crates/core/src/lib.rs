//! Statistical evaluation of "suspicious coincidences" between a person's
//! shifts and incidents on a ward.
//!
//! The same roster can be analysed in several defensible ways, and they give
//! very different numbers:
//!
//! * [`frequentist`]: hypergeometric tests conditional on the ward totals,
//!   and ways of combining wards (pooling, convolution, Fisher's method).
//! * [`poisson`]: Poisson incident model with a likelihood ratio for a raised
//!   suspect intensity, and the exact conditional binomial test.
//! * [`bayes`]: prior odds updated by independent likelihood ratios.
//! * [`relative_risk`]: Monte Carlo calibration of the largest relative risk
//!   in a ward.
//!
//! [`report`] renders any of these with their caveats, and
//! [`reproduce`] recomputes every figure for the built-in reference roster.
//!
//! ```
//! use coincidence::case::{builtin_case, Variant};
//! use coincidence::frequentist::convolved_sum_test;
//!
//! let case = builtin_case(Variant::Corrected);
//! let t = convolved_sum_test(&case, &["RKZ-41", "RKZ-42"]).unwrap();
//! assert_eq!(format!("{:.3}", t.value()), "0.022");
//! ```
//!
//! The `book/` directory holds a guide to the methods; its chapters are
//! compiled as doctests of this crate.

pub mod bayes;
pub mod case;
pub mod distributions;
pub mod error;
pub mod frequentist;
pub mod poisson;
pub mod relative_risk;
pub mod report;
pub mod reproduce;

pub use error::{Error, Result};

// Book chapters, so `cargo test --doc` runs their snippets.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/case-files.md")]
    mod case_files {}
    #[doc = include_str!("../../../book/src/conditional-tests.md")]
    mod conditional_tests {}
    #[doc = include_str!("../../../book/src/combining-wards.md")]
    mod combining_wards {}
    #[doc = include_str!("../../../book/src/likelihood-ratios.md")]
    mod likelihood_ratios {}
    #[doc = include_str!("../../../book/src/bayesian-chaining.md")]
    mod bayesian_chaining {}
    #[doc = include_str!("../../../book/src/relative-risk.md")]
    mod relative_risk {}
    #[doc = include_str!("../../../book/src/reproduction.md")]
    mod reproduction {}
}
