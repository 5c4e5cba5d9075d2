//! Time-of-arrival operators for a free particle confined to `[-l, l]` with
//! the twisted boundary condition `ψ(l) = e^{2iγ} ψ(-l)`.
//!
//! Start with [`model::PhysicalConfig`] and [`model::BasisSpec`], build a
//! matrix with [`operators::toa_matrix_analytic`], and analyze it with the
//! functions in [`analysis`]. The `toa-box` binary drives the same code from a
//! JSON config; see [`cli`].

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod export;
pub mod kernels;
pub mod model;
pub mod operators;
pub mod quadrature;
pub mod suite;

pub use error::{Error, Result};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/domain.md")]
    mod domain {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
