//! Fixed-point certification in perturbed metric spaces.
//!
//! A perturbed metric space is a triple `(X, D, P)` where `D` and `P` are
//! nonnegative functions on `X × X` and the difference `d = D − P` is a
//! metric. This crate audits that structure over sampled points, checks
//! φ-perturbed, perturbed-Banach and perturbed-Kannan contraction
//! conditions, and runs Picard iteration with a-priori error bounds.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axioms;
pub mod catalog;
pub mod cli;
pub mod comparison;
pub mod config;
pub mod contraction;
pub mod error;
pub mod expr;
pub mod pipeline;
pub mod report;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
