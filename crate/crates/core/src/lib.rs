//! First-price auctions with ambiguity-averse CRRA bidders: equilibrium
//! bidding, nonparametric identification, Bayesian estimation and
//! reserve-price decisions.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod bidding;
pub mod cli;
pub mod config;
pub mod data;
pub mod decision;
pub mod error;
pub mod harness;
pub mod identification;
pub mod inference;
pub mod model;
pub mod pchip;
pub mod quadrature;

pub use error::{Error, Result};
