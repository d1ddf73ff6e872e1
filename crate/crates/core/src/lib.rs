//! Stochastic stabilization of one-dimensional maps.

// range checks are written as `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod experiments;
pub mod maps;
pub mod noise;
pub mod params;
