//! Command-line front end: configs, data files, experiment runs and
//! output files on top of `augment-core`.

// negated comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod experiments;
pub mod runner;
pub mod verify;
