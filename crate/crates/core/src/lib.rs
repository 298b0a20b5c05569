//! Domain adaptation for regression by iterative self-labeling, with kernel
//! mean matching and transfer component analysis for comparison, plus the
//! numerics, data generators and experiment harness around them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adaptation;
pub mod cli;
pub mod dataset;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod learner;
pub mod numerics;
pub mod preprocessing;

pub use dataset::{Dataset, LabeledSample};
pub use error::{Error, Result};
