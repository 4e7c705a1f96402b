//! Numerical laboratory for Q-valued maps that are critical for the
//! Dirichlet energy: variations, Carleman-type inequalities, frequency and
//! vanishing order, Weiss energy and the epiperimetric inequality.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod carleman;
pub mod cutoff;
pub mod error;
pub mod fields;
pub mod frequency;
pub mod par;
pub mod poly;
pub mod qcore;
pub mod quadrature;
pub mod report;
pub mod stats;
pub mod suite;
pub mod variational;
pub mod weiss2d;

pub use error::{Error, Result};
pub use fields::{FieldSpec, QField};
pub use qcore::QPoint;
pub use quadrature::{QuadratureSpec, Region};
pub use report::{CheckReport, Verdict};
