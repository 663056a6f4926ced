//! Verification engine for gradient q-solitons `Hess f = λg + ½q`.
//!
//! Metrics are given on coordinate charts and differentiated exactly through
//! truncated Taylor jets. On top of the curvature pipeline sit pointwise
//! residual checks, geodesic probes, and sublevel-set volume estimates, each
//! producing a [`report::CheckReport`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod check;
pub mod error;
pub mod expr;
pub mod fd;
pub mod fields;
pub mod format;
pub mod geodesic;
pub mod geometry;
pub mod jet;
pub mod library;
pub mod linalg;
pub mod probes;
pub mod qspec;
pub mod report;
pub mod ricatti;
pub mod runner;
pub mod sampling;
pub mod soliton;
pub mod tensor;
pub mod tolerances;
pub mod verify;
pub mod volume;

pub use chart::{Chart, JetRegime};
pub use check::Check;
pub use error::{Error, Result};
pub use expr::Expr;
pub use fields::{ScalarField, TensorField};
pub use qspec::QSpec;
pub use report::{CheckReport, Verdict};
pub use soliton::SolitonData;
