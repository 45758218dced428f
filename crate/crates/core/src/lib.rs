//! Minimum-area null homotopies of closed planar curves.
//!
//! A planar curve is lifted into 4-space, where its self-intersections come
//! apart, spanned by a discrete Douglas minimal disk, and followed as the
//! lift height goes to zero. The projected limit disk yields an explicit
//! null homotopy whose swept area is audited against winding-number oracles.

// Negated comparisons are how inputs reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuation;
pub mod curve;
pub mod diskmesh;
pub mod error;
pub mod homotopy;
pub mod oracle;
pub mod pipeline;
pub mod plateau;
pub mod report;

pub use error::{Error, Result};
