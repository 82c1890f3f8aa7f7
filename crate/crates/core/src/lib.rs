//! Relative degree of order between two grayscale images of material structure.
//!
//! Images are linearized by a serpentine (boustrophedon) walk, turned into a
//! feature stream (raw gray level or a neighbor-pair comparison), histogrammed
//! into an empirical density, renormalized so the pair is comparable, and
//! finally compared by the entropy difference `S_ref - S_adj` together with
//! the Kullback-Leibler form `sum f_ref ln(f_ref / f_adj)`.
//!
//! A positive `delta_s` means the second (adjusted) image is more ordered.
//!
//! The numeric core ([`distribution`], [`renorm`], [`order`]) is generic over
//! the floating-point type through [`Scalar`]; the aliases at the crate root
//! pin the usual `f64` instantiation.

// NaN-rejecting guards are written as negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod distribution;
mod error;
pub mod features;
pub mod ingest;
pub mod order;
pub mod renorm;
pub mod report;

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureStream};
pub use ingest::{ImageFormat, PixelGrid, PixelSequence, Traversal};
pub use order::{Mode, Reference};
pub use renorm::RenormMethod;

/// Floating-point type the numeric core is written against.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only if the type cannot represent finite `f64`s.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar type must represent f64 literals")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar type must represent counts")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

pub type Distribution = distribution::Distribution<f64>;
pub type Distribution32 = distribution::Distribution<f32>;
pub type RenormOutcome = renorm::RenormOutcome<f64>;
pub type OrderValue = order::OrderValue<f64>;
pub type OrderReport = order::OrderReport<f64>;
pub type ModeEntry = order::ModeEntry<f64>;
