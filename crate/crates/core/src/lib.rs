//! Exact piecewise-affine horseshoes and their metric mean dimension.

pub mod constructions;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod geometry;
pub mod horseshoe;
pub mod logexpr;
pub mod map;
pub mod metric;
pub mod spec_file;
pub mod symbolic;

pub use error::{Error, Result};
pub use exact::Rational;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/horseshoes.md")]
    mod horseshoes {}
    #[doc = include_str!("../../../book/src/cylinders.md")]
    mod cylinders {}
    #[doc = include_str!("../../../book/src/schedules.md")]
    mod schedules {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/files-and-cli.md")]
    mod files_and_cli {}
}
