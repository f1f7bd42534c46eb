//! The guide under `book/src`, one module per chapter, so that
//! `cargo test --doc -p anvil-book` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/stl.md")]
pub mod stl {}
#[doc = include_str!("../../../book/src/meshing.md")]
pub mod meshing {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/external-case.md")]
pub mod external_case {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/optimization.md")]
pub mod optimization {}
#[doc = include_str!("../../../book/src/config.md")]
pub mod config {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
