//! Deterministic small-space string indexing toolkit.
//!
//! Builds locally consistent partitioning sets of a readonly text via
//! streaming refinement phases plus recompression, and two indexes on top of
//! them: a longest-common-extension index with queries linear in the sample
//! distance, and sparse suffix trees for arbitrary chosen suffixes. Every
//! structure is validated against brute-force oracles in `oracle`.

pub mod bitops;
pub mod corpus;
pub mod lce;
pub mod oracle;
pub mod pipeline;
pub mod providers;
pub mod refine;
pub mod sparsify;
pub mod sst;
pub mod sst_user;
pub mod suffix;
pub mod text;

pub use text::{Format, Mode, Overrides, ParamEnv, Text, TextView, SENTINEL};
