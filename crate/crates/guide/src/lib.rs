//! Book chapters as doc-tests.
//!
//! Each module pulls in one page of `book/src`, so `cargo test --doc`
//! compiles and runs every `rust` block of the guide against the current API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/q-calculus.md")]
pub mod q_calculus {}

#[doc = include_str!("../../../book/src/series.md")]
pub mod series {}

#[doc = include_str!("../../../book/src/coefficient-space.md")]
pub mod coefficient_space {}

#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[doc = include_str!("../../../book/src/fixed-point.md")]
pub mod fixed_point {}

#[doc = include_str!("../../../book/src/transforms.md")]
pub mod transforms {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
