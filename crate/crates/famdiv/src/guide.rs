//! The user guide, one module per chapter.
//!
//! Each module's documentation *is* the corresponding chapter of the
//! book under `book/src/`, pulled in verbatim with `include_str!`.
//! That single-sourcing is deliberate: every fenced Rust block in the
//! book compiles and runs as a doc-test of this crate, so the guide
//! cannot drift from the library it teaches.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/fairness.md")]
pub mod fairness {}

#[doc = include_str!("../../../book/src/exact-division.md")]
pub mod exact_division {}

#[doc = include_str!("../../../book/src/protocols.md")]
pub mod protocols {}

#[doc = include_str!("../../../book/src/query-model.md")]
pub mod query_model {}

#[doc = include_str!("../../../book/src/lower-bounds.md")]
pub mod lower_bounds {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
