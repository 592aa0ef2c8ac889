//! The book's chapters, mounted as doctests.
//!
//! The mdbook under `book/` is the narrative guide. Including each chapter
//! here makes `cargo test --doc` compile and run every code snippet, so the
//! guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/concept-classes.md")]
pub mod concept_classes {}

#[doc = include_str!("../../../book/src/distributions-and-ipm.md")]
pub mod distributions_and_ipm {}

#[doc = include_str!("../../../book/src/online-learning.md")]
pub mod online_learning {}

#[doc = include_str!("../../../book/src/minimax.md")]
pub mod minimax_dichotomy {}

#[doc = include_str!("../../../book/src/sequential-game.md")]
pub mod sequential_game {}

#[doc = include_str!("../../../book/src/privacy.md")]
pub mod privacy_mechanisms {}

#[doc = include_str!("../../../book/src/dp-pipeline.md")]
pub mod dp_pipeline {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
