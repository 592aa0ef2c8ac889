//! Sequential and differentially private synthetic data generation over
//! finite domains.
//!
//! The crate implements the full pipeline around the generator/discriminator
//! game for fooling a finite class of boolean distinguishers:
//!
//! * [`concepts`]: finite concept classes, duals, VC / Littlestone /
//!   dual-Littlestone dimensions, mistake-tree witnesses, and a zoo of named
//!   constructions.
//! * [`measures`]: distributions over finite domains, sampling, empirical
//!   measures, and the integral probability metric (IPM) with its argmax
//!   witness.
//! * [`online`]: no-regret online learners over the dual class:
//!   multiplicative weights and an expert-based agnostic SOA.
//! * [`minimax`]: exact zero-sum game solving and the amenability dichotomy
//!   used by the generator.
//! * [`game`]: the sequential fooling protocol: generator, honest
//!   discriminator, the shattered-tree lower-bound adversary, and transcripts.
//! * [`privacy`]: Laplace noise, a one-shot private threshold test, the
//!   exponential-mechanism learner, privacy accounting, and a Monte-Carlo
//!   audit harness.
//! * [`pipeline`]: the private discriminator, end-to-end DP fooling, the
//!   sanitizer reduction, private uniform convergence, and private agnostic
//!   learning on top of it.
//!
//! A command line driver for all experiment grids lives in the `sdg-cli`
//! crate; the mdbook under `book/` walks through the concepts with runnable
//! snippets (mirrored as doctests in [`guide`]).

pub mod concepts;
pub mod game;
pub mod guide;
pub mod measures;
pub mod minimax;
pub mod online;
pub mod pipeline;
pub mod privacy;
pub mod rng;

pub use concepts::{ConceptClass, DimensionReport, Domain, Hypothesis, MistakeTree};
pub use measures::{Distribution, LabeledSample, Sample};
