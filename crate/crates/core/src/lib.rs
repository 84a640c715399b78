//! Simulation and analysis of Siamese trust scores published by two agents.
//!
//! The crate simulates a device population scored by two independent agents,
//! rebuilds a per-device direct-sum embedding from the two score series,
//! estimates how much of each latent baseline embedding leaks through the
//! published scores, and studies the bipartite coupling graphs between the
//! agents' evaluation stages.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`sim`] | population, noisy observations, cosine trust scores |
//! | [`chain`] | staged chain-of-trust pruning, overhead/accuracy table |
//! | [`matching`] | greedy trusted collaborator selection, hypergraph weights |
//! | [`ingest`] | CSV formats and cross-agent alignment |
//! | [`recon`] | direct-sum embeddings, norm estimator, obfuscation |
//! | [`analysis`] | distance matrices, agent agreement, replicate benchmark |
//! | [`graphs`] | coupling graphs, Laplacians, Jacobi spectra |
//! | [`pipeline`] | end-to-end wiring used by the CLI |
//!
//! The guide under `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod analysis;
pub mod chain;
pub mod error;
pub mod graphs;
pub mod ingest;
pub mod matching;
pub mod pipeline;
pub mod recon;
pub mod rng;
pub mod sim;

pub use error::{Error, ParseErrorKind, Result};

// The guide's chapters, compiled so their listings run under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trust-scores.md")]
    mod trust_scores {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/identifiability.md")]
    mod identifiability {}
    #[doc = include_str!("../../../book/src/chain-of-trust.md")]
    mod chain_of_trust {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/coupling-graphs.md")]
    mod coupling_graphs {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
