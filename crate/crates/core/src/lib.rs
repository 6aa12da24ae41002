//! Closed feedback-loop recommender simulation.
//!
//! A recommender retrains on its own users' feedback, users rate what they
//! are shown, and the set of item groups each user has seen grows (or does
//! not). This crate measures that growth against a concentration bound and
//! reports how much of each user's relevant groups stays hidden.
//!
//! The pieces, bottom up:
//!
//! - [`dataset`]: ratings, item groups and MovieLens parsing
//! - [`factorization`]: matrix factorization trained by SGD
//! - [`completion`]: a full ground-truth rating matrix from a trained model
//! - [`policies`]: exploit and ε-greedy top-n recommendation
//! - [`simulation`]: the iterated recommend, feedback, retrain loop
//! - [`metrics`]: discovery and blind-spot series, the bound, trace CSV
//! - [`stats`]: Welch's t-test and the seen-versus-unseen ranking test
//! - [`synthetic`]: planted datasets for fast experiments
//! - [`cli`]: the `discovery-loop` command-line tool

pub mod cli;
pub mod completion;
pub mod dataset;
pub mod error;
pub mod factorization;
pub mod ids;
pub mod metrics;
pub mod policies;
pub mod seed;
pub mod simulation;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use ids::{GroupId, ItemId, UserId};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/feedback-loop.md")]
    mod feedback_loop {}
    #[doc = include_str!("../../../book/src/factorization.md")]
    mod factorization {}
    #[doc = include_str!("../../../book/src/ground-truth.md")]
    mod ground_truth {}
    #[doc = include_str!("../../../book/src/discovery-bound.md")]
    mod discovery_bound {}
    #[doc = include_str!("../../../book/src/exploration.md")]
    mod exploration {}
    #[doc = include_str!("../../../book/src/ranking-test.md")]
    mod ranking_test {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
