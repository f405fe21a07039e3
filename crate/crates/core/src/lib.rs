//! Deliberation platform core: opposing-stance comment recommendation and
//! deliberative quality highlighting, fed by an event-driven scoring
//! pipeline over an embedded store, with an HTTP service on top.
//!
//! The main entry points:
//!
//! - [`quality`]: indicator predictions, the weighted quality score, its
//!   normalization to `[0, 5]` and top-comment selection.
//! - [`stance`]: stance prediction, uncertainty ranking and labeled-example
//!   files.
//! - [`recommend`]: stance declaration and the suggest/reply lifecycle.
//! - [`pipeline`]: scoring jobs, retries and draining.
//! - [`store`]: the SQLite-backed persistence layer.
//! - [`api`]: configuration and the HTTP routes.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod api;
pub mod backend;
pub mod domain;
pub mod error;
mod markers;
pub mod pipeline;
pub mod quality;
pub mod recommend;
pub mod stance;
pub mod store;

pub use error::{Error, Result, ScoringError};
