//! Distributed online convex optimization with long-term constraints and
//! event-triggered communication: linear algebra, graph model, problem
//! oracles, step-size schedules, the primal-dual engine and its metrics.

pub mod benchmark;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod schedules;
pub mod seeding;

pub use error::{Error, Result};
