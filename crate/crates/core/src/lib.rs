//! Exact wave dynamics on metric graphs and the algebras generated by their eikonals.
//!
//! The pipeline runs bottom-up:
//! [`hydra::propagate`] simulates the fundamental solution as particles,
//! [`partition`] groups the filled region into families of cells,
//! [`eikonal`] turns amplitudes into projection blocks, and
//! [`algebra`] classifies the generated matrix-function algebra.
//! [`pipeline::run`] chains all of it for a set of controlled boundary vertices.

pub mod algebra;
pub mod eikonal;
pub mod error;
pub mod graph;
pub mod hydra;
pub mod linalg;
pub mod partition;
pub mod pipeline;
pub mod poly;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{GraphPoint, MetricGraph};
pub use linalg::QMatrix;
pub use rational::{parse_rational, Rational};
