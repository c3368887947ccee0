//! Command-line front end: `hydra`, `partition`, `eikonal`, `classify`, `wave` and `verify`.

pub mod app;
pub mod dto;
pub mod svg;

pub use app::{execute, main_with_args, parse_controls, Cli, Command};
