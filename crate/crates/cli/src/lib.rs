//! Command-line pipeline and HTTP session API.

pub mod commands;
pub mod config;
pub mod error;
pub mod http;

pub use commands::run;
