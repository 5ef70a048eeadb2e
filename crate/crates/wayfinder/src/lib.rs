//! Host-side companion to `wayfinder-core`: configuration and file formats,
//! the calibration store, the remote detector client, headless replay, the
//! websocket service and the CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod headless;
pub mod mock;
pub mod remote;
pub mod service;
pub mod store;

pub use error::AppError;
