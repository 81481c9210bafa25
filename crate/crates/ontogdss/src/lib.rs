//! Service and batch front ends for the ontogdss engine.

pub mod config;
pub mod server;

pub use config::ApiConfig;
pub use server::{router, AppState};
