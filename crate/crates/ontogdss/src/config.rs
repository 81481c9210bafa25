use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context};

pub const STORE_ENV: &str = "ONTOGDSS_STORE";
pub const BIND_ENV: &str = "ONTOGDSS_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_STORE: &str = "ontogdss-store";

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub store: PathBuf,
    pub extension_bound: usize,
    pub verbosity: u8,
}

impl ApiConfig {
    /// Resolves flags and environment. Set environment variables take
    /// precedence over the corresponding flags.
    pub fn resolve(
        bind: Option<String>,
        store: Option<PathBuf>,
        extension_bound: usize,
        verbosity: u8,
        env: impl Fn(&str) -> Option<String>,
    ) -> anyhow::Result<Self> {
        let bind = env(BIND_ENV).or(bind).unwrap_or_else(|| DEFAULT_BIND.to_owned());
        let store = env(STORE_ENV)
            .map(PathBuf::from)
            .or(store)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
        if extension_bound == 0 {
            bail!("extension bound must be at least 1");
        }
        Ok(ApiConfig {
            bind: bind.parse().with_context(|| format!("invalid bind address {bind:?}"))?,
            store,
            extension_bound,
            verbosity,
        })
    }

    pub fn log_filter(&self) -> &'static str {
        match self.verbosity {
            0 => "info",
            1 => "debug",
            _ => "trace",
        }
    }
}
