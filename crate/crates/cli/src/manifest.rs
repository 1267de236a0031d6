use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Context, Outcome};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Record of one invocation; enough to re-run it.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    /// Input path to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub threads: Option<u16>,
    pub wall_time_seconds: f64,
    pub exit_code: u8,
    pub result: serde_json::Value,
}

impl RunManifest {
    pub fn new(ctx: &Context, outcome: &Outcome, threads: Option<u16>, wall: Duration) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            inputs: ctx.inputs.iter().cloned().collect(),
            seed: outcome.seed,
            threads,
            wall_time_seconds: wall.as_secs_f64(),
            exit_code: outcome.code,
            result: outcome.summary.clone(),
        }
    }

    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        match path {
            Some(p) => std::fs::write(p, json + "\n"),
            None => writeln!(std::io::stderr(), "{json}"),
        }
    }
}
