//! Command results, provenance and writing to an output directory.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

use crate::formats::write_all;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Json,
    Csv,
    Text,
    Binary,
}

#[derive(Clone, Debug)]
pub struct Payload {
    pub name: String,
    pub kind: Kind,
    pub bytes: Vec<u8>,
}

/// Everything a command produced. The first payload is the primary one and
/// is what goes to stdout when no output directory is given.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub payloads: Vec<Payload>,
}

impl Output {
    pub fn push(&mut self, name: &str, kind: Kind, bytes: Vec<u8>) {
        self.payloads.push(Payload {
            name: name.to_string(),
            kind,
            bytes,
        });
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.push(name, Kind::Json, bytes);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Payload> {
        self.payloads.iter().find(|p| p.name == name)
    }
}

/// Config echo and versions; contains nothing that changes between runs.
pub fn provenance<A: Serialize>(command: &str, args: &A, seed: u64) -> Result<Value> {
    Ok(json!({
        "command": command,
        "config": serde_json::to_value(args)?,
        "seed": seed,
        "versions": {
            "weylcalc": weylcalc::VERSION,
            "weylcalc-cli": env!("CARGO_PKG_VERSION"),
        },
    }))
}

/// Wraps a JSON result with its provenance block.
pub fn report(provenance: &Value, result: Value) -> Value {
    json!({ "provenance": provenance, "result": result })
}

/// Writes payloads plus `provenance.json` and `metadata.json` into `dir`.
/// Only `metadata.json` carries run-dependent data (timestamps, timing).
pub fn write_dir(dir: &Path, out: &Output, provenance: &Value, elapsed: f64, argv: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for p in &out.payloads {
        write_all(&dir.join(&p.name), &p.bytes)?;
    }
    let mut prov = serde_json::to_vec_pretty(provenance)?;
    prov.push(b'\n');
    write_all(&dir.join("provenance.json"), &prov)?;
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64() - elapsed)
        .unwrap_or(0.0);
    let meta = json!({
        "started_unix": started,
        "elapsed_seconds": elapsed,
        "argv": argv,
        "files": out.payloads.iter().map(|p| &p.name).collect::<Vec<_>>(),
    });
    let mut bytes = serde_json::to_vec_pretty(&meta)?;
    bytes.push(b'\n');
    write_all(&dir.join("metadata.json"), &bytes)
}
