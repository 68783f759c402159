//! Run manifests and deterministic structured output.
//!
//! Every emitted JSON document is a single object with a `manifest` field;
//! floats print with 17 significant digits so parsed values round-trip
//! exactly. Wall time is deliberately kept out of the emitted documents:
//! identical inputs must produce byte-identical outputs.

use serde::Serialize;
use serde_json::ser::Formatter;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub command: String,
    /// Effective parameters, sorted by name.
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(config_bytes: &[u8], command: &str, seed: u64) -> Self {
        RunManifest {
            config_digest: hex_digest(config_bytes),
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Format a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize to JSON with 17-significant-digit floats.
pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits utf-8"))
}

/// Incremental CSV assembly with the shared float format.
pub struct CsvBuilder {
    out: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        CsvBuilder {
            out: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.out.push_str(&fields.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        let a = hex_digest(b"hello");
        let b = hex_digest(b"hello");
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_ne!(hex_digest(b"hello "), a);
    }

    #[test]
    fn floats_round_trip() {
        for &x in &[
            0.1,
            std::f64::consts::PI,
            2.983641e-1,
            1.0 / 3.0,
            -4.9e-300,
            6.02e23,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s} did not round-trip");
        }
    }

    #[test]
    fn json_floats_have_full_precision() {
        #[derive(Serialize)]
        struct Doc {
            value: f64,
        }
        let s = to_json(&Doc { value: 1.0 / 3.0 }).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["value"].as_f64().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn manifest_serializes_with_sorted_parameters() {
        let m = RunManifest::new(b"cfg", "scan", 7)
            .with_param("depth", 6)
            .with_param("b_max", 50.0);
        let s = to_json(&m).unwrap();
        let b = s.find("b_max").unwrap();
        let d = s.find("depth").unwrap();
        assert!(b < d, "parameters not sorted: {s}");
    }
}
