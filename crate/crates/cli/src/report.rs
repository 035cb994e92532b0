//! CSV output with a provenance header.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use pss_core::families::{to_config, FamilySpec};
use sha2::{Digest, Sha256};

/// Header lines written as `# key=value` before the CSV columns.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub command: &'static str,
    pub family_sha256: String,
    pub family_name: String,
    pub fields: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &'static str, spec: &FamilySpec<f64>) -> Self {
        Self { command, family_sha256: family_hash(spec), family_name: spec.branch_name().to_string(), fields: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# pss {} {}", env!("CARGO_PKG_VERSION"), self.command);
        let _ = writeln!(s, "# family={} sha256={}", self.family_name, self.family_sha256);
        for (k, v) in &self.fields {
            let _ = writeln!(s, "# {k}={v}");
        }
        s
    }
}

/// SHA-256 of the canonical config text, so a preset and an equal file hash alike.
pub fn family_hash(spec: &FamilySpec<f64>) -> String {
    let digest = Sha256::digest(to_config(spec).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip form (exponent for very small or large values); `nan` for NaN.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:?}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes `header + columns + rows` to `path`, or stdout for `-`.
pub fn write_csv(path: &Path, prov: &Provenance, columns: &str, rows: &[String]) -> Result<()> {
    let mut body = prov.header();
    body.push_str(columns);
    body.push('\n');
    for r in rows {
        body.push_str(r);
        body.push('\n');
    }
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(body.as_bytes())?;
    } else {
        std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pss_core::families::{presets, Sign};

    #[test]
    fn hash_is_stable_and_distinguishes() {
        let a = family_hash(&presets::linear_t2(1.0, Sign::Plus));
        assert_eq!(a, family_hash(&presets::linear_t2(1.0, Sign::Plus)));
        assert_ne!(a, family_hash(&presets::linear_t2(2.0, Sign::Plus)));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn header_lines_are_comments() {
        let p = Provenance::new("verify", &presets::camassa_holm(1.0)).with("seed", 7);
        assert!(p.header().lines().all(|l| l.starts_with('#')));
        assert!(p.header().contains("# seed=7"));
    }
}
