//! Flat `key = value` family files.
//!
//! ```text
//! # linear example
//! branch = T2
//! mu = 0
//! m = 1
//! sign = +
//! h = identity
//! psi = identity
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{presets, BranchT2, BranchT3, BranchT4, BranchT5i, BranchT5ii, FamilySpec, Sign};
use crate::functions::{BivariateFn, UnaryFn};
use crate::scalar::Scalar;

const KEYS: [&str; 15] =
    ["branch", "mu", "m", "m1", "m2", "lambda", "eta", "tau", "theta", "p", "q", "sign", "h", "psi", "phi"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Missing(String),
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    used: Vec<String>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.push(key.to_string());
        self.map.get(key).cloned()
    }

    fn num<T: Scalar>(&mut self, key: &str) -> Result<T, ConfigError> {
        let (line, v) = self.raw(key).ok_or_else(|| ConfigError::Missing(format!("missing key '{key}'")))?;
        v.parse::<f64>()
            .map(T::of)
            .map_err(|_| ConfigError::Line { line, message: format!("'{key}' is not a number: '{v}'") })
    }

    fn sign(&mut self) -> Result<Sign, ConfigError> {
        match self.raw("sign") {
            None => Ok(Sign::Plus),
            Some((_, v)) if v == "+" || v == "+1" || v == "1" => Ok(Sign::Plus),
            Some((_, v)) if v == "-" || v == "-1" => Ok(Sign::Minus),
            Some((line, v)) => Err(ConfigError::Line { line, message: format!("sign must be + or -, got '{v}'") }),
        }
    }

    fn unary<T: Scalar>(&mut self, key: &str, default: UnaryFn<T>) -> Result<UnaryFn<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => UnaryFn::parse(&v).map_err(|message| ConfigError::Line { line, message }),
        }
    }

    fn bivariate<T: Scalar>(&mut self, key: &str) -> Result<BivariateFn<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(BivariateFn::identity()),
            Some((line, v)) => BivariateFn::parse(&v).map_err(|message| ConfigError::Line { line, message }),
        }
    }

    fn reject_unused(&self) -> Result<(), ConfigError> {
        for (k, (line, _)) in &self.map {
            if !self.used.contains(k) {
                return Err(ConfigError::Line { line: *line, message: format!("key '{k}' not used by this branch") });
            }
        }
        Ok(())
    }
}

/// Parses a family file; unknown or unused keys are errors.
pub fn parse_family_config<T: Scalar>(text: &str) -> Result<FamilySpec<T>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Line { line, message: format!("expected key = value, got '{content}'") })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::Line { line, message: format!("unknown key '{k}'") });
        }
        if map.insert(k.clone(), (line, v)).is_some() {
            return Err(ConfigError::Line { line, message: format!("duplicate key '{k}'") });
        }
    }
    let mut e = Entries { map, used: Vec::new() };
    let (bline, branch) = e.raw("branch").ok_or_else(|| ConfigError::Missing("missing key 'branch'".into()))?;
    let spec = match branch.as_str() {
        "T2" => FamilySpec::T2(BranchT2 {
            mu: e.num("mu")?,
            m: e.num("m")?,
            sign: e.sign()?,
            h: e.unary("h", UnaryFn::identity())?,
            psi: e.bivariate("psi")?,
        }),
        "T3" => FamilySpec::T3(BranchT3 {
            lambda: e.num("lambda")?,
            mu: e.num("mu")?,
            eta: e.num("eta")?,
            m1: e.num("m1")?,
            m2: e.num("m2")?,
            h: e.unary("h", UnaryFn::identity())?,
        }),
        "T4" => FamilySpec::T4(BranchT4 {
            lambda: e.num("lambda")?,
            mu: e.num("mu")?,
            m1: e.num("m1")?,
            m2: e.num("m2")?,
            sign: e.sign()?,
            h: e.unary("h", UnaryFn::identity())?,
            psi: e.bivariate("psi")?,
        }),
        "T5i" => FamilySpec::T5i(BranchT5i {
            lambda: e.num("lambda")?,
            mu: e.num("mu")?,
            eta: e.num("eta")?,
            m: e.num("m")?,
            tau: e.num("tau")?,
            p: e.num("p")?,
            q: e.num("q")?,
            sign: e.sign()?,
            phi: e.unary("phi", UnaryFn::exp())?,
        }),
        "T5ii" => {
            let b = BranchT5ii::new(
                e.num("lambda")?,
                e.num("theta")?,
                e.num("mu")?,
                e.num("eta")?,
                e.num("m1")?,
                e.num("m2")?,
                e.num("p")?,
                e.sign()?,
            );
            if e.map.contains_key("q") {
                let q: T = e.num("q")?;
                if (q - b.q).abs() > T::of(1e-12) * b.q.abs().max(T::one()) {
                    let line = e.map["q"].0;
                    return Err(ConfigError::Line { line, message: format!("q is derived; expected {}", b.q) });
                }
            }
            FamilySpec::T5ii(b)
        }
        "sg-lightcone" => presets::sine_gordon_lightcone(),
        "sg-eta" => presets::sine_gordon_eta(e.num("eta")?),
        other => {
            return Err(ConfigError::Line { line: bline, message: format!("unknown branch '{other}'") });
        }
    };
    e.reject_unused()?;
    Ok(spec)
}

/// Canonical text form of a family (inverse of [`parse_family_config`]).
pub fn to_config<T: Scalar>(spec: &FamilySpec<T>) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    match spec {
        FamilySpec::T2(b) => {
            kv("branch", "T2".into());
            kv("mu", b.mu.to_string());
            kv("m", b.m.to_string());
            kv("sign", b.sign.to_string());
            kv("h", b.h.to_string());
            kv("psi", b.psi.to_string());
        }
        FamilySpec::T3(b) => {
            kv("branch", "T3".into());
            for (k, v) in [("lambda", b.lambda), ("mu", b.mu), ("eta", b.eta), ("m1", b.m1), ("m2", b.m2)] {
                kv(k, v.to_string());
            }
            kv("h", b.h.to_string());
        }
        FamilySpec::T4(b) => {
            kv("branch", "T4".into());
            for (k, v) in [("lambda", b.lambda), ("mu", b.mu), ("m1", b.m1), ("m2", b.m2)] {
                kv(k, v.to_string());
            }
            kv("sign", b.sign.to_string());
            kv("h", b.h.to_string());
            kv("psi", b.psi.to_string());
        }
        FamilySpec::T5i(b) => {
            kv("branch", "T5i".into());
            for (k, v) in
                [("lambda", b.lambda), ("mu", b.mu), ("eta", b.eta), ("m", b.m), ("tau", b.tau), ("p", b.p), ("q", b.q)]
            {
                kv(k, v.to_string());
            }
            kv("sign", b.sign.to_string());
            kv("phi", b.phi.to_string());
        }
        FamilySpec::T5ii(b) => {
            kv("branch", "T5ii".into());
            for (k, v) in
                [("lambda", b.lambda), ("theta", b.theta), ("mu", b.mu), ("eta", b.eta), ("m1", b.m1), ("m2", b.m2), ("p", b.p)]
            {
                kv(k, v.to_string());
            }
            kv("sign", b.sign.to_string());
        }
        FamilySpec::Explicit(e) => {
            kv("branch", e.name.clone());
            for (k, v) in &e.params {
                kv(k, v.to_string());
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_linear_family() {
        let text = "# comment\nbranch = T2\nmu = 0\nm = 1\nsign = +\nh = identity\npsi = identity\n";
        let spec: FamilySpec<f64> = parse_family_config(text).unwrap();
        assert!(matches!(spec, FamilySpec::T2(ref b) if b.m == 1.0 && b.sign == Sign::Plus));
        let again: FamilySpec<f64> = parse_family_config(&to_config(&spec)).unwrap();
        assert_eq!(to_config(&again), to_config(&spec));
    }

    #[test]
    fn line_diagnostics() {
        let err = parse_family_config::<f64>("branch = T2\nmu = 0\nm = x\n").unwrap_err();
        assert_eq!(err, ConfigError::Line { line: 3, message: "'m' is not a number: 'x'".into() });
        let err = parse_family_config::<f64>("branch = T2\ncolour = red\n").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 2, .. }));
        let err = parse_family_config::<f64>("branch = T2\nmu = 0\nm = 1\ntau = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 4, .. }));
        let err = parse_family_config::<f64>("branch T2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 1, .. }));
    }

    #[test]
    fn derived_q_is_checked() {
        let base = "branch = T5ii\nlambda = 1\ntheta = 1\nmu = 0\neta = 1\nm1 = 0\nm2 = 3\np = 1\n";
        assert!(parse_family_config::<f64>(base).is_ok());
        assert!(parse_family_config::<f64>(&format!("{base}q = 1\n")).is_ok());
        assert!(parse_family_config::<f64>(&format!("{base}q = 2\n")).is_err());
    }

    #[test]
    fn every_preset_round_trips_through_text() {
        for name in presets::NAMES {
            let spec: FamilySpec<f64> = presets::by_name(name).unwrap();
            let text = to_config(&spec);
            let back: FamilySpec<f64> = parse_family_config(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(to_config(&back), text);
        }
    }
}
