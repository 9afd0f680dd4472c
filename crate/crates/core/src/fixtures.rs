//! Fixture configs and pinned regression constants shipped with the crate.

use std::collections::BTreeMap;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const FIXTURE_VERSION: &str = "1";

const FREE: &str = include_str!("../fixtures/free.cfg");
const SUBCRITICAL_REF: &str = include_str!("../fixtures/subcritical-ref.cfg");
const CRITICAL_REF: &str = include_str!("../fixtures/critical-ref.cfg");
const REGRESSION: &str = include_str!("../fixtures/regression.txt");

/// Names of the bundled configs, in report order.
pub const FIXTURE_NAMES: [&str; 3] = ["free", "subcritical-ref", "critical-ref"];

pub fn fixture_text(name: &str) -> Option<&'static str> {
    match name {
        "free" => Some(FREE),
        "subcritical-ref" => Some(SUBCRITICAL_REF),
        "critical-ref" => Some(CRITICAL_REF),
        _ => None,
    }
}

pub fn fixture_config(name: &str) -> Result<RunConfig> {
    let text = fixture_text(name).ok_or_else(|| Error::config("fixture", format!("no fixture named `{name}`")))?;
    RunConfig::parse(text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pinned {
    pub value: f64,
    pub tolerance: f64,
}

impl Pinned {
    pub fn matches(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tolerance
    }
}

/// Parses `name = value [tol]  # comment` lines.
pub fn parse_regression(text: &str) -> Result<BTreeMap<String, Pinned>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| Error::config(format!("regression.txt:{}", no + 1), why.to_string());
        let (name, rest) = line.split_once('=').ok_or_else(|| bad("expected name = value"))?;
        let name = name.trim();
        if name == "version" {
            if rest.trim() != FIXTURE_VERSION {
                return Err(bad("fixture version mismatch"));
            }
            continue;
        }
        let mut parts = rest.split_whitespace();
        let value: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing value"))?;
        let tolerance = match parts.next() {
            Some(t) => t
                .trim_start_matches('[')
                .trim_end_matches(']')
                .parse()
                .map_err(|_| bad("bad tolerance"))?,
            None => 0.0,
        };
        out.insert(name.to_string(), Pinned { value, tolerance });
    }
    Ok(out)
}

pub fn regression_constants() -> Result<BTreeMap<String, Pinned>> {
    parse_regression(REGRESSION)
}

/// One pinned constant; panics if the bundled file lacks it.
pub fn pinned(name: &str) -> Pinned {
    regression_constants()
        .expect("bundled regression file parses")
        .get(name)
        .copied()
        .unwrap_or_else(|| panic!("no pinned constant `{name}`"))
}
