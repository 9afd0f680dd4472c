//! Run configuration: flat `key = value` text with dotted keys.
//!
//! ```text
//! schema = chanspec-config/1
//! model.omega = 1
//! model.lambda = 1.43
//! model.potential.kind = cosine-bump
//! ```
//!
//! `#` starts a comment. The schema line is mandatory, unknown keys are
//! rejected, and any key can be overridden from the environment as
//! `CHANSPEC_` + the key upper-cased with `.` replaced by `_`
//! (`CHANSPEC_MODEL_LAMBDA`).

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::analysis1d::{DEFAULT_ACCURACY, DEFAULT_REGIME_TOL};
use crate::assembly::DEFAULT_MEMORY_CAP;
use crate::eigen::{FilterPolicy, LanczosOptions};
use crate::error::{Error, Result};
use crate::model::{make_potential, ModelParams, PotentialKind, PotentialSpec};
use crate::momentbound::{BoxRung, LadderOptions};

pub const SCHEMA: &str = "chanspec-config/1";
pub const ENV_PREFIX: &str = "CHANSPEC_";

const KEYS: &[&str] = &[
    "model.omega",
    "model.lambda",
    "model.potential.kind",
    "model.potential.a",
    "model.potential.v0",
    "model.potential.samples",
    "model.potential.slope_bound",
    "tolerances.gamma0_accuracy",
    "tolerances.regime",
    "tolerances.eigen",
    "tolerances.bracket",
    "grid1d.half_width",
    "grid1d.n",
    "grid1d.count",
    "grid2d.dx",
    "grid2d.dy",
    "grid2d.memory_cap",
    "eigen.count",
    "eigen.max_matvecs",
    "eigen.filter",
    "quasimode.mu_grid",
    "quasimode.n_list",
    "quasimode.k_list",
    "quasimode.index",
    "trial.k_list",
    "moment.sigma_list",
    "ladder.box_x",
    "ladder.box_y",
    "ladder.cauchy_tol",
    "ladder.threshold_margin",
    "ladder.negative_tol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub lambda: f64,
    pub potential_kind: PotentialKind,
    pub potential_a: f64,
    pub potential_v0: f64,
    pub potential_samples: Vec<(f64, f64)>,
    pub potential_slope_bound: f64,
    pub gamma0_accuracy: f64,
    pub regime_tol: f64,
    pub eigen_tol: f64,
    pub bracket_tol: f64,
    pub grid1d_half_width: f64,
    pub grid1d_n: usize,
    pub grid1d_count: usize,
    pub grid2d_dx: Option<f64>,
    pub grid2d_dy: f64,
    pub memory_cap: usize,
    pub eigen_count: usize,
    pub max_matvecs: usize,
    pub filter: FilterPolicy,
    pub mu_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub index: usize,
    pub trial_k_list: Vec<usize>,
    pub sigma_list: Vec<f64>,
    pub box_x: Vec<f64>,
    pub box_y: Vec<f64>,
    pub cauchy_tol: f64,
    pub threshold_margin: f64,
    pub negative_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            lambda: 0.0,
            potential_kind: PotentialKind::CosineBump,
            potential_a: 1.0,
            potential_v0: 1.0,
            potential_samples: Vec::new(),
            potential_slope_bound: 100.0,
            gamma0_accuracy: DEFAULT_ACCURACY,
            regime_tol: DEFAULT_REGIME_TOL,
            eigen_tol: 1e-8,
            bracket_tol: 1e-10,
            grid1d_half_width: 12.0,
            grid1d_n: 2399,
            grid1d_count: 5,
            grid2d_dx: None,
            grid2d_dy: 1.0 / 16.0,
            memory_cap: DEFAULT_MEMORY_CAP,
            eigen_count: 10,
            max_matvecs: 5_000_000,
            filter: FilterPolicy::Auto,
            mu_grid: vec![0.0, 0.5, 1.0, 2.0],
            n_list: vec![4, 8, 16, 32],
            k_list: vec![4, 8, 16, 32],
            index: 32,
            trial_k_list: vec![1, 2, 4, 8, 16, 32, 64],
            sigma_list: vec![0.75, 1.0, 2.0],
            box_x: vec![8.0, 12.0, 16.0],
            box_y: vec![4.0, 4.0, 4.0],
            cauchy_tol: 1e-4,
            threshold_margin: 1e-2,
            negative_tol: 1e-3,
        }
    }
}

fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn num(key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::config(key, format!("expected a finite number, got `{s}`")))
}

fn int(key: &str, s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::config(key, format!("expected a non-negative integer, got `{s}`")))
}

fn list<T>(key: &str, s: &str, f: fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| f(key, p.trim())).collect()
}

fn ascending<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl RunConfig {
    /// Parse config text; environment overrides are not applied.
    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_pairs(text)?;
        Self::from_map(&map)
    }

    /// Read a file, apply `CHANSPEC_*` overrides and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut map = parse_pairs(&text)?;
        apply_env(&mut map, |k| std::env::var(k).ok());
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::config(k.clone(), "unknown key"));
            }
        }
        let mut c = RunConfig::default();
        for (k, v) in map {
            let v = v.as_str();
            let k = k.as_str();
            match k {
                "model.omega" => c.omega = num(k, v)?,
                "model.lambda" => c.lambda = num(k, v)?,
                "model.potential.kind" => {
                    c.potential_kind = PotentialKind::parse(v)
                        .ok_or_else(|| Error::config(k, format!("unknown potential kind `{v}`")))?
                }
                "model.potential.a" => c.potential_a = num(k, v)?,
                "model.potential.v0" => c.potential_v0 = num(k, v)?,
                "model.potential.samples" => {
                    c.potential_samples = list(k, v, |k, p| {
                        let (x, y) = p
                            .split_once(':')
                            .ok_or_else(|| Error::config(k, format!("expected x:v, got `{p}`")))?;
                        Ok((num(k, x.trim())?, num(k, y.trim())?))
                    })?
                }
                "model.potential.slope_bound" => c.potential_slope_bound = num(k, v)?,
                "tolerances.gamma0_accuracy" => c.gamma0_accuracy = num(k, v)?,
                "tolerances.regime" => c.regime_tol = num(k, v)?,
                "tolerances.eigen" => c.eigen_tol = num(k, v)?,
                "tolerances.bracket" => c.bracket_tol = num(k, v)?,
                "grid1d.half_width" => c.grid1d_half_width = num(k, v)?,
                "grid1d.n" => c.grid1d_n = int(k, v)?,
                "grid1d.count" => c.grid1d_count = int(k, v)?,
                "grid2d.dx" => c.grid2d_dx = if v == "auto" { None } else { Some(num(k, v)?) },
                "grid2d.dy" => c.grid2d_dy = num(k, v)?,
                "grid2d.memory_cap" => c.memory_cap = int(k, v)?,
                "eigen.count" => c.eigen_count = int(k, v)?,
                "eigen.max_matvecs" => c.max_matvecs = int(k, v)?,
                "eigen.filter" => {
                    c.filter = match v {
                        "auto" => FilterPolicy::Auto,
                        "off" => FilterPolicy::Off,
                        d => FilterPolicy::Degree(int(k, d)?),
                    }
                }
                "quasimode.mu_grid" => c.mu_grid = list(k, v, num)?,
                "quasimode.n_list" => c.n_list = list(k, v, int)?,
                "quasimode.k_list" => c.k_list = list(k, v, int)?,
                "quasimode.index" => c.index = int(k, v)?,
                "trial.k_list" => c.trial_k_list = list(k, v, int)?,
                "moment.sigma_list" => c.sigma_list = list(k, v, num)?,
                "ladder.box_x" => c.box_x = list(k, v, num)?,
                "ladder.box_y" => c.box_y = list(k, v, num)?,
                "ladder.cauchy_tol" => c.cauchy_tol = num(k, v)?,
                "ladder.threshold_margin" => c.threshold_margin = num(k, v)?,
                "ladder.negative_tol" => c.negative_tol = num(k, v)?,
                _ => unreachable!("checked against KEYS"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks every precondition that can be decided without numerics.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        };
        positive("model.omega", self.omega)?;
        if self.lambda < 0.0 {
            return Err(Error::config("model.lambda", format!("must be non-negative, got {}", self.lambda)));
        }
        positive("model.potential.a", self.potential_a)?;
        if self.potential_kind == PotentialKind::Tabulated {
            if self.potential_samples.is_empty() {
                return Err(Error::config("model.potential.samples", "required for a tabulated potential"));
            }
        } else {
            positive("model.potential.v0", self.potential_v0)?;
        }
        positive("model.potential.slope_bound", self.potential_slope_bound)?;
        positive("tolerances.gamma0_accuracy", self.gamma0_accuracy)?;
        positive("tolerances.regime", self.regime_tol)?;
        positive("tolerances.eigen", self.eigen_tol)?;
        positive("tolerances.bracket", self.bracket_tol)?;
        positive("grid1d.half_width", self.grid1d_half_width)?;
        if self.grid1d_n < 3 {
            return Err(Error::config("grid1d.n", "needs at least 3 points"));
        }
        if self.grid1d_count == 0 || self.grid1d_count > self.grid1d_n {
            return Err(Error::config("grid1d.count", "must lie in 1..=grid1d.n"));
        }
        if let Some(dx) = self.grid2d_dx {
            positive("grid2d.dx", dx)?;
        }
        positive("grid2d.dy", self.grid2d_dy)?;
        if self.eigen_count == 0 {
            return Err(Error::config("eigen.count", "must be at least 1"));
        }
        if self.max_matvecs == 0 {
            return Err(Error::config("eigen.max_matvecs", "must be at least 1"));
        }
        if let FilterPolicy::Degree(d) = self.filter {
            if d < 2 {
                return Err(Error::config("eigen.filter", "degree must be at least 2"));
            }
        }
        if self.mu_grid.is_empty() {
            return Err(Error::config("quasimode.mu_grid", "must not be empty"));
        }
        for (key, l) in [
            ("quasimode.n_list", &self.n_list),
            ("quasimode.k_list", &self.k_list),
            ("trial.k_list", &self.trial_k_list),
        ] {
            if l.is_empty() || l[0] == 0 || !ascending(l) {
                return Err(Error::config(key, "must be non-empty, positive and strictly ascending"));
            }
        }
        if self.index == 0 {
            return Err(Error::config("quasimode.index", "must be positive"));
        }
        if let Some(&s) = self.sigma_list.iter().find(|&&s| !(s > 0.5)) {
            return Err(Error::config(
                "moment.sigma_list",
                format!("σ = {s}: the moment bound needs σ > 1/2"),
            ));
        }
        if self.box_x.len() != self.box_y.len() {
            return Err(Error::config("ladder.box_y", "must have as many entries as ladder.box_x"));
        }
        if self.box_x.len() < 2 {
            return Err(Error::config("ladder.box_x", "the ladder needs at least two rungs"));
        }
        if let Some(&b) = self.box_x.iter().chain(&self.box_y).find(|&&b| !(b > 0.0)) {
            return Err(Error::config("ladder.box_x", format!("box half-widths must be positive, got {b}")));
        }
        positive("ladder.cauchy_tol", self.cauchy_tol)?;
        positive("ladder.threshold_margin", self.threshold_margin)?;
        positive("ladder.negative_tol", self.negative_tol)?;
        self.potential()?;
        Ok(())
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        match self.potential_kind {
            PotentialKind::Tabulated => {
                PotentialSpec::tabulated(self.potential_a, self.potential_samples.clone(), self.potential_slope_bound)
            }
            kind => make_potential(kind, self.potential_a, self.potential_v0),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.lambda, self.potential()?)
    }

    pub fn lanczos(&self, seed: u64) -> LanczosOptions {
        LanczosOptions {
            tol: self.eigen_tol,
            max_matvecs: self.max_matvecs,
            seed,
            filter: self.filter,
            ..Default::default()
        }
    }

    pub fn ladder(&self) -> Vec<BoxRung> {
        self.box_x
            .iter()
            .zip(&self.box_y)
            .map(|(&x, &y)| BoxRung {
                x_half_width: x,
                y_half_width: y,
            })
            .collect()
    }

    pub fn ladder_options(&self, seed: u64, strict: bool) -> LadderOptions {
        LadderOptions {
            dx: self.grid2d_dx,
            dy: self.grid2d_dy,
            count: self.eigen_count,
            cauchy_tol: self.cauchy_tol,
            threshold_margin: self.threshold_margin,
            negative_tol: self.negative_tol,
            lanczos: self.lanczos(seed),
            assembly: crate::assembly::AssemblyOptions {
                strict,
                memory_cap: self.memory_cap,
            },
        }
    }

    /// Every key with its value, in schema order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let filter = match self.filter {
            FilterPolicy::Auto => "auto".to_string(),
            FilterPolicy::Off => "off".to_string(),
            FilterPolicy::Degree(d) => d.to_string(),
        };
        let samples = self
            .potential_samples
            .iter()
            .map(|(x, v)| format!("{x}:{v}"))
            .collect::<Vec<_>>()
            .join(",");
        let values: Vec<String> = vec![
            self.omega.to_string(),
            self.lambda.to_string(),
            self.potential_kind.as_str().to_string(),
            self.potential_a.to_string(),
            self.potential_v0.to_string(),
            samples,
            self.potential_slope_bound.to_string(),
            self.gamma0_accuracy.to_string(),
            self.regime_tol.to_string(),
            self.eigen_tol.to_string(),
            self.bracket_tol.to_string(),
            self.grid1d_half_width.to_string(),
            self.grid1d_n.to_string(),
            self.grid1d_count.to_string(),
            self.grid2d_dx.map_or("auto".to_string(), |d| d.to_string()),
            self.grid2d_dy.to_string(),
            self.memory_cap.to_string(),
            self.eigen_count.to_string(),
            self.max_matvecs.to_string(),
            filter,
            fmt_list(&self.mu_grid),
            fmt_list(&self.n_list),
            fmt_list(&self.k_list),
            self.index.to_string(),
            fmt_list(&self.trial_k_list),
            fmt_list(&self.sigma_list),
            fmt_list(&self.box_x),
            fmt_list(&self.box_y),
            self.cauchy_tol.to_string(),
            self.threshold_margin.to_string(),
            self.negative_tol.to_string(),
        ];
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut s = format!("schema = {SCHEMA}\n");
        for (k, v) in self.to_pairs() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Key/value pairs of a config text, schema line checked and removed.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut schema = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", no + 1), format!("expected key = value, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::config(format!("line {}", no + 1), "empty key"));
        }
        if k == "schema" {
            schema = Some(v.to_string());
            continue;
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::config(k, "duplicate key"));
        }
    }
    match schema.as_deref() {
        Some(SCHEMA) => Ok(map),
        Some(other) => Err(Error::config("schema", format!("unsupported schema `{other}`, expected {SCHEMA}"))),
        None => Err(Error::config("schema", format!("missing schema line `schema = {SCHEMA}`"))),
    }
}

/// Overrides from `lookup(CHANSPEC_…)` for every known key.
pub fn apply_env<F: Fn(&str) -> Option<String>>(map: &mut BTreeMap<String, String>, lookup: F) {
    for key in KEYS {
        if let Some(v) = lookup(&env_name(key)) {
            log::info!("{key} overridden from {}", env_name(key));
            map.insert(key.to_string(), v);
        }
    }
}

/// All recognised keys.
pub fn known_keys() -> &'static [&'static str] {
    KEYS
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema = chanspec-config/1\nmodel.omega = 2\nmodel.lambda = 0.5 # coupling\n";

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.omega, 2.0);
        assert_eq!(c.lambda, 0.5);
        assert_eq!(c.n_list, vec![4, 8, 16, 32]);
    }

    #[test]
    fn schema_line_is_mandatory() {
        let e = RunConfig::parse("model.omega = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "schema"));
    }

    #[test]
    fn unknown_key_names_itself() {
        let e = RunConfig::parse("schema = chanspec-config/1\nmodel.omgea = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "model.omgea"));
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.lambda = 1.4331521777639865;
        c.filter = FilterPolicy::Degree(12);
        c.grid2d_dx = Some(0.03125);
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn env_overrides_apply() {
        let mut map = parse_pairs(MINIMAL).unwrap();
        apply_env(&mut map, |k| (k == "CHANSPEC_MODEL_LAMBDA").then(|| "3".to_string()));
        assert_eq!(RunConfig::from_map(&map).unwrap().lambda, 3.0);
        assert_eq!(env_name("grid2d.x_half_width"), "CHANSPEC_GRID2D_X_HALF_WIDTH");
    }

    #[test]
    fn invalid_values_are_caught() {
        for bad in [
            "model.omega = 0",
            "model.lambda = -1",
            "quasimode.n_list = 8,4",
            "moment.sigma_list = 0.5",
            "ladder.box_x = 8",
            "eigen.filter = 1",
            "grid1d.n = x",
        ] {
            let text = format!("schema = chanspec-config/1\n{bad}\n");
            assert!(matches!(RunConfig::parse(&text), Err(Error::Config { .. })), "{bad}");
        }
    }

    #[test]
    fn tabulated_potential_from_samples() {
        let text = "schema = chanspec-config/1\nmodel.potential.kind = tabulated\n\
                    model.potential.samples = -1:0, -0.5:0.5, 0:1, 0.5:0.5, 1:0\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.potential().unwrap().sup_norm(), 1.0);
    }
}
