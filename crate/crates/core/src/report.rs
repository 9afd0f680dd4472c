//! CSV tables, JSON summaries and two-column plot files.
//!
//! Numbers are written with `{:.16e}` (17 significant digits, no locale).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::certificates::{InclusionCertificate, QuasiModeReport, TrialFormReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixtures::FIXTURE_VERSION;
use crate::momentbound::{MomentBoundReport, RungSpectrum};

pub const QUASIMODE_HEADER: &str = "regime,mu,index,norm,structural_residual,total_residual";
pub const TRIAL_HEADER: &str = "k,form_value,potential_term,below_threshold";
pub const MOMENT_HEADER: &str =
    "config,sigma,gamma0,kappa,alpha1,rhs_series,series_tail,rhs_box,rhs_total,lhs,satisfied,margin";
pub const SPECTRUM2D_HEADER: &str = "x_half_width,y_half_width,nx,ny,index,eigenvalue,residual";
pub const SPECTRUM1D_HEADER: &str = "index,eigenvalue";
pub const CERTIFICATE_HEADER: &str = "kind,mu,radius,margin,sigma,statement";

/// Locale-independent 17-digit float.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), fmt)
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn quasimode_csv(reports: &[QuasiModeReport]) -> String {
    let mut s = format!("{QUASIMODE_HEADER}\n");
    for r in reports {
        for i in 0..r.params_list.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.regime.as_str(),
                fmt(r.mu),
                r.params_list[i],
                fmt(r.norms[i]),
                fmt(r.structural_residuals[i]),
                fmt(r.residuals[i])
            );
        }
    }
    s
}

pub fn trial_csv(r: &TrialFormReport, omega: f64) -> String {
    let mut s = format!("{TRIAL_HEADER}\n");
    for (i, &k) in r.k_list.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k},{},{},{}",
            fmt(r.form_values[i]),
            fmt(r.potential_terms[i]),
            r.form_values[i] < omega
        );
    }
    s
}

pub fn moment_csv(rows: &[(String, MomentBoundReport)]) -> String {
    let mut s = format!("{MOMENT_HEADER}\n");
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_text(name),
            fmt(r.sigma),
            fmt(r.gamma0),
            fmt(r.kappa),
            fmt(r.alpha1),
            fmt(r.rhs_series),
            fmt(r.series_tail),
            fmt(r.rhs_box),
            fmt(r.rhs_total),
            fmt(r.lhs),
            r.satisfied,
            fmt(r.margin)
        );
    }
    s
}

pub fn spectrum2d_csv(rungs: &[RungSpectrum]) -> String {
    let mut s = format!("{SPECTRUM2D_HEADER}\n");
    for r in rungs {
        for (i, (&e, &res)) in r.eigenvalues.iter().zip(&r.residuals).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{i},{},{}",
                fmt(r.rung.x_half_width),
                fmt(r.rung.y_half_width),
                r.nx,
                r.ny,
                fmt(e),
                fmt(res)
            );
        }
    }
    s
}

pub fn spectrum1d_csv(values: &[f64]) -> String {
    let mut s = format!("{SPECTRUM1D_HEADER}\n");
    for (i, &e) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", fmt(e));
    }
    s
}

/// Two-column plot data with a `#` header line.
pub fn plot_data(label: (&str, &str), points: &[(f64, f64)]) -> String {
    let mut s = format!("# {} {}\n", label.0, label.1);
    for &(x, y) in points {
        let _ = writeln!(s, "{} {}", fmt(x), fmt(y));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    SpectralInclusion,
    BelowThreshold,
    MomentBound,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::SpectralInclusion => "spectral-inclusion",
            CertificateKind::BelowThreshold => "below-threshold",
            CertificateKind::MomentBound => "moment-bound",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub fixture_version: &'static str,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        Self {
            config_hash: config.hash(),
            fixture_version: FIXTURE_VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub statement: String,
    pub mu: Option<f64>,
    pub radius: Option<f64>,
    pub margin: Option<f64>,
    pub sigma: Option<f64>,
    /// False when the statement is a skip notice or a failed check.
    pub holds: bool,
    pub provenance: Provenance,
}

impl CertificateReport {
    pub fn inclusion(c: &InclusionCertificate, prov: &Provenance) -> Self {
        let (mu, radius) = (c.mu(), c.radius());
        let statement = match radius {
            Some(r) => format!("σ(H) ∩ [{}, {}] ≠ ∅", fmt(mu - r), fmt(mu + r)),
            None => c.statement(),
        };
        Self {
            kind: CertificateKind::SpectralInclusion,
            statement,
            mu: Some(mu),
            radius,
            margin: None,
            sigma: None,
            holds: radius.is_some(),
            provenance: prov.clone(),
        }
    }

    /// `inf σ(H) < ω - margin` from a trial function, when one went below `ω`.
    pub fn below_threshold(t: &TrialFormReport, omega: f64, prov: &Provenance) -> Self {
        let statement = match t.k_star {
            Some(k) => format!("inf σ(H) < {} (trial window k = {k})", fmt(omega - t.margin)),
            None => format!(
                "inconclusive: no trial form value below ω = {} up to k = {}",
                fmt(omega),
                t.k_list.last().copied().unwrap_or(0)
            ),
        };
        Self {
            kind: CertificateKind::BelowThreshold,
            statement,
            mu: None,
            radius: None,
            margin: Some(t.margin),
            sigma: None,
            holds: t.k_star.is_some(),
            provenance: prov.clone(),
        }
    }

    pub fn moment(r: &MomentBoundReport, prov: &Provenance) -> Self {
        let rel = if r.satisfied { "≤" } else { ">" };
        Self {
            kind: CertificateKind::MomentBound,
            statement: format!(
                "tr(ω - H)₊^{} = {} {rel} {}",
                r.sigma,
                fmt(r.lhs),
                fmt(r.rhs_total)
            ),
            mu: None,
            radius: None,
            margin: Some(r.margin),
            sigma: Some(r.sigma),
            holds: r.satisfied,
            provenance: prov.clone(),
        }
    }
}

pub fn certificates_csv(certs: &[CertificateReport]) -> String {
    let mut s = format!("{CERTIFICATE_HEADER}\n");
    for c in certs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.kind.as_str(),
            opt(c.mu),
            opt(c.radius),
            opt(c.margin),
            opt(c.sigma),
            csv_text(&c.statement)
        );
    }
    s
}

/// Human-readable certificate block.
pub fn certificates_text(certs: &[CertificateReport]) -> String {
    let mut s = String::new();
    for c in certs {
        let _ = writeln!(s, "[{}] {}", c.kind.as_str(), c.statement);
    }
    s
}

#[derive(Debug, Serialize)]
pub struct Summary<'a, T: Serialize> {
    pub command: &'a str,
    pub config_hash: String,
    pub fixture_version: &'static str,
    /// Canonical key/value form of the config.
    pub config: std::collections::BTreeMap<String, String>,
    pub result: &'a T,
}

pub fn summary_json<T: Serialize>(command: &str, config: &RunConfig, result: &T) -> Result<String> {
    let s = Summary {
        command,
        config_hash: config.hash(),
        fixture_version: FIXTURE_VERSION,
        config: config.to_pairs().into_iter().collect(),
        result,
    };
    serde_json::to_string_pretty(&s).map_err(|e| Error::Validation(format!("JSON encoding: {e}")))
}

/// Rebuild the config from the `config` object of a JSON summary.
pub fn config_from_summary(json: &str) -> Result<RunConfig> {
    let v: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::Validation(format!("JSON decoding: {e}")))?;
    let obj = v
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| Error::Validation("summary has no config object".into()))?;
    let mut map = std::collections::BTreeMap::new();
    for (k, val) in obj {
        let s = val
            .as_str()
            .ok_or_else(|| Error::config(k.clone(), "config values must be strings"))?;
        map.insert(k.clone(), s.to_string());
    }
    RunConfig::from_map(&map)
}

/// Writes files into one output directory.
#[derive(Debug)]
pub struct ReportWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
