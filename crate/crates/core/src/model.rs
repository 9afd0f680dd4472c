//! Potential families, model parameters, windows and the oscillator ground state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Number of sample points used when checking tabulated potentials.
const SLOPE_CHECK_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    CosineBump,
    SmoothBump,
    Tabulated,
}

impl PotentialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PotentialKind::CosineBump => "cosine-bump",
            PotentialKind::SmoothBump => "smooth-bump",
            PotentialKind::Tabulated => "tabulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cosine-bump" => Some(PotentialKind::CosineBump),
            "smooth-bump" => Some(PotentialKind::SmoothBump),
            "tabulated" => Some(PotentialKind::Tabulated),
            _ => None,
        }
    }
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        d[n - 1] = end_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        Self { x, y, d }
    }

    fn locate(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dh00 = 6.0 * s * (s - 1.0);
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = -dh00;
        let dh11 = s * (3.0 * s - 2.0);
        let dv = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
        (v, dv)
    }

    fn integral(&self) -> f64 {
        (0..self.x.len() - 1)
            .map(|i| {
                let h = self.x[i + 1] - self.x[i];
                h * (self.y[i] + self.y[i + 1]) / 2.0 + h * h * (self.d[i] - self.d[i + 1]) / 12.0
            })
            .sum()
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 <= 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// A compactly supported, non-negative potential `V` with support in `[-a, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    a: f64,
    v0: f64,
    integral: f64,
    samples: Option<Vec<(f64, f64)>>,
    interp: Option<Pchip>,
}

/// Build one of the analytic potential families.
///
/// `cosine-bump` is `v0 cos²(πx/2a)` and `smooth-bump` is
/// `v0 exp(1 - 1/(1-(x/a)²))`, both on `[-a, a]` and zero outside.
pub fn make_potential(kind: PotentialKind, a: f64, v0: f64) -> Result<PotentialSpec> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("potential.a", format!("must be positive, got {a}")));
    }
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(Error::param("potential.v0", format!("must be positive, got {v0}")));
    }
    let integral = match kind {
        PotentialKind::CosineBump => a * v0,
        PotentialKind::SmoothBump => {
            let unit = quadrature::adaptive(
                |u: f64| {
                    if u.abs() >= 1.0 {
                        0.0
                    } else {
                        (1.0 - 1.0 / (1.0 - u * u)).exp()
                    }
                },
                -1.0,
                1.0,
                1e-15,
                1e-14,
            )?;
            a * v0 * unit.value
        }
        PotentialKind::Tabulated => {
            return Err(Error::param(
                "potential.kind",
                "tabulated potentials are built with PotentialSpec::tabulated",
            ))
        }
    };
    Ok(PotentialSpec {
        kind,
        a,
        v0,
        integral,
        samples: None,
        interp: None,
    })
}

impl PotentialSpec {
    /// Tabulated potential interpolated by a monotone cubic.
    ///
    /// Samples must be sorted, lie in `[-a, a]`, be non-negative and vanish at
    /// both ends; the interpolant's slope is checked against `slope_bound` on
    /// a dense grid.
    pub fn tabulated(a: f64, samples: Vec<(f64, f64)>, slope_bound: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param("potential.a", format!("must be positive, got {a}")));
        }
        if samples.len() < 3 {
            return Err(Error::Validation("tabulated potential needs at least 3 samples".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Validation("sample abscissae must be strictly increasing".into()));
            }
        }
        for &(x, v) in &samples {
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::Validation("non-finite sample".into()));
            }
            if v < 0.0 {
                return Err(Error::Validation(format!("negative sample V({x}) = {v}")));
            }
            if x.abs() > a {
                return Err(Error::Validation(format!("sample at x = {x} lies outside [-a, a]")));
            }
        }
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        if first.1 != 0.0 || last.1 != 0.0 {
            return Err(Error::Validation(
                "tabulated potential must vanish at both ends of its support".into(),
            ));
        }
        let v0 = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        if v0 <= 0.0 {
            return Err(Error::Validation("tabulated potential is identically zero".into()));
        }
        let interp = Pchip::new(
            samples.iter().map(|s| s.0).collect(),
            samples.iter().map(|s| s.1).collect(),
        );
        let (lo, hi) = (first.0, last.0);
        for k in 0..SLOPE_CHECK_POINTS {
            let x = lo + (hi - lo) * k as f64 / (SLOPE_CHECK_POINTS - 1) as f64;
            let (_, dv) = interp.eval(x);
            if dv.abs() > slope_bound {
                return Err(Error::Validation(format!(
                    "slope |V'({x:.4})| = {:.3e} exceeds bound {slope_bound:.3e}",
                    dv.abs()
                )));
            }
        }
        let integral = interp.integral();
        Ok(Self {
            kind: PotentialKind::Tabulated,
            a,
            v0,
            integral,
            samples: Some(samples),
            interp: Some(interp),
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Support half-width `a`.
    pub fn half_width(&self) -> f64 {
        self.a
    }

    /// Amplitude; equals the sup norm.
    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn sup_norm(&self) -> f64 {
        self.v0
    }

    /// `∫ V dx`.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn samples(&self) -> Option<&[(f64, f64)]> {
        self.samples.as_deref()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.a {
            return 0.0;
        }
        match self.kind {
            PotentialKind::CosineBump => {
                let c = (PI * x / (2.0 * self.a)).cos();
                self.v0 * c * c
            }
            PotentialKind::SmoothBump => {
                let u = x / self.a;
                self.v0 * (1.0 - 1.0 / (1.0 - u * u)).exp()
            }
            PotentialKind::Tabulated => {
                let p = self.interp.as_ref().expect("tabulated interpolant");
                if x <= p.x[0] || x >= p.x[p.x.len() - 1] {
                    0.0
                } else {
                    p.eval(x).0.max(0.0)
                }
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x.abs() >= self.a {
            return 0.0;
        }
        match self.kind {
            PotentialKind::CosineBump => -self.v0 * PI / (2.0 * self.a) * (PI * x / self.a).sin(),
            PotentialKind::SmoothBump => {
                let u = x / self.a;
                let q = 1.0 - u * u;
                self.eval(x) * (-2.0 * u / (self.a * q * q))
            }
            PotentialKind::Tabulated => {
                let p = self.interp.as_ref().expect("tabulated interpolant");
                if x <= p.x[0] || x >= p.x[p.x.len() - 1] {
                    0.0
                } else {
                    p.eval(x).1
                }
            }
        }
    }

    /// Points where `V` is less smooth; quadrature panels should break there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.samples {
            Some(s) => s.iter().map(|p| p.0).collect(),
            None => vec![-self.a, 0.0, self.a],
        }
    }
}

/// Frequency, coupling and potential defining both `L` and `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub lambda: f64,
    pub potential: PotentialSpec,
}

impl ModelParams {
    pub fn new(omega: f64, lambda: f64, potential: PotentialSpec) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::param("model.omega", format!("must be positive, got {omega}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::param("model.lambda", format!("must be non-negative, got {lambda}")));
        }
        Ok(Self {
            omega,
            lambda,
            potential,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.omega, lambda, self.potential.clone())
    }

    /// True when the coupling term vanishes identically.
    pub fn is_free(&self) -> bool {
        self.lambda == 0.0
    }

    /// The potential term of the comparison operator, `ω² - λV(x)`.
    pub fn comparison_potential(&self, x: f64) -> f64 {
        self.omega * self.omega - self.lambda * self.potential.eval(x)
    }
}

/// Normalized ground state `g(y) = (ω/π)^{1/4} exp(-ωy²/2)` of
/// `-d²/dy² + ω²y²`, with eigenvalue `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorGroundState {
    pub omega: f64,
    pub eigenvalue: f64,
    amplitude: f64,
}

pub fn oscillator_ground_state(omega: f64) -> Result<OscillatorGroundState> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", format!("must be positive, got {omega}")));
    }
    Ok(OscillatorGroundState {
        omega,
        eigenvalue: omega,
        amplitude: (omega / PI).powf(0.25),
    })
}

impl OscillatorGroundState {
    pub fn value(&self, y: f64) -> f64 {
        self.amplitude * (-0.5 * self.omega * y * y).exp()
    }

    pub fn derivative(&self, y: f64) -> f64 {
        -self.omega * y * self.value(y)
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        (self.omega * self.omega * y * y - self.omega) * self.value(y)
    }

    /// Half-width beyond which `g²` is below `1e-300`-ish underflow noise.
    pub fn effective_half_width(&self) -> f64 {
        (2.0 * 36.0 / self.omega).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowRole {
    /// `χ` on `[1, 2]` for the critical Weyl sequence (variable `y/n`).
    WeylY,
    /// `η` on `[1, 2]` for the subcritical Weyl sequence (variable `x/k`).
    WeylX,
    /// `χ` on `[-1, 1]` for the trial function.
    Trial,
}

/// Support, normalization constant and (trial only) the middle-half minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub support: (f64, f64),
    pub normalization: f64,
    pub alpha: Option<f64>,
}

/// Smooth bump `N exp(-1/((z-z0)(z1-z)))` with `∫ χ² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub role: WindowRole,
    pub spec: WindowSpec,
}

pub fn make_window(role: WindowRole) -> Window {
    let support = match role {
        WindowRole::WeylY | WindowRole::WeylX => (1.0, 2.0),
        WindowRole::Trial => (-1.0, 1.0),
    };
    let (z0, z1) = support;
    let raw = |z: f64| unnormalized(z0, z1, z).0;
    let sq = quadrature::adaptive(|z| raw(z).powi(2), z0, z1, 1e-16, 1e-13)
        .expect("bump integral converges");
    let normalization = 1.0 / sq.value.sqrt();
    let alpha = match role {
        WindowRole::Trial => Some(normalization * (-4.0f64 / 3.0).exp()),
        _ => None,
    };
    Window {
        role,
        spec: WindowSpec {
            support,
            normalization,
            alpha,
        },
    }
}

/// Unnormalized bump and its first two derivatives.
fn unnormalized(z0: f64, z1: f64, z: f64) -> (f64, f64, f64) {
    if z <= z0 || z >= z1 {
        return (0.0, 0.0, 0.0);
    }
    let q = (z - z0) * (z1 - z);
    let dq = z0 + z1 - 2.0 * z;
    let b = (-1.0 / q).exp();
    if b == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q2 = q * q;
    let d1 = b * dq / q2;
    let d2 = b * (dq * dq / (q2 * q2) - 2.0 / q2 - 2.0 * dq * dq / (q2 * q));
    (b, d1, d2)
}

impl Window {
    pub fn support(&self) -> (f64, f64) {
        self.spec.support
    }

    pub fn value(&self, z: f64) -> f64 {
        let (z0, z1) = self.spec.support;
        self.spec.normalization * unnormalized(z0, z1, z).0
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let (z0, z1) = self.spec.support;
        self.spec.normalization * unnormalized(z0, z1, z).1
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        let (z0, z1) = self.spec.support;
        self.spec.normalization * unnormalized(z0, z1, z).2
    }

    /// `(χ, χ', χ'')` at `z`.
    pub fn jet(&self, z: f64) -> (f64, f64, f64) {
        let (z0, z1) = self.spec.support;
        let (b, d1, d2) = unnormalized(z0, z1, z);
        let n = self.spec.normalization;
        (n * b, n * d1, n * d2)
    }

    /// `∫ w(z) f(χ, χ', χ'') dz` over the support by adaptive quadrature.
    pub fn integrate<F: Fn(f64, (f64, f64, f64)) -> f64>(&self, f: F) -> f64 {
        let (z0, z1) = self.spec.support;
        quadrature::adaptive(|z| f(z, self.jet(z)), z0, z1, 1e-15, 1e-12)
            .expect("window integrals converge")
            .value
    }
}
