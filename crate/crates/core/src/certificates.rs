//! Quasimode residuals and trial-function energies for `H` on `ℝ²`.
//!
//! Nothing here touches a 2D grid. Each family is written in closed form,
//! `|(H - μ)ψ|²` is expanded analytically, and the remaining one-dimensional
//! integrals are done by Gauss quadrature. Since `H` is self-adjoint,
//! `‖(H - μ)ψ‖/‖ψ‖ = r` proves `σ(H) ∩ [μ - r, μ + r] ≠ ∅`.
//!
//! Critical family, `t = xy`, `z = y/n`:
//! `ψₙ = h(xy) e^{i√μ y} χ(y/n)` with
//! `Re (H-μ)ψₙ = γ₀y²hχ - (t/y)²h''χ - (2t/ny)h'χ' - hχ''/n²` and
//! `Im (H-μ)ψₙ = -2√μ ((t/y)h'χ + hχ'/n)`.
//!
//! Subcritical family, `ν = √(μ-ω)`:
//! `φ_k = k^{-1/2} g(y) e^{iνx} η(x/k)` with
//! `(H-μ)φ_k = -k^{-1/2} e^{iνx} g (η''/k² + λy²V(xy)η + 2iνη'/k)`.

use serde::Serialize;

use crate::analysis1d::{GroundState1D, Regime};
use crate::error::{Error, Result};
use crate::model::{make_window, oscillator_ground_state, ModelParams, Window, WindowRole};
use crate::par;
use crate::quadrature::{adaptive, adaptive_with_breaks, GaussLegendre};

const Z_ABS_TOL: f64 = 1e-16;
const Z_REL_TOL: f64 = 1e-11;
/// Contamination from `γ₀ ≠ 0` allowed relative to the structural residual.
pub const CONTAMINATION_FRACTION: f64 = 0.1;
/// Default sequence index for inclusion certificates.
pub const DEFAULT_CERTIFICATE_INDEX: usize = 32;

/// Named contribution `‖term‖/‖ψ‖` to a residual.
#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiModeReport {
    pub regime: Regime,
    pub mu: f64,
    /// Sequence indices `n` (critical) or `k` (subcritical).
    pub params_list: Vec<usize>,
    pub norms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub structural_residuals: Vec<f64>,
    /// Least-squares slope of `ln(structural residual)` against `ln(index)`.
    pub fitted_slope: Option<f64>,
    /// Per-index term breakdown, same order as `params_list`.
    pub terms: Vec<Vec<Term>>,
    /// `‖γ₀y²hχ‖/‖ψ‖`; zero for the subcritical family.
    pub contamination: Vec<f64>,
    /// Largest admissible `n` for the critical family.
    pub n_max: Option<usize>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_indices(list: &[usize], name: &'static str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if list[0] == 0 || list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "must be positive and strictly ascending"));
    }
    Ok(())
}

fn z_integral<F: FnMut(f64) -> f64>(f: F, w: &Window) -> Result<f64> {
    let (z0, z1) = w.support();
    Ok(adaptive(f, z0, z1, Z_ABS_TOL, Z_REL_TOL)?.value)
}

/// Gram matrix of `{h, t²h'', t h'}` over the real line.
fn ground_state_moments(gs: &GroundState1D) -> Result<[[f64; 3]; 3]> {
    let grid = gs
        .grid
        .ok_or_else(|| Error::Domain("L has no eigenfunction below ω² (λ = 0)".into()))?;
    let r = grid.half_width();
    let mut breaks = vec![-r, r];
    breaks.extend(gs.params().potential.breakpoints().into_iter().filter(|x| x.abs() < r));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let gl = GaussLegendre::new(8);
    let pts = gl.points(&breaks, grid.spacing() * (1.0 + 1e-9));
    let blocks = par::map_range(pts.len().div_ceil(par::BLOCK), |b| {
        let mut m = [[0.0; 3]; 3];
        for &(t, w) in &pts[b * par::BLOCK..((b + 1) * par::BLOCK).min(pts.len())] {
            let (h, h1, h2) = gs.jet(t);
            let f = [h, t * t * h2, t * h1];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * f[i] * f[j];
                }
            }
        }
        m
    });
    let mut m = [[0.0; 3]; 3];
    for b in blocks {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += b[i][j];
            }
        }
    }
    Ok(m)
}

fn quad_form(m: &[[f64; 3]; 3], c: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += c[i] * m[i][j] * c[j];
        }
    }
    s
}

/// Ingredients of the critical residual that do not depend on `n`.
struct CriticalParts {
    /// `‖ψ‖²`
    norm2: f64,
    /// Structural residual² = `s2/n² + s4/n⁴`, before dividing by `‖ψ‖²`.
    s2: f64,
    s4: f64,
    /// Main term² = `γ₀² n⁴ main`.
    main: f64,
}

fn critical_parts(m: &[[f64; 3]; 3], w: &Window, mu: f64) -> Result<CriticalParts> {
    let norm2 = m[0][0] * z_integral(|z| w.value(z).powi(2) / z, w)?;
    // n = 1 coefficient vectors; powers of n factored out
    let s4 = z_integral(
        |z| {
            let (c, c1, c2) = w.jet(z);
            quad_form(m, [-c2, -c / (z * z), -2.0 * c1 / z]) / z
        },
        w,
    )?;
    let s2 = 4.0
        * mu
        * z_integral(
            |z| {
                let (c, c1, _) = w.jet(z);
                quad_form(m, [c1, 0.0, c / z]) / z
            },
            w,
        )?;
    let main = m[0][0] * z_integral(|z| z.powi(3) * w.value(z).powi(2), w)?;
    Ok(CriticalParts { norm2, s2, s4, main })
}

/// Largest `n` with `U n² √main ≤ f · √(s2/n² + s4/n⁴)`.
fn critical_n_max(p: &CriticalParts, uncertainty: f64) -> usize {
    if uncertainty == 0.0 {
        return usize::MAX;
    }
    let ok = |n: f64| {
        let lhs = uncertainty * n * n * p.main.sqrt();
        let rhs = CONTAMINATION_FRACTION * (p.s2 / (n * n) + p.s4 / n.powi(4)).sqrt();
        lhs <= rhs
    };
    if !ok(1.0) {
        return 0;
    }
    let (mut lo, mut hi) = (1usize, 2usize);
    while ok(hi as f64) {
        lo = hi;
        hi *= 2;
        if hi > 1 << 40 {
            return lo;
        }
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid as f64) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Residuals of the critical Weyl sequence `ψₙ`.
///
/// `regime_tol` is the half-width of the critical band; indices above the
/// contamination limit `n_max` are rejected.
pub fn critical_quasimode_residual(
    gs: &GroundState1D,
    mu: f64,
    n_list: &[usize],
    regime_tol: f64,
) -> Result<QuasiModeReport> {
    if Regime::from_gamma0(gs.gamma0, regime_tol) != Regime::Critical {
        return Err(Error::Regime(format!(
            "critical quasimodes need |γ₀| ≤ {regime_tol:e}, got γ₀ = {:e}",
            gs.gamma0
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("critical quasimodes certify μ ≥ 0, got {mu}")));
    }
    check_indices(n_list, "n_list")?;
    let m = ground_state_moments(gs)?;
    let w = make_window(WindowRole::WeylY);
    let parts = critical_parts(&m, &w, mu)?;
    let g0 = gs.gamma0;
    let n_max = critical_n_max(&parts, g0.abs() + gs.error_estimate);
    if let Some(&bad) = n_list.iter().find(|&&n| n > n_max) {
        return Err(Error::Accuracy(format!(
            "n = {bad} exceeds n_max = {n_max}: γ₀ uncertainty {:.2e} amplified by y⁴ would exceed \
             {CONTAMINATION_FRACTION} of the structural residual",
            g0.abs() + gs.error_estimate
        )));
    }
    let norm = parts.norm2.sqrt();

    let per_n: Vec<Result<(f64, f64, f64, Vec<Term>)>> = par::map_range(n_list.len(), |i| {
        let n = n_list[i] as f64;
        let (n2, n4) = (n * n, n.powi(4));
        let total2 = z_integral(
            |z| {
                let (c, c1, c2) = w.jet(z);
                let re = [
                    g0 * n2 * z * z * c - c2 / n2,
                    -c / (n2 * z * z),
                    -2.0 * c1 / (n2 * z),
                ];
                let im = [-2.0 * mu.sqrt() * c1 / n, 0.0, -2.0 * mu.sqrt() * c / (n * z)];
                (quad_form(&m, re) + quad_form(&m, im)) / z
            },
            &w,
        )?;
        let structural2 = parts.s2 / n2 + parts.s4 / n4;
        let term = |name, v: f64| Term {
            name,
            value: v.max(0.0).sqrt() / norm,
        };
        let t1 = m[1][1] / n4 * z_integral(|z| w.value(z).powi(2) / z.powi(5), &w)?;
        let t2 = 4.0 * mu * m[2][2] / n2 * z_integral(|z| w.value(z).powi(2) / z.powi(3), &w)?;
        let t3 = 4.0 * m[2][2] / n4 * z_integral(|z| w.derivative(z).powi(2) / z.powi(3), &w)?;
        let t4 = 4.0 * mu * m[0][0] / n2 * z_integral(|z| w.derivative(z).powi(2) / z, &w)?;
        let t5 = m[0][0] / n4 * z_integral(|z| w.second_derivative(z).powi(2) / z, &w)?;
        let terms = vec![
            term("x2_h2", t1),
            term("x_h1_sqrtmu", t2),
            term("x_h1_chi1", t3),
            term("h_chi1_sqrtmu", t4),
            term("h_chi2", t5),
        ];
        let contamination = g0.abs() * n2 * parts.main.sqrt() / norm;
        Ok((
            total2.max(0.0).sqrt() / norm,
            structural2.max(0.0).sqrt() / norm,
            contamination,
            terms,
        ))
    });

    let mut report = QuasiModeReport {
        regime: Regime::Critical,
        mu,
        params_list: n_list.to_vec(),
        norms: vec![norm; n_list.len()],
        residuals: Vec::new(),
        structural_residuals: Vec::new(),
        fitted_slope: None,
        terms: Vec::new(),
        contamination: Vec::new(),
        n_max: Some(n_max),
    };
    for r in per_n {
        let (res, sres, cont, terms) = r?;
        report.residuals.push(res);
        report.structural_residuals.push(sres);
        report.contamination.push(cont);
        report.terms.push(terms);
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    report.fitted_slope = loglog_slope(&xs, &report.structural_residuals);
    Ok(report)
}

/// Gauss points covering the support of `V` (split at its breakpoints).
fn potential_points(params: &ModelParams) -> Vec<(f64, f64)> {
    let a = params.potential.half_width();
    let mut breaks = params.potential.breakpoints();
    breaks.push(-a);
    breaks.push(a);
    breaks.retain(|x| x.abs() <= a);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    GaussLegendre::new(12).points(&breaks, a / 32.0)
}

/// Residuals of the subcritical Weyl sequence `φ_k` at `μ ≥ ω`.
pub fn subcritical_quasimode_residual(
    params: &ModelParams,
    mu: f64,
    k_list: &[usize],
) -> Result<QuasiModeReport> {
    let omega = params.omega;
    if !(mu >= omega && mu.is_finite()) {
        return Err(Error::Domain(format!(
            "subcritical quasimodes certify μ ≥ ω = {omega}, got {mu}"
        )));
    }
    check_indices(k_list, "k_list")?;
    let g = oscillator_ground_state(omega)?;
    let eta = make_window(WindowRole::WeylX);
    let nu2 = mu - omega;
    let lam = params.lambda;
    let pts = potential_points(params);

    let ylim = g.effective_half_width();
    let g_norm2 = GaussLegendre::new(16).composite(|y| g.value(y).powi(2), -ylim, ylim, 64);
    let eta_norm2 = z_integral(|z| eta.value(z).powi(2), &eta)?;
    let norm = (g_norm2 * eta_norm2).sqrt();
    let int_eta1 = z_integral(|z| eta.derivative(z).powi(2), &eta)?;
    let int_eta2 = z_integral(|z| eta.second_derivative(z).powi(2), &eta)?;

    // ∫ s^p V(s)^q g²(s/w) ds
    let inner = |p: i32, q: i32, w: f64| -> f64 {
        pts.iter()
            .map(|&(s, wt)| {
                let v = params.potential.eval(s);
                wt * s.powi(p) * v.powi(q) * g.value(s / w).powi(2)
            })
            .sum()
    };

    let per_k: Vec<Result<(f64, Vec<Term>)>> = par::map_range(k_list.len(), |i| {
        let k = k_list[i] as f64;
        let t_eta2 = int_eta2 / k.powi(4);
        let t_eta1 = 4.0 * nu2 * int_eta1 / (k * k);
        let (t_pot, t_cross) = if lam == 0.0 {
            (0.0, 0.0)
        } else {
            let pot = z_integral(|z| eta.value(z).powi(2) / z.powi(5) * inner(4, 2, k * z), &eta)?;
            let cross = z_integral(
                |z| {
                    let (e, _, e2) = eta.jet(z);
                    e * e2 / z.powi(3) * inner(2, 1, k * z)
                },
                &eta,
            )?;
            (lam * lam * pot / k.powi(5), 2.0 * lam * cross / k.powi(5))
        };
        let total2 = t_eta2 + t_eta1 + t_pot + t_cross;
        let term = |name, v: f64| Term {
            name,
            value: v.abs().sqrt() / norm,
        };
        let terms = vec![
            term("eta2", t_eta2),
            term("eta1_nu", t_eta1),
            term("potential", t_pot),
            Term {
                name: "cross_signed_sq",
                value: t_cross / (norm * norm),
            },
        ];
        Ok((total2.max(0.0).sqrt() / norm, terms))
    });

    let mut report = QuasiModeReport {
        regime: Regime::Subcritical,
        mu,
        params_list: k_list.to_vec(),
        norms: vec![norm; k_list.len()],
        residuals: Vec::new(),
        structural_residuals: Vec::new(),
        fitted_slope: None,
        terms: Vec::new(),
        contamination: vec![0.0; k_list.len()],
        n_max: None,
    };
    for r in per_k {
        let (res, terms) = r?;
        report.residuals.push(res);
        report.structural_residuals.push(res);
        report.terms.push(terms);
    }
    let xs: Vec<f64> = k_list.iter().map(|&k| k as f64).collect();
    report.fitted_slope = loglog_slope(&xs, &report.structural_residuals);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFormReport {
    pub k_list: Vec<usize>,
    /// `Q_H[φ_k]/‖φ_k‖²`.
    pub form_values: Vec<f64>,
    /// `P(k)`, the potential part of the form.
    pub potential_terms: Vec<f64>,
    /// `ω - min form value`.
    pub margin: f64,
    pub k_star: Option<usize>,
}

/// `(λ/k) ∫∫ y² V(xy) g²(y) χ²(x/k) dx dy` in the order `t = xy` inner,
/// `y` outer.
pub fn trial_potential_term(params: &ModelParams, k: f64) -> Result<f64> {
    if params.is_free() {
        return Ok(0.0);
    }
    let g = oscillator_ground_state(params.omega)?;
    let chi = make_window(WindowRole::Trial);
    let a = params.potential.half_width();
    let vbreaks = params.potential.breakpoints();
    let inner = |y: f64| -> f64 {
        let w = k * y;
        let lim = a.min(w);
        let mut breaks: Vec<f64> = vbreaks.iter().copied().filter(|x| x.abs() < lim).collect();
        breaks.push(-lim);
        breaks.push(lim);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        adaptive_with_breaks(
            |t| params.potential.eval(t) * chi.value(t / w).powi(2),
            &breaks,
            1e-15,
            1e-12,
        )
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
    };
    let ylim = g.effective_half_width();
    let edge = (a / k).min(ylim);
    let outer = adaptive_with_breaks(
        |y| if y <= 0.0 { 0.0 } else { y * g.value(y).powi(2) * inner(y) },
        &[0.0, edge, ylim],
        1e-15,
        1e-12,
    )?;
    if !outer.value.is_finite() {
        return Err(Error::Accuracy("trial-form inner quadrature failed".into()));
    }
    Ok(2.0 * params.lambda / k * outer.value)
}

/// `Q_H[φ]` for `φ = k^{-1/2} g(y) χ(x/k)` at each `k`.
pub fn trial_form_value(params: &ModelParams, k_list: &[usize]) -> Result<TrialFormReport> {
    check_indices(k_list, "k_list")?;
    let chi = make_window(WindowRole::Trial);
    let kinetic = chi.integrate(|_, (_, d, _)| d * d);
    let pots: Vec<Result<f64>> =
        par::map_range(k_list.len(), |i| trial_potential_term(params, k_list[i] as f64));
    let mut form_values = Vec::with_capacity(k_list.len());
    let mut potential_terms = Vec::with_capacity(k_list.len());
    for (i, p) in pots.into_iter().enumerate() {
        let p = p?;
        let k = k_list[i] as f64;
        potential_terms.push(p);
        form_values.push(kinetic / (k * k) + params.omega - p);
    }
    let min = form_values.iter().copied().fold(f64::INFINITY, f64::min);
    let k_star = k_list
        .iter()
        .zip(&form_values)
        .find(|(_, &q)| q < params.omega)
        .map(|(&k, _)| k);
    Ok(TrialFormReport {
        k_list: k_list.to_vec(),
        form_values,
        potential_terms,
        margin: params.omega - min,
        k_star,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum InclusionCertificate {
    /// `σ(H) ∩ [μ - radius, μ + radius] ≠ ∅`.
    Certified {
        mu: f64,
        radius: f64,
        index: usize,
        regime: Regime,
    },
    Skipped { mu: f64, reason: String },
}

impl InclusionCertificate {
    pub fn mu(&self) -> f64 {
        match self {
            InclusionCertificate::Certified { mu, .. } | InclusionCertificate::Skipped { mu, .. } => *mu,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            InclusionCertificate::Certified { radius, .. } => Some(*radius),
            InclusionCertificate::Skipped { .. } => None,
        }
    }

    pub fn statement(&self) -> String {
        match self {
            InclusionCertificate::Certified { mu, radius, index, regime } => format!(
                "sigma(H) meets [{:.6}, {:.6}] (mu = {mu}, radius = {radius:.6e}, {} quasimode index {index})",
                mu - radius,
                mu + radius,
                regime.as_str()
            ),
            InclusionCertificate::Skipped { mu, reason } => format!("mu = {mu}: skipped, {reason}"),
        }
    }
}

/// Inclusion certificates for each `μ`, using the quasimode family of the
/// regime at index `index` (lowered to `n_max` when needed).
pub fn spectrum_certificate(
    params: &ModelParams,
    gs: &GroundState1D,
    regime_tol: f64,
    mu_grid: &[f64],
    index: usize,
) -> Result<Vec<InclusionCertificate>> {
    let regime = Regime::from_gamma0(gs.gamma0, regime_tol);
    let out: Vec<Result<InclusionCertificate>> = par::map_range(mu_grid.len(), |i| {
        let mu = mu_grid[i];
        let skip = |reason: &str| {
            Ok(InclusionCertificate::Skipped {
                mu,
                reason: reason.to_string(),
            })
        };
        match regime {
            Regime::Supercritical => skip("supercritical regime has no quasimode construction here"),
            Regime::Critical if mu < 0.0 => skip("below certified range"),
            Regime::Subcritical if mu < params.omega => skip("below certified range"),
            Regime::Critical => {
                let probe = critical_quasimode_residual(gs, mu, &[1], regime_tol)?;
                let n = index.min(probe.n_max.unwrap_or(index)).max(1);
                let r = critical_quasimode_residual(gs, mu, &[n], regime_tol)?;
                Ok(InclusionCertificate::Certified {
                    mu,
                    radius: r.residuals[0],
                    index: n,
                    regime,
                })
            }
            Regime::Subcritical => {
                let r = subcritical_quasimode_residual(params, mu, &[index])?;
                Ok(InclusionCertificate::Certified {
                    mu,
                    radius: r.residuals[0],
                    index,
                    regime,
                })
            }
        }
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_potential, PotentialKind};

    fn params(lambda: f64) -> ModelParams {
        let v = make_potential(PotentialKind::CosineBump, 1.0, 1.0).unwrap();
        ModelParams::new(1.0, lambda, v).unwrap()
    }

    #[test]
    fn slope_of_power_law() {
        let x = [4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn free_trial_form_is_threshold_plus_kinetic() {
        let r = trial_form_value(&params(0.0), &[1, 2, 4]).unwrap();
        assert!(r.k_star.is_none());
        assert!(r.form_values.iter().all(|&q| q > 1.0));
        let chi = make_window(WindowRole::Trial);
        let kin = chi.integrate(|_, (_, d, _)| d * d);
        assert!((r.form_values[1] - 1.0 - kin / 4.0).abs() < 1e-12);
    }

    #[test]
    fn subcritical_family_rejects_mu_below_omega() {
        assert!(matches!(
            subcritical_quasimode_residual(&params(1.0), 0.5, &[4]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn subcritical_norm_is_one() {
        let r = subcritical_quasimode_residual(&params(1.0), 1.3, &[2, 8]).unwrap();
        for n in r.norms {
            assert!((n - 1.0).abs() < 1e-9, "{n}");
        }
    }

    #[test]
    fn indices_must_ascend() {
        assert!(subcritical_quasimode_residual(&params(1.0), 1.0, &[8, 4]).is_err());
        assert!(trial_form_value(&params(1.0), &[]).is_err());
    }
}
