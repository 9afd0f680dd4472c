//! Both sides of the eigenvalue-moment inequality
//!
//! ```text
//! tr(ω - H)₊^σ ≤ 2 λ^{2σ} ‖V‖^{2σ} a^{4σ} Σₙ [α₁^{2σ} (√(λ‖V‖) a + (n-1)π)^{2σ}]⁻¹
//!              + (2α₁√(ω + λα₁²‖V‖)/π + 1)² (ω + λα₁²‖V‖)^σ
//! ```
//!
//! for `σ > 1/2`, with `α₁ = max{√κ, 2ω/γ₀, √(λ‖V‖) a/√(2ω)}`. The left side
//! comes from 2D box eigenvalues on a ladder of growing boxes.

use serde::Serialize;

use crate::analysis1d::{gamma0, kappa, KappaReport, Regime, DEFAULT_ACCURACY, DEFAULT_REGIME_TOL};
use crate::assembly::{assemble_h, AssemblyOptions};
use crate::eigen::{extremal_sparse_eigs, LanczosOptions};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::ModelParams;

/// Cap on explicitly summed series terms; the integral-test tail covers the rest.
pub const MAX_SERIES_TERMS: usize = 1_000_000;
/// Relative size of the tail at which summation stops early.
pub const SERIES_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alpha1Branch {
    SqrtKappa,
    GapRatio,
    Coupling,
}

#[derive(Debug, Clone, Serialize)]
pub struct Alpha1 {
    pub value: f64,
    pub branch: Alpha1Branch,
    /// `[√κ, 2ω/γ₀, √(λ‖V‖) a/√(2ω)]`
    pub branches: [f64; 3],
    /// `λ‖V‖a²/α₁²`, must not exceed `2ω`.
    pub coupling_ratio: f64,
    pub coupling_ok: bool,
    /// `α₁ ≥ 2ω/γ₀`
    pub gap_ok: bool,
}

pub fn alpha1(params: &ModelParams, gamma0: f64, kappa: f64) -> Result<Alpha1> {
    if !(gamma0 > 0.0) {
        return Err(Error::Regime(format!("α₁ needs γ₀ > 0, got {gamma0:e}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
    }
    let w = params.omega;
    let lv = params.lambda * params.potential.sup_norm();
    let a = params.potential.half_width();
    let branches = [kappa.sqrt(), 2.0 * w / gamma0, lv.sqrt() * a / (2.0 * w).sqrt()];
    let (mut idx, mut value) = (0, branches[0]);
    for (i, &b) in branches.iter().enumerate().skip(1) {
        if b > value {
            idx = i;
            value = b;
        }
    }
    let branch = [Alpha1Branch::SqrtKappa, Alpha1Branch::GapRatio, Alpha1Branch::Coupling][idx];
    let coupling_ratio = lv * a * a / (value * value);
    Ok(Alpha1 {
        value,
        branch,
        branches,
        coupling_ratio,
        coupling_ok: coupling_ratio <= 2.0 * w * (1.0 + 1e-14),
        gap_ok: value >= branches[1],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RhsBound {
    pub sigma: f64,
    pub alpha1: f64,
    /// Explicit partial sum times the prefactor.
    pub series_partial: f64,
    /// Integral-test bound on the remainder, same scaling.
    pub series_tail: f64,
    pub series_terms: usize,
    pub rhs_series: f64,
    pub rhs_box: f64,
    pub rhs_total: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.5 && sigma.is_finite()) {
        return Err(Error::param(
            "sigma",
            format!("σ = {sigma}: the series Σ n^(-2σ) converges only for σ > 1/2"),
        ));
    }
    Ok(())
}

/// `2(λ‖V‖a²/α₁)^{2σ}`, the factor in front of the series, and the
/// offset `c = √(λ‖V‖) a`.
fn series_scale(params: &ModelParams, sigma: f64, alpha1: f64) -> (f64, f64) {
    let lv = params.lambda * params.potential.sup_norm();
    let a = params.potential.half_width();
    let pre = 2.0 * (lv * a * a / alpha1).powf(2.0 * sigma);
    (pre, lv.sqrt() * a)
}

/// Series prefactor times `Σ_{n=1}^{terms} (c + (n-1)π)^{-2σ}`, with no
/// check on `σ`.
pub fn series_partial_sum(params: &ModelParams, sigma: f64, alpha1: f64, terms: usize) -> f64 {
    let (pre, c) = series_scale(params, sigma, alpha1);
    if pre == 0.0 {
        return 0.0;
    }
    let s: f64 = (1..=terms)
        .map(|n| (c + (n - 1) as f64 * std::f64::consts::PI).powf(-2.0 * sigma))
        .sum();
    pre * s
}

/// Integral-test bound on the series remainder after `terms` terms.
pub fn series_tail_bound(params: &ModelParams, sigma: f64, alpha1: f64, terms: usize) -> f64 {
    let (pre, c) = series_scale(params, sigma, alpha1);
    if pre == 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let e = 2.0 * sigma - 1.0;
    pre * (c + (terms as f64 - 1.0) * pi).powf(-e) / (pi * e)
}

pub fn rhs_bound(params: &ModelParams, sigma: f64, alpha1: f64) -> Result<RhsBound> {
    check_sigma(sigma)?;
    if !(alpha1 > 0.0 && alpha1.is_finite()) {
        return Err(Error::param("alpha1", format!("must be positive, got {alpha1}")));
    }
    let (pre, c) = series_scale(params, sigma, alpha1);
    let pi = std::f64::consts::PI;
    let (mut partial, mut terms) = (0.0, 0usize);
    let mut tail = 0.0;
    if pre > 0.0 {
        let e = 2.0 * sigma - 1.0;
        while terms < MAX_SERIES_TERMS {
            terms += 1;
            partial += (c + (terms - 1) as f64 * pi).powf(-2.0 * sigma);
            tail = (c + (terms as f64 - 1.0) * pi).powf(-e) / (pi * e);
            if tail < SERIES_REL_TOL * partial {
                break;
            }
        }
        partial *= pre;
        tail *= pre;
    }
    let m = params.omega + params.lambda * alpha1 * alpha1 * params.potential.sup_norm();
    let rhs_box = (2.0 * alpha1 * m.sqrt() / pi + 1.0).powi(2) * m.powf(sigma);
    let rhs_series = partial + tail;
    Ok(RhsBound {
        sigma,
        alpha1,
        series_partial: partial,
        series_tail: tail,
        series_terms: terms,
        rhs_series,
        rhs_box,
        rhs_total: rhs_series + rhs_box,
    })
}

/// One box `[-X, X] × [-Y, Y]` of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxRung {
    pub x_half_width: f64,
    pub y_half_width: f64,
}

#[derive(Debug, Clone)]
pub struct LadderOptions {
    /// `Δx`; `None` uses the resolution limit `a/(8Y)` of each rung.
    pub dx: Option<f64>,
    pub dy: f64,
    /// Eigenpairs requested per rung.
    pub count: usize,
    pub cauchy_tol: f64,
    /// Eigenvalues in `[ω - threshold_margin, ω)` are left out of the trace.
    pub threshold_margin: f64,
    /// Eigenvalues below `-negative_tol` raise the consistency flag.
    pub negative_tol: f64,
    pub lanczos: LanczosOptions,
    pub assembly: AssemblyOptions,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self {
            dx: None,
            dy: 1.0 / 16.0,
            count: 10,
            cauchy_tol: 1e-4,
            threshold_margin: 1e-2,
            negative_tol: 1e-3,
            lanczos: LanczosOptions::default(),
            assembly: AssemblyOptions::default(),
        }
    }
}

/// Box ladder used by the reference checks.
pub fn default_ladder() -> Vec<BoxRung> {
    [8.0, 12.0, 16.0]
        .into_iter()
        .map(|x| BoxRung {
            x_half_width: x,
            y_half_width: 4.0,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RungSpectrum {
    pub rung: BoxRung,
    pub nx: usize,
    pub ny: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub matvecs: usize,
}

/// Lowest eigenvalues of the Dirichlet box discretization of `H`.
pub fn box_spectrum(
    params: &ModelParams,
    rung: BoxRung,
    count: usize,
    stop_above: Option<f64>,
    opts: &LadderOptions,
) -> Result<RungSpectrum> {
    let dx = opts.dx.unwrap_or(params.potential.half_width() / (8.0 * rung.y_half_width));
    let grid = Grid2D::with_spacing(rung.x_half_width, rung.y_half_width, dx, opts.dy)?;
    let h = assemble_h(params, &grid, &opts.assembly)?;
    let lanczos = LanczosOptions {
        stop_above,
        ..opts.lanczos.clone()
    };
    let r = extremal_sparse_eigs(&h, count.min(h.dim() - 1), &lanczos)?;
    log::info!(
        "box {}×{} ({}×{}): {} eigenvalues, lowest {:.10}, {} matvecs",
        rung.x_half_width,
        rung.y_half_width,
        grid.nx(),
        grid.ny(),
        r.len(),
        r.eigenvalues.first().copied().unwrap_or(f64::NAN),
        r.matvecs
    );
    Ok(RungSpectrum {
        rung,
        nx: grid.nx(),
        ny: grid.ny(),
        eigenvalues: r.eigenvalues,
        residuals: r.residuals,
        converged: r.converged,
        matvecs: r.matvecs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSpectrum {
    pub omega: f64,
    /// Cauchy-converged eigenvalues below `ω - threshold_margin`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues in `[ω - threshold_margin, ω)` on the last rung.
    pub excluded: Vec<f64>,
    /// Eigenvalues below `-negative_tol` on any rung.
    pub negative: Vec<f64>,
    /// Largest eigenvalue change between the last two rungs.
    pub cauchy_change: f64,
    pub rungs: Vec<RungSpectrum>,
    pub source: String,
}

impl DiscreteSpectrum {
    pub fn consistent(&self) -> bool {
        self.negative.is_empty()
    }

    /// `Σ (ω - Eᵢ)^σ` over the retained eigenvalues.
    pub fn moment(&self, sigma: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&e| (self.omega - e).max(0.0).powf(sigma))
            .fold(0.0, |acc, x| acc + x)
    }
}

fn below(values: &[f64], cut: f64) -> Vec<f64> {
    values.iter().copied().filter(|&e| e < cut).collect()
}

/// Eigenvalues of `H` below `ω` from a ladder of boxes, stopping at the first
/// pair of consecutive rungs whose retained eigenvalues agree to `cauchy_tol`.
pub fn discrete_spectrum(
    params: &ModelParams,
    ladder: &[BoxRung],
    opts: &LadderOptions,
) -> Result<DiscreteSpectrum> {
    let omega = params.omega;
    if params.is_free() {
        return Ok(DiscreteSpectrum {
            omega,
            eigenvalues: Vec::new(),
            excluded: Vec::new(),
            negative: Vec::new(),
            cauchy_change: 0.0,
            rungs: Vec::new(),
            source: "λ = 0: σ(H) = [ω, ∞), no eigenvalues below ω".into(),
        });
    }
    if ladder.len() < 2 {
        return Err(Error::param("box_ladder", "needs at least two rungs"));
    }
    let cut = omega - opts.threshold_margin;
    let mut rungs: Vec<RungSpectrum> = Vec::new();
    let mut negative = Vec::new();
    let mut change = f64::INFINITY;
    for &rung in ladder {
        let r = box_spectrum(params, rung, opts.count, Some(omega), opts)?;
        if !r.converged {
            return Err(Error::Unconverged(format!(
                "Lanczos did not converge on the {}×{} box (residuals {:?})",
                rung.x_half_width, rung.y_half_width, r.residuals
            )));
        }
        negative.extend(r.eigenvalues.iter().copied().filter(|&e| e < -opts.negative_tol));
        if let Some(prev) = rungs.last() {
            let (p, q) = (below(&prev.eigenvalues, cut), below(&r.eigenvalues, cut));
            change = if p.len() == q.len() {
                p.iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
        }
        rungs.push(r);
        if change < opts.cauchy_tol {
            break;
        }
    }
    if !(change < opts.cauchy_tol) {
        let trend: Vec<String> = rungs
            .iter()
            .map(|r| format!("X={} Y={}: {:?}", r.rung.x_half_width, r.rung.y_half_width, below(&r.eigenvalues, cut)))
            .collect();
        return Err(Error::Unconverged(format!(
            "box ladder not Cauchy-converged to {:e}: {}",
            opts.cauchy_tol,
            trend.join("; ")
        )));
    }
    let last = rungs.last().expect("at least two rungs");
    let eigenvalues = below(&last.eigenvalues, cut);
    let excluded: Vec<f64> = last.eigenvalues.iter().copied().filter(|&e| e >= cut && e < omega).collect();
    if !excluded.is_empty() {
        log::warn!("left out near-threshold eigenvalues {excluded:?}");
    }
    let n = rungs.len();
    let source = format!(
        "Dirichlet boxes {}, Δy = {}, Δx = {}; last two rungs agree to {:.2e}",
        rungs
            .iter()
            .map(|r| format!("{}×{} ({}×{})", r.rung.x_half_width, r.rung.y_half_width, r.nx, r.ny))
            .collect::<Vec<_>>()
            .join(", "),
        opts.dy,
        opts.dx.map_or("a/(8Y)".to_string(), |d| d.to_string()),
        change
    );
    debug_assert!(n >= 2);
    Ok(DiscreteSpectrum {
        omega,
        eigenvalues,
        excluded,
        negative,
        cauchy_change: change,
        rungs,
        source,
    })
}

/// `tr(ω - H)₊^σ` from the box ladder, with a description of its source.
pub fn lhs_trace(
    params: &ModelParams,
    sigma: f64,
    ladder: &[BoxRung],
    opts: &LadderOptions,
) -> Result<(f64, String)> {
    check_sigma(sigma)?;
    let d = discrete_spectrum(params, ladder, opts)?;
    Ok((d.moment(sigma), d.source))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentBoundReport {
    pub sigma: f64,
    pub gamma0: f64,
    pub kappa: f64,
    pub kappa_step: f64,
    pub alpha1: f64,
    pub alpha1_branch: Alpha1Branch,
    pub rhs_series: f64,
    pub series_tail: f64,
    pub rhs_box: f64,
    pub rhs_total: f64,
    pub lhs: f64,
    pub lhs_source: String,
    pub eigenvalues: Vec<f64>,
    pub consistent: bool,
    pub satisfied: bool,
    pub margin: f64,
}

/// Shared inputs of the bound for one parameter set.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub gamma0: f64,
    pub kappa: KappaReport,
    pub alpha1: Alpha1,
    pub spectrum: DiscreteSpectrum,
}

pub fn bound_inputs(params: &ModelParams, ladder: &[BoxRung], opts: &LadderOptions) -> Result<BoundInputs> {
    let gs = gamma0(params, DEFAULT_ACCURACY)?;
    if Regime::from_gamma0(gs.gamma0, DEFAULT_REGIME_TOL) != Regime::Subcritical {
        return Err(Error::Regime(format!(
            "the moment bound needs the subcritical regime, γ₀ = {:e}",
            gs.gamma0
        )));
    }
    let k = kappa(params, gs.gamma0)?;
    let a1 = alpha1(params, gs.gamma0, k.kappa)?;
    let spectrum = discrete_spectrum(params, ladder, opts)?;
    Ok(BoundInputs {
        gamma0: gs.gamma0,
        kappa: k,
        alpha1: a1,
        spectrum,
    })
}

pub fn report_for(params: &ModelParams, inputs: &BoundInputs, sigma: f64) -> Result<MomentBoundReport> {
    let rhs = rhs_bound(params, sigma, inputs.alpha1.value)?;
    let lhs = inputs.spectrum.moment(sigma);
    Ok(MomentBoundReport {
        sigma,
        gamma0: inputs.gamma0,
        kappa: inputs.kappa.kappa,
        kappa_step: inputs.kappa.step,
        alpha1: inputs.alpha1.value,
        alpha1_branch: inputs.alpha1.branch,
        rhs_series: rhs.rhs_series,
        series_tail: rhs.series_tail,
        rhs_box: rhs.rhs_box,
        rhs_total: rhs.rhs_total,
        lhs,
        lhs_source: inputs.spectrum.source.clone(),
        eigenvalues: inputs.spectrum.eigenvalues.clone(),
        consistent: inputs.spectrum.consistent(),
        satisfied: lhs <= rhs.rhs_total,
        margin: rhs.rhs_total - lhs,
    })
}

/// κ → α₁ → right side → left side for each `σ`; the ladder runs once.
pub fn check_bound(
    params: &ModelParams,
    sigmas: &[f64],
    ladder: &[BoxRung],
    opts: &LadderOptions,
) -> Result<Vec<MomentBoundReport>> {
    for &s in sigmas {
        check_sigma(s)?;
    }
    let inputs = bound_inputs(params, ladder, opts)?;
    sigmas.iter().map(|&s| report_for(params, &inputs, s)).collect()
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
    fn free_alpha1_has_vanishing_coupling_branch() {
        let a = alpha1(&params(0.0), 1.0, 0.25).unwrap();
        assert_eq!(a.value, 2.0);
        assert_eq!(a.branch, Alpha1Branch::GapRatio);
        assert_eq!(a.branches[2], 0.0);
        assert!(a.coupling_ok && a.gap_ok);
    }

    #[test]
    fn free_rhs_is_box_term() {
        let r = rhs_bound(&params(0.0), 1.0, 2.0).unwrap();
        assert_eq!(r.rhs_series, 0.0);
        let expect = (4.0 / std::f64::consts::PI + 1.0f64).powi(2);
        assert!((r.rhs_total - expect).abs() < 1e-14);
    }

    #[test]
    fn sigma_half_rejected() {
        assert!(matches!(rhs_bound(&params(1.0), 0.5, 2.0), Err(Error::Parameter { .. })));
        assert!(rhs_bound(&params(1.0), 0.3, 2.0).is_err());
    }

    #[test]
    fn series_stops_early_for_large_sigma() {
        let r = rhs_bound(&params(1.0), 3.0, 2.0).unwrap();
        assert!(r.series_terms < MAX_SERIES_TERMS);
        assert!(r.series_tail < 1e-11 * r.series_partial);
    }

    #[test]
    fn free_check_bound_has_zero_lhs() {
        let r = check_bound(&params(0.0), &[1.0], &default_ladder(), &LadderOptions::default()).unwrap();
        assert_eq!(r[0].lhs, 0.0);
        assert!(r[0].satisfied);
    }
}
