//! Spectral quantities of the comparison operator `L = -d²/dx² + ω² - λV`.
//!
//! `γ₀ = inf σ(L)` decides the regime of `H`; its ground state `h` feeds the
//! critical quasimodes and the Neumann restrictions `l_k` give the constant
//! `κ` used by the moment bound.

use serde::{Deserialize, Serialize};

use crate::assembly::{comparison_tridiagonal, AssemblyOptions, Tridiagonal};
use crate::eigen::tridiagonal::{inverse_iteration, lowest_eigenvalues};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::{ModelParams, PotentialSpec};

/// Default target for the extrapolated `γ₀`.
pub const DEFAULT_ACCURACY: f64 = 1e-9;
/// Default half-width of the critical band `|γ₀| ≤ tol`.
pub const DEFAULT_REGIME_TOL: f64 = 1e-7;
/// Boundary value of `h` relative to its maximum required of the box.
pub const DECAY_RATIO: f64 = 1e-12;
/// Coarse and fine steps of the κ scan.
pub const KAPPA_COARSE_STEP: f64 = 0.25;
pub const KAPPA_FINE_STEP: f64 = 1e-3;
/// `|inf σ(l_k) - γ₀|` below which `l_k` counts as converged.
pub const LK_CONVERGENCE_TOL: f64 = 1e-4;

const BASE_POINTS_PER_HALF_WIDTH: usize = 16;
const MAX_REFINEMENTS: usize = 4;
const MAX_BOX_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma0Options {
    pub accuracy: f64,
    /// Largest admissible `R / a` for the Dirichlet box.
    pub max_box_factor: f64,
}

impl Default for Gamma0Options {
    fn default() -> Self {
        Self {
            accuracy: DEFAULT_ACCURACY,
            max_box_factor: MAX_BOX_FACTOR,
        }
    }
}

/// Quintic Hermite interpolant of `(h, h', h'')` on a uniform grid.
#[derive(Debug, Clone)]
struct Hermite5 {
    x0: f64,
    step: f64,
    f: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Hermite5 {
    /// `(p, p')` at `x`; zero outside the node range.
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.f.len();
        let s = (x - self.x0) / self.step;
        if !(s >= 0.0) || s > (n - 1) as f64 {
            return (0.0, 0.0);
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let hstep = self.step;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let b = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            0.5 * (t3 - 2.0 * t4 + t5),
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        ];
        let db = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        ];
        let c = [
            self.f[i],
            hstep * self.d1[i],
            hstep * hstep * self.d2[i],
            hstep * hstep * self.d2[i + 1],
            hstep * self.d1[i + 1],
            self.f[i + 1],
        ];
        let v: f64 = b.iter().zip(&c).map(|(x, y)| x * y).sum();
        let dv: f64 = db.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>() / hstep;
        (v, dv)
    }
}

/// `γ₀` and, when `L` has an eigenvalue below `ω²`, its normalized positive
/// ground state `h`.
#[derive(Debug, Clone)]
pub struct GroundState1D {
    pub gamma0: f64,
    /// Richardson error estimate `|X₁₂ - X₀₁|` (zero when exact).
    pub error_estimate: f64,
    /// Finest grid; `h_values` live on its nodes.
    pub grid: Option<Grid1D>,
    pub h_values: Vec<f64>,
    pub extrapolated: bool,
    params: ModelParams,
    interp: Option<Hermite5>,
}

impl GroundState1D {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// True when `h` exists (`λ > 0`).
    pub fn has_eigenfunction(&self) -> bool {
        self.interp.is_some()
    }

    pub fn h(&self, x: f64) -> f64 {
        self.interp.as_ref().map_or(0.0, |p| p.eval(x).0)
    }

    pub fn h_prime(&self, x: f64) -> f64 {
        self.interp.as_ref().map_or(0.0, |p| p.eval(x).1)
    }

    /// `h''` from the ODE identity `h'' = (ω² - λV - γ₀) h`.
    pub fn h_second(&self, x: f64) -> f64 {
        (self.params.comparison_potential(x) - self.gamma0) * self.h(x)
    }

    /// `(h, h', h'')` at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        match &self.interp {
            None => (0.0, 0.0, 0.0),
            Some(p) => {
                let (v, d) = p.eval(x);
                (v, d, (self.params.comparison_potential(x) - self.gamma0) * v)
            }
        }
    }

    /// Half-width of the box carrying `h`.
    pub fn support_half_width(&self) -> f64 {
        self.grid.map_or(0.0, |g| g.half_width())
    }
}

/// Dirichlet grid on `[-R, R]` with spacing `a/p` whose nodes include `±a`.
/// `R` is rounded up to `a + mΔ`.
fn aligned_dirichlet(a: f64, p: usize, r: f64) -> Result<Grid1D> {
    let step = a / p as f64;
    let m = ((r - a) / step).ceil().max(1.0) as usize;
    let half = a + m as f64 * step;
    Grid1D::dirichlet(half, 2 * (p + m) - 1)
}

fn lowest(t: &Tridiagonal) -> Result<f64> {
    Ok(lowest_eigenvalues(&t.diag, &t.off, 1)?[0])
}

fn richardson(e: [f64; 3]) -> (f64, f64) {
    let x01 = (4.0 * e[1] - e[0]) / 3.0;
    let x12 = (4.0 * e[2] - e[1]) / 3.0;
    ((16.0 * x12 - x01) / 15.0, (x12 - x01).abs())
}

fn relaxed() -> AssemblyOptions {
    AssemblyOptions {
        strict: false,
        ..Default::default()
    }
}

/// `γ₀ = inf σ(L)` with default options.
pub fn gamma0(params: &ModelParams, accuracy: f64) -> Result<GroundState1D> {
    gamma0_with(
        params,
        &Gamma0Options {
            accuracy,
            ..Default::default()
        },
    )
}

/// `γ₀` by Dirichlet boxes `[-R, R]` with `R` grown until `h` decays to
/// `DECAY_RATIO` at the wall, three grids `Δ, Δ/2, Δ/4` and Richardson
/// extrapolation.
pub fn gamma0_with(params: &ModelParams, opts: &Gamma0Options) -> Result<GroundState1D> {
    if !(opts.accuracy > 0.0) {
        return Err(Error::param("accuracy", "must be positive"));
    }
    let w2 = params.omega * params.omega;
    if params.is_free() {
        return Ok(GroundState1D {
            gamma0: w2,
            error_estimate: 0.0,
            grid: None,
            h_values: Vec::new(),
            extrapolated: false,
            params: params.clone(),
            interp: None,
        });
    }
    let a = params.potential.half_width();
    let r_cap = opts.max_box_factor * a;
    let mut p = BASE_POINTS_PER_HALF_WIDTH;
    let mut r = a + 8.0;
    for _ in 0..=MAX_REFINEMENTS {
        // grow the box on the coarse grid until the ground state has decayed
        let grid0 = loop {
            let g = aligned_dirichlet(a, p, r)?;
            let t = comparison_tridiagonal(params, &g, &relaxed())?;
            let e0 = lowest(&t)?;
            let target = if e0 < w2 {
                a + 1.2 * (1.0 / DECAY_RATIO).ln() / (w2 - e0).sqrt() + 2.0
            } else {
                2.0 * r
            };
            let v = &inverse_iteration(&t.diag, &t.off, &[e0])[0];
            let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let wall = v[0].abs().max(v[v.len() - 1].abs());
            if e0 < w2 && wall <= DECAY_RATIO * peak {
                break g;
            }
            let next = target.max(1.25 * r);
            if next > r_cap {
                return Err(Error::Domain(format!(
                    "ground state of L has not decayed to {DECAY_RATIO:e} within R = {r:.3e} \
                     (coarse eigenvalue {e0:.6e}, ω² = {w2}); coupling too weak for the box cap"
                )));
            }
            r = next;
        };
        let grids = [grid0, grid0.refined(), grid0.refined().refined()];
        let mut e = [0.0; 3];
        let mut last = None;
        for (k, g) in grids.iter().enumerate() {
            let t = comparison_tridiagonal(params, g, &relaxed())?;
            e[k] = lowest(&t)?;
            last = Some(t);
        }
        let (value, err) = richardson(e);
        log::debug!("gamma0 levels {e:?} -> {value:.15e} (err {err:.2e}, R {r}, a/Δ {p})");
        if err <= opts.accuracy {
            let t = last.expect("three levels");
            let fine = grids[2];
            let value = value.min(w2);
            return Ok(build_ground_state(params, fine, &t, e[2], value, err));
        }
        p *= 2;
        r = grid0.half_width();
    }
    Err(Error::Accuracy(format!(
        "gamma0 error estimate above {:.1e} after {MAX_REFINEMENTS} grid refinements",
        opts.accuracy
    )))
}

fn build_ground_state(
    params: &ModelParams,
    grid: Grid1D,
    t: &Tridiagonal,
    e_fine: f64,
    gamma0: f64,
    err: f64,
) -> GroundState1D {
    let step = grid.spacing();
    let mut h = inverse_iteration(&t.diag, &t.off, &[e_fine]).remove(0);
    let norm = (h.iter().map(|x| x * x).sum::<f64>() * step).sqrt();
    let sign = if h.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    h.iter_mut().for_each(|x| *x *= sign / norm);

    let n = h.len();
    // odd reflection through the Dirichlet walls
    let at = |i: isize| -> f64 {
        if i < -1 {
            -h[(-2 - i) as usize]
        } else if i == -1 || i == n as isize {
            0.0
        } else if i > n as isize {
            -h[(2 * n as isize - i) as usize]
        } else {
            h[i as usize]
        }
    };
    let d1: Vec<f64> = (0..n as isize)
        .map(|i| (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * step))
        .collect();
    let nodes = grid.nodes();
    let d2: Vec<f64> = (0..n)
        .map(|i| (params.comparison_potential(nodes[i]) - gamma0) * h[i])
        .collect();
    // include the walls so the interpolant vanishes there
    let mut f = Vec::with_capacity(n + 2);
    f.push(0.0);
    f.extend_from_slice(&h);
    f.push(0.0);
    let mut g1 = Vec::with_capacity(n + 2);
    g1.push((-at(1) + 8.0 * at(0)) / (12.0 * step) * 2.0);
    g1.extend_from_slice(&d1);
    g1.push((at(n as isize - 2) - 8.0 * at(n as isize - 1)) / (12.0 * step) * 2.0);
    let mut g2 = Vec::with_capacity(n + 2);
    g2.push(0.0);
    g2.extend_from_slice(&d2);
    g2.push(0.0);
    let interp = Hermite5 {
        x0: -grid.half_width(),
        step,
        f,
        d1: g1,
        d2: g2,
    };
    GroundState1D {
        gamma0,
        error_estimate: err,
        grid: Some(grid),
        h_values: h,
        extrapolated: true,
        params: params.clone(),
        interp: Some(interp),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }

    pub fn from_gamma0(gamma0: f64, tol: f64) -> Self {
        if gamma0 > tol {
            Regime::Subcritical
        } else if gamma0 < -tol {
            Regime::Supercritical
        } else {
            Regime::Critical
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    pub gamma0: f64,
    pub gamma0_error: f64,
    pub tolerance: f64,
}

pub fn classify(params: &ModelParams, tol: f64, accuracy: f64) -> Result<RegimeClassification> {
    if !(tol >= 0.0) {
        return Err(Error::param("regime_tol", "must be non-negative"));
    }
    let gs = gamma0(params, accuracy)?;
    Ok(RegimeClassification {
        regime: Regime::from_gamma0(gs.gamma0, tol),
        gamma0: gs.gamma0,
        gamma0_error: gs.error_estimate,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalLambda {
    pub lambda: f64,
    pub bracket: (f64, f64),
    /// `γ₀` at the returned coupling.
    pub gamma0: f64,
    pub evaluations: usize,
}

/// Upper end of the coupling search.
pub const LAMBDA_MAX: f64 = 1e6;

/// The coupling at which `γ₀(λ)` changes sign, by bisection.
pub fn critical_lambda(
    omega: f64,
    potential: &PotentialSpec,
    bracket_tol: f64,
    accuracy: f64,
) -> Result<CriticalLambda> {
    if !(bracket_tol > 0.0) {
        return Err(Error::param("bracket_tol", "must be positive"));
    }
    let base = ModelParams::new(omega, 0.0, potential.clone())?;
    let mut evals = 0usize;
    let mut g = |lam: f64| -> Result<f64> {
        evals += 1;
        Ok(gamma0(&base.with_lambda(lam)?, accuracy)?.gamma0)
    };
    let mut lo = 0.0;
    let mut hi = (omega * omega / potential.sup_norm()).max(1e-3);
    loop {
        if g(hi)? < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > LAMBDA_MAX {
            return Err(Error::Bracketing(format!(
                "gamma0 stays non-negative up to λ = {LAMBDA_MAX:e}"
            )));
        }
    }
    while hi - lo > bracket_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let at = g(lambda)?;
    Ok(CriticalLambda {
        lambda,
        bracket: (lo, hi),
        gamma0: at,
        evaluations: evals,
    })
}

/// `inf σ(l_k)`: Neumann restriction of `L` to `[-k, k]`, three grids and
/// Richardson extrapolation.
pub fn neumann_ground_energy(params: &ModelParams, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    let a = params.potential.half_width();
    let target = (a / BASE_POINTS_PER_HALF_WIDTH as f64).min(k / 4.0);
    let m = (k / target).ceil() as usize;
    let g0 = Grid1D::neumann(k, 2 * m + 1)?;
    let grids = [g0, g0.refined(), g0.refined().refined()];
    let mut e = [0.0; 3];
    for (i, g) in grids.iter().enumerate() {
        e[i] = lowest(&comparison_tridiagonal(params, g, &relaxed())?)?;
    }
    Ok(richardson(e).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaReport {
    pub kappa: f64,
    pub step: f64,
    pub gamma0: f64,
    /// `inf σ(l_κ)`.
    pub inf_sigma: f64,
    /// `inf σ(l_{κ-step})`, absent when `κ` is the first scanned point.
    pub inf_sigma_before: Option<f64>,
    /// Every `(k, inf σ(l_k))` evaluated.
    pub trace: Vec<(f64, f64)>,
}

/// Largest `k` considered by the κ scan.
pub const KAPPA_K_MAX: f64 = 500.0;

/// Smallest scanned `k` with `inf σ(l_k) ≥ γ₀/2` that also holds one step
/// further.
pub fn kappa(params: &ModelParams, gamma0: f64) -> Result<KappaReport> {
    if !(gamma0 > 0.0) {
        return Err(Error::Regime(format!("κ needs γ₀ > 0, got {gamma0:e}")));
    }
    let half = 0.5 * gamma0;
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let eval = |k: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        if let Some(&(_, e)) = trace.iter().find(|(kk, _)| *kk == k) {
            return Ok(e);
        }
        let e = neumann_ground_energy(params, k)?;
        trace.push((k, e));
        Ok(e)
    };
    let fine_per_coarse = (KAPPA_COARSE_STEP / KAPPA_FINE_STEP).round() as usize;
    let coarse_max = (KAPPA_K_MAX / KAPPA_COARSE_STEP) as usize;

    let mut coarse = None;
    for j in 1..=coarse_max {
        let k = j as f64 * KAPPA_COARSE_STEP;
        if eval(k, &mut trace)? >= half && eval(k + KAPPA_COARSE_STEP, &mut trace)? >= half {
            coarse = Some(j);
            break;
        }
    }
    let Some(j) = coarse else {
        let tail: Vec<String> = trace
            .iter()
            .rev()
            .take(5)
            .map(|(k, e)| format!("({k}, {e:.6e})"))
            .collect();
        return Err(Error::Search(format!(
            "no k ≤ {KAPPA_K_MAX} with inf σ(l_k) ≥ γ₀/2 = {half:.6e}; last evaluations {}",
            tail.join(", ")
        )));
    };
    let start = (j - 1) * fine_per_coarse;
    let stop = (j + 1) * fine_per_coarse;
    for i in start + 1..=stop {
        let k = i as f64 * KAPPA_FINE_STEP;
        let e = eval(k, &mut trace)?;
        if e >= half && eval((i + 1) as f64 * KAPPA_FINE_STEP, &mut trace)? >= half {
            let before = if i > 1 {
                Some(eval((i - 1) as f64 * KAPPA_FINE_STEP, &mut trace)?)
            } else {
                None
            };
            return Ok(KappaReport {
                kappa: k,
                step: KAPPA_FINE_STEP,
                gamma0,
                inf_sigma: e,
                inf_sigma_before: before,
                trace,
            });
        }
    }
    Err(Error::Search(format!(
        "refinement between k = {} and {} found no persistent crossing",
        start as f64 * KAPPA_FINE_STEP,
        stop as f64 * KAPPA_FINE_STEP
    )))
}

/// Smallest `k = k₀·2^j` with `|inf σ(l_k) - γ₀| ≤ tol`, with the trace.
pub fn lk_convergence(
    params: &ModelParams,
    gamma0: f64,
    k0: f64,
    tol: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut k = k0.max(KAPPA_FINE_STEP);
    let mut trace = Vec::new();
    while k <= KAPPA_K_MAX {
        let e = neumann_ground_energy(params, k)?;
        trace.push((k, e));
        if (e - gamma0).abs() <= tol {
            return Ok((k, trace));
        }
        k *= 2.0;
    }
    Err(Error::Search(format!(
        "inf σ(l_k) did not reach γ₀ within {tol:e} for k ≤ {KAPPA_K_MAX}"
    )))
}
