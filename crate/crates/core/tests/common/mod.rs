//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use chanspec::model::{make_window, oscillator_ground_state, ModelParams, WindowRole};

/// Adaptive Simpson rule.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `Q_H[φ]` with the potential term integrated in `x` outside, `y` inside.
pub fn trial_form_oracle(p: &ModelParams, k: f64) -> f64 {
    let g = oscillator_ground_state(p.omega).unwrap();
    let chi = make_window(WindowRole::Trial);
    let ylim = 12.0 / p.omega.sqrt();
    let a = p.potential.half_width();
    let tol = 1e-14;
    let kinetic_x = simpson(&|z: f64| chi.derivative(z).powi(2), -1.0, 1.0, tol) / (k * k);
    let transverse = simpson(
        &|y: f64| g.derivative(y).powi(2) + p.omega * p.omega * y * y * g.value(y).powi(2),
        -ylim,
        ylim,
        tol,
    );
    let inner = |x: f64| {
        let top = if x == 0.0 { ylim } else { (a / x).min(ylim) };
        simpson(&|y: f64| y * y * p.potential.eval(x * y) * g.value(y).powi(2), 0.0, top, tol)
    };
    let outer = |x: f64| chi.value(x / k).powi(2) * inner(x);
    let knee = (a / ylim).min(k);
    let pot = 4.0 * p.lambda / k * (simpson(&outer, 0.0, knee, tol) + simpson(&outer, knee, k, tol));
    kinetic_x + transverse - pot
}

