//! Independent cross-checks: every quantity here is recomputed by a method
//! that shares no code with the library routine it is compared against.

mod common;

use chanspec::analysis1d::{critical_lambda, gamma0, kappa};
use chanspec::assembly::{assemble_h, AssemblyOptions};
use chanspec::certificates::trial_form_value;
use chanspec::eigen::{extremal_sparse_eigs, symmetric_eigen, LanczosOptions};
use chanspec::fixtures::pinned;
use chanspec::grid::Grid2D;
use chanspec::model::{make_potential, make_window, oscillator_ground_state, ModelParams, PotentialKind, WindowRole};
use chanspec::momentbound::{rhs_bound, series_partial_sum, series_tail_bound};

fn params(lambda: f64) -> ModelParams {
    let v = make_potential(PotentialKind::CosineBump, 1.0, 1.0).unwrap();
    ModelParams::new(1.0, lambda, v).unwrap()
}

/// `h'(0)/h(0)` for the solution of `-h'' + (ω² - λV - E)h = 0` that decays
/// at `-∞`, by RK4 from `x = -20`.
fn shoot(p: &ModelParams, e: f64, steps_per_unit: usize) -> f64 {
    let q = |x: f64| p.comparison_potential(x) - e;
    let x0 = -20.0;
    let k = (p.omega * p.omega - e).sqrt();
    let (mut y, mut dy) = (1e-30, k * 1e-30);
    let n = 20 * steps_per_unit;
    let hs = 1.0 / steps_per_unit as f64;
    let f = |x: f64, y: f64, dy: f64| (dy, q(x) * y);
    for i in 0..n {
        let x = x0 + i as f64 * hs;
        let (k1y, k1d) = f(x, y, dy);
        let (k2y, k2d) = f(x + 0.5 * hs, y + 0.5 * hs * k1y, dy + 0.5 * hs * k1d);
        let (k3y, k3d) = f(x + 0.5 * hs, y + 0.5 * hs * k2y, dy + 0.5 * hs * k2d);
        let (k4y, k4d) = f(x + hs, y + hs * k3y, dy + hs * k3d);
        y += hs / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if y.abs() > 1e200 {
            y *= 1e-200;
            dy *= 1e-200;
        }
    }
    dy / y
}

/// Even ground state: the energy at which `h'(0)` vanishes.
fn shooting_ground_state(p: &ModelParams) -> f64 {
    let (mut lo, mut hi) = (p.omega * p.omega - p.lambda * p.potential.sup_norm(), p.omega * p.omega - 1e-12);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        // below the ground state the decaying solution is still rising at 0
        if shoot(p, mid, 2000) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn gamma0_agrees_with_shooting() {
    let p = params(2.0);
    let ours = gamma0(&p, 1e-9).unwrap().gamma0;
    let shot = shooting_ground_state(&p);
    assert!((ours - shot).abs() <= 1e-6, "γ₀ = {ours}, shooting {shot}");
    assert!(pinned("gamma0.lambda2").matches(ours), "{ours}");
}

#[test]
fn gamma0_at_subcritical_reference() {
    let p = params(0.5 * pinned("lambda_crit.omega1").value);
    let ours = gamma0(&p, 1e-9).unwrap().gamma0;
    let shot = shooting_ground_state(&p);
    assert!((ours - shot).abs() <= 1e-6, "γ₀ = {ours}, shooting {shot}");
    assert!(pinned("gamma0.subcritical_ref").matches(ours), "{ours}");
}

#[test]
fn gamma0_shooting_at_strong_coupling() {
    let p = params(5.0);
    let ours = gamma0(&p, 1e-9).unwrap().gamma0;
    let shot = shooting_ground_state(&p);
    assert!((ours - shot).abs() <= 1e-6, "γ₀ = {ours}, shooting {shot}");
}

#[test]
fn trial_form_matches_xy_order_quadrature() {
    let p = params(pinned("lambda_crit.omega1").value * 0.5);
    let ks = [2usize, 4, 8];
    let r = trial_form_value(&p, &ks).unwrap();
    for (i, &k) in ks.iter().enumerate() {
        let o = common::trial_form_oracle(&p, k as f64);
        assert!((r.form_values[i] - o).abs() <= 1e-7, "k = {k}: {} vs {o}", r.form_values[i]);
    }
}

#[test]
fn series_tail_bounds_explicit_remainder() {
    let p = params(pinned("lambda_crit.omega1").value * 0.5);
    let alpha1 = 2.99;
    for sigma in [0.75, 1.0, 2.0] {
        let n = 1000;
        let explicit: f64 = {
            let lv = p.lambda * p.potential.sup_norm();
            let c = lv.sqrt();
            let pre = 2.0 * (lv / alpha1).powf(2.0 * sigma);
            (n + 1..=n + 1_000_000)
                .map(|m| pre / (c + (m - 1) as f64 * std::f64::consts::PI).powf(2.0 * sigma))
                .sum()
        };
        let tail = series_tail_bound(&p, sigma, alpha1, n);
        assert!(tail >= explicit, "σ = {sigma}: tail {tail} < explicit {explicit}");
        let whole = rhs_bound(&p, sigma, alpha1).unwrap();
        let head = series_partial_sum(&p, sigma, alpha1, n);
        assert!(whole.rhs_series >= head + explicit, "σ = {sigma}");
    }
}

#[test]
fn lanczos_matches_nalgebra_on_channel_matrix() {
    let p = params(1.4331521777639865);
    let g = Grid2D::with_spacing(2.0, 2.0, 1.0 / 16.0, 0.2).unwrap();
    let h = assemble_h(&p, &g, &AssemblyOptions::default()).unwrap();
    assert!(h.dim() <= 2000);
    let dense = h.to_dense();
    let m = nalgebra::DMatrix::from_row_slice(h.dim(), h.dim(), &dense);
    let mut theirs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    theirs.sort_by(f64::total_cmp);
    let ours = extremal_sparse_eigs(&h, 5, &LanczosOptions::default()).unwrap();
    assert!(ours.converged);
    for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
    let own_dense = symmetric_eigen(&dense, h.dim()).unwrap();
    for (a, b) in own_dense.values.iter().zip(&theirs).take(50) {
        assert!((a - b).abs() <= 1e-9);
    }
}

/// Neumann `l_k` by vertex-centred differences with a ghost point,
/// symmetrized and diagonalized by nalgebra.
fn brute_lk(p: &ModelParams, k: f64, per_unit: usize) -> f64 {
    let cells = (2.0 * k * per_unit as f64).round() as usize;
    let h = 2.0 * k / cells as f64;
    let n = cells + 1;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = -k + i as f64 * h;
        m[(i, i)] = 2.0 / (h * h) + p.comparison_potential(x);
        if i + 1 < n {
            m[(i, i + 1)] = -1.0 / (h * h);
            m[(i + 1, i)] = -1.0 / (h * h);
        }
    }
    // ghost points give -2/h² at the ends; the similarity diag(1/√2, 1, …, 1, 1/√2)
    // makes it symmetric with -√2/h²
    let s = 2f64.sqrt() / (h * h);
    m[(0, 1)] = -s;
    m[(1, 0)] = -s;
    m[(n - 1, n - 2)] = -s;
    m[(n - 2, n - 1)] = -s;
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn kappa_matches_brute_force_scan() {
    let p = params(pinned("lambda_crit.omega1").value * 0.5);
    let g0 = gamma0(&p, 1e-9).unwrap().gamma0;
    let r = kappa(&p, g0).unwrap();
    assert!(pinned("kappa.subcritical_ref").matches(r.kappa), "κ = {}", r.kappa);
    // four times the finest resolution used by the library (a/64)
    let per_unit = 256;
    let crossing = (0..=40)
        .map(|i| r.kappa - 0.02 + i as f64 * 1e-3)
        .find(|&k| brute_lk(&p, k, per_unit) >= 0.5 * g0)
        .expect("crossing inside the window");
    assert!((crossing - r.kappa).abs() <= 1.5e-3, "brute force {crossing} vs κ = {}", r.kappa);
}

/// For the free channel a sampled subcritical quasimode bounds the distance
/// from `μ` to the (Kronecker-sum) matrix spectrum.
#[test]
fn sampled_quasimode_residual_bounds_matrix_distance() {
    use chanspec::assembly::{laplacian_tridiagonal, oscillator_tridiagonal};
    use chanspec::eigen::tridiagonal_eigenvalues;
    use chanspec::grid::Grid1D;
    let p = params(0.0);
    let (xg, yg) = (Grid1D::dirichlet(24.0, 767).unwrap(), Grid1D::dirichlet(6.0, 95).unwrap());
    let g = Grid2D { x: xg, y: yg };
    let h = assemble_h(&p, &g, &AssemblyOptions::default()).unwrap();
    let lx = laplacian_tridiagonal(&xg);
    let ly = oscillator_tridiagonal(p.omega, &yg);
    let ex = tridiagonal_eigenvalues(&lx.diag, &lx.off).unwrap();
    let ey = tridiagonal_eigenvalues(&ly.diag, &ly.off).unwrap();
    let osc = oscillator_ground_state(p.omega).unwrap();
    let eta = make_window(WindowRole::WeylX);
    for (mu, k) in [(1.0, 4.0), (1.5, 8.0), (2.0, 10.0)] {
        let nu = (mu - p.omega).sqrt();
        let (xs, ys) = (xg.nodes(), yg.nodes());
        let mut re = vec![0.0; h.dim()];
        let mut im = vec![0.0; h.dim()];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                let amp = osc.value(y) * eta.value(x / k) / k.sqrt();
                re[g.index(i, j)] = amp * (nu * x).cos();
                im[g.index(i, j)] = amp * (nu * x).sin();
            }
        }
        let res = |v: &[f64]| {
            let mut av = h.mul_vec(v);
            av.iter_mut().zip(v).for_each(|(a, b)| *a -= mu * b);
            av.iter().map(|x| x * x).sum::<f64>()
        };
        let norm2: f64 = re.iter().chain(&im).map(|x| x * x).sum();
        let r = ((res(&re) + res(&im)) / norm2).sqrt();
        let dist = ex
            .iter()
            .flat_map(|a| ey.iter().map(move |b| (a + b - mu).abs()))
            .fold(f64::INFINITY, f64::min);
        assert!(dist <= r, "μ = {mu}, k = {k}: dist {dist} > residual {r}");
    }
}

#[test]
fn critical_couplings_match_pinned_values() {
    let v = make_potential(PotentialKind::CosineBump, 1.0, 1.0).unwrap();
    for (omega, name) in [(1.0, "lambda_crit.omega1"), (2.0, "lambda_crit.omega2")] {
        let c = critical_lambda(omega, &v, 1e-10, 1e-9).unwrap();
        assert!(pinned(name).matches(c.lambda), "{name}: {}", c.lambda);
        // at the pinned coupling the comparison ground state sits at zero
        let g = gamma0(&ModelParams::new(omega, pinned(name).value, v.clone()).unwrap(), 1e-9).unwrap();
        assert!(g.gamma0.abs() <= 1e-7, "{name}: γ₀ = {}", g.gamma0);
        let shot = shooting_ground_state(&ModelParams::new(omega, pinned(name).value, v.clone()).unwrap());
        assert!(shot.abs() <= 1e-6, "{name}: shooting γ₀ = {shot}");
    }
}
