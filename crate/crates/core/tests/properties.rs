use std::sync::OnceLock;

use proptest::prelude::*;

use chanspec::analysis1d::{gamma0, GroundState1D, Regime};
use chanspec::assembly::{
    assemble_h, comparison_tridiagonal, laplacian_tridiagonal, oscillator_tridiagonal, slice_tridiagonal,
    AssemblyOptions,
};
use chanspec::certificates::{critical_quasimode_residual, subcritical_quasimode_residual};
use chanspec::config::RunConfig;
use chanspec::eigen::{
    extremal_sparse_eigs, residual_norm, symmetric_eigen, tridiagonal_eigenvalues, LanczosOptions,
};
use chanspec::fixtures::pinned;
use chanspec::grid::{Grid1D, Grid2D};
use chanspec::model::{
    make_potential, make_window, oscillator_ground_state, ModelParams, PotentialKind, WindowRole,
};
use chanspec::momentbound::{alpha1, series_partial_sum};

fn cosine(lambda: f64) -> ModelParams {
    ModelParams::new(1.0, lambda, make_potential(PotentialKind::CosineBump, 1.0, 1.0).unwrap()).unwrap()
}

fn critical_state() -> &'static GroundState1D {
    static GS: OnceLock<GroundState1D> = OnceLock::new();
    GS.get_or_init(|| gamma0(&cosine(pinned("lambda_crit.omega1").value), 1e-9).unwrap())
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

fn kind() -> impl Strategy<Value = PotentialKind> {
    prop_oneof![Just(PotentialKind::CosineBump), Just(PotentialKind::SmoothBump)]
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn potential_vanishes_outside_and_is_nonnegative(k in kind(), a in 0.2f64..3.0, v0 in 0.1f64..5.0, s in 1.0f64..10.0) {
        let v = make_potential(k, a, v0).unwrap();
        prop_assert_eq!(v.eval(a * s + 1e-12), 0.0);
        prop_assert_eq!(v.eval(-a * s - 1e-12), 0.0);
        for i in 0..10_000 {
            let x = -1.5 * a + 3.0 * a * i as f64 / 9_999.0;
            prop_assert!(v.eval(x) >= 0.0);
        }
        prop_assert!((v.sup_norm() - v0).abs() <= 1e-15 * v0);
    }

    #[test]
    fn oscillator_ground_state_solves_its_ode(omega in 0.1f64..10.0, t in -1.0f64..1.0) {
        let g = oscillator_ground_state(omega).unwrap();
        let y = t * 6.0 / omega.sqrt();
        let r = -g.second_derivative(y) + omega * omega * y * y * g.value(y) - omega * g.value(y);
        prop_assert!(r.abs() <= 1e-9 * (1.0 + y * y) * g.value(y), "residual {r} at y = {y}");
    }

    #[test]
    fn assembled_h_is_exactly_symmetric(lambda in 0.0f64..6.0, x in 1.0f64..3.0, y in 1.0f64..2.0) {
        let g = Grid2D::with_spacing(x, y, 1.0 / (8.0 * y), 0.25).unwrap();
        let h = assemble_h(&cosine(lambda), &g, &AssemblyOptions::default()).unwrap();
        prop_assert_eq!(h.max_asymmetry(), 0.0);
        let n = h.dim();
        let d = h.to_dense();
        for i in 0..n {
            prop_assert!(d[i * n + i].is_finite());
            for j in 0..i {
                prop_assert_eq!(d[i * n + j], d[j * n + i]);
            }
        }
    }

    #[test]
    fn slice_operator_is_rescaled_comparison_operator(y0 in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0], lambda in 0.0f64..5.0) {
        let p = cosine(lambda);
        let (r, n) = (6.0, 479);
        let base = Grid1D::dirichlet(r, n).unwrap();
        let scaled = Grid1D::dirichlet(r / y0.abs(), n).unwrap();
        let opts = AssemblyOptions::default();
        let l = comparison_tridiagonal(&p, &base, &opts).unwrap();
        let s = slice_tridiagonal(&p, y0, &scaled, &opts).unwrap();
        let el = tridiagonal_eigenvalues(&l.diag, &l.off).unwrap()[0];
        let es = tridiagonal_eigenvalues(&s.diag, &s.off).unwrap()[0];
        let dx = base.spacing();
        prop_assert!((es - y0 * y0 * el).abs() <= 4.0 * dx * dx * dx * dx * y0 * y0 * (1.0 + el.abs()),
            "slice {es} vs y0²·L {}", y0 * y0 * el);
    }

    #[test]
    fn lanczos_residuals_reproduce_and_vectors_are_orthonormal(lambda in 0.0f64..4.0, seed in any::<u64>()) {
        let g = Grid2D::with_spacing(3.0, 1.5, 1.0 / 12.0, 0.1).unwrap();
        let h = assemble_h(&cosine(lambda), &g, &AssemblyOptions::default()).unwrap();
        let opts = LanczosOptions { seed, ..LanczosOptions::default() };
        let r = extremal_sparse_eigs(&h, 4, &opts).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let vecs = r.eigenvectors.as_ref().unwrap();
        for (i, v) in vecs.iter().enumerate() {
            prop_assert!((residual_norm(&h, r.eigenvalues[i], v) - r.residuals[i]).abs() <= 1e-13);
            prop_assert!(r.residuals[i] <= opts.tol);
            let nn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((nn - 1.0).abs() <= 1e-12);
            for w in &vecs[..i] {
                let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn config_text_round_trips(
        omega in 0.1f64..5.0,
        lambda in 0.0f64..10.0,
        mu in prop::collection::vec(0.0f64..3.0, 1..5),
        sig in prop::collection::vec(0.51f64..4.0, 1..4),
        count in 1usize..20,
    ) {
        let c = RunConfig { omega, lambda, mu_grid: mu, sigma_list: sig, eigen_count: count, ..RunConfig::default() };
        let back = RunConfig::parse(&c.to_text()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn series_partial_sums_increase(lambda in 0.1f64..5.0, sigma in 0.51f64..3.0, alpha in 0.5f64..5.0, n in 1usize..500) {
        let p = cosine(lambda);
        let a = series_partial_sum(&p, sigma, alpha, n);
        let b = series_partial_sum(&p, sigma, alpha, n + 1);
        prop_assert!(a > 0.0 && b >= a);
    }

    #[test]
    fn alpha1_meets_its_constraints(lambda in 0.0f64..10.0, g0 in 1e-3f64..1.0, kappa in 0.1f64..10.0) {
        let p = cosine(lambda);
        let r = alpha1(&p, g0, kappa).unwrap();
        prop_assert!(r.branches.iter().all(|&b| r.value >= b));
        prop_assert!(r.gap_ok && r.coupling_ok);
        prop_assert!(r.coupling_ratio <= 2.0 * p.omega * (1.0 + 1e-12));
        prop_assert!(r.value >= 2.0 * p.omega / g0);
    }

    #[test]
    fn regime_follows_sign_of_gamma0(g in -1.0f64..1.0, tol in 1e-9f64..1e-3) {
        let r = Regime::from_gamma0(g, tol);
        let expected = if g > tol { Regime::Subcritical } else if g < -tol { Regime::Supercritical } else { Regime::Critical };
        prop_assert_eq!(r, expected);
    }
}

proptest! {
    #![proptest_config(cases(6))]

    #[test]
    fn free_box_spectrum_is_a_kronecker_sum(nx in 3usize..14, ny in 3usize..14, x in 0.5f64..4.0, y in 0.5f64..4.0) {
        let p = cosine(0.0);
        let g = Grid2D::new(x, y, nx, ny).unwrap();
        let h = assemble_h(&p, &g, &AssemblyOptions::default()).unwrap();
        let dense = symmetric_eigen(&h.to_dense(), h.dim()).unwrap();
        let lx = laplacian_tridiagonal(&g.x);
        let ly = oscillator_tridiagonal(p.omega, &g.y);
        let ex = tridiagonal_eigenvalues(&lx.diag, &lx.off).unwrap();
        let ey = tridiagonal_eigenvalues(&ly.diag, &ly.off).unwrap();
        let mut sums: Vec<f64> = ex.iter().flat_map(|a| ey.iter().map(move |b| a + b)).collect();
        sums.sort_by(f64::total_cmp);
        let scale = sums.last().unwrap().abs();
        for (a, b) in dense.values.iter().zip(&sums) {
            prop_assert!((a - b).abs() <= 1e-11 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvalues_decrease_with_coupling(l1 in 0.0f64..3.0, d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
        let g = Grid2D::with_spacing(1.5, 1.0, 1.0 / 8.0, 0.2).unwrap();
        let ladder = [l1, l1 + d1, l1 + d1 + d2];
        let spectra: Vec<Vec<f64>> = ladder
            .iter()
            .map(|&l| {
                let h = assemble_h(&cosine(l), &g, &AssemblyOptions::default()).unwrap();
                symmetric_eigen(&h.to_dense(), h.dim()).unwrap().values
            })
            .collect();
        for w in spectra.windows(2) {
            for (hi, lo) in w[0].iter().zip(&w[1]) {
                prop_assert!(lo <= hi);
            }
        }
    }

    #[test]
    fn critical_norms_stay_in_range(mu in 0.0f64..3.0) {
        let r = critical_quasimode_residual(critical_state(), mu, &[4, 8, 16, 32], 1e-7).unwrap();
        for (&n, &norm) in r.params_list.iter().zip(&r.norms) {
            prop_assert!((0.5..=1.0).contains(&(norm * norm)), "n = {n}: ‖ψ‖² = {}", norm * norm);
        }
        prop_assert!(r.residuals.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn subcritical_quasimodes_are_normalized(mu in 1.0f64..3.0, lambda in 0.0f64..2.8) {
        let r = subcritical_quasimode_residual(&cosine(lambda), mu, &[4, 8, 16]).unwrap();
        for &norm in &r.norms {
            prop_assert!((norm - 1.0).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(cases(2))]

    #[test]
    fn gamma0_strictly_decreases_in_lambda(omega in 0.5f64..2.0, v0 in 0.5f64..2.0) {
        let v = make_potential(PotentialKind::CosineBump, 1.0, v0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..5 {
            let p = ModelParams::new(omega, 0.75 * i as f64, v.clone()).unwrap();
            let g = gamma0(&p, 1e-9).unwrap().gamma0;
            prop_assert!(g <= omega * omega + 1e-9);
            prop_assert!(g < prev, "γ₀ not decreasing at λ = {}", p.lambda);
            prev = g;
        }
    }
}

/// Composite Simpson with `m` panels.
fn simpson_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / (2 * m) as f64;
    let mut s = f(a) + f(b);
    for i in 1..2 * m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn windows_are_unit_normalized() {
    for role in [WindowRole::WeylY, WindowRole::WeylX, WindowRole::Trial] {
        let w = make_window(role);
        let (a, b) = w.support();
        let total = simpson_fixed(|z| w.value(z).powi(2), a, b, 20_000);
        assert!((total - 1.0).abs() <= 1e-9, "{role:?}: {total}");
        assert_eq!(w.value(a), 0.0);
        assert_eq!(w.derivative(b), 0.0);
        if role == WindowRole::Trial {
            let alpha = w.spec.alpha.unwrap();
            assert!(alpha > 0.0);
            let mid = (0..=1000).map(|i| w.value(-0.5 + i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
            assert!(mid >= alpha * (1.0 - 1e-12));
        }
    }
}
