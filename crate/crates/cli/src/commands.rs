use std::fs::File;
use std::io::BufWriter;

use serde::Serialize;

use chanspec::analysis1d::{classify, critical_lambda, gamma0, kappa, Regime, RegimeClassification};
use chanspec::assembly::{assemble_h, comparison_tridiagonal, AssemblyOptions};
use chanspec::certificates::{
    critical_quasimode_residual, spectrum_certificate, subcritical_quasimode_residual, trial_form_value,
    QuasiModeReport,
};
use chanspec::config::RunConfig;
use chanspec::eigen::lowest_tridiagonal_eigs;
use chanspec::fixtures::{fixture_config, FIXTURE_NAMES};
use chanspec::grid::{Grid1D, Grid2D};
use chanspec::momentbound::{bound_inputs, box_spectrum, report_for, RungSpectrum};
use chanspec::report::{self, CertificateReport, Provenance, ReportWriter};
use chanspec::{Error, Result};

use crate::{Cli, Command};

struct Ctx<'a> {
    cli: &'a Cli,
    w: ReportWriter,
}

impl Ctx<'_> {
    fn assembly(&self, cfg: &RunConfig) -> AssemblyOptions {
        AssemblyOptions {
            strict: self.cli.strict,
            memory_cap: cfg.memory_cap,
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, cfg: &RunConfig, value: &T) -> Result<()> {
        let text = report::summary_json(name, cfg, value)?;
        self.w.write(&format!("{name}.json"), &text)?;
        Ok(())
    }
}

/// Runs the command; `Ok(false)` means a certified inequality failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Some(RunConfig::load(p)?),
        None if cli.command == Command::Report => None,
        None => return Err(Error::config("--config", "required for this command")),
    };
    let mut ctx = Ctx {
        cli,
        w: ReportWriter::new(&cli.out)?,
    };
    let ok = match cli.command {
        Command::Report => report_all(&mut ctx, cfg)?,
        c => run_one(&mut ctx, c, cfg.as_ref().expect("config loaded"))?,
    };
    for p in ctx.w.written() {
        log::info!("wrote {}", p.display());
    }
    Ok(ok)
}

fn run_one(ctx: &mut Ctx, command: Command, cfg: &RunConfig) -> Result<bool> {
    match command {
        Command::Classify => cmd_classify(ctx, cfg).map(|_| true),
        Command::Spectrum1d => cmd_spectrum1d(ctx, cfg),
        Command::CriticalLambda => cmd_critical_lambda(ctx, cfg),
        Command::Kappa => cmd_kappa(ctx, cfg),
        Command::Spectrum2d => cmd_spectrum2d(ctx, cfg),
        Command::Quasimode => cmd_quasimode(ctx, cfg),
        Command::TrialForm => cmd_trial_form(ctx, cfg),
        Command::Certify => cmd_certify(ctx, cfg).map(|_| true),
        Command::MomentBound => cmd_moment_bound(ctx, cfg).map(|c| c.iter().all(|c| c.holds)),
        Command::Report => unreachable!("handled by report_all"),
    }
}

fn cmd_classify(ctx: &mut Ctx, cfg: &RunConfig) -> Result<RegimeClassification> {
    let r = classify(&cfg.params()?, cfg.regime_tol, cfg.gamma0_accuracy)?;
    println!(
        "regime {} (γ₀ = {} ± {:.1e}, tolerance {:e})",
        r.regime.as_str(),
        report::fmt(r.gamma0),
        r.gamma0_error,
        r.tolerance
    );
    ctx.json("classify", cfg, &r)?;
    Ok(r)
}

fn cmd_spectrum1d(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    let params = cfg.params()?;
    let gs = gamma0(&params, cfg.gamma0_accuracy)?;
    let grid = Grid1D::dirichlet(cfg.grid1d_half_width, cfg.grid1d_n)?;
    let t = comparison_tridiagonal(&params, &grid, &ctx.assembly(cfg))?;
    let r = lowest_tridiagonal_eigs(&t.diag, &t.off, cfg.grid1d_count, false)?;
    println!("γ₀ = {} (extrapolated, error {:.1e})", report::fmt(gs.gamma0), gs.error_estimate);
    for (i, e) in r.eigenvalues.iter().enumerate() {
        println!("  E{i} = {}", report::fmt(*e));
    }
    ctx.w.write("spectrum1d.csv", &report::spectrum1d_csv(&r.eigenvalues))?;
    ctx.json("spectrum1d", cfg, &(gs.gamma0, gs.error_estimate, &r))?;
    if ctx.cli.dump_matrix {
        let path = ctx.cli.out.join("matrix_L.txt");
        write_matrix(&t.to_operator()?, &path)?;
    }
    Ok(true)
}

fn cmd_critical_lambda(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    let v = cfg.potential()?;
    let r = critical_lambda(cfg.omega, &v, cfg.bracket_tol, cfg.gamma0_accuracy)?;
    println!(
        "λ_crit = {} (bracket [{}, {}], γ₀ = {:.3e})",
        report::fmt(r.lambda),
        r.bracket.0,
        r.bracket.1,
        r.gamma0
    );
    let params = cfg.params()?;
    let mut curve = Vec::new();
    for i in 0..=12 {
        let lam = r.lambda * i as f64 / 8.0;
        curve.push((lam, gamma0(&params.with_lambda(lam)?, cfg.gamma0_accuracy)?.gamma0));
    }
    ctx.w.write("gamma0_vs_lambda.dat", &report::plot_data(("lambda", "gamma0"), &curve))?;
    ctx.json("critical-lambda", cfg, &r)?;
    Ok(true)
}

fn cmd_kappa(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    let params = cfg.params()?;
    let gs = gamma0(&params, cfg.gamma0_accuracy)?;
    let r = kappa(&params, gs.gamma0)?;
    println!(
        "κ = {} (step {}, inf σ(l_κ) = {}, γ₀/2 = {})",
        r.kappa,
        r.step,
        report::fmt(r.inf_sigma),
        report::fmt(0.5 * gs.gamma0)
    );
    let mut trace = r.trace.clone();
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    ctx.w.write("kappa_trace.dat", &report::plot_data(("k", "inf_sigma_lk"), &trace))?;
    ctx.json("kappa", cfg, &r)?;
    Ok(true)
}

fn eigenvalue_curve(rungs: &[RungSpectrum]) -> Vec<(f64, f64)> {
    let vary_y = rungs.windows(2).any(|w| w[0].rung.y_half_width != w[1].rung.y_half_width);
    rungs
        .iter()
        .filter_map(|r| {
            let b = if vary_y { r.rung.y_half_width } else { r.rung.x_half_width };
            r.eigenvalues.first().map(|&e| (b, e))
        })
        .collect()
}

fn cmd_spectrum2d(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    let params = cfg.params()?;
    let opts = cfg.ladder_options(ctx.cli.seed, ctx.cli.strict);
    let ladder = cfg.ladder();
    if ctx.cli.dump_matrix {
        let r = ladder[0];
        let dx = opts.dx.unwrap_or(params.potential.half_width() / (8.0 * r.y_half_width));
        let g = Grid2D::with_spacing(r.x_half_width, r.y_half_width, dx, opts.dy)?;
        write_matrix(&assemble_h(&params, &g, &opts.assembly)?, &ctx.cli.out.join("matrix_H.txt"))?;
    }
    let mut rungs = Vec::new();
    for &rung in &ladder {
        let r = box_spectrum(&params, rung, cfg.eigen_count, Some(cfg.omega), &opts)?;
        println!(
            "box {}×{} ({}×{}): {:?}{}",
            rung.x_half_width,
            rung.y_half_width,
            r.nx,
            r.ny,
            r.eigenvalues,
            if r.converged { "" } else { " (not converged)" }
        );
        if !r.converged {
            return Err(Error::Unconverged(format!(
                "Lanczos budget exhausted on the {}×{} box",
                rung.x_half_width, rung.y_half_width
            )));
        }
        rungs.push(r);
    }
    ctx.w.write("spectrum2d.csv", &report::spectrum2d_csv(&rungs))?;
    ctx.w.write("eigenvalue_vs_box.dat", &report::plot_data(("box", "lowest_eigenvalue"), &eigenvalue_curve(&rungs)))?;
    ctx.json("spectrum2d", cfg, &rungs)?;
    Ok(true)
}

fn quasimodes(cfg: &RunConfig) -> Result<Vec<QuasiModeReport>> {
    let params = cfg.params()?;
    let gs = gamma0(&params, cfg.gamma0_accuracy)?;
    let regime = Regime::from_gamma0(gs.gamma0, cfg.regime_tol);
    let mut out = Vec::new();
    for &mu in &cfg.mu_grid {
        let r = match regime {
            Regime::Critical if mu >= 0.0 => critical_quasimode_residual(&gs, mu, &cfg.n_list, cfg.regime_tol)?,
            Regime::Subcritical if mu >= cfg.omega => subcritical_quasimode_residual(&params, mu, &cfg.k_list)?,
            Regime::Supercritical => {
                return Err(Error::Regime(format!(
                    "γ₀ = {:e} is supercritical; no quasimode family applies",
                    gs.gamma0
                )))
            }
            _ => {
                log::warn!("μ = {mu} is below the certified range of the {} regime", regime.as_str());
                continue;
            }
        };
        out.push(r);
    }
    Ok(out)
}

fn cmd_quasimode(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    let reports = quasimodes(cfg)?;
    for r in &reports {
        println!(
            "μ = {}: residuals {:?}, slope {:?}",
            r.mu,
            r.residuals.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>(),
            r.fitted_slope
        );
        let pts: Vec<(f64, f64)> = r.params_list.iter().map(|&n| n as f64).zip(r.residuals.iter().copied()).collect();
        ctx.w.write(&format!("residual_vs_n_mu{}.dat", r.mu), &report::plot_data(("index", "residual"), &pts))?;
    }
    ctx.w.write("quasimode.csv", &report::quasimode_csv(&reports))?;
    ctx.json("quasimode", cfg, &reports)?;
    Ok(true)
}

fn require_subcritical(cfg: &RunConfig) -> Result<f64> {
    let params = cfg.params()?;
    let gs = gamma0(&params, cfg.gamma0_accuracy)?;
    if Regime::from_gamma0(gs.gamma0, cfg.regime_tol) != Regime::Subcritical {
        return Err(Error::Regime(format!("needs the subcritical regime, γ₀ = {:e}", gs.gamma0)));
    }
    Ok(gs.gamma0)
}

fn cmd_trial_form(ctx: &mut Ctx, cfg: &RunConfig) -> Result<bool> {
    require_subcritical(cfg)?;
    let t = trial_form_value(&cfg.params()?, &cfg.trial_k_list)?;
    let cert = CertificateReport::below_threshold(&t, cfg.omega, &Provenance::of(cfg));
    println!("{}", cert.statement);
    ctx.w.write("trial_form.csv", &report::trial_csv(&t, cfg.omega))?;
    ctx.json("trial-form", cfg, &t)?;
    Ok(true)
}

fn cmd_certify(ctx: &mut Ctx, cfg: &RunConfig) -> Result<Vec<CertificateReport>> {
    let params = cfg.params()?;
    let gs = gamma0(&params, cfg.gamma0_accuracy)?;
    let prov = Provenance::of(cfg);
    let incl = spectrum_certificate(&params, &gs, cfg.regime_tol, &cfg.mu_grid, cfg.index)?;
    let mut certs: Vec<CertificateReport> = incl.iter().map(|c| CertificateReport::inclusion(c, &prov)).collect();
    if Regime::from_gamma0(gs.gamma0, cfg.regime_tol) == Regime::Subcritical {
        let t = trial_form_value(&params, &cfg.trial_k_list)?;
        certs.push(CertificateReport::below_threshold(&t, cfg.omega, &prov));
    }
    let text = report::certificates_text(&certs);
    print!("{text}");
    ctx.w.write("certificates.txt", &text)?;
    ctx.w.write("certificates.csv", &report::certificates_csv(&certs))?;
    ctx.json("certify", cfg, &certs)?;
    Ok(certs)
}

fn cmd_moment_bound(ctx: &mut Ctx, cfg: &RunConfig) -> Result<Vec<CertificateReport>> {
    let params = cfg.params()?;
    let opts = cfg.ladder_options(ctx.cli.seed, ctx.cli.strict);
    let inputs = bound_inputs(&params, &cfg.ladder(), &opts)?;
    let prov = Provenance::of(cfg);
    let mut rows = Vec::new();
    let mut certs = Vec::new();
    for &s in &cfg.sigma_list {
        let r = report_for(&params, &inputs, s)?;
        let mut c = CertificateReport::moment(&r, &prov);
        if !r.consistent {
            log::error!("eigenvalues below -{}: {:?}", cfg.negative_tol, inputs.spectrum.negative);
            c.holds = false;
        }
        println!(
            "σ = {s}: lhs {} ≤ rhs {} ? {} (α₁ = {}, κ = {})",
            report::fmt(r.lhs),
            report::fmt(r.rhs_total),
            r.satisfied,
            report::fmt(r.alpha1),
            r.kappa
        );
        certs.push(c);
        rows.push((config_label(ctx), r));
    }
    ctx.w.write("moment_bound.csv", &report::moment_csv(&rows))?;
    if !inputs.spectrum.rungs.is_empty() {
        ctx.w.write(
            "eigenvalue_vs_box.dat",
            &report::plot_data(("box", "lowest_eigenvalue"), &eigenvalue_curve(&inputs.spectrum.rungs)),
        )?;
    }
    let reports: Vec<_> = rows.into_iter().map(|(_, r)| r).collect();
    ctx.json("moment-bound", cfg, &reports)?;
    Ok(certs)
}

fn config_label(ctx: &Ctx) -> String {
    ctx.cli
        .config
        .as_ref()
        .and_then(|p| p.file_stem())
        .map_or("config".to_string(), |s| s.to_string_lossy().into_owned())
}

fn report_all(ctx: &mut Ctx, cfg: Option<RunConfig>) -> Result<bool> {
    let configs: Vec<(String, RunConfig)> = match cfg {
        Some(c) => vec![(config_label(ctx), c)],
        None => FIXTURE_NAMES
            .iter()
            .map(|n| fixture_config(n).map(|c| (n.to_string(), c)))
            .collect::<Result<_>>()?,
    };
    let root = ctx.cli.out.clone();
    let mut all_ok = true;
    let mut rows: Vec<(String, String, f64, usize, bool)> = Vec::new();
    let mut certs_all = Vec::new();
    for (name, c) in &configs {
        println!("== {name}");
        let mut sub = Ctx {
            cli: ctx.cli,
            w: ReportWriter::new(&root.join(name))?,
        };
        let class = cmd_classify(&mut sub, c)?;
        let mut certs = cmd_certify(&mut sub, c)?;
        if class.regime == Regime::Subcritical {
            certs.extend(cmd_moment_bound(&mut sub, c)?);
        }
        let ok = certs
            .iter()
            .all(|x| x.kind != report::CertificateKind::MomentBound || x.holds);
        all_ok &= ok;
        rows.push((name.clone(), class.regime.as_str().to_string(), class.gamma0, certs.len(), ok));
        certs_all.extend(certs);
    }
    ctx.w.write("report.txt", &report::certificates_text(&certs_all))?;
    let base = configs.first().map(|c| c.1.clone()).unwrap_or_default();
    ctx.json("report", &base, &rows)?;
    Ok(all_ok)
}

fn write_matrix(a: &chanspec::sparse::SparseSymmetricOperator, path: &std::path::Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let f = File::create(path).map_err(io)?;
    a.write_coordinate(BufWriter::new(f)).map_err(io)
}
