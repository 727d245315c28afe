//! Batch experiment runner: forward solves, probe certificates,
//! linearization tables, identity scenarios, reconstruction round trips,
//! and the full verification suite, each emitting `report.csv` and
//! `summary.txt` under the output directory.
//!
//! Exit codes: 0 when every asserted tolerance passes, 1 when a numerical
//! assertion fails (the summary names it), 2 when the configuration does
//! not parse or validate.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfg_core::basis::build_interval_basis;
use mfg_core::checks::{self, SuiteConfig};
use mfg_core::forward::{mass_trace, solve_mfg};
use mfg_core::identity::{standard_scenarios, verify_pairing_identity, Window};
use mfg_core::inverse::{
    recover_running_cost, MeasureOracle, NoisyOracle, ReconstructionConfig, SyntheticOracle,
};
use mfg_core::mesh::{SpaceGrid, TimeGrid};
use mfg_core::probes::{certify_probe, ProbeFamily, ProbingMode};
use mfg_core::tolerances;

use config::Config;
use report::{num, Report};

#[derive(Parser)]
#[command(name = "mfg", version, about = "Mean field game forward and inverse experiments")]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; each subcommand writes into its own subfolder.
    #[arg(long, global = true, default_value = "mfg-out")]
    out: PathBuf,
    /// Override the probe/reconstruction mode counts.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Override the spatial grid size.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Override the number of time steps.
    #[arg(long, global = true)]
    tsteps: Option<usize>,
    /// Override the noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress stdout chatter; reports are still written.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the coupled system once and report the mass trace.
    Forward,
    /// Certify every probe family over the mode/coupling grid.
    ProbeCheck,
    /// Stencil-versus-direct convergence tables for the linearizations.
    LinearizeCheck,
    /// Pairing-identity scenarios, including the loud mutation.
    IdentityCheck,
    /// Reconstruction round trip against the configured truth.
    Reconstruct,
    /// The whole verification suite, run twice for byte determinism.
    All {
        /// Use reduced grids (every criterion still runs).
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match Config::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("configuration error: {err:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(modes) = cli.modes {
        cfg.probes.mode_max = modes;
        cfg.reconstruction.mode_cut = modes;
    }
    if let Some(grid) = cli.grid {
        cfg.grids.points = grid;
    }
    if let Some(tsteps) = cli.tsteps {
        cfg.grids.time_steps = tsteps;
    }
    if let Some(seed) = cli.seed {
        cfg.measurement.seed = seed;
    }
    if let Err(err) = cfg.validate() {
        eprintln!("configuration error: {err:#}");
        return ExitCode::from(2);
    }

    let outcome = match &cli.command {
        Command::Forward => cmd_forward(&cfg, &cli),
        Command::ProbeCheck => cmd_probe_check(&cfg, &cli),
        Command::LinearizeCheck => cmd_linearize_check(&cfg, &cli),
        Command::IdentityCheck => cmd_identity_check(&cfg, &cli),
        Command::Reconstruct => cmd_reconstruct(&cfg, &cli),
        Command::All { quick } => cmd_all(&cfg, &cli, *quick),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn out_dir(cli: &Cli, sub: &str) -> PathBuf {
    cli.out.join(sub)
}

fn cmd_forward(cfg: &Config, cli: &Cli) -> anyhow::Result<bool> {
    let grid = SpaceGrid::interval(cfg.grids.points)?;
    let time = TimeGrid::new(cfg.grids.horizon, cfg.grids.time_steps)?;
    let limit = mfg_core::basis::resolution_limit(&grid) + 1;
    let basis = build_interval_basis(&grid, (cfg.probes.mode_max + 1).min(limit))?;
    let cost = cfg.truth.build(&grid, &basis)?;
    let fwd = cfg.forward.to_core();
    let amp = cfg.forward.perturbation_amplitude;
    let m0: Vec<f64> = grid.sample(|x| 1.0 + amp * (std::f64::consts::PI * x).cos());

    let sol = solve_mfg(&cost, &fwd, &m0, &time, &grid)?;
    let trace = mass_trace(&sol, &time, &grid);

    // the measurement record (x, u0, mT) alongside the mass trace
    let last = time.nodes() - 1;
    let mut rec_report = Report::new("forward-record", cfg.hash(), "x,u0,mT");
    rec_report.provenance("grid_points", cfg.grids.points);
    rec_report.provenance("time_steps", cfg.grids.time_steps);
    rec_report.provenance("horizon", cfg.grids.horizon);
    rec_report.provenance("terminal_cost", cfg.forward.terminal_cost);
    rec_report.provenance("cost_order", cost.order());
    for j in 0..grid.len() {
        rec_report.row(&[num(grid.coord(j)), num(sol.u.at(0, j)), num(sol.m.at(last, j))]);
    }
    let dir = out_dir(cli, "forward");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("record.csv"), rec_report.csv())?;

    let mut rep = Report::new("forward", cfg.hash(), "t,mass,min_density");
    rep.provenance("grid_points", cfg.grids.points);
    rep.provenance("time_steps", cfg.grids.time_steps);
    rep.provenance("horizon", cfg.grids.horizon);
    rep.provenance("mass_tolerance", tolerances::MASS_CONSERVATION);
    for (n, (t, mass)) in trace.iter().enumerate() {
        let min_at = sol.m.slice(n).iter().copied().fold(f64::INFINITY, f64::min);
        rep.row(&[num(*t), num(*mass), num(min_at)]);
    }

    let defect = trace.iter().fold(0.0f64, |d, (_, m)| d.max((m - 1.0).abs()));
    let min_density = sol.min_density();
    let mass_ok = defect <= tolerances::MASS_CONSERVATION;
    let positive_ok = min_density >= tolerances::POSITIVITY_FLOOR;
    rep.note(format!(
        "{} forward solve: {} Picard passes, residual {:.3e}",
        if mass_ok && positive_ok { "PASS" } else { "FAIL" },
        sol.iterations_used,
        sol.final_residual
    ));
    rep.note(format!(
        "  mass defect {:.3e} (tolerance {:.1e})",
        defect,
        tolerances::MASS_CONSERVATION
    ));
    rep.note(format!(
        "  min density {:.3e} (floor {:.1e})",
        min_density,
        tolerances::POSITIVITY_FLOOR
    ));
    rep.write(&out_dir(cli, "forward"), cli.quiet)?;
    Ok(mass_ok && positive_ok)
}

fn cmd_probe_check(cfg: &Config, cli: &Cli) -> anyhow::Result<bool> {
    let time = TimeGrid::new(1.0, cfg.probes.time_steps)?;
    let points = *cfg.probes.grids.last().expect("validated non-empty");
    let grid = SpaceGrid::interval(points)?;
    let basis = build_interval_basis(&grid, cfg.probes.mode_max + 1)?;

    let families = [
        ProbeFamily::ForwardDecay,
        ProbeFamily::ForwardGrowth,
        ProbeFamily::ForwardCombined,
        ProbeFamily::BackwardCombined,
        ProbeFamily::BackwardDecay,
    ];
    let mut rep = Report::new(
        "probe-check",
        cfg.hash(),
        "family,mode,coupling,lambda,k,d,identity,time_res_u,time_res_m,grid_res_u,grid_res_m,terminal,pass",
    );
    rep.provenance("grid_points", points);
    rep.provenance("time_residual_tolerance", tolerances::PROBE_TIME_RESIDUAL);
    rep.provenance("algebra_tolerance", tolerances::PROBE_ALGEBRA);

    let h = grid.spacing();
    let mut all_ok = true;
    for family in families {
        for i in 1..=cfg.probes.mode_max {
            for &c in &cfg.probes.couplings {
                let probe = ProbingMode::new(family, i, c, &basis, time.horizon())?;
                let (u, m) = probe.sample(&time, &basis);
                let cert = certify_probe(&probe, &u, &m, &time, &basis);
                // grid rows scale with β² h² / 12 times the row magnitudes
                let grid_tol = 2.0 * probe.beta * probe.beta * h * h;
                let pass = cert.passes(grid_tol);
                all_ok &= pass;
                rep.row(&[
                    family.label().into(),
                    i.to_string(),
                    num(c),
                    num(probe.lambda),
                    num(probe.k),
                    num(probe.d),
                    num(cert.algebra_residual),
                    num(cert.time_residual_value_row),
                    num(cert.time_residual_density_row),
                    num(cert.grid_residual_value_row),
                    num(cert.grid_residual_density_row),
                    num(cert.terminal_residual.unwrap_or(0.0)),
                    pass.to_string(),
                ]);
            }
        }
    }
    rep.note(format!(
        "{} probe certificates over {} families x {} modes x {} couplings",
        if all_ok { "PASS" } else { "FAIL" },
        families.len(),
        cfg.probes.mode_max,
        cfg.probes.couplings.len()
    ));
    rep.write(&out_dir(cli, "probe-check"), cli.quiet)?;
    Ok(all_ok)
}

fn cmd_linearize_check(cfg: &Config, cli: &Cli) -> anyhow::Result<bool> {
    let suite = cfg.suite();
    let crit = checks::criterion_linearization(&suite)?;
    let mut rep = Report::new("linearize-check", cfg.hash(), "check,value,bound,pass");
    rep.provenance("grid_points", suite.lin_points);
    rep.provenance("time_steps", suite.lin_steps);
    rep.provenance("horizon", suite.lin_horizon);
    rep.provenance("epsilons", format!("{:?}", suite.lin_epsilons));
    for row in &crit.rows {
        rep.row(&[
            row.label.clone(),
            num(row.value),
            row.bound.describe().replace(',', ";"),
            row.pass.to_string(),
        ]);
    }
    rep.note(crit.summary_line());
    rep.write(&out_dir(cli, "linearize-check"), cli.quiet)?;
    Ok(crit.passed)
}

fn cmd_identity_check(cfg: &Config, cli: &Cli) -> anyhow::Result<bool> {
    let grid = SpaceGrid::interval(cfg.identity_check.points)?;
    let time = TimeGrid::new(cfg.identity_check.horizon, cfg.identity_check.time_steps)?;
    let basis = build_interval_basis(&grid, 4)?;
    let mut rep = Report::new(
        "identity-check",
        cfg.hash(),
        "scenario,pairing,ibp_first,ibp_second,u0,uT,m0,mT,hypothesis_ok,pass",
    );
    rep.provenance("grid_points", cfg.identity_check.points);
    rep.provenance("time_steps", cfg.identity_check.time_steps);
    rep.provenance("pairing_tolerance", tolerances::PAIRING);
    rep.provenance("mutation_floor", tolerances::MUTATION_FLOOR);

    let mut all_ok = true;
    for scenario in standard_scenarios() {
        let r = verify_pairing_identity(&scenario, &time, &basis);
        let pass = match scenario.window {
            Window::ZeroData => {
                r.hypothesis_ok
                    && r.pairing.abs() <= tolerances::PAIRING
                    && r.ibp_first.abs() <= tolerances::PAIRING
                    && r.ibp_second.abs() <= tolerances::PAIRING
            }
            Window::BrokenAtHorizon => {
                !r.hypothesis_ok && r.pairing.abs() >= tolerances::MUTATION_FLOOR
            }
        };
        all_ok &= pass;
        rep.row(&[
            r.label.clone(),
            num(r.pairing),
            num(r.ibp_first),
            num(r.ibp_second),
            num(r.data_rows[0]),
            num(r.data_rows[1]),
            num(r.data_rows[2]),
            num(r.data_rows[3]),
            r.hypothesis_ok.to_string(),
            pass.to_string(),
        ]);
        rep.note(format!(
            "{} {}: pairing {:.3e}, ibp ({:.3e}, {:.3e})",
            if pass { "PASS" } else { "FAIL" },
            r.label,
            r.pairing,
            r.ibp_first,
            r.ibp_second
        ));
    }
    rep.write(&out_dir(cli, "identity-check"), cli.quiet)?;
    Ok(all_ok)
}

fn cmd_reconstruct(cfg: &Config, cli: &Cli) -> anyhow::Result<bool> {
    let grid = SpaceGrid::interval(cfg.reconstruction.points)?;
    let time = TimeGrid::new(cfg.reconstruction.horizon, cfg.reconstruction.time_steps)?;
    let mode_cut = cfg.reconstruction.mode_cut;
    let basis = build_interval_basis(&grid, 2 * mode_cut + 4)?;
    let truth = cfg.truth.build(&grid, &basis)?;
    let truth_f2 = truth.coefficient(2, &grid);
    let truth_f3 = truth.coefficient(3, &grid);

    let mut recon_cfg = ReconstructionConfig::standard(mode_cut, cfg.reconstruction.taylor_order);
    recon_cfg.probe_modes = cfg.reconstruction.probe_modes.clone();
    recon_cfg.cubic.stencil = cfg.measurement.stencil()?;
    recon_cfg.cubic.forward = cfg.forward.to_core();

    let mut base = SyntheticOracle::new(truth.clone(), &time, &grid, &basis);
    base.stencil = cfg.measurement.stencil()?;
    base.forward = cfg.forward.to_core();
    let noise = cfg.measurement.noise_level;
    let report = if noise > 0.0 {
        let oracle = NoisyOracle::new(base, noise, cfg.measurement.seed);
        recover_running_cost(&oracle as &dyn MeasureOracle, &recon_cfg, &time, &basis)?
    } else {
        recover_running_cost(&base as &dyn MeasureOracle, &recon_cfg, &time, &basis)?
    };

    let c1_tol = if noise > 0.0 {
        tolerances::NOISE_DEGRADATION_REL
    } else {
        tolerances::C1_RECOVERY_REL
    };
    let mut rep = Report::new(
        "reconstruct",
        cfg.hash(),
        "stage,quantity,recovered,truth,abs_error,tolerance,pass",
    );
    rep.provenance("grid_points", cfg.reconstruction.points);
    rep.provenance("time_steps", cfg.reconstruction.time_steps);
    rep.provenance("horizon", cfg.reconstruction.horizon);
    rep.provenance("mode_cut", mode_cut);
    rep.provenance("noise_level", noise);

    let mut all_ok = true;
    let c1_err = (report.c1 - cfg.truth.c1).abs() / cfg.truth.c1;
    let c1_ok = c1_err <= c1_tol;
    all_ok &= c1_ok;
    rep.row(&[
        "linear".into(),
        "c1".into(),
        num(report.c1),
        num(cfg.truth.c1),
        num(c1_err),
        num(c1_tol),
        c1_ok.to_string(),
    ]);
    for (mode, c) in &report.c1_by_probe {
        rep.note(format!("probe mode {mode}: c1 = {c:.9}"));
    }

    if let Some(quad) = &report.quadratic {
        let truth_coeffs = basis.project(&truth_f2);
        for i in 0..=mode_cut {
            let err = (quad.coefficients[i] - truth_coeffs[i]).abs();
            let scale = truth_coeffs[i].abs().max(1.0);
            let ok = noise > 0.0 || err / scale <= tolerances::F2_RECOVERY_REL;
            all_ok &= ok;
            rep.row(&[
                "quadratic".into(),
                format!("mode{i}"),
                num(quad.coefficients[i]),
                num(truth_coeffs[i]),
                num(err),
                num(tolerances::F2_RECOVERY_REL),
                ok.to_string(),
            ]);
        }
        rep.note(format!(
            "quadratic stage: condition {:.3e}, residual {:.3e}{}",
            quad.condition,
            quad.relative_residual,
            if quad.truncation_flagged { " (truncation flagged)" } else { "" }
        ));
    }
    if let Some(cubic) = &report.cubic {
        let truth_coeffs = basis.project(&truth_f3);
        for i in 0..=mode_cut {
            let err = (cubic.coefficients[i] - truth_coeffs[i]).abs();
            let scale = truth_coeffs[i].abs().max(1.0);
            let ok = noise > 0.0 || err / scale <= tolerances::F3_RECOVERY_REL;
            all_ok &= ok;
            rep.row(&[
                "cubic".into(),
                format!("mode{i}"),
                num(cubic.coefficients[i]),
                num(truth_coeffs[i]),
                num(err),
                num(tolerances::F3_RECOVERY_REL),
                ok.to_string(),
            ]);
        }
        rep.note(format!(
            "cubic stage: condition {:.3e}, residual {:.3e}{}",
            cubic.condition,
            cubic.relative_residual,
            if cubic.truncation_flagged { " (truncation flagged)" } else { "" }
        ));
    }
    rep.note(format!(
        "{} reconstruction: c1 {:.9} (truth {}), probe spread {:.3e}",
        if all_ok { "PASS" } else { "FAIL" },
        report.c1,
        cfg.truth.c1,
        report.probe_spread
    ));
    rep.write(&out_dir(cli, "reconstruct"), cli.quiet)?;
    Ok(all_ok)
}

fn cmd_all(cfg: &Config, cli: &Cli, quick: bool) -> anyhow::Result<bool> {
    let suite = if quick { SuiteConfig::reduced() } else { cfg.suite() };
    let first = checks::run_all(&suite)?;
    let second = checks::run_all(&suite)?;
    let deterministic = checks::rows_to_csv(&first) == checks::rows_to_csv(&second);

    let mut rep = Report::new("all", cfg.hash(), "criterion,name,check,value,bound,pass");
    rep.provenance("quick", quick);
    let mut all_ok = deterministic;
    let mut first_failure: Option<String> = None;
    for criterion in &first {
        for row in &criterion.rows {
            rep.row(&[
                criterion.id.to_string(),
                criterion.name.into(),
                row.label.clone(),
                num(row.value),
                row.bound.describe().replace(',', ";"),
                row.pass.to_string(),
            ]);
        }
        rep.note(criterion.summary_line());
        if !criterion.passed && first_failure.is_none() {
            first_failure = Some(format!("criterion {} ({})", criterion.id, criterion.name));
        }
        all_ok &= criterion.passed;
    }
    rep.row(&[
        "9".into(),
        "determinism".into(),
        "byte-identical-bodies".into(),
        num(if deterministic { 1.0 } else { 0.0 }),
        ">= 1.000e0".into(),
        deterministic.to_string(),
    ]);
    rep.note(format!(
        "{} criterion 9: determinism (two runs compared)",
        if deterministic { "PASS" } else { "FAIL" }
    ));
    if let Some(name) = first_failure {
        rep.note(format!("first failing criterion: {name}"));
    }
    rep.write(&out_dir(cli, "all"), cli.quiet)?;
    Ok(all_ok)
}
