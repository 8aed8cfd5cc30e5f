//! Batch front end: `rblab {simulate | entropy | rate-study | diagnose}`.
//!
//! Exit codes: 0 success (all criteria pass), 1 criteria failed, 2
//! configuration error, 3 numerical singularity flagged.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand as ClapSubcommand};

use config::{build_entropy, build_simulate, build_study, RawConfig, Resolved, Subcommand};
use rblab_core::csvio::{fmt_f64, write_csv};
use rblab_core::diagnostics::{oleinik_bound, tv_bound};
use rblab_core::entropy::run_entropy;
use rblab_core::regularized::{run_regularized, RegularizedRunConfig, ViscosityPolicy};
use rblab_core::study::{emit_report, run_rate_study};
use rblab_core::trajectory::Trajectory;
use rblab_core::Grid1D;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "rblab", version, about = "Regularized conservation-law laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines, `#` comments). Missing file keys
    /// fall back to documented defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(short, long)]
    output: PathBuf,
    /// Inline overrides, e.g. `--set ell=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Integrate the regularized equation; write snapshots and diagnostics.
    Simulate(RunArgs),
    /// Integrate the (viscous) conservation law with the Godunov scheme.
    Entropy(RunArgs),
    /// Run the ell-sweep and render the scaling verdict.
    RateStudy(RunArgs),
    /// Simulate, then evaluate the closed-form bounds and report PASS/FAIL.
    Diagnose(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (args, which) = match &cli.command {
        Command::Simulate(a) => (a, Subcommand::Simulate),
        Command::Entropy(a) => (a, Subcommand::Entropy),
        Command::RateStudy(a) => (a, Subcommand::RateStudy),
        Command::Diagnose(a) => (a, Subcommand::Diagnose),
    };
    match dispatch(args, which) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// RBLAB_THREADS caps the sweep parallelism; default is machine parallelism.
fn configure_threads() {
    if let Ok(v) = std::env::var("RBLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn load_raw(args: &RunArgs) -> Result<RawConfig> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    raw.apply_overrides(&args.overrides)?;
    Ok(raw)
}

fn dispatch(args: &RunArgs, which: Subcommand) -> Result<ExitCode> {
    let raw = load_raw(args)?;
    std::fs::create_dir_all(&args.output)
        .with_context(|| format!("creating output dir {}", args.output.display()))?;

    match which {
        Subcommand::Simulate => {
            let (cfg, resolved) = build_simulate(&raw, which)?;
            write_manifest(&args.output, &resolved)?;
            let traj = run_regularized(&cfg).context("simulation failed")?;
            write_run_outputs(&args.output, &cfg.grid, &traj)?;
            report_run(&traj);
            Ok(exit_for_run(&traj))
        }
        Subcommand::Entropy => {
            let (cfg, resolved) = build_entropy(&raw)?;
            write_manifest(&args.output, &resolved)?;
            let traj = run_entropy(&cfg).context("entropy run failed")?;
            write_run_outputs(&args.output, &cfg.grid, &traj)?;
            report_run(&traj);
            Ok(exit_for_run(&traj))
        }
        Subcommand::RateStudy => {
            let (cfg, resolved) = build_study(&raw)?;
            write_manifest(&args.output, &resolved)?;
            let result = run_rate_study(&cfg).context("rate study failed")?;
            emit_report(&result, &cfg.p_list, &args.output)?;
            for f in &result.fits {
                if f.dropped > 0 {
                    eprintln!(
                        "warning: {} nonpositive point(s) dropped from the {} fit",
                        f.dropped, f.quantity
                    );
                }
            }
            for c in &result.criteria {
                println!(
                    "{}: {} ({})",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            if let Some((ell, reason)) = &result.aborted {
                eprintln!("study aborted at ell = {ell}: {reason}");
                return Ok(ExitCode::from(3));
            }
            Ok(if result.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Subcommand::Diagnose => {
            let (cfg, resolved) = build_simulate(&raw, which)?;
            write_manifest(&args.output, &resolved)?;
            let traj = run_regularized(&cfg).context("simulation failed")?;
            write_run_outputs(&args.output, &cfg.grid, &traj)?;
            report_run(&traj);
            if traj.singular_at.is_some() {
                return Ok(ExitCode::from(3));
            }
            let all_pass = write_bounds_report(&args.output, &cfg, &traj)?;
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn exit_for_run(traj: &Trajectory) -> ExitCode {
    if traj.singular_at.is_some() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn report_run(traj: &Trajectory) {
    println!(
        "steps = {}, wall = {:.2}s, final t = {:.4}",
        traj.meta.steps,
        traj.meta.wall_seconds,
        traj.series.last().map(|r| r.t).unwrap_or(0.0)
    );
    let max_bres = traj
        .series
        .iter()
        .map(|r| r.boundary_residual)
        .fold(0.0_f64, f64::max);
    println!("max boundary residual = {max_bres:.3e}");
    if let Some(tail) = traj.meta.kernel_tail_mass {
        println!("kernel tail mass beyond support margin = {tail:.3e}");
    }
    if let Some(t) = traj.singular_at {
        eprintln!("singularity flagged at t = {t}; run truncated");
    }
}

fn write_manifest(dir: &Path, resolved: &Resolved) -> Result<()> {
    std::fs::write(dir.join("manifest.txt"), resolved.manifest(VERSION))?;
    Ok(())
}

fn write_run_outputs(dir: &Path, grid: &Grid1D, traj: &Trajectory) -> Result<()> {
    write_csv(
        dir.join("snapshots.csv"),
        "t,x,u",
        traj.snapshots.iter().flat_map(|(t, s)| {
            let t = *t;
            s.u.iter()
                .enumerate()
                .map(move |(i, &u)| vec![fmt_f64(t), fmt_f64(grid.center(i)), fmt_f64(u)])
                .collect::<Vec<_>>()
        }),
    )?;
    write_csv(
        dir.join("diagnostics.csv"),
        "t,energy,tv,sup_fwd_slope,linf,l2P_int,l2qP_int,boundary_residual",
        traj.series.iter().map(|d| {
            vec![
                fmt_f64(d.t),
                fmt_f64(d.energy),
                fmt_f64(d.tv),
                fmt_f64(d.sup_fwd_slope),
                fmt_f64(d.linf),
                fmt_f64(d.l2p_int),
                fmt_f64(d.l2qp_int),
                fmt_f64(d.boundary_residual),
            ]
        }),
    )?;
    Ok(())
}

/// Evaluates the closed-form bounds on a finished run and writes one
/// PASS/FAIL line per bound into `bounds.txt`.
fn write_bounds_report(
    dir: &Path,
    cfg: &RegularizedRunConfig,
    traj: &Trajectory,
) -> Result<bool> {
    let (c1, c2) = (cfg.flux.c1(), cfg.flux.c2());
    let m0 = cfg.datum.max_slope();
    let tv0 = cfg.datum.tv0();
    let n = cfg.grid.len() as f64;
    let mut lines: Vec<String> = Vec::new();
    let mut all_pass = true;
    fn check(lines: &mut Vec<String>, all_pass: &mut bool, name: &str, pass: bool, detail: String) {
        *all_pass &= pass;
        lines.push(format!(
            "{name}: {} ({detail})",
            if pass { "PASS" } else { "FAIL" }
        ));
    }

    let mut worst = 0.0_f64;
    for r in traj.series.iter().filter(|r| r.t >= 0.1) {
        let threshold = oleinik_bound(r.t, c1, m0) * 1.05 + 2.0 / n.sqrt();
        worst = worst.max(r.sup_fwd_slope / threshold);
    }
    check(
        &mut lines,
        &mut all_pass,
        "oleinik",
        worst <= 1.0,
        format!("max slope/threshold = {worst:.6}"),
    );

    let mut worst = 0.0_f64;
    for r in &traj.series {
        worst = worst.max(r.tv / (tv_bound(r.t, c1, c2, m0, tv0) * 1.05));
    }
    check(
        &mut lines,
        &mut all_pass,
        "tv_growth",
        worst <= 1.0,
        format!("max tv/bound = {worst:.6}"),
    );

    if cfg.viscosity == ViscosityPolicy::None {
        lines.push("energy_monotone: SKIPPED (inviscid policy)".to_string());
    } else {
        let mut max_rise = f64::NEG_INFINITY;
        for w in traj.series.windows(2) {
            max_rise = max_rise.max(w[1].energy - w[0].energy);
        }
        check(
            &mut lines,
            &mut all_pass,
            "energy_monotone",
            max_rise <= 1e-8,
            format!("max energy rise/step = {max_rise:.3e}"),
        );
    }

    let ell2 = cfg.ell * cfg.ell;
    let mut worst_breach = 0.0_f64;
    for r in &traj.series {
        let lower = 0.5 * c1 * ell2 * r.grad_l2_sq;
        let upper = 0.5 * c2 * ell2 * r.grad_l2_sq;
        let slack = 1e-6 * upper.max(1e-14);
        let breach = (lower - slack - r.l2p_int)
            .max(r.l2p_int - upper - slack)
            .max(0.0);
        worst_breach = worst_breach.max(breach / upper.max(1e-14));
    }
    check(
        &mut lines,
        &mut all_pass,
        "l2p_bracket",
        worst_breach == 0.0,
        format!("worst relative breach = {worst_breach:.3e}"),
    );

    let mut worst = 0.0_f64;
    for r in &traj.series {
        worst = worst.max(r.linf - r.tv);
    }
    check(
        &mut lines,
        &mut all_pass,
        "linf_le_tv",
        worst <= 1e-12,
        format!("max (linf - tv) = {worst:.3e}"),
    );

    let text = lines.join("\n") + "\n";
    print!("{text}");
    std::fs::write(dir.join("bounds.txt"), text)?;
    Ok(all_pass)
}
