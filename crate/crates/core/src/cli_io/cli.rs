//! `sdwave` subcommands.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numeric failure,
//! 3 failed verification. Everything that can fail with code 1 is checked
//! before the first file is written.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{load_run_config, load_sweep_plan, resolve_out_dir, resolve_workers};
use super::output::{picard_csv, write_outputs, OutputDir};
use super::verify::{run_suite, Suite};
use crate::blowup::detect;
use crate::diagnostics::{check_displacement_bound, check_energy_bound, check_velocity_gradient_bound};
use crate::domain_grid::build_grid;
use crate::error::{Result, SdwError};
use crate::evolver::{evolve, NonlinearForcing};
use crate::picard::{find_contraction_horizon, picard_iterate, HorizonSearch, PicardConfig};
use crate::sweep::{phase_diagram_export, run_sweep};
use crate::theory::{constants, in_blowup_region_derivative, in_blowup_region_mixed};

#[derive(Debug, Parser)]
#[command(
    name = "sdwave",
    version,
    about = "Strongly damped semilinear wave equations on radial exterior domains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Derivative,
    Mixed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single evolution with energy diagnostics and a blow-up verdict.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `SDW_OUT_DIR` and `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Picard iteration at the configured horizon, or a search for a contracting horizon.
    Picard {
        /// TOML run configuration with a `[picard]` table.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `SDW_OUT_DIR` and `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bisect for the largest contracting horizon up to `solver.t_end`.
        #[arg(long)]
        search: bool,
    },
    /// Built-in verification suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Seed of the inequality samples.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Directory for `slopes.csv` when the slope suite runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (p, q) phase diagram.
    Sweep {
        /// TOML sweep plan.
        #[arg(long)]
        plan: PathBuf,
        /// Output directory; overrides `SDW_OUT_DIR`, default `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides `SDW_WORKERS`. 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Region membership and constants.
    Theory {
        /// Space dimension; without it the threshold constants are printed.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Exponent of `|u|^p`, mixed kind only.
        #[arg(long)]
        p: Option<f64>,
        /// Exponent of `|u_t|^q`.
        #[arg(long)]
        q: Option<f64>,
    },
}

enum Outcome {
    Ok,
    VerificationFailed,
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::VerificationFailed) => 3,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn out_err(e: std::io::Error) -> SdwError {
    SdwError::io("<stdout>", e)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Run { config, out: dir } => {
            let cfg = load_run_config(&config)?;
            let dir = resolve_out_dir(dir.as_deref(), &cfg.out_dir);
            let grid = build_grid(cfg.domain, cfg.j_max)?;
            cfg.nonlinearity.check_for_dimension(cfg.domain.n)?;
            let (u0, u1) = cfg.data.sample(&grid);
            let run = evolve(&u0, &u1, &mut NonlinearForcing(cfg.nonlinearity), &cfg.solver, false)?;
            let verdict = detect(&u0, &u1, &cfg.nonlinearity, &cfg.solver, &cfg.thresholds)?;
            let files = write_outputs(Some(&run.series), Some(&verdict), &[], &dir)?;
            writeln!(out, "steps: {}", run.steps).map_err(out_err)?;
            writeln!(out, "stopped_early: {}", run.stopped_early).map_err(out_err)?;
            for (name, rep) in [
                ("energy_bound", check_energy_bound(&run.series)),
                ("displacement_bound", check_displacement_bound(&run.series)),
                ("velocity_gradient_bound", check_velocity_gradient_bound(&run.series)),
            ] {
                let rep = rep?;
                writeln!(out, "{name}: sup_ratio {:e} at t = {}", rep.sup_ratio, rep.t_at_sup).map_err(out_err)?;
            }
            writeln!(out, "verdict: {}", verdict.status()).map_err(out_err)?;
            if let Some(t) = verdict.t_est() {
                writeln!(out, "t_est: {t}").map_err(out_err)?;
            }
            writeln!(out, "sign_functional: {:e}", verdict.sign_functional).map_err(out_err)?;
            for f in files {
                writeln!(out, "wrote {}", f.display()).map_err(out_err)?;
            }
            Ok(Outcome::Ok)
        }
        Command::Picard {
            config,
            out: dir,
            search,
        } => {
            let cfg = load_run_config(&config)?;
            let pcfg = match (cfg.picard, search) {
                (Some(p), _) => Some(p),
                (None, true) => None,
                (None, false) => {
                    return Err(SdwError::config("picard needs a [picard] section or --search"));
                }
            };
            let dir = resolve_out_dir(dir.as_deref(), &cfg.out_dir);
            let grid = build_grid(cfg.domain, cfg.j_max)?;
            let (u0, u1) = cfg.data.sample(&grid);
            let trace = if search {
                let hs = HorizonSearch {
                    tol: pcfg.map_or(HorizonSearch::default().tol, |p: PicardConfig| p.tol),
                    ..HorizonSearch::default()
                };
                let rep = find_contraction_horizon(&u0, &u1, &cfg.nonlinearity, &cfg.solver, &hs)?;
                for p in &rep.probes {
                    writeln!(
                        out,
                        "probe T = {}: contracted {} (max ratio {:e})",
                        p.horizon, p.contracted, p.max_ratio
                    )
                    .map_err(out_err)?;
                }
                writeln!(out, "horizon: {}", rep.horizon).map_err(out_err)?;
                writeln!(out, "degenerate: {}", rep.degenerate).map_err(out_err)?;
                rep.trace
            } else {
                let p = pcfg.expect("checked above");
                let res = picard_iterate(&u0, &u1, &cfg.nonlinearity, &p, &cfg.solver)?;
                writeln!(out, "outcome: {:?}", res.outcome).map_err(out_err)?;
                writeln!(out, "iterations: {}", res.iterations).map_err(out_err)?;
                writeln!(out, "max_ratio: {:e}", res.trace.max_ratio()).map_err(out_err)?;
                res.trace
            };
            let od = OutputDir::create(&dir)?;
            let f = od.write("picard_trace.csv", picard_csv(&trace).as_bytes())?;
            writeln!(out, "wrote {}", f.display()).map_err(out_err)?;
            Ok(Outcome::Ok)
        }
        Command::Verify { suite, seed, out: dir } => {
            let (reports, slopes) = run_suite(suite, seed)?;
            let mut ok = true;
            for r in &reports {
                for c in &r.checks {
                    let tag = if c.pass { "PASS" } else { "FAIL" };
                    writeln!(
                        out,
                        "{tag} [{}] {}: {:.12e} ({})",
                        r.suite, c.label, c.value, c.condition
                    )
                    .map_err(out_err)?;
                }
                ok &= r.passed();
            }
            if let Some(d) = dir {
                if !slopes.is_empty() {
                    for f in write_outputs(None, None, &slopes, &d)? {
                        writeln!(out, "wrote {}", f.display()).map_err(out_err)?;
                    }
                }
            }
            Ok(if ok { Outcome::Ok } else { Outcome::VerificationFailed })
        }
        Command::Sweep {
            plan,
            out: dir,
            workers,
        } => {
            let plan = load_sweep_plan(&plan)?;
            let workers = resolve_workers(workers)?;
            let dir = resolve_out_dir(dir.as_deref(), &PathBuf::from("out"));
            let res = run_sweep(&plan, workers)?;
            let files = phase_diagram_export(&res, &dir)?;
            writeln!(out, "runs: {}", res.rows.len()).map_err(out_err)?;
            match res.agreement_rate() {
                Some(a) => writeln!(out, "agreement: {a}"),
                None => writeln!(out, "agreement: no theory points"),
            }
            .map_err(out_err)?;
            for f in files {
                writeln!(out, "wrote {}", f.display()).map_err(out_err)?;
            }
            Ok(Outcome::Ok)
        }
        Command::Theory { n, kind, p, q } => {
            let c = constants();
            let Some(n) = n else {
                writeln!(out, "alpha1: {} (residual {:e})", c.alpha1, c.alpha1_residual).map_err(out_err)?;
                writeln!(out, "alpha2: {} (residual {:e})", c.alpha2, c.alpha2_residual).map_err(out_err)?;
                return Ok(Outcome::Ok);
            };
            let q = q.ok_or_else(|| SdwError::usage("--q is required with --n"))?;
            match kind.unwrap_or(KindArg::Derivative) {
                KindArg::Derivative => {
                    let m = in_blowup_region_derivative(n, q)?;
                    writeln!(out, "member: {}", m.member).map_err(out_err)?;
                    writeln!(out, "boundary: {}", m.boundary).map_err(out_err)?;
                    writeln!(out, "open_boundary: {}", m.open_boundary).map_err(out_err)?;
                }
                KindArg::Mixed => {
                    let p = p.ok_or_else(|| SdwError::usage("--p is required for the mixed family"))?;
                    let m = in_blowup_region_mixed(n, p, q)?;
                    writeln!(out, "member: {}", m.member).map_err(out_err)?;
                    writeln!(out, "boundary: {}", m.boundary).map_err(out_err)?;
                    writeln!(out, "open_boundary: {}", m.open_boundary).map_err(out_err)?;
                    let w = m.witness.map_or("none".to_string(), |w| match w {
                        crate::theory::Witness::LowAlpha { alpha } | crate::theory::Witness::HighAlpha { alpha } => {
                            format!("{} (alpha = {alpha})", w.label())
                        }
                        _ => w.label().to_string(),
                    });
                    writeln!(out, "witness: {w}").map_err(out_err)?;
                }
            }
            Ok(Outcome::Ok)
        }
    }
}
