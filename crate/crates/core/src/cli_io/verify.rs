//! Built-in verification suites behind `sdwave verify`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::data::Profile;
use crate::diagnostics::{energy_identity_residual, max_energy_increase};
use crate::domain_grid::{build_grid, DomainSpec, GridField};
use crate::error::{Result, SdwError};
use crate::evolver::{evolve, NoForcing, SolverConfig, TimeForcing};
use crate::harmonic_weight::{gradient_decay_check, laplacian_residual, make_weight};
use crate::nonlinearity::{power_difference_bound_check, seeded_pairs, NonlinKind};
use crate::testfn::{make_cutoffs, scaling_slope, weak_form_residual, SlopeReport, SlopeSpec, TermSelector};
use crate::theory::constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Harmonic,
    Energy,
    Weak,
    Slopes,
    Inequality,
    Constants,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    /// Human-readable acceptance condition.
    pub condition: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(label: impl Into<String>, value: f64, condition: impl Into<String>, pass: bool) -> Check {
    Check {
        label: label.into(),
        value,
        condition: condition.into(),
        pass,
    }
}

fn harmonic() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let g1 = build_grid(DomainSpec::new(1, 0.0, 10.0)?, 100)?;
    let w1 = make_weight(&g1);
    let r = laplacian_residual(&w1);
    checks.push(check("n=1 laplacian residual", r, "<= 1e-12", r <= 1e-12));
    for n in [2, 3] {
        let w = |j| -> Result<_> { Ok(make_weight(&build_grid(DomainSpec::new(n, 1.0, 5.0)?, j)?)) };
        let (a, b) = (w(100)?, w(200)?);
        let order = (laplacian_residual(&a) / laplacian_residual(&b)).log2();
        checks.push(check(
            format!("n={n} residual order"),
            order,
            "within 2 +- 0.2",
            (order - 2.0).abs() <= 0.2,
        ));
        checks.push(check(
            format!("n={n} boundary value"),
            a.values.values[0],
            "== 0",
            a.values.values[0] == 0.0,
        ));
    }
    let w3 = make_weight(&build_grid(DomainSpec::new(3, 1.0, 8.0)?, 140)?);
    let rep = gradient_decay_check(&w3)?;
    let dev = (rep.constant - rep.expected).abs();
    checks.push(check("n=3 |d_r phi0| r^2 deviation", dev, "<= 1e-10", dev <= 1e-10));
    Ok(SuiteReport {
        suite: "harmonic",
        checks,
    })
}

fn energy() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for n in [1, 2, 3] {
        let r_obs = if n == 1 { 0.0 } else { 1.0 };
        let g = build_grid(DomainSpec::new(n, r_obs, r_obs + 20.0)?, 200)?;
        let u0 = Profile::bump(r_obs + 8.0, 3.0).sample(&g, 1.0);
        let u1 = Profile::bump(r_obs + 6.0, 2.0).sample(&g, -0.5);
        let cfg = SolverConfig {
            dt: 0.1,
            theta: 0.5,
            t_end: 10.0,
            store_every: 1,
        };
        let run = evolve(&u0, &u1, &mut NoForcing, &cfg, false)?;
        let e0 = run.series.records[0].energy();
        let inc = max_energy_increase(&run.series);
        checks.push(check(
            format!("n={n} max energy increase / E0"),
            inc / e0,
            "<= 1e-12",
            inc <= 1e-12 * e0,
        ));
        // the endpoint-averaged identity holds to truncation error only
        let half = SolverConfig {
            dt: 0.5 * cfg.dt,
            ..cfg
        };
        let fine = evolve(&u0, &u1, &mut NoForcing, &half, false)?;
        let coarse_id = energy_identity_residual(&run.series).max_abs;
        let fine_id = energy_identity_residual(&fine.series).max_abs;
        let order = (coarse_id / fine_id).log2();
        checks.push(check(
            format!("n={n} energy identity residual order in dt"),
            order,
            ">= 1.5",
            order >= 1.5,
        ));
    }
    Ok(SuiteReport {
        suite: "energy",
        checks,
    })
}

/// `|weak residual|` for `u* = sin(πx/10) e^{−t}` on `(0, 10)` with `j` cells, T = 4.
pub fn manufactured_weak_residual(j: usize) -> Result<f64> {
    let g = build_grid(DomainSpec::new(1, 0.0, 10.0)?, j)?;
    let shape = GridField::dirichlet_from_fn(&g, |x| (PI * x / 10.0).sin());
    let cfg = SolverConfig {
        dt: 10.0 / j as f64,
        theta: 0.5,
        t_end: 4.0,
        store_every: 1,
    };
    let sampler = |t: f64| shape.scaled((-t).exp());
    let run = evolve(&shape, &shape.scaled(-1.0), &mut TimeForcing(sampler), &cfg, true)?;
    let c = make_cutoffs(4.0, 4, 4, 1.0, 1, cfg.dt)?;
    let rep = weak_form_residual(
        &run.states,
        &mut TimeForcing(sampler),
        &NonlinKind::Linear,
        &c,
        &make_weight(&g),
    )?;
    Ok(rep.weak_residual.abs())
}

fn weak() -> Result<SuiteReport> {
    let r: Vec<f64> = [50, 100, 200]
        .into_iter()
        .map(manufactured_weak_residual)
        .collect::<Result<_>>()?;
    let order = (r[1] / r[2]).log2();
    Ok(SuiteReport {
        suite: "weak",
        checks: vec![
            check("weak residual decreases", r[2], "< coarser", r[2] < r[1] && r[1] < r[0]),
            check("weak residual order", order, ">= 1.7", order >= 1.7),
        ],
    })
}

/// The three time-cutoff slopes of the scaling check, T ∈ {8, 16, 32, 64}.
pub fn standard_slopes() -> Result<Vec<SlopeReport>> {
    let ts = vec![8.0, 16.0, 32.0, 64.0];
    [(3, 2.0), (2, 1.25), (1, 2.0)]
        .into_iter()
        .map(|(n, q)| scaling_slope(TermSelector::TimeCutoff, &SlopeSpec::new(n, q, ts.clone())))
        .collect()
}

fn slopes(reports: &[SlopeReport]) -> SuiteReport {
    let checks = reports
        .iter()
        .zip(["n=3 q=2", "n=2 q=1.25 (ln-corrected)", "n=1 alpha=1 q=2"])
        .map(|(r, label)| {
            check(
                format!("{label} slope (expected {})", r.expected),
                r.slope,
                "within expected +- 0.15",
                (r.slope - r.expected).abs() <= 0.15,
            )
        })
        .collect();
    SuiteReport {
        suite: "slopes",
        checks,
    }
}

fn inequality(seed: u64) -> Result<SuiteReport> {
    let pairs = seeded_pairs(seed, 100_000, 10.0);
    let mut checks = Vec::new();
    for r in [1.5, 2.0, 3.0] {
        let rep = power_difference_bound_check(r, &pairs)?;
        checks.push(check(format!("r={r} max ratio"), rep.max_ratio, "<= 1", rep.passed()));
    }
    Ok(SuiteReport {
        suite: "inequality",
        checks,
    })
}

fn constants_suite() -> SuiteReport {
    let c = constants();
    SuiteReport {
        suite: "constants",
        checks: vec![
            check("alpha1", c.alpha1, "root of 2a^2 - a - 2", true),
            check(
                "alpha1 residual",
                c.alpha1_residual,
                "<= 1e-12",
                c.alpha1_residual <= 1e-12,
            ),
            check("alpha2", c.alpha2, "root of a^2 - a - 1", true),
            check(
                "alpha2 residual",
                c.alpha2_residual,
                "<= 1e-12",
                c.alpha2_residual <= 1e-12,
            ),
            check(
                "1 + alpha1",
                1.0 + c.alpha1,
                "rounds to 2.28",
                format!("{:.2}", 1.0 + c.alpha1) == "2.28",
            ),
            check(
                "(1 + alpha2)/2",
                (1.0 + c.alpha2) / 2.0,
                "rounds to 1.3",
                format!("{:.1}", (1.0 + c.alpha2) / 2.0) == "1.3",
            ),
        ],
    }
}

/// Runs `suite`; the slope reports are returned for export.
pub fn run_suite(suite: Suite, seed: u64) -> Result<(Vec<SuiteReport>, Vec<SlopeReport>)> {
    let mut reports = Vec::new();
    let mut slope_reports = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Constants {
        reports.push(constants_suite());
    }
    if all || suite == Suite::Harmonic {
        reports.push(harmonic()?);
    }
    if all || suite == Suite::Inequality {
        reports.push(inequality(seed)?);
    }
    if all || suite == Suite::Energy {
        reports.push(energy()?);
    }
    if all || suite == Suite::Weak {
        reports.push(weak()?);
    }
    if all || suite == Suite::Slopes {
        slope_reports = standard_slopes()?;
        reports.push(slopes(&slope_reports));
    }
    if reports.is_empty() {
        return Err(SdwError::usage("no suite selected"));
    }
    Ok((reports, slope_reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::Constants, Suite::Harmonic, Suite::Energy] {
            let (reports, slopes) = run_suite(s, 1).unwrap();
            assert!(slopes.is_empty());
            for r in reports {
                assert!(r.passed(), "{r:?}");
            }
        }
    }
}
