//! (p, q) phase-diagram sweeps against the known blow-up regions.
//!
//! Validation is one-directional. Theory membership should be matched by an
//! observed escape at some tested amplitude; an escape outside the region is
//! recorded as a beyond-theory observation and never as an error.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blowup::{detect, Thresholds, Verdict, VerdictTag};
use crate::cli_io::output::{fmt_f64, CsvWriter, OutputDir};
use crate::data::Profile;
use crate::domain_grid::{build_grid, DomainSpec, GridField};
use crate::error::{Result, SdwError};
use crate::evolver::SolverConfig;
use crate::nonlinearity::NonlinKind;
use crate::theory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `|u_t|^q`; only `q_grid` is used.
    Derivative,
    /// `|u|^p + |u_t|^q`.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub domain: DomainSpec,
    pub j_max: usize,
    pub family: Family,
    #[serde(default)]
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// `u₁ = A·profile`, `u₀ = A·u0_profile` when given.
    pub u1_profile: Profile,
    #[serde(default)]
    pub u0_profile: Option<Profile>,
    pub amplitudes: Vec<f64>,
    pub solver: SolverConfig,
    /// Per-run step budget; the horizon is `min(t_end, max_steps·dt)`.
    pub max_steps: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Restrict exponents to the local well-posedness range for n ≥ 3.
    #[serde(default)]
    pub require_local_theory: bool,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.u1_profile.validate()?;
        if let Some(p) = self.u0_profile {
            p.validate()?;
        }
        self.thresholds.validate()?;
        if self.max_steps == 0 {
            return Err(SdwError::config("max_steps must be > 0"));
        }
        if !strictly_increasing(&self.p_grid) || !strictly_increasing(&self.q_grid) {
            return Err(SdwError::config("exponent grids must be strictly increasing"));
        }
        if self
            .p_grid
            .iter()
            .chain(&self.q_grid)
            .any(|&x| !(x.is_finite() && x > 1.0))
        {
            return Err(SdwError::config("exponents must be finite and > 1"));
        }
        if self.family == Family::Derivative && !self.p_grid.is_empty() {
            return Err(SdwError::config("derivative family takes no p_grid"));
        }
        if self.amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(SdwError::config("amplitudes must be positive"));
        }
        let n = self.domain.n;
        if self.require_local_theory && n >= 3 {
            let cap = n as f64 / (n as f64 - 2.0);
            if self.p_grid.iter().chain(&self.q_grid).any(|&x| x > cap) {
                return Err(SdwError::config(format!(
                    "exponents exceed the local-theory cap {cap} for n = {n}"
                )));
            }
        }
        Ok(())
    }

    /// `(p, q)` pairs in row-major order, p outer.
    pub fn points(&self) -> Vec<(Option<f64>, f64)> {
        match self.family {
            Family::Derivative => self.q_grid.iter().map(|&q| (None, q)).collect(),
            Family::Mixed => self
                .p_grid
                .iter()
                .flat_map(|&p| self.q_grid.iter().map(move |&q| (Some(p), q)))
                .collect(),
        }
    }

    pub fn kind_at(&self, p: Option<f64>, q: f64) -> NonlinKind {
        match (self.family, p) {
            (Family::Mixed, Some(p)) => NonlinKind::Mixed { p, q },
            _ => NonlinKind::DerivativeOnly { q },
        }
    }

    pub fn horizon(&self) -> f64 {
        self.solver.t_end.min(self.max_steps as f64 * self.solver.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    TheoryConsistentBlowup,
    /// Escape observed inside the region but `∫ φ₀ u₁ ≤ 0`.
    SignConditionUnmet,
    NotObservedWithinBudget,
    BeyondTheoryObservation,
    NoClaim,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::TheoryConsistentBlowup => "theory_consistent_blowup",
            Classification::SignConditionUnmet => "sign_condition_unmet",
            Classification::NotObservedWithinBudget => "not_observed_within_budget",
            Classification::BeyondTheoryObservation => "beyond_theory_observation",
            Classification::NoClaim => "no_claim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub p: Option<f64>,
    pub q: f64,
    pub amplitude: f64,
    /// Error message when the run failed.
    pub outcome: std::result::Result<Verdict, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub p: Option<f64>,
    pub q: f64,
    pub theory_member: bool,
    pub theory_boundary: bool,
    pub observed_blowup: bool,
    /// `theory_member ⇒ observed_blowup`.
    pub agreement: bool,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub family: Family,
    pub rows: Vec<SweepRow>,
    pub points: Vec<PointSummary>,
}

impl SweepResult {
    /// Fraction of theory-region points with an observed escape; `None` when the region is not sampled.
    pub fn agreement_rate(&self) -> Option<f64> {
        let inside: Vec<_> = self.points.iter().filter(|p| p.theory_member).collect();
        if inside.is_empty() {
            return None;
        }
        Some(inside.iter().filter(|p| p.agreement).count() as f64 / inside.len() as f64)
    }
}

/// Runs every (point, amplitude) pair on a pool of `workers` threads
/// (0 means rayon's default). Output order is by grid index.
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    let grid = build_grid(plan.domain, plan.j_max)?;
    let mut cfg = plan.solver;
    cfg.t_end = plan.horizon();
    let base_u1 = plan.u1_profile.sample(&grid, 1.0);
    let base_u0 = match plan.u0_profile {
        Some(p) => p.sample(&grid, 1.0),
        None => GridField::zeros(&grid),
    };
    let points = plan.points();
    let jobs: Vec<(usize, Option<f64>, f64, f64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, &(p, q))| plan.amplitudes.iter().map(move |&a| (i, p, q, a)))
        .collect();
    let run = |&(i, p, q, a): &(usize, Option<f64>, f64, f64)| SweepRow {
        point: i,
        p,
        q,
        amplitude: a,
        outcome: detect(
            &base_u0.scaled(a),
            &base_u1.scaled(a),
            &plan.kind_at(p, q),
            &cfg,
            &plan.thresholds,
        )
        .map_err(|e| e.to_string()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SdwError::usage(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| jobs.par_iter().map(run).collect());

    let n = plan.domain.n;
    let mut summaries = Vec::with_capacity(points.len());
    for (i, &(p, q)) in points.iter().enumerate() {
        let (member, boundary) = match p {
            Some(p) => {
                let m = theory::in_blowup_region_mixed(n, p, q)?;
                (m.member, m.boundary)
            }
            None => {
                let m = theory::in_blowup_region_derivative(n, q)?;
                (m.member, m.boundary)
            }
        };
        let verdicts: Vec<&Verdict> = rows
            .iter()
            .filter(|r| r.point == i)
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        let observed = verdicts.iter().any(|v| v.is_blowup());
        let signed = verdicts.iter().any(|v| v.is_blowup() && v.sign_functional > 0.0);
        let classification = match (member, observed) {
            (true, true) if signed => Classification::TheoryConsistentBlowup,
            (true, true) => Classification::SignConditionUnmet,
            (true, false) => Classification::NotObservedWithinBudget,
            (false, true) => Classification::BeyondTheoryObservation,
            (false, false) => Classification::NoClaim,
        };
        summaries.push(PointSummary {
            point: i,
            p,
            q,
            theory_member: member,
            theory_boundary: boundary,
            observed_blowup: observed,
            agreement: !member || observed,
            classification,
        });
    }
    Ok(SweepResult {
        n,
        family: plan.family,
        rows,
        points: summaries,
    })
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "point",
    "p",
    "q",
    "amplitude",
    "status",
    "t_est",
    "t_last_stable",
    "kappa",
    "peak_norm",
    "refinement_confirmed",
    "sign_functional",
    "theory_member",
    "theory_boundary",
    "agreement",
    "classification",
    "error",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

/// Writes `sweep.csv`, `overlay.csv` and `plot_sweep.py` into `dir`.
pub fn phase_diagram_export(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let out = OutputDir::create(dir)?;
    let mut csv = CsvWriter::new(&SWEEP_COLUMNS);
    for row in &result.rows {
        let s = &result.points[row.point];
        let (status, t_est, t_last, kappa, peak, confirmed, sign, err) = match &row.outcome {
            Ok(v) => {
                let (t_last, kappa) = match v.tag {
                    VerdictTag::BlowupAt {
                        t_last_stable, kappa, ..
                    } => (Some(t_last_stable), Some(kappa)),
                    VerdictTag::GlobalUpTo { .. } => (None, None),
                };
                (
                    v.status().to_string(),
                    opt(v.t_est()),
                    opt(t_last),
                    opt(kappa),
                    fmt_f64(v.peak_norm),
                    v.refinement_confirmed.to_string(),
                    fmt_f64(v.sign_functional),
                    String::new(),
                )
            }
            Err(e) => (
                "error".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ),
        };
        csv.row(&[
            row.point.to_string(),
            opt(row.p),
            fmt_f64(row.q),
            fmt_f64(row.amplitude),
            status,
            t_est,
            t_last,
            kappa,
            peak,
            confirmed,
            sign,
            s.theory_member.to_string(),
            s.theory_boundary.to_string(),
            s.agreement.to_string(),
            s.classification.label().to_string(),
            err,
        ])?;
    }
    let sweep_path = out.write("sweep.csv", csv.finish().as_bytes())?;

    let mut overlay = CsvWriter::new(&["n", "family", "p", "q_max"]);
    let (family, ps): (&str, Vec<f64>) = match result.family {
        Family::Derivative => ("derivative", vec![1.0 + 1e-6, 4.0]),
        Family::Mixed => ("mixed", (1..=150).map(|i| 1.0 + 3.0 * i as f64 / 150.0).collect()),
    };
    for (p, q) in theory::region_polyline(result.n, family, &ps, 3.0)? {
        overlay.row(&[result.n.to_string(), family.to_string(), fmt_f64(p), fmt_f64(q)])?;
    }
    let overlay_path = out.write("overlay.csv", overlay.finish().as_bytes())?;
    let script_path = out.write("plot_sweep.py", PLOT_SWEEP.as_bytes())?;
    Ok(vec![sweep_path, overlay_path, script_path])
}

const PLOT_SWEEP: &str = r##"# Plots sweep.csv over the region edge in overlay.csv.
import csv
import matplotlib.pyplot as plt

def rows(name):
    with open(name, newline="") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))

sweep = rows("sweep.csv")
overlay = rows("overlay.csv")
best = {}
for r in sweep:
    key = (r["p"] or "1", r["q"])
    best[key] = best.get(key, False) or r["status"].startswith("blowup")
fig, ax = plt.subplots()
for (p, q), up in best.items():
    ax.plot(float(p), float(q), "o" if up else "x", color="tab:red" if up else "tab:blue")
ax.plot([float(r["p"]) for r in overlay], [float(r["q_max"]) for r in overlay], "k-")
ax.set_xlabel("p")
ax.set_ylabel("q")
fig.savefig("sweep.png", dpi=150)
"##;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn plan_1d(family: Family, p_grid: Vec<f64>, q_grid: Vec<f64>) -> SweepPlan {
        SweepPlan {
            domain: DomainSpec::new(1, 0.0, 60.0).unwrap(),
            j_max: 600,
            family,
            p_grid,
            q_grid,
            u1_profile: Profile::bump(20.0, 8.0),
            u0_profile: None,
            amplitudes: vec![1.0, 10.0],
            solver: SolverConfig {
                dt: 0.01,
                theta: 0.5,
                t_end: 30.0,
                store_every: 1,
            },
            max_steps: 3000,
            thresholds: Thresholds::default(),
            require_local_theory: false,
        }
    }

    #[test]
    fn empty_grid_gives_empty_result() {
        let r = run_sweep(&plan_1d(Family::Derivative, vec![], vec![]), 2).unwrap();
        assert!(r.rows.is_empty() && r.points.is_empty());
        assert_eq!(r.agreement_rate(), None);
    }

    #[test]
    fn validation() {
        let mut p = plan_1d(Family::Derivative, vec![], vec![1.5, 1.2]);
        assert!(p.validate().is_err());
        p.q_grid = vec![1.2];
        p.max_steps = 0;
        assert!(p.validate().is_err());
        let mut p = plan_1d(Family::Derivative, vec![2.0], vec![1.2]);
        assert!(p.validate().is_err());
        p.family = Family::Mixed;
        assert!(p.validate().is_ok());
        p.domain = DomainSpec::new(3, 1.0, 60.0).unwrap();
        p.require_local_theory = true;
        p.q_grid = vec![3.5];
        assert!(p.validate().is_err());
        assert_eq!(p.horizon(), 30.0);
    }

    #[test]
    fn derivative_membership_in_3d() {
        let mut plan = plan_1d(Family::Derivative, vec![], vec![1.2, 4.0 / 3.0, 1.6]);
        plan.domain = DomainSpec::new(3, 1.0, 41.0).unwrap();
        plan.j_max = 400;
        plan.u1_profile = Profile::bump(11.0, 8.0);
        plan.amplitudes = vec![0.5];
        plan.max_steps = 50;
        let r = run_sweep(&plan, 2).unwrap();
        let member: Vec<bool> = r.points.iter().map(|p| p.theory_member).collect();
        assert_eq!(member, vec![true, true, false]);
        assert!(r.points[1].theory_boundary && !r.points[0].theory_boundary);
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn blowup_inside_region_agrees() {
        let plan = plan_1d(Family::Mixed, vec![2.0], vec![1.2]);
        let r = run_sweep(&plan, 1).unwrap();
        assert_eq!(r.points[0].classification, Classification::TheoryConsistentBlowup);
        assert_eq!(r.agreement_rate(), Some(1.0));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let plan = plan_1d(Family::Mixed, vec![2.0, 2.8], vec![1.2, 1.8]);
        let a = run_sweep(&plan, 1).unwrap();
        let b = run_sweep(&plan, 4).unwrap();
        assert_eq!(a, b);
        let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = phase_diagram_export(&a, da.path()).unwrap();
        let fb = phase_diagram_export(&b, db.path()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let text = std::fs::read_to_string(&fa[0]).unwrap();
        assert_eq!(text.lines().count(), 2 + a.rows.len());
    }

    #[test]
    fn empty_export_is_header_only() {
        let r = run_sweep(&plan_1d(Family::Mixed, vec![], vec![]), 1).unwrap();
        let d = tempfile::tempdir().unwrap();
        let files = phase_diagram_export(&r, d.path()).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
