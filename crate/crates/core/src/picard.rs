//! Contraction-mapping construction of mild solutions.
//!
//! Iterate `m + 1` solves the forced linear problem with `F = f(u^{(m)}, u^{(m)}_t)`
//! frozen per step (piecewise constant in time), so the discrete fixed point is
//! exactly the explicit semilinear march. Distances are measured in the X(T)
//! norm `max_k ‖u_k‖_{H¹} + ‖v_k‖_{H¹}` over every step.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::domain_grid::{h1_norm_unchecked, GridField};
use crate::error::{Result, SdwError};
use crate::evolver::{evolve, Forcing, NoForcing, SolverConfig, State};
use crate::nonlinearity::{eval_f, NonlinKind};

/// Absolute floor added to the relative convergence test.
pub const ABS_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    /// Horizon T.
    pub horizon: f64,
    /// Ball radius R; `None` takes twice the X(T) norm of the homogeneous trajectory.
    #[serde(default)]
    pub radius: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SdwError::config("picard horizon must be positive"));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(SdwError::config("picard radius must be positive"));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(SdwError::config("picard tol must lie in (0, 1e-2]"));
        }
        if self.max_iter < 2 {
            return Err(SdwError::config("picard max_iter must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterateTrace {
    pub radius: f64,
    /// X(T) norm of iterate m, starting with the homogeneous trajectory.
    pub xt_norms: Vec<f64>,
    /// `distances[m-1]` is the X(T) distance between iterates m and m−1.
    pub distances: Vec<f64>,
    /// `d_m / d_{m−1}` for m ≥ 2.
    pub ratios: Vec<f64>,
}

impl IterateTrace {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().fold(0.0, |m: f64, r| m.max(*r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PicardOutcome {
    Converged,
    /// `max_iter` reached without meeting the tolerance.
    NotConverged,
    /// An iterate left the ball of radius 2R.
    LeftBall,
    /// An iterate overflowed.
    BlowupSuspected,
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub outcome: PicardOutcome,
    pub iterations: usize,
    pub trajectory: Vec<State>,
    pub trace: IterateTrace,
}

impl PicardResult {
    pub fn converged(&self) -> bool {
        self.outcome == PicardOutcome::Converged
    }
}

/// `max_k ‖u_k‖_{H¹} + ‖v_k‖_{H¹}`.
pub fn xt_norm(trajectory: &[State]) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(SdwError::usage("empty trajectory"));
    }
    Ok(trajectory.iter().map(State::h1_pair_norm).fold(0.0, f64::max))
}

pub fn xt_distance(a: &[State], b: &[State]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(SdwError::usage("trajectories differ in length"));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| h1_norm_unchecked(&x.u.sub(&y.u)) + h1_norm_unchecked(&x.v.sub(&y.v)))
        .fold(0.0, f64::max))
}

struct FrozenForcing<'a> {
    kind: NonlinKind,
    previous: &'a [State],
}

impl Forcing for FrozenForcing<'_> {
    fn for_step(&mut self, k: usize, _: &State, _: f64, _: f64) -> Option<GridField> {
        let s = &self.previous[k];
        Some(eval_f(&self.kind, &s.u, &s.v))
    }
    fn at_record(&mut self, k: usize, state: &State) -> Option<GridField> {
        self.for_step(k, state, 0.0, 0.0)
    }
}

fn trajectory(u0: &GridField, u1: &GridField, forcing: &mut dyn Forcing, cfg: &SolverConfig) -> Result<Vec<State>> {
    Ok(evolve(u0, u1, forcing, cfg, true)?.states)
}

pub fn picard_iterate(
    u0: &GridField,
    u1: &GridField,
    kind: &NonlinKind,
    pcfg: &PicardConfig,
    cfg: &SolverConfig,
) -> Result<PicardResult> {
    pcfg.validate()?;
    kind.check_for_dimension(u0.grid.n())?;
    let cfg = SolverConfig {
        t_end: pcfg.horizon,
        store_every: 1,
        ..*cfg
    };
    let mut current = trajectory(u0, u1, &mut NoForcing, &cfg)?;
    let n0 = xt_norm(&current)?;
    let radius = pcfg.radius.unwrap_or((2.0 * n0).max(f64::MIN_POSITIVE));
    let mut trace = IterateTrace {
        radius,
        xt_norms: vec![n0],
        ..Default::default()
    };
    let mut outcome = PicardOutcome::NotConverged;
    let mut iterations = 0;
    for m in 1..=pcfg.max_iter {
        let next = trajectory(
            u0,
            u1,
            &mut FrozenForcing {
                kind: *kind,
                previous: &current,
            },
            &cfg,
        )?;
        iterations = m;
        let norm = xt_norm(&next)?;
        if !norm.is_finite() || next.iter().any(State::overflowed) {
            outcome = PicardOutcome::BlowupSuspected;
            current = next;
            break;
        }
        let d = xt_distance(&next, &current)?;
        trace.xt_norms.push(norm);
        if let Some(&prev) = trace.distances.last() {
            if prev > 0.0 {
                trace.ratios.push(d / prev);
            }
        }
        trace.distances.push(d);
        debug!("picard iterate {m}: norm {norm:e}, distance {d:e}");
        current = next;
        if norm > 2.0 * radius {
            outcome = PicardOutcome::LeftBall;
            break;
        }
        if d <= pcfg.tol * norm + ABS_FLOOR {
            outcome = PicardOutcome::Converged;
            break;
        }
    }
    Ok(PicardResult {
        outcome,
        iterations,
        trajectory: current,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonProbe {
    pub horizon: f64,
    pub contracted: bool,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonReport {
    /// Largest probed T that contracted; 0 when none did.
    pub horizon: f64,
    /// Set when even the smallest probe failed.
    pub degenerate: bool,
    pub probes: Vec<HorizonProbe>,
    /// Trace of the run at `horizon`.
    pub trace: IterateTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSearch {
    pub tol: f64,
    pub max_iter: usize,
    pub bisections: usize,
}

impl Default for HorizonSearch {
    fn default() -> Self {
        HorizonSearch {
            tol: 1e-8,
            max_iter: 60,
            bisections: 10,
        }
    }
}

/// Bisection on T in `(0, cfg.t_end]` for the largest horizon whose iteration
/// converges with every measured ratio at most ½. Probes sit on the dyadic
/// grid of `t_end`, so runs with different data compare probe by probe.
pub fn find_contraction_horizon(
    u0: &GridField,
    u1: &GridField,
    kind: &NonlinKind,
    cfg: &SolverConfig,
    search: &HorizonSearch,
) -> Result<HorizonReport> {
    let mut probes = Vec::new();
    let mut probe = |t: f64| -> Result<(bool, IterateTrace)> {
        let pcfg = PicardConfig {
            horizon: t,
            radius: None,
            tol: search.tol,
            max_iter: search.max_iter,
        };
        let res = picard_iterate(u0, u1, kind, &pcfg, cfg)?;
        let max_ratio = res.trace.max_ratio();
        let ok = res.converged() && max_ratio <= 0.5;
        probes.push(HorizonProbe {
            horizon: t,
            contracted: ok,
            max_ratio,
        });
        Ok((ok, res.trace))
    };
    let t_max = cfg.t_end;
    if !(t_max > 0.0) {
        return Err(SdwError::config("horizon search needs t_end > 0"));
    }
    let (ok, trace) = probe(t_max)?;
    let (mut lo, mut hi) = (0.0, t_max);
    let mut best_trace = if ok { Some(trace) } else { None };
    if !ok {
        for _ in 0..search.bisections {
            let mid = 0.5 * (lo + hi);
            let (ok, trace) = probe(mid)?;
            if ok {
                lo = mid;
                best_trace = Some(trace);
            } else {
                hi = mid;
            }
        }
    } else {
        lo = t_max;
    }
    Ok(HorizonReport {
        horizon: lo,
        degenerate: lo == 0.0,
        trace: best_trace.unwrap_or_default(),
        probes,
    })
}
