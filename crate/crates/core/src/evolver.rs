//! Theta-method time integration for `u_tt − Δu − Δu_t = F`.
//!
//! Writing `v = u_t` and `w = v^{new}`, one step solves
//!
//! ```text
//! (I − (dt θ + dt² θ²) Δ_h) w = v + dt Δ_h u + (dt² θ(1−θ) + dt(1−θ)) Δ_h v + dt F
//! u^{new} = u + dt (θ w + (1−θ) v)
//! ```
//!
//! which is the theta rule applied to both `Δu` and `Δu_t`. The energy
//! `½(‖v‖² + ‖∂_r u‖²)` is non-increasing for `θ ≥ ½` when `F = 0`. The
//! nonlinearity is always explicit, frozen at the start of the step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{record, EnergyAccumulator, EnergyTimeSeries};
use crate::domain_grid::{h1_norm_unchecked, l2_norm_sq_unchecked, GridField, RadialGrid};
use crate::error::{Result, SdwError};
use crate::nonlinearity::{eval_f, NonlinKind};
use crate::spatial_ops::{LaplacianStencil, TridiagonalFactors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub t_end: f64,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
}

fn default_theta() -> f64 {
    0.5
}

fn default_store_every() -> usize {
    1
}

impl SolverConfig {
    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SdwError::config(format!("dt = {} must be positive", self.dt)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(SdwError::config(format!("theta = {} must lie in [0.5, 1]", self.theta)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(SdwError::config(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        if self.store_every == 0 {
            return Err(SdwError::config("store_every must be >= 1"));
        }
        if self.dt > grid.dx * (1.0 + 1e-12) {
            return Err(SdwError::config(format!(
                "dt = {} exceeds the grid spacing {}",
                self.dt, grid.dx
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t` and the uniform step that lands on it exactly (`≤ dt`).
    pub fn steps_to(&self, t: f64) -> (usize, f64) {
        if t <= 0.0 {
            return (0, self.dt);
        }
        let n = (t / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, t / n as f64)
    }
}

/// `(u, u_t)` at time `t`; boundary nodes are zero.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: GridField,
    pub v: GridField,
}

impl State {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        State {
            t: 0.0,
            u: GridField::zeros(grid),
            v: GridField::zeros(grid),
        }
    }

    /// Initial state at `t = 0`; boundary values of the data are replaced by 0.
    pub fn initial(u0: &GridField, u1: &GridField) -> Result<Self> {
        if !Arc::ptr_eq(&u0.grid, &u1.grid) && u0.grid.nodes != u1.grid.nodes {
            return Err(SdwError::usage("initial data live on different grids"));
        }
        u0.check_finite()?;
        u1.check_finite()?;
        let mut u = u0.clone();
        let mut v = u1.clone();
        v.grid = Arc::clone(&u.grid);
        u.enforce_dirichlet();
        v.enforce_dirichlet();
        Ok(State { t: 0.0, u, v })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u.grid
    }

    pub fn overflowed(&self) -> bool {
        self.u.overflowed || self.v.overflowed
    }

    /// `‖u‖_{H¹} + ‖v‖_{H¹}`; infinite once a value is non-finite.
    pub fn h1_pair_norm(&self) -> f64 {
        let n = h1_norm_unchecked(&self.u) + h1_norm_unchecked(&self.v);
        if n.is_nan() {
            f64::INFINITY
        } else {
            n
        }
    }

    pub fn l2_u(&self) -> f64 {
        l2_norm_sq_unchecked(&self.u).sqrt()
    }
}

/// Source of the right-hand side `F`.
pub trait Forcing {
    /// Forcing applied by the step from `state.t` to `state.t + dt`; `None` is zero.
    fn for_step(&mut self, k: usize, state: &State, dt: f64, theta: f64) -> Option<GridField>;
    /// Forcing at the stored point `state.t`, used only for diagnostics.
    fn at_record(&mut self, k: usize, state: &State) -> Option<GridField>;
}

pub struct NoForcing;

impl Forcing for NoForcing {
    fn for_step(&mut self, _: usize, _: &State, _: f64, _: f64) -> Option<GridField> {
        None
    }
    fn at_record(&mut self, _: usize, _: &State) -> Option<GridField> {
        None
    }
}

/// `F(t, ·)` given by a sampler; a step uses `F(t + θ dt)`.
pub struct TimeForcing<S>(pub S);

impl<S: FnMut(f64) -> GridField> Forcing for TimeForcing<S> {
    fn for_step(&mut self, _: usize, state: &State, dt: f64, theta: f64) -> Option<GridField> {
        Some((self.0)(state.t + theta * dt))
    }
    fn at_record(&mut self, _: usize, state: &State) -> Option<GridField> {
        Some((self.0)(state.t))
    }
}

/// `F = f(u, u_t)` frozen at the start of each step.
pub struct NonlinearForcing(pub NonlinKind);

impl Forcing for NonlinearForcing {
    fn for_step(&mut self, _: usize, state: &State, _: f64, _: f64) -> Option<GridField> {
        match self.0 {
            NonlinKind::Linear => None,
            kind => Some(eval_f(&kind, &state.u, &state.v)),
        }
    }
    fn at_record(&mut self, k: usize, state: &State) -> Option<GridField> {
        self.for_step(k, state, 0.0, 0.0)
    }
}

/// Prefactored implicit step for a fixed `(dt, θ)`.
#[derive(Debug, Clone)]
pub struct LinearStepper {
    stencil: LaplacianStencil,
    factors: TridiagonalFactors,
    pub dt: f64,
    pub theta: f64,
}

impl LinearStepper {
    pub fn new(grid: &Arc<RadialGrid>, dt: f64, theta: f64) -> Result<Self> {
        if !(dt > 0.0) || !(0.5..=1.0).contains(&theta) {
            return Err(SdwError::usage(format!(
                "invalid step parameters dt={dt}, theta={theta}"
            )));
        }
        let stencil = LaplacianStencil::new(grid);
        let factors = stencil
            .shifted_identity(dt * theta + dt * dt * theta * theta)
            .factor()?;
        Ok(LinearStepper {
            stencil,
            factors,
            dt,
            theta,
        })
    }

    pub fn step(&self, s: &State, forcing: Option<&GridField>) -> State {
        let (dt, th) = (self.dt, self.theta);
        let lu = self.stencil.apply_unchecked(&s.u);
        let lv = self.stencil.apply_unchecked(&s.v);
        let cv = dt * dt * th * (1.0 - th) + dt * (1.0 - th);
        let last = s.u.values.len() - 1;
        let mut w: Vec<f64> = (0..=last)
            .map(|j| s.v.values[j] + dt * lu.values[j] + cv * lv.values[j])
            .collect();
        if let Some(f) = forcing {
            for (wj, fj) in w.iter_mut().zip(&f.values) {
                *wj += dt * fj;
            }
        }
        w[0] = 0.0;
        w[last] = 0.0;
        self.factors.solve_in_place(&mut w);
        let u: Vec<f64> = (0..=last)
            .map(|j| s.u.values[j] + dt * (th * w[j] + (1.0 - th) * s.v.values[j]))
            .collect();
        let flagged = s.overflowed() || forcing.is_some_and(|f| f.overflowed);
        let overflowed = flagged || !u.iter().chain(&w).all(|x| x.is_finite());
        let grid = s.grid();
        State {
            t: s.t + dt,
            u: GridField {
                grid: Arc::clone(grid),
                values: u,
                overflowed,
            },
            v: GridField {
                grid: Arc::clone(grid),
                values: w,
                overflowed,
            },
        }
    }
}

/// One step of the forced linear problem with `F` already sampled.
pub fn step_linear(state: &State, forcing: Option<&GridField>, cfg: &SolverConfig) -> Result<State> {
    Ok(LinearStepper::new(state.grid(), cfg.dt, cfg.theta)?.step(state, forcing))
}

pub fn step_semilinear(state: &State, kind: &NonlinKind, cfg: &SolverConfig) -> Result<State> {
    let f = NonlinearForcing(*kind).for_step(0, state, cfg.dt, cfg.theta);
    step_linear(state, f.as_ref(), cfg)
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub final_state: State,
    /// Every `store_every`-th state plus the final one, when requested.
    pub states: Vec<State>,
    pub series: EnergyTimeSeries,
    pub dt: f64,
    pub steps: usize,
    /// Set when the march stopped at a non-finite state before `t_end`.
    pub stopped_early: bool,
}

/// Marches from `(u0, u1)` to `cfg.t_end`, recording norms every `store_every` steps.
pub fn evolve(
    u0: &GridField,
    u1: &GridField,
    forcing: &mut dyn Forcing,
    cfg: &SolverConfig,
    keep_states: bool,
) -> Result<Evolution> {
    let mut state = State::initial(u0, u1)?;
    cfg.validate(state.grid())?;
    let (n_steps, dt) = cfg.steps_to(cfg.t_end);
    let stepper = LinearStepper::new(state.grid(), dt, cfg.theta)?;
    let mut acc = EnergyAccumulator::default();
    let mut series = EnergyTimeSeries::default();
    let mut states = Vec::new();
    let mut stopped_early = false;
    let mut k = 0;
    loop {
        let stored = k % cfg.store_every == 0 || k == n_steps;
        let f_rec = forcing.at_record(k, &state);
        let rec = record(&state, f_rec.as_ref(), &mut acc);
        if stored {
            series.push(rec)?;
            if keep_states {
                states.push(state.clone());
            }
        }
        if k == n_steps {
            break;
        }
        if state.overflowed() || !(state.u.is_finite() && state.v.is_finite()) {
            stopped_early = true;
            break;
        }
        let f = forcing.for_step(k, &state, dt, cfg.theta);
        let mut next = stepper.step(&state, f.as_ref());
        k += 1;
        if k == n_steps {
            next.t = cfg.t_end;
        }
        state = next;
    }
    Ok(Evolution {
        final_state: state,
        states,
        series,
        dt,
        steps: k,
        stopped_early,
    })
}

fn march(stepper: &LinearStepper, mut s: State, steps: usize) -> State {
    for _ in 0..steps {
        s = stepper.step(&s, None);
    }
    s
}

/// `R(t)(u₀, u₁)`: the homogeneous solution at time `t`.
pub fn propagate_r(u0: &GridField, u1: &GridField, t: f64, cfg: &SolverConfig) -> Result<State> {
    let s = State::initial(u0, u1)?;
    let (n, dt) = cfg.steps_to(t);
    if n == 0 {
        return Ok(s);
    }
    let mut out = march(&LinearStepper::new(s.grid(), dt, cfg.theta)?, s, n);
    out.t = t;
    Ok(out)
}

/// `S(t)g = R(t)(0, g)`.
pub fn propagate_s(g: &GridField, t: f64, cfg: &SolverConfig) -> Result<State> {
    propagate_r(&GridField::zeros(&g.grid), g, t, cfg)
}

/// `R(t)(u₀, u₁) + Σ_m dt S(t − s_m) F(s_m)` over the left endpoints `s_m = m dt`.
///
/// Each summand is propagated separately, so the cost is quadratic in the
/// number of steps.
pub fn duhamel_solve(
    u0: &GridField,
    u1: &GridField,
    mut forcing: impl FnMut(f64) -> GridField,
    t: f64,
    cfg: &SolverConfig,
) -> Result<State> {
    let mut total = propagate_r(u0, u1, t, cfg)?;
    let (n, dt) = cfg.steps_to(t);
    if n == 0 {
        return Ok(total);
    }
    let stepper = LinearStepper::new(total.grid(), dt, cfg.theta)?;
    for m in 0..n {
        let mut f = forcing(m as f64 * dt);
        f.check_finite()?;
        f.enforce_dirichlet();
        let start = State {
            t: 0.0,
            u: GridField::zeros(total.grid()),
            v: f,
        };
        let piece = march(&stepper, start, n - m);
        for j in 0..total.u.values.len() {
            total.u.values[j] += dt * piece.u.values[j];
            total.v.values[j] += dt * piece.v.values[j];
        }
    }
    Ok(total)
}

/// Relative L² defect of `R(t)(u₀,u₁) = S(t)(−Δ_h u₀ + u₁) + ∂_t S(t)u₀` in the
/// displacement, with `∂_t` a forward difference over one solver step.
pub fn rs_relation_defect(u0: &GridField, u1: &GridField, t: f64, cfg: &SolverConfig) -> Result<f64> {
    let r = propagate_r(u0, u1, t, cfg)?;
    let (n, dt) = cfg.steps_to(t);
    let stencil = LaplacianStencil::new(&u0.grid);
    let g = u1.sub(&stencil.apply(u0)?);
    let stepper = LinearStepper::new(&u0.grid, dt, cfg.theta)?;
    let s_g = march(&stepper, State::initial(&GridField::zeros(&u0.grid), &g)?, n);
    let zero = GridField::zeros(&u0.grid);
    let s_u0 = march(&stepper, State::initial(&zero, u0)?, n);
    let s_u0_next = stepper.step(&s_u0, None);
    let rhs = s_g.u.add(&s_u0_next.u.sub(&s_u0.u).scaled(1.0 / dt));
    let diff = r.u.sub(&rhs);
    let scale = l2_norm_sq_unchecked(&r.u).sqrt().max(crate::diagnostics::RATIO_FLOOR);
    Ok(l2_norm_sq_unchecked(&diff).sqrt() / scale)
}
