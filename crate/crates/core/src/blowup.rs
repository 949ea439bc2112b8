//! Norm-escape detection of finite-time blow-up.
//!
//! Only escape of `N(t) = ‖u‖_{H¹} + ‖u_t‖_{H¹}` past a threshold is
//! observable. On escape the last tenth of the interval is rerun at a finer
//! step, and `T_max` is extrapolated from the ansatz `N ~ (T − t)^{−κ}`,
//! i.e. `N^{−1/κ}` linear in `t`. A `GlobalUpTo` verdict only says that no
//! escape happened within the budget.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::data::sign_functional;
use crate::domain_grid::GridField;
use crate::error::Result;
use crate::evolver::{LinearStepper, SolverConfig, State};
use crate::nonlinearity::{eval_f, NonlinKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Escape threshold as a multiple of the initial norm.
    pub blow_factor: f64,
    /// Fraction of `[0, t_escape]` rerun at the finer step.
    pub refine_fraction: f64,
    /// Step divisor of the rerun.
    pub refine_divisor: usize,
    /// Relative agreement of the two `t_est` values required for confirmation.
    pub confirm_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            blow_factor: 1e6,
            refine_fraction: 0.1,
            refine_divisor: 4,
            confirm_tol: 0.05,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.blow_factor > 1.0
            && self.refine_fraction > 0.0
            && self.refine_fraction < 1.0
            && self.refine_divisor >= 1
            && self.confirm_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::SdwError::config("invalid blow-up thresholds"))
        }
    }

    /// `blow_factor × N₀`, or `blow_factor` itself for zero data.
    pub fn m_blow(&self, n0: f64) -> f64 {
        if n0 > 0.0 {
            self.blow_factor * n0
        } else {
            self.blow_factor
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum VerdictTag {
    /// No escape observed up to this time.
    GlobalUpTo { t_end: f64 },
    BlowupAt {
        t_est: f64,
        t_last_stable: f64,
        /// Fitted growth exponent κ; an observation, not a claim.
        kappa: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub tag: VerdictTag,
    pub peak_norm: f64,
    pub refinement_confirmed: bool,
    /// `∫ φ₀ u₁`
    pub sign_functional: f64,
}

impl Verdict {
    pub fn is_blowup(&self) -> bool {
        matches!(self.tag, VerdictTag::BlowupAt { .. })
    }

    pub fn t_est(&self) -> Option<f64> {
        match self.tag {
            VerdictTag::BlowupAt { t_est, .. } => Some(t_est),
            VerdictTag::GlobalUpTo { .. } => None,
        }
    }

    /// `"global"`, `"blowup_suspected"` or `"blowup_confirmed"`.
    pub fn status(&self) -> &'static str {
        match (self.tag, self.refinement_confirmed) {
            (VerdictTag::GlobalUpTo { .. }, _) => "global",
            (VerdictTag::BlowupAt { .. }, false) => "blowup_suspected",
            (VerdictTag::BlowupAt { .. }, true) => "blowup_confirmed",
        }
    }
}

/// Outcome of one march toward a threshold.
struct March {
    /// `(t, N)` for every finite state below the threshold.
    history: Vec<(f64, f64)>,
    /// Time of the first state at or above the threshold, or with an overflow.
    escape: Option<f64>,
    peak: f64,
    /// Thinned snapshots `(t, state)`; spacing at most 1/256 of the elapsed time.
    snapshots: Vec<State>,
}

const SNAPSHOT_CAP: usize = 512;

fn march(start: State, kind: &NonlinKind, dt: f64, theta: f64, t_stop: f64, m_blow: f64) -> Result<March> {
    let stepper = LinearStepper::new(start.grid(), dt, theta)?;
    let n_steps = ((t_stop - start.t) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut state = start;
    let n_start = state.h1_pair_norm();
    let mut out = March {
        history: vec![(state.t, n_start)],
        escape: None,
        peak: n_start,
        snapshots: vec![state.clone()],
    };
    let mut stride = 1;
    for k in 1..=n_steps {
        let f = match kind {
            NonlinKind::Linear => None,
            kind => Some(eval_f(kind, &state.u, &state.v)),
        };
        state = stepper.step(&state, f.as_ref());
        let norm = state.h1_pair_norm();
        if state.overflowed() || !norm.is_finite() || norm >= m_blow {
            if norm.is_finite() {
                out.peak = out.peak.max(norm);
            }
            out.escape = Some(state.t);
            break;
        }
        out.peak = out.peak.max(norm);
        out.history.push((state.t, norm));
        if k % stride == 0 {
            out.snapshots.push(state.clone());
            if out.snapshots.len() > SNAPSHOT_CAP {
                let mut i = 0;
                out.snapshots.retain(|_| {
                    i += 1;
                    i % 2 == 1
                });
                stride *= 2;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub kappa: f64,
    pub t_est: f64,
    pub r_squared: f64,
    pub points: usize,
}

const MIN_FIT_POINTS: usize = 6;
const KAPPA_RANGE: (f64, f64) = (0.05, 20.0);

fn linear_fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let r2 = if syy > 0.0 { sty * sty / (stt * syy) } else { 0.0 };
    (intercept, slope, r2)
}

/// Fits `N^{−1/κ} = a + b t` over the last decade of growth, κ chosen by R².
pub fn fit_growth(history: &[(f64, f64)]) -> Option<GrowthFit> {
    let n_end = history.last()?.1;
    let mut start = history
        .iter()
        .rposition(|&(_, n)| n < n_end / 10.0)
        .map_or(0, |i| i + 1);
    if history.len() - start < MIN_FIT_POINTS {
        start = history.len().saturating_sub(MIN_FIT_POINTS);
    }
    let window = &history[start..];
    if window.len() < 3 || !(window[0].1 > 0.0) {
        return None;
    }
    let ts: Vec<f64> = window.iter().map(|p| p.0).collect();
    let ln_n: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let eval = |kappa: f64| {
        let ys: Vec<f64> = ln_n.iter().map(|l| (-l / kappa).exp()).collect();
        linear_fit(&ts, &ys)
    };
    // coarse log-spaced scan, then golden-section refinement around the best
    let (lo, hi) = (KAPPA_RANGE.0.ln(), KAPPA_RANGE.1.ln());
    let m = 200;
    let grid: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
    let best = (0..=m).max_by(|&a, &b| eval(grid[a].exp()).2.total_cmp(&eval(grid[b].exp()).2))?;
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(m)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eval(c.exp()).2 >= eval(d.exp()).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let kappa = (0.5 * (a + b)).exp();
    let (intercept, slope, r_squared) = eval(kappa);
    if !(slope < 0.0) {
        return None;
    }
    Some(GrowthFit {
        kappa,
        t_est: -intercept / slope,
        r_squared,
        points: window.len(),
    })
}

pub fn detect(
    u0: &GridField,
    u1: &GridField,
    kind: &NonlinKind,
    cfg: &SolverConfig,
    thresholds: &Thresholds,
) -> Result<Verdict> {
    thresholds.validate()?;
    let start = State::initial(u0, u1)?;
    cfg.validate(start.grid())?;
    let sign = sign_functional(&start.v)?;
    let (_, dt) = cfg.steps_to(cfg.t_end);
    let n0 = start.h1_pair_norm();
    let m_blow = thresholds.m_blow(n0);
    let coarse = march(start, kind, dt, cfg.theta, cfg.t_end, m_blow)?;
    let Some(t_escape) = coarse.escape else {
        return Ok(Verdict {
            tag: VerdictTag::GlobalUpTo { t_end: cfg.t_end },
            peak_norm: coarse.peak,
            refinement_confirmed: false,
            sign_functional: sign,
        });
    };
    let t_from = (1.0 - thresholds.refine_fraction) * t_escape;
    let snap = coarse
        .snapshots
        .iter()
        .rev()
        .find(|s| s.t <= t_from)
        .unwrap_or(&coarse.snapshots[0])
        .clone();
    let fine_dt = dt / thresholds.refine_divisor as f64;
    // the rerun may cross a little later than the coarse march
    let t_stop = t_escape + (t_escape - snap.t);
    let fine = march(snap, kind, fine_dt, cfg.theta, t_stop, m_blow)?;
    let t_last_stable = fine.history.last().map_or(t_from, |p| p.0);
    let coarse_fit = fit_growth(&coarse.history);
    let fine_fit = fit_growth(&fine.history);
    debug!("escape at {t_escape}, coarse fit {coarse_fit:?}, fine fit {fine_fit:?}");
    let fit = fine_fit.or(coarse_fit);
    let t_est = fit.map_or(t_last_stable, |f| f.t_est.max(t_last_stable));
    let kappa = fit.map_or(f64::NAN, |f| f.kappa);
    let refinement_confirmed = match (coarse_fit, fine_fit, fine.escape) {
        (Some(c), Some(f), Some(_)) => {
            let tc = c.t_est.max(t_escape - dt);
            let tf = f.t_est.max(t_last_stable);
            (tc - tf).abs() <= thresholds.confirm_tol * tf
        }
        _ => false,
    };
    Ok(Verdict {
        tag: VerdictTag::BlowupAt {
            t_est,
            t_last_stable,
            kappa,
        },
        peak_norm: coarse.peak.max(fine.peak),
        refinement_confirmed,
        sign_functional: sign,
    })
}

/// `detect` for `(A·u₀, A·u₁)` at each amplitude `A`, in input order.
pub fn amplitude_threshold_scan(
    u0: &GridField,
    u1: &GridField,
    kind: &NonlinKind,
    cfg: &SolverConfig,
    thresholds: &Thresholds,
    amplitudes: &[f64],
) -> Result<Vec<(f64, Verdict)>> {
    amplitudes
        .iter()
        .map(|&a| Ok((a, detect(&u0.scaled(a), &u1.scaled(a), kind, cfg, thresholds)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Profile;
    use crate::domain_grid::{build_grid, DomainSpec};

    #[test]
    fn fit_recovers_synthetic_rate() {
        for &(kappa, t_max) in &[(0.5, 3.0), (2.0, 7.5), (5.0, 1.0)] {
            let hist: Vec<(f64, f64)> = (0..400)
                .map(|i| {
                    let t = t_max * i as f64 / 400.0;
                    (t, (t_max - t).powf(-kappa))
                })
                .collect();
            let fit = fit_growth(&hist).unwrap();
            assert!((fit.kappa - kappa).abs() < 1e-3 * kappa, "{fit:?}");
            assert!((fit.t_est - t_max).abs() < 1e-6, "{fit:?}");
        }
        assert!(fit_growth(&[]).is_none());
    }

    #[test]
    fn zero_data_is_global() {
        let g = build_grid(DomainSpec::new(1, 0.0, 10.0).unwrap(), 50).unwrap();
        let z = GridField::zeros(&g);
        let cfg = SolverConfig {
            dt: 0.1,
            theta: 0.5,
            t_end: 5.0,
            store_every: 1,
        };
        let v = detect(
            &z,
            &z,
            &NonlinKind::DerivativeOnly { q: 1.2 },
            &cfg,
            &Thresholds::default(),
        )
        .unwrap();
        assert_eq!(v.tag, VerdictTag::GlobalUpTo { t_end: 5.0 });
        assert_eq!(v.peak_norm, 0.0);
        assert_eq!(v.status(), "global");
    }

    #[test]
    fn linear_problem_never_escapes() {
        let g = build_grid(DomainSpec::new(1, 0.0, 40.0).unwrap(), 400).unwrap();
        let u1 = Profile::bump(10.0, 4.0).sample(&g, 1e3);
        let cfg = SolverConfig {
            dt: 0.1,
            theta: 0.5,
            t_end: 20.0,
            store_every: 1,
        };
        let v = detect(&u1, &u1, &NonlinKind::Linear, &cfg, &Thresholds::default()).unwrap();
        assert!(!v.is_blowup());
        assert!(v.sign_functional > 0.0);
    }

    #[test]
    fn empty_scan() {
        let g = build_grid(DomainSpec::new(1, 0.0, 10.0).unwrap(), 50).unwrap();
        let z = GridField::zeros(&g);
        let cfg = SolverConfig {
            dt: 0.1,
            theta: 0.5,
            t_end: 1.0,
            store_every: 1,
        };
        let kind = NonlinKind::DerivativeOnly { q: 2.0 };
        assert!(
            amplitude_threshold_scan(&z, &z, &kind, &cfg, &Thresholds::default(), &[])
                .unwrap()
                .is_empty()
        );
    }

    fn half_line_run(amplitude: f64, kind: NonlinKind) -> Verdict {
        let g = build_grid(DomainSpec::new(1, 0.0, 60.0).unwrap(), 600).unwrap();
        let u1 = Profile::bump(20.0, 8.0).sample(&g, amplitude);
        let cfg = SolverConfig {
            dt: 0.01,
            theta: 0.5,
            t_end: 30.0,
            store_every: 1,
        };
        detect(&GridField::zeros(&g), &u1, &kind, &cfg, &Thresholds::default()).unwrap()
    }

    #[test]
    fn derivative_nonlinearity_escapes_in_1d() {
        let kind = NonlinKind::DerivativeOnly { q: 1.2 };
        let v1 = half_line_run(1.0, kind);
        let v10 = half_line_run(10.0, kind);
        assert!(v1.is_blowup() && v10.is_blowup());
        assert!(v1.sign_functional > 0.0);
        assert!(v10.t_est().unwrap() < v1.t_est().unwrap());
        if let VerdictTag::BlowupAt {
            t_est,
            t_last_stable,
            kappa,
        } = v1.tag
        {
            assert!(t_est >= t_last_stable && kappa > 0.0);
        }
        assert_eq!(v1.status(), "blowup_confirmed");
    }

    #[test]
    fn scan_incidence_is_monotone() {
        let g = build_grid(DomainSpec::new(1, 0.0, 60.0).unwrap(), 600).unwrap();
        let u1 = Profile::bump(20.0, 8.0).sample(&g, 1.0);
        let z = GridField::zeros(&g);
        let cfg = SolverConfig {
            dt: 0.05,
            theta: 0.5,
            t_end: 20.0,
            store_every: 1,
        };
        let kind = NonlinKind::DerivativeOnly { q: 2.0 };
        let table =
            amplitude_threshold_scan(&z, &u1, &kind, &cfg, &Thresholds::default(), &[0.01, 0.5, 1.0, 2.0]).unwrap();
        let hits: Vec<bool> = table.iter().map(|(_, v)| v.is_blowup()).collect();
        assert!(!hits[0]);
        assert!(hits.windows(2).all(|w| w[1] >= w[0]), "{hits:?}");
    }
}
