//! Cutoffs, the composite test function `φ = φ₀ Φ_T^ℓ η_T^k`, the weak-form
//! functionals and their large-T scaling.
//!
//! `η` and `Φ` are quintic smoothstep bridges, so every derivative used here
//! is closed form. Spatial scaling is `r/T` for n ≥ 2 and `x/T^α` on the
//! half-line.

use std::sync::Arc;

use serde::Serialize;

use crate::data::{smoothstep, smoothstep_d1, smoothstep_d2};
use crate::domain_grid::{integrate_unchecked, GridField, RadialGrid};
use crate::error::{Result, SdwError};
use crate::evolver::{Forcing, State};
use crate::harmonic_weight::{HarmonicProfile, HarmonicWeight};
use crate::nonlinearity::NonlinKind;

/// `η(s)`: 1 on `[0, ½]`, `σ(2(1 − s))` on `[½, 1]`, 0 beyond.
pub fn eta(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        smoothstep(2.0 * (1.0 - s))
    }
}

pub fn eta_d1(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        0.0
    } else {
        -2.0 * smoothstep_d1(2.0 * (1.0 - s))
    }
}

pub fn eta_d2(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        0.0
    } else {
        4.0 * smoothstep_d2(2.0 * (1.0 - s))
    }
}

/// `Φ(ρ)`: 1 on `[0, 1]`, `σ(2 − ρ)` on `[1, 2]`, 0 beyond.
pub fn cutoff(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        smoothstep(2.0 - rho)
    }
}

pub fn cutoff_d1(rho: f64) -> f64 {
    if rho <= 1.0 || rho >= 2.0 {
        0.0
    } else {
        -smoothstep_d1(2.0 - rho)
    }
}

pub fn cutoff_d2(rho: f64) -> f64 {
    if rho <= 1.0 || rho >= 2.0 {
        0.0
    } else {
        smoothstep_d2(2.0 - rho)
    }
}

/// `2 ⌈2 max(p′, q′)⌉` over the exponents present in `kind` (2 when none is).
pub fn default_power(kind: &NonlinKind) -> usize {
    let conj = kind.p().into_iter().chain(kind.q()).map(conjugate).fold(0.0, f64::max);
    (2.0 * (2.0 * conj).ceil()).max(2.0) as usize
}

pub fn conjugate(r: f64) -> f64 {
    r / (r - 1.0)
}

/// Sampled maxima of the cutoff derivatives, `|η′|`, `ρ|Φ′|`, `ρ²|Φ″|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffConstants {
    pub eta_d1: f64,
    pub cutoff_d1_r: f64,
    pub cutoff_d2_r2: f64,
}

fn cutoff_constants() -> CutoffConstants {
    let m = 20_000;
    let mut c = CutoffConstants {
        eta_d1: 0.0,
        cutoff_d1_r: 0.0,
        cutoff_d2_r2: 0.0,
    };
    for i in 0..=m {
        let s = 0.5 + 0.5 * i as f64 / m as f64;
        let rho = 1.0 + i as f64 / m as f64;
        c.eta_d1 = c.eta_d1.max(eta_d1(s).abs());
        c.cutoff_d1_r = c.cutoff_d1_r.max(rho * cutoff_d1(rho).abs());
        c.cutoff_d2_r2 = c.cutoff_d2_r2.max(rho * rho * cutoff_d2(rho).abs());
    }
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffSet {
    pub t_scale: f64,
    pub k: usize,
    pub l: usize,
    pub alpha: f64,
    pub n: usize,
    /// `T` for n ≥ 2, `T^α` for n = 1.
    pub space_scale: f64,
    pub constants: CutoffConstants,
    /// `Ψ_T` at `m h`, `m = 0..=M`, with `h = T/M`.
    psi_nodes: Vec<f64>,
    psi_h: f64,
}

pub fn make_cutoffs(t_scale: f64, k: usize, l: usize, alpha: f64, n: usize, dt: f64) -> Result<CutoffSet> {
    if !(t_scale.is_finite() && t_scale > 0.0) {
        return Err(SdwError::usage("cutoff scale T must be positive"));
    }
    if k < 2 || l < 2 {
        return Err(SdwError::usage("cutoff powers k and l must be >= 2"));
    }
    if n == 1 && !(alpha.is_finite() && alpha >= 1.0) {
        return Err(SdwError::usage("anisotropy exponent alpha must be >= 1"));
    }
    if n == 0 || !(dt > 0.0) {
        return Err(SdwError::usage("invalid dimension or quadrature step"));
    }
    let m = (t_scale / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_scale / m as f64;
    let g = |t: f64| eta(t / t_scale).powi(k as i32);
    // composite Simpson on each interval, accumulated backward from T
    let mut psi_nodes = vec![0.0; m + 1];
    for i in (0..m).rev() {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let piece = h / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        psi_nodes[i] = psi_nodes[i + 1] + piece;
    }
    Ok(CutoffSet {
        t_scale,
        k,
        l,
        alpha,
        n,
        space_scale: if n == 1 { t_scale.powf(alpha) } else { t_scale },
        constants: cutoff_constants(),
        psi_nodes,
        psi_h: h,
    })
}

/// Values of the composite test function and the derivatives the weak form needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFnValues {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_tt: f64,
    pub lap_phi: f64,
    pub lap_phi_t: f64,
}

impl CutoffSet {
    pub fn eta_t(&self, t: f64) -> f64 {
        eta(t / self.t_scale)
    }

    /// `η_T^k(t)` and its first two time derivatives.
    pub fn time_factor(&self, t: f64) -> (f64, f64, f64) {
        let s = t / self.t_scale;
        let (e, e1, e2) = (eta(s), eta_d1(s), eta_d2(s));
        let k = self.k as i32;
        let kf = self.k as f64;
        let ts = self.t_scale;
        let v = e.powi(k);
        let d1 = kf * e.powi(k - 1) * e1 / ts;
        let d2 = (kf * (kf - 1.0) * e.powi(k - 2) * e1 * e1 + kf * e.powi(k - 1) * e2) / (ts * ts);
        (v, d1, d2)
    }

    /// `Ψ_T(t) = ∫_t^T η_T^k`, by cubic Hermite interpolation between nodes using `Ψ′ = −η_T^k`.
    pub fn psi(&self, t: f64) -> f64 {
        if t >= self.t_scale {
            return 0.0;
        }
        let t = t.max(0.0);
        let h = self.psi_h;
        let i = ((t / h).floor() as usize).min(self.psi_nodes.len() - 2);
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let x = (t - a) / h;
        let (pa, pb) = (self.psi_nodes[i], self.psi_nodes[i + 1]);
        let (da, db) = (-self.time_factor(a).0, -self.time_factor(b).0);
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        h00 * pa + h10 * h * da + h01 * pb + h11 * h * db
    }

    pub fn psi_nodes(&self) -> (&[f64], f64) {
        (&self.psi_nodes, self.psi_h)
    }

    /// `h(r) = Φ^ℓ(r/L)` with `h′`, `h″`.
    pub fn space_factor(&self, r: f64) -> (f64, f64, f64) {
        let big_l = self.space_scale;
        let rho = r / big_l;
        let (c, c1, c2) = (cutoff(rho), cutoff_d1(rho), cutoff_d2(rho));
        let l = self.l as i32;
        let lf = self.l as f64;
        let v = c.powi(l);
        let d1 = lf * c.powi(l - 1) * c1 / big_l;
        let d2 = (lf * (lf - 1.0) * c.powi(l - 2) * c1 * c1 + lf * c.powi(l - 1) * c2) / (big_l * big_l);
        (v, d1, d2)
    }

    /// `ψ = φ₀ Φ^ℓ` and `Δψ = φ₀ Δh + 2 φ₀′ h′`, using `Δφ₀ = 0`.
    pub fn spatial_part(&self, w: &HarmonicProfile, r: f64) -> (f64, f64) {
        let (h, h1, h2) = self.space_factor(r);
        let p0 = w.value(r);
        let p1 = w.derivative(r);
        let lap_h = if self.n == 1 {
            h2
        } else {
            h2 + (self.n as f64 - 1.0) / r * h1
        };
        (p0 * h, p0 * lap_h + 2.0 * p1 * h1)
    }
}

pub fn composite_test_function(c: &CutoffSet, w: &HarmonicWeight, t: f64, r: f64) -> TestFnValues {
    let (psi, lap_psi) = c.spatial_part(&w.profile, r);
    let (th, th1, th2) = c.time_factor(t);
    TestFnValues {
        phi: psi * th,
        phi_t: psi * th1,
        phi_tt: psi * th2,
        lap_phi: lap_psi * th,
        lap_phi_t: lap_psi * th1,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FunctionalReport {
    /// `∫∫ |u|^p φ`
    pub i_power: f64,
    /// `∫∫ |u_t|^q φ`
    pub j_deriv: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `∫ φ₀ Φ^ℓ u₁`
    pub data_u1: f64,
    /// `Ψ_T(0) ∫ u₀ Δ(φ₀ Φ^ℓ)`
    pub data_u0: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub weak_residual: f64,
    /// `∫∫ F φ + data_u1 + data_u0 − (I₁ + I₂ + I₃)`
    pub splitting_residual: f64,
    /// `∫∫ |F| |φ| + Σ ∫∫ |u| |∂φ|`, a magnitude for relative comparisons.
    pub scale: f64,
}

/// Both sides of the weak formulation against `φ = φ₀ Φ_T^ℓ η_T^k` along a
/// stored trajectory, with trapezoid quadrature in time.
pub fn weak_form_residual(
    trajectory: &[State],
    forcing: &mut dyn Forcing,
    kind: &NonlinKind,
    c: &CutoffSet,
    w: &HarmonicWeight,
) -> Result<FunctionalReport> {
    let first = trajectory.first().ok_or_else(|| SdwError::usage("empty trajectory"))?;
    let last = trajectory.last().expect("nonempty");
    let grid: &Arc<RadialGrid> = first.grid();
    if first.t != 0.0 || (last.t - c.t_scale).abs() > 1e-9 * c.t_scale {
        return Err(SdwError::usage(format!(
            "trajectory covers [{}, {}], test function needs [0, {}]",
            first.t, last.t, c.t_scale
        )));
    }
    if grid.n() != c.n || grid.n() != w.grid.n() {
        return Err(SdwError::usage(
            "dimension mismatch between trajectory and test function",
        ));
    }
    if grid.spec.r_out < 2.0 * c.space_scale {
        return Err(SdwError::Domain(format!(
            "test function support 2L = {} exceeds r_out = {}",
            2.0 * c.space_scale,
            grid.spec.r_out
        )));
    }
    let (psi, lap_psi): (Vec<f64>, Vec<f64>) = grid.nodes.iter().map(|&r| c.spatial_part(&w.profile, r)).unzip();
    let int = |vals: &[f64]| integrate_unchecked(grid, vals);
    let mut rep = FunctionalReport::default();
    let mut f_phi = 0.0;
    let mut scale = 0.0;
    for (k, s) in trajectory.iter().enumerate() {
        let weight = if trajectory.len() == 1 {
            0.0
        } else if k == 0 {
            0.5 * (trajectory[1].t - s.t)
        } else if k == trajectory.len() - 1 {
            0.5 * (s.t - trajectory[k - 1].t)
        } else {
            0.5 * (trajectory[k + 1].t - trajectory[k - 1].t)
        };
        let (th, th1, th2) = c.time_factor(s.t);
        let big_psi = c.psi(s.t);
        let f = forcing.at_record(k, s).unwrap_or_else(|| GridField::zeros(grid));
        let len = psi.len();
        let mut acc = [0.0f64; 11];
        let mut buf = vec![[0.0f64; 11]; len];
        for j in 0..len {
            let (u, v, fj) = (s.u.values[j], s.v.values[j], f.values[j]);
            let phi = psi[j] * th;
            buf[j] = [
                fj * phi,
                u * psi[j] * th2,
                u * lap_psi[j] * th1,
                u * lap_psi[j] * th,
                kind.p().map_or(0.0, |p| u.abs().powf(p) * phi),
                kind.q().map_or(0.0, |q| v.abs().powf(q) * phi),
                -v * psi[j] * th1,
                -v * lap_psi[j] * th,
                -v * lap_psi[j] * big_psi,
                (fj * phi).abs()
                    + (u * psi[j] * th2).abs()
                    + (u * lap_psi[j] * th1).abs()
                    + (u * lap_psi[j] * th).abs(),
                0.0,
            ];
        }
        for (i, slot) in acc.iter_mut().enumerate().take(10) {
            let column: Vec<f64> = buf.iter().map(|b| b[i]).collect();
            *slot = int(&column);
        }
        f_phi += weight * acc[0];
        rep.rhs += weight * (acc[1] + acc[2] - acc[3]);
        rep.i_power += weight * acc[4];
        rep.j_deriv += weight * acc[5];
        rep.i1 += weight * acc[6];
        rep.i2 += weight * acc[7];
        rep.i3 += weight * acc[8];
        scale += weight * acc[9];
    }
    let (th0, th0_1, _) = c.time_factor(0.0);
    let u0 = &first.u.values;
    let u1 = &first.v.values;
    let prod = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| s * x * y).collect() };
    let u1_phi0 = int(&prod(u1, &psi, th0));
    let u0_lap_phi0 = int(&prod(u0, &lap_psi, th0));
    let u0_phi_t0 = int(&prod(u0, &psi, th0_1));
    rep.lhs = f_phi + u1_phi0 - u0_lap_phi0 - u0_phi_t0;
    rep.weak_residual = rep.lhs - rep.rhs;
    rep.data_u1 = int(&prod(u1, &psi, 1.0));
    rep.data_u0 = c.psi(0.0) * int(&prod(u0, &lap_psi, 1.0));
    rep.splitting_residual = f_phi + rep.data_u1 + rep.data_u0 - (rep.i1 + rep.i2 + rep.i3);
    rep.scale = scale + u1_phi0.abs() + u0_lap_phi0.abs() + u0_phi_t0.abs();
    Ok(rep)
}

/// `∫ φ₀ u₁`.
pub fn sign_functional(u1: &GridField, w: &HarmonicWeight) -> Result<f64> {
    u1.check_finite()?;
    let vals: Vec<f64> = u1.values.iter().zip(&w.values.values).map(|(a, b)| a * b).collect();
    Ok(integrate_unchecked(&u1.grid, &vals))
}

/// Whether `∫ φ₀ u₁` is positive beyond round-off relative to `∫ φ₀ |u₁|`.
pub fn sign_condition_holds(u1: &GridField, w: &HarmonicWeight) -> Result<bool> {
    let s = sign_functional(u1, w)?;
    let mag = sign_functional(&u1.map(f64::abs), w)?;
    Ok(s > 1e-10 * mag)
}

/// Bound integrals whose growth in T is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TermSelector {
    /// `∫∫ φ₀ Φ_T^ℓ η_T^{(k−1)r′} |∂_t η_T|^{r′}`
    TimeCutoff,
    /// `∫∫_{L ≤ |x| ≤ 2L} Φ_T^{ℓ−r′} η_T^k |ΔΦ_T|^{r′}`
    AnnulusLaplacian,
}

impl TermSelector {
    pub fn label(&self) -> &'static str {
        match self {
            TermSelector::TimeCutoff => "time_cutoff",
            TermSelector::AnnulusLaplacian => "annulus_laplacian",
        }
    }

    /// Power of T predicted by the change of variables `y = x/L`, `s = t/T`.
    pub fn expected_slope(&self, n: usize, r: f64, alpha: f64) -> f64 {
        let rc = conjugate(r);
        let a = if n == 1 { alpha } else { 1.0 };
        match self {
            TermSelector::TimeCutoff => match n {
                1 => 2.0 * alpha + 1.0 - rc,
                2 => 3.0 - rc,
                _ => n as f64 + 1.0 - rc,
            },
            TermSelector::AnnulusLaplacian => 1.0 + n as f64 * a - 2.0 * a * rc,
        }
    }

    /// Whether `ln T` is divided out before fitting.
    pub fn log_corrected(&self, n: usize) -> bool {
        *self == TermSelector::TimeCutoff && n == 2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeSpec {
    pub n: usize,
    /// Exponent `q` (or `p`) whose conjugate enters the bound.
    pub exponent: f64,
    pub t_list: Vec<f64>,
    pub alpha: f64,
    pub k: usize,
    pub l: usize,
    pub r_obs: f64,
    pub r_out: f64,
    pub j_max: usize,
    /// Simpson subintervals over the time support.
    pub time_nodes: usize,
}

impl SlopeSpec {
    pub fn new(n: usize, exponent: f64, t_list: Vec<f64>) -> Self {
        let rc = conjugate(exponent);
        let power = 2 * (2.0 * rc).ceil() as usize;
        let t_max = t_list.iter().cloned().fold(0.0, f64::max);
        let r_obs = if n == 1 { 0.0 } else { 1.0 };
        SlopeSpec {
            n,
            exponent,
            alpha: 1.0,
            k: power,
            l: power,
            r_obs,
            r_out: r_obs + 2.0 * t_max + 1.0,
            j_max: 40 * (2.0 * t_max).ceil() as usize,
            time_nodes: 4000,
            t_list,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub selector: TermSelector,
    pub values: Vec<(f64, f64)>,
    pub slope: f64,
    pub expected: f64,
    /// Max absolute deviation of the log data from the fitted line.
    pub fit_residual: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn scaling_slope(selector: TermSelector, spec: &SlopeSpec) -> Result<SlopeReport> {
    if spec.t_list.len() < 4 {
        return Err(SdwError::usage("scaling fit needs at least 4 values of T"));
    }
    if spec.t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SdwError::usage("T values must increase"));
    }
    if !(spec.exponent > 1.0) {
        return Err(SdwError::usage("exponent must exceed 1"));
    }
    let rc = conjugate(spec.exponent);
    let t_max = *spec.t_list.last().expect("nonempty");
    let l_max = if spec.n == 1 { t_max.powf(spec.alpha) } else { t_max };
    if spec.r_out < 2.0 * l_max {
        return Err(SdwError::Domain(format!(
            "r_out = {} does not contain 2L = {}; enlarge the grid",
            spec.r_out,
            2.0 * l_max
        )));
    }
    let dom = crate::domain_grid::DomainSpec::new(spec.n, spec.r_obs, spec.r_out)?;
    let grid = crate::domain_grid::build_grid(dom, spec.j_max)?;
    let profile = HarmonicProfile {
        n: spec.n,
        r_obs: spec.r_obs,
    };
    let mut values = Vec::with_capacity(spec.t_list.len());
    for &t in &spec.t_list {
        let c = make_cutoffs(t, spec.k, spec.l, spec.alpha, spec.n, t)?;
        let big_l = c.space_scale;
        let (kf, lf) = (spec.k as f64, spec.l as f64);
        let value = match selector {
            TermSelector::TimeCutoff => {
                let time = simpson(
                    |s| {
                        let tt = s * t;
                        eta(s).powf((kf - 1.0) * rc) * (eta_d1(tt / t) / t).abs().powf(rc)
                    },
                    0.5,
                    1.0,
                    spec.time_nodes,
                ) * t;
                let space: Vec<f64> = grid
                    .nodes
                    .iter()
                    .map(|&r| profile.value(r) * cutoff(r / big_l).powf(lf))
                    .collect();
                let mut space = space;
                space[0] = 0.0;
                time * integrate_unchecked(&grid, &space)
            }
            TermSelector::AnnulusLaplacian => {
                let time = simpson(|s| eta(s).powf(kf), 0.0, 1.0, spec.time_nodes) * t;
                let space: Vec<f64> = grid
                    .nodes
                    .iter()
                    .map(|&r| {
                        let rho = r / big_l;
                        if !(1.0..=2.0).contains(&rho) {
                            return 0.0;
                        }
                        let mut lap = cutoff_d2(rho) / (big_l * big_l);
                        if spec.n > 1 {
                            lap += (spec.n as f64 - 1.0) / r * cutoff_d1(rho) / big_l;
                        }
                        cutoff(rho).powf(lf - rc) * lap.abs().powf(rc)
                    })
                    .collect();
                time * integrate_unchecked(&grid, &space)
            }
        };
        values.push((t, value));
    }
    let log_corr = selector.log_corrected(spec.n);
    let xs: Vec<f64> = values.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = values
        .iter()
        .map(|&(t, v)| if log_corr { (v / t.ln()).ln() } else { v.ln() })
        .collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(SdwError::numeric("scaling term vanished or overflowed"));
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    let fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ym - slope * (x - xm)).abs())
        .fold(0.0, f64::max);
    Ok(SlopeReport {
        selector,
        values,
        slope,
        expected: selector.expected_slope(spec.n, spec.exponent, spec.alpha),
        fit_residual,
    })
}

/// Power of T left in the critical-case time-cutoff bound after Hölder, `−1 + (1 + n)/q′`.
pub fn holder_prefactor_exponent(n: usize, q: f64) -> f64 {
    -1.0 + (1.0 + n as f64) / conjugate(q)
}
