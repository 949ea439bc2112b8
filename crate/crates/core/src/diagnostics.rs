//! Per-step norm records and the energy estimates evaluated on a finished run.
//!
//! Estimates with an unspecified constant are reported as sup-ratios
//! `LHS / RHS-without-constant`; the check is that the ratio exists and is
//! stable under refinement. Every denominator is floored at [`RATIO_FLOOR`].

use serde::Serialize;

use crate::domain_grid::{grad_norm_sq_unchecked, inner, l2_norm_sq_unchecked, GridField};
use crate::error::{Result, SdwError};
use crate::evolver::State;

pub const RATIO_FLOOR: f64 = 1e-300;

/// Norms of one stored state. Column order of the energy CSV is field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub h1semi_u: f64,
    pub h1semi_v: f64,
    pub h1_u: f64,
    pub h1_v: f64,
    /// `‖F(t)‖`
    pub l2_f: f64,
    /// `∫₀ᵗ ‖F‖ ds`
    pub cum_f: f64,
    /// `∫₀ᵗ ‖∂_r v‖² ds`
    pub cum_dissipation: f64,
    /// `⟨F(t), v(t)⟩`
    pub f_dot_v: f64,
    /// `∫₀ᵗ ‖F‖² ds`
    pub cum_f_sq: f64,
    /// `∫₀ᵗ ‖F‖ ‖v‖ ds`
    pub cum_f_v: f64,
}

impl EnergyRecord {
    pub const FIELDS: [&'static str; 13] = [
        "t",
        "l2_u",
        "l2_v",
        "h1semi_u",
        "h1semi_v",
        "h1_u",
        "h1_v",
        "l2_f",
        "cum_f",
        "cum_dissipation",
        "f_dot_v",
        "cum_f_sq",
        "cum_f_v",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.l2_u,
            self.l2_v,
            self.h1semi_u,
            self.h1semi_v,
            self.h1_u,
            self.h1_v,
            self.l2_f,
            self.cum_f,
            self.cum_dissipation,
            self.f_dot_v,
            self.cum_f_sq,
            self.cum_f_v,
        ]
    }

    /// `E = ½(‖v‖² + ‖∂_r u‖²)`
    pub fn energy(&self) -> f64 {
        0.5 * (self.l2_v * self.l2_v + self.h1semi_u * self.h1semi_u)
    }

    /// `‖(v, ∂_r u)‖`
    pub fn energy_pair(&self) -> f64 {
        (self.l2_v * self.l2_v + self.h1semi_u * self.h1semi_u).sqrt()
    }

    /// `‖u‖_{H¹} + ‖v‖_{H¹}`
    pub fn h1_pair(&self) -> f64 {
        self.h1_u + self.h1_v
    }
}

/// Trapezoid state for the cumulative integrals; updated on every step.
#[derive(Debug, Clone, Default)]
pub struct EnergyAccumulator {
    last: Option<Integrands>,
    cum_f: f64,
    cum_f_sq: f64,
    cum_f_v: f64,
    cum_dissipation: f64,
}

#[derive(Debug, Clone, Copy)]
struct Integrands {
    t: f64,
    f: f64,
    f_sq: f64,
    f_v: f64,
    dissipation: f64,
}

pub fn record(state: &State, forcing: Option<&GridField>, acc: &mut EnergyAccumulator) -> EnergyRecord {
    let l2_u = l2_norm_sq_unchecked(&state.u).sqrt();
    let l2_v = l2_norm_sq_unchecked(&state.v).sqrt();
    let semi_u_sq = grad_norm_sq_unchecked(&state.u);
    let semi_v_sq = grad_norm_sq_unchecked(&state.v);
    let (l2_f, f_dot_v) = match forcing {
        Some(f) => (l2_norm_sq_unchecked(f).sqrt(), inner(f, &state.v)),
        None => (0.0, 0.0),
    };
    let now = Integrands {
        t: state.t,
        f: l2_f,
        f_sq: l2_f * l2_f,
        f_v: l2_f * l2_v,
        dissipation: semi_v_sq,
    };
    if let Some(prev) = acc.last {
        let h = 0.5 * (now.t - prev.t);
        acc.cum_f += h * (prev.f + now.f);
        acc.cum_f_sq += h * (prev.f_sq + now.f_sq);
        acc.cum_f_v += h * (prev.f_v + now.f_v);
        acc.cum_dissipation += h * (prev.dissipation + now.dissipation);
    }
    acc.last = Some(now);
    let h1semi_u = semi_u_sq.sqrt();
    let h1semi_v = semi_v_sq.sqrt();
    EnergyRecord {
        t: state.t,
        l2_u,
        l2_v,
        h1semi_u,
        h1semi_v,
        h1_u: l2_u + h1semi_u,
        h1_v: l2_v + h1semi_v,
        l2_f,
        cum_f: acc.cum_f,
        cum_dissipation: acc.cum_dissipation,
        f_dot_v,
        cum_f_sq: acc.cum_f_sq,
        cum_f_v: acc.cum_f_v,
    }
}

/// Records with strictly increasing `t`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EnergyTimeSeries {
    pub records: Vec<EnergyRecord>,
}

impl EnergyTimeSeries {
    pub fn push(&mut self, rec: EnergyRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(rec.t > last.t) {
                return Err(SdwError::numeric(format!(
                    "record time {} does not follow {}",
                    rec.t, last.t
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn first(&self) -> Result<&EnergyRecord> {
        self.records
            .first()
            .ok_or_else(|| SdwError::usage("energy series is empty"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupRatioReport {
    pub sup_ratio: f64,
    pub t_at_sup: f64,
}

fn sup_ratio(
    series: &EnergyTimeSeries,
    mut ratio_at: impl FnMut(usize, &EnergyRecord) -> f64,
) -> Result<SupRatioReport> {
    series.first()?;
    let mut best = SupRatioReport {
        sup_ratio: 0.0,
        t_at_sup: series.records[0].t,
    };
    for (k, rec) in series.records.iter().enumerate() {
        let r = ratio_at(k, rec);
        if r > best.sup_ratio || r.is_nan() {
            best = SupRatioReport {
                sup_ratio: r,
                t_at_sup: rec.t,
            };
            if r.is_nan() {
                break;
            }
        }
    }
    Ok(best)
}

/// `sup_t ‖(v, ∂_r u)(t)‖ / (‖(u₁, ∂_r u₀)‖ + ∫₀ᵗ ‖F‖ ds)`.
pub fn check_energy_bound(series: &EnergyTimeSeries) -> Result<SupRatioReport> {
    let e0 = series.first()?.energy_pair();
    sup_ratio(series, |_, r| r.energy_pair() / (e0 + r.cum_f).max(RATIO_FLOOR))
}

/// `sup_t ‖u(t)‖ / (‖u₀‖ + ∫₀ᵗ (‖(u₁, ∂_r u₀)‖ + ∫₀ˢ ‖F‖ dτ) ds)`, outer integral by trapezoid.
pub fn check_displacement_bound(series: &EnergyTimeSeries) -> Result<SupRatioReport> {
    let first = *series.first()?;
    let e0 = first.energy_pair();
    let mut outer = 0.0;
    let mut prev = first;
    sup_ratio(series, move |k, r| {
        if k > 0 {
            outer += 0.5 * (r.t - prev.t) * (2.0 * e0 + prev.cum_f + r.cum_f);
        }
        prev = *r;
        r.l2_u / (first.l2_u + outer).max(RATIO_FLOOR)
    })
}

/// `sup_t ‖∂_r v(t)‖²` against `‖∂_r u₀‖² + ‖u₁‖²_{H¹} + ∫‖F‖² + ‖∂_r u(t)‖² + ∫‖F‖‖v‖`.
pub fn check_velocity_gradient_bound(series: &EnergyTimeSeries) -> Result<SupRatioReport> {
    let first = *series.first()?;
    let data = first.h1semi_u.powi(2) + first.l2_v.powi(2) + first.h1semi_v.powi(2);
    sup_ratio(series, |_, r| {
        let rhs = data + r.cum_f_sq + r.h1semi_u.powi(2) + r.cum_f_v;
        r.h1semi_v.powi(2) / rhs.max(RATIO_FLOOR)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyIdentityReport {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
}

/// `E_{k+1} − E_k + dt ‖∂_r v‖² − dt ⟨F, v⟩` with both rates averaged over the
/// step endpoints. Meaningful only for series stored on every step.
pub fn energy_identity_residual(series: &EnergyTimeSeries) -> EnergyIdentityReport {
    let residuals: Vec<f64> = series
        .records
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dt = b.t - a.t;
            b.energy() - a.energy() + 0.5 * dt * (a.h1semi_v.powi(2) + b.h1semi_v.powi(2))
                - 0.5 * dt * (a.f_dot_v + b.f_dot_v)
        })
        .collect();
    let max_abs = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    EnergyIdentityReport { residuals, max_abs }
}

/// `max_t [∫₀ᵗ ‖∂_r v‖² − ½‖(u₁, ∂_r u₀)‖² − ∫₀ᵗ ‖F‖ ‖v‖]`; nonpositive up to discretization error.
pub fn dissipation_bound_excess(series: &EnergyTimeSeries) -> Result<f64> {
    let e0 = series.first()?.energy_pair();
    Ok(series
        .records
        .iter()
        .map(|r| r.cum_dissipation - 0.5 * e0 * e0 - r.cum_f_v)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max_k E_{k+1} − E_k`; nonpositive for unforced runs.
pub fn max_energy_increase(series: &EnergyTimeSeries) -> f64 {
    series
        .records
        .windows(2)
        .map(|w| w[1].energy() - w[0].energy())
        .fold(f64::NEG_INFINITY, f64::max)
}
