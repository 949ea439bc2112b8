//! Positive harmonic weights vanishing on the obstacle.
//!
//! For a ball obstacle the exterior Dirichlet problem has closed-form radial
//! solutions: `1 − (r_obs/r)^{n−2}` for n ≥ 3 (tends to 1), `ln(r/r_obs)` for
//! n = 2 (logarithmic growth) and `x` on the half-line.

use std::sync::Arc;

use serde::Serialize;

use crate::domain_grid::{build_grid, radial_derivative, GridField, RadialGrid};
use crate::error::{Result, SdwError};
use crate::spatial_ops::LaplacianStencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    OneD,
    TwoD,
    HighD,
}

impl WeightKind {
    pub fn for_dimension(n: usize) -> Self {
        match n {
            1 => WeightKind::OneD,
            2 => WeightKind::TwoD,
            _ => WeightKind::HighD,
        }
    }
}

/// Closed-form harmonic function for dimension `n` and obstacle radius `r_obs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicProfile {
    pub n: usize,
    pub r_obs: f64,
}

impl HarmonicProfile {
    pub fn value(&self, r: f64) -> f64 {
        match self.n {
            1 => r,
            2 => (r / self.r_obs).ln(),
            n => 1.0 - (self.r_obs / r).powi(n as i32 - 2),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.n {
            1 => 1.0,
            2 => 1.0 / r,
            n => (n - 2) as f64 * self.r_obs.powi(n as i32 - 2) * r.powi(1 - n as i32),
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        match self.n {
            1 => 0.0,
            2 => -1.0 / (r * r),
            n => {
                let k = (n - 2) as f64;
                -k * (n - 1) as f64 * self.r_obs.powi(n as i32 - 2) * r.powi(-(n as i32))
            }
        }
    }

    /// Exact value of `|∂_r φ₀| r^{n−1}` (constant in r for n ≥ 2).
    pub fn flux_constant(&self) -> f64 {
        match self.n {
            1 => 1.0,
            2 => 1.0,
            n => (n - 2) as f64 * self.r_obs.powi(n as i32 - 2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicWeight {
    pub grid: Arc<RadialGrid>,
    pub values: GridField,
    pub kind: WeightKind,
    pub profile: HarmonicProfile,
}

pub fn make_weight(grid: &Arc<RadialGrid>) -> HarmonicWeight {
    let profile = HarmonicProfile {
        n: grid.n(),
        r_obs: grid.spec.r_obs,
    };
    let mut values = GridField::from_fn(grid, |r| profile.value(r));
    // exact zero on the obstacle, independent of how ln / powi round
    values.values[0] = 0.0;
    HarmonicWeight {
        grid: Arc::clone(grid),
        values,
        kind: WeightKind::for_dimension(grid.n()),
        profile,
    }
}

/// Max over interior nodes of `|Δ_h φ₀|`.
pub fn laplacian_residual(w: &HarmonicWeight) -> f64 {
    let s = LaplacianStencil::new(&w.grid);
    let lap = s.apply_unchecked(&w.values);
    lap.values[1..w.grid.j_max].iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientDecayReport {
    /// `max |∂_r φ₀| r^{n−1}` over nodes with `r ≥ 2 r_obs`, closed-form derivative.
    pub constant: f64,
    /// Same quantity with the centered-difference derivative on this grid.
    pub discrete_constant: f64,
    /// Same as `discrete_constant` on the grid with twice as many nodes.
    pub refined_constant: f64,
    /// `(n−2) r_obs^{n−2}` for n ≥ 3, 1 for n = 2.
    pub expected: f64,
    pub bounded: bool,
}

fn discrete_flux_max(grid: &Arc<RadialGrid>) -> f64 {
    let w = make_weight(grid);
    let d = radial_derivative(&w.values);
    let n = grid.n() as i32;
    let r_min = 2.0 * grid.spec.r_obs;
    grid.nodes
        .iter()
        .enumerate()
        .filter(|&(j, &r)| r >= r_min && j > 0 && j < grid.j_max)
        .map(|(j, &r)| d.values[j].abs() * r.powi(n - 1))
        .fold(0.0, f64::max)
}

pub fn gradient_decay_check(w: &HarmonicWeight) -> Result<GradientDecayReport> {
    let n = w.grid.n();
    if n < 2 {
        return Err(SdwError::usage("gradient decay check needs n >= 2"));
    }
    let r_min = 2.0 * w.grid.spec.r_obs;
    if w.grid.spec.r_out < r_min {
        return Err(SdwError::Domain("grid does not reach 2 r_obs".to_string()));
    }
    let constant = w
        .grid
        .nodes
        .iter()
        .filter(|&&r| r >= r_min)
        .map(|&r| w.profile.derivative(r).abs() * r.powi(n as i32 - 1))
        .fold(0.0, f64::max);
    let discrete_constant = discrete_flux_max(&w.grid);
    let refined = build_grid(w.grid.spec, 2 * w.grid.j_max)?;
    let refined_constant = discrete_flux_max(&refined);
    let bounded =
        discrete_constant.is_finite() && (discrete_constant - refined_constant).abs() <= 0.05 * refined_constant.abs();
    Ok(GradientDecayReport {
        constant,
        discrete_constant,
        refined_constant,
        expected: w.profile.flux_constant(),
        bounded,
    })
}
