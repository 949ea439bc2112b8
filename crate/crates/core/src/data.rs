//! Initial-data families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain_grid::{integrate, GridField, RadialGrid};
use crate::error::{Result, SdwError};
use crate::harmonic_weight::make_weight;

/// Quintic smoothstep `τ³(10 − 15τ + 6τ²)`, clamped to `[0, 1]`.
pub fn smoothstep(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

pub fn smoothstep_d1(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    30.0 * tau * tau * (1.0 - tau) * (1.0 - tau)
}

pub fn smoothstep_d2(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `σ(1 − |r − c|/w)`, supported on `[c − w, c + w]`, C².
    Bump,
    /// `exp(−((r − c)/w)²)`.
    Gaussian,
    /// `bump · cos(2π(r − c)/w)`; sign-changing.
    Wavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub shape: Shape,
    pub center: f64,
    pub width: f64,
}

impl Profile {
    pub fn bump(center: f64, width: f64) -> Self {
        Profile {
            shape: Shape::Bump,
            center,
            width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center.is_finite() && self.width.is_finite() && self.width > 0.0) {
            return Err(SdwError::config("profile needs finite center and width > 0"));
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> f64 {
        let s = (r - self.center) / self.width;
        match self.shape {
            Shape::Bump => smoothstep(1.0 - s.abs()),
            Shape::Gaussian => (-s * s).exp(),
            Shape::Wavy => smoothstep(1.0 - s.abs()) * (2.0 * std::f64::consts::PI * s).cos(),
        }
    }

    /// Sampled with zero boundary values.
    pub fn sample(&self, grid: &Arc<RadialGrid>, amplitude: f64) -> GridField {
        GridField::dirichlet_from_fn(grid, |r| amplitude * self.value(r))
    }
}

/// `u₀ = A·profile_u0` (zero when absent), `u₁ = A·profile_u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub u0: Option<Profile>,
    pub u1: Profile,
    pub amplitude: f64,
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.u0 {
            p.validate()?;
        }
        self.u1.validate()?;
        if !self.amplitude.is_finite() {
            return Err(SdwError::config("amplitude must be finite"));
        }
        Ok(())
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        InitialData { amplitude, ..*self }
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> (GridField, GridField) {
        let u0 = match self.u0 {
            Some(p) => p.sample(grid, self.amplitude),
            None => GridField::zeros(grid),
        };
        (u0, self.u1.sample(grid, self.amplitude))
    }
}

/// `∫ φ₀ u₁`, the quantity whose positivity the blow-up results assume.
pub fn sign_functional(u1: &GridField) -> Result<f64> {
    let w = make_weight(&u1.grid);
    integrate(&w.values.mul(u1))
}
