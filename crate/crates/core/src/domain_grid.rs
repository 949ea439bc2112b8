//! Radial exterior domains and their quadrature.
//!
//! The exterior of a ball of radius `r_obs` (n ≥ 2) or the half-line (n = 1) is
//! truncated at `r_out` and sampled on a uniform radial grid. Node 0 sits on the
//! obstacle, node `j_max` on the truncation sphere; both carry homogeneous
//! Dirichlet data.
//!
//! Quadrature uses dual-cell volumes: node `j` owns the shell between the
//! neighbouring face radii `r_{j±1/2}` (half cells at the two ends). For n = 1
//! this is exactly the trapezoid rule; for n ≥ 2 it is its volume-exact
//! counterpart, so the weights sum to the shell volume to round-off. The same
//! face radii drive the conservative Laplacian in [`crate::spatial_ops`], which
//! makes that operator self-adjoint in this weighted inner product.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdwError};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Spatial dimension.
    pub n: usize,
    /// Obstacle radius; zero for the half-line.
    pub r_obs: f64,
    /// Truncation radius.
    pub r_out: f64,
}

impl DomainSpec {
    pub fn new(n: usize, r_obs: f64, r_out: f64) -> Result<Self> {
        let spec = DomainSpec { n, r_obs, r_out };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SdwError::config("dimension n must be at least 1"));
        }
        if !self.r_obs.is_finite() || !self.r_out.is_finite() {
            return Err(SdwError::config("radii must be finite"));
        }
        if self.n == 1 && self.r_obs != 0.0 {
            return Err(SdwError::config("the half-line (n = 1) requires r_obs = 0"));
        }
        if self.n >= 2 && self.r_obs <= 0.0 {
            return Err(SdwError::config("n >= 2 requires an obstacle radius r_obs > 0"));
        }
        if self.r_out <= self.r_obs {
            return Err(SdwError::config("r_out must exceed r_obs"));
        }
        Ok(())
    }

    /// Truncation rule for production runs: `r_out / max(r_obs, 1) ≥ 4`.
    pub fn check_truncation(&self) -> Result<()> {
        self.validate()?;
        if self.r_out / self.r_obs.max(1.0) < 4.0 {
            return Err(SdwError::config(format!(
                "truncation too close to the obstacle: r_out / max(r_obs, 1) = {} < 4",
                self.r_out / self.r_obs.max(1.0)
            )));
        }
        Ok(())
    }

    /// Same domain with the truncation radius doubled.
    pub fn doubled(&self) -> Self {
        DomainSpec {
            r_out: self.r_obs + 2.0 * (self.r_out - self.r_obs),
            ..*self
        }
    }
}

/// Surface area of the unit (n−1)-sphere, with the convention `c_1 = 1`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 | 1 => 1.0,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n),
    }
}

// Γ(n/2) for positive integer n.
fn gamma_half(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

// a^n − b^n without cancellation for a close to b.
fn pow_diff(a: f64, b: f64, n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        sum += a.powi((n - 1 - i) as i32) * b.powi(i as i32);
    }
    (a - b) * sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub spec: DomainSpec,
    pub j_max: usize,
    pub dx: f64,
    pub nodes: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// `c_n r_{j+1/2}^{n−1} / dx` for the face between nodes `j` and `j+1`.
    pub face_coeffs: Vec<f64>,
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn len(&self) -> usize {
        self.j_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Closed-form volume of the truncated shell.
    pub fn shell_volume(&self) -> f64 {
        let n = self.spec.n;
        unit_sphere_area(n) / n as f64 * pow_diff(self.spec.r_out, self.spec.r_obs, n)
    }

    /// Index of the node nearest to `r`, clamped to the grid.
    pub fn nearest_index(&self, r: f64) -> usize {
        let j = ((r - self.spec.r_obs) / self.dx).round();
        j.clamp(0.0, self.j_max as f64) as usize
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        j == 0 || j == self.j_max
    }
}

/// Builds the uniform radial grid with `j_max` intervals.
pub fn build_grid(spec: DomainSpec, j_max: usize) -> Result<Arc<RadialGrid>> {
    spec.validate()?;
    if j_max < MIN_NODES {
        return Err(SdwError::config(format!(
            "j_max = {j_max} is below the minimum of {MIN_NODES}"
        )));
    }
    let n = spec.n;
    let dx = (spec.r_out - spec.r_obs) / j_max as f64;
    let nodes: Vec<f64> = (0..=j_max).map(|j| spec.r_obs + j as f64 * dx).collect();
    let cn = unit_sphere_area(n);

    let face = |j: usize| spec.r_obs + (j as f64 + 0.5) * dx;
    let face_coeffs: Vec<f64> = (0..j_max).map(|j| cn * face(j).powi(n as i32 - 1) / dx).collect();

    let mut quad_weights = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let lo = if j == 0 { nodes[0] } else { face(j - 1) };
        let hi = if j == j_max { nodes[j_max] } else { face(j) };
        quad_weights.push(cn / n as f64 * pow_diff(hi, lo, n));
    }

    Ok(Arc::new(RadialGrid {
        spec,
        j_max,
        dx,
        nodes,
        quad_weights,
        face_coeffs,
    }))
}

/// One scalar field sampled on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    /// Set when an evaluation overflowed; consumed by the blow-up detector.
    pub overflowed: bool,
}

impl GridField {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        GridField {
            values: vec![0.0; grid.len()],
            grid: Arc::clone(grid),
            overflowed: false,
        }
    }

    pub fn from_values(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SdwError::usage(format!(
                "field length {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridField {
            grid: Arc::clone(grid),
            values,
            overflowed: false,
        })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: &Arc<RadialGrid>, mut f: impl FnMut(f64) -> f64) -> Self {
        GridField {
            values: grid.nodes.iter().map(|&r| f(r)).collect(),
            grid: Arc::clone(grid),
            overflowed: false,
        }
    }

    /// Samples `f(r)` at interior nodes and puts 0 on the two boundary nodes.
    pub fn dirichlet_from_fn(grid: &Arc<RadialGrid>, f: impl FnMut(f64) -> f64) -> Self {
        let mut field = Self::from_fn(grid, f);
        field.enforce_dirichlet();
        field
    }

    pub fn enforce_dirichlet(&mut self) {
        let last = self.values.len() - 1;
        self.values[0] = 0.0;
        self.values[last] = 0.0;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(j) => Err(SdwError::numeric(format!(
                "non-finite value {} at node {j}",
                self.values[j]
            ))),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            overflowed: self.overflowed,
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        GridField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            overflowed: self.overflowed || other.overflowed,
        }
    }

    pub fn add(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }
}

/// Quadrature of `g` over the truncated domain under the radial measure.
pub fn integrate(g: &GridField) -> Result<f64> {
    g.check_finite()?;
    Ok(integrate_unchecked(&g.grid, &g.values))
}

pub(crate) fn integrate_unchecked(grid: &RadialGrid, values: &[f64]) -> f64 {
    grid.quad_weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Weighted inner product `∫ f g dx`.
pub fn inner(f: &GridField, g: &GridField) -> f64 {
    f.grid
        .quad_weights
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

pub fn l2_norm(g: &GridField) -> Result<f64> {
    g.check_finite()?;
    Ok(l2_norm_sq_unchecked(g).sqrt())
}

pub(crate) fn l2_norm_sq_unchecked(g: &GridField) -> f64 {
    inner(g, g)
}

/// Squared L² norm of the radial derivative, with the derivative taken as a
/// centered difference at each cell face.
pub(crate) fn grad_norm_sq_unchecked(g: &GridField) -> f64 {
    let v = &g.values;
    g.grid
        .face_coeffs
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let d = v[j + 1] - v[j];
            a * d * d
        })
        .sum()
}

pub fn h1_seminorm(g: &GridField) -> Result<f64> {
    g.check_finite()?;
    Ok(grad_norm_sq_unchecked(g).sqrt())
}

/// `‖g‖_{L²} + ‖∂_r g‖_{L²}` (sum, not root-sum-square).
pub fn h1_norm(g: &GridField) -> Result<f64> {
    Ok(l2_norm(g)? + h1_seminorm(g)?)
}

pub(crate) fn h1_norm_unchecked(g: &GridField) -> f64 {
    l2_norm_sq_unchecked(g).sqrt() + grad_norm_sq_unchecked(g).sqrt()
}

/// Node-centered radial derivative (one-sided at the two ends).
pub fn radial_derivative(g: &GridField) -> GridField {
    let v = &g.values;
    let dx = g.grid.dx;
    let last = v.len() - 1;
    let values = (0..=last)
        .map(|j| match j {
            0 => (v[1] - v[0]) / dx,
            j if j == last => (v[last] - v[last - 1]) / dx,
            j => (v[j + 1] - v[j - 1]) / (2.0 * dx),
        })
        .collect();
    GridField {
        grid: Arc::clone(&g.grid),
        values,
        overflowed: g.overflowed,
    }
}
