//! Power nonlinearities `|u_t|^q`, `|u|^p + |u_t|^q` and `|u|^p`.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain_grid::{h1_norm_unchecked, l2_norm_sq_unchecked, GridField};
use crate::error::{Result, SdwError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinKind {
    /// `f = |u_t|^q`
    DerivativeOnly { q: f64 },
    /// `f = |u|^p + |u_t|^q`
    Mixed { p: f64, q: f64 },
    /// `f = |u|^p`
    PowerOnly { p: f64 },
    /// `f = 0`; the linear problem run through the semilinear machinery.
    Linear,
}

impl NonlinKind {
    pub fn p(&self) -> Option<f64> {
        match *self {
            NonlinKind::Mixed { p, .. } | NonlinKind::PowerOnly { p } => Some(p),
            _ => None,
        }
    }

    pub fn q(&self) -> Option<f64> {
        match *self {
            NonlinKind::Mixed { q, .. } | NonlinKind::DerivativeOnly { q } => Some(q),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NonlinKind::DerivativeOnly { .. } => "derivative",
            NonlinKind::Mixed { .. } => "mixed",
            NonlinKind::PowerOnly { .. } => "power",
            NonlinKind::Linear => "linear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in self.p().into_iter().chain(self.q()) {
            if !(e.is_finite() && e > 1.0) {
                return Err(SdwError::config(format!("exponent {e} must be a finite real > 1")));
            }
        }
        Ok(())
    }

    /// Whether the exponents satisfy `p, q ≤ n/(n−2)` (always true for n ≤ 2).
    pub fn satisfies_local_theory(&self, n: usize) -> bool {
        if n <= 2 {
            return true;
        }
        let cap = n as f64 / (n as f64 - 2.0);
        self.p().into_iter().chain(self.q()).all(|e| e <= cap)
    }

    /// Validates and warns when the local existence range is left.
    pub fn check_for_dimension(&self, n: usize) -> Result<bool> {
        self.validate()?;
        let ok = self.satisfies_local_theory(n);
        if !ok {
            warn!(
                "exponents of {:?} exceed n/(n-2) = {} for n = {n}; running anyway",
                self,
                n as f64 / (n as f64 - 2.0)
            );
        }
        Ok(ok)
    }

    #[inline]
    pub fn eval_point(&self, u: f64, v: f64) -> f64 {
        match *self {
            NonlinKind::DerivativeOnly { q } => v.abs().powf(q),
            NonlinKind::Mixed { p, q } => u.abs().powf(p) + v.abs().powf(q),
            NonlinKind::PowerOnly { p } => u.abs().powf(p),
            NonlinKind::Linear => 0.0,
        }
    }
}

/// Pointwise `f(u, v)`; zero on the boundary nodes. Overflow sets the field's flag.
pub fn eval_f(kind: &NonlinKind, u: &GridField, v: &GridField) -> GridField {
    let last = u.values.len() - 1;
    let mut overflowed = u.overflowed || v.overflowed;
    let values = u
        .values
        .iter()
        .zip(&v.values)
        .enumerate()
        .map(|(j, (&a, &b))| {
            if j == 0 || j == last {
                return 0.0;
            }
            let f = kind.eval_point(a, b);
            if !f.is_finite() {
                overflowed = true;
            }
            f
        })
        .collect();
    GridField {
        grid: u.grid.clone(),
        values,
        overflowed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerDifferenceReport {
    pub r: f64,
    pub samples: usize,
    /// `max ||x|^r − |y|^r| / (r |x−y| (|x|^{r−1} + |y|^{r−1}))`, with 0/0 read as 0.
    pub max_ratio: f64,
}

impl PowerDifferenceReport {
    pub fn passed(&self) -> bool {
        self.max_ratio <= 1.0
    }
}

/// `count` pairs uniform in `[-half_range, half_range]²` from a ChaCha8 stream.
pub fn seeded_pairs(seed: u64, count: usize, half_range: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(-half_range..=half_range),
                rng.gen_range(-half_range..=half_range),
            )
        })
        .collect()
}

pub fn power_difference_ratio(r: f64, x: f64, y: f64) -> f64 {
    let lhs = (x.abs().powf(r) - y.abs().powf(r)).abs();
    let rhs = r * (x - y).abs() * (x.abs().powf(r - 1.0) + y.abs().powf(r - 1.0));
    if rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn power_difference_bound_check(r: f64, samples: &[(f64, f64)]) -> Result<PowerDifferenceReport> {
    if !(r > 1.0) {
        return Err(SdwError::usage(format!("exponent r = {r} must exceed 1")));
    }
    let max_ratio = samples
        .iter()
        .map(|&(x, y)| power_difference_ratio(r, x, y))
        .fold(0.0, f64::max);
    Ok(PowerDifferenceReport {
        r,
        samples: samples.len(),
        max_ratio,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GnBoundReport {
    pub l2_f: f64,
    /// `‖u‖_{H¹}^p + ‖v‖_{H¹}^q` over the terms present in the nonlinearity.
    pub bound: f64,
    pub ratio: f64,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
}

/// Interpolation exponent `n(r−1)/(2r)`.
pub fn gn_sigma(n: usize, r: f64) -> f64 {
    n as f64 * (r - 1.0) / (2.0 * r)
}

pub fn gn_bound_report(kind: &NonlinKind, u: &GridField, v: &GridField) -> Result<GnBoundReport> {
    u.check_finite()?;
    v.check_finite()?;
    let n = u.grid.n();
    let f = eval_f(kind, u, v);
    let l2_f = l2_norm_sq_unchecked(&f).sqrt();
    let hu = h1_norm_unchecked(u);
    let hv = h1_norm_unchecked(v);
    let bound = kind.p().map_or(0.0, |p| hu.powf(p)) + kind.q().map_or(0.0, |q| hv.powf(q));
    let ratio = if bound == 0.0 { 0.0 } else { l2_f / bound };
    Ok(GnBoundReport {
        l2_f,
        bound,
        ratio,
        sigma1: kind.p().map(|p| gn_sigma(n, p)),
        sigma2: kind.q().map(|q| gn_sigma(n, q)),
    })
}
