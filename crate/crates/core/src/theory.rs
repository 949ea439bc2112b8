//! Exponent regions for which finite-time blow-up is known, and the constants
//! that delimit them. Pure functions only.

use serde::Serialize;

use crate::error::{Result, SdwError};
use crate::nonlinearity::NonlinKind;

/// Distance from a closed boundary below which a point is flagged.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    /// Whether the threshold itself belongs to the region.
    pub inclusive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    /// `(1 + √17)/4`, positive root of `2α² − α − 2`.
    pub alpha1: f64,
    /// `(1 + √5)/2`, positive root of `α² − α − 1`.
    pub alpha2: f64,
    pub alpha1_residual: f64,
    pub alpha2_residual: f64,
}

pub fn constants() -> TheoryConstants {
    let alpha1 = (1.0 + 17f64.sqrt()) / 4.0;
    let alpha2 = (1.0 + 5f64.sqrt()) / 2.0;
    TheoryConstants {
        alpha1,
        alpha2,
        alpha1_residual: (2.0 * alpha1 * alpha1 - alpha1 - 2.0).abs(),
        alpha2_residual: (alpha2 * alpha2 - alpha2 - 1.0).abs(),
    }
}

/// Largest derivative exponent `q` covered in dimension `n`.
pub fn q_crit(n: usize) -> Threshold {
    match n {
        1 => Threshold {
            value: 1.0 + 1.0 / (1.0 + 5f64.sqrt()),
            inclusive: true,
        },
        2 => Threshold {
            value: 1.5,
            inclusive: false,
        },
        _ => Threshold {
            value: 1.0 + 1.0 / n as f64,
            inclusive: true,
        },
    }
}

/// Largest power exponent `p` covered by the mixed result in dimension `n ≥ 2`.
pub fn p_crit(n: usize) -> Option<Threshold> {
    match n {
        0 | 1 => None,
        2 => Some(Threshold {
            value: 3.0,
            inclusive: false,
        }),
        _ => Some(Threshold {
            value: 1.0 + 2.0 / (n as f64 - 1.0),
            inclusive: true,
        }),
    }
}

fn below(x: f64, t: Threshold) -> bool {
    if t.inclusive {
        x <= t.value
    } else {
        x < t.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Within `BOUNDARY_TOL` of a threshold.
    pub boundary: bool,
    /// On a threshold that the result excludes (left open).
    pub open_boundary: bool,
}

pub fn in_blowup_region_derivative(n: usize, q: f64) -> Result<Membership> {
    check_dimension(n)?;
    check_exponent(q)?;
    let t = q_crit(n);
    let boundary = (q - t.value).abs() <= BOUNDARY_TOL;
    Ok(Membership {
        member: below(q, t),
        boundary,
        open_boundary: boundary && !t.inclusive,
    })
}

/// Which listed condition of the mixed result certifies membership.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Witness {
    /// n = 1: `p ≤ 1 + α₁`.
    PowerAlone,
    /// n = 1: `p ≤ (2α+1)/(2α−1)`, `q ≤ (α+1)/2` with `α ≤ α₁`.
    LowAlpha { alpha: f64 },
    /// n = 1: `p ≤ α + 1`, `q ≤ (2α+1)/(2α)` with `α₁ ≤ α ≤ α₂`.
    HighAlpha { alpha: f64 },
    /// n = 1: `q ≤ (1 + α₂)/2`.
    DerivativeAlone,
    /// n ≥ 2: the power threshold.
    Power,
    /// n ≥ 2: the derivative threshold.
    Derivative,
}

impl Witness {
    pub fn label(&self) -> &'static str {
        match self {
            Witness::PowerAlone => "power_alone",
            Witness::LowAlpha { .. } => "low_alpha",
            Witness::HighAlpha { .. } => "high_alpha",
            Witness::DerivativeAlone => "derivative_alone",
            Witness::Power => "power",
            Witness::Derivative => "derivative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedMembership {
    pub member: bool,
    pub witness: Option<Witness>,
    pub boundary: bool,
    pub open_boundary: bool,
}

/// Mixed-region membership without boundary classification.
fn mixed_witness(n: usize, p: f64, q: f64) -> Option<Witness> {
    if n >= 2 {
        let pc = p_crit(n).expect("n >= 2");
        if below(p, pc) {
            return Some(Witness::Power);
        }
        if below(q, q_crit(n)) {
            return Some(Witness::Derivative);
        }
        return None;
    }
    let c = constants();
    if p <= 1.0 + c.alpha1 {
        return Some(Witness::PowerAlone);
    }
    // q ≤ (α+1)/2 forces α ≥ 2q − 1 > 1; the p bound decreases in α
    let a = 2.0 * q - 1.0;
    if a <= c.alpha1 && p <= (2.0 * a + 1.0) / (2.0 * a - 1.0) {
        return Some(Witness::LowAlpha { alpha: a });
    }
    // p ≤ α + 1 forces α ≥ p − 1; the q bound decreases in α
    let a = (p - 1.0).max(c.alpha1);
    if a <= c.alpha2 && q <= (2.0 * a + 1.0) / (2.0 * a) {
        return Some(Witness::HighAlpha { alpha: a });
    }
    if q <= (1.0 + c.alpha2) / 2.0 {
        return Some(Witness::DerivativeAlone);
    }
    None
}

pub fn in_blowup_region_mixed(n: usize, p: f64, q: f64) -> Result<MixedMembership> {
    check_dimension(n)?;
    check_exponent(p)?;
    check_exponent(q)?;
    let witness = mixed_witness(n, p, q);
    let e = BOUNDARY_TOL;
    let inside = mixed_witness(n, p - e, q - e).is_some();
    let outside = mixed_witness(n, p + e, q + e).is_some();
    let boundary = inside != outside;
    Ok(MixedMembership {
        member: witness.is_some(),
        witness,
        boundary,
        open_boundary: boundary && n == 2,
    })
}

/// Membership for either family; `Linear` has no blow-up result.
pub fn in_blowup_region(n: usize, kind: &NonlinKind) -> Result<bool> {
    match *kind {
        NonlinKind::DerivativeOnly { q } => Ok(in_blowup_region_derivative(n, q)?.member),
        NonlinKind::Mixed { p, q } => Ok(in_blowup_region_mixed(n, p, q)?.member),
        NonlinKind::PowerOnly { .. } | NonlinKind::Linear => Ok(false),
    }
}

/// Literal scan of the α-families on `m` equispaced points of `[1, α₂]`,
/// with `α₁` and `α₂` appended so the closed intervals are represented.
pub fn brute_force_mixed_1d(p: f64, q: f64, m: usize) -> bool {
    let c = constants();
    if p <= 1.0 + c.alpha1 || q <= (1.0 + c.alpha2) / 2.0 {
        return true;
    }
    let step = (c.alpha2 - 1.0) / m as f64;
    let alphas = (1..=m).map(|i| 1.0 + i as f64 * step).chain([c.alpha1, c.alpha2]);
    for a in alphas {
        if a <= c.alpha1 && p <= (2.0 * a + 1.0) / (2.0 * a - 1.0) && q <= (a + 1.0) / 2.0 {
            return true;
        }
        if a >= c.alpha1 && a <= c.alpha2 && p <= a + 1.0 && q <= (2.0 * a + 1.0) / (2.0 * a) {
            return true;
        }
    }
    false
}

/// Upper edge of the region in the (p, q) plane, `q_max(p)` capped at `q_cap`,
/// found by bisection on membership.
pub fn region_polyline(n: usize, family: &str, p_grid: &[f64], q_cap: f64) -> Result<Vec<(f64, f64)>> {
    check_dimension(n)?;
    if !(q_cap > 1.0) {
        return Err(SdwError::usage("q_cap must exceed 1"));
    }
    let member = |p: f64, q: f64| -> Result<bool> {
        match family {
            "derivative" => Ok(in_blowup_region_derivative(n, q)?.member),
            "mixed" => Ok(in_blowup_region_mixed(n, p, q)?.member),
            other => Err(SdwError::usage(format!("unknown family {other:?}"))),
        }
    };
    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        check_exponent(p)?;
        if member(p, q_cap)? {
            out.push((p, q_cap));
            continue;
        }
        let (mut lo, mut hi) = (1.0, q_cap);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if member(p, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((p, lo));
    }
    Ok(out)
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(SdwError::usage("dimension must be >= 1"));
    }
    Ok(())
}

fn check_exponent(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 1.0) {
        return Err(SdwError::usage(format!("exponent {x} must be finite and > 1")));
    }
    Ok(())
}
