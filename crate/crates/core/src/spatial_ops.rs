//! Discrete radial operators.
//!
//! The Laplacian is written in conservative form
//! `Δ_h g_j = [a_{j+1/2}(g_{j+1} − g_j) − a_{j−1/2}(g_j − g_{j−1})] / w_j`
//! with face coefficients `a` and dual-cell weights `w` from the grid. Rows 0
//! and `j_max` are Dirichlet rows and produce 0.

use std::sync::Arc;

use crate::domain_grid::{GridField, RadialGrid};
use crate::error::{Result, SdwError};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Three-band matrix stored by diagonals; `lower[0]` and `upper[len-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn identity(len: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; len],
            diag: vec![1.0; len],
            upper: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Forward-elimination factors for repeated solves.
    pub fn factor(&self) -> Result<TridiagonalFactors> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let denom = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * prev_c
            };
            if !(denom.abs() >= PIVOT_FLOOR) {
                return Err(SdwError::Singular { row: i, pivot: denom });
            }
            inv_denom[i] = 1.0 / denom;
            c[i] = if i + 1 < n { self.upper[i] * inv_denom[i] } else { 0.0 };
            prev_c = c[i];
        }
        Ok(TridiagonalFactors {
            lower: self.lower.clone(),
            c,
            inv_denom,
        })
    }
}

/// Thomas-algorithm factors of a [`Tridiagonal`].
#[derive(Debug, Clone)]
pub struct TridiagonalFactors {
    lower: Vec<f64>,
    c: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl TridiagonalFactors {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }
}

/// Solves `A x = rhs` by elimination.
pub fn solve_tridiagonal(a: &Tridiagonal, rhs: &GridField) -> Result<GridField> {
    if a.len() != rhs.values.len() {
        return Err(SdwError::usage("system and right-hand side differ in length"));
    }
    rhs.check_finite()?;
    let f = a.factor()?;
    let mut x = rhs.values.clone();
    f.solve_in_place(&mut x);
    GridField::from_values(&rhs.grid, x)
}

#[derive(Debug, Clone)]
pub struct LaplacianStencil {
    pub grid: Arc<RadialGrid>,
    pub matrix: Tridiagonal,
}

impl LaplacianStencil {
    pub fn new(grid: &Arc<RadialGrid>) -> Self {
        let len = grid.len();
        let mut m = Tridiagonal {
            lower: vec![0.0; len],
            diag: vec![0.0; len],
            upper: vec![0.0; len],
        };
        for j in 1..grid.j_max {
            let w = grid.quad_weights[j];
            let a_lo = grid.face_coeffs[j - 1];
            let a_hi = grid.face_coeffs[j];
            m.lower[j] = a_lo / w;
            m.upper[j] = a_hi / w;
            m.diag[j] = -(a_lo + a_hi) / w;
        }
        LaplacianStencil {
            grid: Arc::clone(grid),
            matrix: m,
        }
    }

    pub fn apply(&self, g: &GridField) -> Result<GridField> {
        g.check_finite()?;
        Ok(self.apply_unchecked(g))
    }

    pub(crate) fn apply_unchecked(&self, g: &GridField) -> GridField {
        let mut out = self.matrix.mul_vec(&g.values);
        out[0] = 0.0;
        let last = out.len() - 1;
        out[last] = 0.0;
        GridField {
            grid: Arc::clone(&g.grid),
            values: out,
            overflowed: g.overflowed,
        }
    }

    /// `I − c Δ_h` with identity rows on the boundary nodes.
    pub fn shifted_identity(&self, c: f64) -> Tridiagonal {
        let len = self.matrix.len();
        let mut a = Tridiagonal::identity(len);
        for j in 1..len - 1 {
            a.lower[j] = -c * self.matrix.lower[j];
            a.diag[j] = 1.0 - c * self.matrix.diag[j];
            a.upper[j] = -c * self.matrix.upper[j];
        }
        a
    }
}

pub fn apply_laplacian(s: &LaplacianStencil, g: &GridField) -> Result<GridField> {
    s.apply(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{build_grid, inner, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, j: usize) -> Arc<RadialGrid> {
        let r_obs = if n == 1 { 0.0 } else { 1.0 };
        build_grid(DomainSpec::new(n, r_obs, r_obs + 6.0).unwrap(), j).unwrap()
    }

    #[test]
    fn zero_and_constants() {
        for n in 1..=4 {
            let g = grid(n, 40);
            let s = LaplacianStencil::new(&g);
            assert!(s.apply(&GridField::zeros(&g)).unwrap().values.iter().all(|&v| v == 0.0));
            let c = GridField::from_fn(&g, |_| 3.7);
            let lc = s.apply(&c).unwrap();
            for j in 1..g.j_max {
                assert!(lc.values[j].abs() < 1e-12, "n={n} j={j} {}", lc.values[j]);
            }
        }
    }

    #[test]
    fn quadratic_is_exact_in_1d() {
        let g = build_grid(DomainSpec::new(1, 0.0, 10.0).unwrap(), 50).unwrap();
        let s = LaplacianStencil::new(&g);
        let q = GridField::from_fn(&g, |x| x * (10.0 - x));
        let lq = s.apply(&q).unwrap();
        for j in 1..g.j_max {
            assert!((lq.values[j] + 2.0).abs() < 1e-10);
        }
        assert_eq!(lq.values[0], 0.0);
        assert_eq!(lq.values[g.j_max], 0.0);
    }

    #[test]
    fn second_order_against_analytic_laplacian_3d() {
        // g = φ₀ · bump with φ₀ = 1 − 1/r; Δg computed symbolically below.
        let bump = |r: f64| (-4.0 * (r - 3.0).powi(2)).exp();
        let g_fn = |r: f64| (1.0 - 1.0 / r) * bump(r);
        let lap = |r: f64| {
            let p = 1.0 - 1.0 / r;
            let dp = 1.0 / (r * r);
            let b = bump(r);
            let db = -8.0 * (r - 3.0) * b;
            let d2b = (64.0 * (r - 3.0).powi(2) - 8.0) * b;
            // Δ(p b) = p Δb + 2 p' b' (p harmonic)
            p * (d2b + 2.0 / r * db) + 2.0 * dp * db
        };
        let err = |j: usize| {
            let g = build_grid(DomainSpec::new(3, 1.0, 7.0).unwrap(), j).unwrap();
            let s = LaplacianStencil::new(&g);
            let f = GridField::dirichlet_from_fn(&g, g_fn);
            let lf = s.apply(&f).unwrap();
            (1..g.j_max)
                .map(|i| (lf.values[i] - lap(g.nodes[i])).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(200) / err(400)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn self_adjoint_and_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            let g = grid(n, 64);
            let s = LaplacianStencil::new(&g);
            for _ in 0..10 {
                let f = GridField::dirichlet_from_fn(&g, |_| rng.gen_range(-1.0..1.0));
                let h = GridField::dirichlet_from_fn(&g, |_| rng.gen_range(-1.0..1.0));
                let a = inner(&s.apply(&f).unwrap(), &h);
                let b = inner(&f, &s.apply(&h).unwrap());
                assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()));
                assert!(inner(&s.apply(&f).unwrap(), &f) <= 0.0);
            }
        }
    }

    #[test]
    fn identity_solve() {
        let g = grid(1, 20);
        let rhs = GridField::from_fn(&g, |x| x.sin());
        let x = solve_tridiagonal(&Tridiagonal::identity(g.len()), &rhs).unwrap();
        assert_eq!(x.values, rhs.values);
    }

    #[test]
    fn random_dominant_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = grid(1, 100);
        for _ in 0..20 {
            let n = g.len();
            let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n)
                .map(|i| lower[i].abs() + upper[i].abs() + rng.gen_range(0.1..2.0))
                .collect();
            let a = Tridiagonal { lower, diag, upper };
            let rhs = GridField::from_fn(&g, |_| rng.gen_range(-5.0..5.0));
            let x = solve_tridiagonal(&a, &rhs).unwrap();
            let back = a.mul_vec(&x.values);
            let res = back
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(res <= 1e-10 * rhs.max_abs());
        }
    }

    #[test]
    fn implicit_step_matrix_solve() {
        let g = grid(3, 120);
        let s = LaplacianStencil::new(&g);
        let dt = 1e-3;
        let a = s.shifted_identity(dt * 0.5 + dt * dt * 0.25);
        let rhs = GridField::dirichlet_from_fn(&g, |r| (r - 1.0).sin() * (7.0 - r));
        let x = solve_tridiagonal(&a, &rhs).unwrap();
        let back = a.mul_vec(&x.values);
        let res = back
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(res <= 1e-10 * rhs.max_abs());
    }

    #[test]
    fn singular_pivot_is_reported() {
        let g = grid(1, 20);
        let mut a = Tridiagonal::identity(g.len());
        a.diag[4] = 0.0;
        let rhs = GridField::from_fn(&g, |_| 1.0);
        assert!(matches!(
            solve_tridiagonal(&a, &rhs),
            Err(SdwError::Singular { row: 4, .. })
        ));
    }
}
