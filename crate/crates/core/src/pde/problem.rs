use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::PdeData;
use crate::polybasis::{
    assemble_design, compute_preconditioner, legendre_derivs_1d, DesignOrder, MultiIndexSet,
};

/// Residual operator `F[u]` of the loss: `Lap u` or `Lap u + u (u^2 - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PdeKind {
    Poisson,
    AllenCahn,
}

impl PdeKind {
    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Poisson => "poisson",
            PdeKind::AllenCahn => "allen-cahn",
        }
    }

    /// `F[u]` given a value and its Laplacian.
    pub fn apply(self, u: f64, lap: f64) -> f64 {
        match self {
            PdeKind::Poisson => lap,
            PdeKind::AllenCahn => lap + u * (u * u - 1.0),
        }
    }
}

impl fmt::Display for PdeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PdeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "poisson" => Ok(PdeKind::Poisson),
            "allencahn" => Ok(PdeKind::AllenCahn),
            _ => Err(format!("unknown PDE `{s}` (expected poisson or allen-cahn)")),
        }
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A PDE on `[-1,1]^2` with known solution.
#[derive(Clone)]
pub struct PdeProblem {
    pub kind: PdeKind,
    pub exact: PointFn,
    /// Analytic Laplacian of `exact`.
    pub laplacian: PointFn,
    pub forcing: PointFn,
    pub boundary: PointFn,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl PdeProblem {
    pub fn dim(&self) -> usize {
        2
    }

    /// `F[u] - f` for the exact solution, evaluated with analytic derivatives.
    pub fn exact_residual(&self, x: &[f64]) -> f64 {
        self.kind.apply((self.exact)(x), (self.laplacian)(x)) - (self.forcing)(x)
    }
}

fn p10(z: f64) -> (f64, f64) {
    let t = legendre_derivs_1d(10, z);
    (t.values[10], t.second[10])
}

/// `u = P_10(x) P_10(y)`, `f = Lap u`, `g = u`.
pub fn manufactured_poisson() -> PdeProblem {
    let exact: PointFn = Arc::new(|x: &[f64]| p10(x[0]).0 * p10(x[1]).0);
    let laplacian: PointFn = Arc::new(|x: &[f64]| {
        let (px, qx) = p10(x[0]);
        let (py, qy) = p10(x[1]);
        qx * py + px * qy
    });
    PdeProblem {
        kind: PdeKind::Poisson,
        exact: exact.clone(),
        forcing: laplacian.clone(),
        laplacian,
        boundary: exact,
    }
}

fn allen_cahn_u(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    a.powi(3) * b.powi(3) + 5.0 * a * (2.0 * PI * a).cos() * (2.0 * PI * b).cos()
}

fn allen_cahn_lap(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let (cx, sx, cy) = ((2.0 * PI * a).cos(), (2.0 * PI * a).sin(), (2.0 * PI * b).cos());
    6.0 * a * b.powi(3) + 6.0 * a.powi(3) * b - 40.0 * PI * PI * a * cx * cy - 20.0 * PI * sx * cy
}

/// `u = x^3 y^3 + 5 x cos(2 pi x) cos(2 pi y)`, `f = Lap u + u (u^2 - 1)`.
pub fn manufactured_allen_cahn() -> PdeProblem {
    let exact: PointFn = Arc::new(allen_cahn_u);
    PdeProblem {
        kind: PdeKind::AllenCahn,
        exact: exact.clone(),
        laplacian: Arc::new(allen_cahn_lap),
        forcing: Arc::new(|x: &[f64]| {
            let u = allen_cahn_u(x);
            allen_cahn_lap(x) + u * (u * u - 1.0)
        }),
        boundary: exact,
    }
}

fn eval_rows(f: &PointFn, points: ArrayView2<f64>) -> Array1<f64> {
    points.rows().into_iter().map(|r| f(r.to_vec().as_slice())).collect()
}

/// Boundary data, forcing and (when `basis` is given) design bundles for a
/// physics-informed fit. Preconditioners are computed per point set.
pub fn pde_data(
    problem: &PdeProblem,
    basis: Option<&MultiIndexSet>,
    boundary: ArrayView2<f64>,
    collocation: ArrayView2<f64>,
    preconditioned: bool,
) -> Result<PdeData<f64>> {
    let (bd, cd) = match basis {
        Some(basis) => {
            let mut b = assemble_design(basis, boundary, DesignOrder::Values)?;
            let mut c = assemble_design(basis, collocation, DesignOrder::Laplacian)?;
            if preconditioned {
                b = compute_preconditioner(b, basis)?;
                c = compute_preconditioner(c, basis)?;
            }
            (Some(b), Some(c))
        }
        None => (None, None),
    };
    PdeData::new(
        boundary.to_owned(),
        eval_rows(&problem.boundary, boundary),
        bd,
        collocation.to_owned(),
        eval_rows(&problem.forcing, collocation),
        cd,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn fd_laplacian(f: &PointFn, x: &[f64], h: f64) -> f64 {
        let mut total = 0.0;
        for j in 0..2 {
            let at = |k: f64| {
                let mut p = x.to_vec();
                p[j] += k * h;
                f(&p)
            };
            total += (-at(2.0) + 16.0 * at(1.0) - 30.0 * f(x) + 16.0 * at(-1.0) - at(-2.0))
                / (12.0 * h * h);
        }
        total
    }

    #[test]
    fn poisson_corner_values() {
        let p = manufactured_poisson();
        assert_eq!((p.exact)(&[1.0, 1.0]), 1.0);
        let d2 = 10.0 * 11.0 * (10.0 * 11.0 - 2.0) / 8.0;
        assert!(((p.forcing)(&[1.0, 1.0]) - 2.0 * d2).abs() < 1e-9);
    }

    #[test]
    fn allen_cahn_values() {
        let p = manufactured_allen_cahn();
        for y in [-0.7, 0.0, 0.3, 1.0] {
            assert_eq!((p.exact)(&[0.0, y]), 0.0);
        }
        assert!(((p.exact)(&[1.0, 1.0]) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn forcing_matches_fd_laplacian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for problem in [manufactured_poisson(), manufactured_allen_cahn()] {
            for _ in 0..50 {
                let x = [rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95)];
                let fd = fd_laplacian(&problem.exact, &x, 1e-3);
                let lap = (problem.laplacian)(&x);
                assert!((fd - lap).abs() <= 1e-5 * (1.0 + lap.abs()), "{fd} vs {lap}");
                let fd_res = problem.kind.apply((problem.exact)(&x), fd) - (problem.forcing)(&x);
                assert!(fd_res.abs() <= 1e-5 * (1.0 + lap.abs()));
                assert!(problem.exact_residual(&x).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn parse_kind() {
        assert_eq!("allen_cahn".parse::<PdeKind>().unwrap(), PdeKind::AllenCahn);
        assert_eq!("Poisson".parse::<PdeKind>().unwrap(), PdeKind::Poisson);
        assert!("heat".parse::<PdeKind>().is_err());
    }
}
