use ndarray::{Array1, Array2, ArrayView2};

use super::legendre::fill_legendre_derivs;
use super::multi_index::MultiIndexSet;
use crate::error::{config_err, PannError, Result};
use crate::scalar::Scalar;

/// Derivative content requested when assembling a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignOrder {
    Values,
    /// Values, first partials and Laplacians.
    Laplacian,
}

/// Basis evaluations at a fixed point set, precomputed once before training.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBundle<F> {
    /// `n x m` basis values.
    pub phi: Array2<F>,
    /// One `n x m` matrix of first partials per input dimension.
    pub dphi: Option<Vec<Array2<F>>>,
    /// `n x m` Laplacians of the basis functions.
    pub lap_phi: Option<Array2<F>>,
    /// Diagonal preconditioner `K(x_i)`, one entry per row.
    pub precond: Option<Array1<F>>,
}

impl<F: Scalar> DesignBundle<F> {
    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn cols(&self) -> usize {
        self.phi.ncols()
    }

    /// Stacks two bundles row-wise, keeping only components present in both.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.cols() {
            return Err(config_err!(
                "cannot stack designs with {} and {} columns",
                self.cols(),
                other.cols()
            ));
        }
        let cat = |a: &Array2<F>, b: &Array2<F>| {
            ndarray::concatenate(ndarray::Axis(0), &[a.view(), b.view()]).expect("matching columns")
        };
        let dphi = match (&self.dphi, &other.dphi) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| cat(x, y)).collect()),
            _ => None,
        };
        let lap_phi = match (&self.lap_phi, &other.lap_phi) {
            (Some(a), Some(b)) => Some(cat(a, b)),
            _ => None,
        };
        let precond = match (&self.precond, &other.precond) {
            (Some(a), Some(b)) => Some(
                ndarray::concatenate(ndarray::Axis(0), &[a.view(), b.view()])
                    .expect("1-d concat"),
            ),
            _ => None,
        };
        Ok(DesignBundle {
            phi: cat(&self.phi, &other.phi),
            dphi,
            lap_phi,
            precond,
        })
    }
}

/// Evaluates every basis function (active or not) at every point.
pub fn assemble_design<F: Scalar>(
    basis: &MultiIndexSet,
    points: ArrayView2<F>,
    order: DesignOrder,
) -> Result<DesignBundle<F>> {
    let d = basis.dim();
    if points.ncols() != d {
        return Err(config_err!(
            "points have {} columns but the basis is {}-dimensional",
            points.ncols(),
            d
        ));
    }
    if basis.is_empty() {
        return Err(config_err!("cannot assemble a design for an empty basis"));
    }
    let outside = points.iter().filter(|&&x| x.abs() > F::one()).count();
    if outside > 0 {
        log::warn!("{outside} coordinates lie outside [-1, 1]; Legendre bases are extrapolated");
    }

    let n = points.nrows();
    let m = basis.len();
    let maxdeg = basis.max_degree_per_dim();
    let with_derivs = order == DesignOrder::Laplacian;

    let mut phi = Array2::<F>::zeros((n, m));
    let mut dphi = with_derivs.then(|| vec![Array2::<F>::zeros((n, m)); d]);
    let mut lap = with_derivs.then(|| Array2::<F>::zeros((n, m)));

    let mut vals: Vec<Vec<F>> = maxdeg.iter().map(|&k| vec![F::zero(); k as usize + 1]).collect();
    let mut d1 = vals.clone();
    let mut d2 = vals.clone();

    for i in 0..n {
        for j in 0..d {
            fill_legendre_derivs(points[[i, j]], &mut vals[j], &mut d1[j], &mut d2[j]);
        }
        for (k, idx) in basis.indices().iter().enumerate() {
            let deg = idx.degrees();
            let mut prod = F::one();
            for (j, &kj) in deg.iter().enumerate() {
                prod = prod * vals[j][kj as usize];
            }
            phi[[i, k]] = prod;
            if let (Some(dphi), Some(lap)) = (dphi.as_mut(), lap.as_mut()) {
                let mut lap_ik = F::zero();
                for j in 0..d {
                    let mut rest = F::one();
                    for (l, &kl) in deg.iter().enumerate() {
                        if l != j {
                            rest = rest * vals[l][kl as usize];
                        }
                    }
                    dphi[j][[i, k]] = d1[j][deg[j] as usize] * rest;
                    lap_ik = lap_ik + d2[j][deg[j] as usize] * rest;
                }
                lap[[i, k]] = lap_ik;
            }
        }
    }

    Ok(DesignBundle {
        phi,
        dphi,
        lap_phi: lap,
        precond: None,
    })
}

/// Fills `K(x_i) = sqrt(m / sum_k phi_k(x_i)^2)` over the active columns.
pub fn compute_preconditioner<F: Scalar>(
    mut bundle: DesignBundle<F>,
    basis: &MultiIndexSet,
) -> Result<DesignBundle<F>> {
    if bundle.cols() != basis.len() {
        return Err(config_err!(
            "design has {} columns but the basis has {} indices",
            bundle.cols(),
            basis.len()
        ));
    }
    let m_active = F::of_usize(basis.active_count());
    let mut precond = Array1::<F>::zeros(bundle.rows());
    for (i, row) in bundle.phi.rows().into_iter().enumerate() {
        let energy: F = row
            .iter()
            .zip(basis.active())
            .filter(|(_, &a)| a)
            .map(|(&p, _)| p * p)
            .sum();
        if !(energy > F::zero()) {
            return Err(PannError::Internal(format!(
                "row {i} has zero basis energy; preconditioner undefined"
            )));
        }
        precond[i] = (m_active / energy).sqrt();
    }
    bundle.precond = Some(precond);
    Ok(bundle)
}
