use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2};

use super::quadrature::QuadratureRule;
use crate::error::{config_err, PannError, Result};
use crate::polybasis::{assemble_design, compute_preconditioner, DesignOrder, MultiIndexSet};

/// Relative singular-value cutoff below which the projection is rejected.
const RANK_TOL: f64 = 1e-13;

/// `||truth - pred|| / ||truth||`.
pub fn relative_l2_error(pred: ArrayView1<f64>, truth: ArrayView1<f64>) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(config_err!("{} predictions for {} targets", pred.len(), truth.len()));
    }
    let norm = truth.dot(&truth).sqrt();
    if !(norm > 0.0) {
        return Err(config_err!("relative error undefined for a zero reference"));
    }
    let diff = &truth - &pred;
    Ok(diff.dot(&diff).sqrt() / norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coeffs: Array1<f64>,
    /// Relative error on the supplied test points.
    pub rel_l2: f64,
}

/// Quadrature-weighted least-squares fit of `target` on the active columns of
/// `basis`. With `preconditioned` each node is additionally weighted by
/// `K(x)^2`. The system is solved by SVD; rank deficiency is an error.
pub fn l2_projection(
    target: &dyn Fn(&[f64]) -> f64,
    basis: &MultiIndexSet,
    rule: &QuadratureRule,
    preconditioned: bool,
    test_points: ArrayView2<f64>,
) -> Result<Projection> {
    if rule.nodes.ncols() != basis.dim() {
        return Err(config_err!(
            "{}-dimensional rule for a {}-dimensional basis",
            rule.nodes.ncols(),
            basis.dim()
        ));
    }
    let mut design = assemble_design(basis, rule.nodes.view(), DesignOrder::Values)?;
    if preconditioned {
        design = compute_preconditioner(design, basis)?;
    }
    let cols: Vec<usize> = (0..basis.len()).filter(|&k| basis.is_active(k)).collect();
    let nq = rule.len();
    let mut a = DMatrix::<f64>::zeros(nq, cols.len());
    let mut rhs = DVector::<f64>::zeros(nq);
    for q in 0..nq {
        let k = design.precond.as_ref().map_or(1.0, |p| p[q]);
        let s = rule.weights[q].sqrt() * k;
        let x = rule.nodes.row(q);
        rhs[q] = s * target(x.as_slice().expect("row-major"));
        for (c, &col) in cols.iter().enumerate() {
            a[(q, c)] = s * design.phi[[q, col]];
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if cols.len() > nq || !(smin > RANK_TOL * smax) {
        return Err(PannError::Singular(format!(
            "projection system is rank deficient (sigma_min / sigma_max = {:.3e}, {} nodes, {} columns)",
            if smax > 0.0 { smin / smax } else { 0.0 },
            nq,
            cols.len()
        )));
    }
    let sol = svd
        .solve(&rhs, RANK_TOL * smax)
        .map_err(|e| PannError::Singular(e.to_string()))?;
    let mut coeffs = Array1::zeros(basis.len());
    for (c, &col) in cols.iter().enumerate() {
        coeffs[col] = sol[c];
    }

    let test = assemble_design(basis, test_points, DesignOrder::Values)?;
    let pred = test.phi.dot(&coeffs);
    let truth: Array1<f64> = test_points
        .rows()
        .into_iter()
        .map(|r| target(r.to_vec().as_slice()))
        .collect();
    let rel_l2 = relative_l2_error(pred.view(), truth.view())?;
    Ok(Projection { coeffs, rel_l2 })
}
