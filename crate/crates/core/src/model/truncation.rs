use serde::{Deserialize, Serialize};

use super::pann::PannModel;
use crate::polybasis::MultiIndex;
use crate::scalar::Scalar;

/// Cumulative masking state after a truncation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    /// Share of network output coefficients masked, in percent.
    pub pct_nn_truncated: f64,
    /// Share of polynomial coefficients masked, in percent.
    pub pct_poly_truncated: f64,
    pub surviving_poly_indices: Vec<MultiIndex>,
}

fn pct(masked: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * masked as f64 / total as f64
    }
}

/// Masks every output or polynomial coefficient with `|c| < t` and zeroes
/// it. Masks only ever grow; `t = 0` truncates nothing.
pub fn truncate<F: Scalar>(model: &mut PannModel<F>, t: f64) -> TruncationReport {
    let thr = F::of(t);
    let mut pct_nn = 0.0;
    if let Some(net) = model.mlp.as_mut() {
        let p = &mut net.params;
        for (v, on) in p.output.iter_mut().zip(p.output_mask.iter_mut()) {
            if *on && v.abs() < thr {
                *on = false;
            }
            if !*on {
                *v = F::zero();
            }
        }
        let off = p.output_mask.iter().filter(|&&m| !m).count();
        pct_nn = pct(off, p.output_mask.len());
    }
    let mut pct_poly = 0.0;
    let mut survivors = Vec::new();
    if let Some(poly) = model.poly.as_mut() {
        for k in 0..poly.coeffs.len() {
            if poly.basis.is_active(k) && poly.coeffs[k].abs() < thr {
                poly.basis.deactivate(k);
            }
            if !poly.basis.is_active(k) {
                poly.coeffs[k] = F::zero();
            }
        }
        let m = poly.basis.len();
        pct_poly = pct(m - poly.basis.active_count(), m);
        survivors = poly.basis.active_indices().cloned().collect();
    }
    TruncationReport {
        pct_nn_truncated: pct_nn,
        pct_poly_truncated: pct_poly,
        surviving_poly_indices: survivors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolyLayer;
    use crate::polybasis::{enumerate_indices, BasisSpec};
    use ndarray::array;

    fn poly_model(c: [f64; 3]) -> PannModel<f64> {
        let basis = enumerate_indices(BasisSpec::total_degree(1, 2));
        let mut poly = PolyLayer::zeros(basis);
        poly.coeffs = array![c[0], c[1], c[2]];
        PannModel::new(None, Some(poly)).unwrap()
    }

    #[test]
    fn drops_small_coefficient() {
        let mut m = poly_model([0.5, 5e-5, 0.2]);
        let r = truncate(&mut m, 1e-4);
        assert_eq!(r.surviving_poly_indices, vec![MultiIndex(vec![0]), MultiIndex(vec![2])]);
        assert!((r.pct_poly_truncated - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.poly.unwrap().coeffs.to_vec(), vec![0.5, 0.0, 0.2]);
    }

    #[test]
    fn zero_threshold_is_noop() {
        let mut m = poly_model([0.0, 5e-5, 0.2]);
        let r = truncate(&mut m, 0.0);
        assert_eq!(r.pct_poly_truncated, 0.0);
        assert_eq!(r.surviving_poly_indices.len(), 3);
    }

    #[test]
    fn masks_never_reenable() {
        let mut m = poly_model([0.5, 5e-5, 0.2]);
        truncate(&mut m, 1e-4);
        m.poly.as_mut().unwrap().coeffs[1] = 3.0;
        let r = truncate(&mut m, 1e-4);
        assert_eq!(r.surviving_poly_indices.len(), 2);
        assert_eq!(m.poly.unwrap().coeffs[1], 0.0);
    }
}
