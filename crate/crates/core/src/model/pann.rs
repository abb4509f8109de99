use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::network::{forward_features, MlpConfig, MlpGrad, MlpParams};
use crate::polybasis::{DesignBundle, MultiIndexSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPart<F> {
    pub config: MlpConfig,
    pub params: MlpParams<F>,
}

/// Polynomial layer: coefficients over a basis whose active mask doubles as
/// the truncation mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyLayer<F> {
    pub basis: MultiIndexSet,
    pub coeffs: Array1<F>,
}

impl<F: Scalar> PolyLayer<F> {
    pub fn zeros(basis: MultiIndexSet) -> Self {
        let coeffs = Array1::zeros(basis.len());
        PolyLayer { basis, coeffs }
    }

    pub fn mask(&self) -> &[bool] {
        self.basis.active()
    }

    pub fn masked_coeffs(&self) -> Array1<F> {
        let mut b = self.coeffs.clone();
        for (v, &m) in b.iter_mut().zip(self.basis.active()) {
            if !m {
                *v = F::zero();
            }
        }
        b
    }
}

/// `u(x) = N(x) + P(x)`. Either part may be absent: no network gives the
/// standalone polynomial layer, no polynomial layer gives a plain network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PannModel<F> {
    pub mlp: Option<NetworkPart<F>>,
    pub poly: Option<PolyLayer<F>>,
}

impl<F: Scalar> PannModel<F> {
    pub fn new(mlp: Option<NetworkPart<F>>, poly: Option<PolyLayer<F>>) -> Result<Self> {
        let model = PannModel { mlp, poly };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mlp.is_none() && self.poly.is_none() {
            return Err(config_err!("model needs a network, a polynomial layer, or both"));
        }
        if let Some(net) = &self.mlp {
            net.config.validate()?;
        }
        if let (Some(net), Some(poly)) = (&self.mlp, &self.poly) {
            if net.config.input_dim != poly.basis.dim() {
                return Err(config_err!(
                    "network input dimension {} differs from basis dimension {}",
                    net.config.input_dim,
                    poly.basis.dim()
                ));
            }
        }
        if let Some(poly) = &self.poly {
            if poly.coeffs.len() != poly.basis.len() {
                return Err(config_err!("polynomial coefficient count does not match basis"));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match (&self.mlp, &self.poly) {
            (Some(n), _) => n.config.input_dim,
            (None, Some(p)) => p.basis.dim(),
            (None, None) => 0,
        }
    }

    /// Feature count `w` (0 without a network).
    pub fn width(&self) -> usize {
        self.mlp.as_ref().map_or(0, |n| n.config.feature_count())
    }

    /// Basis cardinality `m` (0 without a polynomial layer).
    pub fn basis_len(&self) -> usize {
        self.poly.as_ref().map_or(0, |p| p.basis.len())
    }

    pub(crate) fn check_bundle(&self, bundle: Option<&DesignBundle<F>>, rows: usize) -> Result<()> {
        match (&self.poly, bundle) {
            (Some(p), Some(b)) => {
                if b.cols() != p.basis.len() {
                    return Err(config_err!(
                        "stale design: {} columns for a basis of {}",
                        b.cols(),
                        p.basis.len()
                    ));
                }
                if b.rows() != rows {
                    return Err(config_err!(
                        "design has {} rows for {} points",
                        b.rows(),
                        rows
                    ));
                }
                Ok(())
            }
            (Some(_), None) => Err(config_err!("polynomial layer requires a design bundle")),
            (None, _) => Ok(()),
        }
    }
}

/// Gradient record mirroring [`PannModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad<F> {
    pub mlp: Option<MlpGrad<F>>,
    pub poly: Option<Array1<F>>,
}

/// `u = Psi a + Phi b` with masked coefficients. `bundle` must be assembled
/// on the model's basis at `points`; it is ignored without a polynomial layer.
pub fn predict<F: Scalar>(
    model: &PannModel<F>,
    points: ArrayView2<F>,
    bundle: Option<&DesignBundle<F>>,
) -> Result<Array1<F>> {
    let n = points.nrows();
    model.check_bundle(bundle, n)?;
    let mut u = Array1::<F>::zeros(n);
    if let Some(net) = &model.mlp {
        u += &forward_features(&net.config, &net.params, points, false)?.nn_values;
    }
    if let (Some(poly), Some(b)) = (&model.poly, bundle) {
        u += &b.phi.dot(&poly.masked_coeffs());
    }
    Ok(u)
}
