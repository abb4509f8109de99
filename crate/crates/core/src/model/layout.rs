use ndarray::Array1;

use super::pann::{ModelGrad, PannModel};
use crate::error::{PannError, Result};
use crate::scalar::Scalar;

/// Flat view of the trainable, unmasked parameters of a model.
///
/// Order: per hidden layer its weights (row-major) then its biases, then the
/// active output coefficients, then the active polynomial coefficients.
/// Masked coefficients are left out, so an optimizer working on the flat
/// vector cannot move them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    hidden: Vec<(usize, usize)>,
    active_a: Vec<usize>,
    active_b: Vec<usize>,
    b_len: usize,
    a_len: usize,
}

impl ParamLayout {
    pub fn of<F: Scalar>(model: &PannModel<F>) -> Self {
        let (hidden, a_len, active_a) = match &model.mlp {
            Some(net) => (
                net.params.weights.iter().map(|w| w.dim()).collect(),
                net.params.output.len(),
                (0..net.params.output.len()).filter(|&j| net.params.output_mask[j]).collect(),
            ),
            None => (Vec::new(), 0, Vec::new()),
        };
        let (b_len, active_b) = match &model.poly {
            Some(p) => (p.coeffs.len(), (0..p.coeffs.len()).filter(|&k| p.mask()[k]).collect()),
            None => (0, Vec::new()),
        };
        ParamLayout {
            hidden,
            active_a,
            active_b,
            b_len,
            a_len,
        }
    }

    pub fn len(&self) -> usize {
        self.hidden_len() + self.active_a.len() + self.active_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden.iter().map(|&(i, o)| i * o + o).sum()
    }

    fn check<F: Scalar>(&self, model: &PannModel<F>) -> Result<()> {
        if ParamLayout::of(model) != *self {
            return Err(PannError::Internal("parameter layout no longer matches the model".into()));
        }
        Ok(())
    }

    pub fn pack<F: Scalar>(&self, model: &PannModel<F>) -> Array1<F> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(net) = &model.mlp {
            for (w, b) in net.params.weights.iter().zip(&net.params.biases) {
                out.extend(w.iter().copied());
                out.extend(b.iter().copied());
            }
            out.extend(self.active_a.iter().map(|&j| net.params.output[j]));
        }
        if let Some(p) = &model.poly {
            out.extend(self.active_b.iter().map(|&k| p.coeffs[k]));
        }
        Array1::from(out)
    }

    pub fn pack_grad<F: Scalar>(&self, grad: &ModelGrad<F>) -> Array1<F> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(g) = &grad.mlp {
            for (w, b) in g.weights.iter().zip(&g.biases) {
                out.extend(w.iter().copied());
                out.extend(b.iter().copied());
            }
            out.extend(self.active_a.iter().map(|&j| g.output[j]));
        } else {
            out.extend(std::iter::repeat(F::zero()).take(self.hidden_len() + self.active_a.len()));
        }
        match &grad.poly {
            Some(g) => out.extend(self.active_b.iter().map(|&k| g[k])),
            None => out.extend(std::iter::repeat(F::zero()).take(self.active_b.len())),
        }
        Array1::from(out)
    }

    /// Writes `theta` back into `model`; masked coefficients stay zero.
    pub fn unpack<F: Scalar>(&self, model: &mut PannModel<F>, theta: &[F]) -> Result<()> {
        if theta.len() != self.len() {
            return Err(PannError::Internal(format!(
                "flat vector has {} entries, layout expects {}",
                theta.len(),
                self.len()
            )));
        }
        self.check(model)?;
        let mut pos = 0;
        let mut take = |n: usize| {
            let s = &theta[pos..pos + n];
            pos += n;
            s
        };
        if let Some(net) = model.mlp.as_mut() {
            let p = &mut net.params;
            for (w, b) in p.weights.iter_mut().zip(p.biases.iter_mut()) {
                let src = take(w.len());
                for (d, &s) in w.iter_mut().zip(src) {
                    *d = s;
                }
                let src = take(b.len());
                for (d, &s) in b.iter_mut().zip(src) {
                    *d = s;
                }
            }
            p.output.fill(F::zero());
            for (&j, &s) in self.active_a.iter().zip(take(self.active_a.len())) {
                p.output[j] = s;
            }
        }
        if let Some(poly) = model.poly.as_mut() {
            poly.coeffs.fill(F::zero());
            for (&k, &s) in self.active_b.iter().zip(take(self.active_b.len())) {
                poly.coeffs[k] = s;
            }
        }
        debug_assert_eq!(self.a_len + self.b_len, model.width() + model.basis_len());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{truncate, NetworkPart, PolyLayer};
    use crate::network::{init_params, Activation, MlpConfig};
    use crate::polybasis::{enumerate_indices, BasisSpec};

    fn model() -> PannModel<f64> {
        let config = MlpConfig::new(2, vec![3, 4], Activation::Tanh).unwrap();
        let params = init_params(&config, 7);
        let mut poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 2)));
        poly.coeffs = Array1::linspace(0.1, 0.6, 6);
        PannModel::new(Some(NetworkPart { config, params }), Some(poly)).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let layout = ParamLayout::of(&m);
        assert_eq!(layout.len(), 2 * 3 + 3 + 3 * 4 + 4 + 4 + 6);
        let theta = layout.pack(&m);
        let mut m2 = m.clone();
        m2.poly.as_mut().unwrap().coeffs.fill(9.0);
        layout.unpack(&mut m2, theta.as_slice().unwrap()).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn masked_entries_excluded() {
        let mut m = model();
        let before = ParamLayout::of(&m).len();
        truncate(&mut m, 0.25);
        let layout = ParamLayout::of(&m);
        let mask_b = m.poly.as_ref().unwrap().mask().iter().filter(|&&x| !x).count();
        let mask_a = m.mlp.as_ref().unwrap().params.output_mask.iter().filter(|&&x| !x).count();
        assert_eq!(layout.len(), before - mask_a - mask_b);
        let theta = Array1::from_elem(layout.len(), 1.0);
        layout.unpack(&mut m, theta.as_slice().unwrap()).unwrap();
        for (v, &on) in m.poly.as_ref().unwrap().coeffs.iter().zip(m.poly.as_ref().unwrap().mask()) {
            assert_eq!(*v, if on { 1.0 } else { 0.0 });
        }
    }
}
