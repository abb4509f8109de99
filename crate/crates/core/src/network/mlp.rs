use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{config_err, PannError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, activation: Activation) -> Result<Self> {
        let cfg = MlpConfig {
            input_dim,
            hidden_widths,
            activation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(config_err!("network input dimension must be positive"));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(config_err!(
                "hidden widths must be a non-empty list of positive integers, got {:?}",
                self.hidden_widths
            ));
        }
        if let Activation::Repu(p) = self.activation {
            if p < 2 {
                return Err(config_err!("RePU power must be at least 2, got {p}"));
            }
        }
        Ok(())
    }

    /// Number of features `w` (width of the last hidden layer).
    pub fn feature_count(&self) -> usize {
        *self.hidden_widths.last().expect("validated non-empty")
    }

    fn layer_dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        std::iter::once(self.input_dim)
            .chain(self.hidden_widths.iter().copied())
            .zip(self.hidden_widths.iter().copied())
    }
}

/// Hidden weights `(in x out)` and biases per layer, plus output coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<F> {
    pub weights: Vec<Array2<F>>,
    pub biases: Vec<Array1<F>>,
    pub output: Array1<F>,
    pub output_mask: Vec<bool>,
}

impl<F: Scalar> MlpParams<F> {
    pub fn zeros(config: &MlpConfig) -> Self {
        let (weights, biases) = config
            .layer_dims()
            .map(|(i, o)| (Array2::zeros((i, o)), Array1::zeros(o)))
            .unzip();
        let w = config.feature_count();
        MlpParams {
            weights,
            biases,
            output: Array1::zeros(w),
            output_mask: vec![true; w],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.output.len()
    }

    /// Output coefficients with masked entries forced to zero.
    pub fn masked_output(&self) -> Array1<F> {
        let mut a = self.output.clone();
        for (v, &m) in a.iter_mut().zip(&self.output_mask) {
            if !m {
                *v = F::zero();
            }
        }
        a
    }

    pub fn hidden_param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_shapes(&self, config: &MlpConfig) -> Result<()> {
        let ok = self.weights.len() == config.hidden_widths.len()
            && self.biases.len() == config.hidden_widths.len()
            && config
                .layer_dims()
                .zip(self.weights.iter().zip(&self.biases))
                .all(|((i, o), (w, b))| w.dim() == (i, o) && b.len() == o)
            && self.output.len() == config.feature_count()
            && self.output_mask.len() == config.feature_count();
        if ok {
            Ok(())
        } else {
            Err(config_err!("network parameters do not match configuration"))
        }
    }
}

/// Glorot-uniform hidden weights, zero biases, Glorot-uniform output
/// coefficients over fan-in `w`. Deterministic in `seed`.
pub fn init_params<F: Scalar>(config: &MlpConfig, seed: u64) -> MlpParams<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParams::zeros(config);
    for w in params.weights.iter_mut() {
        let (fan_in, fan_out) = w.dim();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        w.mapv_inplace(|_| F::of(rng.gen_range(-limit..=limit)));
    }
    let w = config.feature_count();
    let limit = (6.0 / (w + 1) as f64).sqrt();
    params
        .output
        .mapv_inplace(|_| F::of(rng.gen_range(-limit..=limit)));
    params
}

struct LayerTrace<F> {
    input: Array2<F>,
    z: Array2<F>,
    s1: Vec<F>,
    s2: Vec<F>,
    s3: Vec<F>,
}

/// Features at a point set, with the data the backward pass needs.
///
/// In Laplacian mode every layer carries stacked blocks
/// `[value; d/dx_1 .. d/dx_d; d2/dx_1^2 .. d2/dx_d^2]`, each `n` rows tall.
pub struct FeatureEval<F> {
    /// `n x w` features `psi_j(x_i)`.
    pub features: Array2<F>,
    /// `N(x_i) = sum_j a_j psi_j(x_i)` with masked coefficients.
    pub nn_values: Array1<F>,
    /// `d` matrices of `n x w` input partials, Laplacian mode only.
    pub input_grads: Option<Vec<Array2<F>>>,
    /// `n x w` feature Laplacians, Laplacian mode only.
    pub laplacians: Option<Array2<F>>,
    n: usize,
    d: usize,
    layers: Vec<LayerTrace<F>>,
}

impl<F: Scalar> FeatureEval<F> {
    pub fn points(&self) -> usize {
        self.n
    }

    pub fn has_laplacian(&self) -> bool {
        self.laplacians.is_some()
    }

    /// `sum_j a_j Lap psi_j(x_i)` for the masked coefficients.
    pub fn nn_laplacian(&self, params: &MlpParams<F>) -> Option<Array1<F>> {
        self.laplacians.as_ref().map(|l| l.dot(&params.masked_output()))
    }
}

pub fn forward_features<F: Scalar>(
    config: &MlpConfig,
    params: &MlpParams<F>,
    points: ArrayView2<F>,
    need_laplacian: bool,
) -> Result<FeatureEval<F>> {
    params.check_shapes(config)?;
    let d = config.input_dim;
    if points.ncols() != d {
        return Err(config_err!(
            "points have {} columns, network expects {}",
            points.ncols(),
            d
        ));
    }
    let act = config.activation;
    if need_laplacian {
        if let Activation::Repu(p) = act {
            if p < 2 {
                return Err(PannError::Unsupported(format!(
                    "Laplacian of RePU with power {p} is undefined at the kink"
                )));
            }
        }
    }
    let n = points.nrows();
    let blocks = if need_laplacian { 1 + 2 * d } else { 1 };

    let mut h = Array2::<F>::zeros((blocks * n, d));
    h.slice_mut(s![0..n, ..]).assign(&points);
    if need_laplacian {
        for j in 0..d {
            h.slice_mut(s![(1 + j) * n..(2 + j) * n, j]).fill(F::one());
        }
    }

    let mut layers = Vec::with_capacity(params.weights.len());
    for (w, b) in params.weights.iter().zip(&params.biases) {
        let mut z = h.dot(w);
        z.slice_mut(s![0..n, ..]).rows_mut().into_iter().for_each(|mut r| r += b);
        let width = w.ncols();
        let nb = n * width;
        let mut a = Array2::<F>::zeros(z.raw_dim());
        let mut s1 = vec![F::zero(); nb];
        let mut s2 = if need_laplacian { vec![F::zero(); nb] } else { Vec::new() };
        let mut s3 = if need_laplacian { vec![F::zero(); nb] } else { Vec::new() };
        {
            let zs = z.as_slice().expect("contiguous");
            let as_ = a.as_slice_mut().expect("contiguous");
            if need_laplacian {
                for e in 0..nb {
                    let dv = act.derivs(zs[e]);
                    as_[e] = dv.value;
                    s1[e] = dv.d1;
                    s2[e] = dv.d2;
                    s3[e] = dv.d3;
                    for j in 0..d {
                        let zj = zs[(1 + j) * nb + e];
                        let zjj = zs[(1 + d + j) * nb + e];
                        as_[(1 + j) * nb + e] = dv.d1 * zj;
                        as_[(1 + d + j) * nb + e] = dv.d2 * zj * zj + dv.d1 * zjj;
                    }
                }
            } else {
                for e in 0..nb {
                    let dv = act.derivs(zs[e]);
                    as_[e] = dv.value;
                    s1[e] = dv.d1;
                }
            }
        }
        layers.push(LayerTrace {
            input: std::mem::replace(&mut h, a),
            z,
            s1,
            s2,
            s3,
        });
    }

    let features = h.slice(s![0..n, ..]).to_owned();
    let (input_grads, laplacians) = if need_laplacian {
        let grads = (0..d)
            .map(|j| h.slice(s![(1 + j) * n..(2 + j) * n, ..]).to_owned())
            .collect();
        let mut lap = Array2::<F>::zeros(features.raw_dim());
        for j in 0..d {
            lap += &h.slice(s![(1 + d + j) * n..(2 + d + j) * n, ..]);
        }
        (Some(grads), Some(lap))
    } else {
        (None, None)
    };
    let nn_values = features.dot(&params.masked_output());
    Ok(FeatureEval {
        features,
        nn_values,
        input_grads,
        laplacians,
        n,
        d,
        layers,
    })
}

/// Parameter gradients of a scalar loss.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad<F> {
    pub weights: Vec<Array2<F>>,
    pub biases: Vec<Array1<F>>,
    pub output: Array1<F>,
}

impl<F: Scalar> MlpGrad<F> {
    pub fn zeros_like(params: &MlpParams<F>) -> Self {
        MlpGrad {
            weights: params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            output: Array1::zeros(params.output.raw_dim()),
        }
    }
}

/// Backpropagates gradients taken w.r.t. the feature matrix (and, in
/// Laplacian mode, w.r.t. the feature Laplacians) to the hidden weights and
/// biases.
pub fn backward_features<F: Scalar>(
    params: &MlpParams<F>,
    eval: &FeatureEval<F>,
    g_features: ArrayView2<F>,
    g_laplacians: Option<ArrayView2<F>>,
) -> Result<(Vec<Array2<F>>, Vec<Array1<F>>)> {
    let n = eval.n;
    let d = eval.d;
    let w = params.feature_count();
    if g_features.dim() != (n, w) {
        return Err(PannError::Internal(format!(
            "feature upstream has shape {:?}, expected ({n}, {w})",
            g_features.dim()
        )));
    }
    if g_laplacians.is_some() && !eval.has_laplacian() {
        return Err(PannError::Internal(
            "Laplacian upstream given for a value-only forward pass".into(),
        ));
    }
    let lap_mode = eval.has_laplacian();
    let blocks = if lap_mode { 1 + 2 * d } else { 1 };

    let mut g = Array2::<F>::zeros((blocks * n, w));
    g.slice_mut(s![0..n, ..]).assign(&g_features);
    if let Some(gl) = g_laplacians {
        if gl.dim() != (n, w) {
            return Err(PannError::Internal("Laplacian upstream shape mismatch".into()));
        }
        for j in 0..d {
            g.slice_mut(s![(1 + d + j) * n..(2 + d + j) * n, ..]).assign(&gl);
        }
    }

    let nl = params.weights.len();
    let mut dw = Vec::with_capacity(nl);
    let mut db = Vec::with_capacity(nl);
    for (l, trace) in eval.layers.iter().enumerate().rev() {
        let width = trace.z.ncols();
        let nb = n * width;
        let mut gz = Array2::<F>::zeros(trace.z.raw_dim());
        {
            let gs = g.as_slice().expect("contiguous");
            let zs = trace.z.as_slice().expect("contiguous");
            let out = gz.as_slice_mut().expect("contiguous");
            if lap_mode {
                let two = F::of(2.0);
                for e in 0..nb {
                    let (s1, s2, s3) = (trace.s1[e], trace.s2[e], trace.s3[e]);
                    let mut gv = gs[e] * s1;
                    for j in 0..d {
                        let ij = (1 + j) * nb + e;
                        let ijj = (1 + d + j) * nb + e;
                        let (zj, zjj) = (zs[ij], zs[ijj]);
                        let (gj, gjj) = (gs[ij], gs[ijj]);
                        gv = gv + gj * s2 * zj + gjj * (s3 * zj * zj + s2 * zjj);
                        out[ij] = gj * s1 + gjj * two * s2 * zj;
                        out[ijj] = gjj * s1;
                    }
                    out[e] = gv;
                }
            } else {
                for e in 0..nb {
                    out[e] = gs[e] * trace.s1[e];
                }
            }
        }
        dw.push(trace.input.t().dot(&gz));
        db.push(gz.slice(s![0..n, ..]).sum_axis(Axis(0)));
        if l > 0 {
            g = gz.dot(&params.weights[l].t());
        }
    }
    dw.reverse();
    db.reverse();
    Ok((dw, db))
}

/// Gradients of a loss given its derivative w.r.t. the network outputs
/// `N(x_i)` and, optionally, w.r.t. the output Laplacians `Lap N(x_i)`.
pub fn backward_params<F: Scalar>(
    params: &MlpParams<F>,
    eval: &FeatureEval<F>,
    g_nn: ArrayView1<F>,
    g_nn_laplacian: Option<ArrayView1<F>>,
) -> Result<MlpGrad<F>> {
    if g_nn.len() != eval.n {
        return Err(PannError::Internal("upstream length mismatch".into()));
    }
    let a = params.masked_output();
    let outer = |g: ArrayView1<F>| {
        let mut m = Array2::<F>::zeros((g.len(), a.len()));
        for (mut row, &gi) in m.rows_mut().into_iter().zip(g.iter()) {
            row.assign(&(&a * gi));
        }
        m
    };
    let g_feat = outer(g_nn);
    let mut output = eval.features.t().dot(&g_nn);
    let g_lap = match (g_nn_laplacian, eval.laplacians.as_ref()) {
        (Some(gl), Some(lap)) => {
            output = output + lap.t().dot(&gl);
            Some(outer(gl))
        }
        (Some(_), None) => {
            return Err(PannError::Internal(
                "Laplacian upstream given for a value-only forward pass".into(),
            ))
        }
        _ => None,
    };
    for (v, &m) in output.iter_mut().zip(&params.output_mask) {
        if !m {
            *v = F::zero();
        }
    }
    let (weights, biases) =
        backward_features(params, eval, g_feat.view(), g_lap.as_ref().map(|g| g.view()))?;
    Ok(MlpGrad {
        weights,
        biases,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(act: Activation) -> MlpConfig {
        MlpConfig::new(2, vec![8, 8], act).unwrap()
    }

    fn points(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn init_is_deterministic() {
        let c = cfg(Activation::Tanh);
        let a: MlpParams<f64> = init_params(&c, 7);
        let b: MlpParams<f64> = init_params(&c, 7);
        let other: MlpParams<f64> = init_params(&c, 8);
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert!(a.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(a.output_mask.iter().all(|&m| m));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let c = cfg(Activation::Tanh);
        let p = MlpParams::<f64>::zeros(&c);
        let e = forward_features(&c, &p, points(5, 1).view(), true).unwrap();
        assert!(e.features.iter().all(|&v| v == 0.0));
        assert!(e.nn_values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_tanh_unit_at_origin() {
        let c = MlpConfig::new(1, vec![1], Activation::Tanh).unwrap();
        let mut p = MlpParams::<f64>::zeros(&c);
        p.weights[0][[0, 0]] = 1.0;
        let e = forward_features(&c, &p, array![[0.0]].view(), true).unwrap();
        assert_eq!(e.features[[0, 0]], 0.0);
        assert_eq!(e.laplacians.unwrap()[[0, 0]], 0.0);
        assert_eq!(e.input_grads.unwrap()[0][[0, 0]], 1.0);
    }

    #[test]
    fn repu_cubic_single_unit() {
        // pre-activation 2 -> psi = 8, psi'' = 12 (unit input weight)
        let c = MlpConfig::new(1, vec![1], Activation::Repu(3)).unwrap();
        let mut p = MlpParams::<f64>::zeros(&c);
        p.weights[0][[0, 0]] = 1.0;
        let e = forward_features(&c, &p, array![[2.0]].view(), true).unwrap();
        assert_eq!(e.features[[0, 0]], 8.0);
        assert_eq!(e.laplacians.unwrap()[[0, 0]], 12.0);
    }

    #[test]
    fn laplacian_matches_second_differences() {
        for act in [Activation::Tanh, Activation::Repu(3)] {
            let c = cfg(act);
            let p: MlpParams<f64> = init_params(&c, 11);
            let x = points(10, 2).mapv(|v| v * 0.9);
            let e = forward_features(&c, &p, x.view(), true).unwrap();
            let lap = e.laplacians.as_ref().unwrap();
            let h = 1e-4;
            let f = |pts: &Array2<f64>| forward_features(&c, &p, pts.view(), false).unwrap().features;
            let base = f(&x);
            let mut fd = Array2::<f64>::zeros(base.raw_dim());
            for j in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp.column_mut(j).mapv_inplace(|v| v + h);
                xm.column_mut(j).mapv_inplace(|v| v - h);
                fd = fd + (f(&xp) - &base * 2.0 + f(&xm)) / (h * h);
            }
            for (a, b) in lap.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{act}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn masked_output_has_no_influence() {
        let c = cfg(Activation::Tanh);
        let mut p: MlpParams<f64> = init_params(&c, 3);
        p.output_mask[2] = false;
        p.output[2] = 0.0;
        let x = points(6, 4);
        let e = forward_features(&c, &p, x.view(), false).unwrap();
        let before = e.nn_values.clone();
        let mut q = p.clone();
        q.output[2] = 5.0;
        let e2 = forward_features(&c, &q, x.view(), false).unwrap();
        assert_eq!(before, e2.nn_values);
        let g = backward_params(&p, &e, Array1::ones(6).view(), None).unwrap();
        assert_eq!(g.output[2], 0.0);
    }

    #[test]
    fn zero_upstream_zero_gradient_and_linearity() {
        let c = cfg(Activation::Tanh);
        let p: MlpParams<f64> = init_params(&c, 5);
        let x = points(7, 9);
        let e = forward_features(&c, &p, x.view(), true).unwrap();
        let g0 = backward_params(&p, &e, Array1::zeros(7).view(), Some(Array1::zeros(7).view()))
            .unwrap();
        assert!(g0.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g0.output.iter().all(|&v| v == 0.0));
        let up = Array1::from_iter((0..7).map(|i| i as f64 - 3.0));
        let g1 = backward_params(&p, &e, up.view(), Some(up.view())).unwrap();
        let up2 = &up * 2.0;
        let g2 = backward_params(&p, &e, up2.view(), Some(up2.view())).unwrap();
        for (a, b) in g1.weights.iter().zip(&g2.weights) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn shape_errors() {
        let c = cfg(Activation::Tanh);
        let p: MlpParams<f64> = init_params(&c, 5);
        assert!(forward_features(&c, &p, Array2::zeros((3, 3)).view(), false).is_err());
        let e = forward_features(&c, &p, points(3, 1).view(), false).unwrap();
        assert!(backward_features(&p, &e, Array2::zeros((2, 8)).view(), None).is_err());
        assert!(MlpConfig::new(2, vec![], Activation::Tanh).is_err());
        assert!(MlpConfig::new(2, vec![4], Activation::Repu(1)).is_err());
    }

    #[test]
    fn repu_below_two_rejects_laplacian() {
        let c = MlpConfig {
            input_dim: 1,
            hidden_widths: vec![2],
            activation: Activation::Repu(1),
        };
        let p = MlpParams::<f64>::zeros(&c);
        let r = forward_features(&c, &p, array![[0.1]].view(), true);
        assert!(matches!(r, Err(PannError::Unsupported(_))));
    }
}
