use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::constraint::{constraint_terms, ConstraintKind};
use super::pann::{ModelGrad, PannModel};
use crate::error::{config_err, PannError, Result};
use crate::network::{backward_features, forward_features, FeatureEval, MlpGrad};
use crate::pde::PdeKind;
use crate::polybasis::DesignBundle;
use crate::scalar::Scalar;

/// Which parameters the L1 term sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum L1Scope {
    /// Output coefficients, polynomial coefficients and hidden weights/biases.
    All,
    /// Output and polynomial coefficients only.
    Coefficients,
}

impl fmt::Display for L1Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            L1Scope::All => "all",
            L1Scope::Coefficients => "coefficients",
        })
    }
}

impl FromStr for L1Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(L1Scope::All),
            "coefficients" | "coeffs" | "coefficients-only" => Ok(L1Scope::Coefficients),
            _ => Err(format!("unknown L1 scope `{s}` (expected all or coefficients)")),
        }
    }
}

/// Weights of the regularised objective. Data terms are means over points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_r: f64,
    pub lambda_c: f64,
    pub lambda_pde: f64,
    pub preconditioned: bool,
    pub constraint: ConstraintKind,
    pub truncation_threshold: f64,
    pub l1_scope: L1Scope,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_r: 1e-6,
            lambda_c: 1e-3,
            lambda_pde: 1.0,
            preconditioned: true,
            constraint: ConstraintKind::CE,
            truncation_threshold: 1e-4,
            l1_scope: L1Scope::All,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_r", self.lambda_r),
            ("lambda_c", self.lambda_c),
            ("lambda_pde", self.lambda_pde),
            ("truncation_threshold", self.truncation_threshold),
        ] {
            if v.is_nan() || v < 0.0 || (v.is_infinite() && name != "truncation_threshold") {
                return Err(config_err!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// `ConstraintKind::None` switches the L1 term off as well.
    pub fn effective_lambda_r(&self) -> f64 {
        if self.constraint == ConstraintKind::None {
            0.0
        } else {
            self.lambda_r
        }
    }
}

/// Loss value, its decomposition and the full gradient.
#[derive(Debug, Clone)]
pub struct LossEval<F> {
    pub loss: F,
    /// Boundary or regression data term.
    pub data: F,
    /// Weighted PDE residual term (zero in regression mode).
    pub residual: F,
    pub penalty: F,
    pub l1: F,
    pub grad: ModelGrad<F>,
}

/// Training data of a physics-informed fit.
#[derive(Debug, Clone)]
pub struct PdeData<F> {
    pub boundary_points: Array2<F>,
    pub boundary_values: Array1<F>,
    /// Values at the boundary points (Laplacian not required).
    pub boundary_design: Option<DesignBundle<F>>,
    pub collocation_points: Array2<F>,
    pub forcing: Array1<F>,
    /// Values and Laplacians at the collocation points.
    pub collocation_design: Option<DesignBundle<F>>,
    /// `phi` over boundary then collocation rows, used by the penalties.
    union_phi: Option<Array2<F>>,
}

impl<F: Scalar> PdeData<F> {
    pub fn new(
        boundary_points: Array2<F>,
        boundary_values: Array1<F>,
        boundary_design: Option<DesignBundle<F>>,
        collocation_points: Array2<F>,
        forcing: Array1<F>,
        collocation_design: Option<DesignBundle<F>>,
    ) -> Result<Self> {
        if boundary_points.nrows() != boundary_values.len()
            || collocation_points.nrows() != forcing.len()
        {
            return Err(config_err!("point and value counts differ"));
        }
        let union_phi = match (&boundary_design, &collocation_design) {
            (Some(b), Some(c)) => {
                if c.lap_phi.is_none() {
                    return Err(config_err!("collocation design lacks Laplacians"));
                }
                Some(concatenate(Axis(0), &[b.phi.view(), c.phi.view()]).map_err(|e| {
                    config_err!("boundary and collocation designs disagree: {e}")
                })?)
            }
            (None, None) => None,
            _ => return Err(config_err!("boundary and collocation designs must both be given")),
        };
        Ok(PdeData {
            boundary_points,
            boundary_values,
            boundary_design,
            collocation_points,
            forcing,
            collocation_design,
            union_phi,
        })
    }
}

fn weights<F: Scalar>(
    bundle: Option<&DesignBundle<F>>,
    preconditioned: bool,
    n: usize,
) -> Result<Array1<F>> {
    if !preconditioned {
        return Ok(Array1::ones(n));
    }
    match bundle.and_then(|b| b.precond.as_ref()) {
        Some(k) => Ok(k.clone()),
        None if bundle.is_none() => Err(config_err!(
            "preconditioning requires a polynomial layer; disable it for network-only models"
        )),
        None => Err(config_err!("preconditioning requested but the design has no preconditioner")),
    }
}

fn outer<F: Scalar>(g: ArrayView1<F>, a: ArrayView1<F>) -> Array2<F> {
    &g.insert_axis(Axis(1)) * &a.insert_axis(Axis(0))
}

fn sign<F: Scalar>(v: F) -> F {
    if v > F::zero() {
        F::one()
    } else if v < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

/// Adds `lambda * ||theta||_1` subgradients to `grad`, returns the term.
fn add_l1<F: Scalar>(model: &PannModel<F>, scope: L1Scope, lambda: F, grad: &mut ModelGrad<F>) -> F {
    if lambda == F::zero() {
        return F::zero();
    }
    let mut total = F::zero();
    if let (Some(net), Some(g)) = (&model.mlp, grad.mlp.as_mut()) {
        let p = &net.params;
        for ((&v, &on), gv) in p.output.iter().zip(&p.output_mask).zip(g.output.iter_mut()) {
            if on {
                total += v.abs();
                *gv += lambda * sign(v);
            }
        }
        if scope == L1Scope::All {
            for (w, gw) in p.weights.iter().zip(g.weights.iter_mut()) {
                for (&v, gv) in w.iter().zip(gw.iter_mut()) {
                    total += v.abs();
                    *gv += lambda * sign(v);
                }
            }
            for (b, gb) in p.biases.iter().zip(g.biases.iter_mut()) {
                for (&v, gv) in b.iter().zip(gb.iter_mut()) {
                    total += v.abs();
                    *gv += lambda * sign(v);
                }
            }
        }
    }
    if let (Some(poly), Some(g)) = (&model.poly, grad.poly.as_mut()) {
        for ((&v, &on), gv) in poly.coeffs.iter().zip(poly.mask()).zip(g.iter_mut()) {
            if on {
                total += v.abs();
                *gv += lambda * sign(v);
            }
        }
    }
    lambda * total
}

fn mask_poly<F: Scalar>(g: &mut Array1<F>, mask: &[bool]) {
    for (v, &on) in g.iter_mut().zip(mask) {
        if !on {
            *v = F::zero();
        }
    }
}

fn ensure_finite<F: Scalar>(eval: &LossEval<F>) -> Result<()> {
    if eval.loss.is_finite() {
        Ok(())
    } else {
        Err(PannError::NonFinite)
    }
}

/// `mean_i [K_i (u(x_i) - y_i)]^2 + lambda_r ||theta||_1 + lambda_c ||C||_F`.
pub fn regression_loss<F: Scalar>(
    model: &PannModel<F>,
    points: ArrayView2<F>,
    targets: ArrayView1<F>,
    bundle: Option<&DesignBundle<F>>,
    cfg: &LossConfig,
) -> Result<LossEval<F>> {
    let n = points.nrows();
    if targets.len() != n {
        return Err(config_err!("{} targets for {} points", targets.len(), n));
    }
    model.check_bundle(bundle, n)?;
    let bundle = if model.poly.is_some() { bundle } else { None };
    let k = weights(bundle, cfg.preconditioned, n)?;

    let fe = match &model.mlp {
        Some(net) => Some(forward_features(&net.config, &net.params, points, false)?),
        None => None,
    };
    let a = model.mlp.as_ref().map(|net| net.params.masked_output());
    let b = model.poly.as_ref().map(|p| p.masked_coeffs());

    let mut u = Array1::<F>::zeros(n);
    if let Some(fe) = &fe {
        u += &fe.nn_values;
    }
    if let (Some(bundle), Some(b)) = (bundle, &b) {
        u += &bundle.phi.dot(b);
    }
    let weighted = &(&u - &targets) * &k;
    let data = weighted.dot(&weighted) / F::of_usize(n);
    let du = &weighted * &k * (F::of(2.0) / F::of_usize(n));

    let mut g_poly = match (bundle, &model.poly) {
        (Some(bundle), Some(_)) => Some(bundle.phi.t().dot(&du)),
        _ => None,
    };
    let mut parts = fe.as_ref().zip(a.as_ref()).map(|(fe, a)| {
        let output = fe.features.t().dot(&du);
        let g_feat = outer(du.view(), a.view());
        (output, g_feat)
    });

    let lambda_c = F::of(cfg.lambda_c);
    let mut penalty = F::zero();
    if cfg.constraint.has_penalty() && lambda_c > F::zero() {
        if let (Some(fe), Some(a), Some(bundle), Some(b), Some(poly)) =
            (&fe, &a, bundle, &b, &model.poly)
        {
            let net = model.mlp.as_ref().expect("features imply a network");
            let c = constraint_terms(
                cfg.constraint,
                Some(fe.features.view()),
                Some(bundle.phi.view()),
                a.view(),
                b.view(),
                &net.params.output_mask,
                poly.mask(),
            );
            penalty = lambda_c * c.value;
            if let Some((output, g_feat)) = parts.as_mut() {
                output.scaled_add(lambda_c, &c.grad_a);
                g_feat.scaled_add(lambda_c, &c.grad_psi);
            }
            if let Some(gp) = g_poly.as_mut() {
                gp.scaled_add(lambda_c, &c.grad_b);
            }
        }
    }

    let mlp_grad = match (&model.mlp, fe.as_ref(), parts) {
        (Some(net), Some(fe), Some((mut output, g_feat))) => {
            for (v, &on) in output.iter_mut().zip(&net.params.output_mask) {
                if !on {
                    *v = F::zero();
                }
            }
            let (weights, biases) = backward_features(&net.params, fe, g_feat.view(), None)?;
            Some(MlpGrad {
                weights,
                biases,
                output,
            })
        }
        _ => None,
    };
    if let (Some(gp), Some(poly)) = (g_poly.as_mut(), &model.poly) {
        mask_poly(gp, poly.mask());
    }
    let mut grad = ModelGrad {
        mlp: mlp_grad,
        poly: g_poly,
    };
    let l1 = add_l1(model, cfg.l1_scope, F::of(cfg.effective_lambda_r()), &mut grad);
    let eval = LossEval {
        loss: data + penalty + l1,
        data,
        residual: F::zero(),
        penalty,
        l1,
        grad,
    };
    ensure_finite(&eval)?;
    Ok(eval)
}

/// Physics-informed objective:
/// `mean_b [K_b (u - g)]^2 + lambda_pde mean_r [K_r (F[u] - f)]^2
///  + lambda_r ||theta||_1 + lambda_c ||C||_F`,
/// with `F[u] = Lap u` (Poisson) or `Lap u + u (u^2 - 1)` (Allen-Cahn) and
/// the penalty taken over boundary and collocation points together.
pub fn pde_loss<F: Scalar>(
    model: &PannModel<F>,
    data: &PdeData<F>,
    problem: PdeKind,
    cfg: &LossConfig,
) -> Result<LossEval<F>> {
    let nb = data.boundary_points.nrows();
    let nr = data.collocation_points.nrows();
    model.check_bundle(data.boundary_design.as_ref(), nb)?;
    model.check_bundle(data.collocation_design.as_ref(), nr)?;
    let (bd, cd) = if model.poly.is_some() {
        (data.boundary_design.as_ref(), data.collocation_design.as_ref())
    } else {
        (None, None)
    };
    if let Some(cd) = cd {
        if cd.lap_phi.is_none() {
            return Err(config_err!("collocation design lacks Laplacians"));
        }
    }
    let kb = weights(bd, cfg.preconditioned, nb)?;
    let kr = weights(cd, cfg.preconditioned, nr)?;

    let (fe_b, fe_r): (Option<FeatureEval<F>>, Option<FeatureEval<F>>) = match &model.mlp {
        Some(net) => (
            Some(forward_features(&net.config, &net.params, data.boundary_points.view(), false)?),
            Some(forward_features(&net.config, &net.params, data.collocation_points.view(), true)?),
        ),
        None => (None, None),
    };
    let a = model.mlp.as_ref().map(|net| net.params.masked_output());
    let b = model.poly.as_ref().map(|p| p.masked_coeffs());

    let mut u_b = Array1::<F>::zeros(nb);
    let mut u_r = Array1::<F>::zeros(nr);
    let mut lap_r = Array1::<F>::zeros(nr);
    if let (Some(fe_b), Some(fe_r), Some(a)) = (&fe_b, &fe_r, &a) {
        u_b += &fe_b.nn_values;
        u_r += &fe_r.nn_values;
        lap_r += &fe_r.laplacians.as_ref().expect("Laplacian pass").dot(a);
    }
    if let (Some(bd), Some(cd), Some(b)) = (bd, cd, &b) {
        u_b += &bd.phi.dot(b);
        u_r += &cd.phi.dot(b);
        lap_r += &cd.lap_phi.as_ref().expect("checked").dot(b);
    }

    let two = F::of(2.0);
    let wb = &(&u_b - &data.boundary_values) * &kb;
    let boundary_term = wb.dot(&wb) / F::of_usize(nb);
    let du_b = &wb * &kb * (two / F::of_usize(nb));

    let operator = match problem {
        PdeKind::Poisson => lap_r.clone(),
        PdeKind::AllenCahn => &lap_r + &u_r.mapv(|v| v * (v * v - F::one())),
    };
    let lambda_pde = F::of(cfg.lambda_pde);
    let wr = &(&operator - &data.forcing) * &kr;
    let residual_term = lambda_pde * wr.dot(&wr) / F::of_usize(nr);
    let g_lap = &wr * &kr * (lambda_pde * two / F::of_usize(nr));
    let du_r = match problem {
        PdeKind::Poisson => Array1::zeros(nr),
        PdeKind::AllenCahn => &g_lap * &u_r.mapv(|v| F::of(3.0) * v * v - F::one()),
    };

    let mut g_poly = match (bd, cd) {
        (Some(bd), Some(cd)) => Some(
            bd.phi.t().dot(&du_b)
                + cd.phi.t().dot(&du_r)
                + cd.lap_phi.as_ref().expect("checked").t().dot(&g_lap),
        ),
        _ => None,
    };

    let mut net_parts = match (&fe_b, &fe_r, &a) {
        (Some(fe_b), Some(fe_r), Some(a)) => {
            let output = fe_b.features.t().dot(&du_b)
                + fe_r.features.t().dot(&du_r)
                + fe_r.laplacians.as_ref().expect("Laplacian pass").t().dot(&g_lap);
            Some((
                output,
                outer(du_b.view(), a.view()),
                outer(du_r.view(), a.view()),
                outer(g_lap.view(), a.view()),
            ))
        }
        _ => None,
    };

    let lambda_c = F::of(cfg.lambda_c);
    let mut penalty = F::zero();
    if cfg.constraint.has_penalty() && lambda_c > F::zero() {
        if let (Some(fe_b), Some(fe_r), Some(a), Some(b), Some(phi), Some(net), Some(poly)) = (
            &fe_b,
            &fe_r,
            &a,
            &b,
            data.union_phi.as_ref(),
            &model.mlp,
            &model.poly,
        ) {
            let psi = concatenate(Axis(0), &[fe_b.features.view(), fe_r.features.view()])
                .expect("same feature width");
            let c = constraint_terms(
                cfg.constraint,
                Some(psi.view()),
                Some(phi.view()),
                a.view(),
                b.view(),
                &net.params.output_mask,
                poly.mask(),
            );
            penalty = lambda_c * c.value;
            if let Some((output, gb_feat, gr_feat, _)) = net_parts.as_mut() {
                output.scaled_add(lambda_c, &c.grad_a);
                gb_feat.scaled_add(lambda_c, &c.grad_psi.slice(s![0..nb, ..]));
                gr_feat.scaled_add(lambda_c, &c.grad_psi.slice(s![nb.., ..]));
            }
            if let Some(gp) = g_poly.as_mut() {
                gp.scaled_add(lambda_c, &c.grad_b);
            }
        }
    }

    let mlp_grad = match (&model.mlp, &fe_b, &fe_r, net_parts) {
        (Some(net), Some(fe_b), Some(fe_r), Some((mut output, gb_feat, gr_feat, gr_lap))) => {
            for (v, &on) in output.iter_mut().zip(&net.params.output_mask) {
                if !on {
                    *v = F::zero();
                }
            }
            let (mut weights, mut biases) =
                backward_features(&net.params, fe_b, gb_feat.view(), None)?;
            let (wr_, br_) =
                backward_features(&net.params, fe_r, gr_feat.view(), Some(gr_lap.view()))?;
            for (w, x) in weights.iter_mut().zip(&wr_) {
                *w += x;
            }
            for (b, x) in biases.iter_mut().zip(&br_) {
                *b += x;
            }
            Some(MlpGrad {
                weights,
                biases,
                output,
            })
        }
        _ => None,
    };
    if let (Some(gp), Some(poly)) = (g_poly.as_mut(), &model.poly) {
        mask_poly(gp, poly.mask());
    }
    let mut grad = ModelGrad {
        mlp: mlp_grad,
        poly: g_poly,
    };
    let l1 = add_l1(model, cfg.l1_scope, F::of(cfg.effective_lambda_r()), &mut grad);
    let eval = LossEval {
        loss: boundary_term + residual_term + penalty + l1,
        data: boundary_term,
        residual: residual_term,
        penalty,
        l1,
        grad,
    };
    ensure_finite(&eval)?;
    Ok(eval)
}
