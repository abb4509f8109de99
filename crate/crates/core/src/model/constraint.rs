use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::pann::PannModel;
use crate::error::Result;
use crate::network::forward_features;
use crate::polybasis::DesignBundle;
use crate::scalar::Scalar;

/// Orthogonality penalty between the network part `N` and the polynomial
/// part `P`, evaluated entrywise at the training points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// No penalty and no L1 regularisation.
    None,
    /// L1 regularisation only.
    L1Only,
    /// `N(x) P(x)`
    CA,
    /// `N(x) b_k phi_k(x)` for every k
    CB,
    /// `N(x) phi_k(x)` for every k
    CC,
    /// `N(x) b_k` for every k
    CD,
    /// `P(x) a_j psi_j(x)` for every j
    CE,
    /// `P(x) psi_j(x)` for every j
    CF,
    /// `P(x) a_j` for every j
    CG,
    /// `a_j psi_j(x) b_k phi_k(x)` for every j, k
    CH,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 10] = [
        ConstraintKind::None,
        ConstraintKind::L1Only,
        ConstraintKind::CA,
        ConstraintKind::CB,
        ConstraintKind::CC,
        ConstraintKind::CD,
        ConstraintKind::CE,
        ConstraintKind::CF,
        ConstraintKind::CG,
        ConstraintKind::CH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::None => "none",
            ConstraintKind::L1Only => "l1",
            ConstraintKind::CA => "CA",
            ConstraintKind::CB => "CB",
            ConstraintKind::CC => "CC",
            ConstraintKind::CD => "CD",
            ConstraintKind::CE => "CE",
            ConstraintKind::CF => "CF",
            ConstraintKind::CG => "CG",
            ConstraintKind::CH => "CH",
        }
    }

    pub fn has_penalty(self) -> bool {
        !matches!(self, ConstraintKind::None | ConstraintKind::L1Only)
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstraintKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "");
        Ok(match key.as_str() {
            "none" => ConstraintKind::None,
            "l1" | "l1only" | "l1-only" => ConstraintKind::L1Only,
            "ca" => ConstraintKind::CA,
            "cb" => ConstraintKind::CB,
            "cc" => ConstraintKind::CC,
            "cd" => ConstraintKind::CD,
            "ce" => ConstraintKind::CE,
            "cf" => ConstraintKind::CF,
            "cg" => ConstraintKind::CG,
            "ch" => ConstraintKind::CH,
            _ => return Err(format!("unknown constraint `{s}` (expected none, l1, CA..CH)")),
        })
    }
}

/// Frobenius norm of the constraint array with its exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval<F> {
    pub value: F,
    /// w.r.t. the network output coefficients `a`
    pub grad_a: Array1<F>,
    /// w.r.t. the polynomial coefficients `b`
    pub grad_b: Array1<F>,
    /// w.r.t. the feature matrix `psi` (`n x w`), for backpropagation
    pub grad_psi: Array2<F>,
}

/// Below this norm the penalty is treated as flat.
const NORM_FLOOR: f64 = 1e-12;

fn squares<F: Scalar>(m: ArrayView2<F>) -> Array2<F> {
    m.mapv(|v| v * v)
}

/// Evaluates `||C||_F` on raw arrays.
///
/// `psi` is `n x w` (or `None` without a network), `phi` is `n x m`.
/// Coefficients must already have masked entries zeroed; the masks also
/// remove inactive basis functions from the coefficient-free families
/// (`CC`, `CF`).
pub fn constraint_terms<F: Scalar>(
    kind: ConstraintKind,
    psi: Option<ArrayView2<F>>,
    phi: Option<ArrayView2<F>>,
    a: ArrayView1<F>,
    b: ArrayView1<F>,
    mask_a: &[bool],
    mask_b: &[bool],
) -> ConstraintEval<F> {
    let w = a.len();
    let m = b.len();
    let n = psi.map(|p| p.nrows()).or(phi.map(|p| p.nrows())).unwrap_or(0);
    let mut out = ConstraintEval {
        value: F::zero(),
        grad_a: Array1::zeros(w),
        grad_b: Array1::zeros(m),
        grad_psi: Array2::zeros((n, w)),
    };
    let (psi, phi) = match (psi, phi) {
        (Some(p), Some(f)) if kind.has_penalty() => (p, f),
        _ => return out,
    };
    let two = F::of(2.0);
    let nn = psi.dot(&a);
    let pp = phi.dot(&b);
    let a2 = a.mapv(|v| v * v);
    let b2 = b.mapv(|v| v * v);
    let active_a = Array1::from_iter(mask_a.iter().map(|&x| if x { F::one() } else { F::zero() }));
    let active_b = Array1::from_iter(mask_b.iter().map(|&x| if x { F::one() } else { F::zero() }));

    // S = ||C||_F^2 and its partials. dn, dp are w.r.t. N(x_i), P(x_i).
    let mut dn = Array1::<F>::zeros(n);
    let mut dp = Array1::<F>::zeros(n);
    let mut ga = Array1::<F>::zeros(w);
    let mut gb = Array1::<F>::zeros(m);
    let mut gpsi = Array2::<F>::zeros((n, w));
    let s: F = match kind {
        ConstraintKind::None | ConstraintKind::L1Only => F::zero(),
        ConstraintKind::CA => {
            for i in 0..n {
                dn[i] = two * nn[i] * pp[i] * pp[i];
                dp[i] = two * pp[i] * nn[i] * nn[i];
            }
            nn.iter().zip(&pp).map(|(&x, &y)| x * x * y * y).sum()
        }
        ConstraintKind::CB => {
            let phi2 = squares(phi);
            let q = phi2.dot(&b2);
            let n2 = nn.mapv(|v| v * v);
            dn = &nn * &q * two;
            gb = phi2.t().dot(&n2) * &b * two;
            n2.iter().zip(&q).map(|(&x, &y)| x * y).sum()
        }
        ConstraintKind::CC => {
            let r = squares(phi).dot(&active_b);
            dn = &nn * &r * two;
            nn.iter().zip(&r).map(|(&x, &y)| x * x * y).sum()
        }
        ConstraintKind::CD => {
            let nb = b2.sum();
            let nn2 = nn.dot(&nn);
            dn = &nn * (two * nb);
            gb = &b * (two * nn2);
            nn2 * nb
        }
        ConstraintKind::CE => {
            let psi2 = squares(psi);
            let a2sum = psi2.dot(&a2);
            let p2 = pp.mapv(|v| v * v);
            dp = &pp * &a2sum * two;
            ga = psi2.t().dot(&p2) * &a * two;
            for ((i, j), g) in gpsi.indexed_iter_mut() {
                *g = two * p2[i] * a2[j] * psi[[i, j]];
            }
            p2.iter().zip(&a2sum).map(|(&x, &y)| x * y).sum()
        }
        ConstraintKind::CF => {
            let r = squares(psi).dot(&active_a);
            let p2 = pp.mapv(|v| v * v);
            dp = &pp * &r * two;
            for ((i, j), g) in gpsi.indexed_iter_mut() {
                *g = two * p2[i] * active_a[j] * psi[[i, j]];
            }
            p2.iter().zip(&r).map(|(&x, &y)| x * y).sum()
        }
        ConstraintKind::CG => {
            let na = a2.sum();
            let pp2 = pp.dot(&pp);
            dp = &pp * (two * na);
            ga = &a * (two * pp2);
            pp2 * na
        }
        ConstraintKind::CH => {
            let psi2 = squares(psi);
            let phi2 = squares(phi);
            let asum = psi2.dot(&a2);
            let bsum = phi2.dot(&b2);
            ga = psi2.t().dot(&bsum) * &a * two;
            gb = phi2.t().dot(&asum) * &b * two;
            for ((i, j), g) in gpsi.indexed_iter_mut() {
                *g = two * a2[j] * psi[[i, j]] * bsum[i];
            }
            asum.iter().zip(&bsum).map(|(&x, &y)| x * y).sum()
        }
    };

    // chain through N = psi a and P = phi b
    ga = ga + psi.t().dot(&dn);
    gb = gb + phi.t().dot(&dp);
    gpsi = gpsi + &dn.view().insert_axis(Axis(1)) * &a.view().insert_axis(Axis(0));

    let norm = s.max(F::zero()).sqrt();
    out.value = norm;
    if norm < F::of(NORM_FLOOR) {
        return out;
    }
    let scale = F::one() / (two * norm);
    out.grad_a = ga * scale;
    out.grad_b = gb * scale;
    out.grad_psi = gpsi * scale;
    for (g, &on) in out.grad_a.iter_mut().zip(mask_a) {
        if !on {
            *g = F::zero();
        }
    }
    for (g, &on) in out.grad_b.iter_mut().zip(mask_b) {
        if !on {
            *g = F::zero();
        }
    }
    out
}

/// Model-level wrapper: runs the network forward pass at `points` and
/// evaluates the penalty against the polynomial design in `bundle`.
pub fn constraint_penalty<F: Scalar>(
    model: &PannModel<F>,
    points: ArrayView2<F>,
    bundle: Option<&DesignBundle<F>>,
    kind: ConstraintKind,
) -> Result<ConstraintEval<F>> {
    model.check_bundle(bundle, points.nrows())?;
    let (psi, a, mask_a) = match &model.mlp {
        Some(net) => (
            Some(forward_features(&net.config, &net.params, points, false)?.features),
            net.params.masked_output(),
            net.params.output_mask.clone(),
        ),
        None => (None, Array1::zeros(0), Vec::new()),
    };
    let (b, mask_b) = match &model.poly {
        Some(p) => (p.masked_coeffs(), p.mask().to_vec()),
        None => (Array1::zeros(0), Vec::new()),
    };
    Ok(constraint_terms(
        kind,
        psi.as_ref().map(|p| p.view()),
        bundle.map(|b| b.phi.view()),
        a.view(),
        b.view(),
        &mask_a,
        &mask_b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn eval(kind: ConstraintKind, psi: &Array2<f64>, phi: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        let ma = vec![true; a.len()];
        let mb = vec![true; b.len()];
        constraint_terms(kind, Some(psi.view()), Some(phi.view()), a.view(), b.view(), &ma, &mb).value
    }

    /// Frobenius norm by materialising every constraint entry.
    fn brute_force(kind: ConstraintKind, psi: &Array2<f64>, phi: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        let (n, w) = psi.dim();
        let m = phi.ncols();
        let mut entries = Vec::new();
        for i in 0..n {
            let nn: f64 = (0..w).map(|j| a[j] * psi[[i, j]]).sum();
            let pp: f64 = (0..m).map(|k| b[k] * phi[[i, k]]).sum();
            match kind {
                ConstraintKind::CA => entries.push(nn * pp),
                ConstraintKind::CB => (0..m).for_each(|k| entries.push(nn * b[k] * phi[[i, k]])),
                ConstraintKind::CC => (0..m).for_each(|k| entries.push(nn * phi[[i, k]])),
                ConstraintKind::CD => (0..m).for_each(|k| entries.push(nn * b[k])),
                ConstraintKind::CE => (0..w).for_each(|j| entries.push(pp * a[j] * psi[[i, j]])),
                ConstraintKind::CF => (0..w).for_each(|j| entries.push(pp * psi[[i, j]])),
                ConstraintKind::CG => (0..w).for_each(|j| entries.push(pp * a[j])),
                ConstraintKind::CH => {
                    for j in 0..w {
                        for k in 0..m {
                            entries.push(a[j] * psi[[i, j]] * b[k] * phi[[i, k]]);
                        }
                    }
                }
                _ => {}
            }
        }
        entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    #[test]
    fn matches_materialised_entries() {
        let psi = array![[0.3, -0.7, 0.2], [1.1, 0.4, -0.5], [-0.2, 0.9, 0.8]];
        let phi = array![[1.0, 0.5], [1.0, -0.3], [1.0, 0.8]];
        let a = array![0.6, -0.4, 1.3];
        let b = array![0.7, -1.2];
        for kind in ConstraintKind::ALL {
            let got = eval(kind, &psi, &phi, &a, &b);
            let want = brute_force(kind, &psi, &phi, &a, &b);
            assert!((got - want).abs() < 1e-14, "{kind}: {got} vs {want}");
        }
    }

    #[test]
    fn single_entry_hand_values() {
        let one2 = array![[1.0]];
        let one1 = array![1.0];
        assert_eq!(eval(ConstraintKind::CH, &one2, &one2, &one1, &one1), 1.0);
        assert_eq!(eval(ConstraintKind::CA, &one2, &one2, &one1, &one1), 1.0);
    }

    #[test]
    fn vanishing_coefficients() {
        let psi = array![[0.3, -0.7], [1.1, 0.4]];
        let phi = array![[1.0, 0.5], [1.0, -0.3]];
        let a = array![0.6, -0.4];
        let zb = array![0.0, 0.0];
        for kind in ConstraintKind::ALL {
            if kind == ConstraintKind::CC {
                continue;
            }
            assert_eq!(eval(kind, &psi, &phi, &a, &zb), 0.0, "{kind}");
        }
        let za = array![0.0, 0.0];
        let b = array![0.3, 0.2];
        for kind in [ConstraintKind::CE, ConstraintKind::CG, ConstraintKind::CH] {
            assert_eq!(eval(kind, &psi, &phi, &za, &b), 0.0);
        }
    }

    #[test]
    fn inactive_columns_excluded() {
        let psi = array![[0.3, -0.7], [1.1, 0.4]];
        let phi = array![[1.0, 0.5], [1.0, -0.3]];
        let a = array![0.6, 0.0];
        let b = array![0.3, 0.0];
        let e = constraint_terms(
            ConstraintKind::CF,
            Some(psi.view()),
            Some(phi.view()),
            a.view(),
            b.view(),
            &[true, false],
            &[true, false],
        );
        let want = brute_force(ConstraintKind::CF, &psi.slice(ndarray::s![.., 0..1]).to_owned(), &phi, &array![0.6], &b);
        assert!((e.value - want).abs() < 1e-14);
        assert!(e.grad_psi.column(1).iter().all(|&g| g == 0.0));
        assert_eq!(e.grad_a[1], 0.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("CG".parse::<ConstraintKind>().unwrap(), ConstraintKind::CG);
        assert_eq!("c_e".parse::<ConstraintKind>().unwrap(), ConstraintKind::CE);
        assert_eq!("none".parse::<ConstraintKind>().unwrap(), ConstraintKind::None);
        assert_eq!("l1".parse::<ConstraintKind>().unwrap(), ConstraintKind::L1Only);
        assert!("cz".parse::<ConstraintKind>().is_err());
    }
}
