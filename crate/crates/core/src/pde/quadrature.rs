use ndarray::{Array1, Array2};

use crate::error::{config_err, Result};

/// Tensor Gauss-Legendre rule on `[-1,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// `n^d x d`, last coordinate varying fastest.
    pub nodes: Array2<f64>,
    pub weights: Array1<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes
            .rows()
            .into_iter()
            .zip(self.weights.iter())
            .map(|(r, &w)| w * f(r.as_slice().expect("row-major")))
            .sum()
    }
}

/// `P_n(z)` and `P_n'(z)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Nodes (ascending) and weights of the `n`-point rule, by Newton iteration
/// on the roots of `P_n`.
pub fn gauss_legendre_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(config_err!("quadrature needs at least one point per dimension"));
    }
    if n == 1 {
        return Ok((vec![0.0], vec![2.0]));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let step = p / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `points_per_dim^d`-point tensor rule.
pub fn gauss_legendre_rule(points_per_dim: usize, d: usize) -> Result<QuadratureRule> {
    if d == 0 {
        return Err(config_err!("quadrature dimension must be positive"));
    }
    let (x, w) = gauss_legendre_1d(points_per_dim)?;
    let total = points_per_dim
        .checked_pow(d as u32)
        .ok_or_else(|| config_err!("{points_per_dim}^{d} quadrature nodes overflow"))?;
    let mut nodes = Array2::zeros((total, d));
    let mut weights = Array1::ones(total);
    for q in 0..total {
        let mut rem = q;
        for j in (0..d).rev() {
            let i = rem % points_per_dim;
            rem /= points_per_dim;
            nodes[[q, j]] = x[i];
            weights[q] *= w[i];
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::legendre_values_1d;

    #[test]
    fn small_rules() {
        let (x, w) = gauss_legendre_1d(1).unwrap();
        assert_eq!((x, w), (vec![0.0], vec![2.0]));
        let (x, w) = gauss_legendre_1d(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn monomial_exactness() {
        for n in 1..=40 {
            let (x, w) = gauss_legendre_1d(n).unwrap();
            for k in 0..2 * n {
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                let q: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(k as i32)).sum();
                assert!((q - exact).abs() <= 1e-12, "n={n} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let n = 12;
        let (x, w) = gauss_legendre_1d(n).unwrap();
        for a in 0..2 * n {
            for b in 0..2 * n - a {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&z, &w)| {
                        let p = legendre_values_1d(a.max(b), z);
                        w * p[a] * p[b]
                    })
                    .sum();
                let exact = if a == b { 2.0 / (2.0 * a as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-12, "({a},{b})");
            }
        }
    }

    #[test]
    fn tensor_weights_sum_to_volume() {
        for d in 1..=4 {
            let rule = gauss_legendre_rule(5, d).unwrap();
            assert_eq!(rule.len(), 5usize.pow(d as u32));
            assert!((rule.weights.sum() - 2f64.powi(d as i32)).abs() < 1e-12);
        }
        let rule = gauss_legendre_rule(4, 2).unwrap();
        assert!((rule.integrate(|x| x[0] * x[0] * x[1] * x[1]) - 4.0 / 9.0).abs() < 1e-14);
    }
}
