use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Relu,
    /// Rectified power unit `max(0, z)^p`.
    Repu(u32),
}

/// `sigma` and its first three derivatives at one pre-activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationDerivs<F> {
    pub value: F,
    pub d1: F,
    pub d2: F,
    pub d3: F,
}

impl Activation {
    pub const DEFAULT_REPU_POWER: u32 = 3;

    pub fn name(&self) -> String {
        match self {
            Activation::Tanh => "tanh".into(),
            Activation::Relu => "relu".into(),
            Activation::Repu(p) if *p == Self::DEFAULT_REPU_POWER => "repu".into(),
            Activation::Repu(p) => format!("repu{p}"),
        }
    }

    #[inline]
    pub fn eval<F: Scalar>(self, z: F) -> F {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(F::zero()),
            Activation::Repu(p) => {
                if z > F::zero() {
                    z.powi(p as i32)
                } else {
                    F::zero()
                }
            }
        }
    }

    /// ReLU's second derivative is taken as zero everywhere.
    #[inline]
    pub fn derivs<F: Scalar>(self, z: F) -> ActivationDerivs<F> {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let s = F::one() - t * t;
                let two = F::of(2.0);
                ActivationDerivs {
                    value: t,
                    d1: s,
                    d2: -two * t * s,
                    d3: -two * s * (F::one() - F::of(3.0) * t * t),
                }
            }
            Activation::Relu => {
                let on = z > F::zero();
                ActivationDerivs {
                    value: if on { z } else { F::zero() },
                    d1: if on { F::one() } else { F::zero() },
                    d2: F::zero(),
                    d3: F::zero(),
                }
            }
            Activation::Repu(p) => {
                if z <= F::zero() {
                    let zero = F::zero();
                    return ActivationDerivs {
                        value: zero,
                        d1: zero,
                        d2: zero,
                        d3: zero,
                    };
                }
                // falling factorial p (p-1) ... times z^(p-k), zero once k > p
                let term = |k: u32| -> F {
                    if k > p {
                        return F::zero();
                    }
                    let coef = (0..k).fold(1.0, |acc, i| acc * (p - i) as f64);
                    F::of(coef) * z.powi((p - k) as i32)
                };
                ActivationDerivs {
                    value: term(0),
                    d1: term(1),
                    d2: term(2),
                    d3: term(3),
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "repu" => Ok(Activation::Repu(Self::DEFAULT_REPU_POWER)),
            _ => match s.strip_prefix("repu").map(str::parse::<u32>) {
                Some(Ok(p)) if p >= 2 => Ok(Activation::Repu(p)),
                Some(Ok(p)) => Err(format!("RePU power must be at least 2, got {p}")),
                _ => Err(format!("unknown activation `{s}` (expected tanh, relu, repu[P])")),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repu_cubic_values() {
        let d = Activation::Repu(3).derivs(2.0f64);
        assert_eq!(d.value, 8.0);
        assert_eq!(d.d1, 12.0);
        assert_eq!(d.d2, 12.0);
        assert_eq!(d.d3, 6.0);
        let d = Activation::Repu(3).derivs(-1.0f64);
        assert_eq!((d.value, d.d1, d.d2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tanh_derivatives_match_differences() {
        let h = 1e-5;
        for &z in &[-1.3f64, -0.2, 0.0, 0.7, 2.1] {
            let a = Activation::Tanh;
            let d = a.derivs(z);
            let dp = a.derivs(z + h);
            let dm = a.derivs(z - h);
            assert!(((dp.value - dm.value) / (2.0 * h) - d.d1).abs() < 1e-9);
            assert!(((dp.d1 - dm.d1) / (2.0 * h) - d.d2).abs() < 1e-9);
            assert!(((dp.d2 - dm.d2) / (2.0 * h) - d.d3).abs() < 1e-9);
        }
        let zero = Activation::Tanh.derivs(0.0f64);
        assert_eq!((zero.value, zero.d2), (0.0, 0.0));
    }

    #[test]
    fn parse_names() {
        assert_eq!("ReLU".parse::<Activation>().unwrap(), Activation::Relu);
        assert_eq!("repu".parse::<Activation>().unwrap(), Activation::Repu(3));
        assert_eq!("repu4".parse::<Activation>().unwrap(), Activation::Repu(4));
        assert!("repu1".parse::<Activation>().is_err());
        assert_eq!(Activation::Repu(3).to_string(), "repu");
    }
}
