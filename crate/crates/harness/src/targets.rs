use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use pann_core::polybasis::legendre_values_1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// `P_10(x) P_10(y)`
    Legendre10,
    /// `x^2 sin(1/y)`, defined as 0 on `y = 0`
    X2Sin1y,
    /// `5 pi^2 sin(2 pi x_0) prod_{i>=1} sin(pi x_i)`
    HighdimSineprod,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::Legendre10 => "legendre10",
            TargetKind::X2Sin1y => "x2sin1y",
            TargetKind::HighdimSineprod => "highdim-sineprod",
        })
    }
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "legendre10" => Ok(TargetKind::Legendre10),
            "x2sin1y" => Ok(TargetKind::X2Sin1y),
            "highdim-sineprod" | "highdim" => Ok(TargetKind::HighdimSineprod),
            _ => Err(format!("unknown target `{s}`")),
        }
    }
}

pub fn synthetic_target(kind: TargetKind, x: &[f64]) -> f64 {
    match kind {
        TargetKind::Legendre10 => legendre_values_1d(10, x[0])[10] * legendre_values_1d(10, x[1])[10],
        TargetKind::X2Sin1y => {
            if x[1] == 0.0 {
                0.0
            } else {
                x[0] * x[0] * (1.0 / x[1]).sin()
            }
        }
        TargetKind::HighdimSineprod => {
            5.0 * PI * PI
                * (2.0 * PI * x[0]).sin()
                * x[1..].iter().map(|&v| (PI * v).sin()).product::<f64>()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // P10(0) = -63/256, so the product is 3969/65536 exactly
        assert_eq!(synthetic_target(TargetKind::Legendre10, &[0.0, 0.0]), 3969.0 / 65536.0);
        let v = synthetic_target(TargetKind::X2Sin1y, &[1.0, 2.0 / PI]);
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(synthetic_target(TargetKind::X2Sin1y, &[0.5, 0.0]), 0.0);
        assert_eq!(synthetic_target(TargetKind::HighdimSineprod, &[0.0, 0.3]), 0.0);
        let v = synthetic_target(TargetKind::HighdimSineprod, &[0.25, 0.5, 0.5]);
        assert!((v - 5.0 * PI * PI).abs() < 1e-12);
    }
}
