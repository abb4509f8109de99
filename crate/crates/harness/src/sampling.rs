use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    UniformRandom,
    Equispaced,
    /// Naive dart throwing, d = 2 only.
    PoissonDisk,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::UniformRandom => "uniform-random",
            Sampling::Equispaced => "equispaced",
            Sampling::PoissonDisk => "poisson-disk",
        })
    }
}

impl FromStr for Sampling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform-random" | "uniform" | "random" => Ok(Sampling::UniformRandom),
            "equispaced" | "grid" => Ok(Sampling::Equispaced),
            "poisson-disk" => Ok(Sampling::PoissonDisk),
            _ => Err(format!(
                "unknown sampling `{s}` (expected uniform-random, equispaced or poisson-disk)"
            )),
        }
    }
}

/// Derives an independent stream seed from a base seed, a trial id and a
/// purpose tag (splitmix64 finaliser).
pub fn derive_seed(seed: u64, trial: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ stream.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn uniform_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || rng.gen_range(-1.0..=1.0))
}

/// Tensor grid with `k` equispaced nodes per axis including the endpoints;
/// the last coordinate varies fastest.
pub fn grid_points(k: usize, d: usize) -> Array2<f64> {
    let axis = |i: usize| if k == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (k - 1) as f64 };
    let total = k.pow(d as u32);
    Array2::from_shape_fn((total, d), |(q, j)| {
        let stride = k.pow((d - 1 - j) as u32);
        axis((q / stride) % k)
    })
}

fn poisson_disk(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // hexagonal packing density bound, scaled down so dart throwing terminates
    let mut r = 0.7 * (4.0 / n as f64).sqrt();
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut misses = 0usize;
    while pts.len() < n {
        let c = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let ok = pts
            .iter()
            .all(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) >= r * r);
        if ok {
            pts.push(c);
            misses = 0;
        } else {
            misses += 1;
            if misses > 1000 {
                r *= 0.9;
                misses = 0;
            }
        }
    }
    Array2::from_shape_fn((n, 2), |(i, j)| pts[i][j])
}

/// `n` points in `[-1,1]^d`.
pub fn sample_points(n: usize, d: usize, mode: Sampling, seed: u64) -> Result<Array2<f64>> {
    if n == 0 || d == 0 {
        return Err(HarnessError::Config("need at least one point and one dimension".into()));
    }
    match mode {
        Sampling::UniformRandom => Ok(uniform_points(n, d, seed)),
        Sampling::Equispaced => match d {
            1 => Ok(grid_points(n, 1)),
            2 => {
                let k = (n as f64).sqrt().ceil() as usize;
                let k = if k * k < n { k + 1 } else { k };
                let g = grid_points(k, 2);
                Ok(g.slice(ndarray::s![0..n, ..]).to_owned())
            }
            _ => Err(HarnessError::Config(format!(
                "equispaced sampling is only supported for d <= 2 (got d = {d})"
            ))),
        },
        Sampling::PoissonDisk => {
            if d != 2 {
                return Err(HarnessError::Config("poisson-disk sampling requires d = 2".into()));
            }
            Ok(poisson_disk(n, seed))
        }
    }
}

/// Points on the boundary of `[-1,1]^2`: `per_edge` on each side, either
/// equispaced (counter-clockwise, corners counted once) or uniform.
pub fn square_boundary(per_edge: usize, random: bool, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(4 * per_edge);
    for side in 0..4 {
        for k in 0..per_edge {
            let t = if random {
                rng.gen_range(-1.0..1.0)
            } else {
                -1.0 + 2.0 * k as f64 / per_edge as f64
            };
            rows.push(match side {
                0 => [t, -1.0],
                1 => [1.0, t],
                2 => [-t, 1.0],
                _ => [-1.0, -t],
            });
        }
    }
    Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j])
}

/// Held-out evaluation points: a `k x k` grid for d = 2, seeded uniform
/// points otherwise.
pub fn test_points(d: usize, grid_k: usize, random_n: usize, seed: u64) -> Array2<f64> {
    if d == 2 {
        grid_points(grid_k, 2)
    } else {
        uniform_points(random_n, d, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equispaced_line() {
        let p = sample_points(4, 1, Sampling::Equispaced, 0).unwrap();
        let want = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn equispaced_square_truncates() {
        let p = sample_points(10, 2, Sampling::Equispaced, 0).unwrap();
        assert_eq!(p.dim(), (10, 2));
        assert_eq!(p.row(0).to_vec(), vec![-1.0, -1.0]);
        assert_eq!(p.row(3).to_vec(), vec![-1.0, 1.0]);
        assert!((p[[4, 0]] + 1.0 / 3.0).abs() < 1e-15 && p[[4, 1]] == -1.0);
        assert!(sample_points(9, 3, Sampling::Equispaced, 0).is_err());
    }

    #[test]
    fn seeded_and_in_range() {
        let a = sample_points(100, 3, Sampling::UniformRandom, 5).unwrap();
        let b = sample_points(100, 3, Sampling::UniformRandom, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_ne!(a, sample_points(100, 3, Sampling::UniformRandom, 6).unwrap());
    }

    #[test]
    fn uniform_mean_within_three_sigma() {
        let n = 100_000;
        let p = uniform_points(n, 1, 42);
        let sigma = (1.0f64 / 3.0).sqrt() / (n as f64).sqrt();
        assert!(p.mean().unwrap().abs() < 3.0 * sigma);
    }

    #[test]
    fn poisson_disk_count_and_spacing() {
        let p = sample_points(64, 2, Sampling::PoissonDisk, 1).unwrap();
        assert_eq!(p.nrows(), 64);
        let mut dmin = f64::INFINITY;
        for i in 0..64 {
            for j in 0..i {
                let d = (&p.row(i) - &p.row(j)).mapv(|v| v * v).sum().sqrt();
                dmin = dmin.min(d);
            }
        }
        assert!(dmin > 0.05);
    }

    #[test]
    fn boundary_layout() {
        let b = square_boundary(100, false, 0);
        assert_eq!(b.nrows(), 400);
        for r in b.rows() {
            assert!(r[0].abs() == 1.0 || r[1].abs() == 1.0);
        }
        let mut rows: Vec<(i64, i64)> =
            b.rows().into_iter().map(|r| ((r[0] * 1e9) as i64, (r[1] * 1e9) as i64)).collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 400);
    }

    #[test]
    fn grid_layout() {
        let g = grid_points(3, 2);
        assert_eq!(g.row(1).to_vec(), vec![-1.0, 0.0]);
        assert_eq!(g.row(3).to_vec(), vec![0.0, -1.0]);
        assert_eq!(test_points(2, 256, 10, 0).nrows(), 65536);
        assert_eq!(test_points(4, 256, 20000, 0).dim(), (20000, 4));
    }
}
