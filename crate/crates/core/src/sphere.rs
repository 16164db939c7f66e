//! Deterministic discretizations of the half-sphere `{a : |a| = 1, a_1 > 0}`.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::DirectionSet;

/// `m` quasi-uniform directions on the half-sphere of `R^d`.
///
/// * `d = 1`: `{(1)}` whatever `m` is.
/// * `d = 2`: midpoint angular grid `φ_l = −π/2 + π(l − ½)/m`, `a_l = (cos φ_l, sin φ_l)`.
/// * `d = 3`: Fibonacci spiral on the cap, heights `a_1 = (l − ½)/m` (equal-area
///   bands) and golden-angle longitudes.
/// * `d ≥ 4`: Kronecker sequence with generalized golden-ratio increments,
///   mapped through the Gaussian quantile and normalized, folded into `a_1 > 0`.
pub fn discretize(d: usize, m: usize) -> Result<DirectionSet> {
    if d == 0 {
        return Err(Error::Empty);
    }
    if m == 0 {
        return Err(Error::InvalidM);
    }
    let dirs = match d {
        1 => return Ok(DirectionSet::univariate()),
        2 => (1..=m)
            .map(|l| {
                let phi = -PI / 2.0 + PI * (l as f64 - 0.5) / m as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect(),
        3 => fibonacci_cap(m),
        _ => kronecker_cap(d, m),
    };
    DirectionSet::new(d, dirs)
}

fn fibonacci_cap(m: usize) -> Vec<Vec<f64>> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let h = (i as f64 + 0.5) / m as f64;
            let r = (1.0 - h * h).sqrt();
            let theta = golden_angle * i as f64;
            normalize(vec![h, r * theta.cos(), r * theta.sin()])
        })
        .collect()
}

fn kronecker_cap(d: usize, m: usize) -> Vec<Vec<f64>> {
    // φ_d is the unique positive root of x^{d+1} = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let gauss = Normal::new(0.0, 1.0).expect("standard normal");
    (0..m)
        .map(|i| {
            let mut v: Vec<f64> = alpha
                .iter()
                .map(|a| {
                    let u = (0.5 + a * (i + 1) as f64).fract();
                    gauss.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
                })
                .collect();
            if v[0] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            if v[0] == 0.0 {
                v[0] = f64::EPSILON;
            }
            normalize(v)
        })
        .collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_angle(dirs: &DirectionSet) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..dirs.m() {
            for j in i + 1..dirs.m() {
                let c: f64 = dirs
                    .direction(i)
                    .iter()
                    .zip(dirs.direction(j))
                    .map(|(a, b)| a * b)
                    .sum();
                best = best.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    #[test]
    fn univariate_is_single_unit_vector() {
        let d = discretize(1, 32).unwrap();
        assert_eq!(d.m(), 1);
        assert_eq!(d.direction(0), &[1.0]);
    }

    #[test]
    fn two_point_planar_grid() {
        let d = discretize(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.direction(0)[0] - h).abs() < 1e-15);
        assert!((d.direction(0)[1] + h).abs() < 1e-15);
        assert!((d.direction(1)[0] - h).abs() < 1e-15);
        assert!((d.direction(1)[1] - h).abs() < 1e-15);
    }

    #[test]
    fn planar_grid_is_mirror_symmetric() {
        for m in [1, 2, 5, 8, 13] {
            let d = discretize(2, m).unwrap();
            for l in 0..m {
                let a = d.direction(l);
                let b = d.direction(m - 1 - l);
                assert!((a[0] - b[0]).abs() < 1e-15);
                assert!((a[1] + b[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spiral_quality_in_three_dimensions() {
        let m = 32;
        let d = discretize(3, m).unwrap();
        assert_eq!(d.m(), m);
        let ideal = (2.0 * PI / m as f64).sqrt();
        let got = min_angle(&d);
        assert!(got >= 0.8 * ideal, "min angle {got} vs ideal {ideal}");
    }

    #[test]
    fn higher_dimensions_are_valid_and_distinct() {
        for d in 4..=6 {
            let dirs = discretize(d, 40).unwrap();
            assert_eq!(dirs.m(), 40);
            assert!(min_angle(&dirs) > 1e-3);
        }
    }

    #[test]
    fn invariants_hold_everywhere() {
        for d in 1..=5 {
            for m in [1, 3, 8, 32] {
                let dirs = discretize(d, m).unwrap();
                for a in dirs.iter() {
                    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() <= 1e-12);
                    assert!(a[0] > 0.0);
                }
                assert_eq!(discretize(d, m).unwrap(), dirs);
            }
        }
    }

    #[test]
    fn zero_directions_rejected() {
        assert_eq!(discretize(2, 0).unwrap_err(), Error::InvalidM);
    }
}
