#![allow(dead_code)]

use empcp::rng::{stream_rng, Stream};
use empcp::{DirectionSet, Sample};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian sample, optionally rounded to a coarse grid so ties occur.
pub fn random_sample(seed: u64, n: usize, d: usize, ties: bool) -> Sample {
    let mut rng = stream_rng(seed, Stream::Data, 99);
    let data: Vec<f64> = (0..n * d)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if ties {
                (2.0 * z).round() / 2.0
            } else {
                z
            }
        })
        .collect();
    Sample::from_flat(n, d, data).unwrap()
}

pub fn random_xi(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Multiplier, 99);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random unit directions with positive first coordinate.
pub fn random_dirs(seed: u64, d: usize, m: usize) -> DirectionSet {
    if d == 1 {
        return DirectionSet::univariate();
    }
    let mut rng = stream_rng(seed, Stream::Uniform, 99);
    let dirs = (0..m)
        .map(|_| {
            let mut a: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            a[0] = a[0].abs() + 1e-3;
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            a.iter().map(|x| x / norm).collect()
        })
        .collect();
    DirectionSet::new(d, dirs).unwrap()
}

/// `|a − b| ≤ tol · max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Kendall's tau for tie-free pairs in `O(n log n)` (count of discordant
/// pairs as inversions after sorting by `x`).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut v: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let inversions = merge_count(&mut v, &mut buf);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    1.0 - 2.0 * inversions as f64 / pairs
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        merge_count(l, &mut buf[..mid]) + merge_count(r, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// Kolmogorov–Smirnov distance between the empirical c.d.f. of `x` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

pub fn column(s: &Sample, j: usize) -> Vec<f64> {
    s.rows().map(|r| r[j]).collect()
}
