//! Brute-force reference evaluations.
//!
//! Every quantity is recomputed from the raw sample for each `(k, l, q)`
//! triple with no shared tables or running sums, so these routines cost
//! `O(n³·m·d)` and are meant for tests on small inputs only.

use crate::engine::combine_values;
use crate::model::{DirectionSet, Family, Method, Sample, StatFamily, StatProfile};

/// Evaluation sets: one closure per direction (or a single orthant "direction").
fn in_set(s: &Sample, family: Family, dirs: Option<&DirectionSet>, l: usize, i: usize, q: usize) -> bool {
    if family.uses_half_spaces() {
        let a = dirs.expect("half-space oracle needs directions").direction(l);
        let pi: f64 = a.iter().zip(s.row(i)).map(|(x, y)| x * y).sum();
        let pq: f64 = a.iter().zip(s.row(q)).map(|(x, y)| x * y).sum();
        pi <= pq
    } else {
        s.row(i).iter().zip(s.row(q)).all(|(x, y)| x <= y)
    }
}

fn direction_count(family: Family, dirs: Option<&DirectionSet>) -> usize {
    if family.uses_half_spaces() {
        dirs.expect("half-space oracle needs directions").m()
    } else {
        1
    }
}

/// Per-k statistic from a closure giving the process value at `(k, l, q)`.
fn aggregate<F>(n: usize, m: usize, family: Family, mut process: F) -> Vec<f64>
where
    F: FnMut(usize, usize, usize) -> f64,
{
    (1..n)
        .map(|k| {
            let mut sq = 0.0;
            let mut sup: f64 = 0.0;
            for l in 0..m {
                for q in 0..n {
                    let v = process(k, l, q);
                    sq += v * v;
                    sup = sup.max(v.abs());
                }
            }
            if family.is_squared() {
                sq / (m as f64 * n as f64)
            } else {
                sup
            }
        })
        .collect()
}

/// `D_n(k/n, ·)` evaluated from the empirical measures of `X_1..X_k` and `X_{k+1}..X_n`.
pub fn oracle_profile(s: &Sample, family: Family, dirs: Option<&DirectionSet>) -> StatProfile {
    let n = s.n();
    let nf = n as f64;
    let m = direction_count(family, dirs);
    let values = aggregate(n, m, family, |k, l, q| {
        let head = (0..k).filter(|&i| in_set(s, family, dirs, l, i, q)).count() as f64 / k as f64;
        let tail =
            (k..n).filter(|&i| in_set(s, family, dirs, l, i, q)).count() as f64 / (n - k) as f64;
        let lambda = k as f64 / nf;
        nf.sqrt() * lambda * (1.0 - lambda) * (head - tail)
    });
    StatProfile::new(n, values).expect("oracle profile is nonnegative")
}

/// Per-k multiplier statistics evaluated term by term.
///
/// `Check`: `n^{-1/2}[Σ_{i≤k} ξ_i(1_i − F_n) − (k/n) Σ_i ξ_i(1_i − F_n)]`.
/// `Hat`: `(1 − k/n) Ẑ − (k/n) Ẑ*` with prefix- and suffix-centred multipliers.
pub fn oracle_replicate_profile(
    s: &Sample,
    family: Family,
    dirs: Option<&DirectionSet>,
    xi: &[f64],
    method: Method,
) -> Vec<f64> {
    assert_eq!(xi.len(), s.n());
    assert!(method != Method::Sim, "no multiplier oracle for the simulation method");
    let n = s.n();
    let nf = n as f64;
    let m = direction_count(family, dirs);
    aggregate(n, m, family, |k, l, q| {
        let ind = |i: usize| if in_set(s, family, dirs, l, i, q) { 1.0 } else { 0.0 };
        let lambda = k as f64 / nf;
        match method {
            Method::Check => {
                let fq = (0..n).map(ind).sum::<f64>() / nf;
                let partial: f64 = (0..k).map(|i| xi[i] * (ind(i) - fq)).sum();
                let full: f64 = (0..n).map(|i| xi[i] * (ind(i) - fq)).sum();
                (partial - lambda * full) / nf.sqrt()
            }
            Method::Hat => {
                let head_mean = (0..k).map(|i| xi[i]).sum::<f64>() / k as f64;
                let tail_mean = (k..n).map(|i| xi[i]).sum::<f64>() / (n - k) as f64;
                let z: f64 = (0..k).map(|i| (xi[i] - head_mean) * ind(i)).sum::<f64>() / nf.sqrt();
                let z_star: f64 =
                    (k..n).map(|i| (xi[i] - tail_mean) * ind(i)).sum::<f64>() / nf.sqrt();
                (1.0 - lambda) * z - lambda * z_star
            }
            Method::Sim => unreachable!(),
        }
    })
}

/// Global multiplier statistic built from [`oracle_replicate_profile`].
pub fn oracle_replicate(
    s: &Sample,
    stat: StatFamily,
    dirs: Option<&DirectionSet>,
    xi: &[f64],
    method: Method,
) -> f64 {
    let per_k = oracle_replicate_profile(s, stat.family, dirs, xi, method);
    combine_values(&per_k, s.n(), stat.combiner)
}

/// Half-space multiplier statistics following the `(n−k)·Σhead − k·Σtail` display.
///
/// `Û`/`Ǔ` use `1/(m n⁴) Σ_{l,q} E²`, `V̂`/`V̌` use `n^{-3/2} max_{l,q} |E|`.
pub fn oracle_half_space_display(
    s: &Sample,
    family: Family,
    dirs: &DirectionSet,
    xi: &[f64],
    method: Method,
) -> Vec<f64> {
    assert!(family.uses_half_spaces());
    let n = s.n();
    let nf = n as f64;
    let m = dirs.m();
    let proj = |l: usize, i: usize| -> f64 {
        dirs.direction(l).iter().zip(s.row(i)).map(|(a, x)| a * x).sum()
    };
    (1..n)
        .map(|k| {
            let head_mean = (0..k).map(|i| xi[i]).sum::<f64>() / k as f64;
            let tail_mean = (k..n).map(|i| xi[i]).sum::<f64>() / (n - k) as f64;
            let mut sq = 0.0;
            let mut sup: f64 = 0.0;
            for l in 0..m {
                for q in 0..n {
                    let ind = |i: usize| if proj(l, i) <= proj(l, q) { 1.0 } else { 0.0 };
                    let (head, tail) = match method {
                        Method::Hat => (
                            (0..k).map(|i| (xi[i] - head_mean) * ind(i)).sum::<f64>(),
                            (k..n).map(|i| (xi[i] - tail_mean) * ind(i)).sum::<f64>(),
                        ),
                        Method::Check => {
                            let f = (0..n).map(ind).sum::<f64>() / nf;
                            (
                                (0..k).map(|i| xi[i] * (ind(i) - f)).sum::<f64>(),
                                (k..n).map(|i| xi[i] * (ind(i) - f)).sum::<f64>(),
                            )
                        }
                        Method::Sim => panic!("no multiplier display for the simulation method"),
                    };
                    let e = (n - k) as f64 * head - k as f64 * tail;
                    sq += e * e;
                    sup = sup.max(e.abs());
                }
            }
            if family == Family::U {
                sq / (m as f64 * nf.powi(4))
            } else {
                sup / nf.powf(1.5)
            }
        })
        .collect()
}
