//! Observed change-point statistics.
//!
//! Both indexing classes reduce to the same object: a set of evaluation
//! columns `c` and, for every prefix length `k`, the count
//! `C_k(c) = #{i <= k : X_i falls in the set indexed by c}`.
//! For lower-left orthants the columns are the data points themselves
//! (`1(X_i <= X_q)` componentwise); for half-spaces they are the pairs
//! `(l, q)` of a direction and a data point (`1(a_l'X_i <= a_l'X_q)`).
//! Counts are built with the recurrence `C_k = C_{k-1} + 1(row k)`.

use crate::error::{Error, Result};
use crate::model::{Combiner, DirectionSet, Family, Sample, StatProfile};

/// Prefix counts of the indicator matrix, `(n + 1) × cols`, row `k` holding `C_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    n: usize,
    m: usize,
    cols: usize,
    counts: Vec<u32>,
}

impl IndicatorTable {
    fn from_indicator<F>(n: usize, m: usize, mut below: F) -> Self
    where
        F: FnMut(usize, usize) -> bool,
    {
        let cols = n * m;
        let mut counts = vec![0u32; (n + 1) * cols];
        for k in 1..=n {
            let (prev, cur) = counts.split_at_mut(k * cols);
            let prev = &prev[(k - 1) * cols..];
            let cur = &mut cur[..cols];
            for c in 0..cols {
                cur[c] = prev[c] + u32::from(below(k - 1, c));
            }
        }
        Self {
            n,
            m,
            cols,
            counts,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of directions (1 for orthants).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `C_k(c)` for `k` in `0..=n`.
    pub fn count(&self, k: usize, c: usize) -> u32 {
        self.counts[k * self.cols + c]
    }

    /// Row `k` of the prefix-count matrix.
    pub fn prefix_row(&self, k: usize) -> &[u32] {
        &self.counts[k * self.cols..(k + 1) * self.cols]
    }

    /// Whether observation `i` (0-based) lies in the set of column `c`.
    pub fn indicator(&self, i: usize, c: usize) -> bool {
        self.count(i + 1, c) != self.count(i, c)
    }
}

/// Counts of `X_i <= X_q` (componentwise) over prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantTable {
    table: IndicatorTable,
    /// The sample itself when `d = 1`, where orthants are univariate half-lines.
    scores: Option<Vec<f64>>,
}

impl OrthantTable {
    pub fn table(&self) -> &IndicatorTable {
        &self.table
    }

    pub(crate) fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    /// `C_k(q)` with 1-based `q`, matching the usual notation.
    pub fn count(&self, k: usize, q: usize) -> u32 {
        self.table.count(k, q - 1)
    }
}

/// Projected sample and counts of `a_l'X_i <= a_l'X_q` over prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTable {
    table: IndicatorTable,
    projections: Vec<f64>,
}

impl ProjectionTable {
    pub fn table(&self) -> &IndicatorTable {
        &self.table
    }

    pub fn m(&self) -> usize {
        self.table.m
    }

    pub(crate) fn projections(&self) -> &[f64] {
        &self.projections
    }

    /// `a_l'X_i` with 1-based `l` and `i`.
    pub fn projection(&self, l: usize, i: usize) -> f64 {
        self.projections[(l - 1) * self.table.n + (i - 1)]
    }

    /// `C^l_k(q)` with 1-based `l` and `q`.
    pub fn count(&self, l: usize, k: usize, q: usize) -> u32 {
        self.table.count(k, (l - 1) * self.table.n + (q - 1))
    }
}

fn dominated(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

pub fn build_orthant_table(s: &Sample) -> OrthantTable {
    let n = s.n();
    let table = IndicatorTable::from_indicator(n, 1, |i, q| dominated(s.row(i), s.row(q)));
    let scores = (s.d() == 1).then(|| s.as_flat().to_vec());
    OrthantTable { table, scores }
}

pub fn build_projection_table(s: &Sample, dirs: &DirectionSet) -> Result<ProjectionTable> {
    if dirs.d() != s.d() {
        return Err(Error::DimensionMismatch {
            expected: s.d(),
            found: dirs.d(),
        });
    }
    let n = s.n();
    let mut projections = Vec::with_capacity(n * dirs.m());
    for a in dirs.iter() {
        projections.extend(s.rows().map(|x| dot(a, x)));
    }
    let table = IndicatorTable::from_indicator(n, dirs.m(), |i, c| {
        let l = c / n;
        projections[l * n + i] <= projections[c]
    });
    Ok(ProjectionTable { table, projections })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `C_k(c)/k - (C_n(c) - C_k(c))/(n - k)`, the difference of the two empirical measures.
#[inline]
fn measure_gap(ck: u32, cn: u32, k: usize, n: usize) -> f64 {
    f64::from(ck) / k as f64 - f64::from(cn - ck) / (n - k) as f64
}

/// `k²(n−k)²/(n⁴m) Σ_c gap²`; with `m = 1` this is the orthant Cramér–von Mises form.
pub(crate) fn squared_profile(t: &IndicatorTable) -> StatProfile {
    let n = t.n;
    let nf = n as f64;
    let last = t.prefix_row(n);
    let values = (1..n)
        .map(|k| {
            let sum: f64 = t
                .prefix_row(k)
                .iter()
                .zip(last)
                .map(|(&ck, &cn)| {
                    let g = measure_gap(ck, cn, k, n);
                    g * g
                })
                .sum();
            let w = k as f64 * (n - k) as f64;
            w * w / (nf * nf * nf * nf * t.m as f64) * sum
        })
        .collect();
    StatProfile::from_parts_unchecked(n, values)
}

/// `k(n−k)/n^{3/2} max_c |gap|`.
pub(crate) fn sup_profile(t: &IndicatorTable) -> StatProfile {
    let n = t.n;
    let nf = n as f64;
    let last = t.prefix_row(n);
    let values = (1..n)
        .map(|k| {
            let sup = t
                .prefix_row(k)
                .iter()
                .zip(last)
                .map(|(&ck, &cn)| measure_gap(ck, cn, k, n).abs())
                .fold(0.0, f64::max);
            k as f64 * (n - k) as f64 / (nf * nf.sqrt()) * sup
        })
        .collect();
    StatProfile::from_parts_unchecked(n, values)
}

pub fn profile_s(t: &OrthantTable) -> StatProfile {
    squared_profile(&t.table)
}

pub fn profile_t(t: &OrthantTable) -> StatProfile {
    sup_profile(&t.table)
}

pub fn profile_u(t: &ProjectionTable) -> StatProfile {
    squared_profile(&t.table)
}

pub fn profile_v(t: &ProjectionTable) -> StatProfile {
    sup_profile(&t.table)
}

/// Profile of any family; `dirs` is required for `U` and `V`.
pub fn profile(s: &Sample, family: Family, dirs: Option<&DirectionSet>) -> Result<StatProfile> {
    match family {
        Family::S => Ok(profile_s(&build_orthant_table(s))),
        Family::T => Ok(profile_t(&build_orthant_table(s))),
        Family::U | Family::V => {
            let dirs = dirs.ok_or_else(|| {
                Error::InvalidParameter("half-space statistics need a direction set".into())
            })?;
            let t = build_projection_table(s, dirs)?;
            Ok(if family == Family::U {
                profile_u(&t)
            } else {
                profile_v(&t)
            })
        }
    }
}

/// Global statistic from per-k values: the maximum, or the sum divided by `n`.
pub fn combine(p: &StatProfile, c: Combiner) -> f64 {
    combine_values(p.values(), p.n(), c)
}

pub(crate) fn combine_values(values: &[f64], n: usize, c: Combiner) -> f64 {
    match c {
        Combiner::Max => values.iter().copied().fold(0.0, f64::max),
        Combiner::Mean => values.iter().sum::<f64>() / n as f64,
    }
}

/// Smallest `k` attaining the maximum of the profile.
pub fn estimate_changepoint(p: &StatProfile) -> usize {
    let mut best = 0;
    for (i, &v) in p.values().iter().enumerate() {
        if v > p.values()[best] {
            best = i;
        }
    }
    best + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Combiner;

    fn s(rows: &[&[f64]]) -> Sample {
        Sample::new(rows).unwrap()
    }

    #[test]
    fn two_point_orthant_counts() {
        let t = build_orthant_table(&s(&[&[0.0], &[1.0]]));
        assert_eq!(t.count(1, 1), 1);
        assert_eq!(t.count(1, 2), 1);
        assert_eq!(t.count(2, 1), 1);
        assert_eq!(t.count(2, 2), 2);
        assert_eq!(t.count(0, 1), 0);
    }

    #[test]
    fn identical_rows_count_every_prefix() {
        let t = build_orthant_table(&s(&[&[3.0, 1.0], &[3.0, 1.0], &[3.0, 1.0]]));
        for k in 0..=3 {
            for q in 1..=3 {
                assert_eq!(t.count(k, q), k as u32);
            }
        }
    }

    #[test]
    fn no_componentwise_dominance() {
        let t = build_orthant_table(&s(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(t.count(2, 1), 1);
        assert_eq!(t.count(2, 2), 1);
    }

    #[test]
    fn table_invariants_hold() {
        let x = s(&[&[0.3, 2.0], &[-1.0, 0.5], &[0.3, 2.0], &[4.0, -3.0], &[0.0, 0.0]]);
        let t = build_orthant_table(&x);
        for q in 1..=5 {
            assert_eq!(t.count(0, q), 0);
            assert!(t.count(5, q) >= 1);
            for k in 1..=5 {
                let step = t.count(k, q) - t.count(k - 1, q);
                assert!(step <= 1);
            }
        }
    }

    #[test]
    fn univariate_projection_matches_orthants() {
        let x = s(&[&[0.0], &[1.0]]);
        let o = build_orthant_table(&x);
        let p = build_projection_table(&x, &DirectionSet::univariate()).unwrap();
        assert_eq!(o.table(), p.table());
        assert_eq!(o.scores(), Some(p.projections()));
    }

    #[test]
    fn first_axis_projection() {
        let x = s(&[&[0.0, 5.0], &[1.0, -5.0]]);
        let dirs = DirectionSet::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let p = build_projection_table(&x, &dirs).unwrap();
        assert_eq!(p.projection(1, 1), 0.0);
        assert_eq!(p.projection(1, 2), 1.0);
        assert_eq!(p.count(1, 1, 1), 1);
        assert_eq!(p.count(1, 1, 2), 1);
    }

    #[test]
    fn diagonal_projection() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = s(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let dirs = DirectionSet::new(2, vec![vec![h, h]]).unwrap();
        let p = build_projection_table(&x, &dirs).unwrap();
        assert!((p.projection(1, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.projection(1, 2), 0.0);
        assert_eq!(p.count(1, 1, 2), 0);
        assert_eq!(p.count(1, 1, 1), 1);
    }

    #[test]
    fn projection_dimension_mismatch() {
        let x = s(&[&[0.0], &[1.0]]);
        let dirs = DirectionSet::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            build_projection_table(&x, &dirs).unwrap_err(),
            Error::DimensionMismatch {
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn two_point_profiles() {
        let t = build_orthant_table(&s(&[&[0.0], &[1.0]]));
        let ps = profile_s(&t);
        let pt = profile_t(&t);
        assert!((ps.at(1) - 1.0 / 16.0).abs() < 1e-15);
        assert!((pt.at(1) - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_profiles_vanish() {
        let x = s(&[&[2.0, 1.0][..]; 6]);
        let o = build_orthant_table(&x);
        assert!(profile_s(&o).values().iter().all(|&v| v == 0.0));
        assert!(profile_t(&o).values().iter().all(|&v| v == 0.0));
        let dirs = DirectionSet::new(2, vec![vec![1.0, 0.0], vec![0.6, 0.8]]).unwrap();
        let p = build_projection_table(&x, &dirs).unwrap();
        assert!(profile_u(&p).values().iter().all(|&v| v == 0.0));
        assert!(profile_v(&p).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn combiners() {
        let p = StatProfile::new(3, vec![1.0, 3.0]).unwrap();
        assert_eq!(combine(&p, Combiner::Max), 3.0);
        assert!((combine(&p, Combiner::Mean) - 4.0 / 3.0).abs() < 1e-15);
        let z = StatProfile::new(3, vec![0.0, 0.0]).unwrap();
        assert_eq!(combine(&z, Combiner::Max), 0.0);
        assert_eq!(combine(&z, Combiner::Mean), 0.0);
    }

    #[test]
    fn estimator_takes_first_maximizer() {
        let p = StatProfile::new(4, vec![0.1, 0.9, 0.9]).unwrap();
        assert_eq!(estimate_changepoint(&p), 2);
        let p = StatProfile::new(2, vec![5.0]).unwrap();
        assert_eq!(estimate_changepoint(&p), 1);
        let p = StatProfile::new(4, vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(estimate_changepoint(&p), 1);
    }

    #[test]
    fn half_space_profile_requires_directions() {
        let x = s(&[&[0.0], &[1.0]]);
        assert!(profile(&x, Family::U, None).is_err());
        assert!(profile(&x, Family::U, Some(&DirectionSet::univariate())).is_ok());
    }
}
