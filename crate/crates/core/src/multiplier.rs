//! Multiplier-bootstrap replicates and p-values.
//!
//! For a multiplier row `ξ` and a candidate `k`, both multiplier processes
//! at column `c` equal `n^{-3/2} E_k(c)` with
//!
//! ```text
//! check: E = (n−k) Σ_{i≤k} ξ_i (1_i − F_n) − k Σ_{i>k} ξ_i (1_i − F_n)
//! hat:   E = (n−k) Σ_{i≤k} (ξ_i − ξ̄_k) 1_i − k Σ_{i>k} (ξ_i − ξ̄*_{n−k}) 1_i
//! ```
//!
//! where `1_i` is the indicator of column `c` at observation `i`. Both are
//! rewritten in terms of the running sums `A_k(c) = Σ_{i≤k} ξ_i 1_i`,
//! `A_n(c)` and `C_k(c)`, so one left-to-right sweep over the rows of the
//! indicator matrix yields every `E_k(c)`. The indicator matrix is built once
//! per sample and shared read-only by all replicates.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    build_orthant_table, build_projection_table, combine, estimate_changepoint, profile_s,
    profile_t, profile_u, profile_v, IndicatorTable, OrthantTable, ProjectionTable,
};
use crate::error::{Error, Result};
use crate::model::{
    Combiner, DirectionSet, Family, Method, MultiplierLaw, MultiplierMatrix, Sample,
    StatFamily, StatProfile, TestReport,
};
use crate::rng::{stream_rng, Stream};

/// Bootstrap replicates of one global statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub values: Vec<f64>,
    pub method: Method,
    pub seed: u64,
}

/// Global values of the squared and supremum statistics for one replicate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReplicateStats {
    pub squared_max: f64,
    pub squared_mean: f64,
    pub sup_max: f64,
    pub sup_mean: f64,
}

impl ReplicateStats {
    pub fn get(&self, family: Family, combiner: Combiner) -> f64 {
        match (family.is_squared(), combiner) {
            (true, Combiner::Max) => self.squared_max,
            (true, Combiner::Mean) => self.squared_mean,
            (false, Combiner::Max) => self.sup_max,
            (false, Combiner::Mean) => self.sup_mean,
        }
    }
}

/// How `A_n(c) = Σ_i ξ_i 1_i(c)` is obtained for a fresh `ξ`.
#[derive(Debug, Clone)]
enum TotalStrategy {
    /// Columns are univariate half-lines `{v <= v_q}`: per direction, the
    /// observation order sorted by score, so `A_n(c)` is a prefix sum of `ξ`
    /// in that order, read at position `C_n(c)`.
    Sorted { order: Vec<usize> },
    /// General case: a dense pass over the indicator matrix.
    Dense,
}

/// Shared, read-only state for computing replicates over one indicator table.
#[derive(Debug, Clone)]
pub struct MultiplierKernel {
    n: usize,
    m: usize,
    cols: usize,
    /// Row `i` holds `1_i(c)` as 0.0/1.0.
    indicators: Vec<f64>,
    /// `C_n(c)`.
    full_counts: Vec<f64>,
    /// `F_n(c) = C_n(c) / n`.
    ecdf: Vec<f64>,
    /// `C_n(c)` as an index, used with the sorted strategy.
    ranks: Vec<usize>,
    totals: TotalStrategy,
}

/// Per-worker buffers.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    acc: Vec<f64>,
    cnt: Vec<f64>,
    tot: Vec<f64>,
    cum: Vec<f64>,
    xi: Vec<f64>,
}

impl MultiplierKernel {
    fn new(table: &IndicatorTable, scores: Option<&[f64]>) -> Self {
        let n = table.n();
        let cols = table.cols();
        let m = table.m();
        let mut indicators = vec![0.0; n * cols];
        for i in 0..n {
            let (prev, cur) = (table.prefix_row(i), table.prefix_row(i + 1));
            for (dst, (a, b)) in indicators[i * cols..(i + 1) * cols]
                .iter_mut()
                .zip(prev.iter().zip(cur))
            {
                *dst = f64::from(b - a);
            }
        }
        let last = table.prefix_row(n);
        let full_counts: Vec<f64> = last.iter().map(|&c| f64::from(c)).collect();
        let ecdf = full_counts.iter().map(|c| c / n as f64).collect();
        let ranks = last.iter().map(|&c| c as usize).collect();
        let totals = match scores {
            Some(scores) => {
                let mut order = Vec::with_capacity(n * m);
                for l in 0..m {
                    let s = &scores[l * n..(l + 1) * n];
                    let mut idx: Vec<usize> = (0..n).collect();
                    idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
                    order.extend(idx);
                }
                TotalStrategy::Sorted { order }
            }
            None => TotalStrategy::Dense,
        };
        Self {
            n,
            m,
            cols,
            indicators,
            full_counts,
            ecdf,
            ranks,
            totals,
        }
    }

    pub fn for_orthants(t: &OrthantTable) -> Self {
        Self::new(t.table(), t.scores())
    }

    pub fn for_half_spaces(t: &ProjectionTable) -> Self {
        Self::new(t.table(), Some(t.projections()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn fill_totals(&self, xi: &[f64], s: &mut Scratch) {
        let (n, cols) = (self.n, self.cols);
        s.tot.clear();
        match &self.totals {
            TotalStrategy::Sorted { order } => {
                s.tot.resize(cols, 0.0);
                for l in 0..self.m {
                    s.cum.clear();
                    s.cum.push(0.0);
                    let mut run = 0.0;
                    for &i in &order[l * n..(l + 1) * n] {
                        run += xi[i];
                        s.cum.push(run);
                    }
                    for q in 0..n {
                        let c = l * n + q;
                        s.tot[c] = s.cum[self.ranks[c]];
                    }
                }
            }
            TotalStrategy::Dense => {
                s.tot.resize(cols, 0.0);
                for (i, &x) in xi.iter().enumerate() {
                    let row = &self.indicators[i * cols..(i + 1) * cols];
                    for (t, &b) in s.tot.iter_mut().zip(row) {
                        *t += x * b;
                    }
                }
            }
        }
    }

    /// Global replicate statistics for one multiplier row.
    pub fn replicate(&self, xi: &[f64], method: Method, s: &mut Scratch) -> Result<ReplicateStats> {
        let nf = self.n as f64;
        let mut out = ReplicateStats::default();
        self.trace(xi, method, s, |_, sq, sp| {
            out.squared_max = out.squared_max.max(sq);
            out.squared_mean += sq;
            out.sup_max = out.sup_max.max(sp);
            out.sup_mean += sp;
        })?;
        out.squared_mean /= nf;
        out.sup_mean /= nf;
        Ok(out)
    }

    /// Per-k replicate values `(squared, sup)` for `k = 1..n−1`.
    pub fn replicate_profiles(&self, xi: &[f64], method: Method) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut sq = Vec::with_capacity(self.n - 1);
        let mut sup = Vec::with_capacity(self.n - 1);
        self.trace(xi, method, &mut Scratch::default(), |_, a, b| {
            sq.push(a);
            sup.push(b);
        })?;
        Ok((sq, sup))
    }

    fn trace<F>(&self, xi: &[f64], method: Method, s: &mut Scratch, visit: F) -> Result<()>
    where
        F: FnMut(usize, f64, f64),
    {
        if xi.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: xi.len(),
            });
        }
        match method {
            Method::Check => {
                self.sweep(xi, method, s, visit);
                Ok(())
            }
            Method::Hat => {
                // The hat process is invariant to shifting ξ by a constant;
                // shifting by ξ_1 makes constant rows vanish exactly.
                let mut shifted = std::mem::take(&mut s.xi);
                shifted.clear();
                shifted.extend(xi.iter().map(|x| x - xi[0]));
                self.sweep(&shifted, method, s, visit);
                s.xi = shifted;
                Ok(())
            }
            Method::Sim => Err(Error::InvalidParameter(
                "the simulation method does not use multipliers".into(),
            )),
        }
    }

    fn sweep<F>(&self, xi: &[f64], method: Method, s: &mut Scratch, mut visit: F)
    where
        F: FnMut(usize, f64, f64),
    {
        let (n, cols) = (self.n, self.cols);
        let nf = n as f64;
        self.fill_totals(xi, s);
        s.acc.clear();
        s.acc.resize(cols, 0.0);
        if method == Method::Hat {
            s.cnt.clear();
            s.cnt.resize(cols, 0.0);
        }
        let xi_total: f64 = xi.iter().sum();
        let sq_scale = 1.0 / (self.m as f64 * nf * nf * nf * nf);
        let sup_scale = 1.0 / (nf * nf.sqrt());

        let mut xi_cum = 0.0;
        for k in 1..n {
            let x = xi[k - 1];
            xi_cum += x;
            let kf = k as f64;
            let row = &self.indicators[(k - 1) * cols..k * cols];
            let (sum, sup) = match method {
                Method::Check => {
                    // E = n A_k − k A_n − F_n (n Ξ_k − k Ξ_n)
                    let g = nf * xi_cum - kf * xi_total;
                    sweep_check(&mut s.acc, row, &s.tot, &self.ecdf, x, nf, kf, g)
                }
                _ => {
                    // E = n A_k − k A_n − C_k ((n−k) ξ̄_k + k ξ̄*) + k ξ̄* C_n
                    let head = xi_cum / kf;
                    let tail = (xi_total - xi_cum) / (n - k) as f64;
                    let a = (n - k) as f64 * head + kf * tail;
                    let b = kf * tail;
                    sweep_hat(
                        &mut s.acc,
                        &mut s.cnt,
                        row,
                        &s.tot,
                        &self.full_counts,
                        x,
                        nf,
                        kf,
                        a,
                        b,
                    )
                }
            };
            visit(k, sum * sq_scale, sup * sup_scale);
        }
    }

    /// The multiplier process `n^{-3/2} E_k(c)` at a single `k`, for every column.
    pub fn process_at(&self, xi: &[f64], method: Method, k: usize) -> Result<Vec<f64>> {
        if xi.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: xi.len(),
            });
        }
        if k == 0 || k >= self.n {
            return Err(Error::InvalidParameter(format!(
                "k = {k} outside 1..{}",
                self.n
            )));
        }
        let (n, cols) = (self.n, self.cols);
        let nf = n as f64;
        let xi_total: f64 = xi.iter().sum();
        let xi_head: f64 = xi[..k].iter().sum();
        let mut out = Vec::with_capacity(cols);
        for c in 0..cols {
            let mut acc = 0.0;
            let mut tot = 0.0;
            let mut cnt = 0.0;
            for (i, &x) in xi.iter().enumerate().take(n) {
                let b = self.indicators[i * cols + c];
                tot += x * b;
                if i < k {
                    acc += x * b;
                    cnt += b;
                }
            }
            let e = match method {
                Method::Check => {
                    let f = self.ecdf[c];
                    (n - k) as f64 * (acc - f * xi_head)
                        - k as f64 * ((tot - acc) - f * (xi_total - xi_head))
                }
                Method::Hat => {
                    let head = xi_head / k as f64;
                    let tail = (xi_total - xi_head) / (n - k) as f64;
                    (n - k) as f64 * (acc - head * cnt)
                        - k as f64 * ((tot - acc) - tail * (self.full_counts[c] - cnt))
                }
                Method::Sim => {
                    return Err(Error::InvalidParameter(
                        "the simulation method does not use multipliers".into(),
                    ))
                }
            };
            out.push(e / (nf * nf.sqrt()));
        }
        Ok(out)
    }
}

const LANES: usize = 4;

#[allow(clippy::too_many_arguments)]
#[inline]
fn sweep_check(
    acc: &mut [f64],
    row: &[f64],
    tot: &[f64],
    ecdf: &[f64],
    x: f64,
    n: f64,
    k: f64,
    g: f64,
) -> (f64, f64) {
    let mut sum = [0.0; LANES];
    let mut sup = [0.0f64; LANES];
    let split = acc.len() / LANES * LANES;
    let (acc_v, acc_r) = acc.split_at_mut(split);
    for (((a, r), t), f) in acc_v
        .chunks_exact_mut(LANES)
        .zip(row.chunks_exact(LANES))
        .zip(tot.chunks_exact(LANES))
        .zip(ecdf.chunks_exact(LANES))
    {
        for j in 0..LANES {
            a[j] += x * r[j];
            let e = n * a[j] - k * t[j] - f[j] * g;
            sum[j] += e * e;
            let ae = e.abs();
            sup[j] = if ae > sup[j] { ae } else { sup[j] };
        }
    }
    let mut s: f64 = sum.iter().sum();
    let mut m = sup.iter().copied().fold(0.0, f64::max);
    for (j, a) in acc_r.iter_mut().enumerate() {
        let c = split + j;
        *a += x * row[c];
        let e = n * *a - k * tot[c] - ecdf[c] * g;
        s += e * e;
        m = m.max(e.abs());
    }
    (s, m)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn sweep_hat(
    acc: &mut [f64],
    cnt: &mut [f64],
    row: &[f64],
    tot: &[f64],
    full: &[f64],
    x: f64,
    n: f64,
    k: f64,
    a_coef: f64,
    b_coef: f64,
) -> (f64, f64) {
    let mut sum = [0.0; LANES];
    let mut sup = [0.0f64; LANES];
    let split = acc.len() / LANES * LANES;
    let (acc_v, acc_r) = acc.split_at_mut(split);
    let (cnt_v, cnt_r) = cnt.split_at_mut(split);
    for ((((a, c), r), t), fc) in acc_v
        .chunks_exact_mut(LANES)
        .zip(cnt_v.chunks_exact_mut(LANES))
        .zip(row.chunks_exact(LANES))
        .zip(tot.chunks_exact(LANES))
        .zip(full.chunks_exact(LANES))
    {
        for j in 0..LANES {
            a[j] += x * r[j];
            c[j] += r[j];
            let e = n * a[j] - k * t[j] - a_coef * c[j] + b_coef * fc[j];
            sum[j] += e * e;
            let ae = e.abs();
            sup[j] = if ae > sup[j] { ae } else { sup[j] };
        }
    }
    let mut s: f64 = sum.iter().sum();
    let mut m = sup.iter().copied().fold(0.0, f64::max);
    for (j, (a, c)) in acc_r.iter_mut().zip(cnt_r.iter_mut()).enumerate() {
        let col = split + j;
        *a += x * row[col];
        *c += row[col];
        let e = n * *a - k * tot[col] - a_coef * *c + b_coef * full[col];
        s += e * e;
        m = m.max(e.abs());
    }
    (s, m)
}

/// Indicator tables and kernels for one sample, built once and shared by all replicates.
#[derive(Debug, Clone)]
pub struct Tables {
    orthant: Option<(OrthantTable, MultiplierKernel)>,
    projection: Option<(ProjectionTable, MultiplierKernel)>,
    n: usize,
}

impl Tables {
    /// Builds whatever the requested families need. `dirs` is required for `U`/`V`.
    pub fn build(s: &Sample, families: &[Family], dirs: Option<&DirectionSet>) -> Result<Self> {
        let orthant = families
            .iter()
            .any(|f| !f.uses_half_spaces())
            .then(|| {
                let t = build_orthant_table(s);
                let k = MultiplierKernel::for_orthants(&t);
                (t, k)
            });
        let projection = if families.iter().any(|f| f.uses_half_spaces()) {
            let dirs = dirs.ok_or_else(|| {
                Error::InvalidParameter("half-space statistics need a direction set".into())
            })?;
            let t = build_projection_table(s, dirs)?;
            let k = MultiplierKernel::for_half_spaces(&t);
            Some((t, k))
        } else {
            None
        };
        Ok(Self {
            orthant,
            projection,
            n: s.n(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn orthant(&self) -> Option<&OrthantTable> {
        self.orthant.as_ref().map(|(t, _)| t)
    }

    pub fn projection(&self) -> Option<&ProjectionTable> {
        self.projection.as_ref().map(|(t, _)| t)
    }

    pub fn kernel(&self, family: Family) -> Result<&MultiplierKernel> {
        let kernel = if family.uses_half_spaces() {
            self.projection.as_ref().map(|(_, k)| k)
        } else {
            self.orthant.as_ref().map(|(_, k)| k)
        };
        kernel.ok_or_else(|| Error::InvalidParameter(format!("no table built for family {family}")))
    }

    /// Observed profile of a family.
    pub fn profile(&self, family: Family) -> Result<StatProfile> {
        let missing = || Error::InvalidParameter(format!("no table built for family {family}"));
        Ok(match family {
            Family::S => profile_s(self.orthant().ok_or_else(missing)?),
            Family::T => profile_t(self.orthant().ok_or_else(missing)?),
            Family::U => profile_u(self.projection().ok_or_else(missing)?),
            Family::V => profile_v(self.projection().ok_or_else(missing)?),
        })
    }
}

fn replicate_one(tables: &Tables, xi: &[f64], stat: StatFamily, method: Method) -> Result<f64> {
    let kernel = tables.kernel(stat.family)?;
    let mut scratch = Scratch::default();
    Ok(kernel
        .replicate(xi, method, &mut scratch)?
        .get(stat.family, stat.combiner))
}

/// One replicate of a global statistic from the check process.
pub fn replicate_check(tables: &Tables, xi: &[f64], stat: StatFamily) -> Result<f64> {
    replicate_one(tables, xi, stat, Method::Check)
}

/// One replicate of a global statistic from the hat process.
pub fn replicate_hat(tables: &Tables, xi: &[f64], stat: StatFamily) -> Result<f64> {
    replicate_one(tables, xi, stat, Method::Hat)
}

/// Fraction of replicates at or above the observed value.
pub fn pvalue(observed: f64, reps: &[f64]) -> f64 {
    assert!(!reps.is_empty(), "p-value needs at least one replicate");
    let hits = reps.iter().filter(|&&r| r >= observed).count();
    hits as f64 / reps.len() as f64
}

/// Standard-normal multiplier row `j` for a given seed.
pub fn multiplier_row(seed: u64, j: usize, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Multiplier, j as u64);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

impl MultiplierMatrix {
    /// Draws `replicates × n` standard-normal multipliers, row `j` from its own stream.
    pub fn draw(seed: u64, replicates: usize, n: usize) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidN);
        }
        let xi = (0..replicates)
            .into_par_iter()
            .flat_map_iter(|j| multiplier_row(seed, j, n))
            .collect();
        Self::new(replicates, n, MultiplierLaw::StandardNormal, xi)
    }
}

/// Replicate statistics for all `N` multiplier rows, one entry per kernel in `families`.
///
/// Orthant families share one sweep per row, as do half-space families.
fn multiplier_replicates(
    tables: &Tables,
    kinds: &[bool],
    xi: &MultiplierMatrix,
    method: Method,
) -> Result<Vec<Vec<ReplicateStats>>> {
    let kernels: Vec<&MultiplierKernel> = kinds
        .iter()
        .map(|&half| {
            tables.kernel(if half { Family::U } else { Family::S })
        })
        .collect::<Result<_>>()?;
    (0..xi.replicates())
        .into_par_iter()
        .map_init(Scratch::default, |scratch, j| {
            kernels
                .iter()
                .map(|k| k.replicate(xi.row(j), method, scratch))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Global orthant statistics of `N` independent Uniform(0,1) samples of size `n`.
pub fn uniform_replicates(seed: u64, n: usize, replicates: usize) -> Vec<ReplicateStats> {
    (0..replicates)
        .into_par_iter()
        .map(|j| uniform_replicate(seed, n, j))
        .collect()
}

fn uniform_replicate(seed: u64, n: usize, j: usize) -> ReplicateStats {
    let mut rng = stream_rng(seed, Stream::Uniform, j as u64);
    let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s = Sample::univariate(values).expect("uniform draws are finite");
    let t = build_orthant_table(&s);
    let ps = profile_s(&t);
    let pt = profile_t(&t);
    ReplicateStats {
        squared_max: combine(&ps, Combiner::Max),
        squared_mean: combine(&ps, Combiner::Mean),
        sup_max: combine(&pt, Combiner::Max),
        sup_mean: combine(&pt, Combiner::Mean),
    }
}

/// Runs several statistics on one sample with a shared set of replicates.
///
/// All statistics see the same multiplier rows (or, for `Sim`, the same
/// uniform samples), so their p-values are computed coherently.
pub fn run_tests(
    s: &Sample,
    stats: &[StatFamily],
    method: Method,
    replicates: usize,
    dirs: Option<&DirectionSet>,
    seed: u64,
) -> Result<Vec<TestReport>> {
    if replicates == 0 {
        return Err(Error::InvalidN);
    }
    if method == Method::Sim && s.d() != 1 {
        return Err(Error::SimRequiresUnivariate { d: s.d() });
    }
    let univariate = DirectionSet::univariate();
    let dirs = match dirs {
        Some(d) => Some(d),
        None if s.d() == 1 => Some(&univariate),
        None => None,
    };
    let families: Vec<Family> = stats.iter().map(|st| st.family).collect();
    let tables = Tables::build(s, &families, dirs)?;

    let per_stat: Vec<Vec<f64>> = match method {
        Method::Sim => {
            let reps = uniform_replicates(seed, s.n(), replicates);
            stats
                .iter()
                .map(|st| {
                    reps.iter()
                        .map(|r| r.get(st.family.orthant_analogue(), st.combiner))
                        .collect()
                })
                .collect()
        }
        Method::Hat | Method::Check => {
            let xi = MultiplierMatrix::draw(seed, replicates, s.n())?;
            let mut kinds: Vec<bool> = families.iter().map(|f| f.uses_half_spaces()).collect();
            kinds.sort_unstable();
            kinds.dedup();
            let reps = multiplier_replicates(&tables, &kinds, &xi, method)?;
            stats
                .iter()
                .map(|st| {
                    let slot = kinds
                        .iter()
                        .position(|&h| h == st.family.uses_half_spaces())
                        .expect("kernel built for every requested family");
                    reps.iter()
                        .map(|r| r[slot].get(st.family, st.combiner))
                        .collect()
                })
                .collect()
        }
    };

    stats
        .iter()
        .zip(per_stat)
        .map(|(st, values)| {
            let profile = tables.profile(st.family)?;
            let observed = combine(&profile, st.combiner);
            Ok(TestReport {
                stat: *st,
                observed,
                p_value: pvalue(observed, &values),
                k_hat: estimate_changepoint(&profile),
                profile,
                replicates: values,
                method,
                seed,
                m: if st.family.uses_half_spaces() {
                    dirs.map_or(0, |d| d.m())
                } else {
                    0
                },
            })
        })
        .collect()
}

/// Runs one test. `dirs` defaults to `{(1)}` for univariate data.
pub fn run_test(
    s: &Sample,
    stat: StatFamily,
    method: Method,
    replicates: usize,
    dirs: Option<&DirectionSet>,
    seed: u64,
) -> Result<TestReport> {
    let mut out = run_tests(s, &[stat], method, replicates, dirs, seed)?;
    Ok(out.pop().expect("one report per statistic"))
}

/// Univariate test with replicates from fresh Uniform(0,1) samples.
pub fn run_sim_test(s: &Sample, stat: StatFamily, replicates: usize, seed: u64) -> Result<TestReport> {
    run_test(s, stat, Method::Sim, replicates, None, seed)
}
