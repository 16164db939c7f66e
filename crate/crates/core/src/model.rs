//! Value types shared across the crate.
//!
//! Everything here is immutable once constructed. Constructors check the
//! invariants; no other computation happens in this module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × d` matrix of finite observations, stored row-major.
///
/// Row order is observation order. Nothing in the crate ever sorts rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Sample {
    /// Validates a rectangular matrix given as rows.
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Ragged {
                    row: i + 1,
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(n, d, data)
    }

    /// Validates a row-major buffer of `n * d` values.
    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::LengthMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if n < 2 {
            return Err(Error::TooSmall { n });
        }
        if d == 0 {
            return Err(Error::Empty);
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d + 1,
                col: pos % d + 1,
            });
        }
        Ok(Self { data, n, d })
    }

    /// Univariate convenience constructor.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_flat(n, 1, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the listed columns (0-based), in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.d) {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: bad + 1,
            });
        }
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Self::from_flat(self.n, cols.len(), data)
    }
}

/// Which per-change-point statistic is computed.
///
/// `S` and `T` are indexed by lower-left orthants, `U` and `V` by half-spaces.
/// `S`/`U` integrate the squared process, `T`/`V` take its supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    S,
    T,
    U,
    V,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::S, Family::T, Family::U, Family::V];

    pub fn uses_half_spaces(self) -> bool {
        matches!(self, Family::U | Family::V)
    }

    pub fn is_squared(self) -> bool {
        matches!(self, Family::S | Family::U)
    }

    /// The orthant family that a half-space family collapses to when `d = 1`.
    pub fn orthant_analogue(self) -> Family {
        match self {
            Family::S | Family::U => Family::S,
            Family::T | Family::V => Family::T,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::S => "S",
            Family::T => "T",
            Family::U => "U",
            Family::V => "V",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" => Ok(Family::S),
            "t" => Ok(Family::T),
            "u" => Ok(Family::U),
            "v" => Ok(Family::V),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// Aggregation of the `n - 1` per-k statistics into a global one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    /// Maximum over k.
    Max,
    /// Sum over k divided by n.
    Mean,
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combiner::Max => "max",
            Combiner::Mean => "mean",
        })
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" | "v" => Ok(Combiner::Max),
            "mean" | "+" => Ok(Combiner::Mean),
            other => Err(Error::InvalidParameter(format!(
                "unknown combiner '{other}'"
            ))),
        }
    }
}

/// One of the eight global statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatFamily {
    pub family: Family,
    pub combiner: Combiner,
}

impl StatFamily {
    pub const fn new(family: Family, combiner: Combiner) -> Self {
        Self { family, combiner }
    }

    /// All eight statistics in table order (S∨, S+, T∨, T+, U∨, U+, V∨, V+).
    pub fn all() -> [StatFamily; 8] {
        let mut out = [StatFamily::new(Family::S, Combiner::Max); 8];
        for (i, fam) in Family::ALL.iter().enumerate() {
            out[2 * i] = StatFamily::new(*fam, Combiner::Max);
            out[2 * i + 1] = StatFamily::new(*fam, Combiner::Mean);
        }
        out
    }
}

impl fmt::Display for StatFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family, self.combiner)
    }
}

impl FromStr for StatFamily {
    type Err = Error;

    /// Accepts `S_max`, `s:mean`, `t+`, `V∨` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let fam: Family = chars
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty statistic name".into()))?
            .to_string()
            .parse()?;
        let rest = chars.as_str().trim_start_matches(['_', ':', ' ']);
        let combiner = match rest {
            "∨" => Combiner::Max,
            other => other.parse()?,
        };
        Ok(StatFamily::new(fam, combiner))
    }
}

/// Per-candidate-change-point statistic values: `values[k - 1]` for `k = 1..n-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatProfile {
    values: Vec<f64>,
    n: usize,
}

impl StatProfile {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall { n });
        }
        if values.len() != n - 1 {
            return Err(Error::LengthMismatch {
                expected: n - 1,
                found: values.len(),
            });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::OutOfRange {
                what: "profile value",
                value: v,
            });
        }
        Ok(Self { values, n })
    }

    pub(crate) fn from_parts_unchecked(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() + 1, n);
        Self { values, n }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Statistic at candidate `k` (1-based).
    pub fn at(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// `m` unit vectors in `R^d` with strictly positive first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    coords: Vec<f64>,
    d: usize,
    m: usize,
}

impl DirectionSet {
    const NORM_TOL: f64 = 1e-12;

    pub fn new(d: usize, directions: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Empty);
        }
        if directions.is_empty() {
            return Err(Error::InvalidM);
        }
        let m = directions.len();
        let mut coords = Vec::with_capacity(m * d);
        for a in &directions {
            if a.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: a.len(),
                });
            }
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm.is_nan() || (norm - 1.0).abs() > Self::NORM_TOL {
                return Err(Error::OutOfRange {
                    what: "direction norm",
                    value: norm,
                });
            }
            if a[0].is_nan() || a[0] <= 0.0 {
                return Err(Error::OutOfRange {
                    what: "direction first coordinate",
                    value: a[0],
                });
            }
            coords.extend_from_slice(a);
        }
        if d == 1 && m != 1 {
            return Err(Error::InvalidParameter(
                "the only unit direction with positive first coordinate in R^1 is (1)".into(),
            ));
        }
        Ok(Self { coords, d, m })
    }

    /// `{(1)}`, the unique direction set for univariate data.
    pub fn univariate() -> Self {
        Self {
            coords: vec![1.0],
            d: 1,
            m: 1,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn direction(&self, l: usize) -> &[f64] {
        &self.coords[l * self.d..(l + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }
}

/// How bootstrap replicates are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Multipliers centred by their prefix and suffix means.
    Hat,
    /// Multipliers applied to indicators centred by the full-sample mean.
    Check,
    /// Fresh Uniform(0,1) samples (univariate, rank-based statistics only).
    Sim,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Hat => "hat",
            Method::Check => "check",
            Method::Sim => "sim",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hat" => Ok(Method::Hat),
            "check" => Ok(Method::Check),
            "sim" => Ok(Method::Sim),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Distribution of the bootstrap multipliers. Must have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    #[default]
    StandardNormal,
}

/// `N × n` multiplier draws; row `j` drives replicate `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMatrix {
    xi: Vec<f64>,
    replicates: usize,
    n: usize,
    law: MultiplierLaw,
}

impl MultiplierMatrix {
    pub fn new(replicates: usize, n: usize, law: MultiplierLaw, xi: Vec<f64>) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidN);
        }
        if xi.len() != replicates * n {
            return Err(Error::LengthMismatch {
                expected: replicates * n,
                found: xi.len(),
            });
        }
        Ok(Self {
            xi,
            replicates,
            n,
            law,
        })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn law(&self) -> MultiplierLaw {
        self.law
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.xi[j * self.n..(j + 1) * self.n]
    }
}

/// Outcome of one change-point test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub stat: StatFamily,
    pub observed: f64,
    pub profile: StatProfile,
    pub p_value: f64,
    pub replicates: Vec<f64>,
    pub k_hat: usize,
    pub method: Method,
    pub seed: u64,
    /// Direction count; 0 for orthant statistics.
    pub m: usize,
}
