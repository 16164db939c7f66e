//! Seeded generation of the simulation scenarios: copula-coupled uniforms
//! (Marshall–Olkin frailty construction), inverse-c.d.f. margins and a single
//! change point at `k* = ⌊nt⌋`.

use std::f64::consts::PI;
use std::fmt;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kv::{call_syntax, split_top_level, KvFile};
use crate::model::Sample;
use crate::rng::{stream_rng, Stream};

/// Univariate margin of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarginSpec {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl MarginSpec {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !sd.is_finite() || sd <= 0.0 || !mean.is_finite() {
            return Err(Error::OutOfRange {
                what: "normal sd",
                value: sd,
            });
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::OutOfRange {
                what: "exponential rate",
                value: rate,
            });
        }
        Ok(Self::Exponential { rate })
    }

    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => Normal::new(mean, sd)
                .expect("validated normal margin")
                .inverse_cdf(u),
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => Normal::new(mean, sd).expect("validated normal margin").cdf(x),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }
}

impl fmt::Display for MarginSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, sd } => write!(f, "normal({mean}, {sd})"),
            Self::Exponential { rate } => write!(f, "exp({rate})"),
        }
    }
}

impl std::str::FromStr for MarginSpec {
    type Err = String;

    /// `normal(mean, sd)`, `normal` (standard), `exp(rate)`, `exp` (rate 1).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, args) = call_syntax(s)?;
        let spec = match (name.as_str(), args.as_slice()) {
            ("normal" | "n", []) => Ok(Self::standard_normal()),
            ("normal" | "n", [mean, sd]) => Self::normal(*mean, *sd),
            ("exp" | "exponential" | "e", []) => Self::exponential(1.0),
            ("exp" | "exponential" | "e", [rate]) => Self::exponential(*rate),
            _ => return Err(format!("unknown margin '{s}'")),
        };
        spec.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopulaFamily {
    Independence,
    Clayton,
    GumbelHougaard,
}

/// Kendall's tau to copula parameter: Clayton `2τ/(1−τ)`, Gumbel–Hougaard `1/(1−τ)`.
pub fn tau_to_theta(family: CopulaFamily, tau: f64) -> Result<f64> {
    match family {
        CopulaFamily::Clayton if tau > 0.0 && tau < 1.0 => Ok(2.0 * tau / (1.0 - tau)),
        CopulaFamily::GumbelHougaard if (0.0..1.0).contains(&tau) => Ok(1.0 / (1.0 - tau)),
        CopulaFamily::Independence if tau == 0.0 => Ok(0.0),
        _ => Err(Error::OutOfRange {
            what: "Kendall's tau",
            value: tau,
        }),
    }
}

/// Dependence structure of one block, parametrized by Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    family: CopulaFamily,
    tau: f64,
    theta: f64,
}

impl CopulaSpec {
    /// `tau = 0` gives the independence copula for every family.
    pub fn from_tau(family: CopulaFamily, tau: f64) -> Result<Self> {
        let family = if tau == 0.0 {
            CopulaFamily::Independence
        } else {
            family
        };
        let theta = tau_to_theta(family, tau)?;
        Ok(Self { family, tau, theta })
    }

    pub fn independence() -> Self {
        Self {
            family: CopulaFamily::Independence,
            tau: 0.0,
            theta: 0.0,
        }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            CopulaFamily::Independence => f.write_str("independence"),
            CopulaFamily::Clayton => write!(f, "clayton({})", self.tau),
            CopulaFamily::GumbelHougaard => write!(f, "gumbel({})", self.tau),
        }
    }
}

impl std::str::FromStr for CopulaSpec {
    type Err = String;

    /// `independence`, `clayton(tau)`, `gumbel(tau)`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, args) = call_syntax(s)?;
        let family = match name.as_str() {
            "independence" | "indep" | "pi" => return Ok(Self::independence()),
            "clayton" | "cl" => CopulaFamily::Clayton,
            "gumbel" | "gh" | "gumbel-hougaard" | "gumbel_hougaard" => CopulaFamily::GumbelHougaard,
            _ => return Err(format!("unknown copula '{s}'")),
        };
        match args.as_slice() {
            [tau] => Self::from_tau(family, *tau).map_err(|e| e.to_string()),
            _ => Err(format!("copula '{name}' takes exactly one argument (Kendall's tau)")),
        }
    }
}

/// Positive stable variable with Laplace transform `exp(−s^α)`, `0 < α ≤ 1`
/// (Kanter's representation, as used by Chambers–Mallows–Stuck).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// `count × d` copula draws, row-major, each in `(0, 1)`.
pub fn sample_copula<R: Rng + ?Sized>(spec: &CopulaSpec, d: usize, count: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(count * d);
    for _ in 0..count {
        sample_copula_row(spec, d, rng, &mut out);
    }
    out
}

fn sample_copula_row<R: Rng + ?Sized>(spec: &CopulaSpec, d: usize, rng: &mut R, out: &mut Vec<f64>) {
    let clamp = |u: f64| u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    match spec.family {
        CopulaFamily::Independence => {
            out.extend((0..d).map(|_| rng.sample::<f64, _>(Open01)));
        }
        CopulaFamily::Clayton => {
            let theta = spec.theta;
            let v = Gamma::new(1.0 / theta, 1.0)
                .expect("validated Clayton parameter")
                .sample(rng);
            out.extend((0..d).map(|_| {
                let e: f64 = rng.sample(Exp1);
                clamp((-(e / v).ln_1p() / theta).exp())
            }));
        }
        CopulaFamily::GumbelHougaard => {
            let alpha = 1.0 / spec.theta;
            let v = positive_stable(alpha, rng);
            out.extend((0..d).map(|_| {
                let e: f64 = rng.sample(Exp1);
                clamp((-(e / v).powf(alpha)).exp())
            }));
        }
    }
}

/// Law of a block of observations: copula plus one margin per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub copula: CopulaSpec,
    pub margins: Vec<MarginSpec>,
}

impl BlockSpec {
    pub fn new(copula: CopulaSpec, margins: Vec<MarginSpec>) -> Result<Self> {
        if margins.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { copula, margins })
    }

    pub fn univariate(margin: MarginSpec) -> Self {
        Self {
            copula: CopulaSpec::independence(),
            margins: vec![margin],
        }
    }

    pub fn d(&self) -> usize {
        self.margins.len()
    }

    fn draw_into<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R, out: &mut Vec<f64>) {
        let d = self.d();
        let mut u = Vec::with_capacity(d);
        for _ in 0..rows {
            u.clear();
            sample_copula_row(&self.copula, d, rng, &mut u);
            out.extend(u.iter().zip(&self.margins).map(|(&ui, m)| m.quantile(ui)));
        }
    }

    /// `rows` i.i.d. observations from this block.
    pub fn draw<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows * self.d());
        self.draw_into(rows, rng, &mut out);
        out
    }
}

/// A single change-point scenario: rows `1..=k*` from `pre`, the rest from `post`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub t: f64,
    pub pre: BlockSpec,
    pub post: BlockSpec,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(n: usize, t: f64, pre: BlockSpec, post: BlockSpec, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall { n });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                what: "change fraction t",
                value: t,
            });
        }
        if pre.d() != post.d() {
            return Err(Error::DimensionMismatch {
                expected: pre.d(),
                found: post.d(),
            });
        }
        Ok(Self {
            n,
            t,
            pre,
            post,
            seed,
        })
    }

    /// Same law throughout.
    pub fn null(n: usize, block: BlockSpec, seed: u64) -> Result<Self> {
        Self::new(n, 0.0, block.clone(), block, seed)
    }

    pub fn d(&self) -> usize {
        self.pre.d()
    }

    /// `⌊n t⌋`, guarded against representation error such as `100 × 0.29`.
    pub fn change_point(&self) -> usize {
        let raw = self.n as f64 * self.t;
        ((raw + 1e-9 * raw.max(1.0)).floor() as usize).min(self.n)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Reads the scenario keys of a `key = value` file.
    ///
    /// Keys: `n`, `t` (default 0), `seed` (default 0), `copula`/`margins`
    /// for both blocks, or `pre.copula`, `pre.margins`, `post.copula`,
    /// `post.margins` individually. Margins default to `normal(0, 1)`.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let n: usize = kv.require(&["n"])?;
        let t: f64 = kv.get(&["t"])?.unwrap_or(0.0);
        let seed: u64 = kv.get(&["seed"])?.unwrap_or(0);
        let parse_margins = |v: &str| -> std::result::Result<Vec<MarginSpec>, String> {
            let parts = split_top_level(v);
            if parts.is_empty() {
                return Err("no margins given".into());
            }
            parts.iter().map(|p| p.parse()).collect()
        };
        let copula_both: Option<CopulaSpec> = kv.get_with(&["copula"], |v| v.parse())?;
        let margins_both = kv.get_with(&["margins"], parse_margins)?;
        let pre_copula = kv.get_with(&["pre.copula"], |v| v.parse())?;
        let post_copula = kv.get_with(&["post.copula"], |v| v.parse())?;
        let pre_margins = kv.get_with(&["pre.margins"], parse_margins)?;
        let post_margins = kv.get_with(&["post.margins"], parse_margins)?;

        let default_margins = vec![MarginSpec::standard_normal()];
        let block = |copula: Option<CopulaSpec>, margins: Option<Vec<MarginSpec>>| BlockSpec {
            copula: copula.or(copula_both).unwrap_or_else(CopulaSpec::independence),
            margins: margins
                .or_else(|| margins_both.clone())
                .unwrap_or_else(|| default_margins.clone()),
        };
        let pre = block(pre_copula, pre_margins);
        let post = block(post_copula, post_margins);
        Self::new(n, t, pre, post, seed).map_err(|e| Error::Spec {
            line: 0,
            key: "scenario".into(),
            message: e.to_string(),
        })
    }
}

/// Draws the scenario; a pure function of the spec, seed included.
pub fn generate(spec: &ScenarioSpec) -> Sample {
    let mut rng = stream_rng(spec.seed, Stream::Data, 0);
    let k = spec.change_point();
    let mut data = Vec::with_capacity(spec.n * spec.d());
    spec.pre.draw_into(k, &mut rng, &mut data);
    spec.post.draw_into(spec.n - k, &mut rng, &mut data);
    Sample::from_flat(spec.n, spec.d(), data).expect("generated data is finite")
}
