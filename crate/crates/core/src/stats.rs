//! Bootstrap resampling and violation degrees.
//!
//! Resample b draws its indices from ChaCha20 stream b of the master seed,
//! so every result is independent of scheduling and reproducible by index.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::central_moments;
use crate::nonclassicality::{moment_lambdas, three_bin_r_from_values};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMode {
    /// Draw `resample_size` distinct records from the pool.
    SubsampleFromPool,
    /// Draw `resample_size` records uniformly with replacement.
    WithReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub resample_size: usize,
    pub n_resamples: usize,
    pub master_seed: u64,
    pub mode: ResampleMode,
}

impl Default for BootstrapSpec {
    /// 10⁴ records out of the pool, B = 100.
    fn default() -> Self {
        Self {
            resample_size: 10_000,
            n_resamples: 100,
            master_seed: 0,
            mode: ResampleMode::SubsampleFromPool,
        }
    }
}

impl BootstrapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resample_size == 0 {
            return Err(Error::InvalidArgument("resample size must be ≥ 1".into()));
        }
        if self.n_resamples < 2 {
            return Err(Error::InvalidArgument("need at least 2 resamples".into()));
        }
        Ok(())
    }
}

/// Deterministic index sets for one spec over a pool of fixed size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplePlan {
    spec: BootstrapSpec,
    pool_size: usize,
}

impl ResamplePlan {
    pub fn new(spec: BootstrapSpec, pool_size: usize) -> Result<Self> {
        spec.validate()?;
        if pool_size == 0 {
            return Err(Error::InvalidArgument("empty pool".into()));
        }
        if spec.mode == ResampleMode::SubsampleFromPool && pool_size < spec.resample_size {
            return Err(Error::InvalidArgument(format!(
                "pool of {pool_size} records is smaller than resample size {}",
                spec.resample_size
            )));
        }
        Ok(Self { spec, pool_size })
    }

    pub fn spec(&self) -> &BootstrapSpec {
        &self.spec
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Index set of resample `b`.
    pub fn indices(&self, b: usize) -> Vec<usize> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.spec.master_seed);
        rng.set_stream(b as u64);
        match self.spec.mode {
            ResampleMode::SubsampleFromPool => {
                rand::seq::index::sample(&mut rng, self.pool_size, self.spec.resample_size)
                    .into_vec()
            }
            ResampleMode::WithReplacement => (0..self.spec.resample_size)
                .map(|_| rng.random_range(0..self.pool_size))
                .collect(),
        }
    }

    /// Runs `f(b, indices)` for every resample in parallel, in index order.
    pub fn map<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize, &[usize]) -> R + Sync,
    {
        (0..self.spec.n_resamples)
            .into_par_iter()
            .map(|b| f(b, &self.indices(b)))
            .collect()
    }

    /// FNV-1a digest of every index set, for checking that two analyses used
    /// identical resamples.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in 0..self.spec.n_resamples {
            for i in self.indices(b) {
                for byte in (i as u64).to_le_bytes() {
                    h ^= u64::from(byte);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// A named statistic of the quadrature column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "kebab-case")]
pub enum Statistic {
    ThreeBin { sigma: f64, d: u32 },
    MomentLambda { n: usize },
    Variance,
}

impl Statistic {
    /// Value separating classical from nonclassical outcomes.
    pub fn classical_limit(&self) -> f64 {
        match self {
            Statistic::ThreeBin { .. } | Statistic::Variance => 1.0,
            Statistic::MomentLambda { .. } => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Statistic::ThreeBin { sigma, d } => format!("bin(sigma={sigma},d={d})"),
            Statistic::MomentLambda { n } => format!("moment(n={n})"),
            Statistic::Variance => "variance".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Eval {
    Value { value: f64, low_count: bool },
    Undefined,
}

/// Evaluates several statistics on one sample, sharing the moment pass.
fn evaluate_all(xs: &[f64], stats: &[Statistic]) -> Result<Vec<Eval>> {
    let orders: Vec<usize> = stats
        .iter()
        .filter_map(|s| match s {
            Statistic::MomentLambda { n } => Some(*n),
            _ => None,
        })
        .collect();
    let lambdas = moment_lambdas(xs, &orders)?;
    let mut next_lambda = lambdas.into_iter();
    stats
        .iter()
        .map(|s| match *s {
            Statistic::ThreeBin { sigma, d } => match three_bin_r_from_values(xs, sigma, d) {
                Ok(r) => Ok(Eval::Value {
                    value: r.r_value,
                    low_count: r.low_count,
                }),
                Err(Error::UndefinedStatistic(_)) => Ok(Eval::Undefined),
                Err(e) => Err(e),
            },
            Statistic::MomentLambda { .. } => Ok(Eval::Value {
                value: next_lambda.next().expect("one λ per order"),
                low_count: false,
            }),
            Statistic::Variance => Ok(Eval::Value {
                value: central_moments(xs)?.1,
                low_count: false,
            }),
        })
        .collect()
}

/// Bootstrap distribution of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapOutcome {
    pub statistic: Statistic,
    pub mean: f64,
    /// Population (divide-by-count) standard deviation.
    pub std: f64,
    /// Values of the defined resamples, in resample order.
    pub samples: Vec<f64>,
    /// Resamples reported as 𝓡 = 0 because C₋d or C_d was empty.
    pub low_count: usize,
    /// Resamples with C₀ = 0, excluded from mean and std.
    pub undefined: usize,
    pub plan_fingerprint: u64,
}

/// Mean and population standard deviation.
pub fn mean_std(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let n = samples.len() as f64;
    let mean = crate::scalar::pairwise_sum(samples) / n;
    let dev: Vec<f64> = samples.iter().map(|&s| (s - mean) * (s - mean)).collect();
    Ok((mean, (crate::scalar::pairwise_sum(&dev) / n).sqrt()))
}

/// Evaluates every statistic on the same B resamples of the quadrature column.
pub fn bootstrap_many(
    data: &Dataset,
    spec: &BootstrapSpec,
    stats: &[Statistic],
) -> Result<Vec<BootstrapOutcome>> {
    let plan = ResamplePlan::new(*spec, data.len())?;
    let xs = data.quadratures();
    let evals: Vec<Vec<Eval>> = plan
        .map(|_, idx| {
            let sample: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            evaluate_all(&sample, stats)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let fingerprint = plan.fingerprint();
    stats
        .iter()
        .enumerate()
        .map(|(k, stat)| {
            let mut samples = Vec::with_capacity(evals.len());
            let (mut low, mut undefined) = (0, 0);
            for row in &evals {
                match row[k] {
                    Eval::Value { value, low_count } => {
                        samples.push(value);
                        low += usize::from(low_count);
                    }
                    Eval::Undefined => undefined += 1,
                }
            }
            if samples.is_empty() {
                return Err(Error::UndefinedStatistic(format!(
                    "{} undefined on every resample",
                    stat.label()
                )));
            }
            let (mean, std) = mean_std(&samples)?;
            Ok(BootstrapOutcome {
                statistic: *stat,
                mean,
                std,
                samples,
                low_count: low,
                undefined,
                plan_fingerprint: fingerprint,
            })
        })
        .collect()
}

pub fn bootstrap(
    data: &Dataset,
    spec: &BootstrapSpec,
    stat: Statistic,
) -> Result<BootstrapOutcome> {
    Ok(bootstrap_many(data, spec, &[stat])?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    ThreeBin { sigma: f64, d: u32 },
    Moment { n: usize },
}

impl Method {
    pub fn classical_limit(&self) -> f64 {
        match self {
            Method::ThreeBin { .. } => 1.0,
            Method::Moment { .. } => 0.0,
        }
    }

    fn statistic(&self) -> Statistic {
        match *self {
            Method::ThreeBin { sigma, d } => Statistic::ThreeBin { sigma, d },
            Method::Moment { n } => Statistic::MomentLambda { n },
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Method::ThreeBin { .. } => "bin",
            Method::Moment { .. } => "moment",
        }
    }

    fn params(&self) -> String {
        match self {
            Method::ThreeBin { sigma, d } => format!("sigma={sigma};d={d}"),
            Method::Moment { n } => format!("n={n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    #[serde(flatten)]
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    /// (limit − mean)/std; positive means nonclassicality detected.
    pub v: f64,
    pub low_count: usize,
    pub undefined: usize,
    pub plan_fingerprint: Option<u64>,
}

/// (limit − mean)/std; a zero or non-finite std is an error.
pub fn violation_degree(limit: f64, mean: f64, std: f64) -> Result<f64> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::UndefinedStatistic(format!(
            "violation degree needs a positive std, got {std}"
        )));
    }
    Ok((limit - mean) / std)
}

impl ViolationReport {
    pub fn from_mean_std(method: Method, mean: f64, std: f64) -> Result<Self> {
        Ok(Self {
            method,
            mean,
            std,
            v: violation_degree(method.classical_limit(), mean, std)?,
            low_count: 0,
            undefined: 0,
            plan_fingerprint: None,
        })
    }

    pub fn from_outcome(method: Method, outcome: &BootstrapOutcome) -> Result<Self> {
        let mut report = Self::from_mean_std(method, outcome.mean, outcome.std)?;
        report.low_count = outcome.low_count;
        report.undefined = outcome.undefined;
        report.plan_fingerprint = Some(outcome.plan_fingerprint);
        Ok(report)
    }

    pub fn detected(&self) -> bool {
        self.v > 0.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "method": self.method.name(),
            "parameters": self.method,
            "mean": self.mean,
            "std": self.std,
            "v": self.v,
            "verdict": crate::nonclassicality::verdict(self.detected()),
            "flags": { "low_count": self.low_count, "undefined": self.undefined },
        })
    }

    pub const CSV_HEADER: &'static str = "method,params,mean,std,v,low_count,undefined";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            self.method.name(),
            self.method.params(),
            self.mean,
            self.std,
            self.v,
            self.low_count,
            self.undefined
        );
        s
    }
}

/// (1 − 𝓡̄)/δ𝓡 from bootstrap values of 𝓡.
pub fn violation_bin(samples: &[f64], sigma: f64, d: u32) -> Result<ViolationReport> {
    let (mean, std) = mean_std(samples)?;
    ViolationReport::from_mean_std(Method::ThreeBin { sigma, d }, mean, std)
}

/// −λ̄(n)/δλ(n) from bootstrap values of λ_min(n).
pub fn violation_moment(samples: &[f64], n: usize) -> Result<ViolationReport> {
    let (mean, std) = mean_std(samples)?;
    ViolationReport::from_mean_std(Method::Moment { n }, mean, std)
}

/// One report per method, all computed on the same resamples.
pub fn compare_methods(
    data: &Dataset,
    sigma: f64,
    d: u32,
    moment_orders: &[usize],
    spec: &BootstrapSpec,
) -> Result<Vec<ViolationReport>> {
    let methods: Vec<Method> = std::iter::once(Method::ThreeBin { sigma, d })
        .chain(moment_orders.iter().map(|&n| Method::Moment { n }))
        .collect();
    let stats: Vec<Statistic> = methods.iter().map(Method::statistic).collect();
    let outcomes = bootstrap_many(data, spec, &stats)?;
    methods
        .iter()
        .zip(&outcomes)
        .map(|(m, o)| ViolationReport::from_outcome(*m, o))
        .collect()
}
