//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvnc_core::data::{sidecar_path, Dataset};
use cvnc_core::estimation::{central_moments, db_from_variance, squeezing_for_variance};
use cvnc_core::fock::diffused_squeezed_state;
use cvnc_core::nonclassicality::moment_lambdas;
use cvnc_core::stats::{bootstrap_many, compare_methods, mean_std, BootstrapOutcome, ResamplePlan};
use cvnc_core::{
    analytic_three_bin_r, entanglement_potential, estimate_params, inject_phase_noise,
    read_dataset, sample_dataset_at, select_phase_window, summarize, three_bin_r_from_values,
    write_dataset, BootstrapSpec, Distribution, Params, ResampleMode, Statistic,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "cvnc",
    version,
    about = "Nonclassicality tests on homodyne data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate homodyne records of a phase-diffused lossy squeezed vacuum.
    Simulate(SimulateArgs),
    /// Add Gaussian phase noise to the recorded LO phases.
    Inject(InjectArgs),
    /// Keep records whose LO phase lies in a window.
    Select(SelectArgs),
    /// Three-bin test at one bin width.
    ThreeBin(ThreeBinArgs),
    /// Three-bin test over a range of bin widths.
    SweepSigma(SweepArgs),
    /// Moment-matrix test for orders 2..=n-max.
    Moments(MomentsArgs),
    /// Estimate (r, loss, delta) from x and p data.
    Estimate(EstimateArgs),
    /// Entanglement potential of the model state.
    Ep(EpArgs),
    /// Violation degrees of the three-bin and moment tests on shared resamples.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    SubsampleFromPool,
    WithReplacement,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    /// Number of bootstrap resamples.
    #[arg(long, default_value_t = 100)]
    bootstrap: usize,
    /// Master seed of the resampling streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "with-replacement")]
    mode: ModeArg,
    /// Records per resample [default: dataset size with replacement, 10000 when subsampling].
    #[arg(long)]
    resample_size: Option<usize>,
}

impl BootstrapArgs {
    fn spec(&self, pool: usize) -> BootstrapSpec {
        let (mode, size) = match self.mode {
            ModeArg::WithReplacement => (ResampleMode::WithReplacement, pool),
            ModeArg::SubsampleFromPool => (
                ResampleMode::SubsampleFromPool,
                BootstrapSpec::default().resample_size,
            ),
        };
        BootstrapSpec {
            resample_size: self.resample_size.unwrap_or(size),
            n_resamples: self.bootstrap,
            master_seed: self.seed,
            mode,
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("squeezing").required(true).args(["r", "target_db"]))]
pub struct SimulateArgs {
    /// Squeezing parameter.
    #[arg(long)]
    r: Option<f64>,
    /// Target x variance in dB; r is solved for at the given loss and delta.
    #[arg(long, allow_negative_numbers = true)]
    target_db: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Phase-diffusion std in rad.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Centre of the LO scan in rad.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    center: f64,
    /// Half-width of the uniform LO scan in rad.
    #[arg(long, default_value_t = 0.0)]
    phase_window: f64,
    /// Output CSV; metadata goes to the `.meta.json` sidecar.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InjectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Std of the added phase noise in rad.
    #[arg(long)]
    delta_e: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    center: f64,
    #[arg(long)]
    half_width: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThreeBinArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Bin width in shot-noise units.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Bin distance.
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[command(flatten)]
    #[serde(flatten)]
    boot: BootstrapArgs,
    /// Also write the row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    sigma_from: f64,
    #[arg(long)]
    sigma_to: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[command(flatten)]
    #[serde(flatten)]
    boot: BootstrapArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Largest moment-matrix order.
    #[arg(long, default_value_t = 5)]
    n_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    boot: BootstrapArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Records measured at LO phase 0.
    #[arg(long)]
    in_x: PathBuf,
    /// Records measured at LO phase π/2.
    #[arg(long)]
    in_p: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    boot: BootstrapArgs,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EpArgs {
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Fock-space cutoff.
    #[arg(long, default_value_t = cvnc_core::fock::DEFAULT_CUTOFF)]
    cutoff: usize,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("state").multiple(true).requires_all(["r", "loss", "delta"]))]
pub struct CompareArgs {
    /// Input datasets, one table row each.
    #[arg(long = "in", required = true, value_delimiter = ',')]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    d: u32,
    /// Moment-matrix orders.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    n_list: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    boot: BootstrapArgs,
    /// Fock-space cutoff for the EP column.
    #[arg(long, default_value_t = cvnc_core::fock::DEFAULT_CUTOFF)]
    cutoff: usize,
    /// Model state for the EP column [default: from simulation metadata].
    #[arg(long, group = "state")]
    r: Option<f64>,
    #[arg(long, group = "state")]
    loss: Option<f64>,
    #[arg(long, group = "state")]
    delta: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(cmd: Command) -> Result<Value, Failure> {
    match cmd {
        Command::Simulate(a) => simulate(&a),
        Command::Inject(a) => inject(&a),
        Command::Select(a) => select(&a),
        Command::ThreeBin(a) => three_bin(&a),
        Command::SweepSigma(a) => sweep_sigma(&a),
        Command::Moments(a) => moments(&a),
        Command::Estimate(a) => estimate(&a),
        Command::Ep(a) => ep(&a),
        Command::Compare(a) => compare(&a),
    }
}

fn echo<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    Ok(read_dataset(path)?)
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn verdict(nonclassical: bool) -> &'static str {
    if nonclassical {
        "nonclassical"
    } else {
        "no detection"
    }
}

/// (limit − mean)/std, or None when the bootstrap spread vanishes.
fn violation(limit: f64, o: &BootstrapOutcome) -> Option<f64> {
    (o.std > 0.0 && o.std.is_finite()).then(|| (limit - o.mean) / o.std)
}

fn simulate(a: &SimulateArgs) -> Result<Value, Failure> {
    let r = match (a.r, a.target_db) {
        (Some(r), None) => r,
        (None, Some(db)) => {
            squeezing_for_variance(cvnc_core::estimation::variance_from_db(db), a.loss, a.delta)?
        }
        _ => {
            return Err(Failure::Usage(
                "give exactly one of --r and --target-db".into(),
            ))
        }
    };
    let params = Params::new(r, a.loss, a.delta)?;
    let data = sample_dataset_at(&params, a.n, a.seed, a.center, a.phase_window)?;
    write_dataset(&data, &a.out)?;
    let (_, var, _) = central_moments(&data.quadratures())?;
    Ok(json!({
        "command": "simulate",
        "config": echo(a),
        "n": data.len(),
        "params": params,
        "var_x": var,
        "var_x_db": db_from_variance(var)?,
        "out": a.out,
        "sidecar": sidecar_path(&a.out),
    }))
}

fn inject(a: &InjectArgs) -> Result<Value, Failure> {
    let data = inject_phase_noise(&load(&a.input)?, a.delta_e, a.seed)?;
    write_dataset(&data, &a.out)?;
    Ok(json!({ "command": "inject", "config": echo(a), "n": data.len(), "out": a.out }))
}

fn select(a: &SelectArgs) -> Result<Value, Failure> {
    let input = load(&a.input)?;
    let data = select_phase_window(&input, a.center, a.half_width)?;
    write_dataset(&data, &a.out)?;
    Ok(json!({
        "command": "select",
        "config": echo(a),
        "n_in": input.len(),
        "n": data.len(),
        "empty": data.meta().flagged_empty(),
        "out": a.out,
    }))
}

#[derive(Debug, Serialize)]
struct BinRow {
    sigma: f64,
    d: u32,
    /// 𝓡 on the full dataset.
    r: f64,
    counts: (u64, u64, u64),
    low_count: bool,
    mean: f64,
    std: f64,
    v: Option<f64>,
    analytic: Option<f64>,
    verdict: &'static str,
    boot_low_count: usize,
    boot_undefined: usize,
}

impl BinRow {
    const CSV_HEADER: &'static str =
        "sigma,d,r,mean,std,v,analytic,verdict,low_count,boot_low_count,boot_undefined";

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.sigma,
            self.d,
            self.r,
            self.mean,
            self.std,
            opt_csv(self.v),
            opt_csv(self.analytic),
            self.verdict,
            self.low_count,
            self.boot_low_count,
            self.boot_undefined
        )
    }
}

fn bin_rows(
    data: &Dataset,
    sigmas: &[f64],
    d: u32,
    boot: &BootstrapArgs,
) -> Result<Vec<BinRow>, Failure> {
    let xs = data.quadratures();
    let stats: Vec<Statistic> = sigmas
        .iter()
        .map(|&sigma| Statistic::ThreeBin { sigma, d })
        .collect();
    let outcomes = bootstrap_many(data, &boot.spec(data.len()), &stats)?;
    let model = data
        .meta()
        .effective_params()
        .and_then(|(p, axis)| Distribution::new(p, axis).ok());
    sigmas
        .iter()
        .zip(&outcomes)
        .map(|(&sigma, o)| {
            let point = three_bin_r_from_values(&xs, sigma, d)?;
            let v = violation(1.0, o);
            Ok(BinRow {
                sigma,
                d,
                r: point.r_value,
                counts: point.counts_used,
                low_count: point.low_count,
                mean: o.mean,
                std: o.std,
                v,
                analytic: model
                    .as_ref()
                    .and_then(|m| analytic_three_bin_r(m, sigma, d).ok()),
                verdict: verdict(v.map_or(point.nonclassical(), |v| v > 0.0)),
                boot_low_count: o.low_count,
                boot_undefined: o.undefined,
            })
        })
        .collect()
}

fn write_bin_csv(path: &Option<PathBuf>, rows: &[BinRow]) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let mut s = format!("{}\n", BinRow::CSV_HEADER);
    for row in rows {
        let _ = writeln!(s, "{}", row.csv());
    }
    write_text(path, &s)
}

fn three_bin(a: &ThreeBinArgs) -> Result<Value, Failure> {
    let data = load(&a.input)?;
    let rows = bin_rows(&data, &[a.sigma], a.d, &a.boot)?;
    write_bin_csv(&a.csv, &rows)?;
    Ok(json!({ "command": "three-bin", "config": echo(a), "n": data.len(), "row": rows[0] }))
}

fn sweep_sigma(a: &SweepArgs) -> Result<Value, Failure> {
    let sigmas: Vec<f64> = match a.steps {
        0 => return Err(Failure::Usage("--steps must be at least 1".into())),
        1 => vec![a.sigma_from],
        k => (0..k)
            .map(|i| a.sigma_from + (a.sigma_to - a.sigma_from) * i as f64 / (k - 1) as f64)
            .collect(),
    };
    let data = load(&a.input)?;
    let rows = bin_rows(&data, &sigmas, a.d, &a.boot)?;
    write_bin_csv(&a.csv, &rows)?;
    Ok(json!({ "command": "sweep-sigma", "config": echo(a), "n": data.len(), "rows": rows }))
}

fn moments(a: &MomentsArgs) -> Result<Value, Failure> {
    if a.n_max < 2 {
        return Err(Failure::Usage("--n-max must be at least 2".into()));
    }
    let data = load(&a.input)?;
    let orders: Vec<usize> = (2..=a.n_max).collect();
    let points = moment_lambdas(&data.quadratures(), &orders)?;
    let stats: Vec<Statistic> = orders
        .iter()
        .map(|&n| Statistic::MomentLambda { n })
        .collect();
    let outcomes = bootstrap_many(&data, &a.boot.spec(data.len()), &stats)?;
    let mut csv = String::from("n,lambda,mean,std,v,verdict,boot_undefined\n");
    let rows: Vec<Value> = orders
        .iter()
        .zip(&points)
        .zip(&outcomes)
        .map(|((&n, &lambda), o)| {
            let v = violation(0.0, o);
            let verdict = verdict(v.map_or(lambda < 0.0, |v| v > 0.0));
            let _ = writeln!(
                csv,
                "{n},{lambda},{},{},{},{verdict},{}",
                o.mean,
                o.std,
                opt_csv(v),
                o.undefined
            );
            json!({ "n": n, "lambda": lambda, "mean": o.mean, "std": o.std, "v": v,
                    "verdict": verdict, "boot_undefined": o.undefined })
        })
        .collect();
    if let Some(path) = &a.csv {
        write_text(path, &csv)?;
    }
    Ok(json!({ "command": "moments", "config": echo(a), "n": data.len(), "rows": rows }))
}

fn estimate(a: &EstimateArgs) -> Result<Value, Failure> {
    let xs = load(&a.in_x)?.quadratures();
    let ps = load(&a.in_p)?.quadratures();
    let summary = summarize(&xs, &ps)?;
    let est = estimate_params(&summary)?;
    let mut spread = Value::Null;
    if a.boot.bootstrap > 0 {
        let plan_x = ResamplePlan::new(a.boot.spec(xs.len()), xs.len())?;
        let mut spec_p = a.boot.spec(ps.len());
        spec_p.master_seed = a.boot.seed.wrapping_add(1);
        let plan_p = ResamplePlan::new(spec_p, ps.len())?;
        let fits: Vec<Option<Params>> = plan_x.map(|b, ix| {
            let bx: Vec<f64> = ix.iter().map(|&k| xs[k]).collect();
            let bp: Vec<f64> = plan_p.indices(b).iter().map(|&k| ps[k]).collect();
            summarize(&bx, &bp)
                .and_then(|s| estimate_params(&s))
                .ok()
                .map(|e| e.params)
        });
        let good: Vec<Params> = fits.into_iter().flatten().collect();
        let std_of = |f: fn(&Params) -> f64| {
            mean_std(&good.iter().map(f).collect::<Vec<_>>())
                .ok()
                .map(|(_, s)| s)
        };
        spread = json!({
            "r_std": std_of(|p| p.r),
            "l_std": std_of(|p| p.loss),
            "delta_std": std_of(|p| p.delta),
            "resamples": a.boot.bootstrap,
            "failed": a.boot.bootstrap - good.len(),
        });
    }
    Ok(json!({
        "command": "estimate",
        "config": echo(a),
        "r": est.params.r,
        "l": est.params.loss,
        "delta": est.params.delta,
        "residuals": est.residuals,
        "var_x_db": db_from_variance(summary.var_x)?,
        "var_p_db": db_from_variance(summary.var_p)?,
        "kurt_x": summary.kurt_x,
        "bootstrap": spread,
    }))
}

fn ep_of(params: &Params, cutoff: usize) -> Result<(f64, f64), Failure> {
    let state = diffused_squeezed_state(params, cutoff)?;
    Ok((entanglement_potential(&state)?, state.truncation_error()))
}

fn ep(a: &EpArgs) -> Result<Value, Failure> {
    let params = Params::new(a.r, a.loss, a.delta)?;
    let (ep, trunc) = ep_of(&params, a.cutoff)?;
    Ok(json!({ "command": "ep", "config": echo(a), "ep": ep, "truncation_error": trunc }))
}

fn compare(a: &CompareArgs) -> Result<Value, Failure> {
    let given = match (a.r, a.loss, a.delta) {
        (Some(r), Some(l), Some(d)) => Some(Params::new(r, l, d)?),
        _ => None,
    };
    let mut csv = String::from("input,delta,v_bin");
    for n in &a.n_list {
        let _ = write!(csv, ",v_moment_{n}");
    }
    csv.push_str(",ep\n");
    let mut rows = Vec::new();
    for input in &a.inputs {
        let data = load(input)?;
        let reports = compare_methods(&data, a.sigma, a.d, &a.n_list, &a.boot.spec(data.len()))?;
        let params = given.or_else(|| data.meta().effective_params().map(|(p, _)| p));
        let ep = params
            .map(|p| ep_of(&p, a.cutoff))
            .transpose()?
            .map(|e| e.0);
        let delta = params.map(|p| p.delta);
        let _ = write!(csv, "{},{}", input.display(), opt_csv(delta));
        for rep in &reports {
            let _ = write!(csv, ",{}", rep.v);
        }
        let _ = writeln!(csv, ",{}", opt_csv(ep));
        rows.push(json!({
            "input": input,
            "delta": delta,
            "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "ep": ep,
        }));
    }
    if let Some(path) = &a.csv {
        write_text(path, &csv)?;
    }
    Ok(json!({ "command": "compare", "config": echo(a), "rows": rows }))
}
