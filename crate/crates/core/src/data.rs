//! Homodyne records: Monte Carlo generation, CSV ingestion, phase-window
//! selection and artificial phase-noise injection.
//!
//! Simulated data model an LO phase scan. Each record draws a scan phase
//! φ ~ Uniform(center − W, center + W) (φ = center when W = 0), a diffusion
//! angle ε ~ Normal(0, Δ²), and an outcome x ~ Normal(0, Var(r, φ + ε, l)).
//! The recorded `theta` is the scan phase φ, so phase-noise injection followed
//! by window selection broadens the effective diffusion to √(Δ² + Δₑ²).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{rotated_variance, Axis, StateParams};

/// Identifier of the random stream construction, stored in metadata.
pub const RNG_ALGORITHM: &str = "chacha20-stream/rand_distr-ziggurat-normal";

/// Records per independent generator stream in [`sample_dataset_at`].
const CHUNK: usize = 1 << 16;

const AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    /// LO phase in radians.
    pub theta: f64,
    /// Quadrature outcome in shot-noise units.
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Simulated {
        params: StateParams<f64>,
        n: usize,
        seed: u64,
        center: f64,
        phase_window: f64,
        rng: String,
    },
    Ingested {
        path: String,
    },
    InMemory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    InjectPhaseNoise {
        delta_e: f64,
        seed: u64,
    },
    SelectPhaseWindow {
        center: f64,
        half_width: f64,
        kept: usize,
        empty: bool,
    },
}

/// Provenance of a dataset. Transforms append; nothing is edited in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub source: Source,
    #[serde(default)]
    pub transforms: Vec<Transform>,
}

impl Metadata {
    /// True if any window selection produced an empty dataset.
    pub fn flagged_empty(&self) -> bool {
        self.transforms
            .iter()
            .any(|t| matches!(t, Transform::SelectPhaseWindow { empty: true, .. }))
    }

    /// Forward-model parameters and axis describing simulated data after its
    /// transforms, when that is well defined.
    ///
    /// Injected noise counts towards Δ only once a later window selection
    /// picks records out of a phase scan (W > 0); the finite width of the
    /// selection window itself is neglected.
    pub fn effective_params(&self) -> Option<(StateParams<f64>, Axis)> {
        let Source::Simulated {
            params,
            center,
            phase_window,
            ..
        } = &self.source
        else {
            return None;
        };
        let scanning = *phase_window > 0.0;
        let mut var = params.delta * params.delta;
        let mut pending = 0.0;
        let mut axis = if scanning { None } else { axis_of(*center) };
        for t in &self.transforms {
            match *t {
                Transform::InjectPhaseNoise { delta_e, .. } => pending += delta_e * delta_e,
                Transform::SelectPhaseWindow { center, .. } => {
                    if scanning {
                        var += pending;
                        axis = axis_of(center);
                    }
                    pending = 0.0;
                }
            }
        }
        axis.map(|a| (params.with_delta(var.sqrt()), a))
    }
}

fn axis_of(center: f64) -> Option<Axis> {
    let c = wrap_phase(center);
    let half_pi = std::f64::consts::FRAC_PI_2;
    if c.abs() < AXIS_TOLERANCE || (c.abs() - std::f64::consts::PI).abs() < AXIS_TOLERANCE {
        Some(Axis::X)
    } else if (c.abs() - half_pi).abs() < AXIS_TOLERANCE {
        Some(Axis::P)
    } else {
        None
    }
}

/// Maps a phase to (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = theta - TAU * ((theta - PI) / TAU).ceil();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Ordered homodyne records plus immutable provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<HomodyneRecord>,
    meta: Metadata,
}

impl Dataset {
    pub fn new(records: Vec<HomodyneRecord>, meta: Metadata) -> Result<Self> {
        if let Some(i) = records
            .iter()
            .position(|r| !r.theta.is_finite() || !r.x.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "record {i} has a non-finite value"
            )));
        }
        Ok(Self { records, meta })
    }

    /// Dataset of quadrature values all taken at phase 0.
    pub fn from_quadratures(xs: &[f64]) -> Result<Self> {
        let records = xs
            .iter()
            .map(|&x| HomodyneRecord { theta: 0.0, x })
            .collect();
        Self::new(
            records,
            Metadata {
                source: Source::InMemory,
                transforms: vec![],
            },
        )
    }

    pub fn records(&self) -> &[HomodyneRecord] {
        &self.records
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn quadratures(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.x).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.theta).collect()
    }

    fn derive(&self, records: Vec<HomodyneRecord>, t: Transform) -> Self {
        let mut meta = self.meta.clone();
        meta.transforms.push(t);
        Self { records, meta }
    }
}

/// Simulates `n` records measured at LO phase 0 (x quadrature).
pub fn sample_dataset(
    params: &StateParams<f64>,
    n: usize,
    seed: u64,
    phase_window: f64,
) -> Result<Dataset> {
    sample_dataset_at(params, n, seed, 0.0, phase_window)
}

/// Simulates `n` records with the LO scanned uniformly over
/// `center ± phase_window`.
///
/// Records are generated in fixed chunks, chunk k drawing from ChaCha20
/// stream k of `seed`, so output is independent of the worker count.
pub fn sample_dataset_at(
    params: &StateParams<f64>,
    n: usize,
    seed: u64,
    center: f64,
    phase_window: f64,
) -> Result<Dataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    if !(phase_window >= 0.0) || !phase_window.is_finite() || !center.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "invalid phase window {center} ± {phase_window}"
        )));
    }
    let chunks = n.div_ceil(CHUNK);
    let records: Vec<HomodyneRecord> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| draw_record(params, center, phase_window, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Dataset {
        records,
        meta: Metadata {
            source: Source::Simulated {
                params: *params,
                n,
                seed,
                center,
                phase_window,
                rng: RNG_ALGORITHM.to_string(),
            },
            transforms: vec![],
        },
    })
}

fn draw_record<R: Rng>(
    params: &StateParams<f64>,
    center: f64,
    window: f64,
    rng: &mut R,
) -> HomodyneRecord {
    let phi = if window > 0.0 {
        center + rng.random_range(-window..window)
    } else {
        center
    };
    let eps: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    let angle = phi + params.delta * eps;
    HomodyneRecord {
        theta: phi,
        x: rotated_variance(params, angle).sqrt() * z,
    }
}

/// Adds independent Normal(0, Δₑ²) noise to every phase; outcomes unchanged.
pub fn inject_phase_noise(data: &Dataset, delta_e: f64, seed: u64) -> Result<Dataset> {
    if !(delta_e >= 0.0) || !delta_e.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "phase noise must be non-negative, got {delta_e}"
        )));
    }
    if delta_e == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let records = data
        .records
        .iter()
        .map(|r| {
            let eps: f64 = rng.sample(StandardNormal);
            HomodyneRecord {
                theta: r.theta + delta_e * eps,
                x: r.x,
            }
        })
        .collect();
    Ok(data.derive(records, Transform::InjectPhaseNoise { delta_e, seed }))
}

/// Keeps records with |wrap(θ − center)| < half_width, preserving order.
pub fn select_phase_window(data: &Dataset, center: f64, half_width: f64) -> Result<Dataset> {
    if !(half_width > 0.0) || !center.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "half width must be positive, got {half_width}"
        )));
    }
    let records: Vec<HomodyneRecord> = data
        .records
        .iter()
        .filter(|r| wrap_phase(r.theta - center).abs() < half_width)
        .copied()
        .collect();
    let kept = records.len();
    Ok(data.derive(
        records,
        Transform::SelectPhaseWindow {
            center,
            half_width,
            kept,
            empty: kept == 0,
        },
    ))
}

/// `s.csv` → `s.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes the `theta,x` CSV. Values use the shortest round-trip decimal form.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(data)).map_err(|e| Error::io(path, e))
}

pub fn to_csv_string(data: &Dataset) -> String {
    let mut out = String::with_capacity(16 + data.len() * 40);
    out.push_str("theta,x\n");
    for r in &data.records {
        let _ = writeln!(out, "{},{}", r.theta, r.x);
    }
    out
}

/// Reads a `theta,x` CSV; the dataset is tagged as ingested from `path`.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_csv(&text)?;
    Ok(Dataset {
        records,
        meta: Metadata {
            source: Source::Ingested {
                path: path.display().to_string(),
            },
            transforms: vec![],
        },
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<HomodyneRecord>> {
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r').trim() == "theta,x" => {}
        Some((_, h)) if h.trim().is_empty() && text.trim().is_empty() => return Ok(vec![]),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `theta,x`".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two fields, got `{line}`"),
            });
        };
        let parse = |s: &str, name: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid {name} value `{}`", s.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite {name} value `{}`", s.trim()),
                });
            }
            Ok(v)
        };
        records.push(HomodyneRecord {
            theta: parse(a, "theta")?,
            x: parse(b, "x")?,
        });
    }
    Ok(records)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    n: usize,
    rng: String,
    #[serde(flatten)]
    meta: Metadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    written_at_unix: Option<u64>,
}

/// Writes the CSV and its `.meta.json` sidecar.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    write_csv(data, path)?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs());
    let side = Sidecar {
        n: data.len(),
        rng: RNG_ALGORITHM.to_string(),
        meta: data.meta.clone(),
        written_at_unix: stamp,
    };
    let json = serde_json::to_string_pretty(&side).map_err(|e| Error::Metadata(e.to_string()))?;
    let side_path = sidecar_path(path);
    fs::write(&side_path, json + "\n").map_err(|e| Error::io(&side_path, e))
}

/// Reads a CSV and, when present, its sidecar metadata.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut data = read_csv(path)?;
    let side_path = sidecar_path(path);
    if side_path.exists() {
        let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let side: Sidecar =
            serde_json::from_str(&text).map_err(|e| Error::Metadata(e.to_string()))?;
        if side.n != data.len() {
            return Err(Error::Metadata(format!(
                "sidecar records n = {} but {} has {} records",
                side.n,
                path.display(),
                data.len()
            )));
        }
        data.meta = side.meta;
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{diffused_variance, QuadratureDistribution};
    use std::f64::consts::PI;

    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn vacuum_sample_variance() {
        let d = sample_dataset(&StateParams::vacuum(), 100_000, 1, 0.0).unwrap();
        assert!((var(&d.quadratures()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = StateParams::new(0.3, 0.1, 0.15).unwrap();
        let a = sample_dataset(&p, 70_000, 7, 0.2).unwrap();
        let b = sample_dataset(&p, 70_000, 7, 0.2).unwrap();
        assert_eq!(to_csv_string(&a), to_csv_string(&b));
        assert_eq!(a, b);
        let c = sample_dataset(&p, 70_000, 8, 0.2).unwrap();
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn empirical_variance_tracks_forward_model() {
        let p = StateParams::new(0.6, 0.2, 0.3).unwrap();
        let d = sample_dataset(&p, 200_000, 3, 0.0).unwrap();
        let v = var(&d.quadratures());
        let expect = diffused_variance(&p, Axis::X);
        // var of sample variance ≈ (K−1)V²/N
        let se = expect * ((crate::quadrature::kurtosis_x(&p) - 1.0) / 200_000.0).sqrt();
        assert!((v - expect).abs() < 4.0 * se, "{v} vs {expect}");
    }

    fn ks_distance(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn sampler_matches_analytic_cdf() {
        for (k, &(r, l, d)) in [
            (0.0, 0.0, 0.0),
            (0.5, 0.1, 0.2),
            (1.0, 0.4, 0.4),
            (0.8, 0.0, 0.8),
        ]
        .iter()
        .enumerate()
        {
            let p = StateParams::new(r, l, d).unwrap();
            let dist = QuadratureDistribution::new(p, Axis::X).unwrap();
            let mut xs = sample_dataset(&p, 100_000, 100 + k as u64, 0.0)
                .unwrap()
                .quadratures();
            let ks = ks_distance(&mut xs, |x| dist.cdf(x));
            assert!(ks <= 0.01, "KS {ks} for {p:?}");
        }
    }

    #[test]
    fn p_axis_sampling() {
        let p = StateParams::new(0.5, 0.1, 0.1).unwrap();
        let d = sample_dataset_at(&p, 100_000, 4, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let expect = diffused_variance(&p, Axis::P);
        assert!((var(&d.quadratures()) / expect - 1.0).abs() < 0.03);
        assert_eq!(d.meta().effective_params().unwrap().1, Axis::P);
    }

    #[test]
    fn zero_noise_is_identity() {
        let p = StateParams::new(0.3, 0.1, 0.15).unwrap();
        let d = sample_dataset(&p, 1000, 2, 0.5).unwrap();
        assert_eq!(inject_phase_noise(&d, 0.0, 9).unwrap(), d);
        assert!(inject_phase_noise(&d, -0.1, 9).is_err());
    }

    #[test]
    fn injected_noise_adds_phase_variance() {
        let p = StateParams::new(0.3, 0.1, 0.15).unwrap();
        let d = sample_dataset(&p, 100_000, 2, 0.5).unwrap();
        let noisy = inject_phase_noise(&d, 0.2, 10).unwrap();
        assert_eq!(noisy.quadratures(), d.quadratures());
        let added = var(&noisy.phases()) - var(&d.phases());
        // Sampling error of the variance difference is ~ sqrt(2/N)·0.04 + cross terms.
        assert!((added - 0.04).abs() < 0.003, "{added}");
    }

    #[test]
    fn window_selection() {
        let meta = Metadata {
            source: Source::InMemory,
            transforms: vec![],
        };
        let zeros = Dataset::new(
            (0..10)
                .map(|i| HomodyneRecord {
                    theta: 0.0,
                    x: i as f64,
                })
                .collect(),
            meta.clone(),
        )
        .unwrap();
        assert_eq!(select_phase_window(&zeros, 0.0, 0.087).unwrap().len(), 10);
        assert!(select_phase_window(&zeros, 0.0, 0.0).is_err());

        let empty = select_phase_window(&zeros, 1.0, 0.1).unwrap();
        assert!(empty.is_empty());
        assert!(empty.meta().flagged_empty());

        // Uniform phases: kept fraction ≈ w/π.
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let uniform = Dataset::new(
            (0..200_000)
                .map(|_| HomodyneRecord {
                    theta: rng.random_range(-PI..PI),
                    x: 0.0,
                })
                .collect(),
            meta,
        )
        .unwrap();
        let frac = select_phase_window(&uniform, 0.0, 0.087).unwrap().len() as f64 / 200_000.0;
        let expect = 0.087 / PI;
        assert!((frac - expect).abs() < 4.0 * (expect * (1.0 - expect) / 200_000.0).sqrt());
        // Wrap-around: a window centered at π catches phases near −π.
        let near_pi = select_phase_window(&uniform, PI, 0.087).unwrap();
        assert!(near_pi.records().iter().any(|r| r.theta < 0.0));
        assert!(near_pi.records().iter().any(|r| r.theta > 0.0));
    }

    #[test]
    fn p_window_on_scan_selects_antisqueezed_quadrature() {
        let p = StateParams::new(0.5, 0.1, 0.05).unwrap();
        let scan = sample_dataset(&p, 400_000, 6, PI).unwrap();
        let sel = select_phase_window(&scan, std::f64::consts::FRAC_PI_2, 0.05).unwrap();
        let (eff, axis) = sel.meta().effective_params().unwrap();
        assert_eq!(axis, Axis::P);
        let v = var(&sel.quadratures());
        assert!((v / diffused_variance(&eff, Axis::P) - 1.0).abs() < 0.05);
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.1 - 4.0 * PI) - 0.1).abs() < 1e-12);
        for i in -100..100 {
            let w = wrap_phase(i as f64 * 0.37);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let p = StateParams::new(0.3, 0.1, 0.15).unwrap();
        let d = sample_dataset(&p, 1000, 5, 0.3).unwrap();
        write_dataset(&d, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, d);
        let plain = read_csv(&path).unwrap();
        assert_eq!(plain.records(), d.records());

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "theta,x\n0.0,1.0\n0.01,abc\n").unwrap();
        match read_csv(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&bad, "theta,x\n0.0,inf\n").unwrap();
        assert!(matches!(read_csv(&bad), Err(Error::Parse { line: 2, .. })));
        fs::write(&bad, "theta,x\n").unwrap();
        assert!(read_csv(&bad).unwrap().is_empty());
        fs::write(&bad, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&bad), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn effective_params_follow_pipeline() {
        let p = StateParams::new(0.3, 0.1, 0.15).unwrap();
        let scan = sample_dataset(&p, 100, 1, 1.0).unwrap();
        assert!(scan.meta().effective_params().is_none());
        let noisy = inject_phase_noise(&scan, 0.2, 3).unwrap();
        let sel = select_phase_window(&noisy, 0.0, 0.087).unwrap();
        let (eff, axis) = sel.meta().effective_params().unwrap();
        assert_eq!(axis, Axis::X);
        assert!((eff.delta - (0.15f64.powi(2) + 0.04).sqrt()).abs() < 1e-12);

        let fixed = sample_dataset(&p, 100, 1, 0.0).unwrap();
        let sel =
            select_phase_window(&inject_phase_noise(&fixed, 0.2, 3).unwrap(), 0.0, 0.1).unwrap();
        assert_eq!(sel.meta().effective_params().unwrap().0.delta, 0.15);
    }
}
