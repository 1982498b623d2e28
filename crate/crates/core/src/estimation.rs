//! Joint (r, l, Δ) estimation from the x variance, p variance and x kurtosis.
//!
//! Writing u = e^{−2Δ²}, the forward model reads
//!
//! ```text
//! ⟨δx̂²⟩ = l + (1−l)(cosh 2r − u·sinh 2r)
//! ⟨δp̂²⟩ = l + (1−l)(cosh 2r + u·sinh 2r)
//! K     = 3 + 6·(1−l)²·sinh²2r·((1−u²)/2)² / ⟨δx̂²⟩²
//! ```
//!
//! With D = (⟨δp̂²⟩−⟨δx̂²⟩)/2, E = √((K−3)/6)·⟨δx̂²⟩ and B = (1−l) sinh 2r this
//! gives D = B·u and E = B(1−u²)/2, so u is the root in (0, 1] of
//! D·u² + 2E·u − D = 0. Then S = (⟨δx̂²⟩+⟨δp̂²⟩)/2 = l + √((1−l)² + B²) fixes
//! l = (1 − S² + B²) / (2(1 − S)) and r = asinh(B/(1−l))/2.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::quadrature::{diffused_variance, kurtosis_x, Axis, StateParams};
use crate::scalar::{from_usize, lit, pairwise_sum, Scalar};

/// |1 − S| below this is treated as vacuum (loss unidentifiable).
pub const VACUUM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("invalid moment summary: {0}")]
    InvalidSummary(String),
    #[error("kurtosis {kurt} is below the Gaussian value 3")]
    SubGaussianKurtosis { kurt: f64 },
    #[error("x is not the squeezed axis (var_x = {var_x}, var_p = {var_p})")]
    NotSqueezingAxis { var_x: f64, var_p: f64 },
    #[error("vacuum-like variances: loss is unidentifiable (r = 0)")]
    VacuumLike,
    #[error("no physical solution: {reason}; candidate (r, l, delta) = {candidate:?}, residuals = {residuals:?}")]
    NoPhysicalSolution {
        reason: String,
        candidate: Option<[f64; 3]>,
        residuals: Option<[f64; 3]>,
    },
}

/// Measured ⟨δx̂²⟩, ⟨δp̂²⟩ and the x kurtosis K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary<T> {
    pub var_x: T,
    pub var_p: T,
    pub kurt_x: T,
}

/// Recovered parameters and relative residuals of the three forward moments
/// (var_x, var_p, kurt_x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub params: StateParams<T>,
    pub residuals: [T; 3],
}

/// Biased (divide-by-N) central moments: (mean, variance, fourth moment).
pub fn central_moments<T: Scalar>(xs: &[T]) -> Result<(T, T, T)> {
    if xs.len() < 2 {
        return Err(EstimationError::InvalidSummary(format!(
            "need at least 2 samples, got {}",
            xs.len()
        ))
        .into());
    }
    let n = from_usize::<T>(xs.len());
    let mean = pairwise_sum(xs) / n;
    let dev2: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev2) / n;
    let dev4: Vec<T> = dev2.iter().map(|&d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / n;
    Ok((mean, var, m4))
}

/// Summary statistics of x-quadrature and p-quadrature samples.
pub fn summarize<T: Scalar>(xs: &[T], ps: &[T]) -> Result<MomentSummary<T>> {
    let (_, var_x, m4) = central_moments(xs)?;
    let (_, var_p, _) = central_moments(ps)?;
    if !(var_x > T::zero()) || !(var_p > T::zero()) {
        return Err(EstimationError::InvalidSummary("zero variance".into()).into());
    }
    Ok(MomentSummary {
        var_x,
        var_p,
        kurt_x: m4 / (var_x * var_x),
    })
}

/// Moments predicted by the forward model.
pub fn forward_summary<T: Scalar>(params: &StateParams<T>) -> MomentSummary<T> {
    MomentSummary {
        var_x: diffused_variance(params, Axis::X),
        var_p: diffused_variance(params, Axis::P),
        kurt_x: kurtosis_x(params),
    }
}

fn relative_residuals<T: Scalar>(params: &StateParams<T>, s: &MomentSummary<T>) -> [T; 3] {
    let f = forward_summary(params);
    let rel = |a: T, b: T| ((a - b) / b).abs();
    [
        rel(f.var_x, s.var_x),
        rel(f.var_p, s.var_p),
        rel(f.kurt_x, s.kurt_x),
    ]
}

fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Solves for (l, r) given the variance half-sum S, the anti-diagonal
/// amplitude B = (1−l)·sinh 2r and the diffusion Δ.
fn loss_and_squeezing<T: Scalar>(
    s: T,
    b: T,
    delta: T,
    summary: Option<&MomentSummary<T>>,
) -> Result<StateParams<T>> {
    if (T::one() - s).abs() < lit(VACUUM_GUARD) {
        return Err(EstimationError::VacuumLike.into());
    }
    let mut loss = (T::one() - s * s + b * b) / (lit::<T>(2.0) * (T::one() - s));
    if loss.abs() < lit(VACUUM_GUARD) {
        loss = T::zero();
    }
    let a = T::one() - loss;
    let r = if a > T::zero() {
        (b / a).asinh() * lit(0.5)
    } else {
        T::nan()
    };
    if !(loss >= T::zero() && loss < T::one()) || !r.is_finite() {
        let candidate = StateParams { r, loss, delta };
        return Err(EstimationError::NoPhysicalSolution {
            reason: format!("derived loss {loss} outside [0, 1)"),
            candidate: Some([to_f64(r), to_f64(loss), to_f64(delta)]),
            residuals: summary.map(|s| relative_residuals(&candidate, s).map(to_f64)),
        }
        .into());
    }
    Ok(StateParams { r, loss, delta })
}

/// Closed-form inversion of the forward moments.
pub fn estimate_params<T: Scalar>(summary: &MomentSummary<T>) -> Result<Estimate<T>> {
    let MomentSummary {
        var_x,
        var_p,
        kurt_x,
    } = *summary;
    let finite = var_x.is_finite() && var_p.is_finite() && kurt_x.is_finite();
    if !finite || !(var_x > T::zero()) || !(var_p > T::zero()) {
        return Err(EstimationError::InvalidSummary(format!("{summary:?}")).into());
    }
    if kurt_x < lit(3.0) {
        return Err(EstimationError::SubGaussianKurtosis {
            kurt: to_f64(kurt_x),
        }
        .into());
    }
    if var_p <= var_x {
        return Err(EstimationError::NotSqueezingAxis {
            var_x: to_f64(var_x),
            var_p: to_f64(var_p),
        }
        .into());
    }
    if var_x * var_p < T::one() {
        return Err(EstimationError::NoPhysicalSolution {
            reason: format!("uncertainty product {} < 1", var_x * var_p),
            candidate: None,
            residuals: None,
        }
        .into());
    }
    let d = (var_p - var_x) * lit(0.5);
    let s = (var_x + var_p) * lit(0.5);
    let e = ((kurt_x - lit(3.0)) / lit(6.0)).sqrt() * var_x;
    // Positive root of D u² + 2E u − D = 0, written without cancellation.
    let u = d / (e + (e * e + d * d).sqrt());
    let delta = (-u.ln() * lit(0.5)).max(T::zero()).sqrt();
    let b = d / u;
    let params = loss_and_squeezing(s, b, delta, Some(summary))?;
    Ok(Estimate {
        residuals: relative_residuals(&params, summary),
        params,
    })
}

/// Parameters reproducing given x/p variances at a known Δ.
pub fn params_from_variances<T: Scalar>(var_x: T, var_p: T, delta: T) -> Result<StateParams<T>> {
    if !(var_x > T::zero()) || !(var_p > var_x) || !(delta >= T::zero()) {
        return Err(EstimationError::InvalidSummary(format!(
            "need 0 < var_x < var_p and delta ≥ 0, got ({var_x}, {var_p}, {delta})"
        ))
        .into());
    }
    let u = (-lit::<T>(2.0) * delta * delta).exp();
    let d = (var_p - var_x) * lit(0.5);
    let s = (var_x + var_p) * lit(0.5);
    loss_and_squeezing(s, d / u, delta, None)
}

/// Smallest-|r| squeezing giving x variance `target` at fixed loss and Δ.
///
/// Solves cosh y − u·sinh y = t with y = 2r, t = (target − l)/(1 − l): a
/// quadratic in e^{y}. Targets below the vacuum take the weaker-squeezing
/// root; targets above it take the root with y > 0.
pub fn squeezing_for_variance<T: Scalar>(target: T, loss: T, delta: T) -> Result<T> {
    let bad = |why: String| -> Error { Error::InvalidParams(why) };
    if !(target > T::zero()) || !(loss >= T::zero() && loss < T::one()) || !(delta >= T::zero()) {
        return Err(bad(format!(
            "target {target}, loss {loss}, delta {delta} out of range"
        )));
    }
    let a = T::one() - loss;
    let t = (target - loss) / a;
    let u = (-lit::<T>(2.0) * delta * delta).exp();
    if t == T::one() {
        return Ok(T::zero());
    }
    let floor = (T::one() - u * u).sqrt();
    if t < floor || !(t > T::zero()) {
        return Err(bad(format!(
            "x variance {target} unreachable with loss {loss} and delta {delta}"
        )));
    }
    let one_minus_u = T::one() - u;
    let z = if one_minus_u <= T::epsilon() {
        // u = 1: e^{−y} = t
        if t > T::one() {
            return Err(bad(format!(
                "anti-squeezed x variance {target} impossible without phase diffusion"
            )));
        }
        t.recip()
    } else {
        let disc = (t * t - floor * floor).max(T::zero()).sqrt();
        if t < T::one() {
            (t - disc) / one_minus_u
        } else {
            (t + disc) / one_minus_u
        }
    };
    Ok(z.ln() * lit(0.5))
}

pub fn db_from_variance<T: Scalar>(v: T) -> Result<T> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "variance must be positive, got {v}"
        )));
    }
    Ok(lit::<T>(10.0) * v.log10())
}

pub fn variance_from_db<T: Scalar>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}
