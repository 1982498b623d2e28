//! Nonclassicality witnesses: the three-point / three-bin tests and the
//! normally-ordered-moment matrix.

use serde::Serialize;
use serde_json::json;

use crate::coarse_grain::{bin_index, BinnedHistogram};
use crate::error::{Error, Result};
use crate::hermite;
use crate::linalg::{frobenius_norm, symmetric_eigen};
use crate::quadrature::QuadratureDistribution;
use crate::scalar::{from_u64, from_usize, lit, pairwise_vec_sum, Scalar};

pub const MIN_MOMENT_ORDER: usize = 2;
pub const MAX_MOMENT_ORDER: usize = 8;

/// Relative eigen-residual bound, ‖Mv − λv‖ ≤ tol·‖M‖_F.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// R(s) = p(s)p(−s)/p(0)² · e^{s²} of a continuous quadrature distribution.
/// R < 1 certifies nonclassicality.
pub fn three_point_r<T: Scalar>(dist: &QuadratureDistribution<T>, s: T) -> Result<T> {
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "s must be positive, got {s}"
        )));
    }
    let p0 = dist.pdf(T::zero());
    if !(p0 > T::zero()) {
        return Err(Error::UndefinedStatistic("p(0) = 0".into()));
    }
    Ok(dist.pdf(s) * dist.pdf(-s) / (p0 * p0) * (s * s).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeBinResult<T> {
    pub r_value: T,
    pub sigma: T,
    pub d: u32,
    /// (C₋d, C₀, C_d)
    pub counts_used: (u64, u64, u64),
    /// Set when C₋d or C_d is zero and 𝓡 is reported as 0.
    pub low_count: bool,
}

impl<T: Scalar> ThreeBinResult<T> {
    pub fn nonclassical(&self) -> bool {
        self.r_value < T::one()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "statistic": "three_bin",
            "value": self.r_value.to_f64(),
            "verdict": verdict(self.nonclassical()),
            "parameters": {
                "sigma": self.sigma.to_f64(),
                "d": self.d,
                "counts": [self.counts_used.0, self.counts_used.1, self.counts_used.2],
            },
            "low_count": self.low_count,
        })
    }
}

pub(crate) fn verdict(nonclassical: bool) -> &'static str {
    if nonclassical {
        "nonclassical"
    } else {
        "no detection"
    }
}

/// 𝓡 = C_d·C₋d / C₀² · e^{σ²d²}.
pub fn three_bin_r<T: Scalar>(hist: &BinnedHistogram<T>, d: u32) -> Result<ThreeBinResult<T>> {
    if d == 0 {
        return Err(Error::InvalidArgument("bin distance must be ≥ 1".into()));
    }
    let di = i64::from(d);
    let (cm, c0, cp) = (hist.count(-di), hist.count(0), hist.count(di));
    if c0 == 0 {
        return Err(Error::UndefinedStatistic(
            "central bin count C_0 is zero".into(),
        ));
    }
    let sigma = hist.sigma();
    let df = T::from_u32(d).expect("distance representable");
    let c0f = from_u64::<T>(c0);
    let r_value =
        from_u64::<T>(cp) * from_u64::<T>(cm) / (c0f * c0f) * (sigma * sigma * df * df).exp();
    Ok(ThreeBinResult {
        r_value,
        sigma,
        d,
        counts_used: (cm, c0, cp),
        low_count: cm == 0 || cp == 0,
    })
}

/// [`three_bin_r`] on raw outcomes, counting only the three bins involved.
pub fn three_bin_r_from_values<T: Scalar>(xs: &[T], sigma: T, d: u32) -> Result<ThreeBinResult<T>> {
    if d == 0 {
        return Err(Error::InvalidArgument("bin distance must be ≥ 1".into()));
    }
    let di = i64::from(d);
    let mut c = [0u64; 3];
    for &x in xs {
        match bin_index(x, sigma)? {
            0 => c[1] += 1,
            m if m == di => c[2] += 1,
            m if m == -di => c[0] += 1,
            _ => {}
        }
    }
    let hist = BinnedHistogram::from_counts(sigma, [(-di, c[0]), (0, c[1]), (di, c[2])])?;
    three_bin_r(&hist, d)
}

/// 𝓡 from exact bin probabilities, P_d·P₋d / P₀² · e^{σ²d²}.
pub fn analytic_three_bin_r<T: Scalar>(
    dist: &QuadratureDistribution<T>,
    sigma: T,
    d: u32,
) -> Result<T> {
    if d == 0 {
        return Err(Error::InvalidArgument("bin distance must be ≥ 1".into()));
    }
    let di = i64::from(d);
    let p0 = dist.bin_probability(sigma, 0)?;
    let pp = dist.bin_probability(sigma, di)?;
    let pm = dist.bin_probability(sigma, -di)?;
    let df = T::from_u32(d).expect("distance representable");
    Ok(pp * pm / (p0 * p0) * (sigma * sigma * df * df).exp())
}

/// Sampled normally ordered moments ⟨:x̂ʲ:⟩ ≈ (1/N) Σ 2^{−j/2} Hⱼ(xᵢ/√2) for
/// j = 0..=`max_order`, summed along a fixed pairwise tree.
pub fn normally_ordered_moments<T: Scalar>(xs: &[T], max_order: usize) -> Result<Vec<T>> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no quadrature samples".into()));
    }
    let width = max_order + 1;
    let sums = pairwise_vec_sum(xs, width, &|&x: &T, out: &mut [T]| {
        hermite::scaled_sequence(x, out)
    });
    let n = from_usize::<T>(xs.len());
    Ok(sums.into_iter().map(|s| s / n).collect())
}

pub fn normally_ordered_moment<T: Scalar>(xs: &[T], order: usize) -> Result<T> {
    Ok(normally_ordered_moments(xs, order)?[order])
}

/// Hankel matrix of normally ordered moments, M(n)ᵢⱼ = ⟨:x̂^{i+j}:⟩.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatrix<T> {
    pub order: usize,
    /// Row-major n×n.
    pub entries: Vec<T>,
    pub lambda_min: T,
    /// Largest ‖Mv − λv‖ over the computed eigenpairs.
    pub residual: T,
}

impl<T: Scalar> MomentMatrix<T> {
    /// Builds M(n) from ⟨:x̂ʲ:⟩, j = 0..=2n−2 (extra entries ignored).
    pub fn from_moments(moments: &[T], order: usize) -> Result<Self> {
        if !(MIN_MOMENT_ORDER..=MAX_MOMENT_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "moment matrix order must be in {MIN_MOMENT_ORDER}..={MAX_MOMENT_ORDER}, got {order}"
            )));
        }
        if moments.len() < 2 * order - 1 {
            return Err(Error::InvalidArgument(format!(
                "order {order} needs {} moments, got {}",
                2 * order - 1,
                moments.len()
            )));
        }
        let entries: Vec<T> = (0..order * order)
            .map(|k| moments[k / order + k % order])
            .collect();
        let eig = symmetric_eigen(&entries, order)?;
        let residual = eig.max_residual(&entries);
        let bound = lit::<T>(EIGEN_RESIDUAL_TOL) * frobenius_norm(&entries);
        if residual > bound {
            return Err(Error::UndefinedStatistic(format!(
                "eigen residual {residual} exceeds {bound}"
            )));
        }
        Ok(Self {
            order,
            lambda_min: eig.min_value(),
            entries,
            residual,
        })
    }

    pub fn from_samples(xs: &[T], order: usize) -> Result<Self> {
        if !(MIN_MOMENT_ORDER..=MAX_MOMENT_ORDER).contains(&order) {
            return Self::from_moments(&[], order);
        }
        let moments = normally_ordered_moments(xs, 2 * order - 2)?;
        Self::from_moments(&moments, order)
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.entries[i * self.order + j]
    }

    pub fn nonclassical(&self) -> bool {
        self.lambda_min < T::zero()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "statistic": "moment_lambda_min",
            "value": self.lambda_min.to_f64(),
            "verdict": verdict(self.nonclassical()),
            "parameters": { "n": self.order },
        })
    }
}

/// λ_min of M(n) for each n in `orders`, sharing one pass over the samples.
pub fn moment_lambdas<T: Scalar>(xs: &[T], orders: &[usize]) -> Result<Vec<T>> {
    let Some(&top) = orders.iter().max() else {
        return Ok(vec![]);
    };
    if !(MIN_MOMENT_ORDER..=MAX_MOMENT_ORDER).contains(&top) {
        return MomentMatrix::<T>::from_moments(&[], top).map(|_| vec![]);
    }
    let moments = normally_ordered_moments(xs, 2 * top - 2)?;
    orders
        .iter()
        .map(|&n| MomentMatrix::from_moments(&moments, n).map(|m| m.lambda_min))
        .collect()
}
