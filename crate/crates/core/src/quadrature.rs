//! Analytic forward model of an x-squeezed vacuum under optical loss and
//! Gaussian phase diffusion.
//!
//! Quadratures are in shot-noise units (`[x̂, p̂] = 2i`, vacuum variance 1).
//! The phase-diffused quadrature distribution is a Gaussian mixture over the
//! rotation angle θ ~ Normal(0, Δ²); mixtures are evaluated with a folded,
//! graded Gauss–Legendre rule in θ (see [`crate::integrate::phase_rule`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::phase_rule;
use crate::scalar::{lit, Scalar};
use crate::special::{normal_cdf, normal_interval, normal_pdf};

/// Below this Δ the mixture collapses to a single Gaussian.
pub const DELTA_COLLAPSE: f64 = 1e-12;

/// Squeezing `r`, loss (beam-splitter reflectance) `l`, and phase-diffusion
/// standard deviation `delta` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams<T> {
    pub r: T,
    #[serde(rename = "l")]
    pub loss: T,
    pub delta: T,
}

impl<T: Scalar> StateParams<T> {
    pub fn new(r: T, loss: T, delta: T) -> Result<Self> {
        let p = Self { r, loss, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn vacuum() -> Self {
        Self {
            r: T::zero(),
            loss: T::zero(),
            delta: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.r.is_finite() && self.loss.is_finite() && self.delta.is_finite();
        if !finite {
            return Err(Error::InvalidParams(format!(
                "non-finite parameter in {:?}",
                self
            )));
        }
        if self.r < T::zero() {
            return Err(Error::InvalidParams(format!("r = {} < 0", self.r)));
        }
        if self.loss < T::zero() || self.loss > T::one() {
            return Err(Error::InvalidParams(format!(
                "loss = {} outside [0, 1]",
                self.loss
            )));
        }
        if self.delta < T::zero() {
            return Err(Error::InvalidParams(format!("delta = {} < 0", self.delta)));
        }
        Ok(())
    }

    pub fn with_delta(self, delta: T) -> Self {
        Self { delta, ..self }
    }

    /// Converts between scalar types.
    pub fn cast<U: Scalar>(&self) -> StateParams<U> {
        let c = |x: T| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan);
        StateParams {
            r: c(self.r),
            loss: c(self.loss),
            delta: c(self.delta),
        }
    }
}

/// Which quadrature is measured: x (LO phase 0) or p (LO phase π/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    P,
}

impl Axis {
    pub fn center_phase<T: Scalar>(self) -> T {
        match self {
            Axis::X => T::zero(),
            Axis::P => T::FRAC_PI_2(),
        }
    }
}

/// Var(r, θ, l) = l + (1−l)(e^{−2r}cos²θ + e^{2r}sin²θ).
pub fn rotated_variance<T: Scalar>(params: &StateParams<T>, theta: T) -> T {
    let two_r = lit::<T>(2.0) * params.r;
    let (s, c) = theta.sin_cos();
    params.loss + (T::one() - params.loss) * ((-two_r).exp() * c * c + two_r.exp() * s * s)
}

/// Phase-averaged variance ⟨δx̂²⟩ or ⟨δp̂²⟩.
///
/// Uses l + (1−l)(cosh 2r ∓ e^{−2Δ²} sinh 2r), which equals the
/// e^{−Δ²}(e^{∓2r} cosh Δ² + e^{±2r} sinh Δ²) form but stays finite for any Δ.
pub fn diffused_variance<T: Scalar>(params: &StateParams<T>, axis: Axis) -> T {
    let two_r = lit::<T>(2.0) * params.r;
    let u = (-lit::<T>(2.0) * params.delta * params.delta).exp();
    let spread = two_r.sinh() * u;
    let inner = match axis {
        Axis::X => two_r.cosh() - spread,
        Axis::P => two_r.cosh() + spread,
    };
    params.loss + (T::one() - params.loss) * inner
}

/// Kurtosis of the x quadrature,
/// K = 3 + 6(1−l)² e^{−4Δ²} sinh²(2Δ²) sinh²(2r) / ⟨δx̂²⟩².
pub fn kurtosis_x<T: Scalar>(params: &StateParams<T>) -> T {
    let u = (-lit::<T>(2.0) * params.delta * params.delta).exp();
    // e^{−4Δ²} sinh²(2Δ²) = ((1 − u²)/2)²
    let damp = (T::one() - u * u) * lit(0.5);
    let a = T::one() - params.loss;
    let s = (lit::<T>(2.0) * params.r).sinh();
    let v = diffused_variance(params, Axis::X);
    lit::<T>(3.0) + lit::<T>(6.0) * a * a * damp * damp * s * s / (v * v)
}

/// Half-width in θ of the variance minimum,
/// √(V_min / ((1 − l)·2 sinh 2r)); infinite for an unsqueezed state.
fn phase_feature<T: Scalar>(p: &StateParams<T>) -> T {
    let v_min = p.loss + (T::one() - p.loss) * (-lit::<T>(2.0) * p.r).exp();
    let curvature = (T::one() - p.loss) * lit::<T>(2.0) * (lit::<T>(2.0) * p.r).sinh();
    if curvature > T::zero() {
        (v_min / curvature).sqrt()
    } else {
        T::infinity()
    }
}

/// Marginal quadrature distribution of the phase-diffused lossy squeezed
/// vacuum along one axis.
#[derive(Debug, Clone)]
pub struct QuadratureDistribution<T> {
    params: StateParams<T>,
    axis: Axis,
    probs: Vec<T>,
    variances: Vec<T>,
    stds: Vec<T>,
}

impl<T: Scalar> QuadratureDistribution<T> {
    pub fn new(params: StateParams<T>, axis: Axis) -> Result<Self> {
        params.validate()?;
        let offset = axis.center_phase::<T>();
        let (thetas, probs) = if params.delta < lit(DELTA_COLLAPSE) {
            (vec![T::zero()], vec![T::one()])
        } else {
            phase_rule(params.delta, phase_feature(&params))
        };
        let variances: Vec<T> = thetas
            .iter()
            .map(|&t| rotated_variance(&params, t + offset))
            .collect();
        let stds = variances.iter().map(|v| v.sqrt()).collect();
        Ok(Self {
            params,
            axis,
            probs,
            variances,
            stds,
        })
    }

    pub fn params(&self) -> &StateParams<T> {
        &self.params
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Closed-form variance of this marginal.
    pub fn variance(&self) -> T {
        diffused_variance(&self.params, self.axis)
    }

    pub fn pdf(&self, x: T) -> T {
        self.mix(|_, s| normal_pdf(x / s) / s)
    }

    pub fn cdf(&self, x: T) -> T {
        self.mix(|_, s| normal_cdf(x / s))
    }

    /// P(a ≤ x < b).
    pub fn interval_probability(&self, a: T, b: T) -> T {
        self.mix(|_, s| normal_interval(a / s, b / s))
    }

    /// Probability of bin `m`, which covers [(m−½)σ, (m+½)σ).
    pub fn bin_probability(&self, sigma: T, m: i64) -> Result<T> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bin size must be positive, got {sigma}"
            )));
        }
        let mf = T::from_i64(m).expect("bin index representable");
        let half = lit::<T>(0.5);
        Ok(self.interval_probability((mf - half) * sigma, (mf + half) * sigma))
    }

    /// Mixture sum Σ pₖ f(Vₖ, √Vₖ).
    fn mix<F: Fn(T, T) -> T>(&self, f: F) -> T {
        let mut acc = T::zero();
        for ((&p, &v), &s) in self.probs.iter().zip(&self.variances).zip(&self.stds) {
            acc += p * f(v, s);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p(r: f64, l: f64, d: f64) -> StateParams<f64> {
        StateParams::new(r, l, d).unwrap()
    }

    /// Trapezoid rule over θ ∈ [−12Δ, 12Δ] against the Normal(0, Δ²) weight.
    fn theta_average(delta: f64, f: impl Fn(f64) -> f64) -> f64 {
        let n = 24_000;
        let lo = -12.0 * delta;
        let h = 24.0 * delta / n as f64;
        let norm = 1.0 / ((2.0 * PI).sqrt() * delta);
        let mut acc = 0.0;
        for i in 0..=n {
            let t = lo + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * f(t) * norm * (-(t * t) / (2.0 * delta * delta)).exp();
        }
        acc * h
    }

    #[test]
    fn rotated_variance_examples() {
        assert_relative_eq!(rotated_variance(&p(0.5, 0.0, 0.0), 0.0), (-1.0f64).exp());
        assert_relative_eq!(rotated_variance(&p(0.7, 1.0, 0.0), 1.234), 1.0);
        assert_relative_eq!(
            rotated_variance(&p(0.5, 0.1, 0.0), FRAC_PI_2),
            0.1 + 0.9 * 1.0f64.exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rotated_variance_is_even_and_pi_periodic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let params = p(0.6, 0.2, 0.0);
        for _ in 0..50 {
            let t: f64 = rng.random_range(-10.0..10.0);
            let v = rotated_variance(&params, t);
            assert_relative_eq!(v, rotated_variance(&params, -t), max_relative = 1e-13);
            assert_relative_eq!(v, rotated_variance(&params, t + PI), max_relative = 1e-12);
            let lo = (-1.2f64).exp().min(1.0);
            let hi = 1.2f64.exp().max(1.0);
            assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
        }
    }

    #[test]
    fn diffused_variance_limits() {
        assert_relative_eq!(
            diffused_variance(&p(0.5, 0.1, 0.0), Axis::X),
            0.1 + 0.9 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        let big = p(0.4, 0.3, 40.0);
        let lim = 0.3 + 0.7 * (0.8f64).cosh();
        assert_relative_eq!(diffused_variance(&big, Axis::X), lim, max_relative = 1e-15);
        assert_relative_eq!(diffused_variance(&big, Axis::P), lim, max_relative = 1e-15);
        assert_relative_eq!(diffused_variance(&p(0.9, 1.0, 0.3), Axis::X), 1.0);
        assert_relative_eq!(kurtosis_x(&p(0.9, 1.0, 0.3)), 3.0);
    }

    #[test]
    fn closed_forms_agree_with_theta_quadrature_on_grid() {
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let (r, l, d) = (i as f64 * 0.25, j as f64 * 0.225, k as f64 * 0.2);
                    let params = p(r, l, d);
                    let (vx, vp, kx) = if d == 0.0 {
                        let vx = rotated_variance(&params, 0.0);
                        (vx, rotated_variance(&params, FRAC_PI_2), 3.0)
                    } else {
                        let vx = theta_average(d, |t| rotated_variance(&params, t));
                        let vp = theta_average(d, |t| rotated_variance(&params, t + FRAC_PI_2));
                        let m4 = theta_average(d, |t| 3.0 * rotated_variance(&params, t).powi(2));
                        (vx, vp, m4 / (vx * vx))
                    };
                    assert_relative_eq!(
                        diffused_variance(&params, Axis::X),
                        vx,
                        max_relative = 1e-10
                    );
                    assert_relative_eq!(
                        diffused_variance(&params, Axis::P),
                        vp,
                        max_relative = 1e-10
                    );
                    assert_relative_eq!(kurtosis_x(&params), kx, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn kurtosis_gaussian_limits() {
        assert_eq!(kurtosis_x(&p(0.7, 0.2, 0.0)), 3.0);
        assert_eq!(kurtosis_x(&p(0.0, 0.2, 0.5)), 3.0);
        let oracle_params = p(0.3, 0.2, 0.2);
        let vx = theta_average(0.2, |t| rotated_variance(&oracle_params, t));
        let m4 = theta_average(0.2, |t| 3.0 * rotated_variance(&oracle_params, t).powi(2));
        assert_relative_eq!(
            kurtosis_x(&oracle_params),
            m4 / (vx * vx),
            max_relative = 1e-10
        );
    }

    #[test]
    fn physical_states_obey_uncertainty_and_axis_ordering() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let params = p(
                rng.random_range(0.0..1.5),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..2.0),
            );
            let vx = diffused_variance(&params, Axis::X);
            let vp = diffused_variance(&params, Axis::P);
            assert!(vx <= vp);
            assert!(vx * vp >= 1.0 - 1e-12, "{params:?}: {vx} * {vp}");
            assert!(kurtosis_x(&params) >= 3.0);
        }
    }

    #[test]
    fn pdf_collapses_to_gaussian_without_diffusion() {
        let params = p(0.4, 0.1, 0.0);
        let dist = QuadratureDistribution::new(params, Axis::X).unwrap();
        let v = rotated_variance(&params, 0.0);
        for i in -30..=30 {
            let x = i as f64 * 0.1;
            let g = (-(x * x) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
            assert_relative_eq!(dist.pdf(x), g, max_relative = 1e-14);
        }
    }

    #[test]
    fn pdf_is_even_and_normalized() {
        let dist = QuadratureDistribution::new(p(0.8, 0.3, 0.4), Axis::X).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-6.0..6.0);
            assert_relative_eq!(dist.pdf(x), dist.pdf(-x), max_relative = 1e-14);
            assert!(dist.pdf(x) > 0.0);
        }
        // Simpson on [−20, 20].
        let n = 8000;
        let h = 40.0 / n as f64;
        let mut s = dist.pdf(-20.0) + dist.pdf(20.0);
        for i in 1..n {
            let x = -20.0 + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * dist.pdf(x);
        }
        assert!((s * h / 3.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bin_probabilities() {
        let vac = QuadratureDistribution::new(StateParams::vacuum(), Axis::X).unwrap();
        assert_relative_eq!(
            vac.bin_probability(1.0, 0).unwrap(),
            0.382_924_922_548_026,
            max_relative = 1e-13
        );

        let dist = QuadratureDistribution::new(p(0.9, 0.25, 0.3), Axis::X).unwrap();
        assert_relative_eq!(
            dist.bin_probability(0.7, 3).unwrap(),
            dist.bin_probability(0.7, -3).unwrap(),
            max_relative = 1e-13
        );
        let total: f64 = (-200..=200)
            .map(|m| dist.bin_probability(0.5, m).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-8);
        assert!(dist.bin_probability(0.0, 0).is_err());
    }

    #[test]
    fn bin_probability_matches_high_precision_references() {
        // 30-digit adaptive quadrature of the same mixture.
        let cases = [
            (1.5, 0.0, 1.0, 0.3, 0, Axis::X, 0.084_090_398_732_399_380_71),
            (
                1.5,
                0.0,
                0.35,
                0.3,
                3,
                Axis::X,
                0.052_777_133_515_047_312_52,
            ),
            (
                1.04,
                0.414,
                0.15,
                1.0,
                1,
                Axis::X,
                0.228_832_998_816_724_926_7,
            ),
            (
                1.04,
                0.414,
                0.37,
                1.0,
                3,
                Axis::X,
                0.009_474_745_976_931_360_39,
            ),
            (
                0.6,
                0.15,
                0.35,
                0.8,
                2,
                Axis::X,
                0.057_552_768_010_944_380_71,
            ),
            (1.2, 0.1, 0.6, 0.5, 0, Axis::P, 0.083_674_631_110_800_811_91),
        ];
        for (r, l, d, sigma, m, axis, want) in cases {
            let dist = QuadratureDistribution::new(p(r, l, d), axis).unwrap();
            let got = dist.bin_probability(sigma, m).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn bin_probability_matches_double_integration() {
        // Independent oracle: trapezoid in θ of Simpson in x of the Gaussian density.
        let params = p(0.6, 0.15, 0.35);
        let dist = QuadratureDistribution::new(params, Axis::X).unwrap();
        let (sigma, m) = (0.8, 2);
        let (a, b) = ((m as f64 - 0.5) * sigma, (m as f64 + 0.5) * sigma);
        let oracle = theta_average(0.35, |t| {
            let v = rotated_variance(&params, t);
            let n = 200;
            let h = (b - a) / n as f64;
            let g = |x: f64| (-(x * x) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
            let mut s = g(a) + g(b);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + h * i as f64);
            }
            s * h / 3.0
        });
        assert_relative_eq!(
            dist.bin_probability(sigma, m).unwrap(),
            oracle,
            max_relative = 1e-9
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(StateParams::new(-0.1, 0.0, 0.0).is_err());
        assert!(StateParams::new(0.1, 1.5, 0.0).is_err());
        assert!(StateParams::new(0.1, 0.0, -1.0).is_err());
        assert!(StateParams::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let params = StateParams::<f32>::new(0.5, 0.1, 0.2).unwrap();
        let d32 = QuadratureDistribution::new(params, Axis::X).unwrap();
        let d64 = QuadratureDistribution::new(params.cast::<f64>(), Axis::X).unwrap();
        assert!(
            (d32.bin_probability(1.0, 1).unwrap() as f64 - d64.bin_probability(1.0, 1).unwrap())
                .abs()
                < 1e-5
        );
    }
}
