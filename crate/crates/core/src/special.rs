//! Error function and standard normal distribution helpers.

use crate::scalar::{lit, Scalar};

const SERIES_LIMIT: f64 = 2.5;
/// erfc switches from 1 − erf to a direct tail evaluation here, before the
/// subtraction loses relative accuracy.
const CF_LIMIT: f64 = 0.75;
const MAX_TERMS: usize = 500;

/// Chebyshev coefficients of ln erfc(x) + x² on [CF_LIMIT, SERIES_LIMIT].
#[rustfmt::skip]
const ERFC_CHEB: [f64; 22] = [
    -2.3153600117269216e+0,
    -4.3465431621816759e-1,
    3.9183501844442839e-2,
    -4.0332489392447022e-3,
    4.0252511999188883e-4,
    -3.6313745943746687e-5,
    2.7170221714657610e-6,
    -1.2929481188734816e-7,
    -4.4947275607689906e-9,
    2.1395828027584463e-9,
    -3.2920991338193572e-10,
    3.4400985466849875e-11,
    -2.3133732872967564e-12,
    1.0097844808559119e-15,
    2.9095523303798025e-14,
    -5.4766038196028207e-15,
    6.5495766647388424e-16,
    -5.2089742291935632e-17,
    1.2092660494653213e-18,
    4.6767258691268002e-19,
    -1.0606967398613813e-19,
    1.4049209051184076e-20,
];

/// erf(x) for |x| <= SERIES_LIMIT via the all-positive series
/// erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!.
fn erf_series<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let two = lit::<T>(2.0);
    for n in 0..MAX_TERMS {
        term = term * two * x2 / lit::<T>(2.0 * n as f64 + 3.0);
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-x2).exp() * sum
}

/// erfc(x) for CF_LIMIT <= x <= SERIES_LIMIT from the Chebyshev fit.
fn erfc_chebyshev<T: Scalar>(x: T) -> T {
    let (a, b) = (lit::<T>(CF_LIMIT), lit::<T>(SERIES_LIMIT));
    let t = (x * lit(2.0) - a - b) / (b - a);
    let two_t = t * lit(2.0);
    let (mut d, mut dd) = (T::zero(), T::zero());
    for &c in ERFC_CHEB.iter().skip(1).rev() {
        let next = two_t * d - dd + lit(c);
        dd = d;
        d = next;
    }
    let g = t * d - dd + lit::<T>(ERFC_CHEB[0] * 0.5);
    (g - x * x).exp()
}

/// erfc(x) for x > SERIES_LIMIT via the Laplace continued fraction
/// (modified Lentz).
fn erfc_continued_fraction<T: Scalar>(x: T) -> T {
    let tiny = T::min_positive_value() * lit(1e10);
    let half = lit::<T>(0.5);
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..MAX_TERMS {
        let a = half * lit::<T>(n as f64);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = d.recip();
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() * T::FRAC_2_SQRT_PI() * lit(0.5) / f
}

pub fn erf<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x.abs() <= lit(SERIES_LIMIT) {
        erf_series(x)
    } else if x > T::zero() {
        T::one() - erfc_continued_fraction(x)
    } else {
        erfc_continued_fraction(-x) - T::one()
    }
}

/// Complementary error function, accurate in both tails.
pub fn erfc<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let upper = if ax < lit(CF_LIMIT) {
        return T::one() - erf_series(x);
    } else if ax <= lit(SERIES_LIMIT) {
        erfc_chebyshev(ax)
    } else {
        erfc_continued_fraction(ax)
    };
    if x > T::zero() {
        upper
    } else {
        lit::<T>(2.0) - upper
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    lit::<T>(0.5) * erfc(-z * T::FRAC_1_SQRT_2())
}

/// Upper tail Q(z) = 1 − Φ(z), computed without cancellation.
pub fn normal_sf<T: Scalar>(z: T) -> T {
    lit::<T>(0.5) * erfc(z * T::FRAC_1_SQRT_2())
}

pub fn normal_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) * lit(0.5)).exp() / (T::PI() * lit(2.0)).sqrt()
}

/// Φ(b) − Φ(a) for a <= b, choosing the tail that avoids cancellation.
pub fn normal_interval<T: Scalar>(a: T, b: T) -> T {
    if a >= T::zero() {
        normal_sf(a) - normal_sf(b)
    } else if b <= T::zero() {
        normal_sf(-b) - normal_sf(-a)
    } else {
        T::one() - normal_sf(-a) - normal_sf(b)
    }
}
