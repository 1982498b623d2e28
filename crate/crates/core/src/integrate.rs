//! Quadrature over a Gaussian-distributed phase.
//!
//! Phase averages of π-periodic, even functions are folded onto [0, π/2]
//! against the wrapped Normal(0, Δ²) density and integrated with composite
//! Gauss–Legendre panels. Panels are graded towards 0 and π/2, where a
//! strongly squeezed variance has features much narrower than Δ.

use crate::scalar::{from_usize, lit, Scalar};

/// Gauss–Legendre points per panel.
pub const PANEL_POINTS: usize = 10;

/// Width of the integrated region in units of Δ.
const SPAN_IN_STDS: f64 = 14.0;
/// Geometric growth of panel widths away from a feature.
const GROWTH: f64 = 1.3;
const MAX_PANEL: f64 = 0.125;

/// Nodes and weights for ∫₋₁¹ f(t) dt ≈ Σ wₖ f(tₖ).
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Computes an `n`-point rule by Newton iteration on the Legendre
    /// recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = from_usize::<T>(n);
        let two = lit::<T>(2.0);
        for i in 0..n.div_ceil(2) {
            let guess = T::PI() * (from_usize::<T>(i) + lit(0.75)) / (nf + lit(0.5));
            let mut z = guess.cos();
            let mut pp = T::one();
            for _ in 0..100 {
                let mut p1 = T::one();
                let mut p2 = T::zero();
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = from_usize::<T>(j);
                    p1 = ((two * jf + T::one()) * z * p2 - jf * p3) / (jf + T::one());
                }
                pp = nf * (z * p1 - p2) / (z * z - T::one());
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= T::epsilon() * lit(4.0) {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = two / ((T::one() - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Breakpoints from `a` to `b`, starting at width `h0` and growing
/// geometrically up to `h_max`.
fn graded<T: Scalar>(a: T, b: T, h0: T, h_max: T) -> Vec<T> {
    let mut pts = vec![a];
    let mut w = h0;
    let mut last = a;
    while last < b {
        let mut next = (last + w).min(b);
        if b - next < w * lit(0.25) {
            next = b;
        }
        pts.push(next);
        last = next;
        w = (w * lit(GROWTH)).min(h_max);
    }
    pts
}

/// Folded density 2·Σₖ φ_Δ(θ + kπ) of the wrapped normal on [0, π/2].
fn folded_density<T: Scalar>(theta: T, delta: T, wraps: i64) -> T {
    let norm = (T::PI() * lit(2.0)).sqrt().recip() / delta;
    let mut acc = T::zero();
    for k in -wraps..=wraps {
        let t = (theta + T::PI() * T::from_i64(k).expect("small integer")) / delta;
        acc += (-(t * t) * lit(0.5)).exp();
    }
    acc * norm * lit(2.0)
}

/// Nodes θₖ ∈ [0, π/2] and probabilities pₖ with
/// E[f(θ)] ≈ Σ pₖ f(θₖ) for θ ~ Normal(0, Δ²) and any π-periodic even f.
///
/// `feature` is the narrowest length scale of f near 0 or π/2; the first
/// panel there is a quarter of it. The probabilities sum to one.
pub fn phase_rule<T: Scalar>(delta: T, feature: T) -> (Vec<T>, Vec<T>) {
    assert!(delta > T::zero(), "phase rule needs a positive width");
    let quarter = T::FRAC_PI_4();
    let h_max = (delta * lit(0.5)).min(lit(MAX_PANEL));
    let h0 = if feature > T::zero() && feature.is_finite() {
        (feature * lit(0.25)).min(h_max)
    } else {
        h_max
    };
    let span = delta * lit(SPAN_IN_STDS);
    let breaks = if span < quarter {
        graded(T::zero(), span, h0, h_max)
    } else {
        let left = graded(T::zero(), quarter, h0, h_max);
        let mut all = left.clone();
        all.extend(left.iter().rev().skip(1).map(|&b| T::FRAC_PI_2() - b));
        all
    };
    let wraps = (span / T::PI()).ceil().to_i64().unwrap_or(0) + 1;
    let gl = GaussLegendre::<T>::new(PANEL_POINTS);
    let mut thetas = Vec::with_capacity((breaks.len() - 1) * PANEL_POINTS);
    let mut probs = Vec::with_capacity(thetas.capacity());
    for pair in breaks.windows(2) {
        let half = (pair[1] - pair[0]) * lit(0.5);
        let mid = (pair[1] + pair[0]) * lit(0.5);
        for (&t, &w) in gl.nodes().iter().zip(gl.weights()) {
            let theta = mid + half * t;
            thetas.push(theta);
            probs.push(w * half * folded_density(theta, delta, wraps));
        }
    }
    let total: T = probs.iter().copied().sum();
    for p in &mut probs {
        *p /= total;
    }
    (thetas, probs)
}
