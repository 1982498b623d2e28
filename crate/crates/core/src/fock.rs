//! Photon-number representation of the lossy, phase-diffused squeezed vacuum
//! and its entanglement potential.
//!
//! The entanglement potential is log₂‖ρ^{T_A}‖₁ of the two-mode state made by
//! mixing the state with vacuum on a 50:50 beam splitter.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::quadrature::{Axis, StateParams};
use crate::scalar::{from_usize, lit, Scalar};

pub const DEFAULT_CUTOFF: usize = 10;

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 1..=k {
        acc = acc * from_usize::<T>(n - k + i) / from_usize::<T>(i);
    }
    acc
}

/// Single-mode density matrix truncated at photon number `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix<T> {
    cutoff: usize,
    /// Row-major (cutoff+1)².
    entries: Vec<Complex<T>>,
}

#[derive(Serialize, Deserialize)]
struct FockJson {
    cutoff: usize,
    entries: Vec<[f64; 2]>,
}

impl<T: Scalar> FockDensityMatrix<T> {
    pub fn zeros(cutoff: usize) -> Self {
        let dim = cutoff + 1;
        Self {
            cutoff,
            entries: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    /// |0⟩⟨0|.
    pub fn vacuum(cutoff: usize) -> Self {
        let mut m = Self::zeros(cutoff);
        m.entries[0] = Complex::new(T::one(), T::zero());
        m
    }

    /// |n⟩⟨n|.
    pub fn number_state(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::InvalidArgument(format!(
                "photon number {n} exceeds cutoff {cutoff}"
            )));
        }
        let mut m = Self::zeros(cutoff);
        let dim = m.dim();
        m.entries[n * dim + n] = Complex::new(T::one(), T::zero());
        Ok(m)
    }

    pub fn from_entries(cutoff: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        let dim = cutoff + 1;
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "cutoff {cutoff} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { cutoff, entries })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex<T> {
        self.entries[n * self.dim() + m]
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|n| self.entry(n, n).re).sum()
    }

    /// Probability weight lost to truncation, 1 − tr σ.
    pub fn truncation_error(&self) -> T {
        T::one() - self.trace()
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self {
            cutoff: self.cutoff,
            entries: self.entries.iter().map(|z| z / t).collect(),
        }
    }

    pub fn max_hermiticity_defect(&self) -> T {
        let dim = self.dim();
        let mut worst = T::zero();
        for n in 0..dim {
            for m in 0..dim {
                worst = worst.max((self.entry(n, m) - self.entry(m, n).conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        hermitian_eigenvalues(&self.entries, self.dim())
    }

    /// Variance of x̂ = â + â† (Axis::X) or p̂ = −i(â − â†) (Axis::P) in the
    /// trace-normalized state.
    pub fn quadrature_variance(&self, axis: Axis) -> T {
        let dim = self.dim();
        let tr = self.trace();
        let mut a1 = Complex::new(T::zero(), T::zero());
        let mut a2 = Complex::new(T::zero(), T::zero());
        let mut nbar = T::zero();
        for n in 1..dim {
            let nf = from_usize::<T>(n);
            a1 += self.entry(n, n - 1) * nf.sqrt();
            nbar += nf * self.entry(n, n).re;
            if n >= 2 {
                a2 += self.entry(n, n - 2) * (nf * (nf - T::one())).sqrt();
            }
        }
        let two = lit::<T>(2.0);
        let (second, mean) = match axis {
            Axis::X => (two * a2.re + two * nbar + tr, two * a1.re),
            Axis::P => (-two * a2.re + two * nbar + tr, two * a1.im),
        };
        second / tr - (mean / tr) * (mean / tr)
    }

    /// `{cutoff, entries}` with row-major `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let js = FockJson {
            cutoff: self.cutoff,
            entries: self
                .entries
                .iter()
                .map(|z| {
                    [
                        z.re.to_f64().unwrap_or(f64::NAN),
                        z.im.to_f64().unwrap_or(f64::NAN),
                    ]
                })
                .collect(),
        };
        serde_json::to_value(js).expect("plain data serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let js: FockJson =
            serde_json::from_value(value).map_err(|e| Error::Metadata(e.to_string()))?;
        let entries = js
            .entries
            .iter()
            .map(|&[re, im]| {
                Complex::new(
                    T::from_f64(re).unwrap_or_else(T::nan),
                    T::from_f64(im).unwrap_or_else(T::nan),
                )
            })
            .collect();
        Self::from_entries(js.cutoff, entries)
    }
}

/// Pure x-squeezed vacuum with amplitudes
/// c₂ₖ = (−tanh r)ᵏ √((2k)!) / (2ᵏ k!) / √(cosh r), truncated at `cutoff`
/// (not renormalized; see [`FockDensityMatrix::truncation_error`]).
pub fn squeezed_vacuum_fock<T: Scalar>(r: T, cutoff: usize) -> Result<FockDensityMatrix<T>> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("r = {r} must be ≥ 0")));
    }
    let dim = cutoff + 1;
    let mut amp = vec![T::zero(); dim];
    amp[0] = r.cosh().sqrt().recip();
    let t = -r.tanh();
    let mut k = 0;
    while 2 * k + 2 < dim {
        let (a, b) = (from_usize::<T>(2 * k + 1), from_usize::<T>(2 * k + 2));
        amp[2 * k + 2] = amp[2 * k] * t * (a * b).sqrt() / (lit::<T>(2.0) * from_usize::<T>(k + 1));
        k += 1;
    }
    let entries = (0..dim * dim)
        .map(|i| Complex::new(amp[i / dim] * amp[i % dim], T::zero()))
        .collect();
    FockDensityMatrix::from_entries(cutoff, entries)
}

/// Loss channel (beam splitter of reflectance `loss` with vacuum, reflected
/// port traced out), with Kraus operators
/// ⟨n|Aₖ|m⟩ = δ_{n,m−k} √C(m,k) (1−l)^{(m−k)/2} l^{k/2}.
pub fn apply_loss<T: Scalar>(
    state: &FockDensityMatrix<T>,
    loss: T,
) -> Result<FockDensityMatrix<T>> {
    if !(loss >= T::zero() && loss <= T::one()) {
        return Err(Error::InvalidParams(format!(
            "loss = {loss} outside [0, 1]"
        )));
    }
    let dim = state.dim();
    let keep = (T::one() - loss).sqrt();
    let mut out = FockDensityMatrix::zeros(state.cutoff);
    for n in 0..dim {
        for m in 0..dim {
            let mut acc = Complex::new(T::zero(), T::zero());
            let mut k = 0;
            while n + k < dim && m + k < dim {
                let w = (binomial::<T>(n + k, k) * binomial::<T>(m + k, k)).sqrt()
                    * keep.powi((n + m) as i32)
                    * loss.powi(k as i32);
                acc += state.entry(n + k, m + k) * w;
                k += 1;
            }
            out.entries[n * dim + m] = acc;
        }
    }
    Ok(out)
}

/// Gaussian dephasing: entry (n, m) scaled by exp(−Δ²(n−m)²/2).
pub fn apply_phase_diffusion<T: Scalar>(
    state: &FockDensityMatrix<T>,
    delta: T,
) -> Result<FockDensityMatrix<T>> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParams(format!("delta = {delta} must be ≥ 0")));
    }
    let dim = state.dim();
    let mut out = state.clone();
    for n in 0..dim {
        for m in 0..dim {
            if n != m {
                let k = from_usize::<T>(n.abs_diff(m));
                let f = (-(delta * delta) * k * k * lit(0.5)).exp();
                out.entries[n * dim + m] = state.entries[n * dim + m] * f;
            }
        }
    }
    Ok(out)
}

/// Squeeze → loss → dephase, at the given cutoff (not renormalized).
pub fn diffused_squeezed_state<T: Scalar>(
    params: &StateParams<T>,
    cutoff: usize,
) -> Result<FockDensityMatrix<T>> {
    params.validate()?;
    let s = squeezed_vacuum_fock(params.r, cutoff)?;
    let s = apply_loss(&s, params.loss)?;
    apply_phase_diffusion(&s, params.delta)
}

/// Two-mode density matrix on (cutoff+1)² composite states; composite index
/// a·(cutoff+1) + b for mode A in |a⟩ and mode B in |b⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeDensityMatrix<T> {
    cutoff: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> TwoModeDensityMatrix<T> {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Composite dimension (cutoff+1)².
    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 1)
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    /// ⟨a, b| ρ |a′, b′⟩.
    pub fn entry(&self, a: usize, b: usize, a2: usize, b2: usize) -> Complex<T> {
        let d1 = self.cutoff + 1;
        self.entries[(a * d1 + b) * self.dim() + (a2 * d1 + b2)]
    }

    pub fn trace(&self) -> T {
        let dim = self.dim();
        (0..dim).map(|i| self.entries[i * dim + i].re).sum()
    }

    /// Transpose on mode A: ⟨a,b|ρ^{T_A}|a′,b′⟩ = ⟨a′,b|ρ|a,b′⟩.
    pub fn partial_transpose_a(&self) -> Self {
        let d1 = self.cutoff + 1;
        let dim = self.dim();
        let mut entries = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for a in 0..d1 {
            for b in 0..d1 {
                for a2 in 0..d1 {
                    for b2 in 0..d1 {
                        entries[(a * d1 + b) * dim + (a2 * d1 + b2)] =
                            self.entries[(a2 * d1 + b) * dim + (a * d1 + b2)];
                    }
                }
            }
        }
        Self {
            cutoff: self.cutoff,
            entries,
        }
    }

    /// Sum of |eigenvalues| (trace norm of a Hermitian matrix).
    pub fn trace_norm(&self) -> Result<T> {
        let vals = hermitian_eigenvalues(&self.entries, self.dim())?;
        Ok(vals.iter().map(|v| v.abs()).sum())
    }

    /// Reduced photon-number distribution of mode A (`first = true`) or B.
    pub fn marginal_populations(&self, first: bool) -> Vec<T> {
        let d1 = self.cutoff + 1;
        (0..d1)
            .map(|i| {
                (0..d1)
                    .map(|j| {
                        if first {
                            self.entry(i, j, i, j).re
                        } else {
                            self.entry(j, i, j, i).re
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

/// σ ⊗ |0⟩⟨0| through a 50:50 beam splitter:
/// Σ σₙₘ √(C(n,j)C(m,k)/2^{n+m}) |j⟩⟨k| ⊗ |n−j⟩⟨m−k|.
pub fn beam_split_with_vacuum<T: Scalar>(state: &FockDensityMatrix<T>) -> TwoModeDensityMatrix<T> {
    let d1 = state.dim();
    let dim = d1 * d1;
    let mut entries = vec![Complex::new(T::zero(), T::zero()); dim * dim];
    // amp[n][j] = √(C(n,j)/2ⁿ)
    let amp: Vec<Vec<T>> = (0..d1)
        .map(|n| {
            let scale = lit::<T>(2.0).powi(n as i32);
            (0..=n)
                .map(|j| (binomial::<T>(n, j) / scale).sqrt())
                .collect()
        })
        .collect();
    for n in 0..d1 {
        for m in 0..d1 {
            let s = state.entry(n, m);
            if s.re == T::zero() && s.im == T::zero() {
                continue;
            }
            for j in 0..=n {
                let row = j * d1 + (n - j);
                for k in 0..=m {
                    let col = k * d1 + (m - k);
                    entries[row * dim + col] += s * (amp[n][j] * amp[m][k]);
                }
            }
        }
    }
    TwoModeDensityMatrix {
        cutoff: state.cutoff,
        entries,
    }
}

/// Entanglement potential in ebits, evaluated on the trace-normalized state.
pub fn entanglement_potential<T: Scalar>(state: &FockDensityMatrix<T>) -> Result<T> {
    let tr = state.trace();
    if !(tr > T::zero()) {
        return Err(Error::InvalidArgument("state has zero trace".into()));
    }
    let pt = beam_split_with_vacuum(state).partial_transpose_a();
    Ok((pt.trace_norm()? / tr).log2())
}
