//! Coarse graining of quadrature outcomes into width-σ bins.
//!
//! Bin m covers [(m−½)σ, (m+½)σ): left-closed, right-open, so an outcome on
//! a boundary goes to the bin on its right.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "bin size must be positive and finite, got {sigma}"
        )))
    }
}

/// Index of the bin containing `x`.
pub fn bin_index<T: Scalar>(x: T, sigma: T) -> Result<i64> {
    check_sigma(sigma)?;
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite outcome {x}")));
    }
    (x / sigma + lit(0.5))
        .floor()
        .to_i64()
        .ok_or_else(|| Error::InvalidArgument(format!("bin index of {x} overflows")))
}

/// Sparse count histogram over integer bin indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedHistogram<T> {
    sigma: T,
    total: u64,
    counts: BTreeMap<i64, u64>,
}

impl<T: Scalar> BinnedHistogram<T> {
    pub fn empty(sigma: T) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            sigma,
            total: 0,
            counts: BTreeMap::new(),
        })
    }

    /// Bins every outcome in `xs`.
    pub fn from_values(xs: &[T], sigma: T) -> Result<Self> {
        let mut h = Self::empty(sigma)?;
        for &x in xs {
            h.add(x)?;
        }
        Ok(h)
    }

    /// Builds from explicit counts; `total` is their sum.
    pub fn from_counts(sigma: T, counts: impl IntoIterator<Item = (i64, u64)>) -> Result<Self> {
        let mut h = Self::empty(sigma)?;
        for (m, c) in counts {
            if c > 0 {
                *h.counts.entry(m).or_insert(0) += c;
                h.total += c;
            }
        }
        Ok(h)
    }

    pub fn add(&mut self, x: T) -> Result<()> {
        let m = bin_index(x, self.sigma)?;
        *self.counts.entry(m).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, m: i64) -> u64 {
        self.counts.get(&m).copied().unwrap_or(0)
    }

    /// Non-empty bins in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().map(|(&m, &c)| (m, c))
    }

    /// Adds the counts of another histogram with the same bin size.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.sigma != other.sigma {
            return Err(Error::InvalidArgument(format!(
                "cannot merge histograms with bin sizes {} and {}",
                self.sigma, other.sigma
            )));
        }
        for (&m, &c) in &other.counts {
            *self.counts.entry(m).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }

    /// Merges groups of `factor` adjacent bins into bins of size factor·σ.
    ///
    /// Zero-centered bins nest only for odd factors: fine bin m maps to
    /// coarse bin ⌊(m + (factor−1)/2) / factor⌋.
    pub fn coarsen(&self, factor: u32) -> Result<Self> {
        if factor == 0 || factor.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "coarsening factor must be odd, got {factor}"
            )));
        }
        let f = i64::from(factor);
        let half = (f - 1) / 2;
        let sigma = self.sigma * T::from_u32(factor).expect("factor representable");
        Self::from_counts(
            sigma,
            self.iter().map(|(m, c)| ((m + half).div_euclid(f), c)),
        )
    }

    /// `m,count` rows for every non-empty bin, with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,count\n");
        for (m, c) in self.iter() {
            let _ = writeln!(out, "{m},{c}");
        }
        out
    }
}
