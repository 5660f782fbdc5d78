//! Rainflow counting, damage-equivalent moments and Miner damage.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{pow, CompensatedSum};
use crate::{Error, Result};

/// Default number of range bins.
pub const DEFAULT_BINS: usize = 128;

/// Equally sampled bending-moment history in MNm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoadSeries {
    samples: Vec<f64>,
    dt: f64,
}

impl LoadSeries {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("sample interval must be positive"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("load series sample".into()));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `len · dt` seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

/// One rainflow cycle: `count` is 1 for a closed cycle and 0.5 for a residual half cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle {
    pub range: f64,
    pub mean: f64,
    pub count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumBin {
    /// Reference range of the bin in MNm (count-weighted mean of the ranges it holds).
    pub range: f64,
    pub count: f64,
}

/// Binned rainflow result; only nonempty bins are stored, in ascending range order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleSpectrum {
    pub bins: Vec<SpectrumBin>,
    pub n_bins: usize,
}

impl CycleSpectrum {
    pub fn empty(n_bins: usize) -> Self {
        Self {
            bins: Vec::new(),
            n_bins,
        }
    }

    pub fn from_bins(bins: Vec<SpectrumBin>) -> Result<Self> {
        if bins.iter().any(|b| !(b.range > 0.0 && b.range.is_finite()) || !(b.count >= 0.0 && b.count.is_finite())) {
            return Err(Error::invalid("bins need positive ranges and nonnegative counts"));
        }
        if bins.windows(2).any(|w| w[0].range > w[1].range) {
            return Err(Error::invalid("bins must be sorted by range"));
        }
        let n_bins = bins.len();
        Ok(Self { bins, n_bins })
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Total count in full-cycle equivalents.
    pub fn total_cycles(&self) -> f64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// `Σ n_i · r_i^m`
    pub fn moment_sum(&self, m: f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for b in &self.bins {
            acc.add(b.count * pow(b.range, m));
        }
        acc.value()
    }
}

/// Linear S-N curve `N = k · S^-m` and the equivalent cycle count for DEM.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnParams {
    pub k: f64,
    pub m: f64,
    pub n_eq: f64,
}

impl Default for SnParams {
    /// `m = 3`, `N_eq = 1e7`; `k` only scales Miner damage and is arbitrary here.
    fn default() -> Self {
        Self {
            k: 1e12,
            m: 3.0,
            n_eq: 1e7,
        }
    }
}

impl SnParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("m", self.m), ("N_eq", self.n_eq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(alloc::format!("S-N parameter {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Local extrema of `x`, keeping both end points and dropping plateaus.
pub fn turning_points(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in x {
        match out.len() {
            0 => out.push(v),
            1 => {
                if v != out[0] {
                    out.push(v);
                }
            }
            n => {
                let (a, b) = (out[n - 2], out[n - 1]);
                if v == b {
                    continue;
                }
                if (b - a) * (v - b) > 0.0 {
                    out[n - 1] = v;
                } else {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Four-point rainflow over the turning points of `x`; the residual is
/// returned as half cycles.
pub fn rainflow_cycles(x: &[f64]) -> Vec<Cycle> {
    let mut cycles = Vec::new();
    let mut stack: Vec<f64> = Vec::new();
    for p in turning_points(x) {
        stack.push(p);
        while stack.len() >= 4 {
            let n = stack.len();
            let (s1, s2, s3, s4) = (stack[n - 4], stack[n - 3], stack[n - 2], stack[n - 1]);
            let inner = (s3 - s2).abs();
            if inner <= (s2 - s1).abs() && inner <= (s4 - s3).abs() {
                cycles.push(Cycle {
                    range: inner,
                    mean: 0.5 * (s2 + s3),
                    count: 1.0,
                });
                stack.truncate(n - 3);
                stack.push(s4);
            } else {
                break;
            }
        }
    }
    for w in stack.windows(2) {
        cycles.push(Cycle {
            range: (w[1] - w[0]).abs(),
            mean: 0.5 * (w[0] + w[1]),
            count: 0.5,
        });
    }
    cycles
}

/// Rainflow-counts `series` into `n_bins` equal-width bins over `[0, max range]`.
pub fn rainflow_count(series: &LoadSeries, n_bins: usize) -> Result<CycleSpectrum> {
    if n_bins == 0 {
        return Err(Error::invalid("at least one bin required"));
    }
    let cycles = rainflow_cycles(series.samples());
    Ok(bin_cycles(&cycles, n_bins))
}

/// Bins cycles; each bin's reference range is the count-weighted mean of its members.
pub fn bin_cycles(cycles: &[Cycle], n_bins: usize) -> CycleSpectrum {
    let max = cycles.iter().fold(0.0f64, |m, c| m.max(c.range));
    if !(max > 0.0) || n_bins == 0 {
        return CycleSpectrum::empty(n_bins);
    }
    let width = max / n_bins as f64;
    let mut counts = vec![CompensatedSum::default(); n_bins];
    let mut weighted = vec![CompensatedSum::default(); n_bins];
    for c in cycles.iter().filter(|c| c.range > 0.0) {
        let i = ((c.range / width) as usize).min(n_bins - 1);
        counts[i].add(c.count);
        weighted[i].add(c.count * c.range);
    }
    let bins = counts
        .iter()
        .zip(&weighted)
        .filter(|(n, _)| n.value() > 0.0)
        .map(|(n, w)| SpectrumBin {
            range: w.value() / n.value(),
            count: n.value(),
        })
        .collect();
    CycleSpectrum { bins, n_bins }
}

/// Damage-equivalent moment `(Σ n_i r_i^m / N_eq)^(1/m)`; 0 for an empty spectrum.
pub fn dem(spec: &CycleSpectrum, sn: &SnParams) -> f64 {
    if spec.is_empty() {
        return 0.0;
    }
    pow(spec.moment_sum(sn.m) / sn.n_eq, 1.0 / sn.m)
}

/// Miner-Palmgren damage `Σ n_i r_i^m / k`.
pub fn miner_damage(spec: &CycleSpectrum, sn: &SnParams) -> f64 {
    spec.moment_sum(sn.m) / sn.k
}

/// DEM of a series with the default bin count.
pub fn series_dem(series: &LoadSeries, sn: &SnParams) -> f64 {
    let spec = rainflow_count(series, DEFAULT_BINS).expect("DEFAULT_BINS > 0");
    dem(&spec, sn)
}
