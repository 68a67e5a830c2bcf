//! Curvature sequence, curvature histogram and the dispersion feature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{embed, EmbeddingParams, EuclideanCloud};
use crate::error::{Error, Result};
use crate::ingest::Heartbeat;
use crate::local_stats::{lift, CovarianceNormalization, SpdCloud};
use crate::spd::scalar_curvature;

/// Scalar curvature of every point of an SPD cloud, in cloud order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSequence(Vec<f64>);

impl CurvatureSequence {
    /// Values must be finite and positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("curvature {v} at index {i} is not positive")));
        }
        Ok(CurvatureSequence(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.0.iter().copied().reduce(f64::max)
    }

    /// Fraction of values inside `[lo, hi]`.
    pub fn fraction_within(&self, lo: f64, hi: f64) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        let inside = self.0.iter().filter(|&&v| v >= lo && v <= hi).count();
        inside as f64 / self.0.len() as f64
    }
}

pub fn curvature_sequence(cloud: &SpdCloud) -> Result<CurvatureSequence> {
    if cloud.is_empty() {
        return Err(Error::Parameter("empty SPD cloud".into()));
    }
    let values = cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, g)| scalar_curvature(&g.covariance).map_err(|e| e.at_point(i)))
        .collect::<Result<Vec<f64>>>()?;
    CurvatureSequence::new(values)
}

/// Fixed-width histogram over `[0, m(⌊b/m⌋ + 1))`, bins closed on the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureHistogram {
    pub bin_width: f64,
    pub upper_bound: f64,
    /// `counts[j]` counts values in `[mj, m(j+1))`, `j = 0..=⌊b/m⌋`.
    pub counts: Vec<usize>,
    /// Values at or beyond the right edge of the last bin.
    pub overflow_count: usize,
}

impl CurvatureHistogram {
    /// `⌊b/m⌋`, the index of the last bin.
    pub fn last_bin(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn bin_range(&self, j: usize) -> (f64, f64) {
        (self.bin_width * j as f64, self.bin_width * (j + 1) as f64)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.overflow_count
    }
}

fn last_bin_index(m: f64, b: f64) -> Result<usize> {
    if !(m > 0.0 && m.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::Parameter(format!(
            "bin width {m} and upper bound {b} must be positive"
        )));
    }
    if m > b {
        return Err(Error::Parameter(format!("bin width {m} exceeds upper bound {b}")));
    }
    Ok((b / m).floor() as usize)
}

pub fn histogram(w: &CurvatureSequence, m: f64, b: f64) -> Result<CurvatureHistogram> {
    let last = last_bin_index(m, b)?;
    let mut counts = vec![0usize; last + 1];
    let mut overflow_count = 0;
    for &v in w.values() {
        let j = (v / m).floor();
        if j >= (last + 1) as f64 {
            overflow_count += 1;
        } else {
            counts[j as usize] += 1;
        }
    }
    Ok(CurvatureHistogram {
        bin_width: m,
        upper_bound: b,
        counts,
        overflow_count,
    })
}

/// Variant of the longitudinal dispersion formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cur2Form {
    /// Inner mean divided by `⌊b/m⌋`, outer denominator `|U₂| − s − 1`.
    #[default]
    Nominal,
    /// Both divisors replaced by `|U₂|`.
    Corrected,
}

impl std::str::FromStr for Cur2Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Cur2Form::Nominal),
            "corrected" => Ok(Cur2Form::Corrected),
            other => Err(Error::Parameter(format!("unknown cur2 form `{other}`"))),
        }
    }
}

/// The dispersion feature `(cur₁, cur₂)` of one heartbeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    /// Transverse dispersion: median curvature inside `[ms, b]`.
    pub cur1: f64,
    /// Longitudinal dispersion of the bin heights beyond bin `s`.
    pub cur2: f64,
}

impl DispersionPoint {
    pub fn new(cur1: f64, cur2: f64) -> Self {
        DispersionPoint { cur1, cur2 }
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Transverse and longitudinal dispersion for shift `s`.
pub fn dispersion(w: &CurvatureSequence, h: &CurvatureHistogram, s: usize, form: Cur2Form) -> Result<DispersionPoint> {
    let m = h.bin_width;
    let b = h.upper_bound;
    let last = h.last_bin();
    if s > last {
        return Err(Error::Parameter(format!("shift s = {s} exceeds ⌊b/m⌋ = {last}")));
    }

    let lo = m * s as f64;
    let mut window: Vec<f64> = w.values().iter().copied().filter(|&v| v >= lo && v <= b).collect();
    if window.is_empty() {
        return Err(Error::UndefinedFeature(format!(
            "no curvature value inside [{lo}, {b}]"
        )));
    }
    window.sort_by(f64::total_cmp);
    let cur1 = median(&window);

    let tail = &h.counts[s + 1..];
    let occupied = tail.iter().filter(|&&y| y != 0).count();
    let mass: usize = tail.iter().sum();
    let (inner_divisor, denominator) = match form {
        Cur2Form::Nominal => (last as f64, occupied as f64 - s as f64 - 1.0),
        Cur2Form::Corrected => (occupied as f64, occupied as f64),
    };
    if !(denominator > 0.0) {
        return Err(Error::UndefinedFeature(format!(
            "{occupied} occupied bins beyond bin {s} leave no positive denominator"
        )));
    }
    let centre = mass as f64 / inner_divisor;
    let spread: f64 = tail.iter().map(|&y| (y as f64 - centre).powi(2)).sum();
    Ok(DispersionPoint {
        cur1,
        cur2: spread / denominator,
    })
}

/// Per-beat amplitude normalization applied before embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeNormalization {
    /// Subtract the mean and divide by the standard deviation.
    #[default]
    Zscore,
    /// Use samples as given (millivolts).
    None,
}

impl std::str::FromStr for AmplitudeNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zscore" => Ok(AmplitudeNormalization::Zscore),
            "none" => Ok(AmplitudeNormalization::None),
            other => Err(Error::Parameter(format!("unknown amplitude normalization `{other}`"))),
        }
    }
}

impl AmplitudeNormalization {
    /// A flat signal has zero spread and is only centered.
    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        match self {
            AmplitudeNormalization::None => samples.to_vec(),
            AmplitudeNormalization::Zscore => {
                let n = samples.len() as f64;
                let mean = samples.iter().sum::<f64>() / n;
                let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 {
                    samples.iter().map(|v| (v - mean) / sd).collect()
                } else {
                    samples.iter().map(|v| v - mean).collect()
                }
            }
        }
    }
}

/// Everything needed to turn one heartbeat into a dispersion point, except
/// the upper bound `b`, which comes from the standard beat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub embedding: EmbeddingParams,
    /// Neighborhood size.
    pub k: usize,
    pub covariance: CovarianceNormalization,
    pub amplitude: AmplitudeNormalization,
    /// Histogram bin width `m`.
    pub bin_width: f64,
    /// Shift `s`.
    pub shift: usize,
    pub cur2_form: Cur2Form,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            embedding: EmbeddingParams::default(),
            k: 20,
            covariance: CovarianceNormalization::Sum,
            amplitude: AmplitudeNormalization::Zscore,
            bin_width: 1.0,
            shift: 0,
            cur2_form: Cur2Form::Nominal,
        }
    }
}

/// Intermediates of the curvature pipeline for one beat.
#[derive(Debug, Clone)]
pub struct CurvatureTrace {
    pub cloud: EuclideanCloud,
    pub spd: SpdCloud,
    pub curvature: CurvatureSequence,
}

impl CurvatureTrace {
    pub fn histogram(&self, m: f64, b: f64) -> Result<CurvatureHistogram> {
        histogram(&self.curvature, m, b)
    }
}

/// Normalize, embed, lift and compute the curvature sequence.
pub fn curvature_trace(samples: &[f64], params: &FeatureParams) -> Result<CurvatureTrace> {
    let normalized = params.amplitude.apply(samples);
    let cloud = embed(&normalized, &params.embedding)?;
    let spd = lift(&cloud, params.k, params.covariance)?;
    let curvature = curvature_sequence(&spd)?;
    Ok(CurvatureTrace { cloud, spd, curvature })
}

/// A beat's curvature trace together with its histogram and, when defined,
/// its dispersion point.
#[derive(Debug, Clone)]
pub struct BeatFeatures {
    pub trace: CurvatureTrace,
    pub histogram: CurvatureHistogram,
    pub dispersion: Result<DispersionPoint>,
}

pub fn beat_features(beat: &Heartbeat, params: &FeatureParams, b: f64) -> Result<BeatFeatures> {
    let trace = curvature_trace(&beat.samples, params).map_err(|e| e.for_source(&beat.source_id))?;
    let histogram = trace.histogram(params.bin_width, b)?;
    let dispersion = dispersion(&trace.curvature, &histogram, params.shift, params.cur2_form)
        .map_err(|e| e.for_source(&beat.source_id));
    Ok(BeatFeatures {
        trace,
        histogram,
        dispersion,
    })
}

/// Embedding through dispersion for one beat.
pub fn feature_extract(beat: &Heartbeat, params: &FeatureParams, b: f64) -> Result<DispersionPoint> {
    beat_features(beat, params, b)?.dispersion
}
