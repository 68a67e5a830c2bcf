//! Synthetic heartbeats and records for tests, demos and the self-test.
//!
//! A beat is a sum of Gaussian waves placed relative to the R-peak plus
//! seeded Gaussian noise band-limited to 50 Hz. The class presets were tuned
//! so that each lands in its region of the dispersion plane under the default
//! feature parameters; they are not physiological models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{Annotation, ButterworthLowpass, GroundTruthLabel, Heartbeat, RawRecord, HEARTBEAT_LEN};

pub const SAMPLING_RATE: f64 = 360.0;
pub const R_INDEX: usize = 100;
/// Standard deviation of the added noise in mV.
pub const NOISE_LEVEL: f64 = 0.03;
/// Seed of the bundled standard beat.
pub const STANDARD_SEED: u64 = 21;
/// Noise seed at which every class fixture lands on its own sub-label.
pub const FIXTURE_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    /// mV.
    pub amplitude: f64,
    /// Seconds relative to the R-peak.
    pub center: f64,
    /// Standard deviation in seconds.
    pub width: f64,
}

impl Wave {
    pub const fn new(amplitude: f64, center: f64, width: f64) -> Self {
        Wave {
            amplitude,
            center,
            width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTemplate {
    pub waves: Vec<Wave>,
}

impl BeatTemplate {
    pub fn new(waves: &[Wave]) -> Self {
        BeatTemplate { waves: waves.to_vec() }
    }

    /// Evaluate at time `t` seconds from the R-peak.
    pub fn value(&self, t: f64) -> f64 {
        self.waves
            .iter()
            .map(|w| w.amplitude * (-0.5 * ((t - w.center) / w.width).powi(2)).exp())
            .sum()
    }

    /// Noise-free beat of [`HEARTBEAT_LEN`] samples with the peak at [`R_INDEX`].
    pub fn render(&self) -> Vec<f64> {
        (0..HEARTBEAT_LEN)
            .map(|i| self.value((i as f64 - R_INDEX as f64) / SAMPLING_RATE))
            .collect()
    }

    /// Rendered beat plus band-limited noise.
    pub fn sample(&self, noise: f64, seed: u64) -> Vec<f64> {
        let clean = self.render();
        let e = band_limited_noise(clean.len(), seed);
        clean.iter().zip(e).map(|(x, e)| x + noise * e).collect()
    }
}

/// Unit-variance Gaussian noise low-passed at 50 Hz.
pub fn band_limited_noise(n: usize, seed: u64) -> Vec<f64> {
    const GUARD: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..n + 2 * GUARD).map(|_| StandardNormal.sample(&mut rng)).collect();
    let filter = ButterworthLowpass::new(4, 50.0, SAMPLING_RATE).expect("valid filter");
    let filtered = filter.filtfilt(&white);
    let mut e = filtered[GUARD..GUARD + n].to_vec();
    let mean = e.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    if sd > 0.0 {
        e.iter_mut().for_each(|v| *v /= sd);
    }
    e
}

const fn w(a: f64, c: f64, s: f64) -> Wave {
    Wave::new(a, c, s)
}

const NORMAL: &[Wave] = &[
    w(0.15, -0.2, 0.025),
    w(-0.1, -0.03, 0.008),
    w(1.2, 0.0, 0.01),
    w(-0.25, 0.03, 0.008),
    w(0.3, 0.3, 0.05),
];
const LBBB: &[Wave] = &[
    w(0.063, -0.2, 0.018),
    w(0.708, 0.037, 0.01),
    w(2.709, -0.007, 0.021),
    w(0.202, 0.037, 0.011),
    w(-0.121, 0.219, 0.062),
];
const RBBB: &[Wave] = &[w(0.226, -0.191, 0.022), w(0.126, -0.002, 0.022), w(0.065, 0.224, 0.055)];
const ATRIAL_PREMATURE: &[Wave] = &[
    w(0.263, -0.231, 0.014),
    w(-0.137, 0.001, 0.026),
    w(-0.256, -0.043, 0.017),
    w(-1.199, -0.049, 0.018),
    w(-1.901, 0.025, 0.022),
    w(0.274, 0.242, 0.039),
];
const PVC: &[Wave] = &[
    w(0.094, -0.122, 0.018),
    w(0.237, 0.012, 0.006),
    w(-0.09, 0.017, 0.028),
    w(0.31, 0.314, 0.078),
];
const FUSION: &[Wave] = &[w(0.274, -0.108, 0.03), w(0.363, 0.015, 0.007), w(-0.25, 0.226, 0.068)];
const FLUTTER: &[Wave] = &[
    w(-0.398, -0.034, 0.02),
    w(0.688, -0.03, 0.02),
    w(1.998, -0.033, 0.025),
    w(0.692, 0.042, 0.014),
    w(0.377, 0.291, 0.034),
];

/// Template tuned for `label`. `Unlabeled` falls back to the normal beat.
pub fn preset(label: GroundTruthLabel) -> BeatTemplate {
    BeatTemplate::new(match label {
        GroundTruthLabel::Normal | GroundTruthLabel::Unlabeled => NORMAL,
        GroundTruthLabel::LeftBundleBranchBlock => LBBB,
        GroundTruthLabel::RightBundleBranchBlock => RBBB,
        GroundTruthLabel::AtrialPremature => ATRIAL_PREMATURE,
        GroundTruthLabel::PrematureVentricular => PVC,
        GroundTruthLabel::FusionVentricularNormal => FUSION,
        GroundTruthLabel::VentricularFlutter => FLUTTER,
    })
}

/// A labelled synthetic beat.
pub fn synthetic_beat(label: GroundTruthLabel, seed: u64) -> Heartbeat {
    let samples = preset(label).sample(NOISE_LEVEL, seed);
    Heartbeat::new(samples, R_INDEX, label, format!("synthetic-{}-{seed}", label.code()))
        .expect("template renders a full beat")
}

/// The bundled standard (normal) beat.
pub fn standard_beat() -> Heartbeat {
    let mut beat = synthetic_beat(GroundTruthLabel::Normal, STANDARD_SEED);
    beat.source_id = "standard".into();
    beat
}

/// One beat per class, all with the same seed.
pub fn class_fixtures(seed: u64) -> Vec<Heartbeat> {
    GroundTruthLabel::CLASSES
        .iter()
        .map(|&l| synthetic_beat(l, seed))
        .collect()
}

/// A continuous record made of the given beats, one every `rr_s` seconds,
/// with matching annotations. Beats are cross-faded into a shared baseline
/// so the R-peaks stand out to the detector.
pub fn synthetic_record(labels: &[GroundTruthLabel], rr_s: f64, seed: u64) -> Result<(RawRecord, Vec<Annotation>)> {
    let rr = (rr_s * SAMPLING_RATE).round() as usize;
    let lead_in = R_INDEX + rr;
    let n = lead_in + rr * labels.len() + HEARTBEAT_LEN;
    let mut x = vec![0.0; n];
    let mut annotations = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let peak = lead_in + i * rr;
        let beat = preset(label);
        for (j, slot) in x.iter_mut().enumerate() {
            let t = (j as f64 - peak as f64) / SAMPLING_RATE;
            if t.abs() < 1.0 {
                *slot += beat.value(t);
            }
        }
        annotations.push(Annotation { sample: peak, label });
    }
    let e = band_limited_noise(n, seed);
    x.iter_mut().zip(e).for_each(|(v, e)| *v += NOISE_LEVEL * e);
    let record = RawRecord::new(x, SAMPLING_RATE, format!("synthetic-{seed}"), "MLII")?;
    Ok((record, annotations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_seeded_and_unit_variance() {
        let a = band_limited_noise(300, 7);
        assert_eq!(a, band_limited_noise(300, 7));
        assert_ne!(a, band_limited_noise(300, 8));
        let var = a.iter().map(|v| v * v).sum::<f64>() / 300.0;
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn template_peaks_at_r() {
        let x = preset(GroundTruthLabel::Normal).render();
        let argmax = (0..x.len()).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        assert_eq!(argmax, R_INDEX);
    }

    #[test]
    fn record_has_one_annotation_per_beat() {
        let labels = [GroundTruthLabel::Normal; 4];
        let (rec, ann) = synthetic_record(&labels, 0.8, 1).unwrap();
        assert_eq!(ann.len(), 4);
        assert!(ann.iter().all(|a| a.sample + HEARTBEAT_LEN <= rec.len()));
    }
}
