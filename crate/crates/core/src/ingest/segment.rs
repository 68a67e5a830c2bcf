use super::{Annotation, GroundTruthLabel, Heartbeat, RawRecord};
use crate::error::{Error, Result};

/// Samples per heartbeat.
pub const HEARTBEAT_LEN: usize = 300;

/// Cuts a fixed time span around each R-peak.
///
/// The span is `pre` samples before and `post` samples after the peak at
/// `reference_rate`. Records at another rate are linearly resampled over the
/// same span so every beat has `pre + post` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segmenter {
    pub pre: usize,
    pub post: usize,
    pub reference_rate: f64,
    /// Annotations further than this from every peak are ignored.
    pub annotation_tolerance_s: f64,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter {
            pre: 100,
            post: 200,
            reference_rate: 360.0,
            annotation_tolerance_s: 0.15,
        }
    }
}

impl Segmenter {
    pub fn beat_len(&self) -> usize {
        self.pre + self.post
    }

    pub fn segment(
        &self,
        record: &RawRecord,
        peaks: &[usize],
        annotations: Option<&[Annotation]>,
    ) -> Result<Vec<Heartbeat>> {
        if self.beat_len() != HEARTBEAT_LEN {
            return Err(Error::Parameter(format!(
                "segment length {} differs from {HEARTBEAT_LEN}",
                self.beat_len()
            )));
        }
        let labels = annotations.map(|a| assign_labels(peaks, a, self.annotation_tolerance_s * record.sampling_rate));
        let mut beats = Vec::with_capacity(peaks.len());
        for (i, &p) in peaks.iter().enumerate() {
            let Some(samples) = self.cut(&record.samples, p, record.sampling_rate) else {
                log::info!(
                    "{}: skipping beat at sample {p}, too close to the record edge",
                    record.source_id
                );
                continue;
            };
            let label = labels.as_ref().map_or(GroundTruthLabel::Unlabeled, |l| l[i]);
            beats.push(Heartbeat::new(
                samples,
                self.pre,
                label,
                format!("{}:{p}", record.source_id),
            )?);
        }
        Ok(beats)
    }

    fn cut(&self, x: &[f64], peak: usize, fs: f64) -> Option<Vec<f64>> {
        let n = x.len();
        if peak >= n {
            return None;
        }
        if fs == self.reference_rate {
            let start = peak.checked_sub(self.pre)?;
            let end = peak + self.post;
            return (end <= n).then(|| x[start..end].to_vec());
        }
        let step = fs / self.reference_rate;
        let t0 = peak as f64 - self.pre as f64 * step;
        let t_last = t0 + (self.beat_len() - 1) as f64 * step;
        if t0 < 0.0 || t_last > (n - 1) as f64 {
            return None;
        }
        Some(
            (0..self.beat_len())
                .map(|i| {
                    let t = t0 + i as f64 * step;
                    let j = (t.floor() as usize).min(n - 1);
                    let frac = t - j as f64;
                    if frac == 0.0 || j + 1 >= n {
                        x[j]
                    } else {
                        x[j] * (1.0 - frac) + x[j + 1] * frac
                    }
                })
                .collect(),
        )
    }
}

/// Cut [`HEARTBEAT_LEN`]-sample beats around `peaks` with default settings.
pub fn segment_heartbeats(
    record: &RawRecord,
    peaks: &[usize],
    annotations: Option<&[Annotation]>,
) -> Result<Vec<Heartbeat>> {
    Segmenter::default().segment(record, peaks, annotations)
}

/// Each annotation labels the peak nearest to it, within `tolerance` samples.
fn assign_labels(peaks: &[usize], annotations: &[Annotation], tolerance: f64) -> Vec<GroundTruthLabel> {
    let mut labels = vec![GroundTruthLabel::Unlabeled; peaks.len()];
    let mut best = vec![f64::INFINITY; peaks.len()];
    let mut sorted: Vec<(usize, usize)> = peaks.iter().copied().enumerate().map(|(i, p)| (p, i)).collect();
    sorted.sort_unstable();
    for a in annotations {
        let pos = sorted.partition_point(|&(p, _)| p < a.sample);
        let near = [pos.checked_sub(1), (pos < sorted.len()).then_some(pos)]
            .into_iter()
            .flatten()
            .min_by_key(|&k| sorted[k].0.abs_diff(a.sample));
        if let Some(k) = near {
            let (p, idx) = sorted[k];
            let d = p.abs_diff(a.sample) as f64;
            if d <= tolerance && d < best[idx] {
                best[idx] = d;
                labels[idx] = a.label;
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, fs: f64) -> RawRecord {
        RawRecord::new((0..n).map(|i| i as f64).collect(), fs, "r", "MLII").unwrap()
    }

    #[test]
    fn cuts_exact_window() {
        let beats = segment_heartbeats(&ramp(1000, 360.0), &[100, 400], None).unwrap();
        assert_eq!(beats.len(), 2);
        assert_eq!(beats[0].samples[0], 0.0);
        assert_eq!(beats[0].samples[299], 299.0);
        assert_eq!(beats[1].samples[100], 400.0);
        assert_eq!(beats[1].r_index, 100);
        assert_eq!(beats[1].source_id, "r:400");
    }

    #[test]
    fn skips_edge_beats() {
        let beats = segment_heartbeats(&ramp(1000, 360.0), &[99, 500, 801], None).unwrap();
        assert_eq!(beats.len(), 1);
        assert_eq!(beats[0].samples[100], 500.0);
    }

    #[test]
    fn resamples_other_rates() {
        let beats = segment_heartbeats(&ramp(2000, 720.0), &[1000], None).unwrap();
        assert_eq!(beats[0].samples.len(), 300);
        assert_eq!(beats[0].samples[100], 1000.0);
        assert_eq!(beats[0].samples[0], 800.0);
        assert_eq!(beats[0].samples[299], 1000.0 + 199.0 * 2.0);
    }

    #[test]
    fn labels_from_nearest_annotation() {
        let ann = vec![
            Annotation {
                sample: 402,
                label: GroundTruthLabel::PrematureVentricular,
            },
            Annotation {
                sample: 700,
                label: GroundTruthLabel::Normal,
            },
        ];
        let beats = segment_heartbeats(&ramp(1200, 360.0), &[150, 400], Some(&ann)).unwrap();
        assert_eq!(beats[0].annotation, GroundTruthLabel::Unlabeled);
        assert_eq!(beats[1].annotation, GroundTruthLabel::PrematureVentricular);
    }
}
