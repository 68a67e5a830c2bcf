use std::collections::VecDeque;

use super::RawRecord;

/// Adaptive-threshold R-peak detector.
///
/// Amplitudes are measured from the signal median. A sample is a candidate
/// when it exceeds `threshold_ratio` times the maximum over a centred window
/// of `window_s` seconds; each supra-threshold run contributes its argmax.
/// Candidates closer than `refractory_s` keep only the larger one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDetector {
    pub threshold_ratio: f64,
    pub window_s: f64,
    pub refractory_s: f64,
}

impl Default for PeakDetector {
    fn default() -> Self {
        PeakDetector {
            threshold_ratio: 0.6,
            window_s: 2.0,
            refractory_s: 0.2,
        }
    }
}

impl PeakDetector {
    pub fn refractory_samples(&self, sampling_rate: f64) -> usize {
        ((self.refractory_s * sampling_rate).round() as usize).max(1)
    }

    pub fn detect(&self, record: &RawRecord) -> Vec<usize> {
        self.detect_samples(&record.samples, record.sampling_rate)
    }

    pub fn detect_samples(&self, samples: &[f64], sampling_rate: f64) -> Vec<usize> {
        let n = samples.len();
        if n == 0 {
            return Vec::new();
        }
        let baseline = median(samples);
        let y: Vec<f64> = samples.iter().map(|v| v - baseline).collect();
        let half = ((self.window_s * sampling_rate / 2.0).round() as usize).max(1);
        let envelope = rolling_max(&y, half);

        let mut candidates = Vec::new();
        let mut i = 0;
        while i < n {
            if envelope[i] > 0.0 && y[i] > self.threshold_ratio * envelope[i] {
                let mut best = i;
                while i < n && envelope[i] > 0.0 && y[i] > self.threshold_ratio * envelope[i] {
                    if y[i] > y[best] {
                        best = i;
                    }
                    i += 1;
                }
                candidates.push(best);
            } else {
                i += 1;
            }
        }

        let refractory = self.refractory_samples(sampling_rate);
        // Largest first so that every kept peak dominates its refractory window.
        let mut order = candidates.clone();
        order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        let mut kept: Vec<usize> = Vec::new();
        for c in order {
            let pos = kept.partition_point(|&k| k < c);
            let clash_left = pos > 0 && c - kept[pos - 1] < refractory;
            let clash_right = pos < kept.len() && kept[pos] - c < refractory;
            if clash_left || clash_right {
                continue;
            }
            let lo = c.saturating_sub(refractory - 1);
            let hi = (c + refractory).min(n);
            if y[lo..hi].iter().any(|&v| v > y[c]) {
                continue;
            }
            kept.insert(pos, c);
        }
        kept
    }
}

/// R-peak indices of `record` with the default detector.
pub fn detect_r_peaks(record: &RawRecord) -> Vec<usize> {
    PeakDetector::default().detect(record)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Max over `[i - half, i + half]`, clipped to the signal.
fn rolling_max(y: &[f64], half: usize) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&j| y[j] <= y[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while dq.front().is_some_and(|&j| j < lo) {
            dq.pop_front();
        }
        *slot = y[*dq.front().unwrap()];
    }
    out
}
