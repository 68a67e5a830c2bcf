use std::f64::consts::PI;

use super::RawRecord;
use crate::error::{Error, Result};

/// Second-order section, normalised so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct form II state for a constant input `x`.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z1 = self.b[2] * x - self.a[1] * y;
        let z0 = self.b[1] * x - self.a[0] * y + z1;
        [z0, z1]
    }

    fn run(&self, data: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in data.iter_mut() {
            let x = *v;
            let y = b0 * x + z[0];
            z[0] = b1 * x - a1 * y + z[1];
            z[1] = b2 * x - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass obtained by the bilinear transform with
/// frequency prewarping, stored as cascaded biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    order: usize,
    cutoff: f64,
    sampling_rate: f64,
    sections: Vec<Biquad>,
}

impl ButterworthLowpass {
    pub fn new(order: usize, cutoff: f64, sampling_rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Parameter("filter order must be at least 1".into()));
        }
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "sampling rate {sampling_rate} must be positive"
            )));
        }
        if !(cutoff > 0.0 && cutoff < sampling_rate / 2.0) {
            return Err(Error::Parameter(format!(
                "cutoff {cutoff} Hz must lie strictly between 0 and the Nyquist frequency {}",
                sampling_rate / 2.0
            )));
        }
        let k = (PI * cutoff / sampling_rate).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            let q = 1.0 / (2.0 * (PI * (2 * i + 1 + order % 2) as f64 / (2 * order) as f64).cos());
            let norm = 1.0 / (1.0 + k / q + k2);
            let b0 = k2 * norm;
            sections.push(Biquad {
                b: [b0, 2.0 * b0, b0],
                a: [2.0 * (k2 - 1.0) * norm, (1.0 - k / q + k2) * norm],
            });
        }
        if order % 2 == 1 {
            let norm = 1.0 / (1.0 + k);
            sections.push(Biquad {
                b: [k * norm, k * norm, 0.0],
                a: [(k - 1.0) * norm, 0.0],
            });
        }
        Ok(ButterworthLowpass {
            order,
            cutoff,
            sampling_rate,
            sections,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Magnitude of the single-pass frequency response at `freq` Hz.
    pub fn magnitude(&self, freq: f64) -> f64 {
        let w = 2.0 * PI * freq / self.sampling_rate;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        self.sections
            .iter()
            .map(|s| {
                let nr = s.b[0] + s.b[1] * c1 + s.b[2] * c2;
                let ni = s.b[1] * s1 + s.b[2] * s2;
                let dr = 1.0 + s.a[0] * c1 + s.a[1] * c2;
                let di = s.a[0] * s1 + s.a[1] * s2;
                ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
            })
            .product()
    }

    /// Causal single pass, starting from the steady state for `data[0]`.
    pub fn filter(&self, data: &mut [f64]) {
        if data.is_empty() {
            return;
        }
        for s in &self.sections {
            let z = s.steady_state(data[0]);
            s.run(data, z);
        }
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding.
    pub fn filtfilt(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        if n < 2 {
            return signal.to_vec();
        }
        let pad = self.pad_len().min(n - 1);
        let (first, last) = (signal[0], signal[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        self.filter(&mut ext);
        ext.reverse();
        self.filter(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }

    fn pad_len(&self) -> usize {
        // Long enough for the slowest pole to decay well below 1e-9.
        let slowest = self
            .sections
            .iter()
            .map(|s| {
                let disc = s.a[0] * s.a[0] - 4.0 * s.a[1];
                if disc < 0.0 {
                    s.a[1].sqrt()
                } else {
                    let r = disc.sqrt();
                    ((-s.a[0] + r) / 2.0).abs().max(((-s.a[0] - r) / 2.0).abs())
                }
            })
            .fold(0.0_f64, f64::max);
        if slowest <= 0.0 || slowest >= 1.0 {
            return 3 * (2 * self.sections.len() + 1);
        }
        let steps = (1e-9_f64.ln() / slowest.ln()).ceil() as usize;
        steps.max(3 * (2 * self.sections.len() + 1))
    }
}

/// Order-4 Butterworth low-pass applied forward and backward.
pub fn lowpass_filter(record: &RawRecord, cutoff: f64) -> Result<RawRecord> {
    let filter = ButterworthLowpass::new(4, cutoff, record.sampling_rate)?;
    Ok(RawRecord {
        samples: filter.filtfilt(&record.samples),
        ..record.clone()
    })
}
