//! Sliding-window Fourier embedding of a 1-D signal into `R^d`.
//!
//! Window `k` (counted from 1, as the windows are numbered in the method's
//! definition) covers the 1-based samples `t_{kτ} … t_{kτ+l−1}`, i.e. the
//! 0-based slice starting at `kτ − 1`. With `n̂ = ⌊(n − l)/τ⌋` there are
//! `n̂ − 1` windows. Each window becomes the point
//! `(2/l)·(a₀, a₁, b₁, a₂, b₂, …)` truncated to `d` coordinates, where
//! `C_k = a_k + b_k j` is its DFT.

use std::sync::Arc;

use nalgebra::DVector;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub window_length: usize,
    pub stride: usize,
    pub dim: usize,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            window_length: 10,
            stride: 1,
            dim: 3,
        }
    }
}

impl EmbeddingParams {
    pub fn new(window_length: usize, stride: usize, dim: usize) -> Result<Self> {
        let p = EmbeddingParams {
            window_length,
            stride,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (l, tau, d) = (self.window_length, self.stride, self.dim);
        if l == 0 || tau == 0 || d == 0 {
            return Err(Error::Parameter(
                "window length, stride and dimension must be positive".into(),
            ));
        }
        if tau > l {
            return Err(Error::Parameter(format!("stride {tau} exceeds window length {l}")));
        }
        if d > l {
            return Err(Error::Parameter(format!("dimension {d} exceeds window length {l}")));
        }
        Ok(())
    }

    /// Number of windows for a signal of length `n`: `⌊(n − l)/τ⌋ − 1`,
    /// or zero when that is not positive.
    pub fn window_count(&self, n: usize) -> usize {
        if n < self.window_length {
            return 0;
        }
        ((n - self.window_length) / self.stride).saturating_sub(1)
    }
}

/// DFT coefficients of one window, split as `C_k = a_k + b_k j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierWindow {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierWindow {
    /// `A_k = 2 sqrt(a_k² + b_k²)`.
    pub fn amplitude(&self, k: usize) -> f64 {
        2.0 * self.a[k].hypot(self.b[k])
    }

    /// `φ_k` with `tan φ_k = b_k / a_k`, resolved by quadrant.
    pub fn phase(&self, k: usize) -> f64 {
        self.b[k].atan2(self.a[k])
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a₀, a₁, b₁, a₂, b₂, …` truncated to `d` entries.
    pub fn interleaved(&self, d: usize) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.a[0])
            .chain((1..self.len()).flat_map(move |k| [self.a[k], self.b[k]]))
            .take(d)
    }
}

/// An ordered point cloud in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanCloud {
    points: Vec<DVector<f64>>,
    params: Option<EmbeddingParams>,
}

impl EuclideanCloud {
    /// Wraps arbitrary points; they must be non-empty, finite and of one
    /// dimension.
    pub fn from_points(points: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Parameter("empty point cloud".into()));
        };
        let d = first.len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Parameter("points have mixed dimensions".into()));
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Parameter("point cloud has non-finite coordinates".into()));
        }
        Ok(EuclideanCloud { points, params: None })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// The parameters used when the cloud came from [`embed`].
    pub fn params(&self) -> Option<EmbeddingParams> {
        self.params
    }
}

/// The windows `p_1 … p_{n̂−1}` of the signal.
pub fn window_slices<'a>(signal: &'a [f64], params: &EmbeddingParams) -> Result<Vec<&'a [f64]>> {
    params.validate()?;
    let n = signal.len();
    let l = params.window_length;
    if l > n {
        return Err(Error::Parameter(format!("window length {l} exceeds signal length {n}")));
    }
    let count = params.window_count(n);
    if count == 0 {
        return Err(Error::Parameter(format!(
            "signal of length {n} yields no windows for l = {l}, τ = {}",
            params.stride
        )));
    }
    Ok((1..=count)
        .map(|k| {
            let start = k * params.stride - 1;
            &signal[start..start + l]
        })
        .collect())
}

struct Transform {
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Transform {
    fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Transform {
            fft,
            buffer: vec![Complex::default(); len],
            scratch,
        }
    }

    fn run(&mut self, window: &[f64]) -> FourierWindow {
        for (dst, &src) in self.buffer.iter_mut().zip(window) {
            *dst = Complex::new(src, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        FourierWindow {
            a: self.buffer.iter().map(|c| c.re).collect(),
            b: self.buffer.iter().map(|c| c.im).collect(),
        }
    }
}

/// DFT of a single window, `C_k = Σ_i t_i e^{−2πjki/l}`.
pub fn fft_window(window: &[f64]) -> Result<FourierWindow> {
    if window.is_empty() {
        return Err(Error::Parameter("empty window".into()));
    }
    Ok(Transform::new(window.len()).run(window))
}

/// Embeds a signal as the cloud of scaled leading Fourier coefficients.
pub fn embed(signal: &[f64], params: &EmbeddingParams) -> Result<EuclideanCloud> {
    let windows = window_slices(signal, params)?;
    let mut transform = Transform::new(params.window_length);
    let scale = 2.0 / params.window_length as f64;
    let points = windows
        .into_iter()
        .map(|w| {
            let coeffs = transform.run(w);
            DVector::from_iterator(params.dim, coeffs.interleaved(params.dim).map(|v| v * scale))
        })
        .collect();
    let mut cloud = EuclideanCloud::from_points(points)?;
    cloud.params = Some(*params);
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_window_count() {
        let p = EmbeddingParams::default();
        assert_eq!(p.window_count(300), 289);
        let signal: Vec<f64> = (0..300).map(f64::from).collect();
        let w = window_slices(&signal, &p).unwrap();
        assert_eq!(w.len(), 289);
        assert_eq!(w[0], &signal[0..10]);
        assert_eq!(w[288], &signal[288..298]);
    }

    #[test]
    fn stride_five() {
        let p = EmbeddingParams::new(10, 5, 3).unwrap();
        let signal: Vec<f64> = (0..20).map(f64::from).collect();
        let w = window_slices(&signal, &p).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0], &signal[4..14]);
    }

    #[test]
    fn degenerate_lengths_are_errors() {
        let p = EmbeddingParams::default();
        assert!(window_slices(&[0.0; 10], &p).is_err());
        assert!(window_slices(&[0.0; 5], &p).is_err());
        assert!(EmbeddingParams::new(10, 11, 3).is_err());
        assert!(EmbeddingParams::new(10, 1, 11).is_err());
        assert!(EmbeddingParams::new(10, 0, 3).is_err());
    }

    #[test]
    fn constant_window_is_dc_only() {
        let f = fft_window(&[2.5; 10]).unwrap();
        assert!((f.a[0] - 25.0).abs() < 1e-12);
        for k in 1..10 {
            assert!(f.a[k].abs() < 1e-12 && f.b[k].abs() < 1e-12);
        }
        assert!((f.amplitude(0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_window_hits_first_bin() {
        let l = 10;
        let w: Vec<f64> = (0..l)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / l as f64).cos())
            .collect();
        let f = fft_window(&w).unwrap();
        assert!((f.a[1] - 5.0).abs() < 1e-12);
        for k in 0..l / 2 {
            if k != 1 {
                assert!(f.a[k].abs() < 1e-12, "a_{k} = {}", f.a[k]);
            }
            assert!(f.b[k].abs() < 1e-12);
        }
        assert!(f.phase(1).abs() < 1e-12);
    }

    #[test]
    fn sine_window_sign_convention() {
        // C_1 of sin(2πi/l) is −(l/2) j, so b_1 = −l/2.
        let l = 8;
        let w: Vec<f64> = (0..l)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / l as f64).sin())
            .collect();
        let f = fft_window(&w).unwrap();
        assert!((f.b[1] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_beat_embeds_to_single_point() {
        let cloud = embed(&[0.7; 300], &EmbeddingParams::default()).unwrap();
        assert_eq!(cloud.len(), 289);
        for p in cloud.points() {
            assert!((p[0] - 1.4).abs() < 1e-12);
            assert!(p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
        }
    }

    #[test]
    fn interleaving_for_even_dimension() {
        let p = EmbeddingParams::new(10, 1, 4).unwrap();
        let signal: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let cloud = embed(&signal, &p).unwrap();
        let f = fft_window(&signal[0..10]).unwrap();
        let expected = [f.a[0], f.a[1], f.b[1], f.a[2]].map(|v| v * 0.2);
        for (got, want) in cloud.points()[0].iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
