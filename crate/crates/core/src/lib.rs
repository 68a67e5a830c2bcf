//! Heartbeat classification from the Wasserstein scalar curvature of
//! local Gaussians along a Fourier embedding of each beat.
//!
//! ```
//! use wscec::classify::{wscec_run, RunParams};
//! use wscec::synth;
//!
//! let beats = synth::class_fixtures(synth::FIXTURE_SEED);
//! let report = wscec_run(&beats, &synth::standard_beat(), &RunParams::default()).unwrap();
//! assert_eq!(report.b, 200.0);
//! assert_eq!(report.len(), 7);
//! ```

// NaN must fail the positivity checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod embed;
pub mod error;
pub mod export;
pub mod features;
pub mod ingest;
pub mod local_stats;
pub mod selftest;
pub mod spd;
pub mod synth;
