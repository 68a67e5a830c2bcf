//! From raw recordings to fixed-length heartbeats: WFDB and CSV readers, a
//! zero-phase Butterworth low-pass, an R-peak detector and segmentation.

mod filter;
mod peaks;
mod segment;
mod text;
pub mod wfdb;

pub use filter::{lowpass_filter, Biquad, ButterworthLowpass};
pub use peaks::{detect_r_peaks, PeakDetector};
pub use segment::{segment_heartbeats, Segmenter, HEARTBEAT_LEN};
pub use text::{read_annotations, read_csv_record, read_csv_record_with, Annotation, CsvOptions};
pub use wfdb::read_wfdb_record;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-lead recording in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub samples: Vec<f64>,
    /// Hz.
    pub sampling_rate: f64,
    pub source_id: String,
    pub lead: String,
}

impl RawRecord {
    pub fn new(
        samples: Vec<f64>,
        sampling_rate: f64,
        source_id: impl Into<String>,
        lead: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Format("record has no samples".into()));
        }
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "sampling rate {sampling_rate} must be positive"
            )));
        }
        Ok(RawRecord {
            samples,
            sampling_rate,
            source_id: source_id.into(),
            lead: lead.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Beat classes used as ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum GroundTruthLabel {
    #[serde(rename = "N")]
    Normal,
    #[serde(rename = "LBBB")]
    LeftBundleBranchBlock,
    #[serde(rename = "RBBB")]
    RightBundleBranchBlock,
    #[serde(rename = "AP")]
    AtrialPremature,
    #[serde(rename = "PVC")]
    PrematureVentricular,
    #[serde(rename = "FVN")]
    FusionVentricularNormal,
    #[serde(rename = "VF")]
    VentricularFlutter,
    #[default]
    #[serde(rename = "unlabeled")]
    Unlabeled,
}

impl GroundTruthLabel {
    pub const CLASSES: [GroundTruthLabel; 7] = [
        GroundTruthLabel::Normal,
        GroundTruthLabel::LeftBundleBranchBlock,
        GroundTruthLabel::RightBundleBranchBlock,
        GroundTruthLabel::AtrialPremature,
        GroundTruthLabel::PrematureVentricular,
        GroundTruthLabel::FusionVentricularNormal,
        GroundTruthLabel::VentricularFlutter,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            GroundTruthLabel::Normal => "N",
            GroundTruthLabel::LeftBundleBranchBlock => "LBBB",
            GroundTruthLabel::RightBundleBranchBlock => "RBBB",
            GroundTruthLabel::AtrialPremature => "AP",
            GroundTruthLabel::PrematureVentricular => "PVC",
            GroundTruthLabel::FusionVentricularNormal => "FVN",
            GroundTruthLabel::VentricularFlutter => "VF",
            GroundTruthLabel::Unlabeled => "unlabeled",
        }
    }

    /// Accepts the short codes above, MIT-BIH beat symbols
    /// (`N L R A V F !`) and the dotted abbreviations (`L.B.B.B.` …).
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        let squashed: String = t
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '.')
            .collect::<String>()
            .to_ascii_uppercase();
        Some(match squashed.as_str() {
            "N" | "NORMAL" => GroundTruthLabel::Normal,
            "L" | "LBBB" => GroundTruthLabel::LeftBundleBranchBlock,
            "R" | "RBBB" => GroundTruthLabel::RightBundleBranchBlock,
            "A" | "AP" | "APC" => GroundTruthLabel::AtrialPremature,
            "V" | "PVC" => GroundTruthLabel::PrematureVentricular,
            "F" | "FVN" => GroundTruthLabel::FusionVentricularNormal,
            "!" | "VF" => GroundTruthLabel::VentricularFlutter,
            "" | "UNLABELED" | "UNLABELLED" | "?" => GroundTruthLabel::Unlabeled,
            _ => return None,
        })
    }
}

impl std::fmt::Display for GroundTruthLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// One segmented beat of exactly [`HEARTBEAT_LEN`] samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heartbeat {
    pub samples: Vec<f64>,
    /// Position of the R-peak inside `samples`.
    pub r_index: usize,
    pub annotation: GroundTruthLabel,
    pub source_id: String,
}

impl Heartbeat {
    pub fn new(
        samples: Vec<f64>,
        r_index: usize,
        annotation: GroundTruthLabel,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if samples.len() != HEARTBEAT_LEN {
            return Err(Error::Parameter(format!(
                "heartbeat must have {HEARTBEAT_LEN} samples, got {}",
                samples.len()
            )));
        }
        if r_index >= HEARTBEAT_LEN {
            return Err(Error::Parameter(format!("R index {r_index} out of range")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("heartbeat has non-finite samples".into()));
        }
        Ok(Heartbeat {
            samples,
            r_index,
            annotation,
            source_id: source_id.into(),
        })
    }
}

/// Settings for [`ingest_record`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Low-pass cutoff in Hz.
    pub cutoff: f64,
    pub filter_order: usize,
    pub detector: PeakDetector,
    pub segmenter: Segmenter,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            cutoff: 50.0,
            filter_order: 4,
            detector: PeakDetector::default(),
            segmenter: Segmenter::default(),
        }
    }
}

/// Filter, detect R-peaks and segment a record. Annotations, when given,
/// label the beat whose R-peak is nearest.
pub fn ingest_record(
    record: &RawRecord,
    annotations: Option<&[Annotation]>,
    options: &IngestOptions,
) -> Result<Vec<Heartbeat>> {
    let filter = ButterworthLowpass::new(options.filter_order, options.cutoff, record.sampling_rate)?;
    let filtered = RawRecord {
        samples: filter.filtfilt(&record.samples),
        ..record.clone()
    };
    let peaks = options.detector.detect(&filtered);
    options.segmenter.segment(&filtered, &peaks, annotations)
}
