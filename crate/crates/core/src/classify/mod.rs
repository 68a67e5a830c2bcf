//! Symptom-description domains on the dispersion plane, the batch
//! classification run, TPR/NRR scoring and confidence ellipses.

mod ellipse;
mod evaluate;
mod run;

pub use ellipse::{chi_squared_quantile, confidence_ellipse, ConfidenceEllipse};
pub use evaluate::{evaluate, DomainScore, EvaluationTable};
pub use run::{select_b, wscec_run, wscec_run_detailed, BeatRecord, ClassificationReport, ConfusionCount, RunParams};

use serde::{Deserialize, Serialize};

use crate::features::DispersionPoint;
use crate::ingest::GroundTruthLabel;

/// Output label of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiagnosisLabel {
    Normal,
    #[serde(rename = "AP")]
    AtrialPremature,
    #[serde(rename = "VF")]
    VentricularFlutter,
    #[serde(rename = "FVN")]
    FusionVentricularNormal,
    #[serde(rename = "PVC")]
    PrematureVentricular,
    VentricularAbnormal,
    #[serde(rename = "LBBB")]
    LeftBundleBranchBlock,
    #[serde(rename = "RBBB")]
    RightBundleBranchBlock,
    BundleBranchBlock,
    Unclassified,
}

impl DiagnosisLabel {
    pub const ALL: [DiagnosisLabel; 10] = [
        DiagnosisLabel::Normal,
        DiagnosisLabel::AtrialPremature,
        DiagnosisLabel::VentricularFlutter,
        DiagnosisLabel::FusionVentricularNormal,
        DiagnosisLabel::PrematureVentricular,
        DiagnosisLabel::VentricularAbnormal,
        DiagnosisLabel::LeftBundleBranchBlock,
        DiagnosisLabel::RightBundleBranchBlock,
        DiagnosisLabel::BundleBranchBlock,
        DiagnosisLabel::Unclassified,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DiagnosisLabel::Normal => "Normal",
            DiagnosisLabel::AtrialPremature => "AP",
            DiagnosisLabel::VentricularFlutter => "VF",
            DiagnosisLabel::FusionVentricularNormal => "FVN",
            DiagnosisLabel::PrematureVentricular => "PVC",
            DiagnosisLabel::VentricularAbnormal => "VentricularAbnormal",
            DiagnosisLabel::LeftBundleBranchBlock => "LBBB",
            DiagnosisLabel::RightBundleBranchBlock => "RBBB",
            DiagnosisLabel::BundleBranchBlock => "BundleBranchBlock",
            DiagnosisLabel::Unclassified => "Unclassified",
        }
    }

    pub fn group(&self) -> DomainGroup {
        use DiagnosisLabel::*;
        match self {
            Normal => DomainGroup::Normal,
            AtrialPremature => DomainGroup::Atrial,
            VentricularFlutter | FusionVentricularNormal | PrematureVentricular | VentricularAbnormal => {
                DomainGroup::Ventricular
            }
            LeftBundleBranchBlock | RightBundleBranchBlock | BundleBranchBlock => DomainGroup::BundleBranchBlock,
            Unclassified => DomainGroup::Unclassified,
        }
    }
}

impl std::fmt::Display for DiagnosisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The five top-level domains `D0..D4`, used for tallies and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DomainGroup {
    Normal,
    Atrial,
    Ventricular,
    BundleBranchBlock,
    Unclassified,
}

impl DomainGroup {
    pub const ALL: [DomainGroup; 5] = [
        DomainGroup::Normal,
        DomainGroup::Atrial,
        DomainGroup::Ventricular,
        DomainGroup::BundleBranchBlock,
        DomainGroup::Unclassified,
    ];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainGroup::Normal => "Normal",
            DomainGroup::Atrial => "Atrial",
            DomainGroup::Ventricular => "Ventricular",
            DomainGroup::BundleBranchBlock => "BundleBranchBlock",
            DomainGroup::Unclassified => "Unclassified",
        }
    }

    /// Domain a reference label belongs to; `None` for unlabeled beats.
    pub fn of_truth(label: GroundTruthLabel) -> Option<DomainGroup> {
        use GroundTruthLabel::*;
        Some(match label {
            Normal => DomainGroup::Normal,
            AtrialPremature => DomainGroup::Atrial,
            PrematureVentricular | FusionVentricularNormal | VentricularFlutter => DomainGroup::Ventricular,
            LeftBundleBranchBlock | RightBundleBranchBlock => DomainGroup::BundleBranchBlock,
            Unlabeled => return None,
        })
    }
}

impl std::fmt::Display for DomainGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Interval with explicit endpoint inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Interval {
    pub const fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Interval {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// Axis-aligned rectangle `cur1 × cur2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub cur1: Interval,
    pub cur2: Interval,
}

impl Rect {
    pub fn contains(&self, p: DispersionPoint) -> bool {
        self.cur1.contains(p.cur1) && self.cur2.contains(p.cur2)
    }
}

const INF: f64 = f64::INFINITY;

/// The domain partition. Only the right end of `D0` depends on `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymptomDomainPartition {
    pub d0: Rect,
    pub d1: Rect,
    pub d2: Rect,
    pub d21: Rect,
    pub d22: Rect,
    pub d23: Rect,
    pub d3: Rect,
    pub d31: Rect,
    pub d32: Rect,
}

impl Default for SymptomDomainPartition {
    fn default() -> Self {
        Self::with_upper_bound(200.0)
    }
}

impl SymptomDomainPartition {
    pub fn with_upper_bound(b: f64) -> Self {
        let ventricular = Interval::new(10.0, false, 25.0, true);
        let bundle = Interval::new(0.0, true, 10.0, false);
        let rect = |cur1, lo, lo_closed, hi, hi_closed| Rect {
            cur1,
            cur2: Interval::new(lo, lo_closed, hi, hi_closed),
        };
        SymptomDomainPartition {
            d0: rect(Interval::new(25.0, false, b, true), 0.0, true, 25.0, true),
            d1: rect(Interval::new(25.0, false, 90.0, true), 25.0, false, INF, false),
            d2: rect(ventricular, 0.0, true, INF, false),
            d21: rect(ventricular, 0.0, true, 50.0, true),
            d22: rect(ventricular, 40.0, true, 70.0, true),
            d23: rect(ventricular, 60.0, true, INF, false),
            d3: rect(bundle, 0.0, true, INF, false),
            d31: rect(bundle, 0.0, true, 140.0, true),
            d32: rect(bundle, 100.0, true, INF, false),
        }
    }

    pub fn upper_bound(&self) -> f64 {
        self.d0.cur1.hi
    }

    pub fn domain(&self, p: DispersionPoint) -> DomainGroup {
        if self.d0.contains(p) {
            DomainGroup::Normal
        } else if self.d1.contains(p) {
            DomainGroup::Atrial
        } else if self.d2.contains(p) {
            DomainGroup::Ventricular
        } else if self.d3.contains(p) {
            DomainGroup::BundleBranchBlock
        } else {
            DomainGroup::Unclassified
        }
    }

    pub fn classify(&self, p: DispersionPoint) -> DiagnosisLabel {
        match self.domain(p) {
            DomainGroup::Normal => DiagnosisLabel::Normal,
            DomainGroup::Atrial => DiagnosisLabel::AtrialPremature,
            DomainGroup::Ventricular => match (self.d21.contains(p), self.d22.contains(p), self.d23.contains(p)) {
                (true, false, false) => DiagnosisLabel::VentricularFlutter,
                (false, true, false) => DiagnosisLabel::FusionVentricularNormal,
                (false, false, true) => DiagnosisLabel::PrematureVentricular,
                _ => DiagnosisLabel::VentricularAbnormal,
            },
            DomainGroup::BundleBranchBlock => match (self.d31.contains(p), self.d32.contains(p)) {
                (true, false) => DiagnosisLabel::LeftBundleBranchBlock,
                (false, true) => DiagnosisLabel::RightBundleBranchBlock,
                _ => DiagnosisLabel::BundleBranchBlock,
            },
            DomainGroup::Unclassified => DiagnosisLabel::Unclassified,
        }
    }

    /// True for points in the gap `cur1 = 10` that lies between the
    /// ventricular and bundle-branch domains.
    pub fn in_boundary_gap(&self, p: DispersionPoint) -> bool {
        p.cur1 == self.d2.cur1.lo && !self.d2.cur1.lo_closed && !self.d3.cur1.hi_closed
    }
}

/// Classify with the default partition (`b = 200`).
pub fn classify(p: DispersionPoint) -> DiagnosisLabel {
    SymptomDomainPartition::default().classify(p)
}
