use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, DiagnosisLabel, DomainGroup, EvaluationTable, SymptomDomainPartition};
use crate::error::{Error, Result};
use crate::features::{beat_features, curvature_trace, BeatFeatures, DispersionPoint, FeatureParams};
use crate::ingest::{GroundTruthLabel, Heartbeat};

/// Feature parameters plus the curvature cap parameter `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub features: FeatureParams,
    pub epsilon: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            features: FeatureParams::default(),
            epsilon: 0.09,
        }
    }
}

impl RunParams {
    /// `3d(d-1)/ε`, infinite for `ε = 0`.
    pub fn curvature_cap(&self) -> Result<f64> {
        if !(self.epsilon >= 0.0) || self.epsilon.is_infinite() {
            return Err(Error::Parameter(format!("ε = {} must be positive", self.epsilon)));
        }
        let d = self.features.embedding.dim as f64;
        Ok(3.0 * d * (d - 1.0) / self.epsilon)
    }
}

/// Upper histogram bound: the standard beat's largest curvature, capped at
/// `3d(d-1)/ε`.
pub fn select_b(standard: &Heartbeat, params: &RunParams) -> Result<f64> {
    let cap = params.curvature_cap()?;
    let trace = curvature_trace(&standard.samples, &params.features).map_err(|e| e.for_source(&standard.source_id))?;
    let max = trace
        .curvature
        .max()
        .ok_or_else(|| Error::Parameter("standard beat is too short".into()))?;
    Ok(max.min(cap))
}

/// One row of a [`ClassificationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatRecord {
    pub index: usize,
    pub source_id: String,
    pub dispersion: Option<DispersionPoint>,
    pub label: DiagnosisLabel,
    pub domain: DomainGroup,
    pub ground_truth: Option<GroundTruthLabel>,
    /// Set when `cur1` sits in the unassigned gap at 10.
    pub boundary_gap: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCount {
    pub ground_truth: GroundTruthLabel,
    pub predicted: DiagnosisLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTally {
    pub domain: DomainGroup,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTally {
    pub label: DiagnosisLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub params: RunParams,
    pub b: f64,
    pub standard_source: String,
    pub beats: Vec<BeatRecord>,
    /// Beats per domain `D0..D4`, always five entries.
    pub tallies: Vec<GroupTally>,
    pub label_counts: Vec<LabelTally>,
    /// Non-zero (truth, predicted) pairs in label order.
    pub confusion: Vec<ConfusionCount>,
    /// Present when every beat carries a reference label.
    pub scores: Option<EvaluationTable>,
}

impl ClassificationReport {
    fn assemble(params: RunParams, b: f64, standard_source: String, beats: Vec<BeatRecord>) -> Self {
        let tallies = DomainGroup::ALL
            .iter()
            .map(|&domain| GroupTally {
                domain,
                count: beats.iter().filter(|r| r.domain == domain).count(),
            })
            .collect();
        let label_counts = DiagnosisLabel::ALL
            .iter()
            .map(|&label| LabelTally {
                label,
                count: beats.iter().filter(|r| r.label == label).count(),
            })
            .collect();
        let mut confusion = Vec::new();
        for truth in GroundTruthLabel::CLASSES {
            for predicted in DiagnosisLabel::ALL {
                let count = beats
                    .iter()
                    .filter(|r| r.ground_truth == Some(truth) && r.label == predicted)
                    .count();
                if count > 0 {
                    confusion.push(ConfusionCount {
                        ground_truth: truth,
                        predicted,
                        count,
                    });
                }
            }
        }
        let mut report = ClassificationReport {
            params,
            b,
            standard_source,
            beats,
            tallies,
            label_counts,
            confusion,
            scores: None,
        };
        report.scores = evaluate(&report).ok();
        report
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    pub fn tally(&self, domain: DomainGroup) -> usize {
        self.tallies.iter().find(|t| t.domain == domain).map_or(0, |t| t.count)
    }

    pub fn partition(&self) -> SymptomDomainPartition {
        SymptomDomainPartition::with_upper_bound(self.b)
    }

    /// Per-beat rows as CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "index",
            "source_id",
            "cur1",
            "cur2",
            "label",
            "domain",
            "ground_truth",
            "boundary_gap",
            "note",
        ])
        .map_err(csv_err)?;
        for r in &self.beats {
            let (c1, c2) = r.dispersion.map_or((String::new(), String::new()), |p| {
                (p.cur1.to_string(), p.cur2.to_string())
            });
            w.write_record([
                r.index.to_string(),
                r.source_id.clone(),
                c1,
                c2,
                r.label.name().to_string(),
                r.domain.name().to_string(),
                r.ground_truth.map_or(String::new(), |g| g.code().to_string()),
                r.boundary_gap.to_string(),
                r.note.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Classify a batch against a standard beat.
pub fn wscec_run(beats: &[Heartbeat], standard: &Heartbeat, params: &RunParams) -> Result<ClassificationReport> {
    wscec_run_detailed(beats, standard, params).map(|(report, _)| report)
}

/// Like [`wscec_run`], also returning each beat's intermediates.
pub fn wscec_run_detailed(
    beats: &[Heartbeat],
    standard: &Heartbeat,
    params: &RunParams,
) -> Result<(ClassificationReport, Vec<Result<BeatFeatures>>)> {
    if beats.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    params.features.embedding.validate()?;
    let b = select_b(standard, params)?;
    let partition = SymptomDomainPartition::with_upper_bound(b);

    let features: Vec<Result<BeatFeatures>> = beats
        .par_iter()
        .map(|beat| beat_features(beat, &params.features, b))
        .collect();

    let records = beats
        .iter()
        .zip(&features)
        .enumerate()
        .map(|(index, (beat, f))| {
            let point = match f {
                Ok(f) => f.dispersion.clone(),
                Err(e) => Err(e.clone()),
            };
            let (dispersion, label, note) = match point {
                Ok(p) => (Some(p), partition.classify(p), None),
                Err(e) => {
                    log::warn!("{}: {e}", beat.source_id);
                    (None, DiagnosisLabel::Unclassified, Some(e.to_string()))
                }
            };
            let boundary_gap = dispersion.is_some_and(|p| partition.in_boundary_gap(p));
            BeatRecord {
                index,
                source_id: beat.source_id.clone(),
                dispersion,
                label,
                domain: label.group(),
                ground_truth: (beat.annotation != GroundTruthLabel::Unlabeled).then_some(beat.annotation),
                boundary_gap,
                note,
            }
        })
        .collect();
    let report = ClassificationReport::assemble(*params, b, standard.source_id.clone(), records);
    Ok((report, features))
}
