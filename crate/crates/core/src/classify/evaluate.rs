use serde::{Deserialize, Serialize};

use super::{ClassificationReport, DomainGroup};
use crate::error::{Error, Result};

/// TPR and NRR of one domain. A rate is `None` when its denominator is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScore {
    pub domain: DomainGroup,
    /// Beats whose reference label belongs to the domain.
    pub original: usize,
    /// Beats classified into the domain.
    pub classified: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    pub tpr: Option<f64>,
    pub nrr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub rows: Vec<DomainScore>,
    pub total: usize,
}

impl EvaluationTable {
    /// Score `(truth, predicted)` domain pairs.
    pub fn from_pairs(pairs: &[(DomainGroup, DomainGroup)]) -> Self {
        let total = pairs.len();
        let rows = DomainGroup::ALL
            .iter()
            .map(|&j| {
                let original = pairs.iter().filter(|(t, _)| *t == j).count();
                let classified = pairs.iter().filter(|(_, p)| *p == j).count();
                let true_positive = pairs.iter().filter(|(t, p)| *t == j && *p == j).count();
                let false_positive = classified - true_positive;
                let others = total - original;
                DomainScore {
                    domain: j,
                    original,
                    classified,
                    true_positive,
                    false_positive,
                    tpr: (original > 0).then(|| true_positive as f64 / original as f64),
                    nrr: (others > 0).then(|| 1.0 - false_positive as f64 / others as f64),
                }
            })
            .collect();
        EvaluationTable { rows, total }
    }

    pub fn row(&self, domain: DomainGroup) -> &DomainScore {
        &self.rows[domain.index()]
    }

    /// `domain,original,classified,true_positive,tpr,nrr`, with `NA` for
    /// undefined rates.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
        let mut out = String::from("domain,original,classified,true_positive,tpr,nrr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.domain,
                r.original,
                r.classified,
                r.true_positive,
                fmt(r.tpr),
                fmt(r.nrr)
            ));
        }
        out
    }
}

/// Per-domain true positive rate and noise removal rate. Every beat must
/// carry a reference label.
pub fn evaluate(report: &ClassificationReport) -> Result<EvaluationTable> {
    if report.beats.is_empty() {
        return Err(Error::EvaluationUnavailable("report has no beats".into()));
    }
    let pairs = report
        .beats
        .iter()
        .map(|r| {
            r.ground_truth
                .and_then(DomainGroup::of_truth)
                .map(|t| (t, r.domain))
                .ok_or_else(|| {
                    Error::EvaluationUnavailable(format!("beat {} ({}) has no reference label", r.index, r.source_id))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationTable::from_pairs(&pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use DomainGroup::*;

    #[test]
    fn perfect_scores() {
        let pairs: Vec<_> = [Normal, Atrial, Ventricular, BundleBranchBlock]
            .iter()
            .map(|&g| (g, g))
            .collect();
        let t = EvaluationTable::from_pairs(&pairs);
        for g in [Normal, Atrial, Ventricular, BundleBranchBlock] {
            assert_eq!(t.row(g).tpr, Some(1.0));
            assert_eq!(t.row(g).nrr, Some(1.0));
        }
        assert_eq!(t.row(Unclassified).tpr, None);
        assert_eq!(t.row(Unclassified).nrr, Some(1.0));
    }

    #[test]
    fn all_unclassified() {
        let pairs = vec![(Normal, Unclassified), (Ventricular, Unclassified)];
        let t = EvaluationTable::from_pairs(&pairs);
        assert_eq!(t.row(Normal).tpr, Some(0.0));
        assert_eq!(t.row(Ventricular).tpr, Some(0.0));
        assert_eq!(t.row(Unclassified).nrr, Some(0.0));
    }

    #[test]
    fn hand_counted() {
        // 3 normal (one called ventricular), 1 ventricular (called normal).
        let pairs = vec![
            (Normal, Normal),
            (Normal, Normal),
            (Normal, Ventricular),
            (Ventricular, Normal),
        ];
        let t = EvaluationTable::from_pairs(&pairs);
        assert_eq!(t.row(Normal).tpr, Some(2.0 / 3.0));
        assert_eq!(t.row(Normal).nrr, Some(0.0));
        assert_eq!(t.row(Ventricular).tpr, Some(0.0));
        assert_eq!(t.row(Ventricular).nrr, Some(1.0 - 1.0 / 3.0));
        assert!(t.to_csv().contains("Atrial,0,0,0,NA,1.000000"));
    }
}
