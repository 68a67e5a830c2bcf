use super::{GroundTruthLabel, RawRecord};
use crate::error::{Error, Result};

/// Layout of a delimited single-lead record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Zero-based column holding the lead.
    pub column: usize,
    pub has_header: bool,
    pub delimiter: char,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            column: 0,
            has_header: false,
            delimiter: ',',
        }
    }
}

/// One value per line, in physical units.
pub fn read_csv_record(text: &str, sampling_rate: f64, source_id: &str) -> Result<RawRecord> {
    read_csv_record_with(text, sampling_rate, source_id, &CsvOptions::default())
}

pub fn read_csv_record_with(
    text: &str,
    sampling_rate: f64,
    source_id: &str,
    options: &CsvOptions,
) -> Result<RawRecord> {
    let mut samples = Vec::new();
    let mut lead = String::from("lead");
    let mut header_pending = options.has_header;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line
            .split(options.delimiter)
            .nth(options.column)
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing column {}", options.column),
            })?
            .trim();
        if header_pending {
            header_pending = false;
            lead = field.to_string();
            continue;
        }
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("not a number: {field:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite value {field:?}"),
            });
        }
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(Error::Format("record contains no samples".into()));
    }
    RawRecord::new(samples, sampling_rate, source_id, lead)
}

/// Reference label attached to a sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub sample: usize,
    pub label: GroundTruthLabel,
}

/// `sample_index,label` rows. A leading non-numeric row is taken as a header.
/// Labels outside the known classes are skipped.
pub fn read_annotations(text: &str) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let index_field = parts.next().unwrap_or("").trim();
        let label_field = parts.next().map(str::trim);
        let sample = match index_field.parse::<usize>() {
            Ok(s) => s,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("bad sample index {index_field:?}"),
                })
            }
        };
        first = false;
        let label_field = label_field.ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "missing label".into(),
        })?;
        match GroundTruthLabel::parse(label_field) {
            Some(label) => out.push(Annotation { sample, label }),
            None => log::debug!("annotation line {}: ignoring label {label_field:?}", idx + 1),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_values() {
        let r = read_csv_record("0.1\n0.2\n\n-0.3\n", 360.0, "x").unwrap();
        assert_eq!(r.samples, vec![0.1, 0.2, -0.3]);
        assert_eq!(r.sampling_rate, 360.0);
    }

    #[test]
    fn parse_error_cites_line() {
        let err = read_csv_record("0.1\nabc\n", 360.0, "x").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                message: "not a number: \"abc\"".into()
            }
        );
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(read_csv_record("", 360.0, "x"), Err(Error::Format(_))));
        assert!(matches!(read_csv_record("\n\n", 360.0, "x"), Err(Error::Format(_))));
    }

    #[test]
    fn column_and_header() {
        let opts = CsvOptions {
            column: 1,
            has_header: true,
            delimiter: ',',
        };
        let r = read_csv_record_with("t,MLII\n0,1.5\n1,2.5\n", 360.0, "x", &opts).unwrap();
        assert_eq!(r.samples, vec![1.5, 2.5]);
        assert_eq!(r.lead, "MLII");
    }

    #[test]
    fn annotations() {
        let a = read_annotations("sample,label\n10,N\n20,V\n30,~\n40,L.B.B.B.\n").unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[1].label, GroundTruthLabel::PrematureVentricular);
        assert_eq!(a[2].label, GroundTruthLabel::LeftBundleBranchBlock);
        assert!(read_annotations("10,N\nx,N\n").is_err());
    }
}
