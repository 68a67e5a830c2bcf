//! Reader for PhysioNet WFDB records stored in formats 212 and 16.

use super::RawRecord;
use crate::error::{Error, Result};

/// Sample storage formats this reader understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageFormat {
    /// Two 12-bit samples packed into three bytes.
    F212,
    /// 16-bit little-endian two's complement.
    F16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: StorageFormat,
    /// ADC units per physical unit.
    pub gain: f64,
    pub baseline: i32,
    pub units: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub record_name: String,
    pub sampling_rate: f64,
    pub num_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
}

const DEFAULT_GAIN: f64 = 200.0;
const DEFAULT_RATE: f64 = 250.0;

fn format_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("header line {line}: {msg}"))
}

pub fn parse_header(text: &str) -> Result<Header> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, record_line) = lines.next().ok_or_else(|| Error::Format("empty header".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(format_err(ln, "record line needs a name and a signal count"));
    }
    let record_name = fields[0].to_string();
    if record_name.contains('/') {
        return Err(Error::UnsupportedFormat("multi-segment records".into()));
    }
    let nsig: usize = fields[1].parse().map_err(|_| format_err(ln, "bad signal count"))?;
    let sampling_rate = match fields.get(2) {
        Some(f) => {
            let head = f.split(['/', '(']).next().unwrap_or("");
            let rate: f64 = head.parse().map_err(|_| format_err(ln, "bad sampling frequency"))?;
            if rate > 0.0 {
                rate
            } else {
                DEFAULT_RATE
            }
        }
        None => DEFAULT_RATE,
    };
    let num_samples = match fields.get(3) {
        Some(f) => Some(f.parse().map_err(|_| format_err(ln, "bad sample count"))?),
        None => None,
    };

    let mut signals = Vec::with_capacity(nsig);
    for _ in 0..nsig {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Format(format!("header declares {nsig} signals but lists fewer")))?;
        signals.push(parse_signal_line(ln, line)?);
    }
    Ok(Header {
        record_name,
        sampling_rate,
        num_samples,
        signals,
    })
}

fn parse_signal_line(ln: usize, line: &str) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(format_err(ln, "signal line needs a file name and format"));
    }
    let fmt_field = fields[1];
    let digits: String = fmt_field.chars().take_while(char::is_ascii_digit).collect();
    let rest = &fmt_field[digits.len()..];
    if !(rest.is_empty() || rest == "x1") {
        return Err(Error::UnsupportedFormat(format!(
            "format modifier {rest:?} in {fmt_field:?}"
        )));
    }
    let format = match digits.as_str() {
        "212" => StorageFormat::F212,
        "16" => StorageFormat::F16,
        "" => return Err(format_err(ln, format!("bad format field {fmt_field:?}"))),
        other => return Err(Error::UnsupportedFormat(format!("format {other}"))),
    };

    let mut gain = DEFAULT_GAIN;
    let mut baseline: Option<i32> = None;
    let mut units = String::from("mV");
    if let Some(g) = fields.get(2) {
        let (num_part, unit_part) = match g.split_once('/') {
            Some((a, b)) => (a, Some(b)),
            None => (*g, None),
        };
        let (gain_str, base_str) = match num_part.split_once('(') {
            Some((a, b)) => (a, Some(b.trim_end_matches(')'))),
            None => (num_part, None),
        };
        let parsed: f64 = gain_str
            .parse()
            .map_err(|_| format_err(ln, format!("bad gain {g:?}")))?;
        if parsed != 0.0 {
            gain = parsed;
        }
        if let Some(b) = base_str {
            baseline = Some(b.parse().map_err(|_| format_err(ln, format!("bad baseline {g:?}")))?);
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }
    let adc_zero: i32 = match fields.get(4) {
        Some(f) => f.parse().map_err(|_| format_err(ln, "bad ADC zero"))?,
        None => 0,
    };
    let description = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        String::new()
    };
    Ok(SignalSpec {
        file_name: fields[0].to_string(),
        format,
        gain,
        baseline: baseline.unwrap_or(adc_zero),
        units,
        description,
    })
}

fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

/// Unpack format-212 bytes. A trailing pair of bytes holds one sample.
pub fn decode_212(bytes: &[u8]) -> Result<Vec<i16>> {
    if bytes.len() % 3 == 1 {
        return Err(Error::Length {
            expected: bytes.len() + 1,
            found: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(bytes.len() * 2 / 3 + 1);
    for chunk in bytes.chunks(3) {
        let s0 = chunk[0] as u16 | ((chunk[1] as u16 & 0x0F) << 8);
        out.push(sign_extend_12(s0));
        if chunk.len() == 3 {
            let s1 = chunk[2] as u16 | ((chunk[1] as u16 & 0xF0) << 4);
            out.push(sign_extend_12(s1));
        }
    }
    Ok(out)
}

/// Pack 12-bit samples into format 212. Values outside `-2048..=2047`
/// are rejected.
pub fn encode_212(samples: &[i16]) -> Result<Vec<u8>> {
    if let Some(bad) = samples.iter().find(|v| !(-2048..=2047).contains(*v)) {
        return Err(Error::Parameter(format!("{bad} does not fit in 12 bits")));
    }
    let mut out = Vec::with_capacity(samples.len().div_ceil(2) * 3);
    for pair in samples.chunks(2) {
        let a = pair[0] as u16 & 0x0FFF;
        let b = pair.get(1).map_or(0, |&v| v as u16 & 0x0FFF);
        out.push((a & 0xFF) as u8);
        out.push(((a >> 8) | ((b >> 8) << 4)) as u8);
        if pair.len() == 2 {
            out.push((b & 0xFF) as u8);
        }
    }
    Ok(out)
}

pub fn decode_16(bytes: &[u8]) -> Result<Vec<i16>> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Length {
            expected: bytes.len() + 1,
            found: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect())
}

/// Read one channel of a record from its header text and the contents of
/// the signal file that holds that channel.
pub fn read_wfdb_record(header_text: &str, data: &[u8], channel: usize) -> Result<RawRecord> {
    let header = parse_header(header_text)?;
    let spec = header.signals.get(channel).ok_or_else(|| {
        Error::Parameter(format!(
            "channel {channel} requested but the record has {} signals",
            header.signals.len()
        ))
    })?;
    let group: Vec<usize> = (0..header.signals.len())
        .filter(|&i| header.signals[i].file_name == spec.file_name)
        .collect();
    if group.iter().any(|&i| header.signals[i].format != spec.format) {
        return Err(Error::UnsupportedFormat("mixed formats within one signal file".into()));
    }
    let width = group.len();
    let offset = group.iter().position(|&i| i == channel).unwrap_or(0);

    let raw = match spec.format {
        StorageFormat::F212 => decode_212(data)?,
        StorageFormat::F16 => decode_16(data)?,
    };
    let frames = match header.num_samples {
        Some(n) => {
            if raw.len() < n * width {
                return Err(Error::Length {
                    expected: n * width,
                    found: raw.len(),
                });
            }
            n
        }
        None => raw.len() / width,
    };
    let samples: Vec<f64> = (0..frames)
        .map(|f| (raw[f * width + offset] as f64 - spec.baseline as f64) / spec.gain)
        .collect();
    let lead = if spec.description.is_empty() {
        format!("signal {channel}")
    } else {
        spec.description.clone()
    };
    RawRecord::new(samples, header.sampling_rate, header.record_name.clone(), lead)
}
