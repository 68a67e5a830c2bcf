#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bundle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wscec::classify::{confidence_ellipse, evaluate, wscec_run_detailed, ClassificationReport, DomainGroup, RunParams};
use wscec::embed::EmbeddingParams;
use wscec::export;
use wscec::features::{AmplitudeNormalization, Cur2Form, FeatureParams};
use wscec::ingest::{self, GroundTruthLabel, Heartbeat, IngestOptions, RawRecord, HEARTBEAT_LEN};
use wscec::local_stats::CovarianceNormalization;
use wscec::selftest::{self, SelftestConfig};
use wscec::spd::{distance_matrix, DistanceForm};
use wscec::synth;

use bundle::{beat_stem, beats_path, read_beats, write_beats, IngestManifest, MANIFEST_FILE};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A failed command and its exit status.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn missing(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<wscec::error::Error> for Failure {
    fn from(e: wscec::error::Error) -> Self {
        match e {
            wscec::error::Error::EvaluationUnavailable(_) => Failure::missing(e.to_string()),
            other => Failure::input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "wscec",
    version,
    about = "Heartbeat classification by Wasserstein scalar curvature dispersion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a record, detect and segment beats, write a beat bundle.
    Ingest(IngestArgs),
    /// Classify a beat bundle.
    Classify(ClassifyArgs),
    /// Score a report against its reference labels.
    Evaluate(EvaluateArgs),
    /// Run the invariant checks.
    Selftest(SelftestArgs),
    /// Write the synthetic class fixtures as a beat bundle.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Wfdb,
    Csv,
}

#[derive(Args)]
struct IngestArgs {
    /// WFDB header (`.hea`, extension optional) or CSV file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "wfdb")]
    format: InputFormat,
    #[arg(long)]
    out: PathBuf,
    /// Signal index within a WFDB record, or column of a CSV file.
    #[arg(long, default_value_t = 0)]
    channel: usize,
    /// Sampling rate of CSV input in Hz.
    #[arg(long, default_value_t = 360.0)]
    fs: f64,
    /// `sample_index,label` sidecar with reference labels.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// CSV input already holds 300-sample beats back to back.
    #[arg(long)]
    already_segmented: bool,
    /// Low-pass cutoff in Hz.
    #[arg(long, default_value_t = 50.0)]
    cutoff: f64,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Window length.
    #[arg(long, default_value_t = 10)]
    l: usize,
    /// Window stride.
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Neighbourhood size.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Histogram bin width.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Histogram shift.
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long, default_value_t = 0.09)]
    epsilon: f64,
    /// nominal | corrected
    #[arg(long, default_value = "nominal")]
    cur2_form: Cur2Form,
    /// sum | mean
    #[arg(long, default_value = "sum")]
    cov_norm: CovarianceNormalization,
    /// additive | l2
    #[arg(long, default_value = "additive")]
    distance_form: DistanceForm,
    /// zscore | none
    #[arg(long, default_value = "zscore")]
    amplitude: AmplitudeNormalization,
}

impl ParamArgs {
    fn run_params(&self) -> Result<RunParams, Failure> {
        let embedding = EmbeddingParams::new(self.l, self.tau, self.d)?;
        if !(self.m > 0.0) {
            return Err(Failure::input("--m must be positive"));
        }
        Ok(RunParams {
            features: FeatureParams {
                embedding,
                k: self.k,
                covariance: self.cov_norm,
                amplitude: self.amplitude,
                bin_width: self.m,
                shift: self.s,
                cur2_form: self.cur2_form,
            },
            epsilon: self.epsilon,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Clouds,
    Dmatrix,
    Hist,
    Report,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Beat bundle directory or `beats.csv`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Source id of the standard beat inside the input; defaults to the
    /// bundled synthetic normal beat.
    #[arg(long)]
    standard_beat: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "report")]
    emit: Vec<Emit>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Classification output directory or `report.json`.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Flip the sign of one closed-form curvature term (0, 1 or 2).
    #[arg(long, hide = true)]
    mutate_term: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Beats per class.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Selftest(a) => cmd_selftest(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn to_json(value: &impl Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(Failure::io)
}

fn load_wfdb(input: &Path, channel: usize) -> Result<RawRecord, Failure> {
    let header_path = if input.extension().is_some_and(|e| e == "hea") {
        input.to_path_buf()
    } else {
        input.with_extension("hea")
    };
    let header_text = read_text(&header_path)?;
    let header = ingest::wfdb::parse_header(&header_text)?;
    let spec = header
        .signals
        .get(channel)
        .ok_or_else(|| Failure::input(format!("record has no signal {channel}")))?;
    let data_path = header_path.parent().unwrap_or(Path::new(".")).join(&spec.file_name);
    let data = fs::read(&data_path).map_err(|e| Failure::input(format!("{}: {e}", data_path.display())))?;
    Ok(ingest::read_wfdb_record(&header_text, &data, channel)?)
}

fn cmd_ingest(a: &IngestArgs) -> Result<(), Failure> {
    let source = a.input.display().to_string();
    let stem = a
        .input
        .file_stem()
        .map_or_else(|| "record".to_string(), |s| s.to_string_lossy().into_owned());
    let annotations = match &a.annotations {
        Some(p) => Some(ingest::read_annotations(&read_text(p)?)?),
        None => None,
    };
    let options = IngestOptions {
        cutoff: a.cutoff,
        ..IngestOptions::default()
    };

    let beats: Vec<Heartbeat> = if a.already_segmented {
        let InputFormat::Csv = a.format else {
            return Err(Failure::input("--already-segmented requires --format csv"));
        };
        let opts = ingest::CsvOptions {
            column: a.channel,
            ..ingest::CsvOptions::default()
        };
        let record = ingest::read_csv_record_with(&read_text(&a.input)?, a.fs, &stem, &opts)?;
        if record.len() % HEARTBEAT_LEN != 0 {
            return Err(Failure::input(format!(
                "{} samples is not a whole number of {HEARTBEAT_LEN}-sample beats",
                record.len()
            )));
        }
        record
            .samples
            .chunks(HEARTBEAT_LEN)
            .enumerate()
            .map(|(i, chunk)| {
                let label = annotations
                    .as_ref()
                    .and_then(|ann| ann.iter().find(|x| x.sample / HEARTBEAT_LEN == i).map(|x| x.label))
                    .unwrap_or(GroundTruthLabel::Unlabeled);
                Heartbeat::new(chunk.to_vec(), synth::R_INDEX, label, format!("{stem}:{i}"))
            })
            .collect::<Result<_, _>>()?
    } else {
        let record = match a.format {
            InputFormat::Wfdb => load_wfdb(&a.input, a.channel)?,
            InputFormat::Csv => {
                let opts = ingest::CsvOptions {
                    column: a.channel,
                    ..ingest::CsvOptions::default()
                };
                ingest::read_csv_record_with(&read_text(&a.input)?, a.fs, &stem, &opts)?
            }
        };
        ingest::ingest_record(&record, annotations.as_deref(), &options)?
    };

    create_dir(&a.out)?;
    write_beats(&a.out.join(bundle::BEATS_FILE), &beats)?;
    let manifest = IngestManifest {
        version: VERSION.to_string(),
        count: beats.len(),
        source,
        format: match a.format {
            InputFormat::Wfdb => "wfdb".into(),
            InputFormat::Csv => "csv".into(),
        },
        parameters: serde_json::json!({
            "channel": a.channel,
            "cutoff_hz": a.cutoff,
            "filter_order": options.filter_order,
            "already_segmented": a.already_segmented,
            "annotations": a.annotations.as_ref().map(|p| p.display().to_string()),
        }),
    };
    write(&a.out.join(MANIFEST_FILE), to_json(&manifest)?)?;
    println!("{} beats written to {}", beats.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ClassifyManifest<'a> {
    version: &'a str,
    input: String,
    count: usize,
    standard_beat: &'a str,
    b: f64,
    parameters: &'a RunParams,
    distance_form: DistanceForm,
}

fn cmd_classify(a: &ClassifyArgs) -> Result<(), Failure> {
    if let Some(jobs) = a.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(Failure::io)?;
    }
    let params = a.params.run_params()?;
    let path = beats_path(&a.input);
    let beats = read_beats(&path)?;
    let standard = match &a.standard_beat {
        Some(id) => beats
            .iter()
            .find(|b| &b.source_id == id)
            .cloned()
            .ok_or_else(|| Failure::input(format!("no beat with source id `{id}` in {}", path.display())))?,
        None => synth::standard_beat(),
    };

    let (report, features) = wscec_run_detailed(&beats, &standard, &params)?;
    create_dir(&a.out)?;
    write(&a.out.join("report.json"), to_json(&report)?)?;
    write(&a.out.join("report.csv"), report.to_csv()?)?;
    let manifest = ClassifyManifest {
        version: VERSION,
        input: path.display().to_string(),
        count: report.len(),
        standard_beat: &standard.source_id,
        b: report.b,
        parameters: &params,
        distance_form: a.params.distance_form,
    };
    write(&a.out.join(MANIFEST_FILE), to_json(&manifest)?)?;

    let wants = |e: Emit| a.emit.contains(&e);
    if wants(Emit::Clouds) || wants(Emit::Dmatrix) || wants(Emit::Hist) {
        let dir = a.out.join("beats");
        create_dir(&dir)?;
        for (i, (beat, f)) in beats.iter().zip(&features).enumerate() {
            let stem = beat_stem(i, &beat.source_id);
            let Ok(f) = f else { continue };
            if wants(Emit::Clouds) {
                write(
                    &dir.join(format!("{stem}.cloud.csv")),
                    export::cloud_csv(&f.trace.cloud),
                )?;
                write(
                    &dir.join(format!("{stem}.spd.csv")),
                    export::spd_cloud_csv(&f.trace.spd),
                )?;
                write(
                    &dir.join(format!("{stem}.curvature.csv")),
                    export::curvature_csv(&f.trace.curvature),
                )?;
            }
            if wants(Emit::Dmatrix) {
                let m = distance_matrix(&f.trace.spd, a.params.distance_form)?;
                write(&dir.join(format!("{stem}.dmatrix.csv")), export::matrix_csv(&m))?;
                write(&dir.join(format!("{stem}.dmatrix.pgm")), export::matrix_pgm(&m))?;
            }
            if wants(Emit::Hist) {
                write(
                    &dir.join(format!("{stem}.hist.csv")),
                    export::histogram_csv(&f.histogram),
                )?;
                write(
                    &dir.join(format!("{stem}.hist.svg")),
                    export::histogram_svg(&f.histogram, &beat.source_id),
                )?;
            }
        }
    }
    if wants(Emit::Report) {
        emit_scatter(&report, &a.out)?;
    }
    print_summary(&report);
    Ok(())
}

fn emit_scatter(report: &ClassificationReport, out: &Path) -> Result<(), Failure> {
    let points: Vec<_> = report
        .beats
        .iter()
        .filter_map(|r| r.dispersion.map(|p| (p, r.label)))
        .collect();
    let mut ellipses = Vec::new();
    for group in DomainGroup::ALL {
        let members: Vec<_> = report
            .beats
            .iter()
            .filter(|r| r.domain == group)
            .filter_map(|r| r.dispersion)
            .collect();
        if members.len() >= 3 {
            match confidence_ellipse(&members, 0.95, group.name()) {
                Ok(e) => ellipses.push(e),
                Err(e) => log::info!("no ellipse for {group}: {e}"),
            }
        }
    }
    write(&out.join("ellipses.json"), to_json(&ellipses)?)?;
    write(
        &out.join("scatter.svg"),
        export::scatter_svg(&points, &report.partition(), &ellipses, "dispersion plane"),
    )
}

fn print_summary(report: &ClassificationReport) {
    println!("b = {}", report.b);
    for t in &report.tallies {
        println!("{:<18} {}", t.domain.name(), t.count);
    }
    let gaps = report.beats.iter().filter(|r| r.boundary_gap).count();
    if gaps > 0 {
        println!("{gaps} beat(s) with cur1 = 10 routed to Unclassified");
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let (report_path, dir) = if a.input.is_dir() {
        (a.input.join("report.json"), a.input.clone())
    } else {
        (
            a.input.clone(),
            a.input.parent().unwrap_or(Path::new(".")).to_path_buf(),
        )
    };
    let text =
        fs::read_to_string(&report_path).map_err(|e| Failure::missing(format!("{}: {e}", report_path.display())))?;
    let report: ClassificationReport =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", report_path.display())))?;
    let table = evaluate(&report)?;
    let out = a.out.clone().unwrap_or(dir);
    create_dir(&out)?;
    let csv = table.to_csv();
    write(&out.join("tpr_nrr.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_selftest(a: &SelftestArgs) -> Result<(), Failure> {
    let report = selftest::run(&SelftestConfig {
        seed: a.seed,
        mutation: a.mutate_term,
    });
    for c in &report.checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.all_passed() {
        println!("all {} checks passed (seed {})", report.checks.len(), report.seed);
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "self-test failed".into(),
        })
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Failure> {
    let beats: Vec<Heartbeat> = (0..a.count as u64)
        .flat_map(|i| synth::class_fixtures(a.seed + i))
        .collect();
    create_dir(&a.out)?;
    write_beats(&a.out.join(bundle::BEATS_FILE), &beats)?;
    let manifest = IngestManifest {
        version: VERSION.to_string(),
        count: beats.len(),
        source: "synthetic".into(),
        format: "synthetic".into(),
        parameters: serde_json::json!({ "seed": a.seed, "per_class": a.count }),
    };
    write(&a.out.join(MANIFEST_FILE), to_json(&manifest)?)?;
    println!("{} beats written to {}", beats.len(), a.out.display());
    Ok(())
}
