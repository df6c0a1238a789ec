//! Command-line front end for the oriented bounding box toolkit.
//!
//! Diagnostics go to stderr and data to stdout or files, so output can be
//! piped. Identical inputs and flags always produce byte-identical output.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use obbkit::angle::{bin_angle, representative_angle, wrap_angle, AngleScheme};
use obbkit::annotation::convert::{load_set, write_set, LoadedSet};
use obbkit::annotation::{validate_set, AnnotationFormat, ParseMode, ValidationReport, Violation};
use obbkit::eval::{
    evaluate, parse_detections_jsonl, rotated_nms, serialize_detections_jsonl, Detection,
    EvalReport, IouMode,
};
use obbkit::stats::{split, summarize, DatasetSummary};
use obbkit::targets::WeaponClass;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "obbkit", version, about = "Oriented bounding box dataset toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert annotations between formats
    Convert(ConvertArgs),
    /// Check annotations for rule violations
    Validate(ValidateArgs),
    /// Score detections against ground truth at one or more IoU thresholds
    Evaluate(EvaluateArgs),
    /// Summarize class counts, angle histogram, and objects per image
    Stats(StatsArgs),
    /// Apply rotated non-maximum suppression to a detections file
    Nms(NmsArgs),
    /// Map angles in degrees to their angle classes
    BinAngles(BinAnglesArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Rolabelimg,
    Voc,
    Yolo,
    Csv,
}

impl From<FormatArg> for AnnotationFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Rolabelimg => AnnotationFormat::RoLabelImg,
            FormatArg::Voc => AnnotationFormat::Voc,
            FormatArg::Yolo => AnnotationFormat::Yolo,
            FormatArg::Csv => AnnotationFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Model,
    Dataset,
}

impl From<SchemeArg> for AngleScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Model => AngleScheme::Model,
            SchemeArg::Dataset => AngleScheme::Dataset,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IouModeArg {
    Rotated,
    Horizontal,
}

impl From<IouModeArg> for IouMode {
    fn from(m: IouModeArg) -> Self {
        match m {
            IouModeArg::Rotated => IouMode::Rotated,
            IouModeArg::Horizontal => IouMode::Horizontal,
        }
    }
}

/// Flags shared by every subcommand that reads annotations.
#[derive(Args)]
struct InputArgs {
    /// Annotation file or directory
    #[arg(long)]
    input: PathBuf,
    /// Format of the input annotations
    #[arg(long, value_enum)]
    in_format: FormatArg,
    /// Fail on the first problem instead of skipping and reporting
    #[arg(long)]
    strict: bool,
    /// Fallback image width for YOLO inputs without a size sidecar
    #[arg(long)]
    image_width: Option<u32>,
    /// Fallback image height for YOLO inputs without a size sidecar
    #[arg(long)]
    image_height: Option<u32>,
}

impl InputArgs {
    fn mode(&self) -> ParseMode {
        if self.strict {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        }
    }

    fn fallback_size(&self) -> Result<Option<(u32, u32)>> {
        match (self.image_width, self.image_height) {
            (Some(w), Some(h)) => Ok(Some((w, h))),
            (None, None) => Ok(None),
            _ => bail!("--image-width and --image-height must be given together"),
        }
    }

    fn load(&self) -> Result<LoadedSet> {
        let loaded = load_set(
            &self.input,
            self.in_format.into(),
            self.mode(),
            self.fallback_size()?,
        )
        .with_context(|| format!("reading {}", self.input.display()))?;
        Ok(loaded)
    }
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory for the converted annotations
    #[arg(long)]
    output: PathBuf,
    /// Format to write
    #[arg(long, value_enum)]
    out_format: FormatArg,
    /// Angle-class scheme used when writing CSV
    #[arg(long, value_enum, default_value = "model")]
    angle_scheme: SchemeArg,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground truth annotation file or directory
    #[arg(long)]
    ground_truth: PathBuf,
    /// Format of the ground truth annotations
    #[arg(long, value_enum)]
    in_format: FormatArg,
    /// Detections file, one JSON record per line
    #[arg(long)]
    detections: PathBuf,
    /// IoU threshold in (0, 1]; repeat for several (default 0.25 0.5 0.75)
    #[arg(long = "iou", value_name = "THRESHOLD")]
    iou: Vec<f64>,
    /// Overlap measure
    #[arg(long, value_enum, default_value = "rotated")]
    iou_mode: IouModeArg,
    /// Also write the full report as JSON to this path
    #[arg(long)]
    json: Option<PathBuf>,
    /// Fallback image width for YOLO ground truth without a size sidecar
    #[arg(long)]
    image_width: Option<u32>,
    /// Fallback image height for YOLO ground truth without a size sidecar
    #[arg(long)]
    image_height: Option<u32>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Angle-class scheme for the histogram
    #[arg(long, value_enum, default_value = "model")]
    angle_scheme: SchemeArg,
    /// Write chart-ready label,count rows as CSV to this path
    #[arg(long)]
    chart_csv: Option<PathBuf>,
    /// Also split into train/test halves with this train fraction in [0, 1]
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Seed for the split shuffle
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NmsArgs {
    /// Detections file, one JSON record per line
    #[arg(long)]
    detections: PathBuf,
    /// Suppression IoU threshold in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    nms_iou: f64,
    /// Output file; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BinAnglesArgs {
    /// Angles in degrees
    #[arg(value_name = "DEGREES", required = true, num_args = 1..)]
    angles: Vec<f64>,
    /// Angle-class scheme
    #[arg(long, value_enum, default_value = "model")]
    angle_scheme: SchemeArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Convert(args) => cmd_convert(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Nms(args) => cmd_nms(args),
        Command::BinAngles(args) => cmd_bin_angles(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn report_issues(issues: &[Violation]) {
    for issue in issues {
        eprintln!("{issue}");
    }
}

fn cmd_convert(args: ConvertArgs) -> Result<ExitCode> {
    let loaded = args.input.load()?;
    if loaded.files_read == 0 && loaded.issues.is_empty() {
        eprintln!("warning: no {} files under {}", AnnotationFormat::from(args.input.in_format).tag(), args.input.input.display());
        println!("converted 0 annotation(s) from 0 file(s); wrote 0 file(s)");
        return Ok(ExitCode::SUCCESS);
    }
    let report = write_set(
        &loaded.set,
        args.out_format.into(),
        &args.output,
        args.angle_scheme.into(),
    )
    .with_context(|| format!("writing {}", args.output.display()))?;
    report_issues(&loaded.issues);
    report_issues(&report.issues);
    println!(
        "converted {} annotation(s) from {} file(s); wrote {} file(s)",
        loaded.set.annotations.len(),
        loaded.files_read,
        report.written.len()
    );
    if loaded.issues.is_empty() && report.issues.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let loaded = args.input.load()?;
    let mut report = ValidationReport::default();
    for issue in loaded.issues {
        report.push(issue);
    }
    report.merge(validate_set(&loaded.set));
    print!("{report}");
    println!(
        "checked {} annotation(s) from {} file(s): {} violation(s)",
        loaded.set.annotations.len(),
        loaded.files_read,
        report.violations.len()
    );
    if report.is_clean() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let dets = parse_detections_jsonl(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(dets)
}

/// Renders the per-class AP table, thresholds across, percentages down.
fn render_eval_table(reports: &[EvalReport]) -> String {
    let classes: Vec<WeaponClass> = reports
        .first()
        .map(|r| r.per_class.iter().map(|c| c.class).collect())
        .unwrap_or_default();
    let mut out = String::new();
    out.push_str(&format!("{:<10}", "class"));
    for r in reports {
        out.push_str(&format!("  {:>9}", format!("ap@{}", r.iou_threshold)));
    }
    out.push('\n');
    for (i, class) in classes.iter().enumerate() {
        out.push_str(&format!("{:<10}", class.name().to_ascii_lowercase()));
        for r in reports {
            let _ = write!(out, "  {:>9.2}", r.per_class[i].ap * 100.0);
        }
        out.push('\n');
    }
    out.push_str(&format!("{:<10}", "mAP"));
    for r in reports {
        let _ = write!(out, "  {:>9.2}", r.map * 100.0);
    }
    out.push('\n');
    out
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let fallback = match (args.image_width, args.image_height) {
        (Some(w), Some(h)) => Some((w, h)),
        (None, None) => None,
        _ => bail!("--image-width and --image-height must be given together"),
    };
    // evaluation is only meaningful over fully parsed ground truth
    let loaded = load_set(
        &args.ground_truth,
        args.in_format.into(),
        ParseMode::Strict,
        fallback,
    )
    .with_context(|| format!("reading {}", args.ground_truth.display()))?;
    let dets = read_detections(&args.detections)?;
    let thresholds = if args.iou.is_empty() {
        vec![0.25, 0.5, 0.75]
    } else {
        args.iou.clone()
    };
    let reports = evaluate(&dets, &loaded.set, &thresholds, args.iou_mode.into())?;
    print!("{}", render_eval_table(&reports));
    if let Some(path) = &args.json {
        let mut json = serde_json::to_string_pretty(&reports)?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn chart_csv(summary: &DatasetSummary) -> String {
    let mut out = String::from("label,count\n");
    let _ = writeln!(out, "gun,{}", summary.gun_count);
    let _ = writeln!(out, "pistol,{}", summary.pistol_count);
    for (i, n) in summary.angle_histogram.iter().enumerate() {
        let _ = writeln!(out, "angle_{i},{n}");
    }
    out
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    let loaded = args.input.load()?;
    report_issues(&loaded.issues);
    let scheme: AngleScheme = args.angle_scheme.into();
    let summary = summarize(&loaded.set, scheme);
    eprint!("{summary}");

    let json = match args.split_fraction {
        None => serde_json::to_string_pretty(&summary)?,
        Some(f) => {
            if !(0.0..=1.0).contains(&f) {
                bail!("--split-fraction {f} is not in [0, 1]");
            }
            let (train, test) = split(&loaded.set, f, args.seed);
            let combined = serde_json::json!({
                "all": summary,
                "train": summarize(&train, scheme),
                "test": summarize(&test, scheme),
            });
            serde_json::to_string_pretty(&combined)?
        }
    };
    println!("{json}");

    if let Some(path) = &args.chart_csv {
        std::fs::write(path, chart_csv(&summary))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if loaded.issues.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_nms(args: NmsArgs) -> Result<ExitCode> {
    let dets = read_detections(&args.detections)?;
    let kept = rotated_nms(&dets, args.nms_iou)?;
    eprintln!("kept {} of {} detection(s)", kept.len(), dets.len());
    let text = serialize_detections_jsonl(&kept);
    match &args.output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bin_angles(args: BinAnglesArgs) -> Result<ExitCode> {
    let scheme: AngleScheme = args.angle_scheme.into();
    println!("theta_deg,wrapped_deg,angle_class,representative_deg");
    for theta in args.angles {
        if !theta.is_finite() {
            bail!("angle {theta} is not finite");
        }
        let class = bin_angle(theta, scheme);
        println!(
            "{theta},{},{},{}",
            wrap_angle(theta),
            class.index,
            representative_angle(class)
        );
    }
    Ok(ExitCode::SUCCESS)
}
