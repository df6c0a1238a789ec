//! Conversion between annotation formats and the directory-level reading
//! and writing that goes with it.
//!
//! Per-image formats (roLabelImg, VOC, YOLO) read and write one file per
//! image; CSV holds the whole set in a single file. Converting oriented
//! boxes to the horizontal VOC format replaces each box with its
//! axis-aligned envelope. YOLO label files carry no image size or name, so
//! each `<stem>.txt` is written together with a `<stem>.size` sidecar
//! holding `width height image_name`; reading falls back to the file stem
//! and an explicit size when the sidecar is absent.

use super::{
    parse_csv_records, parse_rolabelimg, parse_voc, parse_yolo, serialize_csv_records,
    serialize_rolabelimg, serialize_voc, serialize_yolo, Annotation, AnnotatedObject,
    AnnotationFormat, AnnotationSet, ParseError, ParseMode, Violation, ViolationKind,
};
use crate::angle::AngleScheme;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{}: no image size available (no .size sidecar and no explicit size)", path.display())]
    MissingImageSize { path: PathBuf },
}

/// Replaces every box by its axis-aligned envelope at angle zero.
pub fn to_horizontal(a: &Annotation) -> Annotation {
    Annotation {
        image_name: a.image_name.clone(),
        image_width: a.image_width,
        image_height: a.image_height,
        objects: a
            .objects
            .iter()
            .map(|o| AnnotatedObject {
                class: o.class,
                bbox: o.bbox.envelope().to_oriented(),
            })
            .collect(),
    }
}

/// In-memory format conversion. Targets that keep orientation pass boxes
/// through unchanged; the horizontal VOC target takes envelopes. CSV
/// quantization happens at serialization time, not here.
pub fn convert_set(set: &AnnotationSet, target: AnnotationFormat) -> AnnotationSet {
    let annotations = match target {
        AnnotationFormat::Voc => set.annotations.iter().map(to_horizontal).collect(),
        _ => set.annotations.clone(),
    };
    AnnotationSet {
        annotations,
        source_format: target,
    }
}

/// A loaded set plus everything that was skipped along the way.
#[derive(Debug)]
pub struct LoadedSet {
    pub set: AnnotationSet,
    pub issues: Vec<Violation>,
    pub files_read: usize,
}

/// Reads annotations from a file or directory.
///
/// Directories are scanned (non-recursively) for the format's extension in
/// sorted order, so loads are deterministic. In lenient mode a file that
/// fails to parse becomes an issue and is skipped; in strict mode it fails
/// the load.
pub fn load_set(
    path: &Path,
    format: AnnotationFormat,
    mode: ParseMode,
    fallback_size: Option<(u32, u32)>,
) -> Result<LoadedSet, ConvertError> {
    let files = discover_files(path, format)?;
    let mut annotations = Vec::new();
    let mut issues = Vec::new();
    let mut files_read = 0usize;
    for file in &files {
        match load_one(file, format, mode, fallback_size) {
            Ok((mut anns, mut skipped)) => {
                files_read += 1;
                annotations.append(&mut anns);
                issues.append(&mut skipped);
            }
            Err(e) => match mode {
                ParseMode::Strict => return Err(e),
                ParseMode::Lenient => issues.push(Violation {
                    kind: ViolationKind::Malformed,
                    location: file.display().to_string(),
                    message: e.to_string(),
                }),
            },
        }
    }
    Ok(LoadedSet {
        set: AnnotationSet {
            annotations,
            source_format: format,
        },
        issues,
        files_read,
    })
}

fn discover_files(path: &Path, format: AnnotationFormat) -> Result<Vec<PathBuf>, ConvertError> {
    let io_err = |source| ConvertError::Io {
        path: path.to_path_buf(),
        source,
    };
    let meta = std::fs::metadata(path).map_err(io_err)?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(io_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case(format.extension()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_one(
    file: &Path,
    format: AnnotationFormat,
    mode: ParseMode,
    fallback_size: Option<(u32, u32)>,
) -> Result<(Vec<Annotation>, Vec<Violation>), ConvertError> {
    let text = std::fs::read_to_string(file).map_err(|source| ConvertError::Io {
        path: file.to_path_buf(),
        source,
    })?;
    let parse_err = |source| ConvertError::Parse {
        path: file.to_path_buf(),
        source,
    };
    match format {
        AnnotationFormat::RoLabelImg => {
            let parsed = parse_rolabelimg(&text, mode).map_err(parse_err)?;
            Ok((vec![parsed.annotation], parsed.skipped))
        }
        AnnotationFormat::Voc => {
            let parsed = parse_voc(&text, mode).map_err(parse_err)?;
            Ok((vec![parsed.annotation], parsed.skipped))
        }
        AnnotationFormat::Yolo => {
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let sidecar = file.with_extension("size");
            let (w, h, name) = match std::fs::read_to_string(&sidecar) {
                Ok(s) => parse_sidecar(&s, &sidecar)?,
                Err(_) => {
                    let (w, h) = fallback_size
                        .ok_or_else(|| ConvertError::MissingImageSize {
                            path: file.to_path_buf(),
                        })?;
                    (w, h, None)
                }
            };
            let image_name = name.unwrap_or(stem);
            let parsed = parse_yolo(&image_name, w, h, &text, mode).map_err(parse_err)?;
            Ok((vec![parsed.annotation], parsed.skipped))
        }
        AnnotationFormat::Csv => {
            let parsed = parse_csv_records(&text, mode).map_err(parse_err)?;
            Ok((parsed.annotations, parsed.skipped))
        }
    }
}

fn parse_sidecar(text: &str, path: &Path) -> Result<(u32, u32, Option<String>), ConvertError> {
    let line = text.lines().next().unwrap_or("").trim_end();
    let mut it = line.splitn(3, ' ');
    let dim = |tok: Option<&str>| tok.and_then(|t| t.parse::<u32>().ok()).filter(|&v| v > 0);
    match (dim(it.next()), dim(it.next())) {
        (Some(w), Some(h)) => Ok((w, h, it.next().map(|s| s.to_string()))),
        _ => Err(ConvertError::Parse {
            path: path.to_path_buf(),
            source: ParseError::BadImageSize {
                width: 0,
                height: 0,
            },
        }),
    }
}

/// Files written by [`write_set`] plus per-annotation problems (currently
/// only output name collisions).
#[derive(Debug)]
pub struct WriteReport {
    pub written: Vec<PathBuf>,
    pub issues: Vec<Violation>,
}

/// Serializes a set into `out_dir` under `target` format. `scheme` selects
/// the angle binning for CSV output and is ignored elsewhere.
pub fn write_set(
    set: &AnnotationSet,
    target: AnnotationFormat,
    out_dir: &Path,
    scheme: AngleScheme,
) -> Result<WriteReport, ConvertError> {
    std::fs::create_dir_all(out_dir).map_err(|source| ConvertError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let write = |path: &Path, contents: &str| -> Result<(), ConvertError> {
        std::fs::write(path, contents).map_err(|source| ConvertError::Io {
            path: path.to_path_buf(),
            source,
        })
    };

    let converted = convert_set(set, target);
    let mut report = WriteReport {
        written: Vec::new(),
        issues: Vec::new(),
    };

    if target == AnnotationFormat::Csv {
        for a in &converted.annotations {
            if a.objects.is_empty() {
                report.issues.push(Violation {
                    kind: ViolationKind::Unrepresentable,
                    location: a.image_name.clone(),
                    message: "csv carries one row per object; an image with no objects is dropped"
                        .to_string(),
                });
            }
        }
        let path = out_dir.join("annotations.csv");
        write(&path, &serialize_csv_records(&converted.annotations, scheme))?;
        report.written.push(path);
        return Ok(report);
    }

    let mut used: BTreeSet<String> = BTreeSet::new();
    for a in &converted.annotations {
        let stem = output_stem(&a.image_name);
        if !used.insert(stem.clone()) {
            report.issues.push(Violation {
                kind: ViolationKind::DuplicateImageName,
                location: a.image_name.clone(),
                message: format!("output stem {stem:?} already written, skipping"),
            });
            continue;
        }
        let path = out_dir.join(format!("{stem}.{}", target.extension()));
        match target {
            AnnotationFormat::RoLabelImg => write(&path, &serialize_rolabelimg(a))?,
            AnnotationFormat::Voc => write(&path, &serialize_voc(a))?,
            AnnotationFormat::Yolo => {
                write(&path, &serialize_yolo(a))?;
                let sidecar = out_dir.join(format!("{stem}.size"));
                write(
                    &sidecar,
                    &format!("{} {} {}\n", a.image_width, a.image_height, a.image_name),
                )?;
                report.written.push(sidecar);
            }
            AnnotationFormat::Csv => unreachable!("handled above"),
        }
        report.written.push(path);
    }
    report.written.sort();
    Ok(report)
}

/// File stem for an image name: the extension-less last path component, so
/// names can never escape the output directory. Collisions between distinct
/// image names are caught by the caller.
fn output_stem(image_name: &str) -> String {
    let stem = Path::new(image_name)
        .file_stem()
        .map(|s| s.to_string_lossy().replace(['/', '\\'], "_"))
        .unwrap_or_default();
    if stem.is_empty() {
        "unnamed".to_string()
    } else {
        stem
    }
}
