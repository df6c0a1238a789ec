//! Detection evaluation: greedy matching, precision/recall curves, average
//! precision, multi-threshold mAP reports, and rotated NMS.
//!
//! Matching follows the usual greedy protocol: detections are processed in
//! descending score order (ties keep input order) and each one claims the
//! unmatched same-class ground truth it overlaps most, so the assignment
//! does not depend on the IoU threshold. A claimed pair is a true positive
//! when its IoU reaches the threshold; lowering the threshold can therefore
//! only promote detections, which keeps mAP monotone over thresholds.

use crate::annotation::{Annotation, AnnotationSet};
use crate::geometry::{horizontal_iou, rotated_iou, OrientedBox};
use crate::targets::WeaponClass;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection score {score} is not in [0, 1]")]
    BadScore { score: f64 },
    #[error("detections may not be labeled background")]
    BackgroundClass,
    #[error("iou threshold {value} is not in (0, 1]")]
    BadThreshold { value: f64 },
    #[error("detection references image {name:?} which is not in the ground truth")]
    UnknownImage { name: String },
    #[error("detections line {line}: {msg}")]
    Line { line: usize, msg: String },
}

/// Which overlap measure a run uses: rotated boxes, or their axis-aligned
/// envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouMode {
    Rotated,
    Horizontal,
}

impl IouMode {
    pub fn tag(self) -> &'static str {
        match self {
            IouMode::Rotated => "rotated",
            IouMode::Horizontal => "horizontal",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "rotated" => Some(IouMode::Rotated),
            "horizontal" => Some(IouMode::Horizontal),
            _ => None,
        }
    }

    fn iou(self, a: &OrientedBox, b: &OrientedBox) -> f64 {
        match self {
            IouMode::Rotated => rotated_iou(a, b),
            IouMode::Horizontal => horizontal_iou(&a.envelope(), &b.envelope()),
        }
    }
}

/// One scored detection on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    image_name: String,
    class: WeaponClass,
    score: f64,
    bbox: OrientedBox,
}

impl Detection {
    pub fn new(
        image_name: impl Into<String>,
        class: WeaponClass,
        score: f64,
        bbox: OrientedBox,
    ) -> Result<Self, EvalError> {
        if class == WeaponClass::Background {
            return Err(EvalError::BackgroundClass);
        }
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(EvalError::BadScore { score });
        }
        Ok(Detection {
            image_name: image_name.into(),
            class,
            score,
            bbox,
        })
    }

    pub fn image_name(&self) -> &str {
        &self.image_name
    }

    pub fn class(&self) -> WeaponClass {
        self.class
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn bbox(&self) -> &OrientedBox {
        &self.bbox
    }
}

/// Wire format for one detections-file line.
#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    image_name: String,
    class: WeaponClass,
    score: f64,
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
}

/// Parses line-oriented JSON detections; blank lines are ignored.
pub fn parse_detections_jsonl(text: &str) -> Result<Vec<Detection>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let rec: DetectionRecord =
            serde_json::from_str(line).map_err(|e| EvalError::Line {
                line: line_no,
                msg: e.to_string(),
            })?;
        let bbox = OrientedBox::new(rec.cx, rec.cy, rec.w, rec.h, rec.theta_deg).map_err(|e| {
            EvalError::Line {
                line: line_no,
                msg: e.to_string(),
            }
        })?;
        let det =
            Detection::new(rec.image_name, rec.class, rec.score, bbox).map_err(|e| {
                EvalError::Line {
                    line: line_no,
                    msg: e.to_string(),
                }
            })?;
        out.push(det);
    }
    Ok(out)
}

pub fn serialize_detections_jsonl(dets: &[Detection]) -> String {
    let mut out = String::new();
    for d in dets {
        let rec = DetectionRecord {
            image_name: d.image_name.clone(),
            class: d.class,
            score: d.score,
            cx: d.bbox.cx(),
            cy: d.bbox.cy(),
            w: d.bbox.w(),
            h: d.bbox.h(),
            theta_deg: d.bbox.theta_deg(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Outcome for one detection, in processing (score-descending) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMatch {
    /// Index into the input detection slice.
    pub det_index: usize,
    /// Ground truth this detection claimed, if it overlapped any.
    pub gt_index: Option<usize>,
    /// IoU with the claimed ground truth, 0 without one.
    pub iou: f64,
    pub true_positive: bool,
}

/// Greedily matches one image's detections against its ground truth.
///
/// Every detection must carry the annotation's image name. Each detection
/// claims the unmatched same-class ground truth of highest positive IoU
/// (ties to the lower index) and is a true positive when that IoU reaches
/// `iou_threshold`.
pub fn match_detections(
    dets: &[Detection],
    gt: &Annotation,
    iou_threshold: f64,
    mode: IouMode,
) -> Result<Vec<DetectionMatch>, EvalError> {
    check_threshold(iou_threshold)?;
    for d in dets {
        if d.image_name != gt.image_name {
            return Err(EvalError::UnknownImage {
                name: d.image_name.clone(),
            });
        }
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).expect("finite scores"));

    let mut gt_taken = vec![false; gt.objects.len()];
    let mut out = Vec::with_capacity(dets.len());
    for det_index in order {
        let det = &dets[det_index];
        let mut best_iou = 0.0;
        let mut best_gt = None;
        for (gi, obj) in gt.objects.iter().enumerate() {
            if gt_taken[gi] || obj.class != det.class {
                continue;
            }
            let iou = mode.iou(&det.bbox, &obj.bbox);
            if iou > best_iou {
                best_iou = iou;
                best_gt = Some(gi);
            }
        }
        if let Some(gi) = best_gt {
            gt_taken[gi] = true;
        }
        out.push(DetectionMatch {
            det_index,
            gt_index: best_gt,
            iou: best_iou,
            true_positive: best_gt.is_some() && best_iou >= iou_threshold,
        });
    }
    Ok(out)
}

/// One point of a precision/recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Cumulative precision/recall over score-ordered true-positive flags.
/// With no ground truth the recall stays 0.
pub fn precision_recall(tp_flags: &[bool], num_gt: usize) -> Vec<PrPoint> {
    let mut tp = 0usize;
    let mut out = Vec::with_capacity(tp_flags.len());
    for (i, &flag) in tp_flags.iter().enumerate() {
        if flag {
            tp += 1;
        }
        out.push(PrPoint {
            recall: if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 },
            precision: tp as f64 / (i + 1) as f64,
        });
    }
    out
}

/// Area under the monotone (non-increasing) precision envelope across all
/// recall points.
pub fn average_precision(curve: &[PrPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    // envelope from the right, then sum rectangle areas between distinct
    // recall values
    let mut env: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for i in (0..env.len() - 1).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, e) in curve.iter().zip(env) {
        ap += (p.recall - prev_recall) * e;
        prev_recall = p.recall;
    }
    ap
}

/// Per-class metrics at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEval {
    pub class: WeaponClass,
    pub ap: f64,
    pub num_gt: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Evaluation result at one IoU threshold. Classes without any ground
/// truth are left out entirely and do not dilute the mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub per_class: Vec<ClassEval>,
    pub map: f64,
}

/// Evaluates detections against a ground-truth set at each threshold.
pub fn evaluate(
    dets: &[Detection],
    gts: &AnnotationSet,
    thresholds: &[f64],
    mode: IouMode,
) -> Result<Vec<EvalReport>, EvalError> {
    for &t in thresholds {
        check_threshold(t)?;
    }
    let mut by_image: BTreeMap<&str, &Annotation> = BTreeMap::new();
    for a in &gts.annotations {
        by_image.entry(a.image_name.as_str()).or_insert(a);
    }
    let mut dets_by_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        if !by_image.contains_key(d.image_name.as_str()) {
            return Err(EvalError::UnknownImage {
                name: d.image_name.clone(),
            });
        }
        dets_by_image.entry(d.image_name.as_str()).or_default().push(i);
    }

    let classes = [WeaponClass::Gun, WeaponClass::Pistol];
    let gt_count = |class: WeaponClass| {
        gts.annotations
            .iter()
            .map(|a| a.objects.iter().filter(|o| o.class == class).count())
            .sum::<usize>()
    };

    let mut reports = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        // matching is per image; flags then pool into one global curve
        let mut flagged: Vec<(usize, bool)> = Vec::with_capacity(dets.len());
        for (name, det_indices) in &dets_by_image {
            let image_dets: Vec<Detection> =
                det_indices.iter().map(|&i| dets[i].clone()).collect();
            let matches = match_detections(&image_dets, by_image[name], threshold, mode)?;
            for m in matches {
                flagged.push((det_indices[m.det_index], m.true_positive));
            }
        }

        let mut per_class = Vec::new();
        for class in classes {
            let num_gt = gt_count(class);
            if num_gt == 0 {
                continue;
            }
            let mut class_rows: Vec<(usize, bool)> = flagged
                .iter()
                .copied()
                .filter(|&(i, _)| dets[i].class == class)
                .collect();
            class_rows.sort_by(|&(ia, _), &(ib, _)| {
                dets[ib]
                    .score
                    .partial_cmp(&dets[ia].score)
                    .expect("finite scores")
                    .then(ia.cmp(&ib))
            });
            let tp_flags: Vec<bool> = class_rows.iter().map(|&(_, tp)| tp).collect();
            let curve = precision_recall(&tp_flags, num_gt);
            let ap = average_precision(&curve);
            let tp = tp_flags.iter().filter(|&&f| f).count();
            per_class.push(ClassEval {
                class,
                ap,
                num_gt,
                true_positives: tp,
                false_positives: tp_flags.len() - tp,
                false_negatives: num_gt - tp,
            });
        }
        let map = if per_class.is_empty() {
            0.0
        } else {
            per_class.iter().map(|c| c.ap).sum::<f64>() / per_class.len() as f64
        };
        reports.push(EvalReport {
            iou_threshold: threshold,
            per_class,
            map,
        });
    }
    Ok(reports)
}

/// Greedy non-maximum suppression with rotated IoU, independently per
/// class and image. Kept detections come back sorted by score descending
/// (ties keep input order).
pub fn rotated_nms(dets: &[Detection], iou_threshold: f64) -> Result<Vec<Detection>, EvalError> {
    check_threshold(iou_threshold)?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).expect("finite scores"));

    let mut suppressed = vec![false; dets.len()];
    let mut kept = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(dets[i].clone());
        for &j in &order[rank + 1..] {
            if suppressed[j]
                || dets[j].class != dets[i].class
                || dets[j].image_name != dets[i].image_name
            {
                continue;
            }
            if rotated_iou(&dets[i].bbox, &dets[j].bbox) >= iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    Ok(kept)
}

fn check_threshold(t: f64) -> Result<(), EvalError> {
    if t.is_finite() && 0.0 < t && t <= 1.0 {
        Ok(())
    } else {
        Err(EvalError::BadThreshold { value: t })
    }
}
