//! Proposal labeling, box regression offsets, and the small numeric kernels
//! used by the detection losses.

use crate::geometry::{horizontal_iou, GeometryError, HorizontalBox};
use serde::{Deserialize, Serialize};

/// Overlap at which a proposal is labeled positive (inclusive).
pub const POSITIVE_OVERLAP: f64 = 0.7;

/// Default cap for [`select_top_proposals`].
pub const DEFAULT_PROPOSAL_CAP: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeaponClass {
    Gun,
    Pistol,
    Background,
}

impl WeaponClass {
    /// Case-insensitive lookup by the names used in annotation files.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "gun" => Some(WeaponClass::Gun),
            "pistol" => Some(WeaponClass::Pistol),
            "background" => Some(WeaponClass::Background),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeaponClass::Gun => "gun",
            WeaponClass::Pistol => "pistol",
            WeaponClass::Background => "background",
        }
    }
}

impl std::fmt::Display for WeaponClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A region proposal after matching against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProposal {
    pub proposal: HorizontalBox,
    pub label: WeaponClass,
    /// Best IoU against any ground truth box, 0 when there are none.
    pub overlap: f64,
    /// Index into the ground-truth list; present iff the label is positive.
    pub matched_gt_index: Option<usize>,
}

/// Labels a proposal against ground truth boxes.
///
/// The proposal takes the class of its highest-IoU ground truth when that
/// IoU reaches [`POSITIVE_OVERLAP`] and is background otherwise. IoU ties
/// resolve to the lower ground-truth index.
pub fn rpn_label(proposal: HorizontalBox, gts: &[(WeaponClass, HorizontalBox)]) -> LabeledProposal {
    let mut best = 0.0;
    let mut best_idx = None;
    for (i, (_, gt)) in gts.iter().enumerate() {
        let iou = horizontal_iou(&proposal, gt);
        if iou > best {
            best = iou;
            best_idx = Some(i);
        }
    }
    if best >= POSITIVE_OVERLAP {
        let idx = best_idx.expect("positive overlap implies a match");
        LabeledProposal {
            proposal,
            label: gts[idx].0,
            overlap: best,
            matched_gt_index: Some(idx),
        }
    } else {
        LabeledProposal {
            proposal,
            label: WeaponClass::Background,
            overlap: best,
            matched_gt_index: None,
        }
    }
}

/// Keeps the proposals whose overlap strictly exceeds [`POSITIVE_OVERLAP`],
/// ranked by overlap descending (ties keep input order), capped at `k`.
pub fn select_top_proposals(proposals: &[LabeledProposal], k: usize) -> Vec<LabeledProposal> {
    let mut kept: Vec<LabeledProposal> = proposals
        .iter()
        .filter(|p| p.overlap > POSITIVE_OVERLAP)
        .cloned()
        .collect();
    // stable sort preserves input order among equal overlaps
    kept.sort_by(|a, b| b.overlap.partial_cmp(&a.overlap).expect("finite overlaps"));
    kept.truncate(k);
    kept
}

/// Normalized regression offsets between an anchor and a target box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxOffsets {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
}

/// Encodes `gt` relative to `anchor`: center deltas normalized by the anchor
/// size, log size ratios.
pub fn encode_box_offsets(anchor: &HorizontalBox, gt: &HorizontalBox) -> BoxOffsets {
    let ac = anchor.center();
    let gc = gt.center();
    BoxOffsets {
        tx: (gc.x - ac.x) / anchor.width(),
        ty: (gc.y - ac.y) / anchor.height(),
        tw: (gt.width() / anchor.width()).ln(),
        th: (gt.height() / anchor.height()).ln(),
    }
}

/// Applies offsets to an anchor. Fails when the decoded size degenerates
/// (log-ratio underflow to zero width or overflow to infinity).
pub fn decode_box_offsets(
    anchor: &HorizontalBox,
    offsets: &BoxOffsets,
) -> Result<HorizontalBox, GeometryError> {
    if ![offsets.tx, offsets.ty, offsets.tw, offsets.th]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(GeometryError::NonFinite);
    }
    let ac = anchor.center();
    let cx = ac.x + offsets.tx * anchor.width();
    let cy = ac.y + offsets.ty * anchor.height();
    let w = anchor.width() * offsets.tw.exp();
    let h = anchor.height() * offsets.th.exp();
    HorizontalBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
}

/// Smooth L1: quadratic inside the unit interval, linear outside.
pub fn smooth_l1(y: f64) -> f64 {
    if y.abs() < 1.0 {
        0.5 * y * y
    } else {
        y.abs() - 0.5
    }
}

/// Sum of [`smooth_l1`] over the four offset components of the difference.
pub fn box_regression_loss(predicted: &BoxOffsets, target: &BoxOffsets) -> f64 {
    smooth_l1(predicted.tx - target.tx)
        + smooth_l1(predicted.ty - target.ty)
        + smooth_l1(predicted.tw - target.tw)
        + smooth_l1(predicted.th - target.th)
}

/// Numerically stable softmax; subtracts the max logit before
/// exponentiating, so logits around 1000 neither overflow nor lose the sum.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hbox(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> HorizontalBox {
        HorizontalBox::new(xmin, ymin, xmax, ymax).unwrap()
    }

    fn unit_at(x: f64) -> HorizontalBox {
        hbox(x, 0.0, x + 1.0, 1.0)
    }

    #[test]
    fn labels_positive_at_exact_threshold() {
        // overlap 7/10 exactly: proposal [0,10)x[0,1), gt [0,7)x[0,1) is
        // 7/10; build it the other way so the IoU is exactly 0.7
        let proposal = hbox(0.0, 0.0, 7.0, 1.0);
        let gt = hbox(0.0, 0.0, 10.0, 1.0);
        assert_eq!(horizontal_iou(&proposal, &gt), 0.7);
        let l = rpn_label(proposal, &[(WeaponClass::Gun, gt)]);
        assert_eq!(l.label, WeaponClass::Gun);
        assert_eq!(l.overlap, 0.7);
        assert_eq!(l.matched_gt_index, Some(0));
    }

    #[test]
    fn labels_background_below_threshold() {
        let proposal = hbox(0.0, 0.0, 6.9, 1.0);
        let gt = hbox(0.0, 0.0, 10.0, 1.0);
        let l = rpn_label(proposal, &[(WeaponClass::Pistol, gt)]);
        assert_eq!(l.label, WeaponClass::Background);
        assert!(l.overlap > 0.0 && l.overlap < 0.7);
        assert_eq!(l.matched_gt_index, None);
    }

    #[test]
    fn labels_background_when_disjoint_or_empty() {
        let proposal = unit_at(0.0);
        let gt = hbox(5.0, 5.0, 6.0, 6.0);
        let l = rpn_label(proposal, &[(WeaponClass::Gun, gt)]);
        assert_eq!(l.label, WeaponClass::Background);
        assert_eq!(l.overlap, 0.0);
        let l = rpn_label(proposal, &[]);
        assert_eq!((l.label, l.overlap), (WeaponClass::Background, 0.0));
    }

    #[test]
    fn overlap_tie_takes_lower_gt_index() {
        // two identical gts of different classes tie exactly
        let proposal = hbox(0.0, 0.0, 10.0, 10.0);
        let gt = hbox(0.0, 0.0, 10.0, 9.0);
        let l = rpn_label(
            proposal,
            &[(WeaponClass::Pistol, gt), (WeaponClass::Gun, gt)],
        );
        assert_eq!(l.matched_gt_index, Some(0));
        assert_eq!(l.label, WeaponClass::Pistol);
    }

    #[test]
    fn takes_class_of_best_gt() {
        let proposal = hbox(0.0, 0.0, 10.0, 10.0);
        let close = hbox(0.0, 0.0, 10.0, 9.0);
        let closer = hbox(0.0, 0.0, 10.0, 9.5);
        let l = rpn_label(
            proposal,
            &[(WeaponClass::Gun, close), (WeaponClass::Pistol, closer)],
        );
        assert_eq!(l.label, WeaponClass::Pistol);
        assert_eq!(l.matched_gt_index, Some(1));
    }

    #[test]
    fn selection_is_strict_and_capped() {
        let mk = |overlap| LabeledProposal {
            proposal: unit_at(0.0),
            label: WeaponClass::Gun,
            overlap,
            matched_gt_index: Some(0),
        };
        let pool: Vec<_> = [0.9, 0.8, 0.75, 0.7, 0.6, 0.2].into_iter().map(mk).collect();
        let kept = select_top_proposals(&pool, 300);
        let overlaps: Vec<f64> = kept.iter().map(|p| p.overlap).collect();
        // exactly 0.7 does not survive the strict cut
        assert_eq!(overlaps, vec![0.9, 0.8, 0.75]);

        let many: Vec<_> = (0..400)
            .map(|i| {
                let mut p = mk(0.8);
                p.matched_gt_index = Some(i);
                p
            })
            .collect();
        let kept = select_top_proposals(&many, 300);
        assert_eq!(kept.len(), 300);
        // equal overlaps keep input order
        assert!(kept
            .iter()
            .enumerate()
            .all(|(i, p)| p.matched_gt_index == Some(i)));
    }

    #[test]
    fn offsets_identity_and_round_trip() {
        let anchor = hbox(10.0, 20.0, 30.0, 60.0);
        let z = encode_box_offsets(&anchor, &anchor);
        assert_eq!(z, BoxOffsets { tx: 0.0, ty: 0.0, tw: 0.0, th: 0.0 });
        assert_eq!(decode_box_offsets(&anchor, &z).unwrap(), anchor);

        let gt = hbox(12.0, 25.0, 40.0, 70.0);
        let t = encode_box_offsets(&anchor, &gt);
        let back = decode_box_offsets(&anchor, &t).unwrap();
        assert!((back.xmin() - gt.xmin()).abs() < 1e-9);
        assert!((back.ymin() - gt.ymin()).abs() < 1e-9);
        assert!((back.xmax() - gt.xmax()).abs() < 1e-9);
        assert!((back.ymax() - gt.ymax()).abs() < 1e-9);
    }

    #[test]
    fn decode_rejects_degenerate_sizes() {
        let anchor = hbox(0.0, 0.0, 1.0, 1.0);
        let collapse = BoxOffsets { tx: 0.0, ty: 0.0, tw: -800.0, th: 0.0 };
        assert!(decode_box_offsets(&anchor, &collapse).is_err());
        let blow_up = BoxOffsets { tx: 0.0, ty: 0.0, tw: 800.0, th: 0.0 };
        assert!(decode_box_offsets(&anchor, &blow_up).is_err());
        let nan = BoxOffsets { tx: f64::NAN, ty: 0.0, tw: 0.0, th: 0.0 };
        assert_eq!(decode_box_offsets(&anchor, &nan), Err(GeometryError::NonFinite));
    }

    #[test]
    fn smooth_l1_grid() {
        let inputs = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0];
        let expected = [2.5, 0.5, 0.125, 0.0, 0.125, 0.5, 2.5];
        for (y, want) in inputs.into_iter().zip(expected) {
            assert_eq!(smooth_l1(y), want, "smooth_l1({y})");
        }
    }

    #[test]
    fn regression_loss_sums_components() {
        let a = BoxOffsets { tx: 0.0, ty: 0.0, tw: 0.0, th: 0.0 };
        let b = BoxOffsets { tx: 0.5, ty: -0.5, tw: 3.0, th: 0.0 };
        assert_eq!(box_regression_loss(&a, &b), 0.125 + 0.125 + 2.5);
        assert_eq!(box_regression_loss(&a, &a), 0.0);
    }

    #[test]
    fn softmax_uniform_and_extreme() {
        let u = softmax(&[3.0, 3.0, 3.0, 3.0]);
        for p in &u {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert_eq!(softmax(&[1000.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(softmax(&[7.0]), vec![1.0]);
        assert!(softmax(&[]).is_empty());
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
    }

    #[test]
    fn class_names_round_trip() {
        for c in [WeaponClass::Gun, WeaponClass::Pistol, WeaponClass::Background] {
            assert_eq!(WeaponClass::from_name(c.name()), Some(c));
        }
        assert_eq!(WeaponClass::from_name("GUN"), Some(WeaponClass::Gun));
        assert_eq!(WeaponClass::from_name(" Pistol "), Some(WeaponClass::Pistol));
        assert_eq!(WeaponClass::from_name("rifle"), None);
    }
}
