//! Property tests for the geometric, angular, and codec invariants the
//! rest of the toolkit leans on.

use obbkit::angle::{
    bin_angle, decode_angle_regression, encode_angle_regression, wrap_angle, AngleScheme,
};
use obbkit::annotation::{
    parse_rolabelimg, parse_yolo, serialize_rolabelimg, serialize_yolo, AnnotatedObject,
    Annotation, ParseMode,
};
use obbkit::eval::{rotated_nms, Detection};
use obbkit::geometry::{
    polygon_area, rotate_point, rotated_iou, OrientedBox, Point,
};
use obbkit::targets::{decode_box_offsets, encode_box_offsets, smooth_l1, softmax, WeaponClass};
use proptest::prelude::*;

fn oriented_box() -> impl Strategy<Value = OrientedBox> {
    (
        -500.0..500.0f64,
        -500.0..500.0f64,
        0.5..100.0f64,
        0.5..100.0f64,
        0.0..180.0f64,
    )
        .prop_map(|(cx, cy, w, h, t)| OrientedBox::new(cx, cy, w, h, t).unwrap())
}

fn nearby_box_pair() -> impl Strategy<Value = (OrientedBox, OrientedBox)> {
    (
        oriented_box(),
        -50.0..50.0f64,
        -50.0..50.0f64,
        0.5..100.0f64,
        0.5..100.0f64,
        0.0..180.0f64,
    )
        .prop_map(|(a, dx, dy, w, h, t)| {
            let b = OrientedBox::new(a.cx() + dx, a.cy() + dy, w, h, t).unwrap();
            (a, b)
        })
}

proptest! {
    #[test]
    fn rotation_round_trips(x in -1e3..1e3f64, y in -1e3..1e3f64,
                            cx in -1e3..1e3f64, cy in -1e3..1e3f64,
                            t in -360.0..360.0f64) {
        let p = Point::new(x, y);
        let c = Point::new(cx, cy);
        let back = rotate_point(rotate_point(p, c, t), c, -t);
        prop_assert!((back.x - p.x).abs() < 1e-9);
        prop_assert!((back.y - p.y).abs() < 1e-9);
    }

    #[test]
    fn corner_area_matches_width_times_height(b in oriented_box()) {
        let area = polygon_area(b.corners().vertices());
        let expect = b.w() * b.h();
        prop_assert!((area - expect).abs() <= 1e-9 * expect.max(1.0));
    }

    #[test]
    fn envelope_never_smaller_than_box(b in oriented_box()) {
        prop_assert!(b.envelope().area() >= b.area() - 1e-9);
    }

    #[test]
    fn iou_bounded_symmetric_and_one_on_self((a, b) in nearby_box_pair()) {
        let ab = rotated_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        // symmetry must be bitwise, not approximate
        prop_assert_eq!(ab.to_bits(), rotated_iou(&b, &a).to_bits());
        prop_assert_eq!(rotated_iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_is_translation_invariant((a, b) in nearby_box_pair(),
                                    dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
        let shift = |q: &OrientedBox| {
            OrientedBox::new(q.cx() + dx, q.cy() + dy, q.w(), q.h(), q.theta_deg()).unwrap()
        };
        let before = rotated_iou(&a, &b);
        let after = rotated_iou(&shift(&a), &shift(&b));
        prop_assert!((before - after).abs() < 1e-6);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_range(t in -1e4..1e4f64) {
        let w = wrap_angle(t);
        prop_assert!((0.0..180.0).contains(&w));
        prop_assert!((wrap_angle(t + 180.0) - w).abs() < 1e-9);
    }

    #[test]
    fn binning_ignores_half_turns(t in 0.0..180.0f64, k in -2i32..3i32) {
        for scheme in [AngleScheme::Model, AngleScheme::Dataset] {
            let base = bin_angle(t, scheme);
            prop_assert_eq!(bin_angle(t + 180.0 * k as f64, scheme), base);
        }
    }

    #[test]
    fn angle_regression_round_trips(t in 0.0..180.0f64) {
        let enc = encode_angle_regression(t);
        prop_assert!((0.0..1.0).contains(&enc));
        prop_assert!((decode_angle_regression(enc) - t).abs() < 1e-9);
    }

    #[test]
    fn box_offsets_round_trip(acx in -100.0..100.0f64, acy in -100.0..100.0f64,
                              aw in 1.0..50.0f64, ah in 1.0..50.0f64,
                              gcx in -100.0..100.0f64, gcy in -100.0..100.0f64,
                              gw in 1.0..50.0f64, gh in 1.0..50.0f64) {
        let anchor = obbkit::geometry::HorizontalBox::new(acx, acy, acx + aw, acy + ah).unwrap();
        let gt = obbkit::geometry::HorizontalBox::new(gcx, gcy, gcx + gw, gcy + gh).unwrap();
        let decoded = decode_box_offsets(&anchor, &encode_box_offsets(&anchor, &gt)).unwrap();
        prop_assert!((decoded.xmin() - gt.xmin()).abs() < 1e-9);
        prop_assert!((decoded.ymin() - gt.ymin()).abs() < 1e-9);
        prop_assert!((decoded.xmax() - gt.xmax()).abs() < 1e-9);
        prop_assert!((decoded.ymax() - gt.ymax()).abs() < 1e-9);
    }

    #[test]
    fn smooth_l1_is_even_and_nonnegative(y in -100.0..100.0f64) {
        prop_assert!(smooth_l1(y) >= 0.0);
        prop_assert_eq!(smooth_l1(y), smooth_l1(-y));
    }

    #[test]
    fn softmax_normalizes_and_ignores_shift(v in prop::collection::vec(-1e3..1e3f64, 1..12),
                                            c in -100.0..100.0f64) {
        let p = softmax(&v);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nms_is_idempotent(boxes in prop::collection::vec(
        (oriented_box(), 0.0..1.0f64, 0u8..2), 0..12)) {
        let dets: Vec<Detection> = boxes
            .into_iter()
            .map(|(b, score, c)| {
                let class = if c == 0 { WeaponClass::Gun } else { WeaponClass::Pistol };
                Detection::new("img", class, score, b).unwrap()
            })
            .collect();
        let once = rotated_nms(&dets, 0.5).unwrap();
        let twice = rotated_nms(&once, 0.5).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn rolabelimg_round_trips_to_a_millionth(
        boxes in prop::collection::vec(
            (0.0..2000.0f64, 0.0..2000.0f64, 0.5..300.0f64, 0.5..300.0f64,
             0.0..180.0f64, 0u8..2), 0..6)) {
        let ann = Annotation {
            image_name: "img.jpg".into(),
            image_width: 2000,
            image_height: 2000,
            objects: boxes
                .into_iter()
                .map(|(cx, cy, w, h, t, c)| AnnotatedObject {
                    class: if c == 0 { WeaponClass::Gun } else { WeaponClass::Pistol },
                    bbox: OrientedBox::new(cx, cy, w, h, t).unwrap(),
                })
                .collect(),
        };
        let parsed = parse_rolabelimg(&serialize_rolabelimg(&ann), ParseMode::Strict)
            .unwrap()
            .annotation;
        prop_assert_eq!(parsed.objects.len(), ann.objects.len());
        for (p, o) in parsed.objects.iter().zip(&ann.objects) {
            prop_assert_eq!(p.class, o.class);
            prop_assert!((p.bbox.cx() - o.bbox.cx()).abs() < 1e-6);
            prop_assert!((p.bbox.cy() - o.bbox.cy()).abs() < 1e-6);
            prop_assert!((p.bbox.w() - o.bbox.w()).abs() < 1e-6);
            prop_assert!((p.bbox.h() - o.bbox.h()).abs() < 1e-6);
            prop_assert!((p.bbox.theta_deg() - o.bbox.theta_deg()).abs() < 1e-6);
        }
    }

    #[test]
    fn yolo_round_trips_to_a_millionth(
        boxes in prop::collection::vec(
            (0.1..0.9f64, 0.1..0.9f64, 0.01..0.5f64, 0.01..0.5f64,
             0.0..180.0f64, 0u8..2), 0..6)) {
        let ann = Annotation {
            image_name: "img.jpg".into(),
            image_width: 1280,
            image_height: 720,
            objects: boxes
                .into_iter()
                .map(|(fx, fy, fw, fh, t, c)| AnnotatedObject {
                    class: if c == 0 { WeaponClass::Gun } else { WeaponClass::Pistol },
                    bbox: OrientedBox::new(
                        fx * 1280.0, fy * 720.0, fw * 1280.0, fh * 720.0, t,
                    )
                    .unwrap(),
                })
                .collect(),
        };
        let parsed = parse_yolo("img.jpg", 1280, 720, &serialize_yolo(&ann), ParseMode::Strict)
            .unwrap()
            .annotation;
        prop_assert_eq!(parsed.objects.len(), ann.objects.len());
        for (p, o) in parsed.objects.iter().zip(&ann.objects) {
            prop_assert_eq!(p.class, o.class);
            prop_assert!((p.bbox.cx() - o.bbox.cx()).abs() < 1e-6);
            prop_assert!((p.bbox.cy() - o.bbox.cy()).abs() < 1e-6);
            prop_assert!((p.bbox.w() - o.bbox.w()).abs() < 1e-6);
            prop_assert!((p.bbox.h() - o.bbox.h()).abs() < 1e-6);
            prop_assert!((p.bbox.theta_deg() - o.bbox.theta_deg()).abs() < 1e-6);
        }
    }
}
