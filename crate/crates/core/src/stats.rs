//! Dataset statistics: per-class object counts, angle-class histograms,
//! objects-per-image spread, and seeded train/test splitting.

use crate::angle::{bin_angle, AngleScheme, NUM_ANGLE_CLASSES};
use crate::annotation::AnnotationSet;
use crate::targets::WeaponClass;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

/// Aggregate counts over one annotation set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub total_images: usize,
    pub gun_count: usize,
    pub pistol_count: usize,
    pub total_objects: usize,
    /// Objects per angle class, indexed by class.
    pub angle_histogram: [u64; NUM_ANGLE_CLASSES],
    pub min_per_image: usize,
    pub max_per_image: usize,
    /// Mean objects per image, rounded to two decimals.
    pub mean_per_image: f64,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "images: {}", self.total_images)?;
        writeln!(
            f,
            "objects: {} ({} gun, {} pistol)",
            self.total_objects, self.gun_count, self.pistol_count
        )?;
        writeln!(
            f,
            "objects/image: min {} max {} mean {:.2}",
            self.min_per_image, self.max_per_image, self.mean_per_image
        )?;
        write!(f, "angle histogram:")?;
        for n in self.angle_histogram {
            write!(f, " {n}")?;
        }
        writeln!(f)
    }
}

/// Summarizes a set, binning angles under the given scheme.
pub fn summarize(set: &AnnotationSet, scheme: AngleScheme) -> DatasetSummary {
    let mut gun_count = 0;
    let mut pistol_count = 0;
    let mut angle_histogram = [0u64; NUM_ANGLE_CLASSES];
    let mut min_per_image = usize::MAX;
    let mut max_per_image = 0;
    for a in &set.annotations {
        for obj in &a.objects {
            match obj.class {
                WeaponClass::Gun => gun_count += 1,
                WeaponClass::Pistol => pistol_count += 1,
                WeaponClass::Background => {}
            }
            angle_histogram[bin_angle(obj.bbox.theta_deg(), scheme).index] += 1;
        }
        min_per_image = min_per_image.min(a.objects.len());
        max_per_image = max_per_image.max(a.objects.len());
    }
    let total_images = set.annotations.len();
    let total_objects = gun_count + pistol_count;
    let mean = if total_images == 0 {
        0.0
    } else {
        total_objects as f64 / total_images as f64
    };
    DatasetSummary {
        total_images,
        gun_count,
        pistol_count,
        total_objects,
        angle_histogram,
        min_per_image: if total_images == 0 { 0 } else { min_per_image },
        max_per_image,
        mean_per_image: (mean * 100.0).round() / 100.0,
    }
}

/// Splits a set into train and test halves by shuffling image indices with
/// a seeded generator. The train half receives `round(fraction * images)`
/// images; both halves keep the original image order. The same seed and
/// fraction always produce the same split.
pub fn split(
    set: &AnnotationSet,
    train_fraction: f64,
    seed: u64,
) -> (AnnotationSet, AnnotationSet) {
    let n = set.annotations.len();
    let train_size = ((train_fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in &indices[..train_size] {
        in_train[i] = true;
    }
    let pick = |keep: bool| AnnotationSet {
        annotations: set
            .annotations
            .iter()
            .enumerate()
            .filter(|(i, _)| in_train[*i] == keep)
            .map(|(_, a)| a.clone())
            .collect(),
        source_format: set.source_format,
    };
    (pick(true), pick(false))
}
