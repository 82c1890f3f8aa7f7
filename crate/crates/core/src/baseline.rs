//! Synthetic reference images for an absolute order scale.
//!
//! Two zero points are available: uniform random noise (maximal disorder in
//! the gray-level density) and a constant image, the "black square" of total
//! order.
//!
//! Noise pixels come from SplitMix64 (64-bit state, Steele/Lea/Flood
//! constants) seeded with the user's `u64` as the initial state. Each pixel
//! is the top byte of one 64-bit output, drawn in row-major order. The same
//! seed therefore yields the same raster on every platform.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::distribution::Distribution;
use crate::features::{self, FeatureKind};
use crate::ingest::PixelGrid;
use crate::order::{self, Mode, OrderValue};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    UniformNoise { seed: u64 },
    Constant { level: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub width: usize,
    pub height: usize,
}

impl BaselineSpec {
    pub fn noise(width: usize, height: usize, seed: u64) -> Self {
        Self {
            kind: BaselineKind::UniformNoise { seed },
            width,
            height,
        }
    }

    /// The black square: a constant image at gray level 0.
    pub fn black(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0)
    }

    pub fn constant(width: usize, height: usize, level: u8) -> Self {
        Self {
            kind: BaselineKind::Constant { level },
            width,
            height,
        }
    }

    /// Same kind, resized to match `grid`.
    pub fn sized_like(self, grid: &PixelGrid) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            ..self
        }
    }
}

pub fn generate(spec: &BaselineSpec) -> Result<PixelGrid> {
    let n = spec
        .width
        .checked_mul(spec.height)
        .ok_or_else(|| Error::InvalidGrid("baseline dimensions overflow".into()))?;
    match spec.kind {
        BaselineKind::Constant { level } => PixelGrid::filled(spec.width, spec.height, level),
        BaselineKind::UniformNoise { seed } => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let values = (0..n).map(|_| (rng.next_u64() >> 56) as u8).collect();
            PixelGrid::new(spec.width, spec.height, values)
        }
    }
}

/// Order of `image` against a generated baseline: the baseline is the
/// reference, the image is adjusted.
///
/// Positive `delta_s` means the image is more ordered than the baseline.
/// Against a constant baseline and the gray feature it is never positive.
pub fn absolute_order<T: Scalar>(
    image: &PixelGrid,
    spec: &BaselineSpec,
    mode: Mode,
    epsilon: T,
    strict: bool,
) -> Result<OrderValue<T>> {
    let baseline = generate(spec)?;
    if strict && baseline.pixel_count() != image.pixel_count() {
        return Err(Error::SizeMismatch {
            a_width: baseline.width(),
            a_height: baseline.height(),
            b_width: image.width(),
            b_height: image.height(),
        });
    }
    mode_against(&baseline_density(&baseline, mode)?, image, mode, epsilon)
}

/// Order of `image` against the exact density of i.i.d. uniform gray levels
/// for the mode's feature, instead of a finite noise sample.
pub fn absolute_order_ideal<T: Scalar>(
    image: &PixelGrid,
    mode: Mode,
    epsilon: T,
) -> Result<OrderValue<T>> {
    mode_against(&ideal_noise_density(mode.feature), image, mode, epsilon)
}

fn baseline_density<T: Scalar>(baseline: &PixelGrid, mode: Mode) -> Result<Distribution<T>> {
    order::feature_distribution(baseline, mode.feature, crate::Traversal::Boustrophedon)
}

fn mode_against<T: Scalar>(
    baseline: &Distribution<T>,
    image: &PixelGrid,
    mode: Mode,
    epsilon: T,
) -> Result<OrderValue<T>> {
    if !mode.is_admissible() {
        return Err(Error::UnsupportedKind {
            method: mode.renorm.name(),
            kind: mode.feature,
        });
    }
    let image_density =
        order::feature_distribution(image, mode.feature, crate::Traversal::Boustrophedon)?;
    // the baseline plays the first image
    order::evaluate_mode(mode, baseline, &image_density, epsilon).map(|(v, _, _)| v)
}

/// Exact feature density when every pixel is independent and uniform on 0..=255.
pub fn ideal_noise_density<T: Scalar>(kind: FeatureKind) -> Distribution<T> {
    if kind == FeatureKind::Gray {
        return Distribution::uniform(kind);
    }
    let mut counts = vec![0usize; kind.bin_count()];
    for prev in 0..=255u8 {
        for cur in 0..=255u8 {
            counts[features::bin_of(kind, prev, cur)] += 1;
        }
    }
    Distribution::from_counts(kind, &counts, 256 * 256)
}
