//! Feature streams derived from a pixel sequence.
//!
//! | kind      | value                              | bins                         |
//! |-----------|------------------------------------|------------------------------|
//! | `gray`    | `v[t]`                             | 256, levels 0..=255          |
//! | `diff`    | `v[t] - v[t-1]`                    | 511, levels -255..=255       |
//! | `absdiff` | `abs(v[t] - v[t-1])`               | 256, levels 0..=255          |
//! | `ratio`   | `(v[t] + 1) / (v[t-1] + 1)`        | 256 log-spaced over [1/256, 256] |

use std::fmt;

use crate::ingest::PixelSequence;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Gray,
    Diff,
    AbsDiff,
    Ratio,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Gray,
        FeatureKind::Diff,
        FeatureKind::AbsDiff,
        FeatureKind::Ratio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Gray => "gray",
            FeatureKind::Diff => "diff",
            FeatureKind::AbsDiff => "absdiff",
            FeatureKind::Ratio => "ratio",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }

    pub fn bin_count(self) -> usize {
        match self {
            FeatureKind::Diff => 511,
            _ => 256,
        }
    }

    /// Whether the feature is computed from neighbor pairs.
    pub fn is_pairwise(self) -> bool {
        self != FeatureKind::Gray
    }

    /// Level of bin 0 on the additive axis; `None` for the logarithmic ratio axis.
    pub fn level_offset(self) -> Option<i32> {
        match self {
            FeatureKind::Gray | FeatureKind::AbsDiff => Some(0),
            FeatureKind::Diff => Some(-255),
            FeatureKind::Ratio => None,
        }
    }

    /// Representative level of every bin, strictly increasing.
    ///
    /// Ratio bins report their geometric center.
    pub fn bin_levels<T: Scalar>(self) -> Vec<T> {
        match self.level_offset() {
            Some(offset) => (0..self.bin_count())
                .map(|b| T::lit((b as i32 + offset) as f64))
                .collect(),
            None => (0..RATIO_BINS)
                .map(|b| T::lit(ratio_bin_center(b)))
                .collect(),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const RATIO_BINS: usize = 256;

/// `ln 256`, half-width of the ratio axis in log space.
fn ratio_half_span() -> f64 {
    256f64.ln()
}

/// Log-spaced bin for a ratio in [1/256, 256], clamped to the last bin at the top edge.
pub fn ratio_bin(r: f64) -> usize {
    let l = ratio_half_span();
    let x = (RATIO_BINS as f64) * (r.ln() + l) / (2.0 * l);
    (x.floor().max(0.0) as usize).min(RATIO_BINS - 1)
}

pub fn ratio_bin_center(bin: usize) -> f64 {
    let l = ratio_half_span();
    let width = 2.0 * l / RATIO_BINS as f64;
    (-l + (bin as f64 + 0.5) * width).exp()
}

/// Per-pixel-pair ratio bins, tabulated once for all 256x256 gray pairs.
fn ratio_table() -> &'static [u16] {
    static TABLE: std::sync::OnceLock<Vec<u16>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(256 * 256);
        for prev in 0..256u32 {
            for cur in 0..256u32 {
                let r = (cur + 1) as f64 / (prev + 1) as f64;
                t.push(ratio_bin(r) as u16);
            }
        }
        t
    })
}

/// Bin index of one feature value given the current pixel and (for pairwise kinds) its predecessor.
#[inline]
pub fn bin_of(kind: FeatureKind, prev: u8, cur: u8) -> usize {
    match kind {
        FeatureKind::Gray => cur as usize,
        FeatureKind::Diff => (cur as i32 - prev as i32 + 255) as usize,
        FeatureKind::AbsDiff => (cur as i32 - prev as i32).unsigned_abs() as usize,
        FeatureKind::Ratio => ratio_table()[prev as usize * 256 + cur as usize] as usize,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStream {
    kind: FeatureKind,
    bin_indices: Vec<u16>,
}

impl FeatureStream {
    /// Wraps precomputed bin indices, checking each against the kind's bin count.
    pub fn from_bins(kind: FeatureKind, bin_indices: Vec<u16>) -> Result<Self> {
        if let Some(&b) = bin_indices.iter().find(|&&b| b as usize >= kind.bin_count()) {
            return Err(Error::InvalidArgument(format!(
                "bin {b} out of range for {kind} ({} bins)",
                kind.bin_count()
            )));
        }
        Ok(Self { kind, bin_indices })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn bin_indices(&self) -> &[u16] {
        &self.bin_indices
    }

    pub fn count(&self) -> usize {
        self.bin_indices.len()
    }
}

pub fn extract(seq: &PixelSequence, kind: FeatureKind) -> Result<FeatureStream> {
    let v = seq.values();
    if v.is_empty() {
        return Err(Error::EmptyStream);
    }
    let bin_indices = if kind.is_pairwise() {
        if v.len() < 2 {
            return Err(Error::SequenceTooShort { kind, len: v.len() });
        }
        v.windows(2).map(|w| bin_of(kind, w[0], w[1]) as u16).collect()
    } else {
        v.iter().map(|&x| x as u16).collect()
    };
    Ok(FeatureStream { kind, bin_indices })
}
