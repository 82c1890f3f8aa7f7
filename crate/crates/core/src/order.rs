//! The order functional for a renormalized pair, and the full mode matrix
//! for an image pair.
//!
//! For a reference density `f_ref` and an adjusted density `f_adj`:
//!
//! * `delta_s = S(f_ref) - S(f_adj)`, positive when the adjusted (second)
//!   image is more ordered;
//! * `kl = sum_{f_ref > 0} f_ref ln(f_ref / f_adj)`, `+inf` when `f_ref` has
//!   mass where `f_adj` has none and no smoothing is requested.
//!
//! The two coincide as `delta_s == -kl` only under the equal-mean premise the
//! functional is built on; off that premise they differ, so both are
//! reported and `forms_agree` records whether the identity held.

use std::fmt;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::distribution::Distribution;
use crate::features::{self, FeatureKind};
use crate::ingest::{self, PixelGrid, Traversal};
use crate::renorm::RenormMethod;
use crate::{Error, Result, Scalar};

/// Tolerance for the equal-mass precondition of [`lyapunov`].
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Tolerance for `delta_s == -kl`.
pub const FORMS_TOLERANCE: f64 = 1e-9;
/// Clipped mass above which a report carries a warning.
pub const CLIP_WARNING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderValue<T> {
    pub delta_s: T,
    pub kl: T,
    pub forms_agree: bool,
    /// Reference mass sitting on bins where the (unsmoothed) adjusted density is zero.
    pub support_mismatch_mass: T,
}

/// Evaluates the order functional on a renormalized pair.
///
/// `epsilon > 0` adds `epsilon` to every adjusted bin and rescales back to the
/// adjusted total before the KL sum; `delta_s` never sees the smoothing.
pub fn lyapunov<T: Scalar>(
    f_ref: &Distribution<T>,
    f_adj: &Distribution<T>,
    epsilon: T,
) -> Result<OrderValue<T>> {
    if f_ref.kind() != f_adj.kind() {
        return Err(Error::KindMismatch(f_ref.kind(), f_adj.kind()));
    }
    if !(epsilon >= T::zero()) {
        return Err(Error::InvalidArgument("epsilon must be non-negative".into()));
    }
    let ref_total = f_ref.total_mass();
    let adj_total = f_adj.total_mass();
    if !((ref_total - adj_total).abs() <= T::lit(MASS_TOLERANCE)) {
        return Err(Error::MassMismatch {
            reference: ref_total.to_f64_lossy(),
            adjusted: adj_total.to_f64_lossy(),
        });
    }

    let delta_s = f_ref.entropy() - f_adj.entropy();

    let smoothing = if epsilon > T::zero() {
        let n = T::from_count(f_adj.len());
        Some(adj_total / (adj_total + n * epsilon))
    } else {
        None
    };

    let mut support_mismatch_mass = T::zero();
    let mut kl = T::zero();
    for (&p, &q) in f_ref.masses().iter().zip(f_adj.masses()) {
        if q == T::zero() {
            support_mismatch_mass = support_mismatch_mass + p;
        }
        if p == T::zero() {
            continue;
        }
        let q = match smoothing {
            Some(rescale) => (q + epsilon) * rescale,
            None => q,
        };
        if q > T::zero() {
            kl = kl + p * (p / q).ln();
        }
    }
    if smoothing.is_none() && support_mismatch_mass > T::zero() {
        kl = T::infinity();
    }

    let forms_agree = kl.is_finite() && (delta_s + kl).abs() <= T::lit(FORMS_TOLERANCE);
    Ok(OrderValue {
        delta_s,
        kl,
        forms_agree,
        support_mismatch_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reference {
    First,
    Second,
}

impl Reference {
    pub fn name(self) -> &'static str {
        match self {
            Reference::First => "first",
            Reference::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Reference::First),
            "second" => Ok(Reference::Second),
            other => Err(Error::InvalidArgument(format!("unknown reference `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub feature: FeatureKind,
    pub renorm: RenormMethod,
    pub reference: Reference,
}

impl Mode {
    pub const HEADLINE: Mode = Mode {
        feature: FeatureKind::Gray,
        renorm: RenormMethod::MassScale,
        reference: Reference::First,
    };

    pub const fn new(feature: FeatureKind, renorm: RenormMethod, reference: Reference) -> Self {
        Self { feature, renorm, reference }
    }

    /// All 32 modes: feature-major, then renormalization, then reference.
    pub fn all() -> Vec<Mode> {
        let mut modes = Vec::with_capacity(32);
        for feature in FeatureKind::ALL {
            for renorm in RenormMethod::ALL {
                for reference in [Reference::First, Reference::Second] {
                    modes.push(Mode::new(feature, renorm, reference));
                }
            }
        }
        modes
    }

    pub fn is_admissible(self) -> bool {
        self.renorm.supports(self.feature)
    }

    /// Parses `feature:renorm:reference`, e.g. `gray:mass:first`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [f, r, p] => Ok(Mode::new(
                FeatureKind::parse(f)?,
                RenormMethod::parse(r)?,
                Reference::parse(p)?,
            )),
            _ => Err(Error::InvalidArgument(format!(
                "mode `{s}` is not feature:renorm:reference"
            ))),
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Mode>> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Mode::parse)
            .collect()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.feature, self.renorm, self.reference.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeFilter {
    All,
    Only(Vec<Mode>),
}

impl ModeFilter {
    pub fn includes(&self, mode: Mode) -> bool {
        match self {
            ModeFilter::All => true,
            ModeFilter::Only(modes) => modes.contains(&mode),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntryOutcome<T> {
    Evaluated {
        value: OrderValue<T>,
        residual_mean_gap: T,
        clipped_mass: T,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEntry<T> {
    pub mode: Mode,
    pub outcome: EntryOutcome<T>,
}

impl<T: Scalar> ModeEntry<T> {
    pub fn value(&self) -> Option<&OrderValue<T>> {
        match &self.outcome {
            EntryOutcome::Evaluated { value, .. } => Some(value),
            EntryOutcome::Skipped { .. } => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self.outcome, EntryOutcome::Skipped { .. })
    }

    pub fn skip_reason(&self) -> Option<&str> {
        match &self.outcome {
            EntryOutcome::Skipped { reason } => Some(reason),
            EntryOutcome::Evaluated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageId {
    pub path: String,
    pub sha256: String,
}

impl ImageId {
    /// Identifies an in-memory grid by a digest of its dimensions and raster.
    pub fn of_grid(grid: &PixelGrid) -> Self {
        let mut h = Sha256::new();
        h.update((grid.width() as u64).to_le_bytes());
        h.update((grid.height() as u64).to_le_bytes());
        h.update(grid.values());
        Self {
            path: String::new(),
            sha256: hex::encode(h.finalize()),
        }
    }

    pub fn of_file(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport<T> {
    pub image_a: ImageId,
    pub image_b: ImageId,
    pub epsilon: T,
    pub strict: bool,
    pub headline: OrderValue<T>,
    pub entries: Vec<ModeEntry<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> OrderReport<T> {
    pub fn headline_mode(&self) -> Mode {
        Mode::HEADLINE
    }

    pub fn with_sources(mut self, image_a: ImageId, image_b: ImageId) -> Self {
        self.image_a = image_a;
        self.image_b = image_b;
        self
    }

    pub fn entry(&self, mode: Mode) -> Option<&ModeEntry<T>> {
        self.entries.iter().find(|e| e.mode == mode)
    }
}

/// The single headline scalar of a report: `delta_s` in gray/mass/first mode.
pub fn headline_ocy<T: Scalar>(report: &OrderReport<T>) -> T {
    report.headline.delta_s
}

#[derive(Debug, Clone)]
pub struct CompareOptions<T> {
    /// Require equal pixel counts.
    pub strict: bool,
    pub epsilon: T,
    pub modes: ModeFilter,
    pub traversal: Traversal,
}

impl<T: Scalar> Default for CompareOptions<T> {
    fn default() -> Self {
        Self {
            strict: true,
            epsilon: T::zero(),
            modes: ModeFilter::All,
            traversal: Traversal::Boustrophedon,
        }
    }
}

/// Feature density of one grid, or the reason it could not be built.
pub(crate) fn feature_distribution<T: Scalar>(
    grid: &PixelGrid,
    kind: FeatureKind,
    traversal: Traversal,
) -> Result<Distribution<T>> {
    let seq = ingest::linearize(grid, traversal);
    let stream = features::extract(&seq, kind)?;
    Distribution::build(&stream)
}

/// Renormalizes and evaluates one mode on prebuilt feature densities.
pub fn evaluate_mode<T: Scalar>(
    mode: Mode,
    dist_a: &Distribution<T>,
    dist_b: &Distribution<T>,
    epsilon: T,
) -> Result<(OrderValue<T>, T, T)> {
    let (reference, other) = match mode.reference {
        Reference::First => (dist_a, dist_b),
        Reference::Second => (dist_b, dist_a),
    };
    let outcome = mode.renorm.apply(reference, other)?;
    let value = lyapunov(&outcome.reference, &outcome.adjusted, epsilon)?;
    Ok((value, outcome.residual_mean_gap, outcome.clipped_mass))
}

type DensityPair<T> = (Result<Distribution<T>>, Result<Distribution<T>>);

pub fn compare<T: Scalar>(
    grid_a: &PixelGrid,
    grid_b: &PixelGrid,
    options: &CompareOptions<T>,
) -> Result<OrderReport<T>> {
    if options.strict && grid_a.pixel_count() != grid_b.pixel_count() {
        return Err(Error::SizeMismatch {
            a_width: grid_a.width(),
            a_height: grid_a.height(),
            b_width: grid_b.width(),
            b_height: grid_b.height(),
        });
    }
    if !(options.epsilon >= T::zero()) {
        return Err(Error::InvalidArgument("epsilon must be non-negative".into()));
    }

    let densities: Vec<DensityPair<T>> = FeatureKind::ALL
        .par_iter()
        .map(|&kind| {
            let needed = Mode::all()
                .into_iter()
                .any(|m| m.feature == kind && (options.modes.includes(m) || m == Mode::HEADLINE));
            if !needed {
                let unused = || Err(Error::InvalidArgument("feature not requested".into()));
                return (unused(), unused());
            }
            rayon::join(
                || feature_distribution(grid_a, kind, options.traversal),
                || feature_distribution(grid_b, kind, options.traversal),
            )
        })
        .collect();
    let density = |kind: FeatureKind| {
        let i = FeatureKind::ALL.iter().position(|&k| k == kind).unwrap();
        &densities[i]
    };

    let entries: Vec<ModeEntry<T>> = Mode::all()
        .into_par_iter()
        .map(|mode| {
            let outcome = if !options.modes.includes(mode) {
                EntryOutcome::Skipped {
                    reason: "not selected".into(),
                }
            } else if !mode.is_admissible() {
                EntryOutcome::Skipped {
                    reason: format!("`{}` does not apply to `{}` feature", mode.renorm, mode.feature),
                }
            } else {
                let evaluated = match density(mode.feature) {
                    (Ok(a), Ok(b)) => evaluate_mode(mode, a, b, options.epsilon),
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                };
                match evaluated {
                    Ok((value, residual_mean_gap, clipped_mass)) => EntryOutcome::Evaluated {
                        value,
                        residual_mean_gap,
                        clipped_mass,
                    },
                    Err(e) => EntryOutcome::Skipped { reason: e.to_string() },
                }
            };
            ModeEntry { mode, outcome }
        })
        .collect();

    let headline = match density(FeatureKind::Gray) {
        (Ok(a), Ok(b)) => evaluate_mode(Mode::HEADLINE, a, b, options.epsilon)?.0,
        (Err(e), _) | (_, Err(e)) => return Err(e.clone()),
    };

    let warnings = entries
        .iter()
        .filter_map(|e| match &e.outcome {
            EntryOutcome::Evaluated { clipped_mass, .. }
                if *clipped_mass > T::lit(CLIP_WARNING) =>
            {
                Some(format!(
                    "{}: clipped mass {:.4} at the axis ends, means only approximately equal",
                    e.mode,
                    clipped_mass.to_f64_lossy()
                ))
            }
            _ => None,
        })
        .collect();

    Ok(OrderReport {
        image_a: ImageId::of_grid(grid_a),
        image_b: ImageId::of_grid(grid_b),
        epsilon: options.epsilon,
        strict: options.strict,
        headline,
        entries,
        warnings,
    })
}
