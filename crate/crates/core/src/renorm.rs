//! Making two distributions comparable: equal total mass, and optionally
//! equal mean level.
//!
//! `mass` rescales the second distribution's mass to the reference's total.
//! `shift`, `opposed` and `scale` do the same and then move mass along the
//! level axis so the means coincide. Fractional moves split a bin's mass
//! linearly between its two neighboring bins; mass pushed past either end of
//! the axis piles up in the edge bin and is reported as `clipped_mass`.

use std::fmt;

use crate::distribution::Distribution;
use crate::features::FeatureKind;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RenormMethod {
    MassScale,
    ShiftOther,
    OpposedShift,
    AxisScale,
}

impl RenormMethod {
    pub const ALL: [RenormMethod; 4] = [
        RenormMethod::MassScale,
        RenormMethod::ShiftOther,
        RenormMethod::OpposedShift,
        RenormMethod::AxisScale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenormMethod::MassScale => "mass",
            RenormMethod::ShiftOther => "shift",
            RenormMethod::OpposedShift => "opposed",
            RenormMethod::AxisScale => "scale",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown renormalization `{s}`")))
    }

    pub fn supports(self, kind: FeatureKind) -> bool {
        match self {
            RenormMethod::MassScale => true,
            RenormMethod::ShiftOther | RenormMethod::OpposedShift => kind != FeatureKind::Ratio,
            RenormMethod::AxisScale => matches!(kind, FeatureKind::Gray | FeatureKind::AbsDiff),
        }
    }

    /// Runs this method with `reference` as the fixed side.
    pub fn apply<T: Scalar>(
        self,
        reference: &Distribution<T>,
        other: &Distribution<T>,
    ) -> Result<RenormOutcome<T>> {
        match self {
            RenormMethod::MassScale => renorm_mass(reference, other),
            RenormMethod::ShiftOther => shift_to_mean(reference, other),
            RenormMethod::OpposedShift => opposed_shift(reference, other),
            RenormMethod::AxisScale => axis_scale(reference, other),
        }
    }
}

impl fmt::Display for RenormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenormOutcome<T> {
    /// Unchanged except under [`RenormMethod::OpposedShift`].
    pub reference: Distribution<T>,
    pub adjusted: Distribution<T>,
    pub method: RenormMethod,
    pub residual_mean_gap: T,
    pub clipped_mass: T,
}

impl<T: Scalar> RenormOutcome<T> {
    fn new(
        reference: Distribution<T>,
        adjusted: Distribution<T>,
        method: RenormMethod,
        clipped_mass: T,
    ) -> Self {
        let residual_mean_gap = (reference.mean_level() - adjusted.mean_level()).abs();
        Self {
            reference,
            adjusted,
            method,
            residual_mean_gap,
            clipped_mass,
        }
    }
}

fn check_pair<T: Scalar>(a: &Distribution<T>, b: &Distribution<T>) -> Result<()> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch(a.kind(), b.kind()));
    }
    if !(a.total_mass() > T::zero()) || !(b.total_mass() > T::zero()) {
        return Err(Error::ZeroMass);
    }
    Ok(())
}

fn check_method<T: Scalar>(method: RenormMethod, d: &Distribution<T>) -> Result<()> {
    if method.supports(d.kind()) {
        Ok(())
    } else {
        Err(Error::UnsupportedKind {
            method: method.name(),
            kind: d.kind(),
        })
    }
}

/// `other` rescaled to the reference's total mass.
fn mass_matched<T: Scalar>(reference: &Distribution<T>, other: &Distribution<T>) -> Distribution<T> {
    let factor = reference.total_mass() / other.total_mass();
    if factor == T::one() {
        other.clone()
    } else {
        other.scaled(factor)
    }
}

pub fn renorm_mass<T: Scalar>(
    reference: &Distribution<T>,
    other: &Distribution<T>,
) -> Result<RenormOutcome<T>> {
    check_pair(reference, other)?;
    let adjusted = mass_matched(reference, other);
    Ok(RenormOutcome::new(
        reference.clone(),
        adjusted,
        RenormMethod::MassScale,
        T::zero(),
    ))
}

pub fn shift_to_mean<T: Scalar>(
    reference: &Distribution<T>,
    other: &Distribution<T>,
) -> Result<RenormOutcome<T>> {
    check_pair(reference, other)?;
    check_method(RenormMethod::ShiftOther, other)?;
    let matched = mass_matched(reference, other);
    let delta = reference.mean_level() - matched.mean_level();
    let (adjusted, clipped) = shift(&matched, delta);
    Ok(RenormOutcome::new(
        reference.clone(),
        adjusted,
        RenormMethod::ShiftOther,
        clipped,
    ))
}

/// Moves `a` by `-delta/2` and `b` by `+delta/2`, `delta = mean(a) - mean(b)`.
/// The returned reference is the moved `a`.
pub fn opposed_shift<T: Scalar>(
    a: &Distribution<T>,
    b: &Distribution<T>,
) -> Result<RenormOutcome<T>> {
    check_pair(a, b)?;
    check_method(RenormMethod::OpposedShift, a)?;
    let b = mass_matched(a, b);
    let half = (a.mean_level() - b.mean_level()) / T::lit(2.0);
    let (a_moved, clip_a) = shift(a, -half);
    let (b_moved, clip_b) = shift(&b, half);
    Ok(RenormOutcome::new(
        a_moved,
        b_moved,
        RenormMethod::OpposedShift,
        clip_a + clip_b,
    ))
}

/// Stretches `other` along the level axis by `mean(reference) / mean(other)`.
pub fn axis_scale<T: Scalar>(
    reference: &Distribution<T>,
    other: &Distribution<T>,
) -> Result<RenormOutcome<T>> {
    check_pair(reference, other)?;
    check_method(RenormMethod::AxisScale, other)?;
    let matched = mass_matched(reference, other);
    let target = reference.mean_level();
    let current = matched.mean_level();
    // means equal up to rounding count as equal, so a repeated call is a no-op
    let (adjusted, clipped) = if (target - current).abs() <= T::lit(1e-12) * target.abs() {
        (matched, T::zero())
    } else if current == T::zero() {
        return Err(Error::ZeroMean {
            target: target.to_f64_lossy(),
        });
    } else {
        let factor = target / current;
        // Gray and AbsDiff levels coincide with bin indices
        deposit_linear(&matched, |b| T::from_count(b) * factor)
    };
    Ok(RenormOutcome::new(
        reference.clone(),
        adjusted,
        RenormMethod::AxisScale,
        clipped,
    ))
}

/// Translates mass by `delta` levels. Integer `delta` is an exact bin translation.
pub fn shift<T: Scalar>(d: &Distribution<T>, delta: T) -> (Distribution<T>, T) {
    if delta == T::zero() {
        return (d.clone(), T::zero());
    }
    deposit_linear(d, |b| T::from_count(b) + delta)
}

/// Sends the mass of bin `b` to fractional bin position `target(b)`, split
/// linearly between the two enclosing bins and clamped at the axis ends.
fn deposit_linear<T: Scalar>(
    d: &Distribution<T>,
    target: impl Fn(usize) -> T,
) -> (Distribution<T>, T) {
    let n = d.len();
    let last = n as i64 - 1;
    let mut out = vec![T::zero(); n];
    let mut clipped = T::zero();
    let mut put = |idx: i64, m: T| {
        if idx < 0 {
            out[0] = out[0] + m;
            clipped = clipped + m;
        } else if idx > last {
            out[n - 1] = out[n - 1] + m;
            clipped = clipped + m;
        } else {
            out[idx as usize] = out[idx as usize] + m;
        }
    };
    for (b, &m) in d.masses().iter().enumerate() {
        if m == T::zero() {
            continue;
        }
        let pos = target(b);
        let lower = pos.floor();
        let frac = pos - lower;
        let k = lower.to_i64().unwrap_or(if pos > T::zero() { i64::MAX } else { i64::MIN });
        if frac == T::zero() {
            put(k, m);
        } else {
            let upper_share = m * frac;
            put(k, m - upper_share);
            put(k.saturating_add(1), upper_share);
        }
    }
    (d.with_masses(out), clipped)
}
