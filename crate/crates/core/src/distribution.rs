//! Binned empirical densities and their scalar statistics.
//!
//! Masses are real-valued so that renormalization and fractional shifts stay
//! in the same representation. Entropy is in nats.

use crate::features::{FeatureKind, FeatureStream};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    kind: FeatureKind,
    masses: Vec<T>,
    bin_levels: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Wraps raw masses for `kind`. Masses must be non-negative with positive total.
    pub fn from_masses(kind: FeatureKind, masses: Vec<T>) -> Result<Self> {
        if masses.len() != kind.bin_count() {
            return Err(Error::InvalidArgument(format!(
                "{kind} needs {} masses, got {}",
                kind.bin_count(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(*m >= T::zero()) || !m.is_finite()) {
            return Err(Error::InvalidArgument("masses must be finite and non-negative".into()));
        }
        let d = Self {
            kind,
            masses,
            bin_levels: kind.bin_levels(),
        };
        if !(d.total_mass() > T::zero()) {
            return Err(Error::ZeroMass);
        }
        Ok(d)
    }

    /// Builds from sparse `(bin, mass)` pairs; unspecified bins are zero.
    pub fn from_sparse(kind: FeatureKind, entries: &[(usize, T)]) -> Result<Self> {
        let mut masses = vec![T::zero(); kind.bin_count()];
        for &(b, m) in entries {
            let slot = masses.get_mut(b).ok_or_else(|| {
                Error::InvalidArgument(format!("bin {b} out of range for {kind}"))
            })?;
            *slot = *slot + m;
        }
        Self::from_masses(kind, masses)
    }

    /// Uniform density over every bin of `kind`.
    pub fn uniform(kind: FeatureKind) -> Self {
        let n = kind.bin_count();
        let m = T::one() / T::from_count(n);
        Self {
            kind,
            masses: vec![m; n],
            bin_levels: kind.bin_levels(),
        }
    }

    /// Unit-mass empirical density of a feature stream.
    pub fn build(stream: &FeatureStream) -> Result<Self> {
        let kind = stream.kind();
        if stream.count() == 0 {
            return Err(Error::EmptyStream);
        }
        let mut counts = vec![0usize; kind.bin_count()];
        for &b in stream.bin_indices() {
            counts[b as usize] += 1;
        }
        Ok(Self::from_counts(kind, &counts, stream.count()))
    }

    pub(crate) fn from_counts(kind: FeatureKind, counts: &[usize], total: usize) -> Self {
        let n = T::from_count(total);
        Self {
            kind,
            masses: counts.iter().map(|&c| T::from_count(c) / n).collect(),
            bin_levels: kind.bin_levels(),
        }
    }

    pub(crate) fn with_masses(&self, masses: Vec<T>) -> Self {
        debug_assert_eq!(masses.len(), self.masses.len());
        Self {
            kind: self.kind,
            masses,
            bin_levels: self.bin_levels.clone(),
        }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn bin_levels(&self) -> &[T] {
        &self.bin_levels
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Sum of masses, accumulated in bin order.
    pub fn total_mass(&self) -> T {
        self.masses.iter().fold(T::zero(), |acc, &m| acc + m)
    }

    pub fn mean_level(&self) -> T {
        let weighted = self
            .masses
            .iter()
            .zip(&self.bin_levels)
            .fold(T::zero(), |acc, (&m, &l)| acc + m * l);
        weighted / self.total_mass()
    }

    /// Gibbs-Shannon entropy of the unit-normalized masses, `0 ln 0 = 0`.
    pub fn entropy(&self) -> T {
        entropy_of(&self.masses)
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.with_masses(self.masses.iter().map(|&m| m * factor).collect())
    }
}

/// Entropy of an arbitrary non-negative mass vector after normalizing it to unit total.
pub fn entropy_of<T: Scalar>(masses: &[T]) -> T {
    let total = masses.iter().fold(T::zero(), |acc, &m| acc + m);
    let mut s = T::zero();
    for &m in masses {
        if m > T::zero() {
            let p = m / total;
            s = s - p * p.ln();
        }
    }
    // a single occupied bin gives p = 1 exactly, but rounding elsewhere can leave -0
    s.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn gray(entries: &[(usize, f64)]) -> Distribution<f64> {
        Distribution::from_sparse(FeatureKind::Gray, entries).unwrap()
    }

    #[test]
    fn build_two_value() {
        let s = FeatureStream::from_bins(FeatureKind::Gray, vec![0, 0, 255, 255]).unwrap();
        let d = Distribution::<f64>::build(&s).unwrap();
        assert_eq!(d.masses()[0], 0.5);
        assert_eq!(d.masses()[255], 0.5);
        assert_eq!(d.masses().iter().filter(|&&m| m > 0.0).count(), 2);
    }

    #[test]
    fn build_matches_counting_oracle() {
        let bins = vec![1u16, 2, 2, 3];
        let d = Distribution::<f64>::build(&FeatureStream::from_bins(FeatureKind::Gray, bins.clone()).unwrap()).unwrap();
        let mut oracle = std::collections::BTreeMap::new();
        for b in &bins {
            *oracle.entry(*b as usize).or_insert(0.0) += 1.0 / bins.len() as f64;
        }
        for (b, m) in d.masses().iter().enumerate() {
            assert_eq!(*m, oracle.get(&b).copied().unwrap_or(0.0));
        }
        assert_eq!(d.mean_level(), 2.0);
    }

    #[test]
    fn build_constant_any_kind() {
        for kind in FeatureKind::ALL {
            let s = FeatureStream::from_bins(kind, vec![3; 17]).unwrap();
            let d = Distribution::<f64>::build(&s).unwrap();
            assert_eq!(d.masses()[3], 1.0);
            assert_eq!(d.entropy(), 0.0);
        }
    }

    #[test]
    fn build_empty() {
        let s = FeatureStream::from_bins(FeatureKind::Gray, vec![]).unwrap();
        assert_eq!(Distribution::<f64>::build(&s), Err(Error::EmptyStream));
    }

    #[test]
    fn total_mass_cases() {
        let d = gray(&[(3, 0.25), (9, 0.75)]);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(d.scaled(0.5).total_mass(), 0.5);
    }

    #[test]
    fn mean_level_cases() {
        assert_eq!(gray(&[(0, 0.5), (255, 0.5)]).mean_level(), 127.5);
        assert_eq!(gray(&[(42, 1.0)]).mean_level(), 42.0);
        assert_eq!(gray(&[(1, 0.25), (2, 0.5), (3, 0.25)]).mean_level(), 2.0);
        let diff = Distribution::<f64>::from_sparse(FeatureKind::Diff, &[(0, 1.0)]).unwrap();
        assert_eq!(diff.mean_level(), -255.0);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(gray(&[(7, 1.0)]).entropy(), 0.0);
        assert!((gray(&[(0, 0.5), (1, 0.5)]).entropy() - LN_2).abs() < 1e-15);
        let u = Distribution::<f64>::uniform(FeatureKind::Gray);
        assert!((u.entropy() - 256f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn generic_f32() {
        let d = Distribution::<f32>::from_sparse(FeatureKind::Gray, &[(0, 0.5), (1, 0.5)]).unwrap();
        assert!((d.entropy() - std::f32::consts::LN_2).abs() < 1e-6);
        assert_eq!(d.mean_level(), 0.5f32);
    }

    #[test]
    fn rejects_bad_masses() {
        assert_eq!(gray_err(&[]), Error::ZeroMass);
        assert!(matches!(
            Distribution::<f64>::from_masses(FeatureKind::Gray, vec![-1.0; 256]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Distribution::<f64>::from_masses(FeatureKind::Gray, vec![1.0; 10]).is_err());
    }

    fn gray_err(entries: &[(usize, f64)]) -> Error {
        Distribution::from_sparse(FeatureKind::Gray, entries).unwrap_err()
    }

    fn masses_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], 256)
            .prop_filter("positive total", |m| m.iter().sum::<f64>() > 0.0)
    }

    proptest! {
        #[test]
        fn entropy_bounds(masses in masses_strategy()) {
            let d = Distribution::from_masses(FeatureKind::Gray, masses).unwrap();
            let s = d.entropy();
            prop_assert!(s >= 0.0);
            prop_assert!(s <= 256f64.ln() + 1e-12);
        }

        #[test]
        fn entropy_scale_invariant(masses in masses_strategy(), c in 1e-3..1e3f64) {
            let d = Distribution::from_masses(FeatureKind::Gray, masses).unwrap();
            prop_assert!((d.entropy() - d.scaled(c).entropy()).abs() < 1e-12);
        }

        #[test]
        fn entropy_permutation_invariant(masses in masses_strategy(), rot in 0usize..256) {
            let d = Distribution::from_masses(FeatureKind::Gray, masses.clone()).unwrap();
            let mut m = masses;
            m.rotate_left(rot);
            m.reverse();
            let p = Distribution::from_masses(FeatureKind::Gray, m).unwrap();
            prop_assert!((d.entropy() - p.entropy()).abs() < 1e-12);
        }

        #[test]
        fn built_is_unit_mass(bins in prop::collection::vec(0u16..511, 1..500)) {
            let s = FeatureStream::from_bins(FeatureKind::Diff, bins).unwrap();
            let d = Distribution::<f64>::build(&s).unwrap();
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        }
    }
}
