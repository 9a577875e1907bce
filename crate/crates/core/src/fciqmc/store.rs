use crate::circuit::BasisState;
use crate::clock::ClockKey;

use super::FciqmcError;

/// Complex integer walker weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Weight {
    pub re: i64,
    pub im: i64,
}

impl Weight {
    pub const ZERO: Weight = Weight { re: 0, im: 0 };

    pub fn new(re: i64, im: i64) -> Self {
        Weight { re, im }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    /// Walker count `|re| + |im|`.
    pub fn magnitude(self) -> u64 {
        self.re.unsigned_abs() + self.im.unsigned_abs()
    }

    pub fn norm_sqr(self) -> f64 {
        let (re, im) = (self.re as f64, self.im as f64);
        re * re + im * im
    }

    pub fn checked_add(self, other: Weight) -> Option<Weight> {
        Some(Weight { re: self.re.checked_add(other.re)?, im: self.im.checked_add(other.im)? })
    }

    pub fn to_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re as f64, self.im as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Child {
    pub key: ClockKey,
    pub weight: Weight,
}

/// Walkers of one time point, sorted by basis state with no zero weights.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bucket {
    entries: Vec<(BasisState, Weight)>,
}

impl Bucket {
    /// Sorts, merges duplicates and drops zeros.
    pub fn from_entries(mut entries: Vec<(BasisState, Weight)>) -> Result<Self, FciqmcError> {
        entries.sort_by_key(|&(s, _)| s);
        let mut out: Vec<(BasisState, Weight)> = Vec::with_capacity(entries.len());
        for (s, w) in entries {
            match out.last_mut() {
                Some((last, acc)) if *last == s => {
                    *acc = acc.checked_add(w).ok_or(FciqmcError::Overflow { t: usize::MAX })?;
                }
                _ => out.push((s, w)),
            }
        }
        out.retain(|(_, w)| !w.is_zero());
        Ok(Bucket { entries: out })
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(BasisState, Weight)>) -> Self {
        Bucket { entries }
    }

    pub fn entries(&self) -> &[(BasisState, Weight)] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut Vec<(BasisState, Weight)> {
        &mut self.entries
    }

    pub fn get(&self, s: BasisState) -> Option<Weight> {
        self.entries.binary_search_by_key(&s, |&(k, _)| k).ok().map(|i| self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn population(&self) -> u64 {
        self.entries.iter().map(|(_, w)| w.magnitude()).sum()
    }
}

/// Walkers grouped by time point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkerStore {
    buckets: Vec<Bucket>,
}

impl WalkerStore {
    pub fn empty(time_points: usize) -> Self {
        WalkerStore { buckets: vec![Bucket::default(); time_points] }
    }

    pub fn from_walkers(time_points: usize, walkers: &[(ClockKey, Weight)]) -> Result<Self, FciqmcError> {
        let mut per_t: Vec<Vec<(BasisState, Weight)>> = vec![Vec::new(); time_points];
        for &(k, w) in walkers {
            per_t[k.t].push((k.state, w));
        }
        let buckets = per_t
            .into_iter()
            .enumerate()
            .map(|(t, e)| {
                Bucket::from_entries(e).map_err(|_| FciqmcError::Overflow { t })
            })
            .collect::<Result<_, _>>()?;
        Ok(WalkerStore { buckets })
    }

    pub fn time_points(&self) -> usize {
        self.buckets.len()
    }

    pub fn into_buckets(self) -> Vec<Bucket> {
        self.buckets
    }

    pub fn bucket(&self, t: usize) -> &Bucket {
        &self.buckets[t]
    }

    pub(crate) fn bucket_mut(&mut self, t: usize) -> &mut Bucket {
        &mut self.buckets[t]
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn get(&self, k: ClockKey) -> Option<Weight> {
        self.buckets.get(k.t).and_then(|b| b.get(k.state))
    }

    /// `N_w`, recounted from scratch.
    pub fn population(&self) -> u64 {
        self.buckets.iter().map(Bucket::population).sum()
    }

    pub fn occupied(&self) -> usize {
        self.buckets.iter().map(Bucket::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClockKey, Weight)> + '_ {
        self.buckets
            .iter()
            .enumerate()
            .flat_map(|(t, b)| b.entries.iter().map(move |&(s, w)| (ClockKey::new(s, t), w)))
    }
}
