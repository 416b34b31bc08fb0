//! Ground sets and subsets encoded as single-word bit vectors.

use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported ground set: one machine word per subset.
pub const MAX_ELEMENTS: usize = 64;

/// A subset of the ground set `{0, .., n-1}`.
///
/// Only the low `n` bits may be set; the owning [`GroundSet`] supplies `n`
/// whenever a complement is needed.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        SubsetMask(bits)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn singleton(e: usize) -> Self {
        debug_assert!(e < MAX_ELEMENTS);
        SubsetMask(1u64 << e)
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(elements: I) -> Self {
        let mut bits = 0u64;
        for e in elements {
            debug_assert!(e < MAX_ELEMENTS);
            bits |= 1u64 << e;
        }
        SubsetMask(bits)
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn contains(self, e: usize) -> bool {
        e < MAX_ELEMENTS && self.0 >> e & 1 == 1
    }

    #[inline]
    pub const fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub const fn intersects(self, other: SubsetMask) -> bool {
        self.0 & other.0 != 0
    }

    #[inline]
    pub const fn union(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 | other.0)
    }

    #[inline]
    pub const fn intersection(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 & other.0)
    }

    #[inline]
    pub const fn difference(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    #[inline]
    pub fn with(self, e: usize) -> Self {
        SubsetMask(self.0 | 1u64 << e)
    }

    #[inline]
    pub fn without(self, e: usize) -> Self {
        SubsetMask(self.0 & !(1u64 << e))
    }

    /// Lowest element, if any.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Elements {
        Elements(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self`, from the empty set upwards in numeric order.
    pub fn submasks(self) -> Submasks {
        Submasks {
            universe: self.0,
            next: Some(0),
        }
    }

    /// Order used for deterministic tie breaking: smaller cardinality first,
    /// then lexicographic on the sorted element lists.
    pub fn size_lex_cmp(self, other: SubsetMask) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.lex_cmp(other))
    }

    /// Lexicographic comparison of the sorted element lists.
    pub fn lex_cmp(self, other: SubsetMask) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        let d = diff.trailing_zeros();
        let tail = !((1u64 << d) - 1);
        // Elements below d form a shared prefix. The list that has d next
        // is smaller, unless the other list ends at the prefix.
        let (has_d, rest) = if self.0 >> d & 1 == 1 {
            (Ordering::Less, other.0 & tail)
        } else {
            (Ordering::Greater, self.0 & tail)
        };
        if rest == 0 {
            has_d.reverse()
        } else {
            has_d
        }
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl BitOr for SubsetMask {
    type Output = SubsetMask;
    fn bitor(self, rhs: Self) -> Self {
        self.union(rhs)
    }
}

impl BitAnd for SubsetMask {
    type Output = SubsetMask;
    fn bitand(self, rhs: Self) -> Self {
        self.intersection(rhs)
    }
}

impl Sub for SubsetMask {
    type Output = SubsetMask;
    fn sub(self, rhs: Self) -> Self {
        self.difference(rhs)
    }
}

impl Serialize for SubsetMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for SubsetMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let elements = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = elements.iter().find(|&&e| e >= MAX_ELEMENTS) {
            return Err(D::Error::custom(format!("element {bad} exceeds the 64-element cap")));
        }
        Ok(SubsetMask::from_elements(elements))
    }
}

/// Iterator over the elements of a mask in increasing order.
#[derive(Clone)]
pub struct Elements(u64);

impl Iterator for Elements {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let e = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Elements {}

/// Iterator over all submasks of a universe mask, in increasing numeric order.
pub struct Submasks {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Submasks {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            // Standard "increment within universe" trick.
            Some((cur | !self.universe).wrapping_add(1) & self.universe)
        };
        Some(SubsetMask(cur))
    }
}

/// The finite ground set `{0, .., n-1}` with optional element labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ELEMENTS {
            return Err(Error::InvalidInput(format!(
                "ground set size {n} outside 1..={MAX_ELEMENTS}"
            )));
        }
        Ok(GroundSet { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        let mut ground = GroundSet::new(n)?;
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} labels, got {}",
                labels.len()
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::InvalidInput("element labels must be distinct".into()));
        }
        ground.labels = Some(labels);
        Ok(ground)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, e: usize) -> String {
        match &self.labels {
            Some(labels) => labels[e].clone(),
            None => e.to_string(),
        }
    }

    /// Looks up an element by its label (or by its index when unlabelled).
    pub fn element(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(labels) => labels.iter().position(|l| l == label),
            None => label.parse().ok().filter(|&e: &usize| e < self.n),
        }
    }

    #[inline]
    pub fn full(&self) -> SubsetMask {
        if self.n == MAX_ELEMENTS {
            SubsetMask(u64::MAX)
        } else {
            SubsetMask((1u64 << self.n) - 1)
        }
    }

    #[inline]
    pub fn complement(&self, x: SubsetMask) -> SubsetMask {
        self.full() - x
    }

    #[inline]
    pub fn contains_mask(&self, x: SubsetMask) -> bool {
        x.is_subset_of(self.full())
    }

    pub fn check(&self, x: SubsetMask) -> Result<SubsetMask> {
        if self.contains_mask(x) {
            Ok(x)
        } else {
            Err(Error::InvalidInput(format!(
                "subset {x} is not within a ground set of {} elements",
                self.n
            )))
        }
    }

    /// Number of subsets, when it fits comfortably in memory-indexed tables.
    pub fn dense_size(&self) -> Option<usize> {
        (self.n <= 30).then(|| 1usize << self.n)
    }

    /// Formats a subset with element labels.
    pub fn show(&self, x: SubsetMask) -> String {
        let parts: Vec<String> = x.iter().map(|e| self.label(e)).collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submasks_cover_all_subsets_once() {
        let u = SubsetMask::from_elements([1, 3, 4]);
        let subs: Vec<_> = u.submasks().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(u)));
        let mut dedup = subs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 8);
        assert_eq!(SubsetMask::EMPTY.submasks().count(), 1);
    }

    #[test]
    fn lex_order_matches_sorted_vectors() {
        let all: Vec<SubsetMask> = SubsetMask::from_bits(0b11111).submasks().collect();
        for &a in &all {
            for &b in &all {
                assert_eq!(a.lex_cmp(b), a.to_vec().cmp(&b.to_vec()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn ground_set_bounds() {
        assert!(GroundSet::new(0).is_err());
        assert!(GroundSet::new(65).is_err());
        let g = GroundSet::new(64).unwrap();
        assert_eq!(g.full().len(), 64);
        let g = GroundSet::new(5).unwrap();
        assert_eq!(g.complement(SubsetMask::from_elements([0, 2])).to_vec(), vec![1, 3, 4]);
        assert!(g.check(SubsetMask::singleton(5)).is_err());
    }

    #[test]
    fn labels_must_be_distinct() {
        assert!(GroundSet::with_labels(2, vec!["a".into(), "a".into()]).is_err());
        let g = GroundSet::with_labels(2, vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(g.element("b"), Some(1));
        assert_eq!(g.show(g.full()), "{a,b}");
    }

    #[test]
    fn serde_as_sorted_elements() {
        let x = SubsetMask::from_elements([4, 0, 2]);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[0,2,4]");
        let back: SubsetMask = serde_json::from_str("[2,0,4]").unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<SubsetMask>("[64]").is_err());
    }
}
