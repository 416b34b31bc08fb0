//! Full closures, partial k-sequences, sequential separations, equivalence
//! of separations and tree-compatible sets, bundled in a [`Workbench`] that
//! fixes a system, a tangle and a set S.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memo::Memo;
use crate::subset::SubsetMask;
use crate::system::ConnectivitySystem;
use crate::tangle::{is_pair_representative, Tangle};

/// Ground sets up to this size get a precomputed weakness table and may be
/// indexed exhaustively.
pub const MAX_INDEX_ELEMENTS: usize = 20;

/// An unordered k-separation stored by its canonical side, the side that
/// contains element 0 (or ∅ for the pair {∅, E}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Separation {
    pub side: SubsetMask,
    pub k: i64,
}

impl Separation {
    pub fn new(full: SubsetMask, x: SubsetMask, k: i64) -> Self {
        let side = if is_pair_representative(full, x) { x } else { full - x };
        Separation { side, k }
    }

    pub fn other(&self, full: SubsetMask) -> SubsetMask {
        full - self.side
    }

    pub fn sides(&self, full: SubsetMask) -> (SubsetMask, SubsetMask) {
        (self.side, full - self.side)
    }

    /// Re-canonicalizes a separation read from untrusted input.
    pub fn canonical(self, full: SubsetMask) -> Self {
        Separation::new(full, self.side, self.k)
    }
}

/// Two separations cross when all four intersections are non-empty.
pub fn crosses(full: SubsetMask, a: SubsetMask, c: SubsetMask) -> bool {
    let (b, d) = (full - a, full - c);
    !(a & c).is_empty() && !(a & d).is_empty() && !(b & c).is_empty() && !(b & d).is_empty()
}

/// The tree-compatible set S, either the default (all non-sequential
/// k-separating sets with strong complements) or an explicit list of sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeCompatibleSet {
    DefaultNonsequential,
    Explicit(HashSet<SubsetMask>),
}

impl TreeCompatibleSet {
    pub fn explicit(sets: impl IntoIterator<Item = SubsetMask>) -> Self {
        TreeCompatibleSet::Explicit(sets.into_iter().collect())
    }
}

/// Order in which a greedy closure picks among admissible extensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyOrder {
    /// Smallest set first, ties lexicographic. Used for cached closures.
    SmallestFirst,
    LargestFirst,
    Seeded(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SRule {
    /// A member that is not a non-sequential k-separating set with a strong
    /// complement.
    Membership,
    S1,
    S2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SViolation {
    pub rule: SRule,
    pub witness: Vec<SubsetMask>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SReport {
    pub violations: Vec<SViolation>,
}

impl SReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Unordered pair of full closures identifying an equivalence class.
pub type ClassKey = (SubsetMask, SubsetMask);

/// Every T-strong k-separation, grouped by class, plus the (k,S)-separations.
#[derive(Debug, Default)]
pub struct SeparationIndex {
    strong_by_class: HashMap<ClassKey, Vec<SubsetMask>>,
    key_of: HashMap<SubsetMask, ClassKey>,
    ks: Vec<SubsetMask>,
    classes: Vec<Vec<SubsetMask>>,
    class_of: HashMap<SubsetMask, usize>,
}

impl SeparationIndex {
    /// Canonical sides of all (k,S)-separations, smallest first.
    pub fn ks_sides(&self) -> &[SubsetMask] {
        &self.ks
    }

    /// (k,S)-separations grouped into equivalence classes; each class is
    /// sorted and classes are ordered by their first side.
    pub fn classes(&self) -> &[Vec<SubsetMask>] {
        &self.classes
    }

    pub fn class_of(&self, canonical_side: SubsetMask) -> Option<usize> {
        self.class_of.get(&canonical_side).copied()
    }

    pub fn key_of(&self, canonical_side: SubsetMask) -> Option<ClassKey> {
        self.key_of.get(&canonical_side).copied()
    }

    /// Canonical sides of every T-strong k-separation in a class.
    pub fn strong_in_class(&self, key: &ClassKey) -> &[SubsetMask] {
        self.strong_by_class.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn strong_count(&self) -> usize {
        self.key_of.len()
    }
}

pub struct Workbench<'a> {
    sys: &'a ConnectivitySystem,
    tangle: &'a Tangle,
    k: i64,
    full: SubsetMask,
    weak: Option<Vec<bool>>,
    s: TreeCompatibleSet,
    closures: Memo,
    index: OnceLock<Result<SeparationIndex>>,
}

impl<'a> Workbench<'a> {
    pub fn new(sys: &'a ConnectivitySystem, tangle: &'a Tangle) -> Self {
        Self::with_s(sys, tangle, TreeCompatibleSet::DefaultNonsequential)
    }

    pub fn with_s(sys: &'a ConnectivitySystem, tangle: &'a Tangle, s: TreeCompatibleSet) -> Self {
        let n = sys.n();
        let weak = (n <= MAX_INDEX_ELEMENTS).then(|| weak_table(n, tangle.maximal_members()));
        Workbench {
            sys,
            tangle,
            k: tangle.k(),
            full: sys.full(),
            weak,
            s,
            closures: Memo::new(n),
            index: OnceLock::new(),
        }
    }

    pub fn sys(&self) -> &'a ConnectivitySystem {
        self.sys
    }

    pub fn tangle(&self) -> &'a Tangle {
        self.tangle
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn full(&self) -> SubsetMask {
        self.full
    }

    pub fn s(&self) -> &TreeCompatibleSet {
        &self.s
    }

    pub fn lambda(&self, x: SubsetMask) -> i64 {
        self.sys.lambda(x)
    }

    pub fn is_k_sep(&self, x: SubsetMask) -> bool {
        self.sys.lambda(x) <= self.k
    }

    #[inline]
    pub fn is_weak(&self, x: SubsetMask) -> bool {
        match &self.weak {
            Some(table) => table[x.bits() as usize],
            None => self.tangle.is_weak(x),
        }
    }

    #[inline]
    pub fn is_strong(&self, x: SubsetMask) -> bool {
        !self.is_weak(x)
    }

    /// Both sides strong and λ ≤ k.
    pub fn is_strong_ksep(&self, x: SubsetMask) -> bool {
        self.is_k_sep(x) && self.is_strong(x) && self.is_strong(self.full - x)
    }

    fn require_strong_ksep_set(&self, x: SubsetMask) -> Result<()> {
        if !self.sys.ground().contains_mask(x) {
            return Err(Error::InvalidInput(format!("{x} is outside the ground set")));
        }
        if !self.is_k_sep(x) {
            return Err(Error::PreconditionFailed(format!(
                "{x} is not {}-separating (λ = {})",
                self.k,
                self.lambda(x)
            )));
        }
        if self.is_weak(x) {
            return Err(Error::PreconditionFailed(format!("{x} is weak in the tangle")));
        }
        Ok(())
    }

    fn require_strong_separation(&self, x: SubsetMask) -> Result<()> {
        self.require_strong_ksep_set(x)?;
        if self.is_weak(self.full - x) {
            return Err(Error::PreconditionFailed(format!(
                "the complement of {x} is weak in the tangle"
            )));
        }
        Ok(())
    }

    /// Admissible one-step extensions of `cur`: non-empty weak Y ⊆ E-cur
    /// with cur ∪ Y k-separating. Candidates are drawn from subsets of the
    /// maximal members, so duplicates are possible.
    fn extensions(&self, cur: SubsetMask, mut visit: impl FnMut(SubsetMask) -> bool) {
        let rest = self.full - cur;
        for &m in self.tangle.maximal_members() {
            for y in (m & rest).submasks() {
                if !y.is_empty() && self.is_k_sep(cur | y) && !visit(y) {
                    return;
                }
            }
        }
    }

    /// True iff no non-empty weak Y ⊆ E-X keeps X ∪ Y k-separating.
    pub fn is_fully_closed(&self, x: SubsetMask) -> Result<bool> {
        self.require_strong_ksep_set(x)?;
        let mut found = false;
        self.extensions(x, |_| {
            found = true;
            false
        });
        Ok(!found)
    }

    fn next_extension(&self, cur: SubsetMask, order: GreedyOrder, rng: &mut Option<ChaCha8Rng>) -> Option<SubsetMask> {
        match order {
            GreedyOrder::SmallestFirst | GreedyOrder::LargestFirst => {
                let mut best: Option<SubsetMask> = None;
                self.extensions(cur, |y| {
                    let better = match best {
                        None => true,
                        Some(b) if order == GreedyOrder::SmallestFirst => y.size_lex_cmp(b).is_lt(),
                        Some(b) => y.size_lex_cmp(b).is_gt(),
                    };
                    if better {
                        best = Some(y);
                    }
                    true
                });
                best
            }
            GreedyOrder::Seeded(_) => {
                let mut all = Vec::new();
                self.extensions(cur, |y| {
                    all.push(y);
                    true
                });
                all.sort();
                all.dedup();
                let rng = rng.as_mut().expect("seeded order carries a generator");
                (!all.is_empty()).then(|| all[rng.gen_range(0..all.len())])
            }
        }
    }

    /// A maximal partial k-sequence for X built greedily in the given order.
    pub fn closure_sequence(&self, x: SubsetMask, order: GreedyOrder) -> Result<Vec<SubsetMask>> {
        self.require_strong_ksep_set(x)?;
        let mut rng = match order {
            GreedyOrder::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let mut cur = x;
        let mut seq = Vec::new();
        while let Some(y) = self.next_extension(cur, order, &mut rng) {
            cur = cur | y;
            seq.push(y);
        }
        Ok(seq)
    }

    /// fcl(X) via a greedy partial k-sequence in the given order.
    pub fn greedy_closure(&self, x: SubsetMask, order: GreedyOrder) -> Result<SubsetMask> {
        let seq = self.closure_sequence(x, order)?;
        Ok(seq.into_iter().fold(x, |acc, y| acc | y))
    }

    /// The full closure fcl(X), memoized.
    pub fn full_closure(&self, x: SubsetMask) -> Result<SubsetMask> {
        self.require_strong_ksep_set(x)?;
        Ok(self.fcl_unchecked(x))
    }

    fn fcl_unchecked(&self, x: SubsetMask) -> SubsetMask {
        let bits = self.closures.get_or_insert_with(x, || {
            let mut cur = x;
            while let Some(y) = self.next_extension(cur, GreedyOrder::SmallestFirst, &mut None) {
                cur = cur | y;
            }
            cur.bits() as i64
        });
        SubsetMask::from_bits(bits as u64)
    }

    /// Checks the three clauses of a partial k-sequence for X.
    pub fn validate_partial_k_sequence(&self, x: SubsetMask, seq: &[SubsetMask]) -> bool {
        let mut cur = x;
        for &y in seq {
            if y.is_empty() || y.intersects(cur) || !y.is_subset_of(self.full) || !self.is_weak(y) {
                return false;
            }
            cur = cur | y;
            if !self.is_k_sep(cur) {
                return false;
            }
        }
        true
    }

    /// X is sequential when it is k-separating, E-X is strong and
    /// fcl(E-X) = E.
    pub fn is_sequential(&self, x: SubsetMask) -> bool {
        let y = self.full - x;
        self.is_k_sep(x) && self.is_strong(y) && self.fcl_unchecked(y) == self.full
    }

    /// A separation is sequential when either side is.
    pub fn is_sequential_separation(&self, x: SubsetMask) -> bool {
        self.is_sequential(x) || self.is_sequential(self.full - x)
    }

    pub fn in_s(&self, x: SubsetMask) -> bool {
        match &self.s {
            TreeCompatibleSet::DefaultNonsequential => {
                self.is_k_sep(x) && self.is_strong(self.full - x) && !self.is_sequential(x)
            }
            TreeCompatibleSet::Explicit(set) => set.contains(&x),
        }
    }

    /// (X, E-X) is a (k,S)-separation.
    pub fn is_ks(&self, x: SubsetMask) -> bool {
        self.in_s(x) && self.in_s(self.full - x)
    }

    /// Unordered pair of closures of a T-strong k-separation.
    pub fn class_key(&self, x: SubsetMask) -> Result<ClassKey> {
        self.require_strong_separation(x)?;
        Ok(self.key_unchecked(x))
    }

    fn key_unchecked(&self, x: SubsetMask) -> ClassKey {
        let a = self.fcl_unchecked(x);
        let b = self.fcl_unchecked(self.full - x);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Equivalence of T-strong k-separations by the unordered-pair definition.
    pub fn equivalent(&self, x: SubsetMask, y: SubsetMask) -> Result<bool> {
        Ok(self.class_key(x)? == self.class_key(y)?)
    }

    /// One-sided test, valid for non-sequential separations: fcl(A) equals
    /// fcl(C) or fcl(D).
    pub fn equivalent_one_sided(&self, a: SubsetMask, c: SubsetMask) -> Result<bool> {
        self.require_strong_separation(a)?;
        self.require_strong_separation(c)?;
        let fa = self.fcl_unchecked(a);
        Ok(fa == self.fcl_unchecked(c) || fa == self.fcl_unchecked(self.full - c))
    }

    /// Equivalence of two separations; the one-sided test is used when both
    /// are non-sequential.
    pub fn equivalent_separations(&self, s1: Separation, s2: Separation) -> Result<bool> {
        let (a, c) = (s1.side, s2.side);
        if !self.is_sequential_separation(a) && !self.is_sequential_separation(c) {
            self.equivalent_one_sided(a, c)
        } else {
            self.equivalent(a, c)
        }
    }

    pub fn index(&self) -> Result<&SeparationIndex> {
        self.index
            .get_or_init(|| self.build_index())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn build_index(&self) -> Result<SeparationIndex> {
        if self.sys.n() > MAX_INDEX_ELEMENTS {
            return Err(Error::SearchSpaceTooLarge {
                what: "separation index".into(),
                limit: 1 << MAX_INDEX_ELEMENTS,
            });
        }
        let mut index = SeparationIndex::default();
        let mut ks_keys: Vec<(SubsetMask, ClassKey)> = Vec::new();
        for x in self.full.submasks().filter(|&x| is_pair_representative(self.full, x)) {
            if !self.is_strong_ksep(x) {
                continue;
            }
            let key = self.key_unchecked(x);
            index.strong_by_class.entry(key).or_default().push(x);
            index.key_of.insert(x, key);
            if self.is_ks(x) {
                ks_keys.push((x, key));
            }
        }
        ks_keys.sort_by(|a, b| a.0.size_lex_cmp(b.0));
        let mut class_by_key: HashMap<ClassKey, usize> = HashMap::new();
        for (x, key) in ks_keys {
            let id = *class_by_key.entry(key).or_insert_with(|| {
                index.classes.push(Vec::new());
                index.classes.len() - 1
            });
            index.classes[id].push(x);
            index.class_of.insert(x, id);
            index.ks.push(x);
        }
        for list in index.strong_by_class.values_mut() {
            list.sort_by(|a, b| a.size_lex_cmp(*b));
        }
        Ok(index)
    }

    /// All (k,S)-separations, canonicalized and sorted.
    pub fn enumerate_ks_separations(&self) -> Result<Vec<Separation>> {
        Ok(self
            .index()?
            .ks_sides()
            .iter()
            .map(|&side| Separation { side, k: self.k })
            .collect())
    }

    /// Checks that S consists of non-sequential k-separating sets with
    /// strong complements and satisfies (S1) and (S2).
    pub fn verify_tree_compatible(&self) -> Result<SReport> {
        let index = self.index()?;
        let n = self.sys.n();
        let mut report = SReport::default();
        let members: Vec<SubsetMask> = self.full.submasks().filter(|&x| self.in_s(x)).collect();
        for &x in &members {
            let ok = self.is_k_sep(x) && self.is_strong(self.full - x) && !self.is_sequential(x);
            if !ok {
                report.violations.push(SViolation {
                    rule: SRule::Membership,
                    witness: vec![x],
                });
            }
        }
        for &x in index.ks_sides() {
            let key = self.key_unchecked(x);
            for &y in index.strong_in_class(&key) {
                if !self.is_ks(y) {
                    report.violations.push(SViolation {
                        rule: SRule::S1,
                        witness: vec![x, y],
                    });
                }
            }
        }
        // below[y]: some member of S is contained in y.
        let mut below = vec![false; 1usize << n];
        for &x in &members {
            below[x.bits() as usize] = true;
        }
        for e in 0..n {
            let bit = 1usize << e;
            for y in 0..below.len() {
                if y & bit != 0 && below[y ^ bit] {
                    below[y] = true;
                }
            }
        }
        for x in self.full.submasks().filter(|&x| is_pair_representative(self.full, x)) {
            if !self.is_strong_ksep(x) {
                continue;
            }
            for y in [x, self.full - x] {
                if below[y.bits() as usize] && !self.in_s(y) {
                    let witness = members
                        .iter()
                        .copied()
                        .find(|m| m.is_subset_of(y))
                        .expect("table says a member lies below");
                    report.violations.push(SViolation {
                        rule: SRule::S2,
                        witness: vec![witness, y],
                    });
                }
            }
        }
        Ok(report)
    }
}

fn weak_table(n: usize, maximal: &[SubsetMask]) -> Vec<bool> {
    let mut table = vec![false; 1usize << n];
    for m in maximal {
        table[m.bits() as usize] = true;
    }
    for e in 0..n {
        let bit = 1usize << e;
        for x in (0..table.len()).rev() {
            if x & bit == 0 && table[x | bit] {
                table[x] = true;
            }
        }
    }
    table
}
