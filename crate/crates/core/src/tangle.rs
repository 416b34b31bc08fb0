//! Tangles stored extensionally: verification of the four axioms, the
//! robustness condition, the canonical tangle of a vertically k-connected
//! matroid, and exhaustive enumeration.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::RankFunction;
use crate::subset::{GroundSet, SubsetMask};
use crate::system::{vertical_connectivity_witness, ConnectivitySystem};

/// Largest ground set on which (T2) is checked by enumerating all subsets.
pub const MAX_T2_ELEMENTS: usize = 20;
/// Default cap on enumeration nodes; `TANGLEFORGE_MAX_NODES` overrides it.
pub const DEFAULT_MAX_NODES: u64 = 1 << 20;
/// Number of members that may not cover E in a robust tangle.
pub const ROBUST_COVER: usize = 8;

pub fn max_search_nodes() -> u64 {
    std::env::var("TANGLEFORGE_MAX_NODES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_NODES)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tangle {
    k: i64,
    full: SubsetMask,
    members: Vec<SubsetMask>,
    lookup: HashSet<SubsetMask>,
    maximal: Vec<SubsetMask>,
}

impl Tangle {
    /// Builds a tangle of order `k` on `ground` from its member sets.
    /// Nothing beyond range checks happens here; see [`verify_tangle`].
    pub fn new(ground: &GroundSet, k: i64, members: impl IntoIterator<Item = SubsetMask>) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidInput(format!("tangle order must be at least 1, got {k}")));
        }
        let mut members: Vec<SubsetMask> = members.into_iter().collect();
        for &m in &members {
            ground.check(m)?;
        }
        members.sort_by(|a, b| a.size_lex_cmp(*b));
        members.dedup();
        let lookup = members.iter().copied().collect();
        let maximal = maximal_sets(&members);
        Ok(Tangle {
            k,
            full: ground.full(),
            members,
            lookup,
            maximal,
        })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn members(&self) -> &[SubsetMask] {
        &self.members
    }

    /// The ⊆-maximal members, sorted by size then lexicographically.
    pub fn maximal_members(&self) -> &[SubsetMask] {
        &self.maximal
    }

    pub fn contains(&self, x: SubsetMask) -> bool {
        self.lookup.contains(&x)
    }

    /// X is weak when it lies inside some member.
    pub fn is_weak(&self, x: SubsetMask) -> bool {
        self.maximal.iter().any(|m| x.is_subset_of(*m))
    }

    pub fn is_strong(&self, x: SubsetMask) -> bool {
        !self.is_weak(x)
    }

    pub fn is_strong_partition(&self, parts: &[SubsetMask]) -> Result<bool> {
        check_partition(self.full, parts)?;
        Ok(parts.iter().all(|p| self.is_strong(*p)))
    }

    /// No eight members (repetition allowed) cover E. Only maximal members
    /// need to be tried.
    pub fn is_robust(&self) -> bool {
        cover_within(&self.maximal, self.full, SubsetMask::EMPTY, ROBUST_COVER).is_none()
    }

    /// Up to `ROBUST_COVER` maximal members whose union is E, if they exist.
    pub fn robustness_witness(&self) -> Option<Vec<SubsetMask>> {
        cover_within(&self.maximal, self.full, SubsetMask::EMPTY, ROBUST_COVER)
    }

    pub fn to_json(&self) -> TangleJson {
        TangleJson {
            k: self.k,
            members: self.members.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangleJson {
    pub k: i64,
    pub members: Vec<SubsetMask>,
}

impl TangleJson {
    pub fn into_tangle(self, ground: &GroundSet) -> Result<Tangle> {
        Tangle::new(ground, self.k, self.members)
    }
}

pub(crate) fn check_partition(full: SubsetMask, parts: &[SubsetMask]) -> Result<()> {
    let mut seen = SubsetMask::EMPTY;
    for &p in parts {
        if p.intersects(seen) || !p.is_subset_of(full) {
            return Err(Error::NotAPartition);
        }
        seen = seen | p;
    }
    if seen != full {
        return Err(Error::NotAPartition);
    }
    Ok(())
}

/// Picks each unordered pair {X, E-X} once: by the side holding element 0,
/// except that {∅, E} is represented by ∅.
pub(crate) fn is_pair_representative(full: SubsetMask, x: SubsetMask) -> bool {
    if x.is_empty() {
        true
    } else {
        x.contains(0) && x != full
    }
}

fn maximal_sets(sets: &[SubsetMask]) -> Vec<SubsetMask> {
    // `sets` is sorted by size, so a set can only be dominated by a later one.
    let mut out = Vec::new();
    for (i, &a) in sets.iter().enumerate() {
        if !sets[i + 1..].iter().any(|&b| a.is_subset_of(b)) {
            out.push(a);
        }
    }
    out
}

/// Depth-first search for at most `budget` sets from `sets` covering `full`,
/// branching on the lowest uncovered element.
fn cover_within(sets: &[SubsetMask], full: SubsetMask, covered: SubsetMask, budget: usize) -> Option<Vec<SubsetMask>> {
    let Some(e) = (full - covered).first() else {
        return Some(Vec::new());
    };
    if budget == 0 {
        return None;
    }
    let mut tried = Vec::new();
    for &s in sets.iter().filter(|s| s.contains(e)) {
        let gain = s - covered;
        // Skip branches dominated by an earlier choice.
        if tried.iter().any(|&t| gain.is_subset_of(t)) {
            continue;
        }
        tried.push(gain);
        if let Some(mut rest) = cover_within(sets, full, covered | s, budget - 1) {
            rest.insert(0, s);
            return Some(rest);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TangleAxiom {
    T1,
    T2,
    T3,
    T4,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangleViolation {
    pub axiom: TangleAxiom,
    pub witness: Vec<SubsetMask>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangleReport {
    pub violations: Vec<TangleViolation>,
}

impl TangleReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, axiom: TangleAxiom, witness: Vec<SubsetMask>) {
        self.violations.push(TangleViolation { axiom, witness });
    }
}

/// Checks (T1)-(T4). (T2) enumerates every subset, so n ≤ 20 is required.
pub fn verify_tangle(sys: &ConnectivitySystem, t: &Tangle) -> Result<TangleReport> {
    let n = sys.n();
    if n > MAX_T2_ELEMENTS {
        return Err(Error::SearchSpaceTooLarge {
            what: "tangle verification (T2)".into(),
            limit: 1 << MAX_T2_ELEMENTS,
        });
    }
    let full = sys.full();
    let k = t.k();
    let mut report = TangleReport::default();
    for &a in t.members() {
        if sys.lambda(a) >= k {
            report.push(TangleAxiom::T1, vec![a]);
        }
    }
    for x in full.submasks() {
        let y = full - x;
        if !is_pair_representative(full, x) {
            continue;
        }
        if sys.lambda(x) < k && !t.contains(x) && !t.contains(y) {
            report.push(TangleAxiom::T2, vec![x, y]);
        }
    }
    for &a in t.members() {
        if t.contains(full - a) && a.lex_cmp(full - a).is_le() {
            report.push(TangleAxiom::T3, vec![a, full - a, a]);
        }
    }
    let max = t.maximal_members();
    for (i, &a) in max.iter().enumerate() {
        for (j, &b) in max.iter().enumerate().skip(i) {
            for &c in &max[j..] {
                if a | b | c == full {
                    let w = vec![a, b, c];
                    if !report
                        .violations
                        .iter()
                        .any(|v| v.axiom == TangleAxiom::T3 && same_sets(&v.witness, &w))
                    {
                        report.push(TangleAxiom::T3, w);
                    }
                }
            }
        }
    }
    for e in 0..n {
        let a = full.without(e);
        if t.contains(a) {
            report.push(TangleAxiom::T4, vec![a]);
        }
    }
    Ok(report)
}

fn same_sets(a: &[SubsetMask], b: &[SubsetMask]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// The tangle {A : r(A) ≤ k-2} of a vertically k-connected matroid with
/// r(M) ≥ max(3k-5, 2).
pub fn canonical_vertical_tangle(rank: &RankFunction, k: i64) -> Result<Tangle> {
    if k < 2 {
        return Err(Error::PreconditionFailed(format!(
            "canonical tangle needs k ≥ 2, got {k}"
        )));
    }
    let rm = rank.matroid_rank();
    let bound = (3 * k - 5).max(2);
    if rm < bound {
        return Err(Error::PreconditionFailed(format!(
            "rank bound: r(M) = {rm} < max(3k-5, 2) = {bound}"
        )));
    }
    if let Some(x) = vertical_connectivity_witness(rank, k)? {
        return Err(Error::PreconditionFailed(format!(
            "not vertically {k}-connected: {x} gives a {}-separation with both sides of rank above {}",
            k - 1,
            k - 2
        )));
    }
    let members = rank.ground().full().submasks().filter(|&a| rank.rank(a) <= k - 2);
    Tangle::new(rank.ground(), k, members)
}

/// All tangles of order k. Each unordered (k-1)-separation is oriented in
/// turn, smallest small side first, pruning on (T3) and (T4).
pub fn enumerate_tangles(sys: &ConnectivitySystem, k: i64) -> Result<Vec<Tangle>> {
    let n = sys.n();
    if n > MAX_T2_ELEMENTS {
        return Err(Error::SearchSpaceTooLarge {
            what: "tangle enumeration".into(),
            limit: 1 << MAX_T2_ELEMENTS,
        });
    }
    if k < 1 {
        return Err(Error::InvalidInput(format!("tangle order must be at least 1, got {k}")));
    }
    let full = sys.full();
    let mut pairs: Vec<(SubsetMask, SubsetMask)> = full
        .submasks()
        .filter(|&x| is_pair_representative(full, x))
        .filter(|&x| sys.lambda(x) < k)
        .map(|x| {
            let y = full - x;
            if y.size_lex_cmp(x).is_lt() {
                (y, x)
            } else {
                (x, y)
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.0.size_lex_cmp(b.0));
    let mut search = Search {
        full,
        pairs: &pairs,
        chosen: Vec::new(),
        nodes: 0,
        cap: max_search_nodes(),
        found: Vec::new(),
    };
    search.run(0)?;
    let ground = sys.ground();
    let mut out = Vec::new();
    for members in search.found {
        let t = Tangle::new(ground, k, members)?;
        let report = verify_tangle(sys, &t)?;
        if !report.is_empty() {
            return Err(Error::Invariant(format!(
                "enumerated tangle fails verification: {report:?}"
            )));
        }
        out.push(t);
    }
    Ok(out)
}

struct Search<'a> {
    full: SubsetMask,
    pairs: &'a [(SubsetMask, SubsetMask)],
    chosen: Vec<SubsetMask>,
    nodes: u64,
    cap: u64,
    found: Vec<Vec<SubsetMask>>,
}

impl Search<'_> {
    fn admissible(&self, a: SubsetMask) -> bool {
        if a == self.full || (self.full - a).len() == 1 {
            return false;
        }
        for (i, &b) in self.chosen.iter().enumerate() {
            if a | b == self.full {
                return false;
            }
            for &c in &self.chosen[i..] {
                if a | b | c == self.full {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::SearchSpaceTooLarge {
                what: "tangle enumeration nodes".into(),
                limit: self.cap,
            });
        }
        let Some(&(small, big)) = self.pairs.get(depth) else {
            self.found.push(self.chosen.clone());
            return Ok(());
        };
        for side in [small, big] {
            if self.admissible(side) {
                self.chosen.push(side);
                self.run(depth + 1)?;
                self.chosen.pop();
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::{build_r8_rank, r8_set};

    fn singletons_and_empty(n: usize) -> Vec<SubsetMask> {
        std::iter::once(SubsetMask::EMPTY)
            .chain((0..n).map(SubsetMask::singleton))
            .collect()
    }

    #[test]
    fn r8_tangle_verifies_and_is_not_robust() {
        let sys = ConnectivitySystem::r8_polymatroid(1).unwrap();
        let t = Tangle::new(sys.ground(), 4, singletons_and_empty(8)).unwrap();
        assert!(verify_tangle(&sys, &t).unwrap().is_empty());
        assert!(!t.is_robust());
        assert_eq!(t.robustness_witness().unwrap().len(), 8);
        assert!(t.is_strong(r8_set(&[1, 2])));
        assert!(t.is_weak(SubsetMask::EMPTY));
        assert!(t
            .is_strong_partition(&[r8_set(&[1, 2]), r8_set(&[3, 4]), r8_set(&[5, 6]), r8_set(&[7, 8])])
            .unwrap());
        assert_eq!(
            t.is_strong_partition(&[r8_set(&[1, 2]), r8_set(&[2, 3])]),
            Err(Error::NotAPartition)
        );
    }

    #[test]
    fn u24_order_two() {
        let rank = RankFunction::uniform(2, 4).unwrap();
        let sys = ConnectivitySystem::from_matroid(rank.clone()).unwrap();
        let canon = canonical_vertical_tangle(&rank, 2).unwrap();
        assert_eq!(canon.members(), &[SubsetMask::EMPTY]);
        let all = enumerate_tangles(&sys, 2).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0], canon);
        // Singletons have λ = 2, so they cannot be members of an order-2 tangle.
        let t = Tangle::new(sys.ground(), 2, singletons_and_empty(4)).unwrap();
        let report = verify_tangle(&sys, &t).unwrap();
        assert_eq!(
            report.violations.iter().filter(|v| v.axiom == TangleAxiom::T1).count(),
            4
        );
    }

    #[test]
    fn complementary_members_give_t3_witness() {
        let sys = ConnectivitySystem::from_matroid(RankFunction::uniform(2, 4).unwrap()).unwrap();
        let a = SubsetMask::from_elements([0, 1]);
        let t = Tangle::new(sys.ground(), 4, [a, sys.full() - a]).unwrap();
        let report = verify_tangle(&sys, &t).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.axiom == TangleAxiom::T3 && v.witness == vec![a, sys.full() - a, a]));
    }

    #[test]
    fn canonical_tangle_preconditions() {
        let u24 = RankFunction::uniform(2, 4).unwrap();
        assert!(matches!(
            canonical_vertical_tangle(&u24, 4),
            Err(Error::PreconditionFailed(_))
        ));
        let r8 = build_r8_rank();
        let t = canonical_vertical_tangle(&r8, 3).unwrap();
        assert_eq!(t.members().len(), 9);
        assert!(matches!(
            canonical_vertical_tangle(&r8, 4),
            Err(Error::PreconditionFailed(_))
        ));
        let two = RankFunction::graphic(vec![(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        assert!(canonical_vertical_tangle(&two, 2).is_err());
    }

    #[test]
    fn r8_has_a_unique_order_four_tangle() {
        let sys = ConnectivitySystem::r8_polymatroid(1).unwrap();
        let all = enumerate_tangles(&sys, 4).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].members(), singletons_and_empty(8).as_slice());
    }

    #[test]
    fn robust_when_members_are_small() {
        let rank = RankFunction::uniform(2, 20).unwrap();
        let t = canonical_vertical_tangle(&rank, 2).unwrap();
        assert!(t.is_robust());
        let g = GroundSet::new(20).unwrap();
        let t = Tangle::new(&g, 3, singletons_and_empty(20)).unwrap();
        assert!(t.is_robust());
    }

    #[test]
    fn table_with_everything_large() {
        // λ(∅) = 1 < k and every non-empty proper set has λ ≥ k: the unique
        // tangle is {∅}.
        let mut values = vec![3i64; 8];
        values[0] = 1;
        values[7] = 1;
        let sys = ConnectivitySystem::from_table(values).unwrap();
        let all = enumerate_tangles(&sys, 2).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].members(), &[SubsetMask::EMPTY]);
        // Order 1: λ(∅) ≥ k, so there is no 0-separation and (T2) is vacuous.
        let all = enumerate_tangles(&sys, 1).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].members().is_empty());
    }
}
