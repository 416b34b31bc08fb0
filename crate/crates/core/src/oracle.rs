//! Brute-force recomputation of closures, classes, flowers and tree
//! certificates straight from the definitions. Only λ is shared with the
//! engines; everything else is rebuilt here by exhaustion.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::SubsetMask;
use crate::system::ConnectivitySystem;
use crate::tangle::Tangle;

/// Largest ground set the oracle accepts.
pub const MAX_ORACLE_ELEMENTS: usize = 14;

/// Largest petal count for flower enumeration.
pub const MAX_ORACLE_PETALS: usize = 8;

/// The oracle's view of a tangle and a choice of S.
pub struct Oracle<'a> {
    sys: &'a ConnectivitySystem,
    k: i64,
    full: SubsetMask,
    members: Vec<SubsetMask>,
    explicit_s: Option<HashSet<SubsetMask>>,
    closures: RefCell<HashMap<SubsetMask, SubsetMask>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralClass {
    Anemone,
    Daisy,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFlower {
    pub petals: Vec<SubsetMask>,
    pub class: LiteralClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub what: String,
    pub witness: Vec<SubsetMask>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub k: i64,
    pub strong_separations: usize,
    pub closures: Vec<(SubsetMask, SubsetMask)>,
    pub classes: Vec<Vec<SubsetMask>>,
    pub flowers: Vec<OracleFlower>,
    pub disagreements: Vec<Disagreement>,
}

/// Outcome of certifying a tree from first principles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCertificate {
    pub failures: Vec<String>,
}

impl TreeCertificate {
    pub fn is_certified(&self) -> bool {
        self.failures.is_empty()
    }
}

fn cyclic_consecutive(indices: u64, n: usize) -> bool {
    // A cyclic run is any rotation of a prefix block.
    (0..n).any(|start| {
        (1..n).any(|len| {
            let run = (0..len).fold(0u64, |acc, d| acc | 1 << ((start + d) % n));
            run == indices
        })
    })
}

impl<'a> Oracle<'a> {
    pub fn new(sys: &'a ConnectivitySystem, tangle: &Tangle) -> Result<Self> {
        if sys.n() > MAX_ORACLE_ELEMENTS {
            return Err(Error::SearchSpaceTooLarge {
                what: "oracle ground set".into(),
                limit: MAX_ORACLE_ELEMENTS as u64,
            });
        }
        Ok(Oracle {
            sys,
            k: tangle.k(),
            full: sys.full(),
            members: tangle.members().to_vec(),
            explicit_s: None,
            closures: RefCell::new(HashMap::new()),
        })
    }

    pub fn with_explicit_s(mut self, s: impl IntoIterator<Item = SubsetMask>) -> Self {
        self.explicit_s = Some(s.into_iter().collect());
        self
    }

    fn ksep(&self, x: SubsetMask) -> bool {
        self.sys.lambda(x) <= self.k
    }

    fn weak(&self, x: SubsetMask) -> bool {
        self.members.iter().any(|&m| x.is_subset_of(m))
    }

    fn strong(&self, x: SubsetMask) -> bool {
        !self.weak(x)
    }

    fn subsets(&self, of: SubsetMask) -> impl Iterator<Item = SubsetMask> {
        let bits = of.bits();
        let mut sub = bits;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = sub;
            if sub == 0 {
                done = true;
            } else {
                sub = (sub - 1) & bits;
            }
            Some(SubsetMask::from_bits(out))
        })
    }

    /// Fully closed: no non-empty weak Y outside X keeps X ∪ Y k-separating.
    pub fn is_fully_closed(&self, x: SubsetMask) -> bool {
        self.subsets(self.full - x)
            .all(|y| y.is_empty() || !self.weak(y) || !self.ksep(x | y))
    }

    /// Intersection of all fully-closed k-separating supersets of X.
    pub fn full_closure(&self, x: SubsetMask) -> SubsetMask {
        if let Some(&c) = self.closures.borrow().get(&x) {
            return c;
        }
        let mut acc = self.full;
        for extra in self.subsets(self.full - x) {
            let y = x | extra;
            if self.ksep(y) && self.is_fully_closed(y) {
                acc = acc & y;
            }
        }
        self.closures.borrow_mut().insert(x, acc);
        acc
    }

    fn strong_ksep_separation(&self, x: SubsetMask) -> bool {
        self.ksep(x) && self.strong(x) && self.strong(self.full - x)
    }

    fn sequential(&self, x: SubsetMask) -> bool {
        let y = self.full - x;
        self.ksep(x) && self.strong(y) && self.full_closure(y) == self.full
    }

    pub fn in_s(&self, x: SubsetMask) -> bool {
        match &self.explicit_s {
            Some(s) => s.contains(&x),
            None => self.ksep(x) && self.strong(self.full - x) && !self.sequential(x),
        }
    }

    /// Unordered pairs {X, E-X} listed by the side containing element 0.
    fn pair_sides(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        self.subsets(self.full)
            .filter(move |x| x.contains(0) && *x != self.full)
    }

    /// Unordered pair of full closures of the two sides.
    pub fn class_key(&self, x: SubsetMask) -> (SubsetMask, SubsetMask) {
        let a = self.full_closure(x);
        let b = self.full_closure(self.full - x);
        (a.min(b), a.max(b))
    }

    /// (k,S)-separations grouped by unordered closure pairs. Each class is
    /// sorted by mask; classes are sorted by their first member.
    pub fn classes(&self) -> Vec<Vec<SubsetMask>> {
        let mut groups: BTreeMap<(SubsetMask, SubsetMask), Vec<SubsetMask>> = BTreeMap::new();
        for x in self.pair_sides() {
            if self.strong_ksep_separation(x) && self.in_s(x) && self.in_s(self.full - x) {
                groups.entry(self.class_key(x)).or_default().push(x);
            }
        }
        let mut out: Vec<Vec<SubsetMask>> = groups
            .into_values()
            .map(|mut v| {
                v.sort();
                v
            })
            .collect();
        out.sort();
        out
    }

    /// Literal classification of a petal sequence already known to be a flower.
    pub fn literal_class(&self, petals: &[SubsetMask]) -> LiteralClass {
        let n = petals.len();
        if n <= 3 {
            return LiteralClass::Anemone;
        }
        let mut all = true;
        let mut daisy = true;
        for indices in 1u64..(1 << n) - 1 {
            let u = (0..n)
                .filter(|&i| indices >> i & 1 == 1)
                .fold(SubsetMask::EMPTY, |acc, i| acc | petals[i]);
            let sep = self.ksep(u);
            all &= sep;
            daisy &= sep == cyclic_consecutive(indices, n);
        }
        if all {
            LiteralClass::Anemone
        } else if daisy {
            LiteralClass::Daisy
        } else {
            LiteralClass::Neither
        }
    }

    /// Definition check for a k-flower.
    pub fn is_flower(&self, petals: &[SubsetMask]) -> bool {
        let n = petals.len();
        let mut seen = SubsetMask::EMPTY;
        for &p in petals {
            if p.intersects(seen) {
                return false;
            }
            seen = seen | p;
        }
        seen == self.full
            && petals.iter().all(|&p| self.strong(p))
            && (0..n).all(|i| self.ksep(petals[i]) && self.ksep(petals[i] | petals[(i + 1) % n]))
    }

    fn canonical_form(&self, petals: &[SubsetMask], class: &LiteralClass) -> Vec<SubsetMask> {
        let n = petals.len();
        if *class == LiteralClass::Anemone {
            let mut v = petals.to_vec();
            v.sort();
            return v;
        }
        let mut best: Option<Vec<SubsetMask>> = None;
        for start in 0..n {
            for dir in [1usize, n - 1] {
                let v: Vec<SubsetMask> = (0..n).map(|d| petals[(start + d * dir) % n]).collect();
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
        }
        best.unwrap()
    }

    /// All flowers with at most `max_petals` petals, up to labels.
    pub fn flowers(&self, max_petals: usize) -> Result<Vec<OracleFlower>> {
        if max_petals > MAX_ORACLE_PETALS {
            return Err(Error::SearchSpaceTooLarge {
                what: "oracle flower petals".into(),
                limit: MAX_ORACLE_PETALS as u64,
            });
        }
        let n = self.sys.n();
        let mut found: BTreeMap<Vec<SubsetMask>, OracleFlower> = BTreeMap::new();
        // Restricted growth strings give each set partition once.
        let mut assign = vec![0usize; n];
        fn partitions(
            e: usize,
            blocks: usize,
            n: usize,
            cap: usize,
            assign: &mut Vec<usize>,
            out: &mut dyn FnMut(&[usize], usize),
        ) {
            if e == n {
                out(assign, blocks);
                return;
            }
            for b in 0..=blocks.min(cap - 1) {
                assign[e] = b;
                let nb = if b == blocks { blocks + 1 } else { blocks };
                partitions(e + 1, nb, n, cap, assign, out);
            }
        }
        let mut visit = |assign: &[usize], blocks: usize| {
            let mut parts = vec![SubsetMask::EMPTY; blocks];
            for (e, &b) in assign.iter().enumerate() {
                parts[b] = parts[b].with(e);
            }
            if !parts.iter().all(|&p| self.strong(p) && self.ksep(p)) {
                return;
            }
            // Cyclic orders with parts[0] first.
            let rest: Vec<usize> = (1..blocks).collect();
            permute(&rest, &mut |perm| {
                let mut petals = vec![parts[0]];
                petals.extend(perm.iter().map(|&i| parts[i]));
                if self.is_flower(&petals) {
                    let class = self.literal_class(&petals);
                    let key = self.canonical_form(&petals, &class);
                    found.entry(key).or_insert(OracleFlower { petals, class });
                }
            });
        };
        partitions(0, 0, n, max_petals.max(1), &mut assign, &mut visit);
        Ok(found.into_values().collect())
    }

    /// Partition displayed by each component of the tree after removing v.
    fn components(tree: &crate::ktree::PiTree, v: usize, order: &[usize]) -> Vec<SubsetMask> {
        let adj = |x: usize| -> Vec<usize> {
            tree.edges
                .iter()
                .filter_map(|&(a, b)| {
                    if a == x {
                        Some(b)
                    } else if b == x {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect()
        };
        order
            .iter()
            .map(|&start| {
                let mut seen = vec![false; tree.vertices.len()];
                seen[v] = true;
                seen[start] = true;
                let mut queue = VecDeque::from([start]);
                let mut acc = SubsetMask::EMPTY;
                while let Some(x) = queue.pop_front() {
                    if let crate::ktree::Vertex::Bag(b) = tree.vertices[x] {
                        acc = acc | b;
                    }
                    for y in adj(x) {
                        if !seen[y] {
                            seen[y] = true;
                            queue.push_back(y);
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Literal P1–P5 check plus the conclusion of the main theorem: every
    /// (k,S)-separation is equivalent to a displayed one.
    pub fn certify_tree(&self, tree: &crate::ktree::PiTree) -> TreeCertificate {
        use crate::ktree::Vertex;
        let mut failures = Vec::new();
        let full = self.full;
        let mut displayed: BTreeSet<SubsetMask> = BTreeSet::new();
        let canon = |x: SubsetMask| if x.contains(0) { x } else { full - x };
        for (e, &(a, b)) in tree.edges.iter().enumerate() {
            let side = Self::components(tree, b, &[a])[0];
            if !self.strong_ksep_separation(side) {
                failures.push(format!("P1: edge {e} is not a strong k-separation"));
            }
            let bags = matches!(tree.vertices[a], Vertex::Bag(_)) && matches!(tree.vertices[b], Vertex::Bag(_));
            if bags && !(self.in_s(side) && self.in_s(full - side)) {
                failures.push(format!("P1: edge {e} between bags is not a (k,S)-separation"));
            }
            displayed.insert(canon(side));
        }
        for (v, x) in tree.vertices.iter().enumerate() {
            let (order, want_daisy) = match x {
                Vertex::Bag(_) => continue,
                Vertex::Anemone => (
                    {
                        let mut nb: Vec<usize> = tree
                            .edges
                            .iter()
                            .filter_map(|&(a, b)| {
                                if a == v {
                                    Some(b)
                                } else if b == v {
                                    Some(a)
                                } else {
                                    None
                                }
                            })
                            .collect();
                        nb.sort_unstable();
                        nb
                    },
                    false,
                ),
                Vertex::Daisy(order) => (order.clone(), true),
            };
            let petals = Self::components(tree, v, &order);
            let n = petals.len();
            if !self.is_flower(&petals) {
                failures.push(format!(
                    "P{}: vertex {v} does not display a flower",
                    if want_daisy { 4 } else { 3 }
                ));
                continue;
            }
            let class = self.literal_class(&petals);
            let ok_class = n <= 3
                || (want_daisy && class == LiteralClass::Daisy)
                || (!want_daisy && class == LiteralClass::Anemone);
            if !ok_class {
                failures.push(format!(
                    "P{}: vertex {v} has the wrong flower type",
                    if want_daisy { 4 } else { 3 }
                ));
            }
            let mut keys = BTreeSet::new();
            for indices in 1u64..(1 << n) - 1 {
                if want_daisy && n > 3 && !cyclic_consecutive(indices, n) {
                    continue;
                }
                let u = (0..n)
                    .filter(|&i| indices >> i & 1 == 1)
                    .fold(SubsetMask::EMPTY, |acc, i| acc | petals[i]);
                if self.ksep(u) {
                    displayed.insert(canon(u));
                    if self.in_s(u) && self.in_s(full - u) {
                        keys.insert(self.class_key(u));
                    }
                }
            }
            if keys.len() < 2 {
                failures.push(format!("P3/P4: vertex {v} has S-order below three"));
            }
            for i in 0..n {
                let neighbours: Vec<usize> = if want_daisy && n > 3 {
                    vec![(i + n - 1) % n, (i + 1) % n]
                } else {
                    (0..n).filter(|&j| j != i).collect()
                };
                if neighbours
                    .iter()
                    .any(|&j| j != i && petals[i].is_subset_of(self.full_closure(petals[j])))
                {
                    failures.push(format!("P3/P4: vertex {v} has a loose petal"));
                    break;
                }
            }
        }
        let bags: Vec<SubsetMask> = tree
            .vertices
            .iter()
            .filter_map(|x| if let Vertex::Bag(b) = x { Some(*b) } else { None })
            .collect();
        let displayed_keys: BTreeSet<_> = displayed
            .iter()
            .filter(|&&x| self.in_s(x) && self.in_s(full - x))
            .map(|&x| self.class_key(x))
            .collect();
        let strong: Vec<SubsetMask> = self.pair_sides().filter(|&x| self.strong_ksep_separation(x)).collect();
        for class in self.classes() {
            let key = self.class_key(class[0]);
            let conforms = strong.iter().filter(|&&y| self.class_key(y) == key).any(|&y| {
                displayed.contains(&y) || bags.iter().any(|&b| y.is_subset_of(b) || (full - y).is_subset_of(b))
            });
            if !conforms {
                failures.push(format!("P5: (k,S)-separation {} does not conform", class[0]));
            }
            if !displayed_keys.contains(&key) {
                failures.push(format!("maximality: class of {} is not displayed", class[0]));
            }
        }
        TreeCertificate { failures }
    }
}

fn permute(items: &[usize], visit: &mut dyn FnMut(&[usize])) {
    fn go(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            go(items, k + 1, visit);
            items.swap(k, i);
        }
    }
    let mut v = items.to_vec();
    go(&mut v, 0, visit);
}

pub fn oracle_full_closure(sys: &ConnectivitySystem, t: &Tangle, x: SubsetMask) -> Result<SubsetMask> {
    Ok(Oracle::new(sys, t)?.full_closure(x))
}

pub fn oracle_flowers(sys: &ConnectivitySystem, t: &Tangle, max_petals: usize) -> Result<Vec<OracleFlower>> {
    Oracle::new(sys, t)?.flowers(max_petals)
}

pub fn oracle_classes(sys: &ConnectivitySystem, t: &Tangle) -> Result<Vec<Vec<SubsetMask>>> {
    Ok(Oracle::new(sys, t)?.classes())
}

pub fn oracle_certify_tree(sys: &ConnectivitySystem, t: &Tangle, tree: &crate::ktree::PiTree) -> Result<bool> {
    Ok(Oracle::new(sys, t)?.certify_tree(tree).is_certified())
}

/// Recomputes closures, classes and flowers and records every place where
/// the engines disagree.
pub fn oracle_report(wb: &crate::closure::Workbench, oracle: &Oracle, max_petals: usize) -> Result<OracleReport> {
    let full = wb.full();
    let mut report = OracleReport {
        n: wb.sys().n(),
        k: wb.k(),
        ..OracleReport::default()
    };
    for x in oracle.subsets(full) {
        if !oracle.ksep(x) || !oracle.strong(x) {
            continue;
        }
        let expected = oracle.full_closure(x);
        report.closures.push((x, expected));
        if let Ok(got) = wb.full_closure(x) {
            if got != expected {
                report.disagreements.push(Disagreement {
                    what: "full closure".into(),
                    witness: vec![x, got, expected],
                });
            }
        }
        if x.contains(0) && x != full && oracle.strong(full - x) {
            report.strong_separations += 1;
        }
    }
    report.closures.sort();
    report.classes = oracle.classes();
    let engine: BTreeSet<Vec<SubsetMask>> = wb
        .index()?
        .classes()
        .iter()
        .map(|c| {
            let mut v = c.clone();
            v.sort();
            v
        })
        .collect();
    let expected: BTreeSet<Vec<SubsetMask>> = report.classes.iter().cloned().collect();
    for c in expected.symmetric_difference(&engine) {
        report.disagreements.push(Disagreement {
            what: "(k,S)-class".into(),
            witness: c.clone(),
        });
    }
    if max_petals > 0 {
        report.flowers = oracle.flowers(max_petals)?;
        for f in &report.flowers {
            let engine = crate::flower::verify_flower(wb, f.petals.clone());
            let agrees = match (&engine, &f.class) {
                (Ok(g), LiteralClass::Anemone) => g.class() == crate::flower::FlowerClass::Anemone,
                (Ok(g), LiteralClass::Daisy) => g.class() == crate::flower::FlowerClass::Daisy,
                _ => false,
            };
            if !agrees {
                report.disagreements.push(Disagreement {
                    what: "flower classification".into(),
                    witness: f.petals.clone(),
                });
            }
        }
    }
    Ok(report)
}
