//! π-labelled trees, partial (k,S)-tree verification, bag surgery and the
//! construction of maximal partial (k,S)-trees.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::closure::{crosses, ClassKey, GreedyOrder, Separation, Workbench};
use crate::error::{Error, Result};
use crate::flower::{
    displayed_classes as flower_classes, loose_petals, maximal_flower, maximal_flower_from, verify_flower, Flower,
    FlowerClass,
};
use crate::subset::SubsetMask;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vertex {
    /// A bag vertex; the bag may be empty.
    Bag(SubsetMask),
    Anemone,
    /// A daisy vertex with the cyclic order of its neighbours.
    Daisy(Vec<usize>),
}

impl Vertex {
    pub fn bag(&self) -> Option<SubsetMask> {
        match self {
            Vertex::Bag(b) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiTree {
    pub k: i64,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize)>,
}

impl PiTree {
    pub fn single_bag(k: i64, bag: SubsetMask) -> Self {
        PiTree {
            k,
            vertices: vec![Vertex::Bag(bag)],
            edges: Vec::new(),
        }
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
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
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.degree(v) == 1
    }

    pub fn bag_vertex(&self, bag: SubsetMask) -> Option<usize> {
        self.vertices.iter().position(|x| x.bag() == Some(bag))
    }

    pub fn bags(&self) -> impl Iterator<Item = (usize, SubsetMask)> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.bag().map(|b| (i, b)))
    }

    fn add_vertex(&mut self, v: Vertex) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    fn set_bag(&mut self, v: usize, bag: SubsetMask) {
        self.vertices[v] = Vertex::Bag(bag);
    }

    /// Union of bags in the component of `start` after deleting `blocked`.
    pub fn component_set(&self, start: usize, blocked: usize) -> SubsetMask {
        let mut seen = vec![false; self.vertices.len()];
        seen[blocked] = true;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut acc = SubsetMask::EMPTY;
        while let Some(v) = queue.pop_front() {
            if let Some(b) = self.vertices[v].bag() {
                acc = acc | b;
            }
            for w in self.neighbours(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        acc
    }

    /// Checks that the graph is a tree, that bags partition E, and that
    /// every daisy order lists exactly the incident edges.
    pub fn check_structure(&self, full: SubsetMask) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 || self.edges.len() + 1 != n {
            return Err(Error::InvalidInput("tree must have |V| - 1 edges".into()));
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidInput(format!("bad edge ({a},{b})")));
            }
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbours(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("tree is not connected".into()));
        }
        let mut covered = SubsetMask::EMPTY;
        for (_, b) in self.bags() {
            if b.intersects(covered) {
                return Err(Error::InvalidInput(format!("bags overlap on {}", b & covered)));
            }
            covered = covered | b;
        }
        if covered != full {
            return Err(Error::InvalidInput("bags do not cover the ground set".into()));
        }
        for (v, x) in self.vertices.iter().enumerate() {
            if let Vertex::Daisy(order) = x {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != self.neighbours(v) {
                    return Err(Error::InvalidInput(format!(
                        "daisy vertex {v} orders {order:?}, not its neighbours"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Partition displayed by a non-bag vertex, in its cyclic order.
    pub fn flower_partition(&self, v: usize) -> Result<Vec<SubsetMask>> {
        let order = match self.vertices.get(v) {
            Some(Vertex::Anemone) => self.neighbours(v),
            Some(Vertex::Daisy(order)) => order.clone(),
            _ => return Err(Error::NotAFlowerVertex(v)),
        };
        Ok(order.into_iter().map(|w| self.component_set(w, v)).collect())
    }

    /// Side of edge `e` containing its first endpoint, canonicalized.
    pub fn displayed_by_edge(&self, e: usize) -> Separation {
        let (a, b) = self.edges[e];
        let side = self.component_set(a, b);
        let full = side | self.component_set(b, a);
        Separation::new(full, side, self.k)
    }

    pub fn full(&self) -> SubsetMask {
        self.bags().fold(SubsetMask::EMPTY, |acc, (_, b)| acc | b)
    }
}

/// k-separations displayed by a flower vertex: all unions for an anemone,
/// consecutive unions for a daisy, filtered to the k-separating ones.
pub fn displayed_by_flower_vertex(wb: &Workbench, t: &PiTree, v: usize) -> Result<Vec<Separation>> {
    let parts = t.flower_partition(v)?;
    let n = parts.len();
    if n > 20 {
        return Err(Error::SearchSpaceTooLarge {
            what: "flower vertex unions".into(),
            limit: 20,
        });
    }
    let full = wb.full();
    let daisy = matches!(t.vertices[v], Vertex::Daisy(_)) && n > 3;
    let mut out = BTreeSet::new();
    for indices in 1u64..(1 << n) - 1 {
        if daisy && !crate::flower::is_cyclically_consecutive(indices, n) {
            continue;
        }
        let x = (0..n)
            .filter(|&i| indices >> i & 1 == 1)
            .fold(SubsetMask::EMPTY, |acc, i| acc | parts[i]);
        if wb.is_k_sep(x) {
            out.insert(Separation::new(full, x, wb.k()));
        }
    }
    Ok(out.into_iter().collect())
}

/// Every k-separation displayed by an edge or a flower vertex.
pub fn displayed_separations(wb: &Workbench, t: &PiTree) -> Result<Vec<Separation>> {
    let mut out: BTreeSet<Separation> = (0..t.edges.len()).map(|e| t.displayed_by_edge(e)).collect();
    for v in 0..t.vertices.len() {
        if t.vertices[v].bag().is_none() {
            out.extend(displayed_by_flower_vertex(wb, t, v)?);
        }
    }
    Ok(out.into_iter().collect())
}

/// Classes of the displayed (k,S)-separations.
pub fn displayed_classes(wb: &Workbench, t: &PiTree) -> Result<BTreeSet<ClassKey>> {
    displayed_separations(wb, t)?
        .into_iter()
        .filter(|s| wb.is_ks(s.side))
        .map(|s| wb.class_key(s.side))
        .collect()
}

/// A T-strong k-separation conforms with t when an equivalent separation is
/// displayed by t or has a side inside a bag.
pub fn conforms_with_tree(wb: &Workbench, sep: Separation, t: &PiTree) -> Result<bool> {
    let displayed: BTreeSet<SubsetMask> = displayed_separations(wb, t)?.into_iter().map(|s| s.side).collect();
    conforms_given(wb, sep, t, &displayed)
}

fn conforms_given(wb: &Workbench, sep: Separation, t: &PiTree, displayed: &BTreeSet<SubsetMask>) -> Result<bool> {
    let key = wb.class_key(sep.side)?;
    let full = wb.full();
    let index = wb.index()?;
    Ok(index
        .strong_in_class(&key)
        .iter()
        .any(|&y| displayed.contains(&y) || t.bags().any(|(_, b)| y.is_subset_of(b) || (full - y).is_subset_of(b))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TreeAxiom {
    P1,
    P2,
    P3,
    P4,
    P5,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeViolation {
    pub axiom: TreeAxiom,
    pub detail: String,
    pub witness: Vec<SubsetMask>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVerdict {
    pub violations: Vec<TreeViolation>,
    pub displayed: Vec<Separation>,
}

impl TreeVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failing(&self) -> BTreeSet<TreeAxiom> {
        self.violations.iter().map(|v| v.axiom).collect()
    }
}

/// Checks the five partial (k,S)-tree axioms.
pub fn verify_partial_ks_tree(wb: &Workbench, t: &PiTree) -> Result<TreeVerdict> {
    let full = wb.full();
    t.check_structure(full)?;
    let mut violations = Vec::new();
    let mut push = |axiom, detail: String, witness: Vec<SubsetMask>| {
        violations.push(TreeViolation { axiom, detail, witness });
    };
    for (e, &(a, b)) in t.edges.iter().enumerate() {
        let sep = t.displayed_by_edge(e);
        if !wb.is_strong_ksep(sep.side) {
            push(
                TreeAxiom::P1,
                format!("edge {e} is not a T-strong k-separation"),
                vec![sep.side],
            );
        } else if t.vertices[a].bag().is_some() && t.vertices[b].bag().is_some() && !wb.is_ks(sep.side) {
            push(
                TreeAxiom::P1,
                format!("edge {e} joins two bags but is not a (k,S)-separation"),
                vec![sep.side],
            );
        }
    }
    for (v, x) in t.vertices.iter().enumerate() {
        let (axiom, want) = match x {
            Vertex::Bag(_) => continue,
            Vertex::Anemone => (TreeAxiom::P3, FlowerClass::Anemone),
            Vertex::Daisy(_) => (TreeAxiom::P4, FlowerClass::Daisy),
        };
        let parts = t.flower_partition(v)?;
        let f = match verify_flower(wb, parts.clone()) {
            Ok(f) => f,
            Err(e) => {
                push(axiom, format!("vertex {v} does not display a flower: {e}"), parts);
                continue;
            }
        };
        if f.n() > 3 && f.class() != want {
            push(axiom, format!("vertex {v} displays a {:?}", f.class()), parts);
            continue;
        }
        if flower_classes(wb, &f)?.len() < 2 {
            push(axiom, format!("vertex {v} has S-order below three"), parts);
            continue;
        }
        let loose = loose_petals(wb, &f)?;
        if let Some(&i) = loose.first() {
            push(axiom, format!("vertex {v} has a loose petal"), vec![parts[i]]);
        }
    }
    let displayed = displayed_separations(wb, t)?;
    let sides: BTreeSet<SubsetMask> = displayed.iter().map(|s| s.side).collect();
    for &side in wb.index()?.ks_sides() {
        let sep = Separation { side, k: wb.k() };
        if !conforms_given(wb, sep, t, &sides)? {
            violations.push(TreeViolation {
                axiom: TreeAxiom::P5,
                detail: "a (k,S)-separation does not conform".into(),
                witness: vec![side, full - side],
            });
            break;
        }
    }
    Ok(TreeVerdict { violations, displayed })
}

/// No two edge-displayed separations cross.
pub fn laminarity_check(t: &PiTree) -> bool {
    let full = t.full();
    let seps: Vec<SubsetMask> = (0..t.edges.len()).map(|e| t.displayed_by_edge(e).side).collect();
    seps.iter()
        .enumerate()
        .all(|(i, &a)| seps[i + 1..].iter().all(|&c| !crosses(full, a, c)))
}

/// The tree associated with a flower: one bag, an edge, or a star.
pub fn flower_to_tree(f: &Flower) -> PiTree {
    let petals = f.petals();
    match petals.len() {
        1 => PiTree::single_bag(f.k(), petals[0]),
        2 => PiTree {
            k: f.k(),
            vertices: vec![Vertex::Bag(petals[0]), Vertex::Bag(petals[1])],
            edges: vec![(0, 1)],
        },
        n => {
            let centre = match f.class() {
                FlowerClass::Anemone => Vertex::Anemone,
                FlowerClass::Daisy => Vertex::Daisy((1..=n).collect()),
            };
            let mut vertices = vec![centre];
            vertices.extend(petals.iter().map(|&p| Vertex::Bag(p)));
            PiTree {
                k: f.k(),
                vertices,
                edges: (1..=n).map(|i| (0, i)).collect(),
            }
        }
    }
}

fn require_s_terminal(wb: &Workbench, t: &PiTree, leaf: usize) -> Result<SubsetMask> {
    let b = t
        .vertices
        .get(leaf)
        .and_then(Vertex::bag)
        .ok_or_else(|| Error::PreconditionFailed(format!("vertex {leaf} is not a bag vertex")))?;
    if !t.is_leaf(leaf) {
        return Err(Error::PreconditionFailed(format!("vertex {leaf} is not a leaf")));
    }
    if !wb.is_ks(b) {
        return Err(Error::PreconditionFailed(format!("bag {b} is not an S-terminal bag")));
    }
    Ok(b)
}

/// Replaces the terminal bag B by B ∪ X and every other bag B' by B' - X.
pub fn grow_terminal_bag(wb: &Workbench, t: &PiTree, leaf: usize, x: SubsetMask) -> Result<PiTree> {
    let b = require_s_terminal(wb, t, leaf)?;
    if x.is_empty() || x.intersects(b) || !x.is_subset_of(wb.full()) {
        return Err(Error::PreconditionFailed(format!(
            "{x} must be a non-empty subset of E - B"
        )));
    }
    if !wb.is_weak(x) {
        return Err(Error::PreconditionFailed(format!("{x} is not weak")));
    }
    if !wb.is_k_sep(b | x) {
        return Err(Error::PreconditionFailed(format!("B ∪ {x} is not k-separating")));
    }
    let mut out = t.clone();
    for v in 0..out.vertices.len() {
        if let Some(bag) = out.vertices[v].bag() {
            out.set_bag(v, if v == leaf { bag | x } else { bag - x });
        }
    }
    Ok(out)
}

/// Splits X off the terminal bag: the old vertex keeps X and a new leaf
/// carries B - X. Returns the tree and the new leaf.
pub fn split_terminal_bag_at(wb: &Workbench, t: &PiTree, leaf: usize, x: SubsetMask) -> Result<(PiTree, usize)> {
    let b = require_s_terminal(wb, t, leaf)?;
    if x.is_empty() || !x.is_subset_of(b) {
        return Err(Error::PreconditionFailed(format!(
            "{x} must be a non-empty subset of B"
        )));
    }
    if !wb.is_weak(x) {
        return Err(Error::PreconditionFailed(format!("{x} is not weak")));
    }
    if !wb.is_k_sep(b - x) || !wb.is_ks(b - x) {
        return Err(Error::PreconditionFailed(format!("B - {x} is not a (k,S)-side")));
    }
    let mut out = t.clone();
    out.set_bag(leaf, x);
    let v = out.add_vertex(Vertex::Bag(b - x));
    out.edges.push((leaf, v));
    Ok((out, v))
}

pub fn split_terminal_bag(wb: &Workbench, t: &PiTree, leaf: usize, x: SubsetMask) -> Result<PiTree> {
    split_terminal_bag_at(wb, t, leaf, x).map(|(t, _)| t)
}

/// Moves the terminal bag B to C with fcl(B) = fcl(C): grow B along a
/// maximal partial k-sequence, then split along the reversed sequence of C.
pub fn retarget_terminal_bag_at(wb: &Workbench, t: &PiTree, leaf: usize, c: SubsetMask) -> Result<(PiTree, usize)> {
    let b = require_s_terminal(wb, t, leaf)?;
    if !wb.is_ks(c) {
        return Err(Error::PreconditionFailed(format!("{c} is not a (k,S)-side")));
    }
    let closure = wb.full_closure(b)?;
    if closure != wb.full_closure(c)? {
        return Err(Error::PreconditionFailed(format!("closures of {b} and {c} differ")));
    }
    let mut cur = t.clone();
    for x in wb.closure_sequence(b, GreedyOrder::SmallestFirst)? {
        cur = grow_terminal_bag(wb, &cur, leaf, x)?;
    }
    let mut at = leaf;
    for y in wb.closure_sequence(c, GreedyOrder::SmallestFirst)?.into_iter().rev() {
        let (next, v) = split_terminal_bag_at(wb, &cur, at, y)?;
        cur = next;
        at = v;
    }
    Ok((cur, at))
}

pub fn retarget_terminal_bag(wb: &Workbench, t: &PiTree, leaf: usize, c: SubsetMask) -> Result<PiTree> {
    retarget_terminal_bag_at(wb, t, leaf, c).map(|(t, _)| t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extension {
    Done,
    Extended(PiTree),
}

fn require_robust(wb: &Workbench) -> Result<()> {
    if let Some(cover) = wb.tangle().robustness_witness() {
        return Err(Error::PreconditionFailed(format!(
            "the tangle is not robust: {} members cover E",
            cover.len()
        )));
    }
    Ok(())
}

/// ⊆-maximal k-separating Z with r ⊆ Z ⊆ b (or ⊊ b when `proper`);
/// largest first, ties by mask order.
fn maximal_z(wb: &Workbench, r: SubsetMask, b: SubsetMask, proper: bool) -> Option<SubsetMask> {
    let free = b - r;
    let mut best: Option<SubsetMask> = None;
    for extra in free.submasks() {
        let z = r | extra;
        if (proper && z == b) || !wb.is_k_sep(z) {
            continue;
        }
        let better = match best {
            None => true,
            Some(cur) => z.len() > cur.len() || (z.len() == cur.len() && z < cur),
        };
        if better {
            best = Some(z);
        }
    }
    best
}

/// A member of the class keyed `key` with a side contained in `bag`,
/// oriented so the returned set is that side.
fn member_inside(wb: &Workbench, key: &ClassKey, bag: SubsetMask, proper: bool) -> Result<Option<SubsetMask>> {
    let full = wb.full();
    for &y in wb.index()?.strong_in_class(key) {
        for side in [y, full - y] {
            if side.is_subset_of(bag) && (!proper || side != bag) {
                return Ok(Some(side));
            }
        }
    }
    Ok(None)
}

/// One step of the tree-extension construction. Returns Done when every
/// (k,S)-separation is equivalent to a displayed one.
pub fn extend_tree(wb: &Workbench, t: &PiTree) -> Result<Extension> {
    require_robust(wb)?;
    let index = wb.index()?;
    let shown = displayed_classes(wb, t)?;
    let missing = index
        .ks_sides()
        .iter()
        .copied()
        .find(|&side| !shown.contains(&index.key_of(side).expect("indexed")));
    let Some(target) = missing else {
        return Ok(Extension::Done);
    };
    if shown.is_empty() {
        let f = maximal_flower(
            wb,
            Separation {
                side: target,
                k: wb.k(),
            },
        )?;
        return Ok(Extension::Extended(flower_to_tree(&f)));
    }
    let key = index.key_of(target).expect("indexed");

    let mut located = None;
    for (u, b) in t.bags() {
        if let Some(r) = member_inside(wb, &key, b, false)? {
            located = Some((u, b, r));
            break;
        }
    }
    let (u, b, r) =
        located.ok_or_else(|| Error::Invariant(format!("(k,S)-separation {target} does not conform with the tree")))?;

    let (tree, leaf, r) = if t.is_leaf(u) {
        (t.clone(), u, r)
    } else {
        // Split the bag first so that R sits in a terminal bag.
        let z = maximal_z(wb, r, b, false).expect("R itself qualifies");
        let mut t2 = t.clone();
        t2.set_bag(u, b - z);
        let v = t2.add_vertex(Vertex::Bag(z));
        t2.edges.push((u, v));
        if displayed_classes(wb, &t2)?.contains(&key) {
            return checked_extension(wb, &shown, t2);
        }
        (t2, v, r)
    };
    let next = extend_at_leaf(wb, &tree, leaf, &key, r)?;
    checked_extension(wb, &shown, next)
}

fn checked_extension(wb: &Workbench, before: &BTreeSet<ClassKey>, t: PiTree) -> Result<Extension> {
    let after = displayed_classes(wb, &t)?;
    if !before.is_subset(&after) || after.len() <= before.len() {
        return Err(Error::Invariant("tree extension did not display a new class".into()));
    }
    Ok(Extension::Extended(t))
}

fn extend_at_leaf(wb: &Workbench, t: &PiTree, leaf: usize, key: &ClassKey, r: SubsetMask) -> Result<PiTree> {
    let full = wb.full();
    let b0 = t.vertices[leaf].bag().expect("bag vertex");
    if !wb.is_ks(b0) {
        return Err(Error::Invariant(format!("terminal bag {b0} is not a (k,S)-side")));
    }
    // Make E - B fully closed by splitting its closure sequence off B.
    let mut cur = t.clone();
    let mut at = leaf;
    for y in wb.closure_sequence(full - b0, GreedyOrder::SmallestFirst)? {
        let (next, v) = split_terminal_bag_at(wb, &cur, at, y)?;
        cur = next;
        at = v;
    }
    let b = cur.vertices[at].bag().expect("bag vertex");
    let r = if r.is_subset_of(b) && r != b {
        r
    } else {
        member_inside(wb, key, b, true)?
            .ok_or_else(|| Error::Invariant(format!("no equivalent of the target inside {b}")))?
    };
    let z = maximal_z(wb, r, b, true).expect("R itself qualifies");
    let w = full - z;
    let bw = b & w;
    if !wb.is_k_sep(bw) {
        let mut out = cur;
        out.set_bag(at, bw);
        let v = out.add_vertex(Vertex::Bag(z));
        out.edges.push((at, v));
        return Ok(out);
    }

    let phi = verify_flower(wb, vec![z, bw, full - b])?;
    let phi1 = maximal_flower_from(wb, phi)?;
    let closure_b = wb.full_closure(b)?;
    let n = phi1.n();
    // A displayed union C with fcl(C) = fcl(B), arranged as a prefix run.
    let runs: Vec<u64> = match phi1.class() {
        FlowerClass::Anemone => (1u64..(1 << n) - 1).collect(),
        FlowerClass::Daisy => {
            let mut v = Vec::new();
            for start in 0..n {
                let mut idx = 0u64;
                for len in 1..n {
                    idx |= 1 << ((start + len - 1) % n);
                    v.push(idx);
                }
            }
            v
        }
    };
    let mut chosen = None;
    for idx in runs {
        let c = phi1.union(idx);
        if wb.is_ks(c) && wb.full_closure(c)? == closure_b {
            chosen = Some(idx);
            break;
        }
    }
    let idx = chosen.ok_or_else(|| Error::Invariant("maximal flower lost the class of B".into()))?;
    let order: Vec<usize> = match phi1.class() {
        FlowerClass::Anemone => (0..n).filter(|&i| idx >> i & 1 == 1).collect(),
        FlowerClass::Daisy => {
            let start = (0..n)
                .find(|&i| idx >> i & 1 == 1 && idx >> ((i + n - 1) % n) & 1 == 0)
                .expect("consecutive run");
            (0..n)
                .map(|d| (start + d) % n)
                .take_while(|&i| idx >> i & 1 == 1)
                .collect()
        }
    };
    let c = phi1.union(idx);
    let mut petals: Vec<SubsetMask> = order.iter().map(|&i| phi1.petal(i)).collect();
    petals.push(full - c);
    let phi2 = verify_flower(wb, petals.clone())?;

    let (mut out, u) = retarget_terminal_bag_at(wb, &cur, at, c)?;
    let v = out.add_vertex(Vertex::Anemone);
    out.edges.push((u, v));
    let mut ring = Vec::new();
    for &p in &petals[..petals.len() - 1] {
        let leaf = out.add_vertex(Vertex::Bag(p));
        out.edges.push((v, leaf));
        ring.push(leaf);
    }
    ring.push(u);
    if phi2.class() == FlowerClass::Daisy {
        out.vertices[v] = Vertex::Daisy(ring);
    }
    out.set_bag(u, SubsetMask::EMPTY);
    Ok(out)
}

/// Builds a maximal partial (k,S)-tree: seeds with the tree of a maximal
/// flower and extends until every (k,S)-class is displayed.
pub fn build_maximal_tree(wb: &Workbench) -> Result<PiTree> {
    require_robust(wb)?;
    let index = wb.index()?;
    let classes = index.classes().len();
    let mut t = PiTree::single_bag(wb.k(), wb.full());
    for _ in 0..=classes {
        match extend_tree(wb, &t)? {
            Extension::Done => return Ok(t),
            Extension::Extended(next) => t = next,
        }
    }
    Err(Error::Invariant("tree extension did not terminate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::{r8_set, RankFunction};
    use crate::system::ConnectivitySystem;
    use crate::tangle::{canonical_vertical_tangle, Tangle};

    #[test]
    fn r8_tree_fails_p5() {
        let sys = ConnectivitySystem::r8_polymatroid(1).unwrap();
        let members = std::iter::once(SubsetMask::EMPTY).chain((0..8).map(SubsetMask::singleton));
        let t = Tangle::new(sys.ground(), 4, members).unwrap();
        let wb = Workbench::new(&sys, &t);
        let phi = vec![r8_set(&[1, 2]), r8_set(&[3, 4]), r8_set(&[5, 6]), r8_set(&[7, 8])];
        let f = verify_flower(&wb, phi).unwrap();
        let tree = flower_to_tree(&f);
        assert_eq!(tree.vertices[0], Vertex::Anemone);
        let verdict = verify_partial_ks_tree(&wb, &tree).unwrap();
        assert_eq!(verdict.failing(), BTreeSet::from([TreeAxiom::P5]));
        assert_eq!(verdict.violations[0].witness[0], r8_set(&[1, 3, 5, 7]));
        assert!(laminarity_check(&tree));
        assert!(matches!(build_maximal_tree(&wb), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn u26_tree_is_a_star_with_empty_centre() {
        let rank = RankFunction::uniform(2, 6).unwrap();
        let t = canonical_vertical_tangle(&rank, 2).unwrap();
        let sys = ConnectivitySystem::from_matroid(rank).unwrap();
        let wb = Workbench::new(&sys, &t);
        let tree = build_maximal_tree(&wb).unwrap();
        let verdict = verify_partial_ks_tree(&wb, &tree).unwrap();
        assert!(verdict.is_ok(), "{:?}", verdict.violations);
        let classes: BTreeSet<ClassKey> = wb
            .index()
            .unwrap()
            .ks_sides()
            .iter()
            .map(|&s| wb.class_key(s).unwrap())
            .collect();
        assert_eq!(displayed_classes(&wb, &tree).unwrap(), classes);
    }

    #[test]
    fn structure_checks() {
        let t = PiTree {
            k: 2,
            vertices: vec![
                Vertex::Bag(SubsetMask::from_elements([0])),
                Vertex::Bag(SubsetMask::from_elements([1])),
            ],
            edges: vec![],
        };
        assert!(t.check_structure(SubsetMask::from_elements([0, 1])).is_err());
        let t = PiTree {
            edges: vec![(0, 1)],
            ..t
        };
        assert!(t.check_structure(SubsetMask::from_elements([0, 1])).is_ok());
        assert!(laminarity_check(&t));
    }
}
