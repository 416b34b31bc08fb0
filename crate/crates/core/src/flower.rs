//! k-flowers in a tangle: verification, classification, concatenation,
//! loose petals, displayed separations, conformity and refinement.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::closure::{ClassKey, Separation, Workbench};
use crate::error::{Error, Result};
use crate::subset::{GroundSet, SubsetMask};
use crate::tangle::check_partition;

/// Flowers with more petals than this are not classified by exhaustion.
pub const MAX_CLASSIFY_PETALS: usize = 20;

/// Ground sets up to this size get an exact S-order.
pub const MAX_EXACT_ORDER_ELEMENTS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowerClass {
    Anemone,
    Daisy,
}

/// A verified k-flower. Petals are cyclically ordered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flower {
    petals: Vec<SubsetMask>,
    k: i64,
    class: FlowerClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowerJson {
    pub petals: Vec<SubsetMask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<FlowerClass>,
    pub k: i64,
}

impl Flower {
    pub fn petals(&self) -> &[SubsetMask] {
        &self.petals
    }

    pub fn n(&self) -> usize {
        self.petals.len()
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn class(&self) -> FlowerClass {
        self.class
    }

    pub fn petal(&self, i: usize) -> SubsetMask {
        self.petals[i % self.petals.len()]
    }

    /// P_I for a bitmask I over petal indices.
    pub fn union(&self, indices: u64) -> SubsetMask {
        self.petals
            .iter()
            .enumerate()
            .filter(|(i, _)| indices >> i & 1 == 1)
            .fold(SubsetMask::EMPTY, |acc, (_, &p)| acc | p)
    }

    /// Indices of the petals that x is a union of, if any.
    pub fn union_indices(&self, x: SubsetMask) -> Option<u64> {
        let mut indices = 0u64;
        let mut covered = SubsetMask::EMPTY;
        for (i, &p) in self.petals.iter().enumerate() {
            if p.is_subset_of(x) {
                indices |= 1 << i;
                covered = covered | p;
            } else if p.intersects(x) {
                return None;
            }
        }
        (covered == x).then_some(indices)
    }

    pub fn is_union_of_petals(&self, x: SubsetMask) -> bool {
        self.union_indices(x).is_some()
    }

    /// True when x lies inside a single petal.
    pub fn inside_petal(&self, x: SubsetMask) -> bool {
        self.petals.iter().any(|&p| x.is_subset_of(p))
    }

    pub fn crossed_petals(&self, r: SubsetMask) -> usize {
        self.petals
            .iter()
            .filter(|&&p| p.intersects(r) && !p.is_subset_of(r))
            .count()
    }

    pub fn to_json(&self) -> FlowerJson {
        FlowerJson {
            petals: self.petals.clone(),
            class: Some(self.class),
            k: self.k,
        }
    }

    pub fn show(&self, ground: &GroundSet) -> String {
        let parts: Vec<String> = self.petals.iter().map(|&p| ground.show(p)).collect();
        format!("({})", parts.join(","))
    }
}

fn petal_mask_all(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Non-empty proper index sets that are consecutive in the cyclic order.
pub fn is_cyclically_consecutive(indices: u64, n: usize) -> bool {
    let all = petal_mask_all(n);
    if indices == 0 || indices & all == all {
        return indices != 0;
    }
    // Count run starts: positions in the set whose predecessor is not.
    (0..n)
        .filter(|&i| indices >> i & 1 == 1 && indices >> ((i + n - 1) % n) & 1 == 0)
        .count()
        == 1
}

/// Verifies a cyclic petal list as a k-flower of the workbench's tangle.
pub fn verify_flower(wb: &Workbench, petals: Vec<SubsetMask>) -> Result<Flower> {
    if petals.is_empty() {
        return Err(Error::NotAPartition);
    }
    check_partition(wb.full(), &petals)?;
    if let Some(i) = petals.iter().position(|&p| wb.is_weak(p)) {
        return Err(Error::WeakPetal(i));
    }
    let n = petals.len();
    let mut failure = None;
    for i in 0..n {
        let p = petals[i];
        if !wb.is_k_sep(p) {
            failure = Some(p);
            break;
        }
        let pair = p | petals[(i + 1) % n];
        if !wb.is_k_sep(pair) {
            failure = Some(pair);
            break;
        }
    }
    if n >= 4 {
        let shortcut = (0..n - 1).all(|i| wb.is_k_sep(petals[i] | petals[i + 1]));
        if shortcut != failure.is_none() {
            return Err(Error::Invariant(format!(
                "consecutive-union shortcut disagrees with the full flower check on {} petals",
                n
            )));
        }
    }
    if let Some(witness) = failure {
        return Err(Error::NotKSeparating(witness));
    }
    let class = classify_petals(wb, &petals)?;
    Ok(Flower {
        petals,
        k: wb.k(),
        class,
    })
}

/// Anemone when every petal union is k-separating, daisy when exactly the
/// cyclically consecutive unions are. Flowers with at most three petals are
/// anemones.
pub fn classify_petals(wb: &Workbench, petals: &[SubsetMask]) -> Result<FlowerClass> {
    let n = petals.len();
    if n <= 3 {
        return Ok(FlowerClass::Anemone);
    }
    if n > MAX_CLASSIFY_PETALS {
        return Err(Error::SearchSpaceTooLarge {
            what: "flower classification".into(),
            limit: MAX_CLASSIFY_PETALS as u64,
        });
    }
    let all = petal_mask_all(n);
    let mut anemone = true;
    let mut daisy = true;
    let mut witness = None;
    let mut union = vec![SubsetMask::EMPTY; 1 << n];
    for indices in 1..all {
        let low = indices & indices.wrapping_neg();
        let i = low.trailing_zeros() as usize;
        union[indices as usize] = union[(indices ^ low) as usize] | petals[i];
        let sep = wb.is_k_sep(union[indices as usize]);
        let consecutive = is_cyclically_consecutive(indices, n);
        if !sep {
            anemone = false;
        }
        if sep != consecutive {
            daisy = false;
            if !sep && witness.is_none() {
                witness = Some(indices);
            }
        }
        if !anemone && !daisy {
            let bad = witness.unwrap_or(indices);
            return Err(Error::DichotomyViolation(
                (0..n).filter(|&i| bad >> i & 1 == 1).collect(),
            ));
        }
    }
    Ok(if anemone {
        FlowerClass::Anemone
    } else {
        FlowerClass::Daisy
    })
}

pub fn classify(wb: &Workbench, f: &Flower) -> Result<FlowerClass> {
    classify_petals(wb, &f.petals)
}

/// Concatenation at breakpoints 0 < j_1 < .. < j_m = n: petal i of the
/// result is the union of the original petals j_{i-1}..j_i - 1.
pub fn concatenate(wb: &Workbench, f: &Flower, breakpoints: &[usize]) -> Result<Flower> {
    let n = f.n();
    let valid = !breakpoints.is_empty()
        && breakpoints.windows(2).all(|w| w[0] < w[1])
        && breakpoints[0] > 0
        && *breakpoints.last().unwrap() == n;
    if !valid {
        return Err(Error::InvalidBreakpoints(format!(
            "{breakpoints:?} is not an increasing chain ending at {n}"
        )));
    }
    let mut petals = Vec::with_capacity(breakpoints.len());
    let mut start = 0;
    for &end in breakpoints {
        petals.push(f.petals[start..end].iter().fold(SubsetMask::EMPTY, |a, &p| a | p));
        start = end;
    }
    verify_flower(wb, petals)
}

/// Petal pairs that are consecutive up to labels.
fn label_neighbours(f: &Flower, i: usize) -> Vec<usize> {
    let n = f.n();
    match f.class {
        FlowerClass::Anemone => (0..n).filter(|&j| j != i).collect(),
        FlowerClass::Daisy => {
            let (left, right) = ((i + n - 1) % n, (i + 1) % n);
            if left == right {
                vec![left]
            } else {
                vec![left, right]
            }
        }
    }
}

/// Indices of loose petals: those inside the full closure of a petal that
/// is consecutive to them up to labels.
pub fn loose_petals(wb: &Workbench, f: &Flower) -> Result<Vec<usize>> {
    let mut loose = Vec::new();
    if f.n() < 2 {
        return Ok(loose);
    }
    for i in 0..f.n() {
        for j in label_neighbours(f, i) {
            if f.petals[i].is_subset_of(wb.full_closure(f.petals[j])?) {
                loose.push(i);
                break;
            }
        }
    }
    Ok(loose)
}

/// Concatenates loose petals into an absorbing neighbour until none are
/// left. The lowest loose index goes first; the left neighbour wins ties.
pub fn tighten(wb: &Workbench, f: &Flower) -> Result<Flower> {
    let mut cur = f.clone();
    loop {
        let loose = loose_petals(wb, &cur)?;
        let Some(&i) = loose.first() else {
            return Ok(cur);
        };
        let n = cur.n();
        let p = cur.petals[i];
        let mut order: Vec<usize> = vec![(i + n - 1) % n, (i + 1) % n];
        order.extend(label_neighbours(&cur, i));
        let mut target = None;
        for j in order {
            if j != i && p.is_subset_of(wb.full_closure(cur.petals[j])?) {
                target = Some(j);
                break;
            }
        }
        let j = target.ok_or_else(|| Error::Invariant("loose petal lost its absorbing neighbour".into()))?;
        let mut petals = cur.petals.clone();
        petals[j] = petals[j] | p;
        petals.remove(i);
        cur = verify_flower(wb, petals)?;
    }
}

/// Bitmasks over petal indices of the displayed proper unions.
fn displayed_index_sets(f: &Flower) -> Result<Vec<u64>> {
    let n = f.n();
    if n < 2 {
        return Ok(Vec::new());
    }
    let all = petal_mask_all(n);
    match f.class {
        FlowerClass::Anemone => {
            if n > MAX_CLASSIFY_PETALS {
                return Err(Error::SearchSpaceTooLarge {
                    what: "anemone unions".into(),
                    limit: MAX_CLASSIFY_PETALS as u64,
                });
            }
            Ok((1..all).collect())
        }
        FlowerClass::Daisy => {
            let mut sets = Vec::new();
            for start in 0..n {
                let mut indices = 0u64;
                for len in 1..n {
                    indices |= 1 << ((start + len - 1) % n);
                    sets.push(indices);
                }
            }
            Ok(sets)
        }
    }
}

/// All k-separations displayed by the flower, canonicalized and sorted.
pub fn displayed_separations(wb: &Workbench, f: &Flower) -> Result<Vec<Separation>> {
    let full = wb.full();
    let set: BTreeSet<Separation> = displayed_index_sets(f)?
        .into_iter()
        .map(|indices| Separation::new(full, f.union(indices), wb.k()))
        .collect();
    Ok(set.into_iter().collect())
}

/// The displayed (k,S)-separations.
pub fn displayed_ks(wb: &Workbench, f: &Flower) -> Result<Vec<Separation>> {
    Ok(displayed_separations(wb, f)?
        .into_iter()
        .filter(|s| wb.is_ks(s.side))
        .collect())
}

/// Equivalence classes of the displayed (k,S)-separations.
pub fn displayed_classes(wb: &Workbench, f: &Flower) -> Result<BTreeSet<ClassKey>> {
    displayed_ks(wb, f)?.into_iter().map(|s| wb.class_key(s.side)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SOrder {
    pub value: usize,
    /// False when only an upper bound could be established.
    pub exact: bool,
}

/// Minimum number of petals of a flower displaying the same (k,S)-classes.
pub fn s_order(wb: &Workbench, f: &Flower) -> Result<SOrder> {
    let classes = displayed_classes(wb, f)?;
    match classes.len() {
        0 => return Ok(SOrder { value: 1, exact: true }),
        1 => return Ok(SOrder { value: 2, exact: true }),
        _ => {}
    }
    let tight = tighten(wb, f)?;
    if wb.sys().n() > MAX_EXACT_ORDER_ELEMENTS {
        return Ok(SOrder {
            value: tight.n().min(f.n()),
            exact: false,
        });
    }
    let upper = tight.n().min(f.n());
    for m in 3..upper {
        let mut found = false;
        for_each_flower(wb, m, &mut |petals| {
            let Ok(g) = verify_flower(wb, petals.to_vec()) else {
                return true;
            };
            if displayed_classes(wb, &g).map(|c| c == classes).unwrap_or(false) {
                found = true;
                return false;
            }
            true
        })?;
        if found {
            return Ok(SOrder { value: m, exact: true });
        }
    }
    Ok(SOrder {
        value: upper,
        exact: true,
    })
}

/// Calls `visit` on every cyclic sequence of exactly m strong k-separating
/// petals whose consecutive unions are k-separating, with element 0 in the
/// first petal. Stops early when `visit` returns false.
pub fn for_each_flower(wb: &Workbench, m: usize, visit: &mut dyn FnMut(&[SubsetMask]) -> bool) -> Result<()> {
    if wb.sys().n() > MAX_EXACT_ORDER_ELEMENTS {
        return Err(Error::SearchSpaceTooLarge {
            what: "flower enumeration".into(),
            limit: MAX_EXACT_ORDER_ELEMENTS as u64,
        });
    }
    let full = wb.full();
    let candidates: Vec<SubsetMask> = full
        .submasks()
        .filter(|&x| !x.is_empty() && wb.is_strong(x) && wb.is_k_sep(x))
        .collect();
    let mut stack = Vec::with_capacity(m);
    fn go(
        wb: &Workbench,
        full: SubsetMask,
        candidates: &[SubsetMask],
        m: usize,
        used: SubsetMask,
        stack: &mut Vec<SubsetMask>,
        visit: &mut dyn FnMut(&[SubsetMask]) -> bool,
    ) -> bool {
        let rest = full - used;
        if stack.len() + 1 == m {
            let last = rest;
            if last.is_empty() || !wb.is_strong(last) || !wb.is_k_sep(last) {
                return true;
            }
            if !wb.is_k_sep(*stack.last().unwrap() | last) || !wb.is_k_sep(stack[0] | last) {
                return true;
            }
            stack.push(last);
            let go_on = visit(stack);
            stack.pop();
            return go_on;
        }
        for &p in candidates {
            if !p.is_subset_of(rest) || (stack.is_empty() && !p.contains(0)) || p == rest {
                continue;
            }
            if let Some(&prev) = stack.last() {
                if !wb.is_k_sep(prev | p) {
                    continue;
                }
            }
            stack.push(p);
            let go_on = go(wb, full, candidates, m, used | p, stack, visit);
            stack.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    if m == 1 {
        if wb.is_strong(full) && wb.is_k_sep(full) {
            visit(&[full]);
        }
        return Ok(());
    }
    go(wb, full, &candidates, m, SubsetMask::EMPTY, &mut stack, visit);
    Ok(())
}

/// Conformity of a T-strong k-separation: some equivalent separation is
/// displayed by f or has a side inside a petal.
pub fn conforms_with_flower(wb: &Workbench, sep: Separation, f: &Flower) -> Result<bool> {
    let key = wb.class_key(sep.side)?;
    let index = wb.index()?;
    let full = wb.full();
    Ok(index
        .strong_in_class(&key)
        .iter()
        .any(|&y| f.is_union_of_petals(y) || f.inside_petal(y) || f.inside_petal(full - y)))
}

/// A member of sep's class crossing the fewest petals; ties go to the
/// smaller canonical side.
pub fn phi_minimum_representative(wb: &Workbench, sep: Separation, f: &Flower) -> Result<Separation> {
    let key = wb.class_key(sep.side)?;
    let index = wb.index()?;
    index
        .strong_in_class(&key)
        .iter()
        .copied()
        .min_by(|&a, &b| f.crossed_petals(a).cmp(&f.crossed_petals(b)).then(a.cmp(&b)))
        .map(|side| Separation { side, k: wb.k() })
        .ok_or_else(|| Error::Invariant("class without members".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    Uncrossed,
    Strong,
    Weak,
    /// One intersection strong and the other weak.
    Mixed,
}

/// How the separation with side r crosses P_I.
pub fn crossing_profile(wb: &Workbench, r: SubsetMask, f: &Flower, indices: u64) -> Crossing {
    let p = f.union(indices);
    let (a, b) = (p & r, p - r);
    if a.is_empty() || b.is_empty() {
        return Crossing::Uncrossed;
    }
    match (wb.is_strong(a), wb.is_strong(b)) {
        (true, true) => Crossing::Strong,
        (false, false) => Crossing::Weak,
        _ => Crossing::Mixed,
    }
}

/// Refines f so that it displays a separation equivalent to sep. Returns
/// None when every petal is weakly crossed by the Φ-minimum representative.
pub fn refine_with(wb: &Workbench, f: &Flower, sep: Separation) -> Result<Option<Flower>> {
    if !wb.is_ks(sep.side) {
        return Err(Error::PreconditionFailed(format!(
            "{} is not a (k,S)-separation",
            sep.side
        )));
    }
    if conforms_with_flower(wb, sep, f)? {
        return Err(Error::PreconditionFailed(format!("{} already conforms", sep.side)));
    }
    let full = wb.full();
    let r = phi_minimum_representative(wb, sep, f)?.side;
    let g = full - r;
    let n = f.n();
    let profile: Vec<Crossing> = (0..n).map(|i| crossing_profile(wb, r, f, 1 << i)).collect();
    if profile.iter().all(|&c| c == Crossing::Weak) {
        return Ok(None);
    }
    if n == 2 {
        if profile.contains(&Crossing::Weak) || profile.contains(&Crossing::Mixed) {
            return Ok(None);
        }
        let (p1, p2) = (f.petals[0], f.petals[1]);
        let petals = vec![p1 & g, p1 & r, p2 & r, p2 & g];
        return verify_flower(wb, petals).map(Some);
    }
    if let Some(i) = profile.iter().position(|&c| c == Crossing::Mixed) {
        return Err(Error::Invariant(format!(
            "petal {i} is crossed by one strong and one weak part"
        )));
    }
    if let Some(i) = profile.iter().position(|&c| c == Crossing::Weak) {
        return Err(Error::Invariant(format!(
            "petal {i} is weakly crossed while another petal is not"
        )));
    }
    let mut cur = f.clone();
    while let Some(i) = (0..cur.n()).find(|&i| {
        let p = cur.petals[i];
        p.intersects(r) && p.intersects(g)
    }) {
        cur = split_petal(wb, &cur, i, r)?;
    }
    Ok(Some(cur))
}

/// One splitting step: P_i becomes (P_i∩G', P_i∩R') with P_i∩R' placed next
/// to a petal P_j such that P_j∩R' and the remaining petals meet G' in
/// strong sets.
fn split_petal(wb: &Workbench, f: &Flower, i: usize, r: SubsetMask) -> Result<Flower> {
    let full = wb.full();
    let n = f.n();
    let p = f.petals[i];
    for j in label_neighbours(f, i) {
        for (rr, gg) in [(r, full - r), (full - r, r)] {
            let pj = f.petals[j];
            let rest = full - p - pj;
            if !wb.is_strong(pj & rr) || !wb.is_strong(rest & gg) {
                continue;
            }
            // Build the cyclic order with P_j followed by P_i∩R', P_i∩G'.
            let mut others: Vec<SubsetMask> = Vec::with_capacity(n + 1);
            let mut k = j;
            loop {
                if k != i {
                    others.push(f.petals[k]);
                }
                k = (k + 1) % n;
                if k == j {
                    break;
                }
            }
            let attempts = [
                [vec![pj, p & rr, p & gg], others[1..].to_vec()].concat(),
                [vec![p & gg, p & rr], others.clone()].concat(),
            ];
            for petals in attempts {
                if let Ok(g) = verify_flower(wb, petals) {
                    return Ok(g);
                }
            }
        }
    }
    Err(Error::Invariant(format!("no verified split of petal {i}")))
}

/// Grows a loose-free flower from a (k,S)-separation by alternately
/// tightening and refining with the first non-conforming (k,S)-separation
/// (lexicographically smallest canonical side).
pub fn maximal_flower(wb: &Workbench, seed: Separation) -> Result<Flower> {
    let full = wb.full();
    let seed = seed.canonical(full);
    if !wb.is_ks(seed.side) {
        return Err(Error::PreconditionFailed(format!(
            "seed {} is not a (k,S)-separation",
            seed.side
        )));
    }
    let f = verify_flower(wb, vec![seed.side, full - seed.side])?;
    maximal_flower_from(wb, f)
}

/// The refinement loop of [`maximal_flower`] started from an arbitrary
/// flower. The result displays an equivalent of every (k,S)-separation the
/// input displays.
pub fn maximal_flower_from(wb: &Workbench, start: Flower) -> Result<Flower> {
    let mut ks: Vec<SubsetMask> = wb.index()?.ks_sides().to_vec();
    ks.sort_by(|a, b| a.lex_cmp(*b));
    let mut f = start;
    let limit = 4 * wb.sys().n() + 8;
    for _ in 0..limit {
        f = tighten(wb, &f)?;
        let mut next = None;
        for &side in &ks {
            let sep = Separation { side, k: wb.k() };
            if !conforms_with_flower(wb, sep, &f)? {
                next = Some(sep);
                break;
            }
        }
        let Some(sep) = next else {
            return Ok(f);
        };
        match refine_with(wb, &f, sep)? {
            Some(g) => f = g,
            None => return Err(Error::NonRobustObstruction(sep.side)),
        }
    }
    Err(Error::Invariant("flower refinement did not terminate".into()))
}
