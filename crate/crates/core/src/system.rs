//! Connectivity systems: a ground set with a symmetric submodular integer
//! function λ, built from matroids, graphs, the R8 polymatroids or tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::memo::Memo;
use crate::rank::{build_r8_rank, RankFunction, DEFAULT_SEED};
use crate::subset::{GroundSet, SubsetMask};

/// Pairs are checked exhaustively up to this many elements.
pub const EXHAUSTIVE_PAIR_CHECK: usize = 12;
const SAMPLED_PAIRS: usize = 200_000;
const MAX_WITNESSES_PER_AXIOM: usize = 16;

#[derive(Clone, Debug)]
pub enum SystemKind {
    /// λ_M(X) = r(X) + r(E-X) - r(M) + 1.
    Matroid(RankFunction),
    /// λ_G(X) counts vertices meeting an edge of X and an edge of E-X.
    Graph { edges: Vec<(usize, usize)> },
    /// Connectivity function of f_ℓ on R8, where f_ℓ(X) = r(X) + ℓ for
    /// non-empty X and f_ℓ(∅) = 0.
    PolymatroidR8 { ell: i64, rank: RankFunction },
    /// Explicit λ values indexed by mask.
    Table(Vec<i64>),
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Matroid(_) => "matroid",
            SystemKind::Graph { .. } => "graph",
            SystemKind::PolymatroidR8 { .. } => "r8_polymatroid",
            SystemKind::Table(_) => "table",
        }
    }
}

#[derive(Debug)]
pub struct ConnectivitySystem {
    ground: GroundSet,
    kind: SystemKind,
    /// Non-loop incident edges per vertex, for graph systems.
    incidence: Vec<SubsetMask>,
    cache: Memo,
}

impl Clone for ConnectivitySystem {
    fn clone(&self) -> Self {
        ConnectivitySystem {
            ground: self.ground.clone(),
            kind: self.kind.clone(),
            incidence: self.incidence.clone(),
            cache: self.cache.fresh_like(),
        }
    }
}

/// Which axiom a witness violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectivityAxiom {
    Symmetry,
    Submodularity,
    /// λ(X) ≥ λ(∅).
    LowerBound,
    /// λ(X) + λ(Y) ≥ λ(X-Y) + λ(Y-X).
    Posimodularity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub axiom: ConnectivityAxiom,
    pub x: SubsetMask,
    pub y: Option<SubsetMask>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub exhaustive: bool,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::ViolationFound(match v.y {
                Some(y) => format!("{:?} fails for ({}, {})", v.axiom, v.x, y),
                None => format!("{:?} fails for {}", v.axiom, v.x),
            })),
        }
    }
}

impl ConnectivitySystem {
    /// Builds a system; axioms are verified exhaustively when n ≤ 12.
    pub fn new(ground: GroundSet, kind: SystemKind) -> Result<Self> {
        let verify = ground.len() <= EXHAUSTIVE_PAIR_CHECK;
        Self::build(ground, kind, verify)
    }

    /// Builds a system, verifying the axioms only when asked.
    pub fn build(ground: GroundSet, kind: SystemKind, verify: bool) -> Result<Self> {
        let n = ground.len();
        let incidence = match &kind {
            SystemKind::Matroid(rank) => {
                if rank.ground().len() != n {
                    return Err(Error::InvalidInput("rank function ground set mismatch".into()));
                }
                Vec::new()
            }
            SystemKind::PolymatroidR8 { ell, rank } => {
                if *ell < 1 || n != 8 || rank.ground().len() != 8 {
                    return Err(Error::InvalidInput("R8 polymatroid needs ℓ ≥ 1 on 8 elements".into()));
                }
                Vec::new()
            }
            SystemKind::Graph { edges } => {
                if edges.len() != n {
                    return Err(Error::InvalidInput("graph system needs one element per edge".into()));
                }
                let vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
                let mut inc = vec![SubsetMask::EMPTY; vertices];
                for (e, &(u, v)) in edges.iter().enumerate() {
                    if u != v {
                        inc[u] = inc[u].with(e);
                        inc[v] = inc[v].with(e);
                    }
                }
                inc
            }
            SystemKind::Table(values) => {
                if n > 30 || values.len() != 1usize << n {
                    return Err(Error::InvalidInput(format!(
                        "λ table has {} entries, expected 2^{n}",
                        values.len()
                    )));
                }
                Vec::new()
            }
        };
        let sys = ConnectivitySystem {
            cache: Memo::new(n),
            ground,
            kind,
            incidence,
        };
        if verify {
            sys.verify_connectivity_axioms(DEFAULT_SEED).into_result()?;
        }
        Ok(sys)
    }

    pub fn from_matroid(rank: RankFunction) -> Result<Self> {
        Self::new(rank.ground().clone(), SystemKind::Matroid(rank))
    }

    pub fn from_graph(edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(GroundSet::new(edges.len())?, SystemKind::Graph { edges })
    }

    /// The connectivity function λ_ℓ of the polymatroid f_ℓ on R8.
    pub fn r8_polymatroid(ell: i64) -> Result<Self> {
        let rank = build_r8_rank();
        Self::new(rank.ground().clone(), SystemKind::PolymatroidR8 { ell, rank })
    }

    pub fn from_table(values: Vec<i64>) -> Result<Self> {
        let n = values.len().trailing_zeros() as usize;
        if values.len() != 1usize << n {
            return Err(Error::InvalidInput("λ table length must be a power of two".into()));
        }
        Self::new(GroundSet::new(n)?, SystemKind::Table(values))
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn full(&self) -> SubsetMask {
        self.ground.full()
    }

    pub fn complement(&self, x: SubsetMask) -> SubsetMask {
        self.ground.complement(x)
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn rank_function(&self) -> Option<&RankFunction> {
        match &self.kind {
            SystemKind::Matroid(r) => Some(r),
            _ => None,
        }
    }

    /// λ(X), memoized. Symmetric by construction for every built-in kind.
    #[inline]
    pub fn lambda(&self, x: SubsetMask) -> i64 {
        debug_assert!(self.ground.contains_mask(x), "{x} outside ground set");
        match &self.kind {
            SystemKind::Table(values) => values[x.bits() as usize],
            _ => self.cache.get_or_insert_with(x, || self.compute(x)),
        }
    }

    pub fn clear_cache(&self) {
        self.cache.clear();
        if let SystemKind::Matroid(r) | SystemKind::PolymatroidR8 { rank: r, .. } = &self.kind {
            r.clear_cache();
        }
    }

    fn compute(&self, x: SubsetMask) -> i64 {
        let y = self.complement(x);
        match &self.kind {
            SystemKind::Matroid(r) => r.rank(x) + r.rank(y) - r.matroid_rank() + 1,
            SystemKind::Graph { .. } => self
                .incidence
                .iter()
                .filter(|&&inc| inc.intersects(x) && inc.intersects(y))
                .count() as i64,
            SystemKind::PolymatroidR8 { ell, rank } => {
                let f = |s: SubsetMask| if s.is_empty() { 0 } else { rank.rank(s) + ell };
                f(x) + f(y) - f(self.full()) + 1
            }
            SystemKind::Table(values) => values[x.bits() as usize],
        }
    }

    pub fn is_k_separating(&self, x: SubsetMask, k: i64) -> bool {
        self.lambda(x) <= k
    }

    pub fn is_exactly_k_separating(&self, x: SubsetMask, k: i64) -> bool {
        self.lambda(x) == k
    }

    /// Checks symmetry, submodularity and both consequences λ(X) ≥ λ(∅) and
    /// λ(X)+λ(Y) ≥ λ(X-Y)+λ(Y-X). Exhaustive for n ≤ 12, otherwise sampled
    /// with a seeded generator.
    pub fn verify_connectivity_axioms(&self, seed: u64) -> AxiomReport {
        let full = self.full();
        let exhaustive = self.n() <= EXHAUSTIVE_PAIR_CHECK;
        let mut out = Collector {
            report: AxiomReport {
                exhaustive,
                violations: Vec::new(),
            },
            counts: [0; 4],
        };
        let empty = self.lambda(SubsetMask::EMPTY);
        let single = |out: &mut Collector, x: SubsetMask| {
            let lx = self.lambda(x);
            if lx != self.lambda(full - x) {
                out.push(ConnectivityAxiom::Symmetry, x, None);
            }
            if lx < empty {
                out.push(ConnectivityAxiom::LowerBound, x, None);
            }
        };
        let pair = |out: &mut Collector, x: SubsetMask, y: SubsetMask| {
            let (lx, ly) = (self.lambda(x), self.lambda(y));
            if lx + ly < self.lambda(x | y) + self.lambda(x & y) {
                out.push(ConnectivityAxiom::Submodularity, x, Some(y));
            }
            if lx + ly < self.lambda(x - y) + self.lambda(y - x) {
                out.push(ConnectivityAxiom::Posimodularity, x, Some(y));
            }
        };
        if exhaustive {
            for x in full.submasks() {
                single(&mut out, x);
            }
            let all: Vec<SubsetMask> = full.submasks().collect();
            for (i, &x) in all.iter().enumerate() {
                for &y in &all[i + 1..] {
                    pair(&mut out, x, y);
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..SAMPLED_PAIRS {
                let x = SubsetMask::from_bits(rng.gen::<u64>()) & full;
                let y = SubsetMask::from_bits(rng.gen::<u64>()) & full;
                single(&mut out, x);
                pair(&mut out, x, y);
            }
        }
        out.report
    }
}

/// Keeps at most a fixed number of witnesses per axiom.
struct Collector {
    report: AxiomReport,
    counts: [usize; 4],
}

impl Collector {
    fn push(&mut self, axiom: ConnectivityAxiom, x: SubsetMask, y: Option<SubsetMask>) {
        let slot = &mut self.counts[axiom as usize];
        if *slot < MAX_WITNESSES_PER_AXIOM {
            *slot += 1;
            self.report.violations.push(AxiomViolation { axiom, x, y });
        }
    }
}

/// Loose vertical k-connectivity: every (k-1)-separation (X, Y) of λ_M has
/// r(X) ≤ k-2 or r(Y) ≤ k-2. Returns a violating side, if any.
pub fn vertical_connectivity_witness(rank: &RankFunction, k: i64) -> Result<Option<SubsetMask>> {
    if k < 2 {
        return Err(Error::PreconditionFailed(format!(
            "vertical k-connectivity needs k ≥ 2, got {k}"
        )));
    }
    let ground = rank.ground();
    if ground.len() > 24 {
        return Err(Error::SearchSpaceTooLarge {
            what: "vertical connectivity check".into(),
            limit: 1 << 24,
        });
    }
    let rm = rank.matroid_rank();
    let full = ground.full();
    Ok(full.submasks().find(|&x| {
        let y = full - x;
        let (rx, ry) = (rank.rank(x), rank.rank(y));
        rx + ry - rm + 1 < k && rx > k - 2 && ry > k - 2
    }))
}

pub fn is_vertically_k_connected(rank: &RankFunction, k: i64) -> Result<bool> {
    Ok(vertical_connectivity_witness(rank, k)?.is_none())
}
