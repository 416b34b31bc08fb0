//! Matroid rank functions from tables, uniform matroids, graphs, bases and
//! sparse-paving descriptions, with axiom checks on construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::memo::Memo;
use crate::subset::{GroundSet, SubsetMask};

/// Ground sets up to this size have their rank axioms checked exhaustively.
pub const EXHAUSTIVE_RANK_CHECK: usize = 14;
/// Seed for the sampled axiom checks on larger ground sets.
pub const DEFAULT_SEED: u64 = 0x7a6e_6c65_7331;
const SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankSource {
    /// Explicit table of `2^n` ranks indexed by mask.
    Table(Vec<i64>),
    Uniform {
        r: usize,
    },
    /// Cycle matroid of a multigraph; edges are elements.
    Graphic {
        edges: Vec<(usize, usize)>,
    },
    Bases(Vec<SubsetMask>),
    /// Rank-`r` sparse paving matroid: every `r`-set is a basis except the
    /// listed circuit-hyperplanes, which have rank `r - 1`.
    SparsePaving {
        r: usize,
        circuit_hyperplanes: Vec<SubsetMask>,
    },
}

#[derive(Debug)]
pub struct RankFunction {
    ground: GroundSet,
    source: RankSource,
    cache: Memo,
}

impl Clone for RankFunction {
    fn clone(&self) -> Self {
        RankFunction {
            ground: self.ground.clone(),
            source: self.source.clone(),
            cache: self.cache.fresh_like(),
        }
    }
}

impl RankFunction {
    /// Builds a rank function and checks the matroid rank axioms.
    pub fn new(ground: GroundSet, source: RankSource) -> Result<Self> {
        Self::with_seed(ground, source, DEFAULT_SEED)
    }

    pub fn with_seed(ground: GroundSet, source: RankSource, seed: u64) -> Result<Self> {
        let rf = Self::unchecked(ground, source)?;
        if let Some(v) = rf.find_axiom_violation(seed) {
            return Err(Error::InvalidInput(format!("not a matroid rank function: {v}")));
        }
        Ok(rf)
    }

    fn unchecked(ground: GroundSet, source: RankSource) -> Result<Self> {
        let n = ground.len();
        match &source {
            RankSource::Table(t) => {
                if n > 30 || t.len() != 1usize << n {
                    return Err(Error::InvalidInput(format!(
                        "rank table has {} entries, expected 2^{n}",
                        t.len()
                    )));
                }
            }
            RankSource::Uniform { r } => {
                if *r > n {
                    return Err(Error::InvalidInput(format!("uniform rank {r} exceeds n = {n}")));
                }
            }
            RankSource::Graphic { edges } => {
                if edges.len() != n {
                    return Err(Error::InvalidInput("graphic matroid needs one element per edge".into()));
                }
            }
            RankSource::Bases(bases) => {
                let Some(first) = bases.first() else {
                    return Err(Error::InvalidInput("a matroid needs at least one basis".into()));
                };
                if bases
                    .iter()
                    .any(|b| b.len() != first.len() || !ground.contains_mask(*b))
                {
                    return Err(Error::InvalidInput("bases must be equicardinal subsets of E".into()));
                }
            }
            RankSource::SparsePaving { r, circuit_hyperplanes } => {
                if *r > n
                    || circuit_hyperplanes
                        .iter()
                        .any(|h| h.len() != *r || !ground.contains_mask(*h))
                {
                    return Err(Error::InvalidInput("circuit-hyperplanes must be r-subsets of E".into()));
                }
            }
        }
        Ok(RankFunction {
            cache: Memo::new(n),
            ground,
            source,
        })
    }

    pub fn uniform(r: usize, n: usize) -> Result<Self> {
        Self::new(GroundSet::new(n)?, RankSource::Uniform { r })
    }

    pub fn graphic(edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(GroundSet::new(edges.len())?, RankSource::Graphic { edges })
    }

    pub fn from_bases(n: usize, bases: Vec<SubsetMask>) -> Result<Self> {
        Self::new(GroundSet::new(n)?, RankSource::Bases(bases))
    }

    pub fn from_table(table: Vec<i64>) -> Result<Self> {
        let n = table.len().trailing_zeros() as usize;
        if table.len() != 1usize << n {
            return Err(Error::InvalidInput("rank table length must be a power of two".into()));
        }
        Self::new(GroundSet::new(n)?, RankSource::Table(table))
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn source(&self) -> &RankSource {
        &self.source
    }

    /// r(X), memoized.
    pub fn rank(&self, x: SubsetMask) -> i64 {
        debug_assert!(self.ground.contains_mask(x));
        match &self.source {
            RankSource::Table(t) => t[x.bits() as usize],
            RankSource::Uniform { r } => x.len().min(*r) as i64,
            _ => self.cache.get_or_insert_with(x, || self.compute(x)),
        }
    }

    /// r(M), the rank of the whole ground set.
    pub fn matroid_rank(&self) -> i64 {
        self.rank(self.ground.full())
    }

    pub fn clear_cache(&self) {
        self.cache.clear();
    }

    fn compute(&self, x: SubsetMask) -> i64 {
        match &self.source {
            RankSource::Table(t) => t[x.bits() as usize],
            RankSource::Uniform { r } => x.len().min(*r) as i64,
            RankSource::Graphic { edges } => graphic_rank(edges, x),
            RankSource::Bases(bases) => bases.iter().map(|b| (*b & x).len()).max().unwrap_or(0) as i64,
            RankSource::SparsePaving { r, circuit_hyperplanes } => {
                if x.len() == *r && circuit_hyperplanes.contains(&x) {
                    *r as i64 - 1
                } else {
                    x.len().min(*r) as i64
                }
            }
        }
    }

    /// Checks r(empty) = 0, unit increments and local submodularity.
    /// Exhaustive up to [`EXHAUSTIVE_RANK_CHECK`] elements, sampled above.
    pub fn find_axiom_violation(&self, seed: u64) -> Option<String> {
        let n = self.ground.len();
        let full = self.ground.full();
        if self.rank(SubsetMask::EMPTY) != 0 {
            return Some("r(empty) != 0".into());
        }
        let check = |x: SubsetMask| -> Option<String> {
            let rx = self.rank(x);
            let out: Vec<usize> = (full - x).iter().collect();
            for (i, &a) in out.iter().enumerate() {
                let ra = self.rank(x.with(a));
                if ra - rx != 0 && ra - rx != 1 {
                    return Some(format!("r({}) - r({}) = {}", x.with(a), x, ra - rx));
                }
                for &b in &out[i + 1..] {
                    let rb = self.rank(x.with(b));
                    let rab = self.rank(x.with(a).with(b));
                    if ra + rb < rab + rx {
                        return Some(format!("submodularity fails at {x} with {a},{b}"));
                    }
                }
            }
            None
        };
        if n <= EXHAUSTIVE_RANK_CHECK {
            full.submasks().find_map(check)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..SAMPLES).find_map(|_| check(SubsetMask::from_bits(rng.gen::<u64>()) & full))
        }
    }
}

fn graphic_rank(edges: &[(usize, usize)], x: SubsetMask) -> i64 {
    let vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut rank = 0;
    for e in x.iter() {
        let (u, v) = edges[e];
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            rank += 1;
        }
    }
    rank
}

/// The twelve 4-point planes of the cube matroid R8 (six faces, six diagonal
/// planes), with vertices labelled 1..8: bottom face 1,2,3,4, top face
/// 5,6,7,8, vertical edges 1-5, 2-6, 3-7, 4-8.
pub const R8_PLANES: [[usize; 4]; 12] = [
    [1, 2, 3, 4],
    [5, 6, 7, 8],
    [1, 2, 5, 6],
    [2, 3, 6, 7],
    [3, 4, 7, 8],
    [1, 4, 5, 8],
    [1, 2, 7, 8],
    [2, 3, 5, 8],
    [3, 4, 5, 6],
    [1, 4, 6, 7],
    [1, 3, 5, 7],
    [2, 4, 6, 8],
];

/// Ground set of R8 with labels "1".."8" on elements 0..7.
pub fn r8_ground() -> GroundSet {
    GroundSet::with_labels(8, (1..=8).map(|i| i.to_string()).collect()).expect("static labels")
}

/// Converts 1-based R8 vertex labels into a mask.
pub fn r8_set(labels: &[usize]) -> SubsetMask {
    SubsetMask::from_elements(labels.iter().map(|&l| l - 1))
}

/// Rank function of the rank-4 cube matroid R8.
pub fn build_r8_rank() -> RankFunction {
    let planes = R8_PLANES.iter().map(|p| r8_set(p)).collect();
    RankFunction::new(
        r8_ground(),
        RankSource::SparsePaving {
            r: 4,
            circuit_hyperplanes: planes,
        },
    )
    .expect("R8 is a matroid")
}
