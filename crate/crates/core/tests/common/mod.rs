#![allow(dead_code)]

use tangleforge::subset::SubsetMask;
use tangleforge::{enumerate_tangles, ConnectivitySystem, RankFunction, Tangle};

pub struct Instance {
    pub name: String,
    pub sys: ConnectivitySystem,
    pub k: i64,
}

impl Instance {
    pub fn new(name: impl Into<String>, sys: ConnectivitySystem, k: i64) -> Self {
        Instance {
            name: name.into(),
            sys,
            k,
        }
    }

    /// The unique tangle of order k; every corpus instance has exactly one.
    pub fn tangle(&self) -> Tangle {
        let mut ts = enumerate_tangles(&self.sys, self.k).unwrap();
        assert_eq!(ts.len(), 1, "{} should have one tangle of order {}", self.name, self.k);
        ts.pop().unwrap()
    }
}

pub fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn cycle_with_pendants(n: usize) -> Vec<(usize, usize)> {
    let mut e = cycle(n);
    e.extend((0..n).map(|i| (i, n + i)));
    e
}

pub fn theta() -> Vec<(usize, usize)> {
    vec![(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 3), (0, 6), (6, 7), (7, 3)]
}

pub fn ladder() -> Vec<(usize, usize)> {
    vec![
        (0, 1),
        (1, 2),
        (2, 3),
        (4, 5),
        (5, 6),
        (6, 7),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ]
}

pub fn cube() -> Vec<(usize, usize)> {
    vec![
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 0),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 4),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ]
}

pub fn k4_with_path() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 0)]
}

pub fn wheel4() -> Vec<(usize, usize)> {
    vec![(0, 1), (1, 2), (2, 3), (3, 0), (4, 0), (4, 1), (4, 2), (4, 3)]
}

pub fn graph(edges: Vec<(usize, usize)>) -> ConnectivitySystem {
    ConnectivitySystem::from_graph(edges).unwrap()
}

pub fn graphic(edges: Vec<(usize, usize)>) -> ConnectivitySystem {
    ConnectivitySystem::from_matroid(RankFunction::graphic(edges).unwrap()).unwrap()
}

pub fn uniform(r: usize, n: usize) -> ConnectivitySystem {
    ConnectivitySystem::from_matroid(RankFunction::uniform(r, n).unwrap()).unwrap()
}

pub fn r8() -> ConnectivitySystem {
    ConnectivitySystem::r8_polymatroid(1).unwrap()
}

/// Instances whose tangle is robust, small enough for the oracle.
pub fn robust_corpus() -> Vec<Instance> {
    vec![
        Instance::new("U(2,6)", uniform(2, 6), 2),
        Instance::new("U(5,6)", uniform(5, 6), 2),
        Instance::new("C6 graph", graph(cycle(6)), 2),
        Instance::new(
            "C4 with pendants",
            graph(vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 5)]),
            2,
        ),
        Instance::new("C5 with pendants", graph(cycle_with_pendants(5)), 2),
        Instance::new("theta graph", graph(theta()), 2),
        Instance::new("theta matroid", graphic(theta()), 2),
        Instance::new("ladder matroid", graphic(ladder()), 2),
        Instance::new("K4 with path matroid", graphic(k4_with_path()), 2),
        Instance::new("K4 with path graph", graph(k4_with_path()), 2),
    ]
}

/// Everything the closure and flower suites run over, robust or not.
pub fn closure_corpus() -> Vec<Instance> {
    let mut v = vec![
        Instance::new("R8", r8(), 4),
        Instance::new("W4 matroid", graphic(wheel4()), 3),
        Instance::new("U(3,7)", uniform(3, 7), 3),
    ];
    v.extend(robust_corpus());
    v
}

pub fn strong_k_separating(sys: &ConnectivitySystem, t: &Tangle) -> Vec<SubsetMask> {
    let k = t.k();
    sys.full()
        .submasks()
        .filter(|&x| sys.lambda(x) <= k && t.is_strong(x))
        .collect()
}
