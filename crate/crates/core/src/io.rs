//! JSON descriptions of connectivity systems and DOT rendering of flowers
//! and trees.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flower::{Flower, FlowerClass};
use crate::ktree::{PiTree, Vertex};
use crate::rank::{RankFunction, RankSource};
use crate::subset::{GroundSet, SubsetMask};
use crate::system::{ConnectivitySystem, SystemKind, EXHAUSTIVE_PAIR_CHECK};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatroidSource {
    Bases(Vec<SubsetMask>),
    Uniform { r: usize, n: usize },
    RankTable(Vec<i64>),
    Graphic(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemJson {
    Matroid {
        source: MatroidSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Graph {
        edges: Vec<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    R8Polymatroid {
        ell: i64,
    },
    Table {
        n: usize,
        lambda: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

fn ground(n: usize, labels: Option<Vec<String>>) -> Result<GroundSet> {
    match labels {
        Some(l) => GroundSet::with_labels(n, l),
        None => GroundSet::new(n),
    }
}

impl SystemJson {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("system JSON: {e}")))
    }

    /// Builds the system. With `verify` unset the connectivity axioms are
    /// checked only when the ground set is small enough for the default policy.
    pub fn build(self, verify: Option<bool>) -> Result<ConnectivitySystem> {
        let (g, kind) = match self {
            SystemJson::Matroid { source, n, labels } => {
                let (size, src) = match source {
                    MatroidSource::Uniform { r, n } => (n, RankSource::Uniform { r }),
                    MatroidSource::RankTable(t) => (t.len().trailing_zeros() as usize, RankSource::Table(t)),
                    MatroidSource::Graphic(edges) => (edges.len(), RankSource::Graphic { edges }),
                    MatroidSource::Bases(b) => {
                        let size = n
                            .or_else(|| {
                                b.iter()
                                    .map(|x| x.bits())
                                    .fold(0, |a, x| a | x)
                                    .checked_ilog2()
                                    .map(|h| h as usize + 1)
                            })
                            .ok_or_else(|| Error::InvalidInput("bases source needs at least one element".into()))?;
                        (size, RankSource::Bases(b))
                    }
                };
                let g = ground(size, labels)?;
                let rank = RankFunction::new(g.clone(), src)?;
                (g, SystemKind::Matroid(rank))
            }
            SystemJson::Graph { edges, labels } => (ground(edges.len(), labels)?, SystemKind::Graph { edges }),
            SystemJson::R8Polymatroid { ell } => return ConnectivitySystem::r8_polymatroid(ell),
            SystemJson::Table { n, lambda, labels } => (ground(n, labels)?, SystemKind::Table(lambda)),
        };
        let verify = verify.unwrap_or(g.len() <= EXHAUSTIVE_PAIR_CHECK);
        ConnectivitySystem::build(g, kind, verify)
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Anemones render as stars, daisies as a cycle around a centre.
pub fn flower_to_dot(f: &Flower, g: &GroundSet) -> String {
    let mut out = String::from("graph flower {\n");
    let n = f.n();
    let centre = match f.class() {
        FlowerClass::Anemone => "A",
        FlowerClass::Daisy => "D",
    };
    writeln!(out, "  c [shape=circle, label={}];", quote(centre)).unwrap();
    for (i, &p) in f.petals().iter().enumerate() {
        writeln!(out, "  p{i} [shape=box, label={}];", quote(&g.show(p))).unwrap();
        writeln!(out, "  c -- p{i};").unwrap();
    }
    if f.class() == FlowerClass::Daisy && n > 1 {
        for i in 0..n {
            writeln!(out, "  p{i} -- p{} [style=dashed];", (i + 1) % n).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// Bags are boxes listing their elements; flower vertices are circles, and
/// the edges at a daisy vertex carry their cyclic position.
pub fn tree_to_dot(t: &PiTree, g: &GroundSet) -> String {
    let mut out = String::from("graph tree {\n");
    for (v, x) in t.vertices.iter().enumerate() {
        let line = match x {
            Vertex::Bag(b) => format!("  v{v} [shape=box, label={}];", quote(&g.show(*b))),
            Vertex::Anemone => format!("  v{v} [shape=circle, label=\"A\"];"),
            Vertex::Daisy(_) => format!("  v{v} [shape=circle, label=\"D\"];"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    for &(a, b) in &t.edges {
        let position = [a, b].iter().find_map(|&v| match &t.vertices[v] {
            Vertex::Daisy(order) => {
                let other = if v == a { b } else { a };
                order.iter().position(|&u| u == other)
            }
            _ => None,
        });
        match position {
            Some(i) => writeln!(out, "  v{a} -- v{b} [label=\"{}\"];", i + 1).unwrap(),
            None => writeln!(out, "  v{a} -- v{b};").unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
