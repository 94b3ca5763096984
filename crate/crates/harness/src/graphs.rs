// SPDX-License-Identifier: Apache-2.0

//! Directed graphs stored as one node index: each node document carries its
//! `id`, a `layer` tag and the multi-valued `out` list of successor ids.

use docjoin_core::pathquery::{PathQuerySpec, PathSemantics};
use docjoin_core::{Document, FieldValue, Filter, Scalar};
use rand::Rng;

use crate::dataset::Sections;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub adj: Vec<Vec<usize>>,
    pub layer: Vec<i64>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], layer: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if !self.adj[u].contains(&v) {
            self.adj[u].push(v);
        }
    }

    pub fn documents(&self) -> Vec<Document> {
        (0..self.len())
            .map(|u| {
                let d = Document::new().with("id", u as i64).with("layer", self.layer[u]);
                if self.adj[u].is_empty() {
                    d
                } else {
                    d.with("out", FieldValue::Many(self.adj[u].iter().map(|&v| Scalar::Int(v as i64)).collect()))
                }
            })
            .collect()
    }

    pub fn sections(&self, index: &str, shards: usize) -> Sections {
        let mut s = Sections::default();
        s.push(index, "id", shards, self.documents());
        s
    }
}

/// Source layer 0 holds node 0; each of the `l` further layers holds `b`
/// nodes, fully connected to the previous layer. Layer `l` is the target:
/// `b^l` paths of length `l` lead there.
pub fn layered(b: usize, l: usize) -> Graph {
    let mut g = Graph::new(1 + b * l);
    let layer_nodes = |k: usize| if k == 0 { 0..1 } else { 1 + (k - 1) * b..1 + k * b };
    for k in 1..=l {
        for v in layer_nodes(k) {
            g.layer[v] = k as i64;
            for u in layer_nodes(k - 1) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// u -> {a, b} -> v with ids u=0, a=1, b=2, v=3.
pub fn diamond() -> Graph {
    let mut g = Graph::new(4);
    for (u, v) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        g.add_edge(u, v);
    }
    g
}

/// u -> a -> v plus the dead end u -> c; ids u=0, a=1, v=2, c=3.
pub fn chain_with_dead_end() -> Graph {
    let mut g = Graph::new(4);
    for (u, v) in [(0, 1), (1, 2), (0, 3)] {
        g.add_edge(u, v);
    }
    g
}

/// `n` nodes, each with up to `max_out` distinct successors (self loops
/// allowed), capped at `max_edges` overall.
pub fn random_graph(rng: &mut impl Rng, n: usize, max_out: usize, max_edges: usize) -> Graph {
    let mut g = Graph::new(n);
    let mut edges = 0;
    for u in 0..n {
        let k = rng.gen_range(0..=max_out);
        for _ in 0..k {
            if edges >= max_edges {
                return g;
            }
            let before = g.adj[u].len();
            g.add_edge(u, rng.gen_range(0..n));
            edges += g.adj[u].len() - before;
        }
    }
    g
}

/// Paths from node `source` to nodes tagged `target_layer`.
pub fn layer_spec(index: &str, source: usize, target_layer: i64, max_len: usize, semantics: PathSemantics) -> PathQuerySpec {
    PathQuerySpec::homogeneous(index, "out", "id", Filter::term("id", source as i64), Filter::term("layer", target_layer), max_len, semantics)
}

/// Paths between two node ids.
pub fn pair_spec(index: &str, source: usize, target: usize, max_len: usize, semantics: PathSemantics) -> PathQuerySpec {
    PathQuerySpec::homogeneous(index, "out", "id", Filter::term("id", source as i64), Filter::term("id", target as i64), max_len, semantics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_shape() {
        let g = layered(8, 6);
        assert_eq!(g.len(), 49);
        assert_eq!(g.edge_count(), 8 + 5 * 64);
        assert_eq!(g.layer.iter().filter(|&&l| l == 6).count(), 8);
    }

    #[test]
    fn random_graph_respects_caps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 100, 10, 300);
        assert!(g.edge_count() <= 300);
        assert!(g.adj.iter().all(|a| a.len() <= 10));
    }

    use rand::SeedableRng;
}
