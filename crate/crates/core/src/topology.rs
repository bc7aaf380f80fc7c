//! Directed communication graphs.
//!
//! An edge `j -> i` means agent `i` can receive from agent `j`. Every node
//! carries an explicit self-loop so that weight construction never has to
//! special-case the diagonal.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable directed graph on nodes `0..n` with self-loops on every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    /// `in_nbrs[i]` holds every `j` with an edge `j -> i`, including `i`.
    in_nbrs: Vec<BTreeSet<usize>>,
    /// `out_nbrs[j]` holds every `i` with an edge `j -> i`, including `j`.
    out_nbrs: Vec<BTreeSet<usize>>,
}

/// Shape of the base ring used by [`generate_ring_plus_random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RingKind {
    /// `i -> i+1 mod n` only.
    #[default]
    Directed,
    /// `i -> i+1` and `i+1 -> i`.
    Bidirectional,
}

impl DirectedGraph {
    /// Graph with only self-loops.
    pub fn empty(n: usize) -> Self {
        let loops = (0..n).map(|i| BTreeSet::from([i])).collect::<Vec<_>>();
        Self {
            n,
            in_nbrs: loops.clone(),
            out_nbrs: loops,
        }
    }

    /// Builds a graph from `(from, to)` pairs; self-loops are added for every node.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut g = Self::empty(n);
        for (from, to) in edges {
            g.insert(from, to)?;
        }
        Ok(g)
    }

    fn insert(&mut self, from: usize, to: usize) -> Result<bool> {
        if from >= self.n || to >= self.n {
            return Err(Error::invalid(format!(
                "edge {from} -> {to} has an endpoint outside [0, {})",
                self.n
            )));
        }
        let fresh = self.in_nbrs[to].insert(from);
        self.out_nbrs[from].insert(to);
        Ok(fresh)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.n && to < self.n && self.in_nbrs[to].contains(&from)
    }

    /// In-neighbors of `i`, including `i` itself.
    pub fn in_neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.in_nbrs[i]
    }

    /// Out-neighbors of `j`, including `j` itself.
    pub fn out_neighbors(&self, j: usize) -> &BTreeSet<usize> {
        &self.out_nbrs[j]
    }

    /// Number of in-neighbors of `i` other than `i`.
    pub fn in_degree(&self, i: usize) -> usize {
        self.in_nbrs[i].len() - 1
    }

    /// Number of out-neighbors of `j` other than `j`.
    pub fn out_degree(&self, j: usize) -> usize {
        self.out_nbrs[j].len() - 1
    }

    /// All edges as `(from, to)`, self-loops included, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (from, targets) in self.out_nbrs.iter().enumerate() {
            out.extend(targets.iter().map(|&to| (from, to)));
        }
        out
    }

    /// Edge count excluding self-loops.
    pub fn link_count(&self) -> usize {
        self.in_nbrs.iter().map(|s| s.len() - 1).sum()
    }

    pub fn transpose(&self) -> Self {
        Self {
            n: self.n,
            in_nbrs: self.out_nbrs.clone(),
            out_nbrs: self.in_nbrs.clone(),
        }
    }

    /// Nodes reachable from `root` along directed edges (including `root`).
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(j) = queue.pop_front() {
            for &i in &self.out_nbrs[j] {
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen
    }

    /// Serializes as `n <count>` followed by one `from to` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {}\n", self.n);
        for (from, to) in self.edges() {
            let _ = writeln!(s, "{from} {to}");
        }
        s
    }
}

impl FromStr for DirectedGraph {
    type Err = Error;

    /// Parses the edge-list format. Blank lines and `#` comments are ignored;
    /// self-loops are implied whether or not they are listed.
    fn from_str(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected two fields, got `{line}`"),
                    })
                }
            };
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("`{s}`: {e}"),
                })
            };
            if n.is_none() {
                if a != "n" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "missing `n <count>` header".into(),
                    });
                }
                n = Some(parse(b)?);
            } else {
                edges.push((parse(a)?, parse(b)?));
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            message: "empty edge list".into(),
        })?;
        DirectedGraph::from_edges(n, edges)
    }
}

/// Ring of `n` nodes plus each remaining ordered non-adjacent pair with
/// probability `p_add`. Deterministic for a fixed seed.
pub fn generate_ring_plus_random(
    n: usize,
    p_add: f64,
    seed: u64,
    ring: RingKind,
) -> Result<DirectedGraph> {
    if n < 2 {
        return Err(Error::invalid(format!("ring needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p_add) {
        return Err(Error::invalid(format!("p_add must lie in [0, 1], got {p_add}")));
    }
    let mut g = DirectedGraph::empty(n);
    for i in 0..n {
        let next = (i + 1) % n;
        g.insert(i, next)?;
        if ring == RingKind::Bidirectional {
            g.insert(next, i)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fixed visiting order keeps the edge set a pure function of the seed.
    for from in 0..n {
        for to in 0..n {
            if from == to || g.has_edge(from, to) {
                continue;
            }
            if rng.random::<f64>() < p_add {
                g.insert(from, to)?;
            }
        }
    }
    Ok(g)
}

/// Nodes from which every node is reachable.
pub fn spanning_tree_roots(g: &DirectedGraph) -> BTreeSet<usize> {
    let n = g.node_count();
    // A node is a root iff it reaches everything; roots form one strongly
    // connected class, so a reverse search from any root finds all of them.
    let Some(first) = (0..n).find(|&r| g.reachable_from(r).iter().all(|&b| b)) else {
        return BTreeSet::new();
    };
    let reaches_first = g.transpose().reachable_from(first);
    (0..n)
        .filter(|&r| reaches_first[r] && (r == first || g.reachable_from(r).iter().all(|&b| b)))
        .collect()
}

/// Outcome of the common-root check between the pull and push graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCheck {
    pub holds: bool,
    pub common_root: Option<usize>,
    pub pull_roots: Vec<usize>,
    pub push_transpose_roots: Vec<usize>,
}

impl RootCheck {
    pub fn diagnostic(&self) -> String {
        match self.common_root {
            Some(r) => format!("node {r} roots spanning trees of both the pull graph and the transposed push graph"),
            None => format!(
                "no common root: pull-graph roots {:?}, transposed push-graph roots {:?}",
                self.pull_roots, self.push_transpose_roots
            ),
        }
    }
}

/// Checks that some node roots a spanning tree of `pull` and of `push`ᵀ.
///
/// `push` is the graph induced by the push matrix `C` (edge `j -> l` when
/// `C_lj > 0`); the transpose is taken here.
pub fn assumption3_holds(pull: &DirectedGraph, push: &DirectedGraph) -> Result<RootCheck> {
    if pull.node_count() != push.node_count() {
        return Err(Error::invalid(format!(
            "pull graph has {} nodes but push graph has {}",
            pull.node_count(),
            push.node_count()
        )));
    }
    let pull_roots = spanning_tree_roots(pull);
    let push_roots = spanning_tree_roots(&push.transpose());
    let common_root = pull_roots.intersection(&push_roots).next().copied();
    Ok(RootCheck {
        holds: common_root.is_some(),
        common_root,
        pull_roots: pull_roots.into_iter().collect(),
        push_transpose_roots: push_roots.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> DirectedGraph {
        generate_ring_plus_random(3, 0.0, 7, RingKind::Directed).unwrap()
    }

    #[test]
    fn fifteen_node_graph_keeps_ring_and_loops() {
        let g = generate_ring_plus_random(15, 0.3, 42, RingKind::Directed).unwrap();
        for i in 0..15 {
            assert!(g.has_edge(i, (i + 1) % 15));
            assert!(g.has_edge(i, i));
        }
    }

    #[test]
    fn zero_probability_gives_bare_cycle() {
        let g = cycle3();
        assert_eq!(g.edges(), vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)]);
    }

    #[test]
    fn unit_probability_on_two_nodes_is_complete() {
        let g = generate_ring_plus_random(2, 1.0, 0, RingKind::Directed).unwrap();
        assert_eq!(g.edges(), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn bidirectional_ring_has_both_directions() {
        let g = generate_ring_plus_random(5, 0.0, 0, RingKind::Bidirectional).unwrap();
        for i in 0..5 {
            assert!(g.has_edge(i, (i + 1) % 5) && g.has_edge((i + 1) % 5, i));
        }
        assert_eq!(g.link_count(), 10);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            generate_ring_plus_random(1, 0.3, 0, RingKind::Directed),
            Err(Error::InvalidParameter(_))
        ));
        assert!(generate_ring_plus_random(4, 1.5, 0, RingKind::Directed).is_err());
        assert!(DirectedGraph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn neighbor_queries_agree() {
        let g = generate_ring_plus_random(9, 0.4, 3, RingKind::Directed).unwrap();
        for i in 0..9 {
            for &j in g.in_neighbors(i) {
                assert!(g.out_neighbors(j).contains(&i));
            }
            for &l in g.out_neighbors(i) {
                assert!(g.in_neighbors(l).contains(&i));
            }
        }
    }

    #[test]
    fn roots_of_cycle_and_single_edge() {
        assert_eq!(spanning_tree_roots(&cycle3()), BTreeSet::from([0, 1, 2]));
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(spanning_tree_roots(&g), BTreeSet::from([0]));
        let disconnected = DirectedGraph::empty(3);
        assert!(spanning_tree_roots(&disconnected).is_empty());
    }

    #[test]
    fn common_root_check() {
        let ring = cycle3();
        let check = assumption3_holds(&ring, &ring).unwrap();
        assert!(check.holds);
        assert!(check.common_root.is_some());

        // Pull line 0 -> 1 -> 2 is rooted at 0; the same line used as a push
        // graph transposes to 2 -> 1 -> 0, rooted at 2.
        let pull = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let push = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let check = assumption3_holds(&pull, &push).unwrap();
        assert_eq!(check.pull_roots, vec![0]);
        assert_eq!(check.push_transpose_roots, vec![2]);
        assert!(!check.holds);
        assert!(check.diagnostic().contains("no common root"));

        assert!(assumption3_holds(&pull, &DirectedGraph::empty(4)).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate_ring_plus_random(6, 0.5, 11, RingKind::Directed).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n 6\n"));
        assert_eq!(text.parse::<DirectedGraph>().unwrap(), g);
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!("0 1\n".parse::<DirectedGraph>().is_err());
        assert!("n 3\n0 1 2\n".parse::<DirectedGraph>().is_err());
        assert!("n 3\n0 x\n".parse::<DirectedGraph>().is_err());
        assert!("n 3\n0 5\n".parse::<DirectedGraph>().is_err());
        let g = "# header\nn 3\n\n0 1 # link\n".parse::<DirectedGraph>().unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(2, 2));
    }
}
