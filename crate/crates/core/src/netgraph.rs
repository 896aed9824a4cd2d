//! Unit-disk graph model, neighbor tables and set predicates.
//!
//! Nodes live at 2-D positions in meters; an edge exists between two nodes
//! exactly when their Euclidean distance is strictly smaller than the
//! transmission range. All functions here are pure; snapshots are immutable
//! once built.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Node identifier. Scenario graphs number nodes 1..=n.
pub type NodeId = u32;

/// Default node-count cap for [`brute_force_min_cds`].
pub const BRUTE_FORCE_CAP: usize = 12;

/// Placement attempts before [`random_connected_udg`] gives up.
const CONNECTIVITY_RETRY_BUDGET: usize = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("non-finite coordinate for node {0}")]
    NonFiniteCoordinate(NodeId),
    #[error("graph must contain at least one node")]
    Empty,
    #[error("transmission range must be positive, got {0}")]
    NonPositiveRange(f64),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has {n} nodes, exceeding the exact-search cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("no connected placement found in {0} attempts")]
    ConnectivityRetriesExhausted(usize),
    #[error("graph text parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An immutable unit-disk graph: node positions plus the edge set they
/// induce under a shared transmission range.
///
/// Edge rule: `(u, v)` is an edge iff `u != v` and `dist(u, v) < range`
/// (strict; a pair exactly at range distance is not connected).
#[derive(Debug, Clone)]
pub struct UdgSnapshot {
    ids: Vec<NodeId>,         // sorted ascending
    positions: Vec<Point>,    // parallel to `ids`
    range: f64,
    adj: Vec<Vec<usize>>,     // internal indices, each list sorted
}

impl UdgSnapshot {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn index(&self, id: NodeId) -> usize {
        self.index_of(id)
            .unwrap_or_else(|| panic!("node {id} not in snapshot"))
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.positions[self.index(id)]
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[self.index(id)].iter().map(|&i| self.ids[i])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adj[self.index(id)].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let ui = self.index(u);
        let vi = self.index(v);
        self.adj[ui].binary_search(&vi).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Whole-graph connectivity (single node counts as connected).
    pub fn is_connected(&self) -> bool {
        if self.ids.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; self.ids.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.ids.len()
    }

    /// Plain-text form: header `n R`, then one `id x y` line per node.
    /// Edges are derivable and never serialized.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.ids.len(), self.range);
        for (id, p) in self.ids.iter().zip(&self.positions) {
            let _ = writeln!(out, "{} {} {}", id, p.x, p.y);
        }
        out
    }

    /// Parse the [`UdgSnapshot::to_text`] format.
    pub fn from_text(text: &str) -> Result<UdgSnapshot, GraphError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(GraphError::Parse { line: 1, msg: "missing header".into() })?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(GraphError::Parse { line: 1, msg: "bad node count".into() })?;
        let range: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(GraphError::Parse { line: 1, msg: "bad range".into() })?;
        let mut nodes = Vec::with_capacity(n);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split_whitespace();
            let parse_err = |msg: &str| GraphError::Parse { line: idx + 1, msg: msg.into() };
            let id: NodeId = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("bad node id"))?;
            let x: f64 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("bad x coordinate"))?;
            let y: f64 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("bad y coordinate"))?;
            nodes.push((id, x, y));
        }
        if nodes.len() != n {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header says {n} nodes, found {}", nodes.len()),
            });
        }
        build_udg(&nodes, range)
    }
}

/// Build a unit-disk graph from `(id, x, y)` node records.
///
/// Rejects duplicate ids, non-finite coordinates, an empty node list and a
/// non-positive range.
pub fn build_udg(nodes: &[(NodeId, f64, f64)], range: f64) -> Result<UdgSnapshot, GraphError> {
    if nodes.is_empty() {
        return Err(GraphError::Empty);
    }
    if !(range > 0.0) {
        return Err(GraphError::NonPositiveRange(range));
    }
    let mut sorted: Vec<(NodeId, f64, f64)> = nodes.to_vec();
    sorted.sort_by_key(|&(id, _, _)| id);
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(GraphError::DuplicateId(pair[0].0));
        }
    }
    for &(id, x, y) in &sorted {
        if !x.is_finite() || !y.is_finite() {
            return Err(GraphError::NonFiniteCoordinate(id));
        }
    }
    let ids: Vec<NodeId> = sorted.iter().map(|&(id, _, _)| id).collect();
    let positions: Vec<Point> = sorted.iter().map(|&(_, x, y)| Point::new(x, y)).collect();
    let n = ids.len();
    let mut adj = vec![Vec::new(); n];
    let r2 = range * range;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = positions[i].x - positions[j].x;
            let dy = positions[i].y - positions[j].y;
            if dx * dx + dy * dy < r2 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    Ok(UdgSnapshot { ids, positions, range, adj })
}

/// Per-node 1-hop and strict 2-hop neighbor sets.
///
/// `n2(u)` holds nodes reachable in exactly two hops: it excludes `u`
/// itself and everything in `n1(u)`.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    n1: BTreeMap<NodeId, BTreeSet<NodeId>>,
    n2: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl NeighborTable {
    /// Open 1-hop neighborhood N1(u).
    pub fn n1(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.n1[&u]
    }

    /// Closed neighborhood N1[u] = N1(u) ∪ {u}.
    pub fn n1_closed(&self, u: NodeId) -> BTreeSet<NodeId> {
        let mut s = self.n1[&u].clone();
        s.insert(u);
        s
    }

    /// Strict 2-hop neighborhood N2(u).
    pub fn n2(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.n2[&u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.n1[&u].len()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.n1.keys().copied()
    }
}

/// Derive the 1-/2-hop neighbor tables of a snapshot.
pub fn neighbor_tables(g: &UdgSnapshot) -> NeighborTable {
    let mut n1 = BTreeMap::new();
    for &id in g.ids() {
        n1.insert(id, g.neighbors(id).collect::<BTreeSet<_>>());
    }
    let mut n2 = BTreeMap::new();
    for &id in g.ids() {
        let mut two: BTreeSet<NodeId> = BTreeSet::new();
        for &v in &n1[&id] {
            two.extend(n1[&v].iter().copied());
        }
        two.remove(&id);
        for v in &n1[&id] {
            two.remove(v);
        }
        n2.insert(id, two);
    }
    NeighborTable { n1, n2 }
}

/// A subset of a snapshot's nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSubset(BTreeSet<NodeId>);

impl NodeSubset {
    pub fn new() -> Self {
        NodeSubset(BTreeSet::new())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        self.0.insert(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_set(&self) -> &BTreeSet<NodeId> {
        &self.0
    }
}

impl FromIterator<NodeId> for NodeSubset {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        NodeSubset(iter.into_iter().collect())
    }
}

impl From<BTreeSet<NodeId>> for NodeSubset {
    fn from(s: BTreeSet<NodeId>) -> Self {
        NodeSubset(s)
    }
}

fn assert_valid_subset(g: &UdgSnapshot, s: &NodeSubset) {
    for id in s.iter() {
        assert!(g.contains(id), "subset member {id} not in snapshot");
    }
}

/// True iff every node is in `s` or adjacent to a member of `s`.
pub fn is_dominating(g: &UdgSnapshot, s: &NodeSubset) -> bool {
    assert_valid_subset(g, s);
    g.ids().iter().all(|&u| {
        s.contains(u) || g.neighbors(u).any(|v| s.contains(v))
    })
}

/// True iff the subgraph induced by `s` is connected.
/// Empty and singleton subsets count as connected.
pub fn induces_connected(g: &UdgSnapshot, s: &NodeSubset) -> bool {
    assert_valid_subset(g, s);
    if s.len() <= 1 {
        return true;
    }
    let members = s.as_set();
    let start = *members.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for v in g.neighbors(u) {
            if members.contains(&v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen.len() == members.len()
}

/// Exact minimum connected dominating set by exhaustive search over
/// subsets in increasing cardinality.
///
/// Within one cardinality, candidate sets are enumerated in lexicographic
/// id order, so the returned set is the lexicographically smallest optimum.
/// Requires a connected graph and refuses instances above `cap` nodes.
pub fn brute_force_min_cds(g: &UdgSnapshot, cap: usize) -> Result<NodeSubset, GraphError> {
    let n = g.len();
    if n > cap {
        return Err(GraphError::TooLarge { n, cap });
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let ids = g.ids().to_vec();
    // closed-neighborhood bitmasks for a fast domination test
    let masks: Vec<u32> = ids
        .iter()
        .map(|&u| {
            let mut m = 1u32 << g.index(u);
            for v in g.neighbors(u) {
                m |= 1 << g.index(v);
            }
            m
        })
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    for k in 1..=n {
        let mut pick: Vec<usize> = (0..k).collect();
        'combos: loop {
            let covered = pick.iter().fold(0u32, |acc, &i| acc | masks[i]);
            if covered == full {
                let subset: NodeSubset = pick.iter().map(|&i| ids[i]).collect();
                if induces_connected(g, &subset) {
                    return Ok(subset);
                }
            }
            // advance to the next k-combination in lexicographic order
            let mut i = k;
            while i > 0 {
                i -= 1;
                if pick[i] != i + n - k {
                    pick[i] += 1;
                    for j in (i + 1)..k {
                        pick[j] = pick[j - 1] + 1;
                    }
                    continue 'combos;
                }
            }
            break;
        }
    }
    unreachable!("the full node set of a connected graph is a CDS")
}

/// Uniform random placement of `n` nodes in `area = (width, height)`,
/// resampled until the induced unit-disk graph is connected.
/// Deterministic for a given seed. Node ids are 1..=n.
pub fn random_connected_udg(
    n: usize,
    area: (f64, f64),
    range: f64,
    seed: u64,
) -> Result<UdgSnapshot, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..CONNECTIVITY_RETRY_BUDGET {
        let nodes: Vec<(NodeId, f64, f64)> = (1..=n as NodeId)
            .map(|id| {
                let x = rng.gen_range(0.0..area.0);
                let y = rng.gen_range(0.0..area.1);
                (id, x, y)
            })
            .collect();
        let g = build_udg(&nodes, range)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::ConnectivityRetriesExhausted(CONNECTIVITY_RETRY_BUDGET))
}

/// Convenience constructor used throughout the tests: a path graph
/// 1–2–…–n with consecutive nodes 200 m apart and R = 250 m.
#[doc(hidden)]
pub fn path_graph(n: usize) -> UdgSnapshot {
    let nodes: Vec<(NodeId, f64, f64)> = (1..=n as NodeId)
        .map(|id| (id, 200.0 * (id - 1) as f64, 0.0))
        .collect();
    build_udg(&nodes, 250.0).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complete_graph(n: usize) -> UdgSnapshot {
        // everything within 10 m, range 250 m
        let nodes: Vec<(NodeId, f64, f64)> = (1..=n as NodeId)
            .map(|id| (id, id as f64, 0.0))
            .collect();
        build_udg(&nodes, 250.0).unwrap()
    }

    #[test]
    fn edge_iff_strictly_within_range() {
        let g = build_udg(&[(1, 0.0, 0.0), (2, 100.0, 0.0)], 250.0).unwrap();
        assert_eq!(g.edge_count(), 1);
        let g = build_udg(&[(1, 0.0, 0.0), (2, 250.0, 0.0)], 250.0).unwrap();
        assert_eq!(g.edge_count(), 0, "boundary distance is a non-edge");
    }

    #[test]
    fn three_nodes_make_a_path() {
        let g = build_udg(&[(1, 0.0, 0.0), (2, 200.0, 0.0), (3, 400.0, 0.0)], 250.0).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(1, 2));
        assert!(g.has_edge(2, 3));
        assert!(!g.has_edge(1, 3));
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            build_udg(&[(1, 0.0, 0.0), (1, 1.0, 1.0)], 100.0),
            Err(GraphError::DuplicateId(1))
        ));
        assert!(matches!(
            build_udg(&[(1, f64::NAN, 0.0)], 100.0),
            Err(GraphError::NonFiniteCoordinate(1))
        ));
        assert!(matches!(build_udg(&[], 100.0), Err(GraphError::Empty)));
        assert!(matches!(
            build_udg(&[(1, 0.0, 0.0)], 0.0),
            Err(GraphError::NonPositiveRange(_))
        ));
    }

    #[test]
    fn neighbor_tables_on_path_and_clique() {
        let g = path_graph(3);
        let t = neighbor_tables(&g);
        assert_eq!(t.n2(1), &BTreeSet::from([3]));
        assert_eq!(t.n2(2), &BTreeSet::new());
        assert!(t.n1_closed(1).contains(&1));

        let k4 = complete_graph(4);
        let t = neighbor_tables(&k4);
        for &u in k4.ids() {
            assert!(t.n2(u).is_empty(), "K4 has no 2-hop pairs");
        }
    }

    #[test]
    fn domination_predicate() {
        let g = path_graph(3);
        assert!(is_dominating(&g, &g.ids().iter().copied().collect()));
        assert!(is_dominating(&g, &NodeSubset::from_iter([2])));
        let g5 = path_graph(5);
        assert!(!is_dominating(&g5, &NodeSubset::from_iter([2])), "node 5 uncovered");
    }

    #[test]
    fn connectivity_predicate() {
        let g = path_graph(5);
        assert!(induces_connected(&g, &NodeSubset::from_iter([2, 3, 4])));
        assert!(!induces_connected(&g, &NodeSubset::from_iter([2, 4])));
        assert!(induces_connected(&g, &NodeSubset::from_iter([3])));
        assert!(induces_connected(&g, &NodeSubset::new()));
    }

    #[test]
    fn brute_force_known_optima() {
        assert_eq!(
            brute_force_min_cds(&path_graph(3), BRUTE_FORCE_CAP).unwrap(),
            NodeSubset::from_iter([2])
        );
        assert_eq!(
            brute_force_min_cds(&path_graph(5), BRUTE_FORCE_CAP).unwrap(),
            NodeSubset::from_iter([2, 3, 4])
        );
        assert_eq!(
            brute_force_min_cds(&complete_graph(4), BRUTE_FORCE_CAP).unwrap(),
            NodeSubset::from_iter([1]),
            "lexicographic tie-break picks node 1"
        );
    }

    #[test]
    fn brute_force_guards() {
        let disconnected = build_udg(&[(1, 0.0, 0.0), (2, 900.0, 0.0)], 250.0).unwrap();
        assert!(matches!(
            brute_force_min_cds(&disconnected, BRUTE_FORCE_CAP),
            Err(GraphError::Disconnected)
        ));
        let g = path_graph(13);
        assert!(matches!(
            brute_force_min_cds(&g, BRUTE_FORCE_CAP),
            Err(GraphError::TooLarge { n: 13, cap: BRUTE_FORCE_CAP })
        ));
    }

    /// Independent cross-check of the combination search: full enumeration
    /// of all 2^n subsets on small graphs must agree on the optimum size.
    #[test]
    fn brute_force_agrees_with_full_enumeration() {
        for seed in 0..20u64 {
            let n = 4 + (seed as usize % 5);
            let g = random_connected_udg(n, (500.0, 500.0), 250.0, seed).unwrap();
            let best = brute_force_min_cds(&g, BRUTE_FORCE_CAP).unwrap();
            let mut min_size = usize::MAX;
            for mask in 1u32..(1 << n) {
                let subset: NodeSubset = (0..n)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| g.ids()[i])
                    .collect();
                if is_dominating(&g, &subset) && induces_connected(&g, &subset) {
                    min_size = min_size.min(subset.len());
                }
            }
            assert_eq!(best.len(), min_size, "seed {seed}");
        }
    }

    #[test]
    fn random_udg_is_deterministic_and_connected() {
        let a = random_connected_udg(30, (1000.0, 1000.0), 250.0, 7).unwrap();
        let b = random_connected_udg(30, (1000.0, 1000.0), 250.0, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.is_connected());
        let single = random_connected_udg(1, (1000.0, 1000.0), 250.0, 0).unwrap();
        assert!(single.is_connected());
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn mean_degree_matches_density_estimate() {
        // E[deg] ≈ n·πR²/area for uniform placement; statistical, wide margin.
        let n = 50;
        let expected = n as f64 * std::f64::consts::PI * 250.0 * 250.0 / 1e6;
        let mut total = 0.0;
        let seeds = 100;
        for seed in 0..seeds {
            let g = random_connected_udg(n, (1000.0, 1000.0), 250.0, seed).unwrap();
            total += 2.0 * g.edge_count() as f64 / n as f64;
        }
        let mean = total / seeds as f64;
        assert!(
            (mean - expected).abs() < 0.3 * expected,
            "mean degree {mean:.2} vs expected {expected:.2}"
        );
    }

    #[test]
    fn text_round_trip() {
        let g = random_connected_udg(12, (800.0, 600.0), 250.0, 3).unwrap();
        let text = g.to_text();
        let back = UdgSnapshot::from_text(&text).unwrap();
        assert_eq!(g.to_text(), back.to_text());
        assert_eq!(g.edge_count(), back.edge_count());
    }

    #[test]
    fn text_parse_errors_name_the_line() {
        let err = UdgSnapshot::from_text("2 250\n1 0 0\n2 bad 5\n").unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn bfs_depths(g: &UdgSnapshot, from: NodeId) -> BTreeMap<NodeId, usize> {
        let mut depth = BTreeMap::from([(from, 0usize)]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = depth[&u];
            for v in g.neighbors(u) {
                if !depth.contains_key(&v) {
                    depth.insert(v, d + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// N1/N2 agree with BFS depth classification on random graphs.
        #[test]
        fn neighbor_tables_match_bfs(seed in 0u64..100, n in 2usize..25) {
            let g = random_connected_udg(n, (700.0, 700.0), 250.0, seed).unwrap();
            let t = neighbor_tables(&g);
            for &u in g.ids() {
                let depths = bfs_depths(&g, u);
                let n1: BTreeSet<NodeId> =
                    depths.iter().filter(|&(_, &d)| d == 1).map(|(&v, _)| v).collect();
                let n2: BTreeSet<NodeId> =
                    depths.iter().filter(|&(_, &d)| d == 2).map(|(&v, _)| v).collect();
                prop_assert_eq!(t.n1(u), &n1);
                prop_assert_eq!(t.n2(u), &n2);
                prop_assert!(!t.n1(u).contains(&u));
                prop_assert!(t.n2(u).is_disjoint(&t.n1_closed(u)));
            }
        }

        /// The whole node set dominates, and induced connectivity of V
        /// equals whole-graph connectivity.
        #[test]
        fn full_set_predicates(seed in 0u64..100, n in 1usize..20) {
            let g = random_connected_udg(n, (800.0, 800.0), 250.0, seed).unwrap();
            let all: NodeSubset = g.ids().iter().copied().collect();
            prop_assert!(is_dominating(&g, &all));
            prop_assert_eq!(induces_connected(&g, &all), g.is_connected());
        }
    }
}
