//! CDS construction: greedy multipoint-relay selection, marking, priority
//! pruning, and the baseline algorithms.
//!
//! Every pruning/tie-break decision flows through one comparator,
//! [`PriorityKey`]: more residual energy ranks higher, then lower speed,
//! then higher degree, then smaller id. The baselines reuse the same
//! machinery with restricted keys (degree/id only, or speed-first).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netgraph::{
    induces_connected, is_dominating, NeighborTable, NodeId, NodeSubset, UdgSnapshot,
};

#[derive(Debug, Error)]
pub enum BackboneError {
    #[error("backbone construction requires a connected graph")]
    Disconnected,
}

/// The CDS construction algorithms available to the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Energy/velocity-aware MPR construction with priority pruning.
    EasCds,
    /// Source-independent MPR CDS: smallest-id rule plus MPR-of-smallest-id rule.
    AdjihMprCds,
    /// Extended MPR: smallest-id rule gated on two unconnected neighbors,
    /// with free-neighbor seeded MPR sets.
    WuEmpr,
    /// Degree-based variant of the extended MPR rules.
    ChenDempr,
    /// Velocity-first construction: prefers slow nodes over high coverage.
    MinVelocity,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::EasCds,
        Algorithm::AdjihMprCds,
        Algorithm::WuEmpr,
        Algorithm::ChenDempr,
        Algorithm::MinVelocity,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::EasCds => "eas-cds",
            Algorithm::AdjihMprCds => "adjih-mpr-cds",
            Algorithm::WuEmpr => "wu-empr",
            Algorithm::ChenDempr => "chen-dempr",
            Algorithm::MinVelocity => "min-velocity",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .iter()
            .find(|a| a.label() == norm)
            .copied()
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

/// Per-node attributes carried by hello messages and used for priority.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAttributes {
    pub id: NodeId,
    /// Residual energy in joules.
    pub energy: f64,
    /// Instantaneous speed in m/s.
    pub speed: f64,
    /// |N1(id)|, consistent with the snapshot's neighbor table.
    pub degree: usize,
}

/// Which attribute fields participate in the priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityScheme {
    /// (energy desc, speed asc, degree desc, id asc) — the full key.
    EnergyVelocity,
    /// (speed asc, degree desc, id asc) — energy ignored.
    VelocityOnly,
    /// (degree desc, id asc) — energy and speed ignored.
    DegreeId,
}

impl PriorityScheme {
    pub fn key(&self, a: &NodeAttributes) -> PriorityKey {
        match self {
            PriorityScheme::EnergyVelocity => PriorityKey {
                energy: a.energy,
                speed: a.speed,
                degree: a.degree,
                id: a.id,
            },
            PriorityScheme::VelocityOnly => PriorityKey {
                energy: 0.0,
                speed: a.speed,
                degree: a.degree,
                id: a.id,
            },
            PriorityScheme::DegreeId => PriorityKey {
                energy: 0.0,
                speed: 0.0,
                degree: a.degree,
                id: a.id,
            },
        }
    }
}

/// Strict total order over nodes: a greater key means higher priority
/// (survives pruning, wins ties). Ordering is lexicographic on
/// (energy desc, speed asc, degree desc, id asc); the id makes any two
/// distinct nodes strictly comparable.
#[derive(Debug, Clone, Copy)]
pub struct PriorityKey {
    energy: f64,
    speed: f64,
    degree: usize,
    id: NodeId,
}

impl Ord for PriorityKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then_with(|| other.speed.total_cmp(&self.speed))
            .then_with(|| self.degree.cmp(&other.degree))
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for PriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for PriorityKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for PriorityKey {}

/// True iff `a` ranks strictly below `b` under the full priority order.
pub fn priority_less(a: &NodeAttributes, b: &NodeAttributes) -> bool {
    PriorityScheme::EnergyVelocity.key(a) < PriorityScheme::EnergyVelocity.key(b)
}

/// Attribute table for all nodes of a snapshot.
#[derive(Debug, Clone)]
pub struct Attributes {
    map: BTreeMap<NodeId, NodeAttributes>,
}

impl Attributes {
    /// Build from a neighbor table; `f` supplies `(energy, speed)` per node
    /// and the degree is filled in from the table.
    pub fn build(tables: &NeighborTable, mut f: impl FnMut(NodeId) -> (f64, f64)) -> Attributes {
        let map = tables
            .ids()
            .map(|id| {
                let (energy, speed) = f(id);
                (id, NodeAttributes { id, energy, speed, degree: tables.degree(id) })
            })
            .collect();
        Attributes { map }
    }

    /// Equal energy and zero speed everywhere: priority reduces to
    /// (degree desc, id asc).
    pub fn uniform(tables: &NeighborTable) -> Attributes {
        Attributes::build(tables, |_| (1.0, 0.0))
    }

    /// Random energies in `energy_range` and speeds in `[0, speed_max]`.
    pub fn random(
        tables: &NeighborTable,
        energy_range: (f64, f64),
        speed_max: f64,
        rng: &mut impl rand::Rng,
    ) -> Attributes {
        Attributes::build(tables, |_| {
            let e = rng.gen_range(energy_range.0..=energy_range.1);
            let s = if speed_max > 0.0 { rng.gen_range(0.0..=speed_max) } else { 0.0 };
            (e, s)
        })
    }

    pub fn get(&self, id: NodeId) -> &NodeAttributes {
        &self.map[&id]
    }

    pub fn key(&self, id: NodeId, scheme: PriorityScheme) -> PriorityKey {
        scheme.key(&self.map[&id])
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.map.keys().copied()
    }
}

/// Marking state. Black nodes form the CDS; Gray nodes are dominated
/// non-members; White nodes are untouched by the marking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    White,
    Black,
    Gray,
}

#[derive(Debug, Clone)]
pub struct Coloring {
    map: BTreeMap<NodeId, Color>,
}

impl Coloring {
    pub fn all_white(g: &UdgSnapshot) -> Coloring {
        Coloring { map: g.ids().iter().map(|&id| (id, Color::White)).collect() }
    }

    pub fn color(&self, id: NodeId) -> Color {
        self.map[&id]
    }

    pub fn set(&mut self, id: NodeId, color: Color) {
        self.map.insert(id, color);
    }

    pub fn black_set(&self) -> BTreeSet<NodeId> {
        self.map
            .iter()
            .filter(|(_, &c)| c == Color::Black)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn black_subset(&self) -> NodeSubset {
        self.black_set().into_iter().collect()
    }

    pub fn black_len(&self) -> usize {
        self.map.values().filter(|&&c| c == Color::Black).count()
    }

    fn from_black(g: &UdgSnapshot, black: &BTreeSet<NodeId>) -> Coloring {
        let mut c = Coloring::all_white(g);
        for &b in black {
            c.set(b, Color::Black);
        }
        for &b in black {
            for v in g.neighbors(b) {
                if !black.contains(&v) {
                    c.set(v, Color::Gray);
                }
            }
        }
        c
    }
}

/// Per-node multipoint relay sets, MPR(u) ⊆ N1(u).
#[derive(Debug, Clone, Default)]
pub struct MprAssignment {
    map: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl FromIterator<(NodeId, BTreeSet<NodeId>)> for MprAssignment {
    fn from_iter<T: IntoIterator<Item = (NodeId, BTreeSet<NodeId>)>>(iter: T) -> Self {
        MprAssignment { map: iter.into_iter().collect() }
    }
}

impl MprAssignment {
    pub fn mpr(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.map[&u]
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &BTreeSet<NodeId>)> {
        self.map.iter().map(|(&u, s)| (u, s))
    }

    pub fn union(&self) -> BTreeSet<NodeId> {
        let mut all = BTreeSet::new();
        for s in self.map.values() {
            all.extend(s.iter().copied());
        }
        all
    }
}

/// How MPR candidates are chosen once forced picks are done.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MprFlavor {
    /// Classic greedy: maximize newly covered 2-hop nodes, ties by key.
    CoverageGreedy,
    /// Pick the highest-priority neighbor that still covers something;
    /// coverage count is ignored. Used by the velocity-first baseline.
    PriorityFirst,
}

/// Greedy MPR set for `u` under the full energy/velocity priority:
/// neighbors that are the unique cover of some 2-hop node are taken first,
/// then the neighbor covering the most still-uncovered 2-hop nodes, ties
/// broken toward the higher [`PriorityKey`].
pub fn greedy_mpr(u: NodeId, tables: &NeighborTable, attrs: &Attributes) -> BTreeSet<NodeId> {
    compute_mpr(u, tables, attrs, PriorityScheme::EnergyVelocity, MprFlavor::CoverageGreedy, None)
}

fn compute_mpr(
    u: NodeId,
    tables: &NeighborTable,
    attrs: &Attributes,
    scheme: PriorityScheme,
    flavor: MprFlavor,
    seed: Option<&BTreeSet<NodeId>>,
) -> BTreeSet<NodeId> {
    let candidates: Vec<NodeId> = tables.n1(u).iter().copied().collect();
    let mut uncovered: BTreeSet<NodeId> = tables.n2(u).clone();
    let mut mpr: BTreeSet<NodeId> = BTreeSet::new();

    if let Some(seeded) = seed {
        for &s in seeded {
            debug_assert!(tables.n1(u).contains(&s), "seed must be a neighbor");
            mpr.insert(s);
            for x in tables.n1(s) {
                uncovered.remove(x);
            }
        }
    }

    // forced picks: sole cover of some still-uncovered 2-hop node
    let forced: Vec<NodeId> = uncovered
        .iter()
        .filter_map(|&x| {
            let mut covers = candidates.iter().filter(|&&c| tables.n1(c).contains(&x));
            match (covers.next(), covers.next()) {
                (Some(&only), None) => Some(only),
                _ => None,
            }
        })
        .collect();
    for c in forced {
        if mpr.insert(c) {
            for x in tables.n1(c) {
                uncovered.remove(x);
            }
        }
    }

    while !uncovered.is_empty() {
        let mut best: Option<(usize, PriorityKey, NodeId)> = None;
        for &c in &candidates {
            if mpr.contains(&c) {
                continue;
            }
            let gain = tables.n1(c).intersection(&uncovered).count();
            if gain == 0 {
                continue;
            }
            let key = attrs.key(c, scheme);
            let better = match (&best, flavor) {
                (None, _) => true,
                (Some((bg, bk, _)), MprFlavor::CoverageGreedy) => {
                    gain > *bg || (gain == *bg && key > *bk)
                }
                (Some((_, bk, _)), MprFlavor::PriorityFirst) => key > *bk,
            };
            if better {
                best = Some((gain, key, c));
            }
        }
        let (_, _, pick) = best.expect("2-hop node unreachable through any 1-hop neighbor");
        mpr.insert(pick);
        for x in tables.n1(pick) {
            uncovered.remove(x);
        }
    }
    mpr
}

fn assignment_for_all(
    tables: &NeighborTable,
    attrs: &Attributes,
    scheme: PriorityScheme,
    flavor: MprFlavor,
    seed: Option<&dyn Fn(NodeId) -> BTreeSet<NodeId>>,
) -> MprAssignment {
    let map = tables
        .ids()
        .map(|u| {
            let s = seed.map(|f| f(u));
            (u, compute_mpr(u, tables, attrs, scheme, flavor, s.as_ref()))
        })
        .collect();
    MprAssignment { map }
}

/// Color the graph from an MPR assignment: the union of all MPR sets is
/// Black, neighbors of Black nodes are Gray, the rest stay White.
///
/// Degenerate case: when every MPR set is empty (diameter ≤ 2), the single
/// highest-priority node is forced Black so a non-empty graph never ends
/// up with an empty CDS.
pub fn mark_from_mprs(
    g: &UdgSnapshot,
    assignment: &MprAssignment,
    attrs: &Attributes,
) -> Coloring {
    mark_with_scheme(g, assignment, attrs, PriorityScheme::EnergyVelocity)
}

fn mark_with_scheme(
    g: &UdgSnapshot,
    assignment: &MprAssignment,
    attrs: &Attributes,
    scheme: PriorityScheme,
) -> Coloring {
    let mut black = assignment.union();
    if black.is_empty() && !g.is_empty() {
        let top = g
            .ids()
            .iter()
            .copied()
            .max_by_key(|&id| attrs.key(id, scheme))
            .unwrap();
        black.insert(top);
    }
    Coloring::from_black(g, &black)
}

/// Rule 1: a Black node `v` turns Gray when some other Black node `u`
/// covers its closed neighborhood (N1[v] ⊆ N1[u] in the full graph) and
/// `v` has strictly lower priority than `u`.
///
/// Candidates are processed in ascending priority and coverage is checked
/// against the currently-Black set, so two nodes covering each other can
/// never eliminate one another.
pub fn prune_rule1(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    coloring: &Coloring,
    attrs: &Attributes,
) -> Coloring {
    rule1_with_scheme(g, tables, coloring, attrs, PriorityScheme::EnergyVelocity)
}

fn rule1_with_scheme(
    _g: &UdgSnapshot,
    tables: &NeighborTable,
    coloring: &Coloring,
    attrs: &Attributes,
    scheme: PriorityScheme,
) -> Coloring {
    let mut out = coloring.clone();
    let mut black = coloring.black_set();
    let mut order: Vec<NodeId> = black.iter().copied().collect();
    order.sort_by_key(|&v| attrs.key(v, scheme));
    for v in order {
        let v_closed = tables.n1_closed(v);
        let v_key = attrs.key(v, scheme);
        let covered = black.iter().any(|&u| {
            u != v
                && attrs.key(u, scheme) > v_key
                && v_closed.iter().all(|x| *x == u || tables.n1(u).contains(x))
        });
        if covered {
            black.remove(&v);
            out.set(v, Color::Gray);
        }
    }
    out
}

/// Result of a rule-2 pass: the new coloring plus how many pruned nodes
/// the safety check had to restore (expected to be zero).
#[derive(Debug, Clone)]
pub struct Rule2Outcome {
    pub coloring: Coloring,
    pub restored: usize,
}

/// Rule 2: a Black node `v` with two Black neighbors `u`, `w` whose open
/// neighborhoods jointly cover N1(v) turns Gray when
/// - neither `u` nor `w` is covered by the other two: unconditionally;
/// - `v` and `u` cover each other but `w` does not: iff `v` ranks below `u`;
/// - all three cover each other: iff `v` ranks strictly lowest.
///
/// A final safety check restores pruned nodes in descending priority if the
/// Black set lost domination or connectivity (open-neighborhood coverage
/// implies `u`–`w` adjacency, so this is expected never to trigger).
pub fn prune_rule2(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    coloring: &Coloring,
    attrs: &Attributes,
) -> Rule2Outcome {
    rule2_with_scheme(g, tables, coloring, attrs, PriorityScheme::EnergyVelocity)
}

fn rule2_with_scheme(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    coloring: &Coloring,
    attrs: &Attributes,
    scheme: PriorityScheme,
) -> Rule2Outcome {
    let mut out = coloring.clone();
    let mut black = coloring.black_set();
    let mut order: Vec<NodeId> = black.iter().copied().collect();
    order.sort_by_key(|&v| attrs.key(v, scheme));
    let mut pruned: Vec<NodeId> = Vec::new();

    for v in order {
        let v_key = attrs.key(v, scheme);
        let v_open = tables.n1(v);
        let black_neighbors: Vec<NodeId> =
            v_open.iter().copied().filter(|x| black.contains(x)).collect();
        let mut unmark = false;
        'pairs: for (i, &a) in black_neighbors.iter().enumerate() {
            for &b in &black_neighbors[i + 1..] {
                let cov = |p: NodeId, q: NodeId, r: NodeId| {
                    tables
                        .n1(p)
                        .iter()
                        .all(|x| tables.n1(q).contains(x) || tables.n1(r).contains(x))
                };
                if !cov(v, a, b) {
                    continue;
                }
                let cov_a = cov(a, v, b);
                let cov_b = cov(b, a, v);
                unmark = match (cov_a, cov_b) {
                    (false, false) => true,
                    (true, false) => v_key < attrs.key(a, scheme),
                    (false, true) => v_key < attrs.key(b, scheme),
                    (true, true) => {
                        v_key < attrs.key(a, scheme) && v_key < attrs.key(b, scheme)
                    }
                };
                if unmark {
                    break 'pairs;
                }
            }
        }
        if unmark {
            black.remove(&v);
            out.set(v, Color::Gray);
            pruned.push(v);
        }
    }

    // safety restore, expected to be a no-op
    let mut restored = 0;
    if !pruned.is_empty() {
        pruned.sort_by_key(|&v| std::cmp::Reverse(attrs.key(v, scheme)));
        let mut idx = 0;
        while !cds_predicates_hold(g, &black) {
            let v = pruned[idx];
            black.insert(v);
            out.set(v, Color::Black);
            restored += 1;
            idx += 1;
        }
    }
    Rule2Outcome { coloring: out, restored }
}

fn cds_predicates_hold(g: &UdgSnapshot, black: &BTreeSet<NodeId>) -> bool {
    let subset: NodeSubset = black.iter().copied().collect();
    is_dominating(g, &subset) && induces_connected(g, &subset)
}

/// Output of one backbone construction.
#[derive(Debug, Clone)]
pub struct BackboneResult {
    pub algorithm: Algorithm,
    pub coloring: Coloring,
    pub mpr: MprAssignment,
    /// Nodes the rule-2 safety check put back (EAS/velocity pipelines).
    pub restored: usize,
    /// Nodes a baseline's repair step had to add to satisfy the CDS
    /// predicates (expected zero).
    pub repaired: usize,
    /// Simulation time the backbone was computed at; 0 for static use.
    pub time: f64,
}

impl BackboneResult {
    pub fn black(&self) -> BTreeSet<NodeId> {
        self.coloring.black_set()
    }

    pub fn cds_size(&self) -> usize {
        self.coloring.black_len()
    }

    /// One-line text form: `algorithm seed n |CDS| members...`.
    pub fn to_line(&self, seed: u64, n: usize) -> String {
        let members: Vec<String> = self.black().iter().map(|m| m.to_string()).collect();
        format!(
            "{} {} {} {} {}",
            self.algorithm.label(),
            seed,
            n,
            members.len(),
            members.join(" ")
        )
    }
}

/// EAS-CDS: greedy MPR selection for every node, marking, then pruning
/// rules 1 and 2 under the full energy/velocity priority.
pub fn eas_cds(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    attrs: &Attributes,
) -> Result<BackboneResult, BackboneError> {
    mpr_pipeline(
        g,
        tables,
        attrs,
        Algorithm::EasCds,
        PriorityScheme::EnergyVelocity,
        MprFlavor::CoverageGreedy,
    )
}

fn mpr_pipeline(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    attrs: &Attributes,
    algorithm: Algorithm,
    scheme: PriorityScheme,
    flavor: MprFlavor,
) -> Result<BackboneResult, BackboneError> {
    if !g.is_connected() {
        return Err(BackboneError::Disconnected);
    }
    let assignment = assignment_for_all(tables, attrs, scheme, flavor, None);
    let marked = mark_with_scheme(g, &assignment, attrs, scheme);
    let after1 = rule1_with_scheme(g, tables, &marked, attrs, scheme);
    let outcome = rule2_with_scheme(g, tables, &after1, attrs, scheme);
    Ok(BackboneResult {
        algorithm,
        coloring: outcome.coloring,
        mpr: assignment,
        restored: outcome.restored,
        repaired: 0,
        time: 0.0,
    })
}

/// Run one of the baseline constructions.
pub fn baseline_cds(
    algorithm: Algorithm,
    g: &UdgSnapshot,
    tables: &NeighborTable,
    attrs: &Attributes,
) -> Result<BackboneResult, BackboneError> {
    if !g.is_connected() {
        return Err(BackboneError::Disconnected);
    }
    match algorithm {
        Algorithm::EasCds => eas_cds(g, tables, attrs),
        Algorithm::MinVelocity => mpr_pipeline(
            g,
            tables,
            attrs,
            Algorithm::MinVelocity,
            PriorityScheme::VelocityOnly,
            MprFlavor::PriorityFirst,
        ),
        Algorithm::AdjihMprCds => rule_based(g, tables, attrs, algorithm),
        Algorithm::WuEmpr => rule_based(g, tables, attrs, algorithm),
        Algorithm::ChenDempr => rule_based(g, tables, attrs, algorithm),
    }
}

/// Smallest-id node of `u`'s open neighborhood (the classic MPR selector).
fn smallest_id_neighbor(u: NodeId, tables: &NeighborTable) -> Option<NodeId> {
    tables.n1(u).iter().next().copied()
}

/// Highest-ranked neighbor under (degree desc, id asc).
fn largest_degree_neighbor(
    u: NodeId,
    tables: &NeighborTable,
    attrs: &Attributes,
) -> Option<NodeId> {
    tables
        .n1(u)
        .iter()
        .copied()
        .max_by_key(|&v| attrs.key(v, PriorityScheme::DegreeId))
}

/// Does `v` have at least two mutually non-adjacent neighbors?
fn has_two_unconnected_neighbors(v: NodeId, tables: &NeighborTable) -> bool {
    let n1: Vec<NodeId> = tables.n1(v).iter().copied().collect();
    for (i, &x) in n1.iter().enumerate() {
        for &y in &n1[i + 1..] {
            if !tables.n1(x).contains(&y) {
                return true;
            }
        }
    }
    false
}

fn rule_based(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    attrs: &Attributes,
    algorithm: Algorithm,
) -> Result<BackboneResult, BackboneError> {
    let scheme = PriorityScheme::DegreeId;

    // free-neighbor seeding: u is free for v when v is not u's selector,
    // so adding u to MPR(v) can never make u a CDS member through the
    // selector rule.
    let seed_smallest = |v: NodeId| -> BTreeSet<NodeId> {
        tables
            .n1(v)
            .iter()
            .copied()
            .filter(|&u| smallest_id_neighbor(u, tables) != Some(v))
            .collect()
    };
    let seed_degree = |v: NodeId| -> BTreeSet<NodeId> {
        tables
            .n1(v)
            .iter()
            .copied()
            .filter(|&u| largest_degree_neighbor(u, tables, attrs) != Some(v))
            .collect()
    };

    let assignment = match algorithm {
        Algorithm::AdjihMprCds => {
            assignment_for_all(tables, attrs, scheme, MprFlavor::CoverageGreedy, None)
        }
        Algorithm::WuEmpr => assignment_for_all(
            tables,
            attrs,
            scheme,
            MprFlavor::CoverageGreedy,
            Some(&seed_smallest),
        ),
        Algorithm::ChenDempr => assignment_for_all(
            tables,
            attrs,
            scheme,
            MprFlavor::CoverageGreedy,
            Some(&seed_degree),
        ),
        _ => unreachable!("rule_based only handles the id/degree baselines"),
    };

    let mut black: BTreeSet<NodeId> = BTreeSet::new();
    for &v in g.ids() {
        let selected = match algorithm {
            Algorithm::AdjihMprCds => {
                let smallest = tables.n1(v).iter().all(|&u| v < u);
                let via_selector = smallest_id_neighbor(v, tables)
                    .is_some_and(|w| assignment.mpr(w).contains(&v));
                smallest || via_selector
            }
            Algorithm::WuEmpr => {
                let smallest = tables.n1(v).iter().all(|&u| v < u)
                    && has_two_unconnected_neighbors(v, tables);
                let via_selector = smallest_id_neighbor(v, tables)
                    .is_some_and(|w| assignment.mpr(w).contains(&v));
                smallest || via_selector
            }
            Algorithm::ChenDempr => {
                let v_key = attrs.key(v, scheme);
                let largest = tables.n1(v).iter().all(|&u| v_key > attrs.key(u, scheme));
                let rule1 = largest && has_two_unconnected_neighbors(v, tables);
                let via_selector = largest_degree_neighbor(v, tables, attrs)
                    .is_some_and(|w| assignment.mpr(w).contains(&v));
                rule1 || via_selector
            }
            _ => unreachable!(),
        };
        if selected {
            black.insert(v);
        }
    }

    if black.is_empty() && !g.is_empty() {
        let top = g.ids().iter().copied().max_by_key(|&id| attrs.key(id, scheme)).unwrap();
        black.insert(top);
    }
    let repaired = repair_cds(g, tables, &mut black, attrs, scheme);
    Ok(BackboneResult {
        algorithm,
        coloring: Coloring::from_black(g, &black),
        mpr: assignment,
        restored: 0,
        repaired,
        time: 0.0,
    })
}

/// Grow `black` until it is dominating and induces a connected subgraph.
/// Returns the number of nodes added. Used as the baselines' safety net;
/// a sound rule set leaves it a no-op.
fn repair_cds(
    g: &UdgSnapshot,
    tables: &NeighborTable,
    black: &mut BTreeSet<NodeId>,
    attrs: &Attributes,
    scheme: PriorityScheme,
) -> usize {
    let mut added = 0;

    loop {
        let undominated: BTreeSet<NodeId> = g
            .ids()
            .iter()
            .copied()
            .filter(|&u| !black.contains(&u) && !g.neighbors(u).any(|v| black.contains(&v)))
            .collect();
        if undominated.is_empty() {
            break;
        }
        let best = g
            .ids()
            .iter()
            .copied()
            .filter(|u| !black.contains(u))
            .max_by_key(|&c| {
                let mut closed = tables.n1_closed(c);
                closed.retain(|x| undominated.contains(x));
                (closed.len(), attrs.key(c, scheme))
            })
            .expect("some non-black node can always cover an undominated node");
        black.insert(best);
        added += 1;
    }

    loop {
        let components = black_components(g, black);
        if components.len() <= 1 {
            break;
        }
        // walk from the component holding the highest-priority node to the
        // nearest node of any other component, adding path interiors
        let root = components
            .iter()
            .max_by_key(|comp| comp.iter().map(|&v| attrs.key(v, scheme)).max())
            .unwrap()
            .clone();
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue: VecDeque<NodeId> = root.iter().copied().collect();
        let mut seen: BTreeSet<NodeId> = root.clone();
        let mut target = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for v in g.neighbors(u) {
                if seen.insert(v) {
                    parent.insert(v, u);
                    if black.contains(&v) {
                        target = Some(v);
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        let target = target.expect("graph is connected, another component is reachable");
        let mut cur = parent[&target];
        while !root.contains(&cur) {
            if black.insert(cur) {
                added += 1;
            }
            cur = parent[&cur];
        }
    }
    added
}

fn black_components(g: &UdgSnapshot, black: &BTreeSet<NodeId>) -> Vec<BTreeSet<NodeId>> {
    let mut remaining: BTreeSet<NodeId> = black.clone();
    let mut components = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        remaining.remove(&start);
        while let Some(u) = queue.pop_front() {
            for v in g.neighbors(u) {
                if remaining.contains(&v) {
                    remaining.remove(&v);
                    comp.insert(v);
                    queue.push_back(v);
                }
            }
        }
        components.push(comp);
    }
    components
}
