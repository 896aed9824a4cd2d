//! Per-run simulation: hello protocol, periodic backbone recomputation,
//! route discovery restricted to backbone nodes, and CBR traffic.
//!
//! The run is a fixed-step loop (0.1 s ticks). Within a tick, phases
//! execute in a fixed order — mobility, idle charging, hellos, backbone
//! recomputation, traffic — and all per-node iteration is in ascending id
//! order, which makes a run a pure function of `(params, algorithm, mode,
//! seed)`. The run stops at the first node death; the death time is the
//! backbone lifetime.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::backbone::{baseline_cds, Algorithm, Attributes, BackboneResult};
use crate::energy::{Activity, EnergyLedger, PowerRatings};
use crate::mobility::{MobilityParams, WaypointState};
use crate::netgraph::{
    build_udg, neighbor_tables, random_connected_udg, GraphError, NodeId, Point, UdgSnapshot,
};

/// Simulation clock granularity, seconds.
pub const TICK_S: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How route requests propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteMode {
    /// Only backbone (Black) nodes rebroadcast RREQs.
    Cds,
    /// Every node rebroadcasts once — the blind-flooding baseline.
    Flooding,
}

impl RouteMode {
    pub fn label(&self) -> &'static str {
        match self {
            RouteMode::Cds => "cds",
            RouteMode::Flooding => "flooding",
        }
    }
}

impl fmt::Display for RouteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RouteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cds" => Ok(RouteMode::Cds),
            "flooding" => Ok(RouteMode::Flooding),
            other => Err(format!("unknown route mode '{other}'")),
        }
    }
}

/// Scalar parameters of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n: usize,
    pub area: (f64, f64),
    pub range_m: f64,
    pub v_max: f64,
    pub pause_s: f64,
    pub initial_energy: (f64, f64),
    pub ratings: PowerRatings,
    pub bitrate_bps: f64,
    pub duration_s: f64,
    pub hello_interval_s: f64,
    pub recompute_interval_s: f64,
    pub flows: usize,
    pub packet_rate_hz: f64,
    pub packet_bytes: usize,
    pub rreq_bytes: usize,
    pub hello_base_bytes: usize,
    pub hello_per_neighbor_bytes: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n: 100,
            area: (1000.0, 1000.0),
            range_m: 250.0,
            v_max: 5.0,
            pause_s: 100.0,
            initial_energy: (1.0, 15.0),
            ratings: PowerRatings::default(),
            bitrate_bps: 2_000_000.0,
            duration_s: 600.0,
            hello_interval_s: 1.0,
            recompute_interval_s: 5.0,
            flows: 20,
            packet_rate_hz: 5.0,
            packet_bytes: 512,
            rreq_bytes: 48,
            hello_base_bytes: 64,
            hello_per_neighbor_bytes: 4,
        }
    }
}

impl SimParams {
    fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("area width", self.area.0),
            ("area height", self.area.1),
            ("range", self.range_m),
            ("bitrate", self.bitrate_bps),
            ("hello interval", self.hello_interval_s),
            ("recompute interval", self.recompute_interval_s),
            ("packet rate", self.packet_rate_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("v_max", self.v_max),
            ("pause", self.pause_s),
            ("duration", self.duration_s),
        ] {
            if !(v >= 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be non-negative")));
            }
        }
        if self.n == 0 {
            return Err(SimError::InvalidConfig("need at least one node".into()));
        }
        if self.flows > self.n {
            return Err(SimError::InvalidConfig(format!(
                "{} flows need distinct sources but only {} nodes exist",
                self.flows, self.n
            )));
        }
        if self.packet_bytes == 0 || self.rreq_bytes == 0 || self.hello_base_bytes == 0 {
            return Err(SimError::InvalidConfig("packet sizes must be positive".into()));
        }
        if !(self.initial_energy.0 > 0.0 && self.initial_energy.1 >= self.initial_energy.0) {
            return Err(SimError::InvalidConfig("bad initial energy range".into()));
        }
        Ok(())
    }
}

/// One neighbor-discovery broadcast. The neighbor list is the sender's
/// 1-hop view at emission time.
#[derive(Debug, Clone)]
pub struct HelloMessage {
    pub sender: NodeId,
    pub energy: f64,
    pub speed: f64,
    pub neighbors: BTreeSet<NodeId>,
}

/// The route-request copy that reached the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub source: NodeId,
    pub destination: NodeId,
    pub broadcast_id: u64,
    pub hop_count: usize,
    /// Nodes the winning copy traversed, source first, destination last.
    pub reverse_path: Vec<NodeId>,
}

/// Outcome of one discovery flood.
#[derive(Debug, Clone)]
pub struct Discovery {
    /// Nodes that transmitted the RREQ, in transmission order.
    pub transmitters: Vec<NodeId>,
    /// Full path source..destination if the destination was reached.
    pub path: Option<Vec<NodeId>>,
    pub request: Option<RouteRequest>,
}

impl Discovery {
    pub fn transmissions(&self) -> u64 {
        self.transmitters.len() as u64
    }
}

/// Flood an RREQ from `src` through nodes satisfying `relay_ok`,
/// deduplicating per node, and derive the first-arrival path to `dst`.
/// The source always transmits; every other recipient retransmits exactly
/// once iff `relay_ok`. The flood is not suppressed when the destination
/// is reached (receivers cannot know), so in flooding mode it covers every
/// reachable node.
pub fn discover(
    g: &UdgSnapshot,
    relay_ok: impl Fn(NodeId) -> bool,
    src: NodeId,
    dst: NodeId,
    ttl: usize,
    broadcast_id: u64,
) -> Discovery {
    assert_ne!(src, dst, "discovery requires distinct endpoints");
    let mut transmitters = Vec::new();
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut seen: BTreeSet<NodeId> = BTreeSet::from([src]);
    let mut wave: Vec<NodeId> = vec![src];
    let mut depth = 0usize;
    while !wave.is_empty() && depth < ttl {
        let mut next = Vec::new();
        for &x in &wave {
            if depth > 0 && !relay_ok(x) {
                continue;
            }
            transmitters.push(x);
            for y in g.neighbors(x) {
                if seen.insert(y) {
                    parent.insert(y, x);
                    next.push(y);
                }
            }
        }
        next.sort_unstable();
        wave = next;
        depth += 1;
    }
    let path = if seen.contains(&dst) {
        let mut p = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = parent[&cur];
            p.push(cur);
        }
        p.reverse();
        Some(p)
    } else {
        None
    };
    let request = path.as_ref().map(|p| RouteRequest {
        source: src,
        destination: dst,
        broadcast_id,
        hop_count: p.len() - 1,
        reverse_path: p.clone(),
    });
    Discovery { transmitters, path, request }
}

#[derive(Debug, Clone, Default)]
struct NodeView {
    /// Senders heard in the most recent hello round.
    n1: BTreeSet<NodeId>,
    /// Latest hello contents per heard sender.
    info: BTreeMap<NodeId, (f64, f64, BTreeSet<NodeId>)>,
}

#[derive(Debug, Clone, Copy)]
struct Flow {
    src: NodeId,
    dst: NodeId,
    next_emit_tick: u64,
}

/// Metrics of one completed run. Field-for-field this is one CSV row of
/// the scenario matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub algorithm: Algorithm,
    pub mode: RouteMode,
    pub n: usize,
    pub v_max: f64,
    pub seed: u64,
    pub cds_size_mean: f64,
    pub lifetime_s: f64,
    pub rreq_total: u64,
    pub sent: u64,
    pub delivered: u64,
}

impl MetricsRecord {
    /// Delivered/sent; 0 when nothing was sent.
    pub fn pdr(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent deterministic sub-streams per purpose. Streams never depend
/// on the algorithm or route mode, so every algorithm sees the identical
/// topology, energies, motion and traffic for a given seed.
fn derive_seed(seed: u64, tag: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag) ^ splitmix64(salt.wrapping_mul(0xA24B_AED4_963E_E407)))
}

const STREAM_TOPOLOGY: u64 = 1;
const STREAM_ENERGY: u64 = 2;
const STREAM_MOBILITY: u64 = 3;
const STREAM_TRAFFIC: u64 = 4;

/// Full mutable state of one run.
pub struct World {
    params: SimParams,
    algorithm: Algorithm,
    mode: RouteMode,
    tick: u64,
    total_ticks: u64,
    hello_ticks: u64,
    recompute_ticks: u64,
    packet_ticks: u64,
    traffic_start_tick: u64,
    mobility: BTreeMap<NodeId, WaypointState>,
    mob_rngs: BTreeMap<NodeId, ChaCha8Rng>,
    ledger: EnergyLedger,
    views: BTreeMap<NodeId, NodeView>,
    backbone: Option<BackboneResult>,
    routes: BTreeMap<(NodeId, NodeId), Vec<NodeId>>,
    next_broadcast_id: BTreeMap<NodeId, u64>,
    flows: Vec<Flow>,
    rreq_total: u64,
    sent: u64,
    delivered: u64,
    cds_size_sum: f64,
    cds_samples: u64,
    recompute_failures: u64,
    seed: u64,
    finished: bool,
    lifetime: Option<f64>,
    trace: Option<Vec<String>>,
}

impl World {
    pub fn new(
        params: SimParams,
        algorithm: Algorithm,
        mode: RouteMode,
        seed: u64,
    ) -> Result<World, SimError> {
        params.validate()?;
        let initial = random_connected_udg(
            params.n,
            params.area,
            params.range_m,
            derive_seed(seed, STREAM_TOPOLOGY, 0),
        )?;

        let mut energy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_ENERGY, 0));
        let residual: BTreeMap<NodeId, f64> = initial
            .ids()
            .iter()
            .map(|&id| {
                (id, energy_rng.gen_range(params.initial_energy.0..=params.initial_energy.1))
            })
            .collect();
        let ledger = EnergyLedger::new(residual, params.ratings, params.bitrate_bps);

        let mobility: BTreeMap<NodeId, WaypointState> = initial
            .ids()
            .iter()
            .map(|&id| (id, WaypointState::new(initial.position(id))))
            .collect();
        let mob_rngs: BTreeMap<NodeId, ChaCha8Rng> = initial
            .ids()
            .iter()
            .map(|&id| {
                (id, ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_MOBILITY, id as u64)))
            })
            .collect();

        let mut traffic_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TRAFFIC, 0));
        let hello_ticks = ticks_of(params.hello_interval_s);
        let traffic_start_tick = 2 * hello_ticks;
        let flows = draw_flows(&params, initial.ids(), &mut traffic_rng, traffic_start_tick);

        let views = initial.ids().iter().map(|&id| (id, NodeView::default())).collect();
        let total_ticks = (params.duration_s / TICK_S).round() as u64;
        let recompute_ticks = ticks_of(params.recompute_interval_s);
        let packet_ticks = ticks_of(1.0 / params.packet_rate_hz);

        Ok(World {
            params,
            algorithm,
            mode,
            tick: 0,
            total_ticks,
            hello_ticks,
            recompute_ticks,
            packet_ticks,
            traffic_start_tick,
            mobility,
            mob_rngs,
            ledger,
            views,
            backbone: None,
            routes: BTreeMap::new(),
            next_broadcast_id: BTreeMap::new(),
            flows,
            rreq_total: 0,
            sent: 0,
            delivered: 0,
            cds_size_sum: 0.0,
            cds_samples: 0,
            recompute_failures: 0,
            seed,
            finished: false,
            lifetime: None,
            trace: None,
        })
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.take().unwrap_or_default()
    }

    fn trace_event(&mut self, node: impl fmt::Display, kind: &str, details: impl fmt::Display) {
        let t = self.now();
        if let Some(lines) = self.trace.as_mut() {
            lines.push(format!("{t:.1} {kind} {node} {details}"));
        }
    }

    pub fn now(&self) -> f64 {
        self.tick as f64 * TICK_S
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn mode(&self) -> RouteMode {
        self.mode
    }

    pub fn ledger(&self) -> &EnergyLedger {
        self.ledger_ref()
    }

    fn ledger_ref(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn backbone(&self) -> Option<&BackboneResult> {
        self.backbone.as_ref()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.mobility.keys().copied()
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.mobility[&id].position()
    }

    pub fn current_speed(&self, id: NodeId) -> f64 {
        self.mobility[&id].current_speed()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn recompute_failures(&self) -> u64 {
        self.recompute_failures
    }

    /// 1-hop set node `u` learned from the latest hello round.
    pub fn view_n1(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.views[&u].n1
    }

    /// 2-hop set node `u` can derive from its neighbors' hello lists.
    pub fn view_n2(&self, u: NodeId) -> BTreeSet<NodeId> {
        let view = &self.views[&u];
        let mut two = BTreeSet::new();
        for v in &view.n1 {
            if let Some((_, _, list)) = view.info.get(v) {
                two.extend(list.iter().copied());
            }
        }
        two.remove(&u);
        for v in &view.n1 {
            two.remove(v);
        }
        two
    }

    /// Energy/speed node `u` last heard from neighbor `v`.
    pub fn view_attrs(&self, u: NodeId, v: NodeId) -> Option<(f64, f64)> {
        self.views[&u].info.get(&v).map(|&(e, s, _)| (e, s))
    }

    /// Unit-disk graph over the current positions.
    pub fn snapshot(&self) -> UdgSnapshot {
        let nodes: Vec<(NodeId, f64, f64)> = self
            .mobility
            .iter()
            .map(|(&id, s)| (id, s.position().x, s.position().y))
            .collect();
        build_udg(&nodes, self.params.range_m).expect("positions stay valid")
    }

    fn in_range(&self, a: NodeId, b: NodeId) -> bool {
        self.mobility[&a].position().distance(&self.mobility[&b].position())
            < self.params.range_m
    }

    /// Every node broadcasts a hello carrying its id, residual energy,
    /// speed and current 1-hop list; in-range receivers pay the reception
    /// cost and update their views. Two consecutive rounds give every node
    /// a consistent 2-hop picture of a static neighborhood.
    pub fn hello_round(&mut self) {
        let g = self.snapshot();
        let now = self.now();
        let messages: Vec<HelloMessage> = self
            .views
            .iter()
            .map(|(&id, view)| HelloMessage {
                sender: id,
                energy: self.ledger.residual(id),
                speed: self.mobility[&id].current_speed(),
                neighbors: view.n1.clone(),
            })
            .collect();
        let mut heard: BTreeMap<NodeId, BTreeSet<NodeId>> =
            self.views.keys().map(|&id| (id, BTreeSet::new())).collect();
        let mut tx = 0u64;
        let mut rx = 0u64;
        for msg in messages {
            let bytes = self.params.hello_base_bytes
                + self.params.hello_per_neighbor_bytes * msg.neighbors.len();
            let airtime = self.ledger.packet_airtime(bytes).expect("hello is non-empty");
            self.ledger.charge(msg.sender, Activity::Tx, airtime, now);
            tx += 1;
            for v in g.neighbors(msg.sender) {
                self.ledger.charge(v, Activity::Rx, airtime, now);
                rx += 1;
                let view = self.views.get_mut(&v).expect("receiver exists");
                view.info
                    .insert(msg.sender, (msg.energy, msg.speed, msg.neighbors.clone()));
                heard.get_mut(&v).unwrap().insert(msg.sender);
            }
        }
        for (id, n1) in heard {
            self.views.get_mut(&id).unwrap().n1 = n1;
        }
        self.trace_event('-', "hello", format!("tx={tx} rx={rx}"));
    }

    /// Rebuild the backbone from the current snapshot. On a momentarily
    /// disconnected snapshot the previous backbone is retained and a
    /// warning counted. In CDS mode, cached routes whose interior nodes
    /// left the backbone are dropped.
    pub fn recompute_backbone(&mut self) {
        let g = self.snapshot();
        if !g.is_connected() {
            self.recompute_failures += 1;
            self.trace_event('-', "recompute-skipped", "snapshot disconnected");
            return;
        }
        let tables = neighbor_tables(&g);
        let attrs = Attributes::build(&tables, |id| {
            (self.ledger.residual(id), self.mobility[&id].current_speed())
        });
        let mut result = baseline_cds(self.algorithm, &g, &tables, &attrs)
            .expect("connectivity was checked");
        result.time = self.now();
        let black = result.black();
        if self.mode == RouteMode::Cds {
            self.routes.retain(|_, path| {
                path[1..path.len() - 1].iter().all(|hop| black.contains(hop))
            });
        }
        self.cds_size_sum += black.len() as f64;
        self.cds_samples += 1;
        self.trace_event('-', "recompute", format!("cds={}", black.len()));
        self.backbone = Some(result);
    }

    /// Flood a route request from `src` toward `dst` and unicast the reply
    /// back along the discovered path. Counts every RREQ transmission and
    /// charges transmit/receive energy for the flood and the reply.
    pub fn route_discovery(&mut self, src: NodeId, dst: NodeId) -> Discovery {
        assert_ne!(src, dst, "route discovery requires distinct endpoints");
        let g = self.snapshot();
        let now = self.now();
        let bid = {
            let ctr = self.next_broadcast_id.entry(src).or_insert(0);
            let v = *ctr;
            *ctr += 1;
            v
        };
        let black = match self.mode {
            RouteMode::Cds => Some(
                self.backbone
                    .as_ref()
                    .map(|b| b.black())
                    .unwrap_or_default(),
            ),
            RouteMode::Flooding => None,
        };
        let relay_ok = |x: NodeId| match &black {
            Some(set) => set.contains(&x),
            None => true,
        };
        let outcome = discover(&g, relay_ok, src, dst, self.params.n, bid);

        let rreq_air = self
            .ledger
            .packet_airtime(self.params.rreq_bytes)
            .expect("rreq is non-empty");
        for &t in &outcome.transmitters {
            self.ledger.charge(t, Activity::Tx, rreq_air, now);
            for v in g.neighbors(t) {
                self.ledger.charge(v, Activity::Rx, rreq_air, now);
            }
        }
        self.rreq_total += outcome.transmissions();

        if let Some(path) = &outcome.path {
            for hop in path.windows(2).rev() {
                // reply travels destination -> source
                self.ledger.charge(hop[1], Activity::Tx, rreq_air, now);
                self.ledger.charge(hop[0], Activity::Rx, rreq_air, now);
            }
            self.routes.insert((src, dst), path.clone());
        }
        self.trace_event(
            src,
            "rreq",
            format!(
                "dst={dst} id={bid} tx={} {}",
                outcome.transmissions(),
                if outcome.path.is_some() { "answered" } else { "unanswered" }
            ),
        );
        outcome
    }

    /// Emit one data packet on a flow: discover a route if none is cached,
    /// then forward hop by hop. A hop whose next node moved out of range
    /// loses the packet and invalidates the route; the next packet on the
    /// flow triggers rediscovery.
    fn send_packet(&mut self, src: NodeId, dst: NodeId) {
        self.sent += 1;
        let route = match self.routes.get(&(src, dst)) {
            Some(r) => r.clone(),
            None => match self.route_discovery(src, dst).path {
                Some(p) => p,
                None => {
                    self.trace_event(src, "packet-lost", format!("dst={dst} no-route"));
                    return;
                }
            },
        };
        let now = self.now();
        let airtime = self
            .ledger
            .packet_airtime(self.params.packet_bytes)
            .expect("data packet is non-empty");
        for hop in route.windows(2) {
            if !self.in_range(hop[0], hop[1]) {
                self.routes.remove(&(src, dst));
                self.trace_event(
                    hop[0],
                    "packet-lost",
                    format!("dst={dst} link-break next={}", hop[1]),
                );
                return;
            }
            self.ledger.charge(hop[0], Activity::Tx, airtime, now);
            self.ledger.charge(hop[1], Activity::Rx, airtime, now);
        }
        self.delivered += 1;
        self.trace_event(src, "packet-delivered", format!("dst={dst} hops={}", route.len() - 1));
    }

    /// Execute one tick. Returns false once the run is over (duration
    /// reached or a node died at the end of the previous tick).
    pub fn step(&mut self) -> bool {
        if self.finished || self.tick >= self.total_ticks {
            self.finished = true;
            return false;
        }
        if self.tick > 0 {
            let mobility_params = MobilityParams {
                area: self.params.area,
                v_max: self.params.v_max,
                pause_s: self.params.pause_s,
            };
            for (id, state) in self.mobility.iter_mut() {
                state.advance(TICK_S, &mobility_params, self.mob_rngs.get_mut(id).unwrap());
            }
        }
        let now = self.now();
        let ids: Vec<NodeId> = self.mobility.keys().copied().collect();
        for id in ids {
            self.ledger.charge(id, Activity::Idle, TICK_S, now);
        }
        if self.tick % self.hello_ticks == 0 {
            self.hello_round();
        }
        if self.tick % self.recompute_ticks == 0 {
            self.recompute_backbone();
        }
        if self.tick >= self.traffic_start_tick {
            for i in 0..self.flows.len() {
                while self.flows[i].next_emit_tick <= self.tick {
                    let Flow { src, dst, .. } = self.flows[i];
                    self.send_packet(src, dst);
                    self.flows[i].next_emit_tick += self.packet_ticks;
                }
            }
        }
        self.tick += 1;
        if let Some(death) = self.ledger.first_death() {
            self.lifetime = Some(death.time);
            self.finished = true;
            self.trace_event(death.node, "death", format!("t={:.1}", death.time));
            return false;
        }
        true
    }

    /// Run to completion and summarize.
    pub fn run(&mut self) -> MetricsRecord {
        while self.step() {}
        self.metrics()
    }

    pub fn metrics(&self) -> MetricsRecord {
        MetricsRecord {
            algorithm: self.algorithm,
            mode: self.mode,
            n: self.params.n,
            v_max: self.params.v_max,
            seed: self.seed,
            cds_size_mean: if self.cds_samples == 0 {
                0.0
            } else {
                self.cds_size_sum / self.cds_samples as f64
            },
            lifetime_s: self.lifetime.unwrap_or(self.params.duration_s),
            rreq_total: self.rreq_total,
            sent: self.sent,
            delivered: self.delivered,
        }
    }
}

fn ticks_of(seconds: f64) -> u64 {
    ((seconds / TICK_S).round() as u64).max(1)
}

fn draw_flows(
    params: &SimParams,
    ids: &[NodeId],
    rng: &mut ChaCha8Rng,
    start_tick: u64,
) -> Vec<Flow> {
    // distinct sources, uniform destinations
    let mut pool: Vec<NodeId> = ids.to_vec();
    for i in (1..pool.len()).rev() {
        let j = rng.gen_range(0..=i);
        pool.swap(i, j);
    }
    pool.truncate(params.flows);
    pool.iter()
        .map(|&src| {
            let dst = loop {
                let candidate = ids[rng.gen_range(0..ids.len())];
                if candidate != src {
                    break candidate;
                }
            };
            Flow { src, dst, next_emit_tick: start_tick }
        })
        .collect()
}

/// Build a world, run it to completion, and return its metrics row.
pub fn run_simulation(
    params: SimParams,
    algorithm: Algorithm,
    mode: RouteMode,
    seed: u64,
) -> Result<MetricsRecord, SimError> {
    let mut world = World::new(params, algorithm, mode, seed)?;
    Ok(world.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params(n: usize) -> SimParams {
        SimParams {
            n,
            area: (600.0, 600.0),
            v_max: 0.0,
            duration_s: 10.0,
            flows: 1.min(n),
            initial_energy: (50.0, 50.0),
            ..SimParams::default()
        }
    }

    /// A 3-node path world with pinned positions, built through the normal
    /// constructor and then repositioned for exact topology control.
    fn path_world(mode: RouteMode) -> World {
        let params = SimParams {
            n: 3,
            area: (600.0, 100.0),
            v_max: 0.0,
            duration_s: 5.0,
            flows: 0,
            initial_energy: (50.0, 50.0),
            ..SimParams::default()
        };
        let mut w = World::new(params, Algorithm::EasCds, mode, 11).unwrap();
        w.place_for_test(&[(1, 0.0, 0.0), (2, 200.0, 0.0), (3, 400.0, 0.0)]);
        w
    }

    impl World {
        fn place_for_test(&mut self, coords: &[(NodeId, f64, f64)]) {
            for &(id, x, y) in coords {
                self.mobility.insert(id, WaypointState::new(Point::new(x, y)));
            }
        }
    }

    #[test]
    fn hello_learns_two_hop_sets_after_two_rounds() {
        let mut w = path_world(RouteMode::Cds);
        w.hello_round();
        w.hello_round();
        assert_eq!(w.view_n1(1), &BTreeSet::from([2]));
        assert_eq!(w.view_n2(1), BTreeSet::from([3]));
        assert_eq!(w.view_n2(2), BTreeSet::new());
        let (energy, speed) = w.view_attrs(1, 2).unwrap();
        assert!(energy > 0.0);
        assert_eq!(speed, 0.0);
    }

    #[test]
    fn hello_charges_match_degree_sum() {
        let params = SimParams {
            n: 10,
            v_max: 0.0,
            duration_s: 5.0,
            flows: 0,
            initial_energy: (50.0, 50.0),
            ..SimParams::default()
        };
        let mut w = World::new(params, Algorithm::EasCds, RouteMode::Cds, 3).unwrap();
        let g = w.snapshot();
        let degree_sum: usize = g.ids().iter().map(|&u| g.degree(u)).sum();
        let tx0 = w.ledger().tx_events;
        let rx0 = w.ledger().rx_events;
        w.hello_round();
        assert_eq!(w.ledger().tx_events - tx0, 10);
        assert_eq!(w.ledger().rx_events - rx0, degree_sum as u64);
    }

    #[test]
    fn isolated_node_hears_nothing() {
        let params = SimParams {
            n: 1,
            v_max: 0.0,
            duration_s: 1.0,
            flows: 0,
            initial_energy: (50.0, 50.0),
            ..SimParams::default()
        };
        let mut w = World::new(params, Algorithm::EasCds, RouteMode::Cds, 0).unwrap();
        w.hello_round();
        assert!(w.view_n1(1).is_empty());
        assert_eq!(w.ledger().rx_events, 0);
    }

    #[test]
    fn discovery_counts_on_path() {
        let mut w = path_world(RouteMode::Cds);
        w.recompute_backbone();
        assert_eq!(w.backbone().unwrap().black(), BTreeSet::from([2]));
        let d = w.route_discovery(1, 3);
        assert_eq!(d.transmissions(), 2, "source plus the single backbone node");
        assert_eq!(d.path, Some(vec![1, 2, 3]));
        let req = d.request.unwrap();
        assert_eq!(req.hop_count, 2);
        assert_eq!(req.reverse_path.len(), 3);

        let mut w = path_world(RouteMode::Flooding);
        w.recompute_backbone();
        let d = w.route_discovery(1, 3);
        assert_eq!(d.transmissions(), 3, "every node rebroadcasts when flooding");
    }

    #[test]
    fn discovery_adjacent_destination() {
        // two nodes: source transmits once, destination only receives
        let params = SimParams {
            n: 2,
            area: (300.0, 100.0),
            v_max: 0.0,
            duration_s: 5.0,
            flows: 0,
            initial_energy: (50.0, 50.0),
            ..SimParams::default()
        };
        let mut w = World::new(params, Algorithm::EasCds, RouteMode::Cds, 5).unwrap();
        w.place_for_test(&[(1, 0.0, 0.0), (2, 100.0, 0.0)]);
        w.recompute_backbone();
        let d = w.route_discovery(1, 2);
        assert_eq!(d.transmissions(), 1);
        assert_eq!(d.request.unwrap().hop_count, 1);
    }

    #[test]
    fn rreq_dedup_bounds() {
        for seed in 0..5u64 {
            let params = SimParams {
                n: 30,
                v_max: 0.0,
                duration_s: 5.0,
                flows: 0,
                initial_energy: (50.0, 50.0),
                ..SimParams::default()
            };
            let mut w = World::new(params, Algorithm::EasCds, RouteMode::Cds, seed).unwrap();
            w.recompute_backbone();
            let black = w.backbone().unwrap().black();
            let d = w.route_discovery(1, 30);
            assert!(d.transmissions() <= 1 + black.len() as u64);
            let mut seen = BTreeSet::new();
            for t in &d.transmitters {
                assert!(seen.insert(*t), "node {t} transmitted twice");
            }
            // interior nodes of the found path were backbone members
            let path = d.path.unwrap();
            for hop in &path[1..path.len() - 1] {
                assert!(black.contains(hop));
            }

            let mut w = World::new(
                SimParams {
                    n: 30,
                    v_max: 0.0,
                    duration_s: 5.0,
                    flows: 0,
                    initial_energy: (50.0, 50.0),
                    ..SimParams::default()
                },
                Algorithm::EasCds,
                RouteMode::Flooding,
                seed,
            )
            .unwrap();
            w.recompute_backbone();
            let d = w.route_discovery(1, 30);
            assert!(d.transmissions() <= 30);
        }
    }

    #[test]
    fn static_run_delivers_everything() {
        let mut params = tiny_params(25);
        params.duration_s = 30.0;
        params.flows = 5;
        let record = run_simulation(params, Algorithm::EasCds, RouteMode::Cds, 2).unwrap();
        assert!(record.sent > 0);
        assert_eq!(record.delivered, record.sent, "static idealized network loses nothing");
        assert_eq!(record.pdr(), 1.0);
        assert_eq!(record.lifetime_s, 30.0, "no deaths in a 30 s run at 50 J");
    }

    #[test]
    fn identical_seeds_reproduce_identical_records() {
        let params = SimParams {
            n: 20,
            duration_s: 30.0,
            flows: 4,
            v_max: 5.0,
            ..SimParams::default()
        };
        let a = run_simulation(params.clone(), Algorithm::EasCds, RouteMode::Cds, 9).unwrap();
        let b = run_simulation(params, Algorithm::EasCds, RouteMode::Cds, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_duration_run() {
        let mut params = tiny_params(5);
        params.duration_s = 0.0;
        params.flows = 2;
        let record = run_simulation(params, Algorithm::EasCds, RouteMode::Cds, 1).unwrap();
        assert_eq!(record.sent, 0);
        assert_eq!(record.delivered, 0);
        assert_eq!(record.lifetime_s, 0.0);
    }

    #[test]
    fn low_energy_node_dies_and_stops_the_run() {
        let params = SimParams {
            n: 10,
            v_max: 0.0,
            duration_s: 600.0,
            flows: 2,
            initial_energy: (0.2, 0.4),
            ..SimParams::default()
        };
        let record = run_simulation(params, Algorithm::EasCds, RouteMode::Cds, 4).unwrap();
        assert!(record.lifetime_s < 600.0, "someone must die at these energies");
        assert!(record.lifetime_s > 0.0);
    }

    #[test]
    fn recompute_on_disconnected_snapshot_keeps_previous_backbone() {
        let mut w = path_world(RouteMode::Cds);
        w.recompute_backbone();
        let before = w.backbone().unwrap().black();
        assert_eq!(before, BTreeSet::from([2]));
        // node 3 drifts out of everyone's range: momentary partition
        w.place_for_test(&[(3, 5000.0, 5000.0)]);
        w.recompute_backbone();
        assert_eq!(w.backbone().unwrap().black(), before, "previous backbone retained");
        assert_eq!(w.recompute_failures(), 1);
    }

    #[test]
    fn static_recomputations_are_identical() {
        let mut w = path_world(RouteMode::Cds);
        w.recompute_backbone();
        let first = w.backbone().unwrap().black();
        w.recompute_backbone();
        assert_eq!(w.backbone().unwrap().black(), first);
    }
}
