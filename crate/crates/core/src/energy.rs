//! Per-node energy ledger.
//!
//! Charges are watts × seconds against a per-node residual, clamped at
//! zero. The first time a node hits zero a death event is recorded; the
//! simulation uses the earliest death as the backbone lifetime.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::netgraph::NodeId;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("packet size must be positive")]
    ZeroLengthPacket,
}

#[derive(Debug, Clone, Copy)]
pub enum Activity {
    Tx,
    Rx,
    Idle,
}

/// Radio power draw per activity, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRatings {
    pub tx_w: f64,
    pub rx_w: f64,
    pub idle_w: f64,
}

impl Default for PowerRatings {
    fn default() -> Self {
        PowerRatings { tx_w: 1.4, rx_w: 1.0, idle_w: 0.013 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeathEvent {
    pub node: NodeId,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyLedger {
    residual: BTreeMap<NodeId, f64>,
    ratings: PowerRatings,
    bitrate_bps: f64,
    deaths: Vec<DeathEvent>,
    dead: BTreeSet<NodeId>,
    pub tx_events: u64,
    pub rx_events: u64,
    pub idle_events: u64,
}

impl EnergyLedger {
    pub fn new(initial: BTreeMap<NodeId, f64>, ratings: PowerRatings, bitrate_bps: f64) -> Self {
        assert!(bitrate_bps > 0.0, "bitrate must be positive");
        EnergyLedger {
            residual: initial,
            ratings,
            bitrate_bps,
            deaths: Vec::new(),
            dead: BTreeSet::new(),
            tx_events: 0,
            rx_events: 0,
            idle_events: 0,
        }
    }

    pub fn ratings(&self) -> PowerRatings {
        self.ratings
    }

    pub fn residual(&self, node: NodeId) -> f64 {
        self.residual[&node]
    }

    pub fn residuals(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.residual.iter().map(|(&n, &e)| (n, e))
    }

    /// Transmission duration of a packet at the ledger's bitrate.
    pub fn packet_airtime(&self, bytes: usize) -> Result<f64, EnergyError> {
        if bytes == 0 {
            return Err(EnergyError::ZeroLengthPacket);
        }
        Ok(bytes as f64 * 8.0 / self.bitrate_bps)
    }

    /// Drain `rating(activity) × duration` joules from `node`, clamping at
    /// zero. The first clamp to zero per node yields a death event stamped
    /// with `now`.
    pub fn charge(
        &mut self,
        node: NodeId,
        activity: Activity,
        duration_s: f64,
        now: f64,
    ) -> Option<DeathEvent> {
        assert!(duration_s >= 0.0, "duration must be non-negative");
        match activity {
            Activity::Tx => self.tx_events += 1,
            Activity::Rx => self.rx_events += 1,
            Activity::Idle => self.idle_events += 1,
        }
        let rate = match activity {
            Activity::Tx => self.ratings.tx_w,
            Activity::Rx => self.ratings.rx_w,
            Activity::Idle => self.ratings.idle_w,
        };
        let amount = rate * duration_s;
        let residual = self.residual.get_mut(&node).expect("unknown node in ledger");
        let next = *residual - amount;
        *residual = next.max(0.0);
        if next <= 0.0 && !self.dead.contains(&node) && amount > 0.0 {
            self.dead.insert(node);
            let event = DeathEvent { node, time: now };
            self.deaths.push(event);
            return Some(event);
        }
        None
    }

    pub fn first_death(&self) -> Option<DeathEvent> {
        self.deaths.first().copied()
    }

    pub fn any_dead(&self) -> bool {
        !self.dead.is_empty()
    }
}
