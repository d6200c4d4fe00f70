//! Ideal-MAC packet engine: flows run one after another over a static
//! topology, node state persists between packets, and every packet ends
//! delivered, dropped at an exhausted source, or at the safety cap.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point;
use crate::routing::{
    compute_forbidden_sector, greedy_next_hop, modified_reactive_deflection, HelloRecord, Neighbor, NodeState, Policy,
    RoutingConfig, RoutingDecision,
};
use crate::topology::{NodeId, RngSeed, Topology};

#[derive(Debug, Error)]
pub enum OutcomeLogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    NoRoute,
    SafetyCap,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::NoRoute => "no-route",
            DropReason::SafetyCap => "safety-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub flow_id: usize,
    pub seq: usize,
    pub src: NodeId,
    pub dest_id: NodeId,
    pub dest_pos: Point,
    /// Every node the packet visited, backtrack moves included.
    pub trace: Vec<NodeId>,
    /// Current forward path; its second-to-last entry is the previous hop.
    pub backtrack_stack: Vec<NodeId>,
    pub transmissions: usize,
}

impl Packet {
    pub fn new(flow_id: usize, seq: usize, src: NodeId, dest_id: NodeId, dest_pos: Point) -> Self {
        Self {
            flow_id,
            seq,
            src,
            dest_id,
            dest_pos,
            trace: vec![src],
            backtrack_stack: vec![src],
            transmissions: 0,
        }
    }

    pub fn current(&self) -> NodeId {
        *self.backtrack_stack.last().expect("stack holds at least the source")
    }

    pub fn previous_hop(&self) -> Option<NodeId> {
        let n = self.backtrack_stack.len();
        (n >= 2).then(|| self.backtrack_stack[n - 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowOutcome {
    pub delivered: bool,
    /// Hops of the final forward path (backtracked detours excluded).
    pub route_hops: usize,
    /// Every transmission, backtracks included.
    pub total_transmissions: usize,
    pub shortest_hops: usize,
    pub drop_reason: Option<DropReason>,
}

/// One line of the outcome log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub flow: usize,
    pub seq: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub outcome: FlowOutcome,
}

impl fmt::Display for PacketRecord {
    /// `flow seq src dst delivered route_hops transmissions shortest drop_reason`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.outcome;
        let reason = o.drop_reason.map_or_else(|| "-".to_string(), |r| r.to_string());
        write!(
            f,
            "{} {} {} {} {} {} {} {} {}",
            self.flow,
            self.seq,
            self.src,
            self.dst,
            u8::from(o.delivered),
            o.route_hops,
            o.total_transmissions,
            o.shortest_hops,
            reason
        )
    }
}

impl FromStr for PacketRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = s.split_whitespace().collect();
        let [flow, seq, src, dst, delivered, route, tx, shortest, reason] = f[..] else {
            return Err(format!("expected 9 fields, got {}", f.len()));
        };
        let num = |v: &str| v.parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
        let id = |v: &str| v.parse::<u32>().map(NodeId).map_err(|e| format!("`{v}`: {e}"));
        let delivered = match delivered {
            "1" => true,
            "0" => false,
            other => return Err(format!("delivered flag must be 0 or 1, got `{other}`")),
        };
        let drop_reason = match reason {
            "-" => None,
            "no-route" => Some(DropReason::NoRoute),
            "safety-cap" => Some(DropReason::SafetyCap),
            other => return Err(format!("unknown drop reason `{other}`")),
        };
        Ok(PacketRecord {
            flow: num(flow)?,
            seq: num(seq)?,
            src: id(src)?,
            dst: id(dst)?,
            outcome: FlowOutcome {
                delivered,
                route_hops: num(route)?,
                total_transmissions: num(tx)?,
                shortest_hops: num(shortest)?,
                drop_reason,
            },
        })
    }
}

pub fn write_outcome_log<W: Write>(records: &[PacketRecord], mut w: W) -> io::Result<()> {
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

pub fn read_outcome_log<R: BufRead>(r: R) -> Result<Vec<PacketRecord>, OutcomeLogError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|msg| OutcomeLogError::Parse { line: i + 1, msg })?);
    }
    Ok(out)
}

/// Owns the per-node state for one simulation over a topology.
#[derive(Debug, Clone)]
pub struct Simulator<'t> {
    topology: &'t Topology,
    cfg: RoutingConfig,
    states: Vec<NodeState>,
    neighbors: Vec<Vec<Neighbor>>,
    duplicate_forwards: usize,
}

impl<'t> Simulator<'t> {
    pub fn new(topology: &'t Topology, cfg: RoutingConfig) -> Self {
        let states = topology.nodes().map(|id| NodeState::new(id, topology.position(id))).collect();
        let neighbors = topology
            .nodes()
            .map(|u| {
                topology
                    .neighbors(u)
                    .iter()
                    .map(|&v| Neighbor { id: v, position: topology.position(v) })
                    .collect()
            })
            .collect();
        Self { topology, cfg, states, neighbors, duplicate_forwards: 0 }
    }

    pub fn config(&self) -> &RoutingConfig {
        &self.cfg
    }

    pub fn state(&self, id: NodeId) -> &NodeState {
        &self.states[id.index()]
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<NodeState> {
        self.states
    }

    pub fn duplicate_forwards(&self) -> usize {
        self.duplicate_forwards
    }

    pub fn reset_states(&mut self) {
        self.states.iter_mut().for_each(NodeState::reset);
    }

    /// Transmission budget per packet.
    pub fn safety_cap(&self) -> usize {
        4 * self.topology.len()
    }

    /// Moves `packet` until it is delivered, dropped, or hits the safety cap.
    pub fn forward_packet(&mut self, packet: &mut Packet, shortest_hops: usize) -> FlowOutcome {
        let cap = self.safety_cap();
        let dest = packet.dest_pos;
        let mut forwards: HashSet<(NodeId, NodeId)> = HashSet::new();
        let finish = |packet: &Packet, delivered: bool, reason: Option<DropReason>| FlowOutcome {
            delivered,
            route_hops: if delivered { packet.backtrack_stack.len() - 1 } else { 0 },
            total_transmissions: packet.transmissions,
            shortest_hops,
            drop_reason: reason,
        };
        loop {
            let here = packet.current();
            if here == packet.dest_id {
                return finish(packet, true, None);
            }
            if packet.transmissions >= cap {
                log::warn!("packet {}/{} hit the safety cap at node {here}", packet.flow_id, packet.seq);
                return finish(packet, false, Some(DropReason::SafetyCap));
            }
            let decision = self.decide(here, dest, packet.previous_hop());
            match decision {
                RoutingDecision::Forward(next) => {
                    if !forwards.insert((here, next)) {
                        self.duplicate_forwards += 1;
                    }
                    packet.backtrack_stack.push(next);
                    packet.trace.push(next);
                    packet.transmissions += 1;
                }
                RoutingDecision::Backtrack { to, advertised } => {
                    packet.backtrack_stack.pop();
                    debug_assert_eq!(packet.current(), to);
                    packet.trace.push(to);
                    packet.transmissions += 1;
                    let origin_pos = self.topology.position(here);
                    self.states[to.index()].learn_backtrack(here, origin_pos, dest, &advertised);
                    self.propagate_blocked_info(here, self.cfg.k);
                }
                RoutingDecision::Drop => {
                    if self.cfg.policy.is_reactive() {
                        // the source just recorded itself as blocked
                        self.propagate_blocked_info(here, self.cfg.k);
                    }
                    return finish(packet, false, Some(DropReason::NoRoute));
                }
            }
        }
    }

    fn decide(&mut self, here: NodeId, dest: Point, previous_hop: Option<NodeId>) -> RoutingDecision {
        let neighbors = &self.neighbors[here.index()];
        let state = &mut self.states[here.index()];
        match self.cfg.policy {
            Policy::Greedy => greedy_next_hop(state, neighbors, dest),
            Policy::Deflection => modified_reactive_deflection(state, neighbors, dest, previous_hop, None, &self.cfg),
            Policy::DeflectionOptimized => {
                let forbidden = compute_forbidden_sector(state, dest, &self.cfg);
                modified_reactive_deflection(state, neighbors, dest, previous_hop, forbidden.as_ref(), &self.cfg)
            }
        }
    }

    /// Hello flood from `origin`: every node within `k` hops replaces what it
    /// knows about `origin` with its current sectors and neighbor list.
    pub fn propagate_blocked_info(&mut self, origin: NodeId, k: u32) {
        let hello = HelloRecord {
            position: self.topology.position(origin),
            neighbors: self.topology.neighbors(origin).to_vec(),
            sectors: self.states[origin.index()].blocked_sectors().to_vec(),
            exact: self.states[origin.index()].exact_keys(),
        };
        let layers = self.topology.bfs_layers(origin, Some(k));
        for (i, hops) in layers.iter().enumerate() {
            if matches!(hops, Some(h) if *h >= 1) {
                self.states[i].learn_hello(origin, hello.clone());
            }
        }
    }
}

/// Result of a full simulation run.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub cfg: RoutingConfig,
    pub seed: RngSeed,
    pub flows: Vec<(NodeId, NodeId)>,
    pub outcomes: Vec<PacketRecord>,
    pub node_states: Vec<NodeState>,
    pub duplicate_forwards: usize,
}

/// `n_flows` random (source, destination) pairs with distinct endpoints.
pub fn generate_flows(topology: &Topology, n_flows: usize, seed: RngSeed) -> Vec<(NodeId, NodeId)> {
    let n = topology.len() as u32;
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    (0..n_flows)
        .map(|_| loop {
            let src = rng.random_range(0..n);
            let dst = rng.random_range(0..n);
            if src != dst {
                break (NodeId(src), NodeId(dst));
            }
        })
        .collect()
}

pub fn run_simulation(
    topology: &Topology,
    cfg: &RoutingConfig,
    n_flows: usize,
    packets_per_flow: usize,
    seed: RngSeed,
) -> SimulationRun {
    let flows = generate_flows(topology, n_flows, seed);
    run_flows(topology, cfg, flows, packets_per_flow, seed)
}

/// Runs the given flows in order, `packets_per_flow` packets each.
pub fn run_flows(
    topology: &Topology,
    cfg: &RoutingConfig,
    flows: Vec<(NodeId, NodeId)>,
    packets_per_flow: usize,
    seed: RngSeed,
) -> SimulationRun {
    let mut sim = Simulator::new(topology, cfg.clone());
    let mut outcomes = Vec::with_capacity(flows.len() * packets_per_flow);
    for (flow, &(src, dst)) in flows.iter().enumerate() {
        if !cfg.persist_state {
            sim.reset_states();
        }
        let shortest = topology.bfs_hops(src, dst).unwrap_or(0) as usize;
        for seq in 0..packets_per_flow {
            let mut packet = Packet::new(flow, seq, src, dst, topology.position(dst));
            let outcome = sim.forward_packet(&mut packet, shortest);
            outcomes.push(PacketRecord { flow, seq, src, dst, outcome });
        }
    }
    let duplicate_forwards = sim.duplicate_forwards();
    SimulationRun {
        cfg: cfg.clone(),
        seed,
        flows,
        outcomes,
        node_states: sim.into_states(),
        duplicate_forwards,
    }
}

/// Aggregate statistics of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub packets: usize,
    pub delivered: usize,
    pub loss: f64,
    /// Mean forward-path hops over delivered packets.
    pub route_length: Option<f64>,
    /// Mean of route_hops / shortest_hops over delivered packets.
    pub stretch: Option<f64>,
    /// Mean transmissions over all packets.
    pub transmissions: f64,
    pub safety_cap_aborts: usize,
}

pub fn collect_metrics(records: &[PacketRecord]) -> RunMetrics {
    let packets = records.len();
    let delivered: Vec<&FlowOutcome> = records.iter().map(|r| &r.outcome).filter(|o| o.delivered).collect();
    let mean = |xs: &mut dyn Iterator<Item = f64>, n: usize| (n > 0).then(|| xs.sum::<f64>() / n as f64);
    let route_length = mean(&mut delivered.iter().map(|o| o.route_hops as f64), delivered.len());
    let stretch_samples: Vec<f64> = delivered
        .iter()
        .filter(|o| o.shortest_hops > 0)
        .map(|o| o.route_hops as f64 / o.shortest_hops as f64)
        .collect();
    let stretch = mean(&mut stretch_samples.iter().copied(), stretch_samples.len());
    RunMetrics {
        packets,
        delivered: delivered.len(),
        loss: if packets == 0 { 0.0 } else { (packets - delivered.len()) as f64 / packets as f64 },
        route_length,
        stretch,
        transmissions: mean(&mut records.iter().map(|r| r.outcome.total_transmissions as f64), packets).unwrap_or(0.0),
        safety_cap_aborts: records.iter().filter(|r| r.outcome.drop_reason == Some(DropReason::SafetyCap)).count(),
    }
}

impl SimulationRun {
    pub fn metrics(&self) -> RunMetrics {
        collect_metrics(&self.outcomes)
    }
}
