//! Per-node routing memory and the three forwarding policies: plain greedy,
//! reactive deflection with backtracking, and the deflection variant that
//! extrapolates a forbidden sector from a connected set of blocked nodes.
//!
//! Decisions only look at local state (the node's own blocked knowledge and
//! what it learned from backtracked packets and k-hop hello floods) plus the
//! current neighbor list. Ties are always broken by the smallest node id.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{
    angular_distance_to_bounds, euclid_dist, faces, minimal_covering_arc, oriented_angle, sector_contains, try_merge,
    Angle, GeometryError, Point, PointKey, RayTail, Sector, ARC_EPSILON,
};
use crate::topology::NodeId;

/// Half of the minimum arc width of a recorded sector.
pub const MIN_SECTOR_HALF_WIDTH: f64 = 1e-6;

/// Sampling step of the blocked-arc scan, refined by bisection.
const SCAN_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("invalid routing configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Greedy,
    Deflection,
    DeflectionOptimized,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Greedy, Policy::Deflection, Policy::DeflectionOptimized];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::Deflection => "deflection",
            Policy::DeflectionOptimized => "deflection_optimized",
        }
    }

    /// Whether nodes keep blocked state and backtrack.
    pub fn is_reactive(self) -> bool {
        !matches!(self, Policy::Greedy)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "greedy" => Ok(Policy::Greedy),
            "deflection" => Ok(Policy::Deflection),
            "deflection_optimized" | "deflection-optimized" | "optimized" => Ok(Policy::DeflectionOptimized),
            other => Err(RoutingError::InvalidConfig(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingConfig {
    /// Hello flood scope in hops.
    pub k: u32,
    /// Tolerance on `d_min` when merging sectors.
    pub delta_d: f64,
    /// Extra angle added on each side of a forbidden sector.
    pub guard_angle: f64,
    pub policy: Policy,
    /// When false, blocked knowledge is only used for the exact destination
    /// it was learned for; sectors are still recorded and advertised.
    pub sector_generalization: bool,
    /// Keep node state across flows (false resets it at every new flow).
    pub persist_state: bool,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            k: 3,
            delta_d: 0.0,
            guard_angle: 0.0,
            policy: Policy::Deflection,
            sector_generalization: true,
            persist_state: true,
        }
    }
}

impl RoutingConfig {
    pub fn with_policy(policy: Policy) -> Self {
        Self { policy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        if self.k < 1 {
            return Err(RoutingError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.delta_d >= 0.0 && self.delta_d.is_finite()) {
            return Err(RoutingError::InvalidConfig(format!("delta_d {} must be ≥ 0", self.delta_d)));
        }
        if !(0.0..=FRAC_PI_4).contains(&self.guard_angle) {
            return Err(RoutingError::InvalidConfig(format!(
                "guard angle {} not in [0, π/4]",
                self.guard_angle
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: NodeId,
    pub position: Point,
}

/// What a node learned about one neighbor from packets backtracked by it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedKnowledge {
    pub position: Point,
    pub exact: HashSet<PointKey>,
    pub sectors: Vec<Sector>,
}

impl BlockedKnowledge {
    pub fn new(position: Point) -> Self {
        Self { position, exact: HashSet::new(), sectors: Vec::new() }
    }

    /// Exact destination match, or (when `generalize`) containment in one of
    /// the advertised sectors with the neighbor as apex.
    pub fn is_blocked_for(&self, dest: Point, generalize: bool) -> bool {
        self.exact.contains(&dest.key())
            || (generalize && self.sectors.iter().any(|s| sector_contains(s, self.position, dest)))
    }
}

/// Content of a hello flooded by a node after it became blocked.
#[derive(Debug, Clone, PartialEq)]
pub struct HelloRecord {
    pub position: Point,
    pub neighbors: Vec<NodeId>,
    pub sectors: Vec<Sector>,
    /// Destinations the origin is blocked for.
    pub exact: Arc<HashSet<PointKey>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoutingDecision {
    Forward(NodeId),
    Backtrack { to: NodeId, advertised: Vec<Sector> },
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    id: NodeId,
    position: Point,
    blocked_exact: Vec<Point>,
    blocked_exact_keys: HashSet<PointKey>,
    blocked_sectors: Vec<Sector>,
    neighbor_blocked: HashMap<NodeId, BlockedKnowledge>,
    khood_blocked: BTreeMap<NodeId, HelloRecord>,
}

impl NodeState {
    pub fn new(id: NodeId, position: Point) -> Self {
        Self {
            id,
            position,
            blocked_exact: Vec::new(),
            blocked_exact_keys: HashSet::new(),
            blocked_sectors: Vec::new(),
            neighbor_blocked: HashMap::new(),
            khood_blocked: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn position(&self) -> Point {
        self.position
    }

    pub fn blocked_sectors(&self) -> &[Sector] {
        &self.blocked_sectors
    }

    pub fn blocked_exact(&self) -> &[Point] {
        &self.blocked_exact
    }

    pub fn is_blocked_exact(&self, dest: Point) -> bool {
        self.blocked_exact_keys.contains(&dest.key())
    }

    /// Exact blocked destinations as carried in a hello.
    pub fn exact_keys(&self) -> Arc<HashSet<PointKey>> {
        Arc::new(self.blocked_exact_keys.clone())
    }

    pub fn neighbor_knowledge(&self, id: NodeId) -> Option<&BlockedKnowledge> {
        self.neighbor_blocked.get(&id)
    }

    pub fn khood_blocked(&self) -> &BTreeMap<NodeId, HelloRecord> {
        &self.khood_blocked
    }

    /// Records a backtrack received from `from` for `dest`.
    pub fn learn_backtrack(&mut self, from: NodeId, from_position: Point, dest: Point, advertised: &[Sector]) {
        let entry = self.neighbor_blocked.entry(from).or_insert_with(|| BlockedKnowledge::new(from_position));
        entry.exact.insert(dest.key());
        entry.sectors = advertised.to_vec();
    }

    /// Replaces what is known about `origin` with the content of its hello.
    pub fn learn_hello(&mut self, origin: NodeId, hello: HelloRecord) {
        if origin != self.id {
            self.khood_blocked.insert(origin, hello);
        }
    }

    /// Drops everything learned so far.
    pub fn reset(&mut self) {
        *self = NodeState::new(self.id, self.position);
    }

    /// Sectors known for `node`, from backtracks and hellos.
    fn known_sectors(&self, node: NodeId) -> impl Iterator<Item = &Sector> {
        let direct = self.neighbor_blocked.get(&node).map(|k| k.sectors.as_slice()).unwrap_or(&[]);
        let hello = self.khood_blocked.get(&node).map(|h| h.sectors.as_slice()).unwrap_or(&[]);
        direct.iter().chain(hello)
    }

    /// `Blocked(node, dest)` as far as this node knows.
    pub fn knows_blocked(&self, node: NodeId, position: Point, dest: Point, generalize: bool) -> bool {
        if let Some(k) = self.neighbor_blocked.get(&node) {
            if k.is_blocked_for(dest, generalize) {
                return true;
            }
        }
        self.khood_blocked.get(&node).is_some_and(|h| {
            h.exact.contains(&dest.key()) || (generalize && h.sectors.iter().any(|s| sector_contains(s, position, dest)))
        })
    }

    /// Measure (radians) of the union of the arcs of the node's own sectors.
    pub fn covered_measure(&self) -> f64 {
        arc_union_measure(&self.blocked_sectors)
    }

    /// Checks the state invariants: exact destinations are covered by a
    /// sector and the sector list is merge-normalized.
    pub fn invariants_hold(&self, delta_d: f64) -> bool {
        let covered = self
            .blocked_exact
            .iter()
            .all(|&d| d == self.position || self.blocked_sectors.iter().any(|s| sector_contains(s, self.position, d)));
        let normalized = self.blocked_sectors.iter().enumerate().all(|(i, a)| {
            self.blocked_sectors[i + 1..].iter().all(|b| try_merge(a, b, delta_d).is_none())
        });
        covered && normalized
    }
}

fn arc_union_measure(sectors: &[Sector]) -> f64 {
    if sectors.iter().any(Sector::is_full) {
        return TAU;
    }
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for s in sectors {
        let a = s.angle_min().radians();
        let b = a + s.width();
        if b > TAU {
            spans.push((a, TAU));
            spans.push((0.0, b - TAU));
        } else {
            spans.push((a, b));
        }
    }
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in spans {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca;
    }
    total
}

/// Classical greedy: the neighbor closest to `dest` among those strictly
/// closer than the current node, or drop.
pub fn greedy_next_hop(state: &NodeState, neighbors: &[Neighbor], dest: Point) -> RoutingDecision {
    let here = euclid_dist(state.position, dest);
    neighbors
        .iter()
        .map(|n| (euclid_dist(n.position, dest), n.id))
        .filter(|(d, _)| *d < here)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(RoutingDecision::Drop, |(_, id)| RoutingDecision::Forward(id))
}

/// Whether a neighbor is blocked for `dest` according to the record kept about
/// it (exact destinations first, then its advertised sectors).
pub fn is_blocked_for(record: Option<&BlockedKnowledge>, dest: Point) -> bool {
    record.is_some_and(|k| k.is_blocked_for(dest, true))
}

/// Algorithm 1: forward to the closest unblocked neighbor that makes strict
/// progress; otherwise mark this node blocked for `dest` and send the packet
/// back to `previous_hop` with the node's sectors, or drop at the source.
pub fn reactive_deflection(
    state: &mut NodeState,
    neighbors: &[Neighbor],
    dest: Point,
    previous_hop: Option<NodeId>,
    cfg: &RoutingConfig,
) -> RoutingDecision {
    modified_reactive_deflection(state, neighbors, dest, previous_hop, None, cfg)
}

/// Algorithm 2: like [`reactive_deflection`], but among eligible neighbors
/// prefers those outside the forbidden sector, and when every eligible
/// neighbor lies inside it picks the one nearest the sector limits.
pub fn modified_reactive_deflection(
    state: &mut NodeState,
    neighbors: &[Neighbor],
    dest: Point,
    previous_hop: Option<NodeId>,
    forbidden: Option<&ForbiddenSector>,
    cfg: &RoutingConfig,
) -> RoutingDecision {
    let here = euclid_dist(state.position, dest);
    let eligible: Vec<(f64, &Neighbor)> = neighbors
        .iter()
        .map(|n| (euclid_dist(n.position, dest), n))
        .filter(|(d, n)| *d < here && !state.knows_blocked(n.id, n.position, dest, cfg.sector_generalization))
        .collect();

    let by_distance = |a: &&(f64, &Neighbor), b: &&(f64, &Neighbor)| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id));
    let choice = match forbidden {
        _ if eligible.is_empty() => None,
        None => eligible.iter().min_by(by_distance),
        Some(f) => {
            let apex = state.position;
            let outside = eligible.iter().filter(|(_, n)| !f.repels(apex, n.position)).min_by(by_distance);
            outside.or_else(|| {
                eligible.iter().min_by(|a, b| {
                    f.bound_distance(apex, a.1.position)
                        .total_cmp(&f.bound_distance(apex, b.1.position))
                        .then(a.1.id.cmp(&b.1.id))
                })
            })
        }
    };
    if let Some((_, n)) = choice {
        return RoutingDecision::Forward(n.id);
    }

    record_blocked(state, dest, neighbors, cfg);
    match previous_hop {
        Some(to) => RoutingDecision::Backtrack { to, advertised: state.blocked_sectors.clone() },
        None => RoutingDecision::Drop,
    }
}

/// Marks the node blocked for `dest`, derives a blocked sector for it, adds it
/// to the node's list and re-normalizes the list. Returns the new sector.
pub fn record_blocked(state: &mut NodeState, dest: Point, neighbors: &[Neighbor], cfg: &RoutingConfig) -> Sector {
    if state.blocked_exact_keys.insert(dest.key()) {
        state.blocked_exact.push(dest);
    }
    let sector = blocked_sector(state, neighbors, dest, cfg);
    state.blocked_sectors.push(sector);
    state.blocked_sectors = merge_all(&state.blocked_sectors, cfg.delta_d);
    sector
}

/// Blocked sector for a destination the node just failed to serve.
///
/// A neighbor `n` is usable for direction `θ` when it lies in the open
/// half-plane facing `θ` (so it is closer than this node to far enough points
/// in that direction), unless its known sectors already cover every point of
/// the ray in direction `θ` where it would be closer. The sector is the
/// maximal arc around the destination direction where no neighbor is usable,
/// with `d_min` the destination distance. When the destination direction
/// itself has a usable neighbor the result is the minimum-width arc centred
/// on it.
pub fn blocked_sector(state: &NodeState, neighbors: &[Neighbor], dest: Point, cfg: &RoutingConfig) -> Sector {
    let apex = state.position;
    let d_min = euclid_dist(apex, dest);
    let Ok(theta_d) = oriented_angle(apex, dest) else {
        return Sector::full(0.0);
    };
    let directions: Vec<(Angle, f64, &Neighbor)> = neighbors
        .iter()
        .filter_map(|n| oriented_angle(apex, n.position).ok().map(|a| (a, euclid_dist(apex, n.position), n)))
        .collect();

    let usable = |theta: Angle| {
        directions.iter().any(|&(phi, r, n)| {
            if !faces(phi, theta) {
                return false;
            }
            if !cfg.sector_generalization {
                return true;
            }
            // points along θ where n is closer than this node: t > r / (2 cos Δ)
            let cos = (phi.radians() - theta.radians()).cos();
            let tail = RayTail { origin: apex, dir: theta, t0: d_min.max(r / (2.0 * cos)) };
            !state.known_sectors(n.id).any(|s| tail.inside(s, n.position))
        })
    };
    let minimal = || {
        Sector::from_arc(theta_d.rotate(-MIN_SECTOR_HALF_WIDTH), 2.0 * MIN_SECTOR_HALF_WIDTH, d_min)
            .expect("positive width")
    };
    if usable(theta_d) {
        return minimal();
    }

    let mut breakpoints: Vec<Angle> = Vec::new();
    for &(phi, _, n) in &directions {
        breakpoints.push(phi.rotate(PI / 2.0));
        breakpoints.push(phi.rotate(-PI / 2.0));
        if cfg.sector_generalization {
            for s in state.known_sectors(n.id) {
                breakpoints.push(s.angle_min());
                breakpoints.push(s.angle_max());
            }
        }
    }
    let ccw = scan_boundary(theta_d, 1.0, &breakpoints, &usable);
    let Some(ccw) = ccw else {
        return Sector::full(d_min);
    };
    let cw = scan_boundary(theta_d, -1.0, &breakpoints, &usable).unwrap_or(0.0);
    let margin = 2.0 * ARC_EPSILON;
    let (cw, ccw) = ((cw - margin).max(0.0), (ccw - margin).max(0.0));
    let width = cw + ccw;
    if width < 2.0 * MIN_SECTOR_HALF_WIDTH {
        return minimal();
    }
    Sector::from_arc(theta_d.rotate(-cw), width, d_min).expect("positive width")
}

/// Walks away from `from` in direction `sign` (+1 ccw, −1 cw) and returns the
/// offset of the last blocked direction before the first usable one, or
/// `None` when every sampled direction is blocked.
fn scan_boundary(from: Angle, sign: f64, breakpoints: &[Angle], usable: &impl Fn(Angle) -> bool) -> Option<f64> {
    const NUDGE: f64 = 1e-7;
    let offset_of = |a: Angle| if sign > 0.0 { from.ccw_offset(a) } else { a.ccw_offset(from) };
    let mut offsets: Vec<f64> = (1..)
        .map(|i| i as f64 * SCAN_STEP)
        .take_while(|&o| o < TAU)
        .collect();
    for &b in breakpoints {
        let o = offset_of(b);
        offsets.extend([o - NUDGE, o, o + NUDGE].into_iter().filter(|&v| v > 0.0 && v < TAU));
    }
    offsets.sort_by(|a, b| a.total_cmp(b));
    offsets.dedup();

    let at = |o: f64| from.rotate(sign * o);
    let mut blocked = 0.0;
    for &o in &offsets {
        if usable(at(o)) {
            let (mut lo, mut hi) = (blocked, o);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if usable(at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            return Some(lo);
        }
        blocked = o;
    }
    None
}

/// Sector extrapolated from a connected set of blocked nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenSector {
    pub sector: Sector,
    pub source_set: BTreeSet<NodeId>,
}

impl ForbiddenSector {
    /// Whether a candidate next hop at `p` heads into the forbidden arc as
    /// seen from `apex`. Candidates are one hop away while the blocked set
    /// can be up to k hops away, so only the direction is tested.
    pub fn repels(&self, apex: Point, p: Point) -> bool {
        oriented_angle(apex, p).is_ok_and(|a| self.sector.arc_contains(a))
    }

    fn bound_distance(&self, apex: Point, p: Point) -> f64 {
        oriented_angle(apex, p).map_or(f64::INFINITY, |a| angular_distance_to_bounds(&self.sector, a))
    }
}

/// Builds the forbidden sector for `dest` from the node's k-hop knowledge:
/// picks the known blocked node best aligned with the destination, grows the
/// connected set of blocked nodes around it, and spans it with the smallest
/// arc (widened by the guard angle).
pub fn compute_forbidden_sector(state: &NodeState, dest: Point, cfg: &RoutingConfig) -> Option<ForbiddenSector> {
    let apex = state.position;
    let theta_d = oriented_angle(apex, dest).ok()?;

    let mut blocked: BTreeMap<NodeId, Point> = BTreeMap::new();
    for (&id, hello) in &state.khood_blocked {
        if state.knows_blocked(id, hello.position, dest, cfg.sector_generalization) {
            blocked.insert(id, hello.position);
        }
    }
    for (&id, k) in &state.neighbor_blocked {
        if k.is_blocked_for(dest, cfg.sector_generalization) {
            blocked.insert(id, k.position);
        }
    }
    blocked.retain(|&id, p| id != state.id && *p != apex);

    let (&seed, _) = blocked.iter().min_by(|a, b| {
        let da = theta_d.circular_distance(oriented_angle(apex, *a.1).expect("apex excluded"));
        let db = theta_d.circular_distance(oriented_angle(apex, *b.1).expect("apex excluded"));
        da.total_cmp(&db).then(a.0.cmp(b.0))
    })?;

    let adjacent = |a: NodeId, b: NodeId| {
        let lists = |x: NodeId, y: NodeId| state.khood_blocked.get(&x).is_some_and(|h| h.neighbors.contains(&y));
        lists(a, b) || lists(b, a)
    };
    let mut set = BTreeSet::from([seed]);
    let mut queue = VecDeque::from([seed]);
    while let Some(u) = queue.pop_front() {
        for &v in blocked.keys() {
            if !set.contains(&v) && adjacent(u, v) {
                set.insert(v);
                queue.push_back(v);
            }
        }
    }

    let angles: Vec<Angle> = set.iter().map(|id| oriented_angle(apex, blocked[id]).expect("apex excluded")).collect();
    let d_min = set.iter().map(|id| euclid_dist(apex, blocked[id])).fold(f64::INFINITY, f64::min);
    let (start, width) = minimal_covering_arc(&angles)?;
    let pad = cfg.guard_angle + if width < 2.0 * MIN_SECTOR_HALF_WIDTH { MIN_SECTOR_HALF_WIDTH } else { 0.0 };
    let sector = Sector::from_arc(start.rotate(-pad), (width + 2.0 * pad).min(TAU), d_min).ok()?;
    Some(ForbiddenSector { sector, source_set: set })
}

/// True iff `p` is strictly closer (angularly, from `apex`) than `q` to the
/// limits of the forbidden sector.
pub fn closer_to_sector_limits(f: &ForbiddenSector, apex: Point, p: Point, q: Point) -> Result<bool, GeometryError> {
    let ap = oriented_angle(apex, p)?;
    let aq = oriented_angle(apex, q)?;
    Ok(angular_distance_to_bounds(&f.sector, ap) < angular_distance_to_bounds(&f.sector, aq))
}

/// Merges sectors pairwise until no pair can be merged. Input order does not
/// matter: the list is sorted canonically before every pass.
pub fn merge_all(sectors: &[Sector], delta_d: f64) -> Vec<Sector> {
    let canonical = |a: &Sector, b: &Sector| {
        a.angle_min()
            .radians()
            .total_cmp(&b.angle_min().radians())
            .then(a.width().total_cmp(&b.width()))
            .then(a.d_min().total_cmp(&b.d_min()))
    };
    let mut out = sectors.to_vec();
    out.sort_by(canonical);
    out.dedup();
    'pass: loop {
        for i in 0..out.len() {
            for j in (i + 1)..out.len() {
                if let Some(m) = try_merge(&out[i], &out[j], delta_d) {
                    out.swap_remove(j);
                    out[i] = m;
                    out.sort_by(canonical);
                    out.dedup();
                    continue 'pass;
                }
            }
        }
        return out;
    }
}
