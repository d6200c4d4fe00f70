//! Random geometric topologies (unit disk graphs and proxi-graphs inside a
//! simulation disk, optionally with a carved rectangular void) and the graph
//! queries the routing layer needs.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{euclid_dist, Point};

/// Resample budget before generation gives up.
pub const MAX_GENERATION_ATTEMPTS: u32 = 100;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected {model} topology with n={n}, range={range} after {attempts} attempts")]
    GenerationFailed { model: ModelTag, n: usize, range: f64, attempts: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = TopologyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Udg,
    Proxigraph,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Udg => "udg",
            ModelTag::Proxigraph => "proxigraph",
        })
    }
}

impl FromStr for ModelTag {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "udg" => Ok(ModelTag::Udg),
            "proxigraph" => Ok(ModelTag::Proxigraph),
            other => Err(TopologyError::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

/// Axis-aligned rectangle kept free of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoidRegion {
    pub center: Point,
    pub half_width: f64,
    pub half_height: f64,
}

impl VoidRegion {
    pub fn new(center: Point, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) || !center.is_finite() {
            return Err(TopologyError::InvalidParameter(format!(
                "void extents must be positive, got {half_width} x {half_height}"
            )));
        }
        Ok(Self { center, half_width, half_height })
    }

    /// Square of side `0.4 · disk_radius` at the disk centre.
    pub fn central_square(disk_radius: f64) -> Self {
        let h = 0.2 * disk_radius;
        Self { center: Point::new(0.0, 0.0), half_width: h, half_height: h }
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.center.x).abs() <= self.half_width && (p.y - self.center.y).abs() <= self.half_height
    }

    fn fits_in_disk(&self, disk_radius: f64) -> bool {
        let cx = self.center.x.abs() + self.half_width;
        let cy = self.center.y.abs() + self.half_height;
        cx.hypot(cy) < disk_radius
    }
}

/// Immutable geometric graph. Node ids are dense indices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Point>,
    adjacency: Vec<Vec<NodeId>>,
    disk_radius: f64,
    model: ModelTag,
}

impl Topology {
    /// Builds a topology from node positions and an undirected edge list.
    pub fn from_edges(
        positions: Vec<Point>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        disk_radius: f64,
        model: ModelTag,
    ) -> Result<Self> {
        let n = positions.len();
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!("non-finite position {p}")));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u.index() >= n {
                return Err(TopologyError::UnknownNode(u));
            }
            if v.index() >= n {
                return Err(TopologyError::UnknownNode(v));
            }
            if u == v {
                return Err(TopologyError::InvalidParameter(format!("self loop on {u}")));
            }
            adjacency[u.index()].push(v);
            adjacency[v.index()].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { positions, adjacency, disk_radius, model })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.positions.len() as u32).map(NodeId)
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.positions[id.index()]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.index()].binary_search(&v).is_ok()
    }

    pub fn disk_radius(&self) -> f64 {
        self.disk_radius
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.len() as f64
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.index() < self.len() {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(id))
        }
    }

    /// Hop distances from `src`, `None` for unreachable nodes. BFS stops once
    /// `max_hops` is reached.
    pub fn bfs_layers(&self, src: NodeId, max_hops: Option<u32>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[src.index()] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            if max_hops.is_some_and(|m| du >= m) {
                continue;
            }
            for &v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes at 1..=k hops from `node`.
    pub fn k_neighborhood(&self, node: NodeId, k: u32) -> Result<BTreeSet<NodeId>> {
        self.check(node)?;
        if k == 0 {
            return Err(TopologyError::InvalidParameter("k must be at least 1".into()));
        }
        Ok(self
            .bfs_layers(node, Some(k))
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(h) if *h >= 1))
            .map(|(i, _)| NodeId(i as u32))
            .collect())
    }

    pub fn bfs_hops(&self, src: NodeId, dst: NodeId) -> Option<u32> {
        if src.index() >= self.len() || dst.index() >= self.len() {
            return None;
        }
        if src == dst {
            return Some(0);
        }
        let mut dist = vec![u32::MAX; self.len()];
        dist[src.index()] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v.index()] == u32::MAX {
                    dist[v.index()] = dist[u.index()] + 1;
                    if v == dst {
                        return Some(dist[v.index()]);
                    }
                    queue.push_back(v);
                }
            }
        }
        None
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.bfs_layers(NodeId(0), None).iter().all(Option::is_some)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in self.nodes() {
            if seen[start.index()] {
                continue;
            }
            seen[start.index()] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if !seen[v.index()] {
                        seen[v.index()] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on the largest connected component (ties: the one with
    /// the smallest member), relabelled densely in original id order.
    pub fn largest_component(&self) -> Topology {
        self.largest_component_with_ids().0
    }

    /// As [`Topology::largest_component`], also returning the original id of
    /// every kept node.
    pub fn largest_component_with_ids(&self) -> (Topology, Vec<NodeId>) {
        let comps = self.components();
        let Some(best) = comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))) else {
            return (self.clone(), Vec::new());
        };
        let mut remap = vec![None; self.len()];
        for (new, old) in best.iter().enumerate() {
            remap[old.index()] = Some(NodeId(new as u32));
        }
        let positions = best.iter().map(|&id| self.position(id)).collect();
        let adjacency = best
            .iter()
            .map(|&id| self.neighbors(id).iter().filter_map(|v| remap[v.index()]).collect())
            .collect();
        (Topology { positions, adjacency, disk_radius: self.disk_radius, model: self.model }, best.clone())
    }

    /// Line-oriented text form: header, one `id x y` line per node, one `u v`
    /// line per edge with `u < v`.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "nodes={} model={} disk_radius={:?}", self.len(), self.model, self.disk_radius)?;
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(w, "{i} {:?} {:?}", p.x, p.y)?;
        }
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("topology text is ASCII")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Topology> {
        let mut lines = r.lines().enumerate();
        let perr = |line: usize, msg: String| TopologyError::Parse { line: line + 1, msg };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty input".into()))?;
        let header = header?;
        let mut n = None;
        let mut model = None;
        let mut disk_radius = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| perr(hl, format!("bad header field `{field}`")))?;
            match key {
                "nodes" => n = Some(value.parse::<usize>().map_err(|e| perr(hl, e.to_string()))?),
                "model" => model = Some(value.parse::<ModelTag>().map_err(|e| perr(hl, e.to_string()))?),
                "disk_radius" => disk_radius = Some(value.parse::<f64>().map_err(|e| perr(hl, e.to_string()))?),
                _ => return Err(perr(hl, format!("unknown header key `{key}`"))),
            }
        }
        let (Some(n), Some(model), Some(disk_radius)) = (n, model, disk_radius) else {
            return Err(perr(hl, "header needs nodes, model and disk_radius".into()));
        };
        let mut positions = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if positions.len() < n {
                let [id, x, y] = fields[..] else {
                    return Err(perr(ln, format!("expected `id x y`, got `{line}`")));
                };
                let id: usize = id.parse().map_err(|_| perr(ln, format!("bad id `{id}`")))?;
                if id != positions.len() {
                    return Err(perr(ln, format!("node ids must be dense and ordered, got {id}")));
                }
                let x: f64 = x.parse().map_err(|_| perr(ln, format!("bad x `{x}`")))?;
                let y: f64 = y.parse().map_err(|_| perr(ln, format!("bad y `{y}`")))?;
                positions.push(Point::try_new(x, y).map_err(|e| perr(ln, e.to_string()))?);
            } else {
                let [u, v] = fields[..] else {
                    return Err(perr(ln, format!("expected `u v`, got `{line}`")));
                };
                let u: u32 = u.parse().map_err(|_| perr(ln, format!("bad node `{u}`")))?;
                let v: u32 = v.parse().map_err(|_| perr(ln, format!("bad node `{v}`")))?;
                if u >= v {
                    return Err(perr(ln, format!("edge `{u} {v}` must satisfy u < v")));
                }
                edges.push((NodeId(u), NodeId(v)));
            }
        }
        if positions.len() != n {
            return Err(perr(0, format!("header announces {n} nodes, found {}", positions.len())));
        }
        Topology::from_edges(positions, edges, disk_radius, model)
    }
}

impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self> {
        Topology::read_text(s.as_bytes())
    }
}

/// What to do when a sampled graph is disconnected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Resample with derived sub-seeds, failing after the attempt budget.
    #[default]
    Resample,
    /// Keep the largest connected component of the first sample.
    LargestComponent,
    /// Resample; once the budget is spent fall back to the largest component
    /// of the first sample.
    ResampleThenLargest,
}

/// Topology generator over a disk of radius `disk_radius` centred on the origin.
#[derive(Debug, Clone)]
pub struct Generator {
    pub n: usize,
    pub disk_radius: f64,
    pub void: Option<VoidRegion>,
    pub connectivity: Connectivity,
    pub max_attempts: u32,
}

/// A generated proxi-graph with the per-node radio ranges that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxiGraph {
    pub topology: Topology,
    pub ranges: Vec<f64>,
}

impl Generator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            disk_radius: 1.0,
            void: None,
            connectivity: Connectivity::Resample,
            max_attempts: MAX_GENERATION_ATTEMPTS,
        }
    }

    pub fn with_void(mut self, void: Option<VoidRegion>) -> Self {
        self.void = void;
        self
    }

    pub fn with_disk_radius(mut self, r: f64) -> Self {
        self.disk_radius = r;
        self
    }

    pub fn with_connectivity(mut self, c: Connectivity) -> Self {
        self.connectivity = c;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(TopologyError::InvalidParameter(format!("need at least 2 nodes, got {}", self.n)));
        }
        if !(self.disk_radius > 0.0 && self.disk_radius.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!("bad disk radius {}", self.disk_radius)));
        }
        if let Some(v) = &self.void {
            if !v.fits_in_disk(self.disk_radius) {
                return Err(TopologyError::InvalidParameter("void must lie inside the simulation disk".into()));
            }
        }
        Ok(())
    }

    fn rng(seed: RngSeed, attempt: u32, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        rng.set_stream(2 * u64::from(attempt) + stream);
        rng
    }

    /// Uniform positions over the disk minus the void, by rejection.
    pub fn sample_positions<R: Rng>(&self, rng: &mut R) -> Vec<Point> {
        let r = self.disk_radius;
        let mut out = Vec::with_capacity(self.n);
        while out.len() < self.n {
            let p = Point::new(rng.random_range(-r..r), rng.random_range(-r..r));
            if p.x * p.x + p.y * p.y > r * r {
                continue;
            }
            if self.void.is_some_and(|v| v.contains(p)) {
                continue;
            }
            out.push(p);
        }
        out
    }

    /// Runs the connectivity policy. Returns the accepted graph, the attempt
    /// it came from, and the original ids kept when a component was extracted.
    fn build(
        &self,
        seed: RngSeed,
        model: ModelTag,
        range: f64,
        mut sample: impl FnMut(u32) -> Topology,
    ) -> Result<(Topology, u32, Option<Vec<NodeId>>)> {
        self.validate()?;
        let largest = |t: Topology| {
            let (t, kept) = t.largest_component_with_ids();
            if t.len() < 2 {
                Err(TopologyError::GenerationFailed { model, n: self.n, range, attempts: 1 })
            } else {
                Ok((t, 0, Some(kept)))
            }
        };
        if self.connectivity == Connectivity::LargestComponent {
            return largest(sample(0));
        }
        for attempt in 0..self.max_attempts {
            let t = sample(attempt);
            if t.is_connected() {
                if attempt > 0 {
                    log::debug!("{model} n={} seed={} connected after {} resamples", self.n, seed.0, attempt);
                }
                return Ok((t, attempt, None));
            }
        }
        match self.connectivity {
            Connectivity::ResampleThenLargest => {
                log::debug!("{model} n={} range={range}: falling back to the largest component", self.n);
                largest(sample(0))
            }
            _ => Err(TopologyError::GenerationFailed { model, n: self.n, range, attempts: self.max_attempts }),
        }
    }

    pub fn udg(&self, radius: f64, seed: RngSeed) -> Result<Topology> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!("bad radio range {radius}")));
        }
        let (t, _, _) = self.build(seed, ModelTag::Udg, radius, |attempt| {
            let positions = self.sample_positions(&mut Self::rng(seed, attempt, 0));
            geometric_graph(positions, self.disk_radius, ModelTag::Udg, |_, _| radius)
        })?;
        Ok(t)
    }

    /// Per-node ranges `max(0, N(mean, std_fraction·mean))`; an undirected
    /// edge needs the distance to be within both endpoint ranges.
    pub fn proxigraph(&self, mean_range: f64, std_fraction: f64, seed: RngSeed) -> Result<ProxiGraph> {
        if !(mean_range > 0.0 && mean_range.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!("bad mean range {mean_range}")));
        }
        if !(0.0..1.0).contains(&std_fraction) {
            return Err(TopologyError::InvalidParameter(format!("std fraction {std_fraction} not in [0, 1)")));
        }
        let normal = Normal::new(mean_range, std_fraction * mean_range)
            .map_err(|e| TopologyError::InvalidParameter(e.to_string()))?;
        let draw_ranges = |attempt: u32| -> Vec<f64> {
            let mut rng = Self::rng(seed, attempt, 1);
            (0..self.n).map(|_| normal.sample(&mut rng).max(0.0)).collect()
        };
        let (topology, attempt, kept) = self.build(seed, ModelTag::Proxigraph, mean_range, |attempt| {
            let positions = self.sample_positions(&mut Self::rng(seed, attempt, 0));
            let ranges = draw_ranges(attempt);
            geometric_graph(positions, self.disk_radius, ModelTag::Proxigraph, |u, v| ranges[u].min(ranges[v]))
        })?;
        let all = draw_ranges(attempt);
        let ranges = match kept {
            Some(ids) => ids.iter().map(|id| all[id.index()]).collect(),
            None => all,
        };
        Ok(ProxiGraph { topology, ranges })
    }
}

/// Geometric graph with an edge iff the distance is within `reach(u, v)`.
fn geometric_graph(positions: Vec<Point>, disk_radius: f64, model: ModelTag, reach: impl Fn(usize, usize) -> f64) -> Topology {
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if euclid_dist(positions[u], positions[v]) <= reach(u, v) {
                adjacency[u].push(NodeId(v as u32));
                adjacency[v].push(NodeId(u as u32));
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Topology { positions, adjacency, disk_radius, model }
}

pub fn generate_udg(n: usize, radius: f64, void: Option<VoidRegion>, seed: RngSeed) -> Result<Topology> {
    Generator::new(n).with_void(void).udg(radius, seed)
}

pub fn generate_proxigraph(
    n: usize,
    mean_range: f64,
    std_fraction: f64,
    void: Option<VoidRegion>,
    seed: RngSeed,
) -> Result<Topology> {
    Ok(Generator::new(n).with_void(void).proxigraph(mean_range, std_fraction, seed)?.topology)
}

/// Radio range giving mean degree `density` for uniform nodes, ignoring the
/// disk border: `R·√(density/(n−1))`.
pub fn analytic_radius(n: usize, density: f64, disk_radius: f64) -> f64 {
    disk_radius * (density / (n as f64 - 1.0)).sqrt()
}

const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
const CALIBRATION_SAMPLES: u32 = 6;

/// Mean degree of unconditioned samples of the generator's point process.
fn sampled_mean_degree(generator: &Generator, samples: u32, mut graph: impl FnMut(&Generator, RngSeed) -> Topology) -> f64 {
    let total: f64 = (0..samples)
        .map(|i| graph(generator, RngSeed(CALIBRATION_SEED.wrapping_add(u64::from(i)))).mean_degree())
        .sum();
    total / f64::from(samples)
}

fn refine(target: f64, initial: f64, cap: f64, mut measure: impl FnMut(f64) -> f64) -> f64 {
    let mut r = initial;
    for _ in 0..8 {
        let got = measure(r);
        if got <= 0.0 {
            break;
        }
        if ((got - target) / target).abs() <= 0.01 {
            break;
        }
        r = (r * (target / got).sqrt()).min(cap);
        if r >= cap {
            break;
        }
    }
    r
}

fn check_density(n: usize, density: f64, disk_radius: f64) -> Result<f64> {
    if n < 2 || !density.is_finite() || density <= 0.0 {
        return Err(TopologyError::InvalidParameter(format!("need n ≥ 2 and density > 0, got n={n}, density={density}")));
    }
    let r0 = analytic_radius(n, density, disk_radius);
    if r0 > disk_radius {
        return Err(TopologyError::InvalidParameter(format!(
            "density {density} infeasible for {n} nodes: range {r0} exceeds the disk radius"
        )));
    }
    Ok(r0)
}

/// UDG radio range whose measured mean degree is within 1% of `density`
/// (border effects corrected by Monte Carlo), clamped to the disk radius.
pub fn radius_for_density(n: usize, density: f64, disk_radius: f64) -> Result<f64> {
    udg_radius_for_density(n, density, disk_radius, None)
}

pub fn udg_radius_for_density(n: usize, density: f64, disk_radius: f64, void: Option<VoidRegion>) -> Result<f64> {
    let r0 = check_density(n, density, disk_radius)?;
    let generator = Generator::new(n).with_disk_radius(disk_radius).with_void(void);
    generator.validate()?;
    let samples = calibration_samples(n);
    Ok(refine(density, r0, disk_radius, |r| {
        sampled_mean_degree(&generator, samples, |g, seed| {
            let positions = g.sample_positions(&mut Generator::rng(seed, 0, 0));
            geometric_graph(positions, disk_radius, ModelTag::Udg, |_, _| r)
        })
    }))
}

/// Mean range for the proxi-graph model whose measured mean degree matches
/// `density` under min-range symmetrization.
pub fn proxigraph_range_for_density(
    n: usize,
    density: f64,
    std_fraction: f64,
    disk_radius: f64,
    void: Option<VoidRegion>,
) -> Result<f64> {
    let r0 = check_density(n, density, disk_radius)?;
    let generator = Generator::new(n).with_disk_radius(disk_radius).with_void(void);
    generator.validate()?;
    let samples = calibration_samples(n);
    Ok(refine(density, r0, disk_radius, |m| {
        let normal = Normal::new(m, std_fraction * m).expect("validated std");
        sampled_mean_degree(&generator, samples, |g, seed| {
            let positions = g.sample_positions(&mut Generator::rng(seed, 0, 0));
            let mut rng = Generator::rng(seed, 0, 1);
            let ranges: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng).max(0.0)).collect();
            geometric_graph(positions, disk_radius, ModelTag::Proxigraph, |u, v| ranges[u].min(ranges[v]))
        })
    }))
}

fn calibration_samples(n: usize) -> u32 {
    // keep roughly 6000 sampled nodes per measurement
    (6000 / n.max(1)).clamp(CALIBRATION_SAMPLES as usize, 2000) as u32
}
