//! Helpers shared by the integration tests: brute-force oracles and random
//! instance builders that do not go through the code under test.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::f64::consts::TAU;

use geodeflect::geometry::{Angle, Point, Sector};
use geodeflect::topology::{ModelTag, NodeId, Topology};
use rand::Rng;

/// Whether a path from `src` to `dst` exists on which every hop strictly
/// decreases the Euclidean distance to `dst`.
pub fn monotone_reachable(t: &Topology, src: NodeId, dst: NodeId) -> bool {
    let target = t.position(dst);
    let d = |u: NodeId| {
        let p = t.position(u);
        ((p.x - target.x).powi(2) + (p.y - target.y).powi(2)).sqrt()
    };
    let mut seen = vec![false; t.len()];
    let mut queue = VecDeque::from([src]);
    seen[src.index()] = true;
    while let Some(u) = queue.pop_front() {
        if u == dst {
            return true;
        }
        for &v in t.neighbors(u) {
            if !seen[v.index()] && d(v) < d(u) {
                seen[v.index()] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Hop distances from `src` by a plain queue traversal over the edge list.
pub fn hop_distances(t: &Topology, src: NodeId) -> Vec<Option<u32>> {
    let mut adj = vec![Vec::new(); t.len()];
    for (u, v) in t.edges() {
        adj[u.index()].push(v.index());
        adj[v.index()].push(u.index());
    }
    let mut dist = vec![None; t.len()];
    dist[src.index()] = Some(0);
    let mut queue = VecDeque::from([src.index()]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Unit disk graph over explicit positions, built pairwise.
pub fn udg_from_points(points: Vec<Point>, radius: f64) -> Topology {
    let mut edges = Vec::new();
    for u in 0..points.len() {
        for v in (u + 1)..points.len() {
            let (a, b) = (points[u], points[v]);
            if ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt() <= radius {
                edges.push((NodeId(u as u32), NodeId(v as u32)));
            }
        }
    }
    Topology::from_edges(points, edges, 1.0, ModelTag::Udg).unwrap()
}

/// Counterclockwise offset from `from` to `to` in `[0, 2π)`, from raw radians.
pub fn ccw(from: f64, to: f64) -> f64 {
    (to - from).rem_euclid(TAU)
}

/// Membership of direction `a` in the arc of `s`, with slack `tol`.
pub fn in_arc(s: &Sector, a: f64, tol: f64) -> bool {
    s.is_full() || {
        let off = ccw(s.angle_min().radians(), a);
        off <= s.width() + tol || off >= TAU - tol
    }
}

pub fn random_sector<R: Rng>(rng: &mut R, d_min: f64) -> Sector {
    let start = rng.random_range(0.0..TAU);
    let width = rng.random_range(0.01..TAU - 0.01);
    Sector::from_arc(Angle::new(start), width, d_min).unwrap()
}
