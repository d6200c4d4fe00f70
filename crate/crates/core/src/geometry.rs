//! Planar primitives: points, normalized angles and the angular sectors used
//! to describe blocked and forbidden regions around a node.
//!
//! Sector encoding: a sector is stored as a counterclockwise arc `start`
//! plus a `width` in `(0, 2π]`, together with a minimum distance. A width of
//! exactly `2π` is the full circle ("blocked in all directions"); in that case
//! `angle_min() == angle_max() == start`. Zero-width sectors cannot be built.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Tolerance (radians) applied to every arc-membership comparison.
pub const ARC_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("invalid sector: {0}")]
    InvalidSector(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeometryError::NonFinite { x, y })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        euclid_dist(*self, *other)
    }

    /// Bit-level identity of the point, usable as a hash key.
    pub fn key(&self) -> PointKey {
        // -0.0 and 0.0 are the same location
        PointKey((self.x + 0.0).to_bits(), (self.y + 0.0).to_bits())
    }

    fn offset(&self, dir: Angle, t: f64) -> Point {
        let (s, c) = dir.radians().sin_cos();
        Point::new(self.x + t * c, self.y + t * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointKey(u64, u64);

pub fn euclid_dist(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// An angle in radians, always normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Self {
        let v = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if v >= TAU {
            Angle(0.0)
        } else {
            Angle(v)
        }
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn rotate(self, delta: f64) -> Angle {
        Angle::new(self.0 + delta)
    }

    /// Counterclockwise sweep from `self` to `to`, in `[0, 2π)`.
    pub fn ccw_offset(self, to: Angle) -> f64 {
        let d = to.0 - self.0;
        if d >= 0.0 {
            d
        } else {
            let v = d + TAU;
            if v >= TAU {
                0.0
            } else {
                v
            }
        }
    }

    /// Shortest circular distance, in `[0, π]`.
    pub fn circular_distance(self, other: Angle) -> f64 {
        let d = self.ccw_offset(other);
        d.min(TAU - d)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Angle of the vector `origin → target`, counterclockwise from the +x axis.
pub fn oriented_angle(origin: Point, target: Point) -> Result<Angle, GeometryError> {
    let dx = target.x - origin.x;
    let dy = target.y - origin.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::Degenerate("oriented angle of coincident points"));
    }
    Ok(Angle::new(dy.atan2(dx)))
}

/// Angular wedge with a minimum distance, relative to an apex supplied at
/// query time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    start: Angle,
    width: f64,
    d_min: f64,
}

impl Sector {
    /// Sector spanning the counterclockwise arc from `angle_min` to
    /// `angle_max`. Equal bounds are rejected; use [`Sector::full`].
    pub fn new(angle_min: Angle, angle_max: Angle, d_min: f64) -> Result<Self, GeometryError> {
        let width = angle_min.ccw_offset(angle_max);
        if width == 0.0 {
            return Err(GeometryError::InvalidSector(
                "zero-width arc; use Sector::full for the whole circle".into(),
            ));
        }
        Self::from_arc(angle_min, width, d_min)
    }

    pub fn from_arc(start: Angle, width: f64, d_min: f64) -> Result<Self, GeometryError> {
        if !width.is_finite() || width <= 0.0 {
            return Err(GeometryError::InvalidSector(format!("arc width {width} not in (0, 2π]")));
        }
        if !d_min.is_finite() || d_min < 0.0 {
            return Err(GeometryError::InvalidSector(format!("d_min {d_min} must be finite and ≥ 0")));
        }
        let width = if width >= TAU - ARC_EPSILON { TAU } else { width };
        Ok(Self { start, width, d_min })
    }

    pub fn full(d_min: f64) -> Self {
        Self { start: Angle::ZERO, width: TAU, d_min: d_min.max(0.0) }
    }

    pub fn angle_min(&self) -> Angle {
        self.start
    }

    pub fn angle_max(&self) -> Angle {
        self.start.rotate(self.width)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn is_full(&self) -> bool {
        self.width >= TAU
    }

    /// Wrap-aware membership of a direction in the closed arc.
    pub fn arc_contains(&self, a: Angle) -> bool {
        if self.is_full() {
            return true;
        }
        let off = self.start.ccw_offset(a);
        off <= self.width + ARC_EPSILON || off >= TAU - ARC_EPSILON
    }

    pub fn contains(&self, apex: Point, p: Point) -> bool {
        sector_contains(self, apex, p)
    }

    /// Same arc widened by `guard` radians on both sides.
    pub fn widened(&self, guard: f64) -> Sector {
        if guard <= 0.0 || self.is_full() {
            return *self;
        }
        let width = self.width + 2.0 * guard;
        if width >= TAU {
            Sector { start: Angle::ZERO, width: TAU, d_min: self.d_min }
        } else {
            Sector { start: self.start.rotate(-guard), width, d_min: self.d_min }
        }
    }

    pub fn with_d_min(&self, d_min: f64) -> Sector {
        Sector { d_min, ..*self }
    }
}

impl fmt::Display for Sector {
    /// Canonical form `S(start,width,d_min)` with round-trippable floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S({:?},{:?},{:?})", self.start.0, self.width, self.d_min)
    }
}

impl FromStr for Sector {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeometryError::InvalidSector(format!("cannot parse sector `{s}`"));
        let inner = s.trim().strip_prefix("S(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let parts: Vec<f64> = inner
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match parts[..] {
            [start, width, d_min] => Sector::from_arc(Angle::new(start), width, d_min),
            _ => Err(bad()),
        }
    }
}

/// True iff `p` lies in the sector's arc as seen from `apex` and at distance at
/// least `d_min`. The apex itself is never contained.
pub fn sector_contains(s: &Sector, apex: Point, p: Point) -> bool {
    let d = euclid_dist(apex, p);
    if d == 0.0 {
        log::debug!("sector containment queried at the apex {apex}; treated as outside");
        return false;
    }
    if d < s.d_min {
        return false;
    }
    match oriented_angle(apex, p) {
        Ok(a) => s.arc_contains(a),
        Err(_) => false,
    }
}

/// Smaller of the circular distances from `a` to the two arc bounds.
pub fn angular_distance_to_bounds(s: &Sector, a: Angle) -> f64 {
    a.circular_distance(s.angle_min()).min(a.circular_distance(s.angle_max()))
}

/// Merges two sectors whose arcs overlap or touch and whose minimum distances
/// agree within `delta_d`. The result keeps the smaller `d_min`.
pub fn try_merge(s1: &Sector, s2: &Sector, delta_d: f64) -> Option<Sector> {
    if (s1.d_min - s2.d_min).abs() > delta_d {
        return None;
    }
    let d_min = s1.d_min.min(s2.d_min);
    if s1.is_full() || s2.is_full() {
        return Some(Sector::full(d_min));
    }
    // Extending `a` counterclockwise so it also covers `b` is possible when
    // `b` starts inside (or on the end of) `a`.
    let cover = |a: &Sector, b: &Sector| -> Option<f64> {
        let off = a.start.ccw_offset(b.start);
        let off = if off >= TAU - ARC_EPSILON { 0.0 } else { off };
        (off <= a.width + ARC_EPSILON).then(|| a.width.max(off + b.width))
    };
    let best = match (cover(s1, s2), cover(s2, s1)) {
        (Some(w1), Some(w2)) if w2 < w1 => Some((s2.start, w2)),
        (Some(w1), _) => Some((s1.start, w1)),
        (None, Some(w2)) => Some((s2.start, w2)),
        (None, None) => None,
    }?;
    let (start, width) = best;
    if width >= TAU - ARC_EPSILON {
        Some(Sector::full(d_min))
    } else {
        Some(Sector { start, width, d_min })
    }
}

/// Smallest counterclockwise arc `(start, width)` containing every angle.
/// Returns `None` for an empty slice; a single angle yields width 0.
pub fn minimal_covering_arc(angles: &[Angle]) -> Option<(Angle, f64)> {
    let mut sorted: Vec<f64> = angles.iter().map(|a| a.radians()).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    // The covering arc is the complement of the largest gap between
    // consecutive directions.
    let mut best_gap = sorted[0] + TAU - sorted[n - 1];
    let mut best_start = sorted[0];
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            best_start = w[1];
        }
    }
    Some((Angle::new(best_start), (TAU - best_gap).max(0.0)))
}

/// Unit-speed ray `origin + t·u(dir)`, `t ≥ t0`, used by the blocked-sector
/// construction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RayTail {
    pub origin: Point,
    pub dir: Angle,
    pub t0: f64,
}

impl RayTail {
    /// True iff every point of the tail lies inside `s` as seen from `apex`.
    /// Conservative: borderline configurations report `false`.
    pub fn inside(&self, s: &Sector, apex: Point) -> bool {
        let (uy, ux) = self.dir.radians().sin_cos();
        let wx = apex.x - self.origin.x;
        let wy = apex.y - self.origin.y;
        let along = wx * ux + wy * uy;
        let across = (ux * wy - uy * wx).abs();
        let start = self.origin.offset(self.dir, self.t0);
        let closest = if along > self.t0 { across } else { euclid_dist(start, apex) };
        if closest < s.d_min || closest <= 1e-12 {
            return false;
        }
        if s.is_full() {
            return true;
        }
        let Ok(first) = oriented_angle(apex, start) else {
            return false;
        };
        let o0 = s.start.ccw_offset(first);
        let o1 = s.start.ccw_offset(self.dir);
        // the direction from the apex sweeps monotonically (less than π) from
        // `first` towards the ray direction
        o0 <= s.width && o1 <= s.width && (o1 - o0).abs() <= PI
    }
}

/// Whether direction `theta` is inside the open half-plane facing `phi`.
pub(crate) fn faces(phi: Angle, theta: Angle) -> bool {
    phi.circular_distance(theta) < FRAC_PI_2 - 1e-12
}
