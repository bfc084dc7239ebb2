//! Course geometry: lines, arcs and sampled lateral blends, addressed by
//! arc length.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Point2};

/// Endpoint mismatch allowed between consecutive segments, m.
pub const JOINT_TOLERANCE: f64 = 1e-9;
const DEFAULT_BLEND_SAMPLES: usize = 256;

fn default_blend_samples() -> usize {
    DEFAULT_BLEND_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Line {
        from: Point2,
        to: Point2,
    },
    /// Positive sweep turns left.
    Arc {
        center: Point2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
    /// Travels `length` along `heading` while the lateral offset moves from
    /// 0 to `offset` on a cubic smoothstep; sampled into a polyline.
    LateralBlend {
        from: Point2,
        heading: f64,
        length: f64,
        offset: f64,
        #[serde(default = "default_blend_samples")]
        samples: usize,
    },
}

impl Segment {
    pub fn start(&self) -> Point2 {
        match *self {
            Segment::Line { from, .. } | Segment::LateralBlend { from, .. } => from,
            Segment::Arc {
                center,
                radius,
                start_angle,
                ..
            } => arc_point(center, radius, start_angle),
        }
    }

    pub fn end(&self) -> Point2 {
        match *self {
            Segment::Line { to, .. } => to,
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => arc_point(center, radius, start_angle + sweep),
            Segment::LateralBlend {
                from,
                heading,
                length,
                offset,
                ..
            } => blend_point(from, heading, length, offset, 1.0),
        }
    }
}

fn arc_point(center: Point2, radius: f64, angle: f64) -> Point2 {
    Point2::new(
        center.x + radius * angle.cos(),
        center.y + radius * angle.sin(),
    )
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn blend_point(from: Point2, heading: f64, length: f64, offset: f64, u: f64) -> Point2 {
    let (s, c) = heading.sin_cos();
    let along = length * u;
    let lat = offset * smoothstep(u);
    Point2::new(from.x + along * c - lat * s, from.y + along * s + lat * c)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("path has no segments")]
    Empty,
    #[error("segment {index} starts {gap} m away from the previous end")]
    Discontinuous { index: usize, gap: f64 },
    #[error("segment {index} is degenerate")]
    Degenerate { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Line {
        a: Point2,
        b: Point2,
        len: f64,
    },
    Arc {
        center: Point2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line { len, .. } => len,
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point and tangent heading at local arc length `u`.
    fn at(&self, u: f64) -> (Point2, f64) {
        match *self {
            Piece::Line { a, b, len } => {
                let t = if len > 0.0 { u / len } else { 0.0 };
                let p = Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
                (p, (b.y - a.y).atan2(b.x - a.x))
            }
            Piece::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let dir = sweep.signum();
                let angle = start_angle + dir * u / radius;
                (
                    arc_point(center, radius, angle),
                    normalize_angle(angle + dir * PI / 2.0),
                )
            }
        }
    }

    /// Local arc length of the closest point within `[lo, hi]`.
    fn closest(&self, p: Point2, lo: f64, hi: f64) -> f64 {
        match *self {
            Piece::Line { a, b, len } => {
                if len == 0.0 {
                    return lo;
                }
                let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len;
                t.clamp(lo, hi)
            }
            Piece::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let dir = sweep.signum();
                let angle = (p.y - center.y).atan2(p.x - center.x);
                let phase = (dir * (angle - start_angle)).rem_euclid(TAU) * radius;
                let lap = TAU * radius;
                let mut best = lo;
                let mut best_d = self.at(lo).0.distance(&p);
                let consider = |u: f64, best: &mut f64, best_d: &mut f64| {
                    let d = self.at(u).0.distance(&p);
                    if d < *best_d {
                        *best = u;
                        *best_d = d;
                    }
                };
                consider(hi, &mut best, &mut best_d);
                let k0 = ((lo - phase) / lap).ceil() as i64;
                let mut k = k0;
                loop {
                    let u = phase + k as f64 * lap;
                    if u > hi {
                        break;
                    }
                    if u >= lo {
                        consider(u, &mut best, &mut best_d);
                    }
                    k += 1;
                }
                best
            }
        }
    }
}

/// Closest point on the path to a query position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub point: Point2,
    pub heading: f64,
    /// Signed offset of the query point, positive to the left of the path.
    pub lateral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pieces: Vec<Piece>,
    /// Arc length at the start of each piece.
    starts: Vec<f64>,
    length: f64,
}

impl Path {
    pub fn new(segments: &[Segment]) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        let mut pieces = Vec::new();
        for (i, seg) in segments.iter().enumerate() {
            if i > 0 {
                let gap = segments[i - 1].end().distance(&seg.start());
                if gap > JOINT_TOLERANCE {
                    return Err(PathError::Discontinuous { index: i, gap });
                }
            }
            match *seg {
                Segment::Line { from, to } => {
                    let len = from.distance(&to);
                    if !(len > 0.0) {
                        return Err(PathError::Degenerate { index: i });
                    }
                    pieces.push(Piece::Line {
                        a: from,
                        b: to,
                        len,
                    });
                }
                Segment::Arc {
                    center,
                    radius,
                    start_angle,
                    sweep,
                } => {
                    if !(radius > 0.0) || !(sweep.abs() > 0.0) || !sweep.is_finite() {
                        return Err(PathError::Degenerate { index: i });
                    }
                    pieces.push(Piece::Arc {
                        center,
                        radius,
                        start_angle,
                        sweep,
                    });
                }
                Segment::LateralBlend {
                    from,
                    heading,
                    length,
                    offset,
                    samples,
                } => {
                    if !(length > 0.0) || samples < 2 {
                        return Err(PathError::Degenerate { index: i });
                    }
                    let mut prev = from;
                    for k in 1..=samples {
                        let p =
                            blend_point(from, heading, length, offset, k as f64 / samples as f64);
                        pieces.push(Piece::Line {
                            a: prev,
                            b: p,
                            len: prev.distance(&p),
                        });
                        prev = p;
                    }
                }
            }
        }
        let mut starts = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for piece in &pieces {
            starts.push(acc);
            acc += piece.length();
        }
        Ok(Self {
            pieces,
            starts,
            length: acc,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> (Point2, f64) {
        self.pieces[0].at(0.0)
    }

    fn piece_index(&self, s: f64) -> usize {
        match self.starts.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Position and tangent heading at arc length `s`.
    pub fn query(&self, s: f64) -> Result<(Point2, f64), PathError> {
        if !(s >= -JOINT_TOLERANCE && s <= self.length + JOINT_TOLERANCE) {
            return Err(PathError::OutOfRange {
                s,
                length: self.length,
            });
        }
        Ok(self.query_clamped(s))
    }

    pub fn query_clamped(&self, s: f64) -> (Point2, f64) {
        let s = s.clamp(0.0, self.length);
        let i = self.piece_index(s);
        let piece = &self.pieces[i];
        piece.at((s - self.starts[i]).min(piece.length()))
    }

    /// Closest point over the whole path.
    pub fn project(&self, p: Point2) -> Projection {
        self.project_window(p, 0.0, self.length)
    }

    /// Closest point within `[s_hint - window, s_hint + window]`; keeps
    /// tracking on self-overlapping courses such as multi-lap circles.
    pub fn project_near(&self, p: Point2, s_hint: f64, window: f64) -> Projection {
        self.project_window(
            p,
            (s_hint - window).max(0.0),
            (s_hint + window).min(self.length),
        )
    }

    fn project_window(&self, p: Point2, lo: f64, hi: f64) -> Projection {
        let first = self.piece_index(lo);
        let last = self.piece_index(hi);
        let mut best_s = lo;
        let mut best_d = f64::INFINITY;
        for i in first..=last {
            let piece = &self.pieces[i];
            let start = self.starts[i];
            let a = (lo - start).clamp(0.0, piece.length());
            let b = (hi - start).clamp(0.0, piece.length());
            let u = piece.closest(p, a, b);
            let d = piece.at(u).0.distance(&p);
            if d < best_d {
                best_d = d;
                best_s = start + u;
            }
        }
        let (point, heading) = self.query_clamped(best_s);
        let (sin, cos) = heading.sin_cos();
        let lateral = cos * (p.y - point.y) - sin * (p.x - point.x);
        Projection {
            s: best_s,
            point,
            heading,
            lateral,
        }
    }

    /// Arc length of the first point at or after `s_from` whose straight-line
    /// distance from `origin` reaches `radius`; the path end if none does.
    pub fn intersect_ahead(&self, origin: Point2, s_from: f64, radius: f64) -> f64 {
        let dist = |s: f64| self.query_clamped(s).0.distance(&origin);
        if dist(s_from) >= radius {
            return s_from;
        }
        let step = (radius / 8.0).max(1e-3);
        let mut lo = s_from;
        loop {
            let hi = (lo + step).min(self.length);
            if dist(hi) >= radius {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if dist(m) >= radius {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                return b;
            }
            if hi >= self.length {
                return self.length;
            }
            lo = hi;
        }
    }
}
