use std::f64::consts::TAU;

use crate::model::{Coord, Geometry};

use super::overlay::{polygon_boolean, union_all, BooleanOp};
use super::{GeometryConfig, GeometryError};

/// Regular polygon approximating a disc, clockwise, first vertex at angle 0.
fn disc(c: Coord, r: f64, per_quadrant: usize) -> Vec<Coord> {
    let n = 4 * per_quadrant;
    let mut ring: Vec<Coord> = (0..n)
        .map(|k| {
            let a = -(k as f64) * TAU / n as f64;
            Coord::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect();
    ring.push(ring[0]);
    ring
}

/// Clockwise rectangle of half-width `r` around segment `p-q`.
fn segment_rect(p: Coord, q: Coord, r: f64) -> Option<Vec<Coord>> {
    let len = p.distance(&q);
    if len == 0.0 {
        return None;
    }
    let (nx, ny) = (-(q.y - p.y) / len * r, (q.x - p.x) / len * r);
    let ring = vec![
        Coord::new(p.x + nx, p.y + ny),
        Coord::new(q.x + nx, q.y + ny),
        Coord::new(q.x - nx, q.y - ny),
        Coord::new(p.x - nx, p.y - ny),
        Coord::new(p.x + nx, p.y + ny),
    ];
    Some(ring)
}

/// Rectangles and discs covering every segment and vertex of `parts`.
fn stroke_pieces(parts: &[Vec<Coord>], r: f64, per_quadrant: usize, closed: bool) -> Vec<Geometry> {
    let mut pieces = Vec::new();
    for part in parts {
        let verts = if closed && part.len() > 1 { &part[..part.len() - 1] } else { &part[..] };
        for v in verts {
            pieces.push(Geometry::Polygon(vec![disc(*v, r, per_quadrant)]));
        }
        for w in part.windows(2) {
            if let Some(rect) = segment_rect(w[0], w[1], r) {
                pieces.push(Geometry::Polygon(vec![rect]));
            }
        }
    }
    pieces
}

fn check_distance(d: f64) -> Result<(), GeometryError> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveDistance(d))
    }
}

/// Region within `distance` of `g`, as a union of per-vertex discs and
/// per-segment rectangles (plus the polygon itself for polygon input).
pub fn buffer(g: &Geometry, distance: f64, cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    check_distance(distance)?;
    cfg.validate()?;
    let n = cfg.arc_segments_per_quadrant;
    match g {
        Geometry::Null => Ok(Geometry::Polygon(vec![])),
        Geometry::Point(p) => Ok(Geometry::Polygon(vec![disc(*p, distance, n)])),
        Geometry::MultiPoint(pts) => {
            let discs: Vec<Geometry> = pts.iter().map(|p| Geometry::Polygon(vec![disc(*p, distance, n)])).collect();
            union_all(&discs, cfg)
        }
        Geometry::PolyLine(parts) => union_all(&stroke_pieces(parts, distance, n, false), cfg),
        Geometry::Polygon(rings) => {
            let mut pieces = vec![g.clone()];
            pieces.extend(stroke_pieces(rings, distance, n, true));
            union_all(&pieces, cfg)
        }
    }
}

/// Part of a closed shape within `distance` of its boundary.
pub fn inward_buffer(g: &Geometry, distance: f64, cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    check_distance(distance)?;
    let rings = match g {
        Geometry::Polygon(rings) => rings.clone(),
        Geometry::PolyLine(parts) => {
            if parts.is_empty() || parts.iter().any(|p| p.len() < 4 || p.first() != p.last()) {
                return Err(GeometryError::OpenBoundary);
            }
            parts.clone()
        }
        other => return Err(GeometryError::WrongGeometryKind { expected: "PolyLine or Polygon", found: other.kind_name() }),
    };
    let shape = Geometry::Polygon(rings.clone());
    let band = union_all(&stroke_pieces(&rings, distance, cfg.arc_segments_per_quadrant, true), cfg)?;
    polygon_boolean(BooleanOp::Intersection, &shape, &band, cfg)
}

/// Concentric rings: ring i covers distances in (d[i-1], d[i]].
pub fn multi_ring_buffer(
    g: &Geometry,
    distances: &[f64],
    cfg: &GeometryConfig,
) -> Result<Vec<(Geometry, f64)>, GeometryError> {
    if distances.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    for &d in distances {
        check_distance(d)?;
    }
    if distances.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GeometryError::UnsortedDistances);
    }
    let mut out = Vec::with_capacity(distances.len());
    let mut inner: Option<Geometry> = None;
    for &d in distances {
        let outer = buffer(g, d, cfg)?;
        let ring = match &inner {
            None => outer.clone(),
            Some(i) => polygon_boolean(BooleanOp::Difference, &outer, i, cfg)?,
        };
        out.push((ring, d));
        inner = Some(outer);
    }
    Ok(out)
}
