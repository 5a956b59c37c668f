use crate::model::{Coord, Geometry};

use super::primitives::{cross2, dot, orient_polygon_rings, segment_segment_closest, sub};
use super::GeometryError;

/// Part and ring vertices in storage order; closing duplicates emitted once.
pub fn vertices_to_points(g: &Geometry) -> Result<Vec<Coord>, GeometryError> {
    match g {
        Geometry::PolyLine(parts) => Ok(parts.iter().flatten().copied().collect()),
        Geometry::Polygon(rings) => Ok(rings
            .iter()
            .flat_map(|r| {
                let closed = r.len() > 1 && r.first() == r.last();
                r[..if closed { r.len() - 1 } else { r.len() }].iter().copied()
            })
            .collect()),
        other => Err(GeometryError::WrongGeometryKind { expected: "PolyLine or Polygon", found: other.kind_name() }),
    }
}

fn ring_self_intersects(ring: &[Coord], eps: f64) -> bool {
    let n = ring.len() - 1;
    for i in 0..n {
        // folding back onto the previous edge
        let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[i + 1]);
        let (u, v) = (sub(b, a), sub(c, b));
        if cross2(u, v).abs() <= eps * (dot(u, u).sqrt() + dot(v, v).sqrt()) && dot(u, v) < 0.0 {
            return true;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let d = segment_segment_closest(ring[i], ring[i + 1], ring[j], ring[j + 1])
                .into_iter()
                .map(|c| c.0)
                .fold(f64::INFINITY, f64::min);
            if d <= eps {
                return true;
            }
        }
    }
    false
}

/// Closes every part into a ring and normalizes winding.
pub fn lines_to_polygons(g: &Geometry, eps: f64) -> Result<Geometry, GeometryError> {
    let parts = match g {
        Geometry::PolyLine(parts) => parts,
        other => return Err(GeometryError::WrongGeometryKind { expected: "PolyLine", found: other.kind_name() }),
    };
    let mut rings = Vec::with_capacity(parts.len());
    for part in parts {
        let mut ring = part.clone();
        ring.dedup();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::TooFewVertices);
        }
        ring.push(ring[0]);
        if ring_self_intersects(&ring, eps) {
            return Err(GeometryError::SelfIntersecting);
        }
        rings.push(ring);
    }
    orient_polygon_rings(&mut rings);
    Ok(Geometry::Polygon(rings))
}

pub fn polygons_to_lines(g: &Geometry) -> Result<Geometry, GeometryError> {
    match g {
        Geometry::Polygon(rings) => Ok(Geometry::PolyLine(rings.clone())),
        other => Err(GeometryError::WrongGeometryKind { expected: "Polygon", found: other.kind_name() }),
    }
}

pub fn points_to_line(start: Coord, end: Coord, eps: f64) -> Result<Geometry, GeometryError> {
    if start.distance(&end) <= eps {
        return Err(GeometryError::DegenerateLine);
    }
    Ok(Geometry::PolyLine(vec![vec![start, end]]))
}
