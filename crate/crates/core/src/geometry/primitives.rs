//! Low-level planar predicates shared by the geometry operations.

use crate::model::{ring_signed_area, BBox, Coord};

#[inline]
pub(crate) fn sub(a: Coord, b: Coord) -> Coord {
    Coord::new(a.x - b.x, a.y - b.y)
}

#[inline]
pub(crate) fn cross2(a: Coord, b: Coord) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
pub(crate) fn dot(a: Coord, b: Coord) -> f64 {
    a.x * b.x + a.y * b.y
}

/// Closest point on segment `a-b` to `p`: returns (distance, point, parameter).
pub(crate) fn closest_on_segment(p: Coord, a: Coord, b: Coord) -> (f64, Coord, f64) {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return (p.distance(&a), a, 0.0);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    let q = Coord::new(a.x + t * ab.x, a.y + t * ab.y);
    (p.distance(&q), q, t)
}

/// Even-odd containment of `p` in a closed ring (boundary not special-cased).
pub(crate) fn point_in_ring(p: Coord, ring: &[Coord]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub(crate) fn point_in_rings(p: Coord, rings: &[Vec<Coord>]) -> bool {
    rings.iter().filter(|r| point_in_ring(p, r)).count() % 2 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `p` against polygon rings, treating anything within `eps` of
/// an edge as on the boundary.
pub(crate) fn locate(p: Coord, rings: &[Vec<Coord>], eps: f64) -> Location {
    let on_edge = rings
        .iter()
        .flat_map(|r| r.windows(2))
        .any(|w| closest_on_segment(p, w[0], w[1]).0 <= eps);
    if on_edge {
        Location::Boundary
    } else if point_in_rings(p, rings) {
        Location::Inside
    } else {
        Location::Outside
    }
}

pub(crate) fn rings_bbox(rings: &[Vec<Coord>]) -> Option<BBox> {
    let mut it = rings.iter().flatten();
    let first = *it.next()?;
    let mut b = BBox::from_coord(first);
    for c in it {
        b.expand_to(*c);
    }
    Some(b)
}

/// Squared distance between the closest points of segments `p0-p1` and
/// `q0-q1`, with the witnesses. Crossing segments return distance 0.
pub(crate) fn segment_segment_closest(p0: Coord, p1: Coord, q0: Coord, q1: Coord) -> Vec<(f64, Coord, Coord)> {
    let mut out = Vec::with_capacity(5);
    if let Some(x) = proper_or_touching_intersection(p0, p1, q0, q1) {
        out.push((0.0, x, x));
    }
    for p in [p0, p1] {
        let (d, q, _) = closest_on_segment(p, q0, q1);
        out.push((d, p, q));
    }
    for q in [q0, q1] {
        let (d, p, _) = closest_on_segment(q, p0, p1);
        out.push((d, p, q));
    }
    out
}

/// Intersection point of two non-parallel segments, if they meet.
pub(crate) fn proper_or_touching_intersection(p0: Coord, p1: Coord, q0: Coord, q1: Coord) -> Option<Coord> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let denom = cross2(r, s);
    if denom == 0.0 {
        return None;
    }
    let qp = sub(q0, p0);
    let t = cross2(qp, s) / denom;
    let u = cross2(qp, r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(Coord::new(p0.x + t * r.x, p0.y + t * r.y))
    } else {
        None
    }
}

/// Reorders ring winding so that rings at even nesting depth are clockwise
/// (outer) and rings at odd depth counter-clockwise (holes).
pub fn orient_polygon_rings(rings: &mut [Vec<Coord>]) {
    let n = rings.len();
    if n == 0 {
        return;
    }
    let depths: Vec<usize> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && ring_contains_ring(&rings[j], &rings[i]))
                .count()
        })
        .collect();
    for (ring, depth) in rings.iter_mut().zip(depths) {
        let area = ring_signed_area(ring);
        let want_cw = depth % 2 == 0;
        if (want_cw && area > 0.0) || (!want_cw && area < 0.0) {
            ring.reverse();
        }
    }
}

fn ring_contains_ring(outer: &[Coord], inner: &[Coord]) -> bool {
    let on_outer = |p: Coord| outer.windows(2).any(|w| closest_on_segment(p, w[0], w[1]).0 == 0.0);
    // first vertex of `inner` that is not on `outer`'s boundary decides
    if let Some(p) = inner.iter().copied().find(|&p| !on_outer(p)) {
        return point_in_ring(p, outer);
    }
    // every vertex touches: fall back to an edge midpoint
    inner
        .windows(2)
        .map(|w| Coord::new((w[0].x + w[1].x) / 2.0, (w[0].y + w[1].y) / 2.0))
        .find(|&m| !on_outer(m))
        .is_some_and(|m| point_in_ring(m, outer))
}
