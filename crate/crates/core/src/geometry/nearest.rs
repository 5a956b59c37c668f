use crate::model::{Coord, Geometry};

use super::primitives::segment_segment_closest;
use super::GeometryError;

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    /// Two-point polyline from `a` to `b`.
    pub line: Geometry,
    pub distance: f64,
}

fn segments(g: &Geometry) -> Vec<(Coord, Coord)> {
    match g {
        Geometry::Null => vec![],
        Geometry::Point(p) => vec![(*p, *p)],
        Geometry::MultiPoint(ps) => ps.iter().map(|p| (*p, *p)).collect(),
        Geometry::PolyLine(parts) | Geometry::Polygon(parts) => parts
            .iter()
            .flat_map(|p| {
                if p.len() == 1 {
                    vec![(p[0], p[0])]
                } else {
                    p.windows(2).map(|w| (w[0], w[1])).collect()
                }
            })
            .collect(),
    }
}

/// Shortest segment joining `a` and `b`. Ties go to the smallest (x, y)
/// endpoint on `a`.
pub fn nearest_connector(a: &Geometry, b: &Geometry) -> Result<Connector, GeometryError> {
    let (sa, sb) = (segments(a), segments(b));
    if sa.is_empty() || sb.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let mut best: Option<(f64, Coord, Coord)> = None;
    for &(p0, p1) in &sa {
        for &(q0, q1) in &sb {
            for cand in segment_segment_closest(p0, p1, q0, q1) {
                best = Some(match best {
                    None => cand,
                    Some(cur) => {
                        let tol = 1e-12 * (1.0 + cur.0);
                        if cand.0 < cur.0 - tol {
                            cand
                        } else if cand.0 <= cur.0 + tol
                            && (cand.1.x, cand.1.y).partial_cmp(&(cur.1.x, cur.1.y)) == Some(std::cmp::Ordering::Less)
                        {
                            cand
                        } else {
                            cur
                        }
                    }
                });
            }
        }
    }
    let (_, pa, pb) = best.expect("non-empty inputs");
    Ok(Connector { line: Geometry::PolyLine(vec![vec![pa, pb]]), distance: pa.distance(&pb) })
}
