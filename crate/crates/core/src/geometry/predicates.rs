//! Binary spatial predicates used by joins.

use crate::model::Geometry;

use super::measure::{polygon_area, polyline_length};
use super::nearest::nearest_connector;
use super::overlay::{clip_geometry, polygon_boolean, BooleanOp};
use super::primitives::{locate, Location};
use super::{GeometryConfig, GeometryError};

/// True when the geometries share at least one point (within `snap_epsilon`).
pub fn intersects(a: &Geometry, b: &Geometry, cfg: &GeometryConfig) -> Result<bool, GeometryError> {
    let (Some(ba), Some(bb)) = (a.bbox(), b.bbox()) else { return Ok(false) };
    if !ba.buffered(cfg.snap_epsilon).intersects(&bb) {
        return Ok(false);
    }
    if nearest_connector(a, b)?.distance <= cfg.snap_epsilon {
        return Ok(true);
    }
    // no boundary contact: one may still sit inside the other
    let inside = |outer: &Geometry, inner: &Geometry| match outer {
        Geometry::Polygon(rings) => {
            inner.coords().next().is_some_and(|p| locate(p, rings, cfg.snap_epsilon) != Location::Outside)
        }
        _ => false,
    };
    Ok(inside(a, b) || inside(b, a))
}

/// True when every point of `b` lies in `a` (boundary included).
pub fn contains(a: &Geometry, b: &Geometry, cfg: &GeometryConfig) -> Result<bool, GeometryError> {
    if b.is_empty() || a.is_empty() {
        return Ok(false);
    }
    let (ba, bb) = (a.bbox().expect("non-empty"), b.bbox().expect("non-empty"));
    let grown = ba.buffered(cfg.snap_epsilon);
    if !(grown.contains(crate::model::Coord::new(bb.xmin, bb.ymin))
        && grown.contains(crate::model::Coord::new(bb.xmax, bb.ymax)))
    {
        return Ok(false);
    }
    match a {
        Geometry::Polygon(rings) => match b {
            Geometry::Point(_) | Geometry::MultiPoint(_) => {
                Ok(b.coords().all(|p| locate(p, rings, cfg.snap_epsilon) != Location::Outside))
            }
            Geometry::PolyLine(_) => {
                let kept = polyline_length(&clip_geometry(b, a, cfg)?)?;
                let full = polyline_length(b)?;
                Ok(kept >= full * (1.0 - 1e-9))
            }
            Geometry::Polygon(_) => {
                let outside = polygon_area(&polygon_boolean(BooleanOp::Difference, b, a, cfg)?)?;
                Ok(outside <= 1e-9 * polygon_area(b)?.max(f64::MIN_POSITIVE))
            }
            Geometry::Null => Ok(false),
        },
        // lower-dimensional containers only contain coincident points
        _ => Ok(matches!(b, Geometry::Point(_) | Geometry::MultiPoint(_))
            && b.coords().all(|p| a.coords().any(|q| q.distance(&p) <= cfg.snap_epsilon))),
    }
}

pub fn within(a: &Geometry, b: &Geometry, cfg: &GeometryConfig) -> Result<bool, GeometryError> {
    contains(b, a, cfg)
}
