use crate::model::{ring_signed_area, Geometry};

use super::GeometryError;

/// Total segment length of a polyline, or perimeter over all rings of a polygon.
pub fn polyline_length(g: &Geometry) -> Result<f64, GeometryError> {
    match g {
        Geometry::PolyLine(parts) | Geometry::Polygon(parts) => Ok(parts
            .iter()
            .flat_map(|p| p.windows(2))
            .map(|w| w[0].distance(&w[1]))
            .sum()),
        other => Err(GeometryError::WrongGeometryKind { expected: "PolyLine or Polygon", found: other.kind_name() }),
    }
}

/// Outer ring areas minus hole areas. Outer rings are clockwise, holes
/// counter-clockwise, so this is the negated signed sum.
pub fn polygon_area(g: &Geometry) -> Result<f64, GeometryError> {
    match g {
        Geometry::Polygon(rings) => Ok((-rings.iter().map(|r| ring_signed_area(r)).sum::<f64>()).max(0.0)),
        other => Err(GeometryError::WrongGeometryKind { expected: "Polygon", found: other.kind_name() }),
    }
}
