//! Planar geometry operations. All distances and areas are in CRS units.

mod buffer;
mod convert;
mod dispersion;
mod mbr;
mod measure;
mod nearest;
mod noding;
mod overlay;
mod predicates;
mod primitives;
mod reproject;
mod voronoi;

use thiserror::Error;

pub use buffer::{buffer, inward_buffer, multi_ring_buffer};
pub use convert::{lines_to_polygons, points_to_line, polygons_to_lines, vertices_to_points};
pub use dispersion::{dispersion_stats, Degeneracy, DispersionStats};
pub use mbr::{convex_hull, min_bounding_rect, MbrMode, MinRect};
pub use measure::{polygon_area, polyline_length};
pub use nearest::{nearest_connector, Connector};
pub use overlay::{
    clip_dataset, clip_geometry, disjoint_union, polygon_boolean, split_polygon_by_lines, union_all, BooleanOp,
};
pub use predicates::{contains, intersects, within};
pub use primitives::{orient_polygon_rings, Location};
pub use reproject::{reproject, Crs};
pub use voronoi::{voronoi_features, voronoi_geometries, voronoi_points, VoronoiCell};


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub snap_epsilon: f64,
    pub arc_segments_per_quadrant: usize,
    pub voronoi_extent_expansion: f64,
    /// `None` means bbox diagonal / 1000 of the input being densified.
    pub densify_interval: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            snap_epsilon: 1e-9,
            arc_segments_per_quadrant: 8,
            voronoi_extent_expansion: 0.10,
            densify_interval: None,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidConfig(m.to_string()));
        if !(self.snap_epsilon > 0.0) {
            return bad("snap_epsilon must be > 0");
        }
        if self.arc_segments_per_quadrant < 2 {
            return bad("arc_segments_per_quadrant must be >= 2");
        }
        if !(self.voronoi_extent_expansion >= 0.0) {
            return bad("voronoi_extent_expansion must be >= 0");
        }
        if let Some(d) = self.densify_interval {
            if !(d > 0.0) {
                return bad("densify_interval must be > 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("expected {expected} geometry, got {found}")]
    WrongGeometryKind { expected: &'static str, found: &'static str },
    #[error("distance must be > 0 (got {0})")]
    NonPositiveDistance(f64),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("boundary is not closed")]
    OpenBoundary,
    #[error("distances must be strictly ascending")]
    UnsortedDistances,
    #[error("need at least 2 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("all seeds coincide")]
    DuplicateSeedsOnly,
    #[error("input is empty")]
    EmptyInput,
    #[error("part has fewer than 3 distinct vertices")]
    TooFewVertices,
    #[error("ring self-intersects")]
    SelfIntersecting,
    #[error("start and end points coincide")]
    DegenerateLine,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("unsupported CRS pair {from} -> {to}")]
    UnsupportedCrsPair { from: String, to: String },
    #[error("latitude {0} outside the Mercator range")]
    LatitudeOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
