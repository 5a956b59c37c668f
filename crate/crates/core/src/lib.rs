//! Shapefile I/O and planar geometry for the shapegpt toolchain.

pub mod geometry;
pub mod model;
pub mod shapefile;

pub use geometry::{GeometryConfig, GeometryError};
pub use model::{BBox, Coord, Dataset, DatasetError, Feature, FieldDescriptor, FieldKind, FieldValue, Geometry, ShapeKind};
pub use shapefile::{read_dataset, write_dataset, ShapefileError};
