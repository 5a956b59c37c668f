//! In-memory representation of a shapefile: geometries, attribute schema and
//! the `Dataset` that ties them together.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A planar coordinate in CRS units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Coord { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Coord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Coord { x, y }
    }
}

/// Axis-aligned envelope `(xmin, ymin, xmax, ymax)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BBox { xmin, ymin, xmax, ymax }
    }

    pub fn from_coord(c: Coord) -> Self {
        BBox::new(c.x, c.y, c.x, c.y)
    }

    pub fn expand_to(&mut self, c: Coord) {
        self.xmin = self.xmin.min(c.x);
        self.ymin = self.ymin.min(c.y);
        self.xmax = self.xmax.max(c.x);
        self.ymax = self.ymax.max(c.y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.xmin.min(other.xmin),
            self.ymin.min(other.ymin),
            self.xmax.max(other.xmax),
            self.ymax.max(other.ymax),
        )
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.x >= self.xmin && c.x <= self.xmax && c.y >= self.ymin && c.y <= self.ymax
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.xmin <= other.xmax
            && other.xmin <= self.xmax
            && self.ymin <= other.ymax
            && other.ymin <= self.ymax
    }

    pub fn buffered(&self, d: f64) -> BBox {
        BBox::new(self.xmin - d, self.ymin - d, self.xmax + d, self.ymax + d)
    }

    /// Closed clockwise ring tracing the envelope.
    pub fn to_ring(&self) -> Vec<Coord> {
        vec![
            Coord::new(self.xmin, self.ymin),
            Coord::new(self.xmin, self.ymax),
            Coord::new(self.xmax, self.ymax),
            Coord::new(self.xmax, self.ymin),
            Coord::new(self.xmin, self.ymin),
        ]
    }
}

/// Shape type codes supported by the reader and writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeKind {
    Point,
    PolyLine,
    Polygon,
    MultiPoint,
}

impl ShapeKind {
    pub fn code(self) -> i32 {
        match self {
            ShapeKind::Point => 1,
            ShapeKind::PolyLine => 3,
            ShapeKind::Polygon => 5,
            ShapeKind::MultiPoint => 8,
        }
    }

    pub fn from_code(code: i32) -> Option<ShapeKind> {
        match code {
            1 => Some(ShapeKind::Point),
            3 => Some(ShapeKind::PolyLine),
            5 => Some(ShapeKind::Polygon),
            8 => Some(ShapeKind::MultiPoint),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Point => "Point",
            ShapeKind::PolyLine => "PolyLine",
            ShapeKind::Polygon => "Polygon",
            ShapeKind::MultiPoint => "MultiPoint",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single feature geometry.
///
/// `Null` corresponds to shape code 0 and may appear in a file of any kind.
/// Polygon rings follow the shapefile convention: outer rings clockwise,
/// holes counter-clockwise, every ring explicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Null,
    Point(Coord),
    MultiPoint(Vec<Coord>),
    PolyLine(Vec<Vec<Coord>>),
    Polygon(Vec<Vec<Coord>>),
}

impl Geometry {
    pub fn kind(&self) -> Option<ShapeKind> {
        match self {
            Geometry::Null => None,
            Geometry::Point(_) => Some(ShapeKind::Point),
            Geometry::MultiPoint(_) => Some(ShapeKind::MultiPoint),
            Geometry::PolyLine(_) => Some(ShapeKind::PolyLine),
            Geometry::Polygon(_) => Some(ShapeKind::Polygon),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind().map_or("Null", ShapeKind::name)
    }

    /// True when the geometry has no coordinates at all.
    pub fn is_empty(&self) -> bool {
        match self {
            Geometry::Null => true,
            Geometry::Point(_) => false,
            Geometry::MultiPoint(pts) => pts.is_empty(),
            Geometry::PolyLine(parts) | Geometry::Polygon(parts) => {
                parts.iter().all(|p| p.is_empty())
            }
        }
    }

    /// Iterates over every stored coordinate, including ring closures.
    pub fn coords(&self) -> Box<dyn Iterator<Item = Coord> + '_> {
        match self {
            Geometry::Null => Box::new(std::iter::empty()),
            Geometry::Point(c) => Box::new(std::iter::once(*c)),
            Geometry::MultiPoint(pts) => Box::new(pts.iter().copied()),
            Geometry::PolyLine(parts) | Geometry::Polygon(parts) => {
                Box::new(parts.iter().flat_map(|p| p.iter().copied()))
            }
        }
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut it = self.coords();
        let first = it.next()?;
        let mut b = BBox::from_coord(first);
        for c in it {
            b.expand_to(c);
        }
        Some(b)
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if let Some(c) = self.coords().find(|c| !c.is_finite()) {
            return Err(DatasetError::NonFiniteCoord(c.x, c.y));
        }
        match self {
            Geometry::PolyLine(parts) => {
                if let Some(i) = parts.iter().position(|p| p.len() < 2) {
                    return Err(DatasetError::ShortPart { part: i, len: parts[i].len() });
                }
            }
            Geometry::Polygon(rings) => {
                for (i, ring) in rings.iter().enumerate() {
                    if ring.len() < 4 {
                        return Err(DatasetError::ShortRing { ring: i, len: ring.len() });
                    }
                    if ring.first() != ring.last() {
                        return Err(DatasetError::OpenRing { ring: i });
                    }
                }
                if !rings.is_empty() && rings.iter().all(|r| ring_signed_area(r) > 0.0) {
                    return Err(DatasetError::NoOuterRing);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn ring_signed_area(ring: &[Coord]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut sum = 0.0;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        sum += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    // relative to ring[0] the implicit closing edge has zero cross product
    sum / 2.0
}

/// Tight envelope over a list of geometries.
pub fn compute_bbox(geoms: &[Geometry]) -> Result<BBox, DatasetError> {
    geoms
        .iter()
        .filter_map(Geometry::bbox)
        .reduce(|a, b| a.union(&b))
        .ok_or(DatasetError::EmptyInput)
}

/// dBASE column type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    Character,
    Numeric,
    Float,
    Logical,
    Date,
}

impl FieldKind {
    pub fn code(self) -> u8 {
        match self {
            FieldKind::Character => b'C',
            FieldKind::Numeric => b'N',
            FieldKind::Float => b'F',
            FieldKind::Logical => b'L',
            FieldKind::Date => b'D',
        }
    }

    pub fn from_code(code: u8) -> Option<FieldKind> {
        match code.to_ascii_uppercase() {
            b'C' => Some(FieldKind::Character),
            b'N' => Some(FieldKind::Numeric),
            b'F' => Some(FieldKind::Float),
            b'L' => Some(FieldKind::Logical),
            b'D' => Some(FieldKind::Date),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Character => "Character",
            FieldKind::Numeric => "Numeric",
            FieldKind::Float => "Float",
            FieldKind::Logical => "Logical",
            FieldKind::Date => "Date",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, FieldKind::Numeric | FieldKind::Float)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub name: String,
    pub kind: FieldKind,
    pub byte_length: u8,
    pub decimal_count: u8,
}

impl FieldDescriptor {
    pub fn new(name: impl Into<String>, kind: FieldKind, byte_length: u8, decimal_count: u8) -> Self {
        FieldDescriptor { name: name.into(), kind, byte_length, decimal_count }
    }

    pub fn character(name: impl Into<String>, len: u8) -> Self {
        Self::new(name, FieldKind::Character, len, 0)
    }

    pub fn numeric(name: impl Into<String>, len: u8, decimals: u8) -> Self {
        Self::new(name, FieldKind::Numeric, len, decimals)
    }

    pub fn logical(name: impl Into<String>) -> Self {
        Self::new(name, FieldKind::Logical, 1, 0)
    }

    pub fn date(name: impl Into<String>) -> Self {
        Self::new(name, FieldKind::Date, 8, 0)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |reason: &str| DatasetError::BadField { name: self.name.clone(), reason: reason.into() };
        if self.name.is_empty() {
            return Err(bad("empty name"));
        }
        if self.name.len() > 10 || !self.name.is_ascii() {
            return Err(bad("name must be at most 10 ASCII bytes"));
        }
        if self.byte_length == 0 {
            return Err(bad("zero length"));
        }
        if self.decimal_count > self.byte_length {
            return Err(bad("decimal count exceeds length"));
        }
        match self.kind {
            FieldKind::Logical if self.byte_length != 1 => Err(bad("logical fields have length 1")),
            FieldKind::Date if self.byte_length != 8 => Err(bad("date fields have length 8")),
            _ => Ok(()),
        }
    }

    /// Whether `value` can be stored in a column of this kind.
    pub fn accepts(&self, value: &FieldValue) -> bool {
        matches!(
            (self.kind, value),
            (FieldKind::Character, FieldValue::Text(_))
                | (FieldKind::Numeric | FieldKind::Float, FieldValue::Number(_))
                | (FieldKind::Logical, FieldValue::Logical(_))
                | (FieldKind::Date, FieldValue::Date(_))
        )
    }

    /// The blank value for this column kind.
    pub fn null_value(&self) -> FieldValue {
        match self.kind {
            FieldKind::Character => FieldValue::Text(String::new()),
            FieldKind::Numeric | FieldKind::Float => FieldValue::Number(None),
            FieldKind::Logical => FieldValue::Logical(None),
            FieldKind::Date => FieldValue::Date(None),
        }
    }
}

/// One attribute cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldValue {
    Text(String),
    Number(Option<f64>),
    Logical(Option<bool>),
    Date(Option<NaiveDate>),
}

impl FieldValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            FieldValue::Number(v) => *v,
            FieldValue::Text(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(
            self,
            FieldValue::Number(None) | FieldValue::Logical(None) | FieldValue::Date(None)
        ) || matches!(self, FieldValue::Text(s) if s.is_empty())
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Text(s) => f.write_str(s),
            FieldValue::Number(Some(v)) => write!(f, "{v}"),
            FieldValue::Logical(Some(b)) => f.write_str(if *b { "T" } else { "F" }),
            FieldValue::Date(Some(d)) => write!(f, "{}", d.format("%Y-%m-%d")),
            FieldValue::Number(None) | FieldValue::Logical(None) | FieldValue::Date(None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub geometry: Geometry,
    pub attributes: Vec<FieldValue>,
}

impl Feature {
    pub fn new(geometry: Geometry, attributes: Vec<FieldValue>) -> Self {
        Feature { geometry, attributes }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("coordinate ({0}, {1}) is not finite")]
    NonFiniteCoord(f64, f64),
    #[error("polyline part {part} has {len} coordinates (need at least 2)")]
    ShortPart { part: usize, len: usize },
    #[error("polygon ring {ring} has {len} coordinates (need at least 4)")]
    ShortRing { ring: usize, len: usize },
    #[error("polygon ring {ring} is not closed")]
    OpenRing { ring: usize },
    #[error("polygon has only counter-clockwise (hole) rings")]
    NoOuterRing,
    #[error("feature {index} is a {found} but the dataset holds {expected}")]
    KindMismatch { index: usize, expected: ShapeKind, found: &'static str },
    #[error("feature {index} has {found} attributes, expected {expected}")]
    ArityMismatch { index: usize, expected: usize, found: usize },
    #[error("feature {index}: value for field '{field}' has the wrong type")]
    TypeMismatch { index: usize, field: String },
    #[error("invalid field '{name}': {reason}")]
    BadField { name: String, reason: String },
    #[error("duplicate field name '{0}'")]
    DuplicateField(String),
    #[error("feature {index}: {source}")]
    InvalidGeometry { index: usize, source: Box<DatasetError> },
    #[error("no coordinates to bound")]
    EmptyInput,
}

/// A parsed shapefile: typed features sharing one attribute schema.
///
/// Constructed only through [`Dataset::new`], which checks every invariant
/// and computes the exact bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    shape_kind: ShapeKind,
    fields: Vec<FieldDescriptor>,
    features: Vec<Feature>,
    crs_wkt: Option<String>,
    bbox: BBox,
}

impl Dataset {
    pub fn new(
        shape_kind: ShapeKind,
        fields: Vec<FieldDescriptor>,
        features: Vec<Feature>,
        crs_wkt: Option<String>,
    ) -> Result<Self, DatasetError> {
        Self::with_default_bbox(shape_kind, fields, features, crs_wkt, BBox::default())
    }

    /// Like [`Dataset::new`], but `empty_bbox` is used when no feature has
    /// coordinates (e.g. the header box of an empty file).
    pub fn with_default_bbox(
        shape_kind: ShapeKind,
        fields: Vec<FieldDescriptor>,
        features: Vec<Feature>,
        crs_wkt: Option<String>,
        empty_bbox: BBox,
    ) -> Result<Self, DatasetError> {
        for (i, f) in fields.iter().enumerate() {
            f.validate()?;
            if fields[..i].iter().any(|g| g.name.eq_ignore_ascii_case(&f.name)) {
                return Err(DatasetError::DuplicateField(f.name.clone()));
            }
        }
        for (index, feat) in features.iter().enumerate() {
            match feat.geometry.kind() {
                None => {}
                Some(k) if k == shape_kind => {}
                Some(_) => {
                    return Err(DatasetError::KindMismatch {
                        index,
                        expected: shape_kind,
                        found: feat.geometry.kind_name(),
                    })
                }
            }
            feat.geometry
                .validate()
                .map_err(|e| DatasetError::InvalidGeometry { index, source: Box::new(e) })?;
            if feat.attributes.len() != fields.len() {
                return Err(DatasetError::ArityMismatch {
                    index,
                    expected: fields.len(),
                    found: feat.attributes.len(),
                });
            }
            if let Some(fd) = fields.iter().zip(&feat.attributes).find(|(fd, v)| !fd.accepts(v)) {
                return Err(DatasetError::TypeMismatch { index, field: fd.0.name.clone() });
            }
        }
        let bbox = features
            .iter()
            .filter_map(|f| f.geometry.bbox())
            .reduce(|a, b| a.union(&b))
            .unwrap_or(empty_bbox);
        Ok(Dataset { shape_kind, fields, features, crs_wkt, bbox })
    }

    pub fn shape_kind(&self) -> ShapeKind {
        self.shape_kind
    }

    pub fn fields(&self) -> &[FieldDescriptor] {
        &self.fields
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn crs_wkt(&self) -> Option<&str> {
        self.crs_wkt.as_deref()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name.eq_ignore_ascii_case(name))
    }

    pub fn geometries(&self) -> impl Iterator<Item = &Geometry> {
        self.features.iter().map(|f| &f.geometry)
    }

    pub fn into_parts(self) -> (ShapeKind, Vec<FieldDescriptor>, Vec<Feature>, Option<String>) {
        (self.shape_kind, self.fields, self.features, self.crs_wkt)
    }
}
