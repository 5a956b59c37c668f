//! Reading and writing the shapefile file set (`.shp`, `.shx`, `.dbf`, `.prj`).

mod dbf;
mod shp;
mod summary;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::orient_polygon_rings;
use crate::model::{Dataset, DatasetError, Feature, FieldDescriptor, FieldValue, Geometry, ShapeKind};

pub use dbf::format_value;
pub use summary::{describe_dataset, DatasetSummary, FieldSummary, SUMMARY_TEXT_LIMIT};

#[derive(Debug, Error)]
pub enum ShapefileError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("bad file code {0} (expected 9994)")]
    BadMagic(i32),
    #[error("unsupported shape type {0}")]
    UnsupportedShapeKind(i32),
    #[error("record count mismatch: {shp} geometries, {dbf} attribute rows")]
    CountMismatch { shp: usize, dbf: usize },
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("value '{value}' does not fit field '{field}' ({width} bytes)")]
    FieldOverflow { field: String, value: String, width: usize },
    #[error("value '{value}' in field '{field}' is not representable in Latin-1")]
    UnencodableText { field: String, value: String },
    #[error(transparent)]
    InvalidDataset(#[from] DatasetError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

/// Files produced by [`write_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub shp: PathBuf,
    pub shx: PathBuf,
    pub dbf: PathBuf,
    pub prj: Option<PathBuf>,
}

impl WrittenFiles {
    pub fn all(&self) -> Vec<PathBuf> {
        let mut v = vec![self.shp.clone(), self.shx.clone(), self.dbf.clone()];
        v.extend(self.prj.clone());
        v
    }
}

/// Finds `stem.<ext>` next to `shp_path`, accepting either letter case.
pub fn sibling(shp_path: &Path, ext: &str) -> Option<PathBuf> {
    [ext.to_ascii_lowercase(), ext.to_ascii_uppercase()]
        .into_iter()
        .map(|e| shp_path.with_extension(e))
        .find(|p| p.is_file())
}

pub fn read_dataset(shp_path: impl AsRef<Path>) -> Result<Dataset, ShapefileError> {
    let shp_path = shp_path.as_ref();
    if !shp_path.is_file() {
        return Err(ShapefileError::MissingFile(shp_path.to_path_buf()));
    }
    let dbf_path = sibling(shp_path, "dbf").ok_or_else(|| ShapefileError::MissingFile(shp_path.with_extension("dbf")))?;

    let shp_bytes = fs::read(shp_path)?;
    let header = shp::read_header(&shp_bytes)?;
    let kind = ShapeKind::from_code(header.shape_code).ok_or(ShapefileError::UnsupportedShapeKind(header.shape_code))?;

    let declared_end = (header.file_length_words.max(0) as usize * 2).min(shp_bytes.len());
    let mut geoms = Vec::new();
    let mut at = shp::HEADER_LEN;
    while at + 8 <= declared_end.max(shp::HEADER_LEN) {
        let content_len = shp::be_i32(&shp_bytes, at + 4);
        let len = usize::try_from(content_len)
            .map_err(|_| ShapefileError::MalformedRecord(format!("record {}: negative length", geoms.len() + 1)))?
            * 2;
        let content = shp_bytes.get(at + 8..at + 8 + len).ok_or_else(|| {
            ShapefileError::MalformedRecord(format!("record {} runs past end of file", geoms.len() + 1))
        })?;
        let mut g = shp::decode_content(content, kind, geoms.len() + 1)?;
        if let Geometry::Polygon(rings) = &mut g {
            orient_polygon_rings(rings);
        }
        geoms.push(g);
        at += 8 + len;
    }

    if let Some(shx_path) = sibling(shp_path, "shx") {
        let shx = fs::read(shx_path)?;
        shp::read_header(&shx)?;
        let entries = (shx.len().saturating_sub(shp::HEADER_LEN)) / 8;
        if entries != geoms.len() {
            return Err(ShapefileError::CountMismatch { shp: geoms.len(), dbf: entries });
        }
    }

    let (fields, records) = dbf::decode_table(&fs::read(&dbf_path)?)?;
    if records.len() != geoms.len() {
        return Err(ShapefileError::CountMismatch { shp: geoms.len(), dbf: records.len() });
    }
    let features: Vec<Feature> = geoms
        .into_iter()
        .zip(records)
        .filter(|(_, r)| !r.deleted)
        .map(|(g, r)| Feature::new(g, r.values))
        .collect();

    let crs_wkt = match sibling(shp_path, "prj") {
        Some(p) => Some(fs::read_to_string(p)?.trim().to_string()).filter(|s| !s.is_empty()),
        None => None,
    };
    Ok(Dataset::with_default_bbox(kind, fields, features, crs_wkt, header.bbox)?)
}

pub fn write_dataset(d: &Dataset, shp_path: impl AsRef<Path>) -> Result<WrittenFiles, ShapefileError> {
    let shp_path = shp_path.as_ref().with_extension("shp");
    let rows: Vec<&[FieldValue]> = d.features().iter().map(|f| f.attributes.as_slice()).collect();
    let dbf_bytes = dbf::encode_table(d.fields(), &rows)?;

    let mut records = Vec::new();
    let mut index = Vec::new();
    for (i, f) in d.features().iter().enumerate() {
        let content = shp::encode_content(&f.geometry);
        let offset_words = (shp::HEADER_LEN + records.len()) / 2;
        index.extend_from_slice(&(offset_words as i32).to_be_bytes());
        index.extend_from_slice(&((content.len() / 2) as i32).to_be_bytes());
        records.extend_from_slice(&((i + 1) as i32).to_be_bytes());
        records.extend_from_slice(&((content.len() / 2) as i32).to_be_bytes());
        records.extend_from_slice(&content);
    }
    let header = |total: usize| shp::Header {
        file_length_words: (total / 2) as i32,
        shape_code: d.shape_kind().code(),
        bbox: d.bbox(),
    };
    let mut shp_bytes = Vec::with_capacity(shp::HEADER_LEN + records.len());
    shp::write_header(&mut shp_bytes, &header(shp::HEADER_LEN + records.len()));
    shp_bytes.extend_from_slice(&records);
    let mut shx_bytes = Vec::with_capacity(shp::HEADER_LEN + index.len());
    shp::write_header(&mut shx_bytes, &header(shp::HEADER_LEN + index.len()));
    shx_bytes.extend_from_slice(&index);

    if let Some(parent) = shp_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let files = WrittenFiles {
        shx: shp_path.with_extension("shx"),
        dbf: shp_path.with_extension("dbf"),
        prj: d.crs_wkt().map(|_| shp_path.with_extension("prj")),
        shp: shp_path,
    };
    fs::write(&files.shp, shp_bytes)?;
    fs::write(&files.shx, shx_bytes)?;
    fs::write(&files.dbf, dbf_bytes)?;
    match (&files.prj, d.crs_wkt()) {
        (Some(p), Some(wkt)) => fs::write(p, wkt)?,
        _ => {
            let stale = files.shp.with_extension("prj");
            if stale.is_file() {
                fs::remove_file(stale)?;
            }
        }
    }
    Ok(files)
}

/// Two attribute values are equal once both are rendered into `fd`'s
/// fixed-width cell.
pub fn values_equal_as_stored(fd: &FieldDescriptor, a: &FieldValue, b: &FieldValue) -> bool {
    match (format_value(fd, a), format_value(fd, b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
