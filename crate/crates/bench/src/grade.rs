//! Output grading: shapefiles as feature multisets, CSV as row sets, images
//! by existence and size.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use shapegpt_core::shapefile::values_equal_as_stored;
use shapegpt_core::{read_dataset, Coord, Dataset, Feature, Geometry};

/// Coordinate tolerance for geometry comparison.
pub const COORD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "grade", content = "reason", rename_all = "snake_case")]
pub enum Grade {
    Pass,
    Fail(String),
}

impl Grade {
    pub fn is_pass(&self) -> bool {
        matches!(self, Grade::Pass)
    }
}

#[derive(Debug, Error)]
pub enum GradeError {
    #[error("unreadable artifact {path}: {reason}")]
    UnreadableArtifact { path: String, reason: String },
}

fn unreadable(p: &Path, reason: impl ToString) -> GradeError {
    GradeError::UnreadableArtifact { path: p.display().to_string(), reason: reason.to_string() }
}

/// Compares an actual artifact with the expected one, by file extension.
/// A missing or unreadable actual file is a failure; an unreadable expected
/// file is an error.
pub fn grade_output(expected: &Path, actual: &Path) -> Result<Grade, GradeError> {
    if !expected.is_file() {
        return Err(unreadable(expected, "expected artifact does not exist"));
    }
    if !actual.is_file() {
        return Ok(Grade::Fail(format!("{} was not produced", actual.display())));
    }
    let ext = expected.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "shp" => grade_shapefile(expected, actual),
        "csv" => grade_csv(expected, actual),
        "png" => grade_image(expected, actual),
        _ => {
            let a = std::fs::read(expected).map_err(|e| unreadable(expected, e))?;
            let b = std::fs::read(actual).map_err(|e| unreadable(actual, e))?;
            Ok(if a == b { Grade::Pass } else { Grade::Fail("contents differ".into()) })
        }
    }
}

fn coords_close(a: &[Coord], b: &[Coord]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, q)| (p.x - q.x).abs() <= COORD_TOLERANCE && (p.y - q.y).abs() <= COORD_TOLERANCE)
}

pub fn geometries_close(a: &Geometry, b: &Geometry) -> bool {
    match (a, b) {
        (Geometry::Null, Geometry::Null) => true,
        (Geometry::Point(p), Geometry::Point(q)) => coords_close(&[*p], &[*q]),
        (Geometry::MultiPoint(p), Geometry::MultiPoint(q)) => coords_close(p, q),
        (Geometry::PolyLine(p), Geometry::PolyLine(q)) | (Geometry::Polygon(p), Geometry::Polygon(q)) => {
            p.len() == q.len() && p.iter().zip(q).all(|(r, s)| coords_close(r, s))
        }
        _ => false,
    }
}

fn features_match(d: &Dataset, a: &Feature, b: &Feature) -> bool {
    geometries_close(&a.geometry, &b.geometry)
        && d.fields().iter().enumerate().all(|(i, fd)| values_equal_as_stored(fd, &a.attributes[i], &b.attributes[i]))
}

/// Unordered feature comparison; `expected` and `actual` must share the
/// shape kind and field layout.
pub fn compare_datasets(expected: &Dataset, actual: &Dataset) -> Grade {
    if expected.shape_kind() != actual.shape_kind() {
        return Grade::Fail(format!("shape kind {} != {}", actual.shape_kind(), expected.shape_kind()));
    }
    if expected.fields() != actual.fields() {
        let names = |d: &Dataset| d.fields().iter().map(|f| f.name.clone()).collect::<Vec<_>>().join(",");
        return Grade::Fail(format!("fields [{}] != [{}]", names(actual), names(expected)));
    }
    if expected.len() != actual.len() {
        return Grade::Fail(format!("{} features, expected {}", actual.len(), expected.len()));
    }
    let mut used = vec![false; actual.len()];
    for (i, e) in expected.features().iter().enumerate() {
        let hit = actual.features().iter().enumerate().position(|(j, a)| !used[j] && features_match(expected, e, a));
        match hit {
            Some(j) => used[j] = true,
            None => return Grade::Fail(format!("expected feature {i} has no match")),
        }
    }
    Grade::Pass
}

fn grade_shapefile(expected: &Path, actual: &Path) -> Result<Grade, GradeError> {
    let e = read_dataset(expected).map_err(|err| unreadable(expected, err))?;
    let a = match read_dataset(actual) {
        Ok(a) => a,
        Err(err) => return Ok(Grade::Fail(format!("cannot read output: {err}"))),
    };
    Ok(compare_datasets(&e, &a))
}

fn csv_rows(p: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(p).map_err(|e| e.to_string())?;
    let header = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| e.to_string())?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn grade_csv(expected: &Path, actual: &Path) -> Result<Grade, GradeError> {
    let (eh, mut er) = csv_rows(expected).map_err(|e| unreadable(expected, e))?;
    let (ah, mut ar) = match csv_rows(actual) {
        Ok(x) => x,
        Err(e) => return Ok(Grade::Fail(format!("cannot read output: {e}"))),
    };
    if eh != ah {
        return Ok(Grade::Fail(format!("header {ah:?} != {eh:?}")));
    }
    er.sort();
    ar.sort();
    if er != ar {
        return Ok(Grade::Fail(format!("row sets differ ({} vs {} rows)", ar.len(), er.len())));
    }
    Ok(Grade::Pass)
}

fn grade_image(expected: &Path, actual: &Path) -> Result<Grade, GradeError> {
    image::image_dimensions(expected).map_err(|e| unreadable(expected, e))?;
    Ok(match image::image_dimensions(actual) {
        Ok((w, h)) if w > 0 && h > 0 => Grade::Pass,
        Ok((w, h)) => Grade::Fail(format!("image is {w}x{h}")),
        Err(e) => Grade::Fail(format!("cannot read image: {e}")),
    })
}
