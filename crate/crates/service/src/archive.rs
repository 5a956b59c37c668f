//! Zip upload extraction and shapefile-set packaging.

use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use zip::write::SimpleFileOptions;

use crate::error::ApiError;

/// Sibling extensions packed with a `.shp` artifact.
pub const SHAPEFILE_PARTS: [&str; 5] = ["shp", "shx", "dbf", "prj", "cpg"];

fn ext_lower(p: &Path) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Extracts `bytes` under `dest` and returns the `.shp` paths (relative to
/// `base`, '/'-separated) that have a matching `.dbf`.
pub fn extract_upload(bytes: &[u8], dest: &Path, base: &Path) -> Result<Vec<String>, ApiError> {
    let mut zip = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| ApiError::BadArchive(e.to_string()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for i in 0..zip.len() {
        let mut f = zip.by_index(i).map_err(|e| ApiError::BadArchive(e.to_string()))?;
        if f.is_dir() {
            continue;
        }
        let Some(rel) = f.enclosed_name() else {
            return Err(ApiError::BadArchive(format!("entry '{}' escapes the archive root", f.name())));
        };
        if rel.components().any(|c| c.as_os_str().to_string_lossy().starts_with("__MACOSX")) {
            continue;
        }
        let target = dest.join(&rel);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        let mut buf = Vec::new();
        f.read_to_end(&mut buf).map_err(|e| ApiError::BadArchive(e.to_string()))?;
        std::fs::write(&target, buf).map_err(|e| ApiError::Internal(e.to_string()))?;
        written.push(target);
    }
    let mut shps: Vec<String> = written
        .iter()
        .filter(|p| ext_lower(p) == "shp")
        .filter(|p| written.iter().any(|q| ext_lower(q) == "dbf" && q.with_extension("") == p.with_extension("")))
        .filter_map(|p| p.strip_prefix(base).ok())
        .map(|p| p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
        .collect();
    shps.sort();
    if shps.is_empty() {
        return Err(ApiError::NoShapefileFound);
    }
    Ok(shps)
}

/// Zips the file set of the shapefile at `shp`.
pub fn zip_shapefile_set(shp: &Path) -> std::io::Result<Vec<u8>> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    for ext in SHAPEFILE_PARTS {
        let p = shp.with_extension(ext);
        if !p.is_file() {
            continue;
        }
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        w.start_file(name, opts).map_err(std::io::Error::other)?;
        w.write_all(&std::fs::read(&p)?)?;
    }
    Ok(w.finish().map_err(std::io::Error::other)?.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zip_of(entries: &[(&str, &[u8])]) -> Vec<u8> {
        let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
        for (name, data) in entries {
            w.start_file(*name, SimpleFileOptions::default()).unwrap();
            w.write_all(data).unwrap();
        }
        w.finish().unwrap().into_inner()
    }

    #[test]
    fn finds_complete_sets_only() {
        let tmp = tempfile::tempdir().unwrap();
        let dest = tmp.path().join("input");
        let bytes = zip_of(&[("a.shp", b"x"), ("a.dbf", b"x"), ("b.shp", b"x"), ("sub/c.SHP", b"x"), ("sub/c.dbf", b"x")]);
        let got = extract_upload(&bytes, &dest, tmp.path()).unwrap();
        assert_eq!(got, ["input/a.shp", "input/sub/c.SHP"]);
    }

    #[test]
    fn dbf_alone_is_not_a_shapefile() {
        let tmp = tempfile::tempdir().unwrap();
        let bytes = zip_of(&[("a.dbf", b"x")]);
        assert!(matches!(extract_upload(&bytes, tmp.path(), tmp.path()), Err(ApiError::NoShapefileFound)));
    }

    #[test]
    fn garbage_is_a_bad_archive() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(extract_upload(b"PK not really", tmp.path(), tmp.path()), Err(ApiError::BadArchive(_))));
    }

    #[test]
    fn escaping_entries_are_refused() {
        let tmp = tempfile::tempdir().unwrap();
        let dest = tmp.path().join("in");
        let bytes = zip_of(&[("../evil.shp", b"x"), ("../evil.dbf", b"x")]);
        assert!(extract_upload(&bytes, &dest, tmp.path()).is_err());
        assert!(!tmp.path().join("evil.shp").exists());
    }
}
