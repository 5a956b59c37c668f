//! `.shp` / `.shx` record encoding.
//!
//! Main file header (100 bytes):
//!
//! | offset | field        | endian |
//! |--------|--------------|--------|
//! | 0      | file code    | big    |
//! | 24     | file length  | big    |
//! | 28     | version      | little |
//! | 32     | shape type   | little |
//! | 36..68 | x/y bounds   | little |
//! | 68..100| z/m bounds   | little |
//!
//! Lengths and offsets are counted in 16-bit words.

use crate::model::{BBox, Coord, Geometry, ShapeKind};

use super::ShapefileError;

pub const FILE_CODE: i32 = 9994;
pub const VERSION: i32 = 1000;
pub const HEADER_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub file_length_words: i32,
    pub shape_code: i32,
    pub bbox: BBox,
}

pub fn write_header(out: &mut Vec<u8>, h: &Header) {
    out.extend_from_slice(&FILE_CODE.to_be_bytes());
    out.extend_from_slice(&[0u8; 20]);
    out.extend_from_slice(&h.file_length_words.to_be_bytes());
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&h.shape_code.to_le_bytes());
    for v in [h.bbox.xmin, h.bbox.ymin, h.bbox.xmax, h.bbox.ymax, 0.0, 0.0, 0.0, 0.0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn read_header(buf: &[u8]) -> Result<Header, ShapefileError> {
    if buf.len() < HEADER_LEN {
        return Err(ShapefileError::MalformedRecord("file shorter than the 100-byte header".into()));
    }
    let code = be_i32(buf, 0);
    if code != FILE_CODE {
        return Err(ShapefileError::BadMagic(code));
    }
    let shape_code = le_i32(buf, 32);
    Ok(Header {
        file_length_words: be_i32(buf, 24),
        shape_code,
        bbox: BBox::new(le_f64(buf, 36), le_f64(buf, 44), le_f64(buf, 52), le_f64(buf, 60)),
    })
}

/// Encodes the record content (shape type onwards) of one geometry.
pub fn encode_content(g: &Geometry) -> Vec<u8> {
    let mut out = Vec::new();
    match g {
        _ if g.is_empty() => out.extend_from_slice(&0i32.to_le_bytes()),
        Geometry::Null => unreachable!(),
        Geometry::Point(c) => {
            out.extend_from_slice(&ShapeKind::Point.code().to_le_bytes());
            push_coord(&mut out, *c);
        }
        Geometry::MultiPoint(pts) => {
            out.extend_from_slice(&ShapeKind::MultiPoint.code().to_le_bytes());
            push_bbox(&mut out, g.bbox().unwrap_or_default());
            out.extend_from_slice(&(pts.len() as i32).to_le_bytes());
            for c in pts {
                push_coord(&mut out, *c);
            }
        }
        Geometry::PolyLine(parts) | Geometry::Polygon(parts) => {
            let kind = g.kind().expect("non-null");
            out.extend_from_slice(&kind.code().to_le_bytes());
            push_bbox(&mut out, g.bbox().unwrap_or_default());
            let num_points: usize = parts.iter().map(Vec::len).sum();
            out.extend_from_slice(&(parts.len() as i32).to_le_bytes());
            out.extend_from_slice(&(num_points as i32).to_le_bytes());
            let mut start = 0i32;
            for p in parts {
                out.extend_from_slice(&start.to_le_bytes());
                start += p.len() as i32;
            }
            for c in parts.iter().flatten() {
                push_coord(&mut out, *c);
            }
        }
    }
    out
}

/// Decodes one record's content into a geometry. `expected` is the header
/// shape kind; records may only be that kind or null.
pub fn decode_content(buf: &[u8], expected: ShapeKind, record_no: usize) -> Result<Geometry, ShapefileError> {
    let bad = |what: &str| ShapefileError::MalformedRecord(format!("record {record_no}: {what}"));
    if buf.len() < 4 {
        return Err(bad("missing shape type"));
    }
    let code = le_i32(buf, 0);
    if code == 0 {
        return Ok(Geometry::Null);
    }
    let kind = ShapeKind::from_code(code).ok_or(ShapefileError::UnsupportedShapeKind(code))?;
    if kind != expected {
        return Err(bad(&format!("shape type {code} in a {expected} file")));
    }
    match kind {
        ShapeKind::Point => {
            need(buf, 20).map_err(|_| bad("truncated point"))?;
            Ok(Geometry::Point(read_coord(buf, 4)))
        }
        ShapeKind::MultiPoint => {
            need(buf, 40).map_err(|_| bad("truncated multipoint header"))?;
            let n = count(le_i32(buf, 36)).ok_or_else(|| bad("negative point count"))?;
            need(buf, 40 + 16 * n).map_err(|_| bad("truncated multipoint coordinates"))?;
            Ok(Geometry::MultiPoint((0..n).map(|i| read_coord(buf, 40 + 16 * i)).collect()))
        }
        ShapeKind::PolyLine | ShapeKind::Polygon => {
            need(buf, 44).map_err(|_| bad("truncated multipart header"))?;
            let nparts = count(le_i32(buf, 36)).ok_or_else(|| bad("negative part count"))?;
            let npoints = count(le_i32(buf, 40)).ok_or_else(|| bad("negative point count"))?;
            let pts_at = 44 + 4 * nparts;
            need(buf, pts_at + 16 * npoints).map_err(|_| bad("truncated multipart coordinates"))?;
            let mut starts = Vec::with_capacity(nparts + 1);
            for i in 0..nparts {
                let s = count(le_i32(buf, 44 + 4 * i)).ok_or_else(|| bad("negative part index"))?;
                starts.push(s);
            }
            starts.push(npoints);
            if starts.windows(2).any(|w| w[0] > w[1]) || starts.first().is_some_and(|&s| s != 0 && nparts > 0) {
                return Err(bad("part indices out of order"));
            }
            let parts: Vec<Vec<Coord>> = starts
                .windows(2)
                .map(|w| (w[0]..w[1]).map(|i| read_coord(buf, pts_at + 16 * i)).collect())
                .collect();
            Ok(if kind == ShapeKind::Polygon { Geometry::Polygon(parts) } else { Geometry::PolyLine(parts) })
        }
    }
}

fn count(v: i32) -> Option<usize> {
    usize::try_from(v).ok()
}

fn need(buf: &[u8], n: usize) -> Result<(), ()> {
    if buf.len() < n {
        Err(())
    } else {
        Ok(())
    }
}

fn push_coord(out: &mut Vec<u8>, c: Coord) {
    out.extend_from_slice(&c.x.to_le_bytes());
    out.extend_from_slice(&c.y.to_le_bytes());
}

fn push_bbox(out: &mut Vec<u8>, b: BBox) {
    for v in [b.xmin, b.ymin, b.xmax, b.ymax] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_coord(buf: &[u8], at: usize) -> Coord {
    Coord::new(le_f64(buf, at), le_f64(buf, at + 8))
}

pub fn be_i32(buf: &[u8], at: usize) -> i32 {
    i32::from_be_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

pub fn le_i32(buf: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn le_f64(buf: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"))
}
