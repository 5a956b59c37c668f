//! dBASE III (level 5) attribute tables.
//!
//! Text is stored as Latin-1. Numeric and float cells are right-justified and
//! space padded; character cells are left-justified.

use chrono::{Datelike, NaiveDate, Utc};

use crate::model::{FieldDescriptor, FieldKind, FieldValue};

use super::ShapefileError;

pub const VERSION: u8 = 0x03;
const HEADER_TERMINATOR: u8 = 0x0D;
const EOF_MARKER: u8 = 0x1A;
const DELETED: u8 = 0x2A;

/// One decoded record; `deleted` mirrors the leading `*` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub deleted: bool,
    pub values: Vec<FieldValue>,
}

/// Formats one cell exactly as it is stored on disk.
pub fn format_value(fd: &FieldDescriptor, value: &FieldValue) -> Result<Vec<u8>, ShapefileError> {
    let width = fd.byte_length as usize;
    let overflow = || ShapefileError::FieldOverflow { field: fd.name.clone(), value: value.to_string(), width };
    let text = match (fd.kind, value) {
        (FieldKind::Character, FieldValue::Text(s)) => {
            let bytes = encode_latin1(s).ok_or_else(|| ShapefileError::UnencodableText {
                field: fd.name.clone(),
                value: s.clone(),
            })?;
            if bytes.len() > width {
                return Err(overflow());
            }
            let mut cell = bytes;
            cell.resize(width, b' ');
            return Ok(cell);
        }
        (FieldKind::Numeric | FieldKind::Float, FieldValue::Number(None)) => String::new(),
        (FieldKind::Numeric | FieldKind::Float, FieldValue::Number(Some(v))) => {
            if !v.is_finite() {
                return Err(overflow());
            }
            let s = format!("{:.*}", fd.decimal_count as usize, v);
            // "-0" and "-0.0" are stored unsigned
            if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        (FieldKind::Logical, FieldValue::Logical(b)) => match b {
            Some(true) => "T".into(),
            Some(false) => "F".into(),
            None => "?".into(),
        },
        (FieldKind::Date, FieldValue::Date(d)) => match d {
            Some(d) => format!("{:04}{:02}{:02}", d.year(), d.month(), d.day()),
            None => String::new(),
        },
        _ => {
            return Err(ShapefileError::MalformedRecord(format!(
                "value {value:?} does not match field '{}' of kind {}",
                fd.name,
                fd.kind.name()
            )))
        }
    };
    if text.len() > width {
        return Err(overflow());
    }
    let mut cell = vec![b' '; width - text.len()];
    cell.extend_from_slice(text.as_bytes());
    Ok(cell)
}

pub fn encode_table(fields: &[FieldDescriptor], rows: &[&[FieldValue]]) -> Result<Vec<u8>, ShapefileError> {
    let header_len = 32 + 32 * fields.len() + 1;
    let record_len = 1 + fields.iter().map(|f| f.byte_length as usize).sum::<usize>();
    if header_len > u16::MAX as usize || record_len > u16::MAX as usize {
        return Err(ShapefileError::MalformedRecord("too many fields for a dBASE header".into()));
    }
    let mut out = Vec::with_capacity(header_len + record_len * rows.len() + 1);
    let today = Utc::now().date_naive();
    out.push(VERSION);
    out.push((today.year() - 1900).clamp(0, 255) as u8);
    out.push(today.month() as u8);
    out.push(today.day() as u8);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(&(record_len as u16).to_le_bytes());
    out.extend_from_slice(&[0u8; 20]);
    for f in fields {
        let mut name = [0u8; 11];
        name[..f.name.len()].copy_from_slice(f.name.as_bytes());
        out.extend_from_slice(&name);
        out.push(f.kind.code());
        out.extend_from_slice(&[0u8; 4]);
        out.push(f.byte_length);
        out.push(f.decimal_count);
        out.extend_from_slice(&[0u8; 14]);
    }
    out.push(HEADER_TERMINATOR);
    for row in rows {
        out.push(b' ');
        for (fd, v) in fields.iter().zip(row.iter()) {
            out.extend_from_slice(&format_value(fd, v)?);
        }
    }
    out.push(EOF_MARKER);
    Ok(out)
}

pub fn decode_table(buf: &[u8]) -> Result<(Vec<FieldDescriptor>, Vec<Record>), ShapefileError> {
    let bad = |what: String| ShapefileError::MalformedRecord(format!("dbf: {what}"));
    if buf.len() < 32 {
        return Err(bad("header truncated".into()));
    }
    let nrecords = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes")) as usize;
    let header_len = u16::from_le_bytes([buf[8], buf[9]]) as usize;
    let record_len = u16::from_le_bytes([buf[10], buf[11]]) as usize;
    if header_len < 33 || buf.len() < header_len {
        return Err(bad("header truncated".into()));
    }
    let mut fields = Vec::new();
    let mut at = 32;
    while at + 32 <= header_len && buf[at] != HEADER_TERMINATOR {
        let d = &buf[at..at + 32];
        let name_end = d[..11].iter().position(|&b| b == 0).unwrap_or(11);
        let name = String::from_utf8_lossy(&d[..name_end]).trim().to_string();
        let kind = FieldKind::from_code(d[11])
            .ok_or_else(|| bad(format!("unsupported field type '{}'", d[11] as char)))?;
        fields.push(FieldDescriptor::new(name, kind, d[16], d[17]));
        at += 32;
    }
    let expected_len = 1 + fields.iter().map(|f| f.byte_length as usize).sum::<usize>();
    if expected_len != record_len {
        return Err(bad(format!("record length {record_len} does not match fields ({expected_len})")));
    }
    let mut records = Vec::with_capacity(nrecords);
    for i in 0..nrecords {
        let start = header_len + i * record_len;
        let rec = buf
            .get(start..start + record_len)
            .ok_or_else(|| bad(format!("record {} truncated", i + 1)))?;
        let mut values = Vec::with_capacity(fields.len());
        let mut off = 1;
        for fd in &fields {
            let cell = &rec[off..off + fd.byte_length as usize];
            values.push(parse_cell(fd, cell));
            off += fd.byte_length as usize;
        }
        records.push(Record { deleted: rec[0] == DELETED, values });
    }
    Ok((fields, records))
}

fn parse_cell(fd: &FieldDescriptor, cell: &[u8]) -> FieldValue {
    let text: String = cell.iter().map(|&b| b as char).collect();
    match fd.kind {
        FieldKind::Character => FieldValue::Text(text.trim_end_matches([' ', '\0']).to_string()),
        FieldKind::Numeric | FieldKind::Float => FieldValue::Number(text.trim().parse::<f64>().ok()),
        FieldKind::Logical => FieldValue::Logical(match text.trim() {
            "T" | "t" | "Y" | "y" => Some(true),
            "F" | "f" | "N" | "n" => Some(false),
            _ => None,
        }),
        FieldKind::Date => FieldValue::Date(NaiveDate::parse_from_str(text.trim(), "%Y%m%d").ok()),
    }
}

fn encode_latin1(s: &str) -> Option<Vec<u8>> {
    s.chars().map(|c| u8::try_from(u32::from(c)).ok()).collect()
}
