use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{BBox, Dataset};

/// Upper bound on [`DatasetSummary::to_text`] output, in bytes.
pub const SUMMARY_TEXT_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub name: String,
    pub kind: String,
    pub length: u8,
}

/// Compact description of a dataset used as agent context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub shape_kind: String,
    pub feature_count: usize,
    pub fields: Vec<FieldSummary>,
    pub bbox: BBox,
    pub crs_present: bool,
    pub sample_rows: Vec<Vec<String>>,
}

pub fn describe_dataset(d: &Dataset, sample_rows: usize) -> DatasetSummary {
    DatasetSummary {
        shape_kind: d.shape_kind().name().to_string(),
        feature_count: d.len(),
        fields: d
            .fields()
            .iter()
            .map(|f| FieldSummary { name: f.name.clone(), kind: f.kind.name().to_string(), length: f.byte_length })
            .collect(),
        bbox: d.bbox(),
        crs_present: d.crs_wkt().is_some(),
        sample_rows: d
            .features()
            .iter()
            .take(sample_rows)
            .map(|f| f.attributes.iter().map(ToString::to_string).collect())
            .collect(),
    }
}

impl DatasetSummary {
    /// One-line form used in tool results.
    pub fn one_line(&self) -> String {
        format!(
            "{} layer, {} features, fields [{}], bbox ({}, {}, {}, {})",
            self.shape_kind,
            self.feature_count,
            self.fields.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(", "),
            fmt_num(self.bbox.xmin),
            fmt_num(self.bbox.ymin),
            fmt_num(self.bbox.xmax),
            fmt_num(self.bbox.ymax),
        )
    }

    /// Multi-line text block, never longer than [`SUMMARY_TEXT_LIMIT`].
    /// Sample rows are dropped first, then trailing fields.
    pub fn to_text(&self) -> String {
        for rows in (0..=self.sample_rows.len()).rev() {
            let text = self.render(self.fields.len(), rows);
            if text.len() <= SUMMARY_TEXT_LIMIT {
                return text;
            }
        }
        for nfields in (0..self.fields.len()).rev() {
            let text = self.render(nfields, 0);
            if text.len() <= SUMMARY_TEXT_LIMIT {
                return text;
            }
        }
        let mut text = self.render(0, 0);
        let mut cut = SUMMARY_TEXT_LIMIT;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        text.truncate(cut);
        text
    }

    fn render(&self, nfields: usize, nrows: usize) -> String {
        let mut s = String::new();
        let b = &self.bbox;
        let _ = writeln!(s, "geometry: {}", self.shape_kind);
        let _ = writeln!(s, "features: {}", self.feature_count);
        let _ = writeln!(
            s,
            "bbox: {}, {}, {}, {}",
            fmt_num(b.xmin),
            fmt_num(b.ymin),
            fmt_num(b.xmax),
            fmt_num(b.ymax)
        );
        let _ = writeln!(s, "crs: {}", if self.crs_present { "defined" } else { "undefined" });
        let _ = write!(s, "fields:");
        for f in &self.fields[..nfields] {
            let _ = write!(s, " {}({} {})", f.name, f.kind, f.length);
        }
        if nfields < self.fields.len() {
            let _ = write!(s, " ... {} more", self.fields.len() - nfields);
        }
        s.push('\n');
        if nrows > 0 {
            let _ = writeln!(s, "sample rows:");
            for row in &self.sample_rows[..nrows] {
                let cells: Vec<&str> = row.iter().take(nfields).map(String::as_str).collect();
                let _ = writeln!(s, "  {}", cells.join(" | "));
            }
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coord, Feature, FieldDescriptor, FieldValue, Geometry, ShapeKind};

    fn points(n: usize, fields: usize) -> Dataset {
        let fds: Vec<_> = (0..fields).map(|i| FieldDescriptor::character(format!("FIELD{i}"), 100)).collect();
        Dataset::new(
            ShapeKind::Point,
            fds,
            (0..n)
                .map(|i| {
                    Feature::new(
                        Geometry::Point(Coord::new(i as f64, 0.0)),
                        (0..fields).map(|_| FieldValue::Text("x".repeat(60))).collect(),
                    )
                })
                .collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn kind_name_and_counts() {
        let s = describe_dataset(&points(100, 1), 5);
        assert_eq!(s.shape_kind, "Point");
        assert_eq!(s.feature_count, 100);
        assert_eq!(s.sample_rows.len(), 5);
    }

    #[test]
    fn empty_dataset() {
        let s = describe_dataset(&points(0, 1), 5);
        assert_eq!(s.feature_count, 0);
        assert!(s.sample_rows.is_empty());
    }

    #[test]
    fn text_is_capped() {
        let s = describe_dataset(&points(50, 40), 20);
        let text = s.to_text();
        assert!(text.len() <= SUMMARY_TEXT_LIMIT, "{}", text.len());
        assert!(text.contains("geometry: Point"));
        let small = describe_dataset(&points(3, 1), 5).to_text();
        assert!(small.contains("sample rows"));
    }
}
