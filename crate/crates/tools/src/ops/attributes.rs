use std::cmp::Ordering;

use chrono::NaiveDate;

use shapegpt_core::geometry::polyline_length;
use shapegpt_core::{Dataset, FieldDescriptor, FieldKind, FieldValue, Geometry, GeometryConfig, ShapeKind};

use super::{check_field_name, coord_field, field_index, id_field, input, measure_field, num, require_kind, set_column};
use crate::invoke::{Args, ExecError};
use crate::workspace::Workspace;

fn rebuild(d: &Dataset, fields: Vec<FieldDescriptor>, features: Vec<shapegpt_core::Feature>) -> Result<Dataset, ExecError> {
    Ok(Dataset::new(d.shape_kind(), fields, features, d.crs_wkt().map(String::from))?)
}

pub fn rename_field(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let i = field_index(d, &h, args.req_text("old_name")?)?;
    let new = check_field_name(args.req_text("new_name")?)?;
    if d.fields().iter().enumerate().any(|(j, f)| j != i && f.name.eq_ignore_ascii_case(&new)) {
        return Err(ExecError::InvalidArgument(format!("field '{new}' already exists")));
    }
    let mut fields = d.fields().to_vec();
    fields[i].name = new;
    rebuild(d, fields, d.features().to_vec())
}

fn parse_logical(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "t" | "true" | "y" | "yes" | "1" => Some(true),
        "f" | "false" | "n" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d").or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d")).ok()
}

fn parse_literal(fd: &FieldDescriptor, s: &str) -> Result<FieldValue, ExecError> {
    let bad = || ExecError::InvalidArgument(format!("'{s}' is not a valid {} value", fd.kind.name()));
    Ok(match fd.kind {
        FieldKind::Character => FieldValue::Text(s.to_string()),
        FieldKind::Numeric | FieldKind::Float => FieldValue::Number(Some(s.trim().parse().map_err(|_| bad())?)),
        FieldKind::Logical => FieldValue::Logical(Some(parse_logical(s).ok_or_else(bad)?)),
        FieldKind::Date => FieldValue::Date(Some(parse_date(s).ok_or_else(bad)?)),
    })
}

fn narrow(v: Option<i64>, what: &str) -> Result<Option<u8>, ExecError> {
    v.map(|n| u8::try_from(n).map_err(|_| ExecError::InvalidArgument(format!("{what} {n} out of range"))))
        .transpose()
}

pub fn add_field(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let name = check_field_name(args.req_text("name")?)?;
    if d.fields().iter().any(|f| f.name.eq_ignore_ascii_case(&name)) {
        return Err(ExecError::InvalidArgument(format!("field '{name}' already exists")));
    }
    let length = narrow(args.integer("length"), "length")?;
    let decimals = narrow(args.integer("decimals"), "decimals")?;
    let fd = match args.req_text("kind")? {
        "text" => FieldDescriptor::character(name, length.unwrap_or(50)),
        "integer" => FieldDescriptor::numeric(name, length.unwrap_or(10), 0),
        "real" => FieldDescriptor::numeric(name, length.unwrap_or(19), decimals.unwrap_or(4)),
        "logical" => FieldDescriptor::logical(name),
        _ => FieldDescriptor::date(name),
    };
    fd.validate()?;
    let value = match args.text("value") {
        Some(s) => parse_literal(&fd, s)?,
        None => fd.null_value(),
    };
    let mut fields = d.fields().to_vec();
    let mut features = d.features().to_vec();
    set_column(&mut fields, &mut features, fd, vec![value; d.len()]);
    rebuild(d, fields, features)
}

fn holds(ord: Option<Ordering>, cmp: &str) -> bool {
    let Some(o) = ord else { return cmp == "!=" };
    match cmp {
        "=" => o == Ordering::Equal,
        "!=" => o != Ordering::Equal,
        "<" => o == Ordering::Less,
        "<=" => o != Ordering::Greater,
        ">" => o == Ordering::Greater,
        _ => o != Ordering::Less,
    }
}

fn matches(fd: &FieldDescriptor, v: &FieldValue, cmp: &str, lit: &str) -> Result<bool, ExecError> {
    if cmp == "contains" {
        return Ok(v.to_string().contains(lit));
    }
    match (fd.kind, v) {
        (FieldKind::Character, FieldValue::Text(s)) => Ok(holds(Some(s.as_str().cmp(lit)), cmp)),
        (FieldKind::Logical, _) if !matches!(cmp, "=" | "!=") => {
            Err(ExecError::InvalidArgument(format!("logical field '{}' only supports = and !=", fd.name)))
        }
        _ => {
            let target = parse_literal(fd, lit)?;
            let ord = match (v, &target) {
                (FieldValue::Number(Some(a)), FieldValue::Number(Some(b))) => a.partial_cmp(b),
                (FieldValue::Logical(Some(a)), FieldValue::Logical(Some(b))) => Some(a.cmp(b)),
                (FieldValue::Date(Some(a)), FieldValue::Date(Some(b))) => Some(a.cmp(b)),
                _ => None,
            };
            Ok(holds(ord, cmp))
        }
    }
}

pub fn filter_features(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let i = field_index(d, &h, args.req_text("field")?)?;
    let (cmp, lit) = (args.req_text("comparator")?, args.req_text("value")?);
    let fd = &d.fields()[i];
    let mut kept = Vec::new();
    for f in d.features() {
        if matches(fd, &f.attributes[i], cmp, lit)? {
            kept.push(f.clone());
        }
    }
    rebuild(d, d.fields().to_vec(), kept)
}

pub fn add_xy_fields(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::Point], "Point")?;
    let (xn, yn) = (check_field_name(args.req_text("x_field")?)?, check_field_name(args.req_text("y_field")?)?);
    if xn.eq_ignore_ascii_case(&yn) {
        return Err(ExecError::InvalidArgument("x_field and y_field must differ".into()));
    }
    let coord = |g: &Geometry, pick: fn(&shapegpt_core::Coord) -> f64| match g {
        Geometry::Point(p) => FieldValue::Number(Some(pick(p))),
        _ => FieldValue::Number(None),
    };
    let xs = d.features().iter().map(|f| coord(&f.geometry, |p| p.x)).collect();
    let ys = d.features().iter().map(|f| coord(&f.geometry, |p| p.y)).collect();
    let mut fields = d.fields().to_vec();
    let mut features = d.features().to_vec();
    set_column(&mut fields, &mut features, coord_field(&xn), xs);
    set_column(&mut fields, &mut features, coord_field(&yn), ys);
    rebuild(d, fields, features)
}

pub fn calculate_length(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::PolyLine, ShapeKind::Polygon], "PolyLine or Polygon")?;
    let name = check_field_name(args.req_text("field")?)?;
    let lengths = d
        .features()
        .iter()
        .map(|f| match &f.geometry {
            Geometry::Null => Ok(FieldValue::Number(None)),
            g => Ok(num(polyline_length(g)?)),
        })
        .collect::<Result<Vec<_>, ExecError>>()?;
    let mut fields = d.fields().to_vec();
    let mut features = d.features().to_vec();
    if let Some(idn) = args.text("id_field") {
        let idn = check_field_name(idn)?;
        if idn.eq_ignore_ascii_case(&name) {
            return Err(ExecError::InvalidArgument("id_field and field must differ".into()));
        }
        let ids = (1..=d.len()).map(|i| num(i as f64)).collect();
        set_column(&mut fields, &mut features, id_field(&idn), ids);
    }
    set_column(&mut fields, &mut features, measure_field(&name), lengths);
    rebuild(d, fields, features)
}
