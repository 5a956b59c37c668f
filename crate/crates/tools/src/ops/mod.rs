//! Tool implementations over workspace layers.

mod attributes;
mod geoprocess;
mod output;
mod render;

use std::collections::HashMap;

use shapegpt_core::shapefile::{describe_dataset, read_dataset};
use shapegpt_core::{Dataset, Feature, FieldDescriptor, FieldValue, Geometry, GeometryConfig, ShapeKind};

use crate::invoke::{store_layer, Args, ExecError, ToolResult};
use crate::workspace::Workspace;

pub use render::{render_layers, CANVAS_SIZE};

type Processor = fn(&Args, &Workspace, &GeometryConfig) -> Result<Dataset, ExecError>;

fn processor(name: &str) -> Option<Processor> {
    Some(match name {
        "rename_field" => attributes::rename_field,
        "add_field" => attributes::add_field,
        "filter_features" => attributes::filter_features,
        "add_xy_fields" => attributes::add_xy_fields,
        "calculate_length" => attributes::calculate_length,
        "reproject_layer" => geoprocess::reproject_layer,
        "buffer" => geoprocess::buffer,
        "inward_buffer" => geoprocess::inward_buffer,
        "multi_ring_buffer" => geoprocess::multi_ring_buffer,
        "clip" => geoprocess::clip,
        "overlay_intersection" => geoprocess::overlay_intersection,
        "spatial_join" => geoprocess::spatial_join,
        "voronoi_points" => geoprocess::voronoi_points,
        "voronoi_features" => geoprocess::voronoi_features,
        "minimum_bounding_rectangle" => geoprocess::minimum_bounding_rectangle,
        "vertices_to_points" => geoprocess::vertices_to_points,
        "lines_to_polygons" => geoprocess::lines_to_polygons,
        "polygons_to_lines" => geoprocess::polygons_to_lines,
        "points_to_line" => geoprocess::points_to_line,
        "split_polygons_by_lines" => geoprocess::split_polygons_by_lines,
        "nearest_connector_lines" => geoprocess::nearest_connector_lines,
        "cluster_dispersion" => geoprocess::cluster_dispersion,
        _ => return None,
    })
}

pub(crate) fn dispatch(name: &str, args: &Args, ws: &mut Workspace, cfg: &GeometryConfig) -> Result<ToolResult, ExecError> {
    if let Some(f) = processor(name) {
        let d = f(args, ws, cfg)?;
        return Ok(store_layer(ws, args.text("output"), name, d, ""));
    }
    match name {
        "read_shapefile" => {
            let rel = args.req_text("path")?;
            let path = ws.resolve(rel)?;
            let d = read_dataset(&path)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("layer").to_string();
            let handle = args.text("alias").map(str::to_string).unwrap_or(stem);
            Ok(store_layer(ws, Some(&handle), name, d, &format!("read {rel}")))
        }
        "describe_shapefile" => {
            let d = ws.layer(args.req_text("layer")?)?;
            let rows = args.integer("sample_rows").unwrap_or(5).max(0) as usize;
            Ok(ToolResult::ok(None, describe_dataset(d, rows).to_text()))
        }
        "save_shapefile" => output::save_shapefile(args, ws),
        "save_table_csv" => output::save_table_csv(args, ws),
        "render_map_image" => output::render_map_image(args, ws),
        other => Err(ExecError::InvalidArgument(format!("no implementation for '{other}'"))),
    }
}

// Shared helpers.

pub(crate) fn input<'w>(args: &Args, ws: &'w Workspace, param: &str) -> Result<(&'w Dataset, String), ExecError> {
    let h = args.req_text(param)?;
    Ok((ws.layer(h)?, h.to_string()))
}

pub(crate) fn require_kind(d: &Dataset, handle: &str, allowed: &[ShapeKind], expected: &'static str) -> Result<(), ExecError> {
    if allowed.contains(&d.shape_kind()) {
        Ok(())
    } else {
        Err(ExecError::WrongLayerKind { layer: handle.to_string(), expected, found: d.shape_kind().name() })
    }
}

/// Exact match first, then case-insensitive.
pub(crate) fn field_index(d: &Dataset, handle: &str, name: &str) -> Result<usize, ExecError> {
    d.field_index(name)
        .or_else(|| d.fields().iter().position(|f| f.name.eq_ignore_ascii_case(name)))
        .ok_or_else(|| ExecError::UnknownField { layer: handle.to_string(), field: name.to_string() })
}

pub(crate) fn check_field_name(name: &str) -> Result<String, ExecError> {
    let n = name.trim();
    if n.is_empty() || n.len() > 10 || !n.is_ascii() || n.contains('\0') {
        return Err(ExecError::InvalidArgument(format!("field name '{name}' must be 1-10 ASCII characters")));
    }
    Ok(n.to_string())
}

/// `name`, or `name` shortened and suffixed `_2`, `_3`, ... until it is not
/// in `taken` (case-insensitively) and fits 10 bytes.
pub(crate) fn disambiguate(name: &str, taken: &[String]) -> String {
    let clash = |c: &str| taken.iter().any(|t| t.eq_ignore_ascii_case(c));
    if !clash(name) {
        return name.to_string();
    }
    for k in 2usize.. {
        let suffix = format!("_{k}");
        let keep = name.len().min(10 - suffix.len());
        let candidate = format!("{}{suffix}", &name[..keep]);
        if !clash(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

/// Left fields followed by right fields, renamed where they collide.
pub(crate) fn merge_fields(left: &[FieldDescriptor], right: &[FieldDescriptor]) -> Vec<FieldDescriptor> {
    let mut out = left.to_vec();
    for f in right {
        let taken: Vec<String> = out.iter().map(|f| f.name.clone()).collect();
        let mut g = f.clone();
        g.name = disambiguate(&f.name, &taken);
        out.push(g);
    }
    out
}

/// Replaces the column named like `fd` or appends a new one.
pub(crate) fn set_column(fields: &mut Vec<FieldDescriptor>, rows: &mut [Feature], fd: FieldDescriptor, values: Vec<FieldValue>) {
    match fields.iter().position(|f| f.name.eq_ignore_ascii_case(&fd.name)) {
        Some(i) => {
            fields[i] = fd;
            for (r, v) in rows.iter_mut().zip(values) {
                r.attributes[i] = v;
            }
        }
        None => {
            fields.push(fd);
            for (r, v) in rows.iter_mut().zip(values) {
                r.attributes.push(v);
            }
        }
    }
}

pub(crate) fn measure_field(name: &str) -> FieldDescriptor {
    FieldDescriptor::numeric(name, 19, 4)
}

pub(crate) fn id_field(name: &str) -> FieldDescriptor {
    FieldDescriptor::numeric(name, 10, 0)
}

pub(crate) fn coord_field(name: &str) -> FieldDescriptor {
    FieldDescriptor::numeric(name, 19, 8)
}

pub(crate) fn num(v: f64) -> FieldValue {
    FieldValue::Number(Some(v))
}

/// Empty results collapse to `Null`.
pub(crate) fn or_null(g: Geometry) -> Geometry {
    if g.is_empty() {
        Geometry::Null
    } else {
        g
    }
}

/// Feature indices grouped by the formatted value of a field, in order of
/// first appearance. Without a field every feature is in one group.
pub(crate) fn groups(d: &Dataset, field: Option<usize>) -> Vec<(Option<FieldValue>, Vec<usize>)> {
    let Some(fi) = field else { return vec![(None, (0..d.len()).collect())] };
    let mut order: Vec<(Option<FieldValue>, Vec<usize>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, f) in d.features().iter().enumerate() {
        let v = &f.attributes[fi];
        let key = v.to_string();
        let slot = *index.entry(key).or_insert_with(|| {
            order.push((Some(v.clone()), Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(i);
    }
    order
}
