use shapegpt_core::geometry::{
    self as geo, clip_dataset, clip_geometry, dispersion_stats, min_bounding_rect, nearest_connector, reproject, union_all,
    Crs, MbrMode,
};
use shapegpt_core::{BBox, Coord, Dataset, Feature, FieldDescriptor, FieldValue, Geometry, GeometryConfig, ShapeKind};

use super::{
    check_field_name, coord_field, field_index, groups, id_field, input, measure_field, merge_fields, num, or_null,
    require_kind,
};
use crate::invoke::{Args, ExecError};
use crate::workspace::Workspace;

const POLYGON: &[ShapeKind] = &[ShapeKind::Polygon];
const ANY: &[ShapeKind] = &[ShapeKind::Point, ShapeKind::MultiPoint, ShapeKind::PolyLine, ShapeKind::Polygon];

fn crs(d: &Dataset) -> Option<String> {
    d.crs_wkt().map(String::from)
}

fn build(kind: ShapeKind, fields: Vec<FieldDescriptor>, features: Vec<Feature>, crs: Option<String>) -> Result<Dataset, ExecError> {
    Ok(Dataset::new(kind, fields, features, crs)?)
}

/// Applies `f` to every non-null geometry, keeping attributes.
fn per_feature(
    d: &Dataset,
    kind: ShapeKind,
    mut f: impl FnMut(&Geometry) -> Result<Geometry, ExecError>,
) -> Result<Dataset, ExecError> {
    let features = d
        .features()
        .iter()
        .map(|ft| {
            let g = if ft.geometry.is_empty() { Geometry::Null } else { or_null(f(&ft.geometry)?) };
            Ok(Feature::new(g, ft.attributes.clone()))
        })
        .collect::<Result<Vec<_>, ExecError>>()?;
    build(kind, d.fields().to_vec(), features, crs(d))
}

fn detect_crs(d: &Dataset) -> Option<Crs> {
    let w = d.crs_wkt()?;
    if w.starts_with("PROJCS") {
        (w.contains("Mercator") || w.contains("3857")).then_some(Crs::WebMercator)
    } else if w.starts_with("GEOGCS") && w.contains("WGS") {
        Some(Crs::Wgs84)
    } else {
        None
    }
}

fn map_coords(g: &Geometry, f: &mut impl FnMut(Coord) -> Result<Coord, ExecError>) -> Result<Geometry, ExecError> {
    let mut parts = |ps: &Vec<Vec<Coord>>| -> Result<Vec<Vec<Coord>>, ExecError> {
        ps.iter().map(|p| p.iter().map(|c| f(*c)).collect()).collect()
    };
    Ok(match g {
        Geometry::Null => Geometry::Null,
        Geometry::Point(p) => Geometry::Point(f(*p)?),
        Geometry::MultiPoint(ps) => Geometry::MultiPoint(ps.iter().map(|c| f(*c)).collect::<Result<_, _>>()?),
        Geometry::PolyLine(ps) => Geometry::PolyLine(parts(ps)?),
        Geometry::Polygon(ps) => Geometry::Polygon(parts(ps)?),
    })
}

pub fn reproject_layer(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let to_tag = args.req_text("to_crs")?;
    let to = Crs::parse(to_tag).ok_or_else(|| ExecError::InvalidArgument(format!("unsupported CRS '{to_tag}'")))?;
    let from = match args.text("from_crs") {
        Some(t) => Crs::parse(t).ok_or_else(|| ExecError::InvalidArgument(format!("unsupported CRS '{t}'")))?,
        None => detect_crs(d)
            .ok_or_else(|| ExecError::InvalidArgument(format!("layer '{h}' has no recognizable CRS; pass from_crs")))?,
    };
    let mut f = |c: Coord| Ok(reproject(c, from.tag(), to.tag())?);
    let features = d
        .features()
        .iter()
        .map(|ft| Ok(Feature::new(map_coords(&ft.geometry, &mut f)?, ft.attributes.clone())))
        .collect::<Result<Vec<_>, ExecError>>()?;
    build(d.shape_kind(), d.fields().to_vec(), features, Some(to.wkt().to_string()))
}

pub fn buffer(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let dist = args.real("distance")?;
    per_feature(d, ShapeKind::Polygon, |g| Ok(geo::buffer(g, dist, cfg)?))
}

pub fn inward_buffer(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::Polygon, ShapeKind::PolyLine], "Polygon or closed PolyLine")?;
    let dist = args.real("distance")?;
    per_feature(d, ShapeKind::Polygon, |g| Ok(geo::inward_buffer(g, dist, cfg)?))
}

pub fn multi_ring_buffer(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let distances = args.real_list("distances")?;
    let taken: Vec<String> = d.fields().iter().map(|f| f.name.clone()).collect();
    let name = super::disambiguate(&check_field_name(args.req_text("field")?)?, &taken);
    let mut fields = d.fields().to_vec();
    fields.push(measure_field(&name));
    let mut features = Vec::new();
    for ft in d.features() {
        if ft.geometry.is_empty() {
            continue;
        }
        for (ring, dist) in geo::multi_ring_buffer(&ft.geometry, &distances, cfg)? {
            let mut attrs = ft.attributes.clone();
            attrs.push(num(dist));
            features.push(Feature::new(or_null(ring), attrs));
        }
    }
    build(ShapeKind::Polygon, fields, features, crs(d))
}

fn dissolve(d: &Dataset, cfg: &GeometryConfig) -> Result<Geometry, ExecError> {
    let polys: Vec<Geometry> = d.geometries().filter(|g| !g.is_empty()).cloned().collect();
    if polys.is_empty() {
        return Err(geo::GeometryError::EmptyInput.into());
    }
    Ok(union_all(&polys, cfg)?)
}

pub fn clip(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let (b, bh) = input(args, ws, "boundary")?;
    require_kind(b, &bh, POLYGON, "Polygon")?;
    Ok(clip_dataset(d, &dissolve(b, cfg)?, cfg)?)
}

fn bbox_hit(a: &Geometry, b: &Geometry, eps: f64) -> bool {
    match (a.bbox(), b.bbox()) {
        (Some(x), Some(y)) => x.buffered(eps).intersects(&y),
        _ => false,
    }
}

pub fn overlay_intersection(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let (o, oh) = input(args, ws, "overlay")?;
    require_kind(o, &oh, POLYGON, "Polygon")?;
    let fields = merge_fields(d.fields(), o.fields());
    let mut features = Vec::new();
    for a in d.features() {
        for b in o.features() {
            if !bbox_hit(&a.geometry, &b.geometry, cfg.snap_epsilon) {
                continue;
            }
            let piece = clip_geometry(&a.geometry, &b.geometry, cfg)?;
            if !piece.is_empty() {
                let attrs = a.attributes.iter().chain(&b.attributes).cloned().collect();
                features.push(Feature::new(piece, attrs));
            }
        }
    }
    build(d.shape_kind(), fields, features, crs(d))
}

pub fn spatial_join(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let (j, _) = input(args, ws, "join")?;
    let predicate = args.req_text("predicate")?;
    let keep_all = args.boolean("keep_all");
    let fields = merge_fields(d.fields(), j.fields());
    let blanks: Vec<FieldValue> = j.fields().iter().map(FieldDescriptor::null_value).collect();
    let mut features = Vec::new();
    for a in d.features() {
        let mut hit = None;
        for b in j.features() {
            if !bbox_hit(&a.geometry, &b.geometry, cfg.snap_epsilon) {
                continue;
            }
            let ok = match predicate {
                "contains" => geo::contains(&a.geometry, &b.geometry, cfg)?,
                "within" => geo::within(&a.geometry, &b.geometry, cfg)?,
                _ => geo::intersects(&a.geometry, &b.geometry, cfg)?,
            };
            if ok {
                hit = Some(b);
                break;
            }
        }
        let extra = match hit {
            Some(b) => &b.attributes,
            None if keep_all => &blanks,
            None => continue,
        };
        features.push(Feature::new(a.geometry.clone(), a.attributes.iter().chain(extra).cloned().collect()));
    }
    build(d.shape_kind(), fields, features, crs(d))
}

pub fn voronoi_points(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::Point, ShapeKind::MultiPoint], "Point or MultiPoint")?;
    let live: Vec<usize> = (0..d.len()).filter(|&i| !d.features()[i].geometry.is_empty()).collect();
    let cells = if d.shape_kind() == ShapeKind::Point {
        let seeds: Vec<Coord> = live.iter().flat_map(|&i| d.features()[i].geometry.coords()).collect();
        geo::voronoi_points(&seeds, d.bbox(), cfg)?
            .into_iter()
            .map(|c| (c.polygon, live[c.source]))
            .collect::<Vec<_>>()
    } else {
        let geoms: Vec<Geometry> = d.geometries().cloned().collect();
        geo::voronoi_geometries(&geoms, d.bbox(), cfg)?.into_iter().map(|c| (c.polygon, c.source)).collect()
    };
    let features = cells.into_iter().map(|(g, i)| Feature::new(g, d.features()[i].attributes.clone())).collect();
    build(ShapeKind::Polygon, d.fields().to_vec(), features, crs(d))
}

pub fn voronoi_features(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let handles = args.text_list("layers")?;
    if handles.is_empty() {
        return Err(ExecError::InvalidArgument("layers is empty".into()));
    }
    let mut geoms = Vec::new();
    let mut origin = Vec::new();
    let mut extent: Option<BBox> = None;
    let mut crs_wkt = None;
    for h in &handles {
        let d = ws.layer(h)?;
        crs_wkt = crs_wkt.or_else(|| crs(d));
        if !d.is_empty() && d.geometries().any(|g| !g.is_empty()) {
            extent = Some(extent.map_or(d.bbox(), |e| e.union(&d.bbox())));
        }
        for (i, g) in d.geometries().enumerate() {
            geoms.push(g.clone());
            origin.push((h.to_string(), i));
        }
    }
    let extent = extent.ok_or(geo::GeometryError::EmptyInput)?;
    let cells = geo::voronoi_geometries(&geoms, extent, cfg)?;
    let fields = vec![FieldDescriptor::character("LAYER", 32), id_field("SRC_FID")];
    let features = cells
        .into_iter()
        .map(|c| {
            let (layer, fid) = &origin[c.source];
            Feature::new(c.polygon, vec![FieldValue::Text(layer.clone()), num(*fid as f64)])
        })
        .collect();
    build(ShapeKind::Polygon, fields, features, crs_wkt)
}

fn group_field(args: &Args, d: &Dataset, h: &str) -> Result<Option<usize>, ExecError> {
    args.text("group_field").map(|n| field_index(d, h, n)).transpose()
}

fn group_coords(d: &Dataset, members: &[usize]) -> Vec<Coord> {
    members.iter().flat_map(|&i| d.features()[i].geometry.coords()).collect()
}

pub fn minimum_bounding_rectangle(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let gf = group_field(args, d, &h)?;
    let mode = MbrMode::parse(args.req_text("mode")?).unwrap_or(MbrMode::MinArea);
    let mut fields: Vec<FieldDescriptor> = gf.map(|i| d.fields()[i].clone()).into_iter().collect();
    let taken: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
    fields.push(measure_field(&super::disambiguate("MBR_AREA", &taken)));
    fields.push(measure_field(&super::disambiguate("MBR_ANGLE", &taken)));
    let mut features = Vec::new();
    for (key, members) in groups(d, gf) {
        let pts = group_coords(d, &members);
        if pts.is_empty() {
            continue;
        }
        let r = min_bounding_rect(&pts, mode)?;
        let mut attrs: Vec<FieldValue> = key.into_iter().collect();
        attrs.push(num(r.area));
        attrs.push(num(r.angle_deg));
        // a zero-area rectangle is not a valid polygon ring
        let g = if r.degenerate { Geometry::Null } else { r.polygon };
        features.push(Feature::new(g, attrs));
    }
    build(ShapeKind::Polygon, fields, features, crs(d))
}

pub fn vertices_to_points(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::PolyLine, ShapeKind::Polygon], "PolyLine or Polygon")?;
    let fields = merge_fields(d.fields(), &[id_field("SRC_FID"), id_field("VERTEX_ID")]);
    let mut features = Vec::new();
    for (fid, ft) in d.features().iter().enumerate() {
        if ft.geometry.is_empty() {
            continue;
        }
        for (k, p) in geo::vertices_to_points(&ft.geometry)?.into_iter().enumerate() {
            let mut attrs = ft.attributes.clone();
            attrs.push(num(fid as f64));
            attrs.push(num(k as f64));
            features.push(Feature::new(Geometry::Point(p), attrs));
        }
    }
    build(ShapeKind::Point, fields, features, crs(d))
}

pub fn lines_to_polygons(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::PolyLine], "PolyLine")?;
    per_feature(d, ShapeKind::Polygon, |g| Ok(geo::lines_to_polygons(g, cfg.snap_epsilon)?))
}

pub fn polygons_to_lines(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, POLYGON, "Polygon")?;
    per_feature(d, ShapeKind::PolyLine, |g| Ok(geo::polygons_to_lines(g)?))
}

pub fn points_to_line(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, &[ShapeKind::Point], "Point")?;
    let gf = group_field(args, d, &h)?;
    let of = args.text("order_field").map(|n| field_index(d, &h, n)).transpose()?;
    let mut fields = vec![id_field("LINE_ID")];
    fields.extend(gf.map(|i| d.fields()[i].clone()));
    let mut features = Vec::new();
    for (n, (key, mut members)) in groups(d, gf).into_iter().enumerate() {
        members.retain(|&i| !d.features()[i].geometry.is_empty());
        if let Some(oi) = of {
            let value = |i: usize| &d.features()[i].attributes[oi];
            members.sort_by(|&a, &b| match (value(a).as_f64(), value(b).as_f64()) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                _ => value(a).to_string().cmp(&value(b).to_string()),
            });
        }
        let mut path: Vec<Coord> = Vec::new();
        for p in group_coords(d, &members) {
            if path.last().map_or(true, |q| q.distance(&p) > cfg.snap_epsilon) {
                path.push(p);
            }
        }
        if path.len() < 2 {
            return Err(geo::GeometryError::DegenerateLine.into());
        }
        let mut attrs = vec![num((n + 1) as f64)];
        attrs.extend(key);
        features.push(Feature::new(Geometry::PolyLine(vec![path]), attrs));
    }
    build(ShapeKind::PolyLine, fields, features, crs(d))
}

pub fn split_polygons_by_lines(args: &Args, ws: &Workspace, cfg: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, POLYGON, "Polygon")?;
    let (l, lh) = input(args, ws, "lines")?;
    require_kind(l, &lh, &[ShapeKind::PolyLine], "PolyLine")?;
    let blades: Vec<Geometry> = l.geometries().filter(|g| !g.is_empty()).cloned().collect();
    let mut features = Vec::new();
    for ft in d.features() {
        if ft.geometry.is_empty() {
            continue;
        }
        let near: Vec<Geometry> =
            blades.iter().filter(|b| bbox_hit(&ft.geometry, b, cfg.snap_epsilon)).cloned().collect();
        for piece in geo::split_polygon_by_lines(&ft.geometry, &near, cfg)? {
            features.push(Feature::new(piece, ft.attributes.clone()));
        }
    }
    build(ShapeKind::Polygon, d.fields().to_vec(), features, crs(d))
}

pub fn nearest_connector_lines(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, _) = input(args, ws, "layer")?;
    let (t, _) = input(args, ws, "target")?;
    let fields = vec![id_field("SRC_FID"), id_field("NEAR_FID"), measure_field("DISTANCE")];
    let mut features = Vec::new();
    for (i, a) in d.features().iter().enumerate() {
        if a.geometry.is_empty() {
            continue;
        }
        let mut best: Option<(usize, geo::Connector)> = None;
        for (j, b) in t.features().iter().enumerate() {
            if b.geometry.is_empty() {
                continue;
            }
            let c = nearest_connector(&a.geometry, &b.geometry)?;
            if best.as_ref().map_or(true, |(_, bc)| c.distance < bc.distance) {
                best = Some((j, c));
            }
        }
        let Some((j, c)) = best else { return Err(geo::GeometryError::EmptyInput.into()) };
        features.push(Feature::new(c.line, vec![num(i as f64), num(j as f64), num(c.distance)]));
    }
    build(ShapeKind::PolyLine, fields, features, crs(d))
}

pub fn cluster_dispersion(args: &Args, ws: &Workspace, _: &GeometryConfig) -> Result<Dataset, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    require_kind(d, &h, ANY, "any geometry")?;
    let gf = group_field(args, d, &h)?;
    let mut fields: Vec<FieldDescriptor> = gf.map(|i| d.fields()[i].clone()).into_iter().collect();
    for (name, fd) in [
        ("CENTER_X", coord_field as fn(&str) -> FieldDescriptor),
        ("CENTER_Y", coord_field),
        ("STD_DIST", measure_field),
        ("ROTATION", measure_field),
        ("SIGMA_MAJ", measure_field),
        ("SIGMA_MIN", measure_field),
        ("N_POINTS", id_field),
    ] {
        let taken: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
        fields.push(fd(&super::disambiguate(name, &taken)));
    }
    let mut features = Vec::new();
    for (key, members) in groups(d, gf) {
        let pts = group_coords(d, &members);
        if pts.is_empty() {
            continue;
        }
        let s = dispersion_stats(&pts)?;
        let mut attrs: Vec<FieldValue> = key.into_iter().collect();
        attrs.extend([
            num(s.mean_center.x),
            num(s.mean_center.y),
            num(s.standard_distance),
            num(s.orientation_deg),
            num(s.sigma_major),
            num(s.sigma_minor),
            num(pts.len() as f64),
        ]);
        features.push(Feature::new(Geometry::Point(s.mean_center), attrs));
    }
    build(ShapeKind::Point, fields, features, crs(d))
}
