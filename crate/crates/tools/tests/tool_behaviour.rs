use std::f64::consts::PI;

use serde_json::{json, Value};
use tempfile::TempDir;

use shapegpt_core::geometry::{polygon_area, polyline_length};
use shapegpt_core::shapefile::{read_dataset, write_dataset};
use shapegpt_core::{BBox, Coord, Dataset, Feature, FieldDescriptor, FieldValue, Geometry, GeometryConfig, ShapeKind};
use shapegpt_tools::{invoke, ErrorKind, Registry, Status, ToolCall, ToolResult, Workspace};

struct Session {
    _dir: TempDir,
    ws: Workspace,
    reg: Registry,
    cfg: GeometryConfig,
}

impl Session {
    fn new() -> Session {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::new(dir.path()).unwrap();
        Session { _dir: dir, ws, reg: Registry::builtin(), cfg: GeometryConfig::default() }
    }

    fn put(&mut self, handle: &str, d: Dataset) {
        self.ws.insert_layer(handle, d);
    }

    fn call(&mut self, name: &str, args: Value) -> ToolResult {
        invoke(&ToolCall::new(name, args), &mut self.ws, &self.reg, &self.cfg)
    }

    fn ok(&mut self, name: &str, args: Value) -> Dataset {
        let r = self.call(name, args);
        assert_eq!(r.status, Status::Ok, "{name}: {}", r.message);
        assert!(!r.message.is_empty());
        self.ws.layer(r.output_handle.as_deref().unwrap()).unwrap().clone()
    }
}

fn c(x: f64, y: f64) -> Coord {
    Coord::new(x, y)
}

fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
    Geometry::Polygon(vec![BBox::new(x0, y0, x1, y1).to_ring()])
}

fn layer(kind: ShapeKind, fields: Vec<FieldDescriptor>, rows: Vec<(Geometry, Vec<FieldValue>)>) -> Dataset {
    Dataset::new(kind, fields, rows.into_iter().map(|(g, a)| Feature::new(g, a)).collect(), None).unwrap()
}

fn text(s: &str) -> FieldValue {
    FieldValue::Text(s.into())
}

fn number(v: f64) -> FieldValue {
    FieldValue::Number(Some(v))
}

fn points(pts: &[(f64, f64)]) -> Dataset {
    layer(
        ShapeKind::Point,
        vec![FieldDescriptor::numeric("ID", 5, 0)],
        pts.iter().enumerate().map(|(i, p)| (Geometry::Point(c(p.0, p.1)), vec![number(i as f64)])).collect(),
    )
}

fn total_area(d: &Dataset) -> f64 {
    d.geometries().filter(|g| !g.is_empty()).map(|g| polygon_area(g).unwrap()).sum()
}

/// Area of the regular N-gon inscribed in a circle of radius r.
fn ngon_area(n: usize, r: f64) -> f64 {
    n as f64 / 2.0 * r * r * (2.0 * PI / n as f64).sin()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn roads() -> Dataset {
    layer(
        ShapeKind::PolyLine,
        vec![FieldDescriptor::character("NAME", 20), FieldDescriptor::character("TYPE", 10)],
        vec![
            (Geometry::PolyLine(vec![vec![c(0.0, 0.0), c(1000.0, 0.0)]]), vec![text("Main"), text("primary")]),
            (Geometry::PolyLine(vec![vec![c(0.0, 3000.0), c(0.0, 5000.0)]]), vec![text("North"), text("minor")]),
            (Geometry::PolyLine(vec![vec![c(5000.0, 0.0), c(6000.0, 0.0), c(6000.0, 800.0)]]), vec![text("East"), text("primary")]),
        ],
    )
}

#[test]
fn read_shapefile_from_sandbox() {
    let mut s = Session::new();
    let path = s.ws.sandbox_dir().join("input/roads.shp");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_dataset(&roads(), &path).unwrap();
    let r = s.call("read_shapefile", json!({"path": "input/roads.shp", "alias": "roads"}));
    assert!(r.is_ok(), "{}", r.message);
    assert_eq!(r.output_handle.as_deref(), Some("roads"));
    assert!(r.message.contains("3 features"), "{}", r.message);
    let r = s.call("read_shapefile", json!({"path": "input/roads.shp"}));
    assert_eq!(r.output_handle.as_deref(), Some("roads"));
    let r = s.call("read_shapefile", json!({"path": "input/missing.shp"}));
    assert_eq!(r.error_kind, Some(ErrorKind::Shapefile));
}

#[test]
fn describe_reports_summary() {
    let mut s = Session::new();
    s.put("roads", roads());
    let r = s.call("describe_shapefile", json!({"layer": "roads", "sample_rows": 1}));
    assert!(r.is_ok());
    assert!(r.message.contains("features: 3"), "{}", r.message);
    assert!(r.message.contains("Main"));
    assert!(!r.message.contains("North"));
}

#[test]
fn buffer_area_matches_capsule_formula() {
    let mut s = Session::new();
    s.put("roads", roads());
    let out = s.ok("buffer", json!({"layer": "roads", "distance": 500, "output": "roads_buf"}));
    assert_eq!(out.shape_kind(), ShapeKind::Polygon);
    assert_eq!(out.len(), 3);
    assert!(s.ws.layer("roads_buf").is_ok());
    // horizontal segment: disc polygon plus a 2r-wide sweep
    let a = polygon_area(&out.features()[0].geometry).unwrap();
    let expected = ngon_area(32, 500.0) + 1000.0 * 1000.0;
    assert!(close(a, expected, 1e-9), "{a} vs {expected}");
    assert_eq!(out.features()[0].attributes, vec![text("Main"), text("primary")]);
}

#[test]
fn unknown_handle_is_an_execution_error() {
    let mut s = Session::new();
    s.put("roads", roads());
    let r = s.call("clip", json!({"layer": "roads", "boundary": "nowhere"}));
    assert_eq!(r.status, Status::Error);
    assert_eq!(r.error_kind, Some(ErrorKind::UnknownLayer));
    assert!(r.message.contains("nowhere"));
}

#[test]
fn invalid_calls_are_rejected_before_execution() {
    let mut s = Session::new();
    s.put("roads", roads());
    let r = s.call("buffer", json!({"layer": "roads"}));
    assert_eq!(r.error_kind, Some(ErrorKind::Validation));
    assert!(r.message.contains("missing_param(distance)"), "{}", r.message);
    assert_eq!(s.ws.layers().len(), 1);
}

#[test]
fn attribute_tools() {
    let mut s = Session::new();
    s.put("roads", roads());
    let r = s.ok("rename_field", json!({"layer": "roads", "old_name": "type", "new_name": "CLASS", "output": "r1"}));
    assert_eq!(r.fields()[1].name, "CLASS");
    assert_eq!(s.call("rename_field", json!({"layer": "r1", "old_name": "NAME", "new_name": "CLASS"})).error_kind, Some(ErrorKind::InvalidArgument));
    assert_eq!(s.call("rename_field", json!({"layer": "r1", "old_name": "NOPE", "new_name": "X"})).error_kind, Some(ErrorKind::UnknownField));
    assert_eq!(
        s.call("rename_field", json!({"layer": "r1", "old_name": "NAME", "new_name": "ELEVENCHARS"})).error_kind,
        Some(ErrorKind::InvalidArgument)
    );

    let r = s.ok("add_field", json!({"layer": "r1", "name": "LANES", "kind": "integer", "value": "2", "output": "r2"}));
    assert_eq!(r.fields().len(), 3);
    assert!(r.features().iter().all(|f| f.attributes[2] == number(2.0)));
    let r = s.ok("add_field", json!({"layer": "r2", "name": "OPENED", "kind": "date", "value": "2001-02-03", "output": "r3"}));
    assert_eq!(r.fields()[3].byte_length, 8);
    assert_eq!(s.call("add_field", json!({"layer": "r3", "name": "BAD", "kind": "real", "value": "x"})).error_kind, Some(ErrorKind::InvalidArgument));

    let r = s.ok("filter_features", json!({"layer": "r3", "field": "CLASS", "comparator": "=", "value": "primary", "output": "p"}));
    assert_eq!(r.len(), 2);
    let r = s.ok("filter_features", json!({"layer": "r3", "field": "LANES", "comparator": "<", "value": "2"}));
    assert_eq!(r.len(), 0);
    let r = s.ok("filter_features", json!({"layer": "r3", "field": "NAME", "comparator": "contains", "value": "or"}));
    assert_eq!(r.len(), 1);
}

#[test]
fn xy_and_length_fields() {
    let mut s = Session::new();
    s.put("pts", points(&[(1.5, -2.25), (3.0, 4.0)]));
    let r = s.ok("add_xy_fields", json!({"layer": "pts"}));
    let (xi, yi) = (r.field_index("X").unwrap(), r.field_index("Y").unwrap());
    assert_eq!(r.features()[0].attributes[xi], number(1.5));
    assert_eq!(r.features()[1].attributes[yi], number(4.0));
    assert_eq!(s.call("add_xy_fields", json!({"layer": "pts", "x_field": "A", "y_field": "a"})).error_kind, Some(ErrorKind::InvalidArgument));

    s.put("roads", roads());
    assert_eq!(s.call("add_xy_fields", json!({"layer": "roads"})).error_kind, Some(ErrorKind::WrongLayerKind));
    let r = s.ok("calculate_length", json!({"layer": "roads", "id_field": "ID"}));
    let li = r.field_index("LENGTH").unwrap();
    let ii = r.field_index("ID").unwrap();
    let lengths: Vec<f64> = r.features().iter().map(|f| f.attributes[li].as_f64().unwrap()).collect();
    assert_eq!(lengths, [1000.0, 2000.0, 1800.0]);
    assert_eq!(r.features()[2].attributes[ii], number(3.0));
    s.put("sq", layer(ShapeKind::Polygon, vec![], vec![(square(0.0, 0.0, 3.0, 4.0), vec![])]));
    let r = s.ok("calculate_length", json!({"layer": "sq", "field": "PERIM"}));
    assert_eq!(r.features()[0].attributes[0], number(14.0));
}

#[test]
fn reprojection_round_trip() {
    let mut s = Session::new();
    let mut d = points(&[(10.0, 20.0), (-70.5, -33.4)]);
    let (k, f, feats, _) = d.clone().into_parts();
    d = Dataset::new(k, f, feats, Some(shapegpt_core::geometry::Crs::Wgs84.wkt().into())).unwrap();
    s.put("geo", d.clone());
    let m = s.ok("reproject_layer", json!({"layer": "geo", "to_crs": "EPSG:3857", "output": "merc"}));
    assert!(m.crs_wkt().unwrap().contains("Mercator"));
    let Geometry::Point(p) = m.features()[0].geometry else { panic!() };
    assert!(close(p.x, 6378137.0 * 10f64.to_radians(), 1e-12));
    let back = s.ok("reproject_layer", json!({"layer": "merc", "to_crs": "4326"}));
    for (a, b) in back.features().iter().zip(d.features()) {
        let (Geometry::Point(a), Geometry::Point(b)) = (&a.geometry, &b.geometry) else { panic!() };
        assert!(a.distance(b) < 1e-9);
    }
    s.put("bare", points(&[(0.0, 0.0)]));
    assert_eq!(s.call("reproject_layer", json!({"layer": "bare", "to_crs": "EPSG:3857"})).error_kind, Some(ErrorKind::InvalidArgument));
    assert!(s.call("reproject_layer", json!({"layer": "bare", "to_crs": "EPSG:3857", "from_crs": "EPSG:4326"})).is_ok());
}

#[test]
fn inward_and_ring_buffers() {
    let mut s = Session::new();
    s.put("sq", layer(ShapeKind::Polygon, vec![], vec![(square(0.0, 0.0, 10.0, 10.0), vec![])]));
    let band = s.ok("inward_buffer", json!({"layer": "sq", "distance": 1}));
    assert!(close(total_area(&band), 36.0, 1e-9), "{}", total_area(&band));

    s.put("site", points(&[(0.0, 0.0)]));
    let rings = s.ok("multi_ring_buffer", json!({"layer": "site", "distances": [1, 2, 3]}));
    assert_eq!(rings.len(), 3);
    let di = rings.field_index("DISTANCE").unwrap();
    for (k, f) in rings.features().iter().enumerate() {
        let r = (k + 1) as f64;
        assert_eq!(f.attributes[di], number(r));
        let expected = ngon_area(32, r) - ngon_area(32, r - 1.0);
        assert!(close(polygon_area(&f.geometry).unwrap(), expected, 1e-9));
    }
    assert_eq!(s.call("multi_ring_buffer", json!({"layer": "site", "distances": [2, 1]})).error_kind, Some(ErrorKind::Geometry));
}

#[test]
fn clip_and_overlay() {
    let mut s = Session::new();
    s.put(
        "line",
        layer(ShapeKind::PolyLine, vec![], vec![(Geometry::PolyLine(vec![vec![c(-5.0, 5.0), c(15.0, 5.0)]]), vec![])]),
    );
    s.put(
        "box",
        layer(ShapeKind::Polygon, vec![FieldDescriptor::character("NAME", 8)], vec![(square(0.0, 0.0, 10.0, 10.0), vec![text("a")])]),
    );
    let out = s.ok("clip", json!({"layer": "line", "boundary": "box"}));
    assert!(close(polyline_length(&out.features()[0].geometry).unwrap(), 10.0, 1e-12));
    assert_eq!(s.call("clip", json!({"layer": "box", "boundary": "line"})).error_kind, Some(ErrorKind::WrongLayerKind));

    s.put(
        "other",
        layer(ShapeKind::Polygon, vec![FieldDescriptor::character("NAME", 8)], vec![(square(5.0, 5.0, 15.0, 15.0), vec![text("b")])]),
    );
    let ov = s.ok("overlay_intersection", json!({"layer": "box", "overlay": "other"}));
    assert_eq!(ov.len(), 1);
    assert!(close(total_area(&ov), 25.0, 1e-12));
    let names: Vec<&str> = ov.fields().iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["NAME", "NAME_2"]);
    assert_eq!(ov.features()[0].attributes, vec![text("a"), text("b")]);
}

#[test]
fn spatial_join_predicates() {
    let mut s = Session::new();
    s.put("pts", points(&[(1.0, 1.0), (6.0, 6.0), (50.0, 50.0)]));
    s.put(
        "zones",
        layer(
            ShapeKind::Polygon,
            vec![FieldDescriptor::character("ZONE", 4)],
            vec![(square(0.0, 0.0, 5.0, 5.0), vec![text("A")]), (square(5.0, 5.0, 10.0, 10.0), vec![text("B")])],
        ),
    );
    let j = s.ok("spatial_join", json!({"layer": "pts", "join": "zones", "predicate": "within"}));
    assert_eq!(j.len(), 2);
    assert_eq!(j.features()[1].attributes, vec![number(1.0), text("B")]);
    let j = s.ok("spatial_join", json!({"layer": "pts", "join": "zones", "keep_all": true}));
    assert_eq!(j.len(), 3);
    assert_eq!(j.features()[2].attributes[1], text(""));
    let j = s.ok("spatial_join", json!({"layer": "zones", "join": "pts", "predicate": "contains"}));
    assert_eq!(j.len(), 2);
    assert_eq!(j.fields()[1].name, "ID");
}

#[test]
fn voronoi_tools() {
    let mut s = Session::new();
    s.put("pts", points(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]));
    let v = s.ok("voronoi_points", json!({"layer": "pts"}));
    assert_eq!(v.len(), 4);
    // extent 10 x 10 grown by 10% per side
    for f in v.features() {
        assert!(close(polygon_area(&f.geometry).unwrap(), 144.0 / 4.0, 1e-12));
    }
    assert!(v.features().iter().any(|f| f.attributes[0] == number(2.0)));

    s.put(
        "line",
        layer(ShapeKind::PolyLine, vec![], vec![(Geometry::PolyLine(vec![vec![c(20.0, 0.0), c(20.0, 10.0)]]), vec![])]),
    );
    let vf = s.ok("voronoi_features", json!({"layers": ["pts", "line"]}));
    assert_eq!(vf.len(), 5);
    let expected = (20.0 * 1.2) * (10.0 * 1.2);
    assert!(close(total_area(&vf), expected, 1e-9), "{}", total_area(&vf));
    assert!(vf.features().iter().any(|f| f.attributes[0] == text("line")));
}

#[test]
fn bounding_rectangles_per_group() {
    let mut s = Session::new();
    let diamond = [(0.0, 1.0), (1.0, 0.0), (2.0, 1.0), (1.0, 2.0)];
    let mut rows: Vec<(Geometry, Vec<FieldValue>)> =
        diamond.iter().map(|p| (Geometry::Point(c(p.0, p.1)), vec![text("d")])).collect();
    rows.extend([(0.0, 0.0), (4.0, 0.0), (4.0, 1.0)].iter().map(|p| (Geometry::Point(c(p.0, p.1)), vec![text("r")])));
    s.put("trees", layer(ShapeKind::Point, vec![FieldDescriptor::character("SP", 2)], rows));
    let m = s.ok("minimum_bounding_rectangle", json!({"layer": "trees", "group_field": "SP"}));
    assert_eq!(m.len(), 2);
    let ai = m.field_index("MBR_AREA").unwrap();
    assert!(close(m.features()[0].attributes[ai].as_f64().unwrap(), 2.0, 1e-12));
    assert!(close(polygon_area(&m.features()[0].geometry).unwrap(), 2.0, 1e-12));
    assert!(close(m.features()[1].attributes[ai].as_f64().unwrap(), 4.0, 1e-12));
    let aa = s.ok("minimum_bounding_rectangle", json!({"layer": "trees", "group_field": "SP", "mode": "axis_aligned"}));
    assert!(close(aa.features()[0].attributes[1].as_f64().unwrap(), 4.0, 1e-12));
    let all = s.ok("minimum_bounding_rectangle", json!({"layer": "trees"}));
    assert_eq!(all.len(), 1);
}

#[test]
fn geometry_conversions() {
    let mut s = Session::new();
    s.put("sq", layer(ShapeKind::Polygon, vec![FieldDescriptor::character("N", 2)], vec![(square(0.0, 0.0, 2.0, 2.0), vec![text("s")])]));
    let v = s.ok("vertices_to_points", json!({"layer": "sq"}));
    assert_eq!(v.len(), 4);
    assert_eq!(v.fields().len(), 3);
    let l = s.ok("polygons_to_lines", json!({"layer": "sq", "output": "edges"}));
    assert_eq!(l.shape_kind(), ShapeKind::PolyLine);
    assert!(close(polyline_length(&l.features()[0].geometry).unwrap(), 8.0, 1e-12));
    let p = s.ok("lines_to_polygons", json!({"layer": "edges"}));
    assert!(close(total_area(&p), 4.0, 1e-12));
    assert_eq!(p.features()[0].attributes, vec![text("s")]);

    let rows = vec![
        (Geometry::Point(c(2.0, 0.0)), vec![text("a"), number(2.0)]),
        (Geometry::Point(c(0.0, 0.0)), vec![text("a"), number(0.0)]),
        (Geometry::Point(c(1.0, 1.0)), vec![text("a"), number(1.0)]),
        (Geometry::Point(c(5.0, 5.0)), vec![text("b"), number(0.0)]),
        (Geometry::Point(c(6.0, 5.0)), vec![text("b"), number(1.0)]),
    ];
    s.put("gps", layer(ShapeKind::Point, vec![FieldDescriptor::character("TRACK", 2), FieldDescriptor::numeric("T", 5, 0)], rows));
    let t = s.ok("points_to_line", json!({"layer": "gps", "group_field": "TRACK", "order_field": "T"}));
    assert_eq!(t.len(), 2);
    assert_eq!(t.features()[0].geometry, Geometry::PolyLine(vec![vec![c(0.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)]]));
    assert_eq!(t.features()[1].attributes, vec![number(2.0), text("b")]);
}

#[test]
fn split_and_nearest() {
    let mut s = Session::new();
    s.put("field", layer(ShapeKind::Polygon, vec![], vec![(square(0.0, 0.0, 10.0, 10.0), vec![])]));
    s.put(
        "cut",
        layer(ShapeKind::PolyLine, vec![], vec![(Geometry::PolyLine(vec![vec![c(4.0, -1.0), c(4.0, 11.0)]]), vec![])]),
    );
    let parts = s.ok("split_polygons_by_lines", json!({"layer": "field", "lines": "cut"}));
    assert_eq!(parts.len(), 2);
    let mut areas: Vec<f64> = parts.geometries().map(|g| polygon_area(g).unwrap()).collect();
    areas.sort_by(f64::total_cmp);
    assert!(close(areas[0], 40.0, 1e-12) && close(areas[1], 60.0, 1e-12));

    s.put("houses", points(&[(0.0, 5.0), (9.0, 5.0)]));
    s.put(
        "roads",
        layer(
            ShapeKind::PolyLine,
            vec![],
            vec![
                (Geometry::PolyLine(vec![vec![c(3.0, 0.0), c(3.0, 10.0)]]), vec![]),
                (Geometry::PolyLine(vec![vec![c(10.0, 0.0), c(10.0, 10.0)]]), vec![]),
            ],
        ),
    );
    let n = s.ok("nearest_connector_lines", json!({"layer": "houses", "target": "roads"}));
    assert_eq!(n.features()[0].attributes, vec![number(0.0), number(0.0), number(3.0)]);
    assert_eq!(n.features()[1].attributes, vec![number(1.0), number(1.0), number(1.0)]);
    assert_eq!(n.features()[0].geometry, Geometry::PolyLine(vec![vec![c(0.0, 5.0), c(3.0, 5.0)]]));
}

#[test]
fn dispersion_of_square_corners() {
    let mut s = Session::new();
    s.put("pts", points(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]));
    let d = s.ok("cluster_dispersion", json!({"layer": "pts"}));
    assert_eq!(d.len(), 1);
    assert_eq!(d.features()[0].geometry, Geometry::Point(c(5.0, 5.0)));
    let sd = d.features()[0].attributes[d.field_index("STD_DIST").unwrap()].as_f64().unwrap();
    assert!(close(sd, 50f64.sqrt(), 1e-12));
    assert_eq!(d.features()[0].attributes[d.field_index("N_POINTS").unwrap()], number(4.0));
}

#[test]
fn saving_tools() {
    let mut s = Session::new();
    s.put("roads", roads());
    let r = s.call("save_shapefile", json!({"layer": "roads", "path": "output/roads_out"}));
    assert!(r.is_ok(), "{}", r.message);
    let shp = s.ws.sandbox_dir().join("output/roads_out.shp");
    assert_eq!(read_dataset(&shp).unwrap(), roads());
    assert_eq!(s.ws.artifacts().len(), 3);

    let r = s.call("save_table_csv", json!({"layer": "roads", "path": "output/roads.csv"}));
    assert!(r.is_ok());
    let mut rd = csv::Reader::from_path(s.ws.sandbox_dir().join("output/roads.csv")).unwrap();
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["NAME", "TYPE"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[2][0], "East");

    let r = s.call("render_map_image", json!({"layers": ["roads"], "path": "output/map.png"}));
    assert!(r.is_ok(), "{}", r.message);
    let img = image::open(s.ws.sandbox_dir().join("output/map.png")).unwrap();
    assert_eq!((img.width(), img.height()), (1024, 1024));
    assert_eq!(s.ws.artifacts().len(), 5);
}
