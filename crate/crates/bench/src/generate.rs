//! Builds the synthetic task suite: input layers, prompts, traces, and the
//! expected outputs obtained by replaying each trace.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use shapegpt_agent::{PlanStep, SessionConfig};
use shapegpt_core::{write_dataset, Coord, Dataset, Feature, FieldDescriptor, FieldValue, Geometry, ShapeKind};
use shapegpt_tools::{Registry, ToolCall};

use crate::runner::{prepare_workspace, Runner, TraceReplayRunner};
use crate::task::{
    load_task_suite, Category, GroundTruthTrace, LoadedTask, Manifest, StepSpec, Suite, SuiteError, TaskSpec, EXPECTED_DIR,
    MANIFEST, PROMPT_FILE, TASK_FILE, TRACE_FILE,
};

pub const SUITE_NAME: &str = "shapefile-desk-suite";

const WGS84_WKT: &str = r#"GEOGCS["GCS_WGS_1984",DATUM["D_WGS_1984",SPHEROID["WGS_1984",6378137.0,298.257223563]],PRIMEM["Greenwich",0.0],UNIT["Degree",0.0174532925199433]]"#;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing input: {0}")]
    Shapefile(#[from] shapegpt_core::ShapefileError),
    #[error("task {task}: ground-truth call {index} failed")]
    Replay { task: String, index: usize },
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

/// A task as authored: the suite files are derived from it.
#[derive(Debug, Clone)]
pub struct TaskDef {
    pub id: &'static str,
    pub category: Category,
    pub geometry_type: &'static str,
    pub description: &'static str,
    pub prompt: String,
    pub steps: Vec<PlanStep>,
}

impl TaskDef {
    pub fn calls(&self) -> Vec<ToolCall> {
        self.steps.iter().flat_map(|s| s.calls.clone()).collect()
    }

    fn paths_of(&self, tools: &[&str]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in self.calls() {
            if tools.contains(&c.name.as_str()) {
                if let Some(p) = c.arguments.get("path").and_then(Value::as_str) {
                    if !out.iter().any(|o| o == p) {
                        out.push(p.to_string());
                    }
                }
            }
        }
        out
    }

    pub fn input_paths(&self) -> Vec<String> {
        self.paths_of(&["read_shapefile"])
    }

    pub fn output_paths(&self) -> Vec<String> {
        self.paths_of(&["save_shapefile", "save_table_csv", "render_map_image"])
    }
}

// ---- input layers ----

fn c(x: f64, y: f64) -> Coord {
    Coord::new(x, y)
}

fn text(s: &str) -> FieldValue {
    FieldValue::Text(s.to_string())
}

fn num(v: f64) -> FieldValue {
    FieldValue::Number(Some(v))
}

fn line(pts: &[(f64, f64)]) -> Geometry {
    Geometry::PolyLine(vec![pts.iter().map(|&(x, y)| c(x, y)).collect()])
}

/// Closed ring in the order given; callers pass clockwise outlines.
fn poly(pts: &[(f64, f64)]) -> Geometry {
    let mut ring: Vec<Coord> = pts.iter().map(|&(x, y)| c(x, y)).collect();
    ring.push(ring[0]);
    Geometry::Polygon(vec![ring])
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
    poly(&[(x0, y0), (x0, y1), (x1, y1), (x1, y0)])
}

fn dataset(kind: ShapeKind, fields: Vec<FieldDescriptor>, rows: Vec<(Geometry, Vec<FieldValue>)>, crs: Option<&str>) -> Dataset {
    let features = rows.into_iter().map(|(g, a)| Feature::new(g, a)).collect();
    Dataset::new(kind, fields, features, crs.map(String::from)).expect("suite layer is valid")
}

fn sites() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rows = (0..12)
        .map(|i| {
            let x = (rng.gen_range(200.0..3800.0f64) * 100.0).round() / 100.0;
            let y = (rng.gen_range(200.0..3800.0f64) * 100.0).round() / 100.0;
            let class = ["A", "B", "C"][i % 3];
            (Geometry::Point(c(x, y)), vec![num((i + 1) as f64), text(&format!("S{:02}", i + 1)), text(class)])
        })
        .collect();
    dataset(
        ShapeKind::Point,
        vec![FieldDescriptor::numeric("ID", 5, 0), FieldDescriptor::character("NAME", 12), FieldDescriptor::character("CLASS", 1)],
        rows,
        None,
    )
}

fn roads() -> Dataset {
    let rows = vec![
        (line(&[(0.0, 500.0), (1500.0, 700.0), (4000.0, 900.0)]), vec![text("Harbour Rd"), text("primary")]),
        (line(&[(2000.0, 0.0), (2100.0, 2000.0), (2300.0, 4000.0)]), vec![text("North Ave"), text("primary")]),
        (line(&[(0.0, 3000.0), (1800.0, 2600.0), (3900.0, 3300.0)]), vec![text("Ridge Way"), text("secondary")]),
        (line(&[(500.0, 1500.0), (1200.0, 2200.0)]), vec![text("Mill Lane"), text("secondary")]),
        (line(&[(3000.0, 1200.0), (3600.0, 1800.0), (3400.0, 2500.0)]), vec![text("Quarry Track"), text("track")]),
    ];
    dataset(
        ShapeKind::PolyLine,
        vec![FieldDescriptor::character("NAME", 16), FieldDescriptor::character("TYPE", 10)],
        rows,
        None,
    )
}

fn rivers() -> Dataset {
    let rows = vec![
        (line(&[(3300.0, 100.0), (3800.0, 600.0), (4300.0, 700.0)]), vec![text("Alder")]),
        (line(&[(100.0, 3600.0), (700.0, 3900.0), (1300.0, 4300.0)]), vec![text("Birch")]),
        (line(&[(2600.0, 2700.0), (2900.0, 2500.0), (3100.0, 2100.0)]), vec![text("Cedar")]),
    ];
    dataset(ShapeKind::PolyLine, vec![FieldDescriptor::character("RIVER", 12)], rows, None)
}

fn parcels() -> Dataset {
    let zones = ["residential", "commercial", "park"];
    let mut rows = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            let (x0, y0) = (i as f64 * 1000.0 + 50.0, j as f64 * 1000.0 + 50.0);
            let pid = j * 3 + i + 1;
            rows.push((
                rect(x0, y0, x0 + 900.0, y0 + 900.0),
                vec![num(pid as f64), text(zones[(i + j) % 3]), num(100.0 * (1 + i + 2 * j) as f64 + 0.25 * pid as f64)],
            ));
        }
    }
    dataset(
        ShapeKind::Polygon,
        vec![FieldDescriptor::numeric("PID", 5, 0), FieldDescriptor::character("ZONE", 12), FieldDescriptor::numeric("VALUE", 10, 2)],
        rows,
        None,
    )
}

fn zones() -> Dataset {
    let rows = vec![
        (rect(-100.0, -100.0, 1500.0, 3100.0), vec![text("West"), text("urban")]),
        (rect(1500.0, -100.0, 3100.0, 3100.0), vec![text("East"), text("rural")]),
    ];
    dataset(
        ShapeKind::Polygon,
        vec![FieldDescriptor::character("DISTRICT", 8), FieldDescriptor::character("LANDCOVER", 10)],
        rows,
        None,
    )
}

fn study_area() -> Dataset {
    let rows = vec![(
        poly(&[(800.0, 600.0), (600.0, 2200.0), (2000.0, 3000.0), (3200.0, 1800.0), (2600.0, 500.0)]),
        vec![text("Study area")],
    )];
    dataset(ShapeKind::Polygon, vec![FieldDescriptor::character("NAME", 16)], rows, None)
}

fn blades() -> Dataset {
    let rows = vec![
        (line(&[(1300.0, -200.0), (1400.0, 3200.0)]), vec![text("canal")]),
        (line(&[(-200.0, 1700.0), (3200.0, 1500.0)]), vec![text("rail")]),
    ];
    dataset(ShapeKind::PolyLine, vec![FieldDescriptor::character("KIND", 8)], rows, None)
}

fn outlines() -> Dataset {
    let rows = vec![
        (line(&[(200.0, 200.0), (250.0, 800.0), (850.0, 900.0), (900.0, 250.0)]), vec![text("pond")]),
        (
            line(&[(1200.0, 1200.0), (1300.0, 1900.0), (1900.0, 1800.0), (1800.0, 1100.0), (1200.0, 1200.0)]),
            vec![text("yard")],
        ),
        (line(&[(2200.0, 2300.0), (2700.0, 2900.0), (2900.0, 2200.0)]), vec![text("grove")]),
    ];
    dataset(ShapeKind::PolyLine, vec![FieldDescriptor::character("NAME", 10)], rows, None)
}

fn incident() -> Dataset {
    dataset(
        ShapeKind::Point,
        vec![FieldDescriptor::character("NAME", 16)],
        vec![(Geometry::Point(c(2000.0, 2000.0)), vec![text("chemical spill")])],
        None,
    )
}

fn towns() -> Dataset {
    let rows = [
        ("Aston", 10.25, 45.5, 12000.0),
        ("Brill", 10.75, 45.9, 4300.0),
        ("Corfe", 11.1, 46.2, 880.0),
        ("Dunmore", 11.6, 45.7, 25600.0),
        ("Elford", 12.05, 46.6, 1500.0),
        ("Fenwick", 11.35, 47.05, 7100.0),
    ]
    .iter()
    .map(|&(n, lon, lat, pop)| (Geometry::Point(c(lon, lat)), vec![text(n), num(pop)]))
    .collect();
    dataset(
        ShapeKind::Point,
        vec![FieldDescriptor::character("TOWN", 12), FieldDescriptor::numeric("POP", 10, 0)],
        rows,
        Some(WGS84_WKT),
    )
}

/// Every input layer by name.
pub fn input_layer(name: &str) -> Option<Dataset> {
    Some(match name {
        "sites" => sites(),
        "roads" => roads(),
        "rivers" => rivers(),
        "parcels" => parcels(),
        "zones" => zones(),
        "study_area" => study_area(),
        "blades" => blades(),
        "outlines" => outlines(),
        "incident" => incident(),
        "towns" => towns(),
        _ => return None,
    })
}

// ---- catalog ----

fn call(name: &str, args: Value) -> ToolCall {
    ToolCall::new(name, args)
}

fn read(layer: &str) -> ToolCall {
    call("read_shapefile", json!({"path": format!("input/{layer}.shp"), "alias": layer}))
}

fn save(layer: &str, path: &str) -> ToolCall {
    call("save_shapefile", json!({"layer": layer, "path": path}))
}

fn csv(layer: &str, path: &str) -> ToolCall {
    call("save_table_csv", json!({"layer": layer, "path": path}))
}

fn step(instruction: &str, calls: Vec<ToolCall>) -> PlanStep {
    PlanStep { instruction: instruction.to_string(), calls }
}

fn reading(layers: &[&str]) -> PlanStep {
    let names: Vec<String> = layers.iter().map(|l| format!("input/{l}.shp")).collect();
    step(&format!("Read {}", names.join(" and ")), layers.iter().map(|l| read(l)).collect())
}

fn task(
    id: &'static str,
    category: Category,
    geometry_type: &'static str,
    description: &'static str,
    prompt: &str,
    steps: Vec<PlanStep>,
) -> TaskDef {
    TaskDef { id, category, geometry_type, description, prompt: prompt.to_string(), steps }
}

/// The 42 authored tasks: 22 geometric, 7 query, 7 distance, 6 other.
pub fn catalog() -> Vec<TaskDef> {
    use Category::*;
    vec![
        task("t01_roads_buffer", GeometricOperations, "Polyline", "Fixed-distance buffer of road lines.",
            "Create a 100 m buffer around the roads in input/roads.shp and save it as output/roads_buffer.shp.",
            vec![reading(&["roads"]), step("Buffer roads by 100 m and save output/roads_buffer.shp", vec![
                call("buffer", json!({"layer": "roads", "distance": 100, "output": "roads_buffer"})),
                save("roads_buffer", "output/roads_buffer.shp")])]),
        task("t02_sites_buffer", GeometricOperations, "Point", "Fixed-distance buffer of sample sites.",
            "Buffer every site in input/sites.shp by 250 m and save the result to output/sites_buffer.shp.",
            vec![reading(&["sites"]), step("Buffer sites by 250 m and save output/sites_buffer.shp", vec![
                call("buffer", json!({"layer": "sites", "distance": 250, "output": "sites_buffer"})),
                save("sites_buffer", "output/sites_buffer.shp")])]),
        task("t03_parcel_setback", GeometricOperations, "Polygon", "Inward buffer band along parcel boundaries.",
            "Make a 100 m inward buffer (setback band) for each parcel in input/parcels.shp; save output/parcel_setback.shp.",
            vec![reading(&["parcels"]), step("Inward buffer parcels by 100 m and save output/parcel_setback.shp", vec![
                call("inward_buffer", json!({"layer": "parcels", "distance": 100, "output": "setback"})),
                save("setback", "output/parcel_setback.shp")])]),
        task("t04_site_rings", GeometricOperations, "Point", "Concentric ring buffers around sites.",
            "Create 200, 400 and 600 m ring buffers around the sites in input/sites.shp and save output/site_rings.shp.",
            vec![reading(&["sites"]), step("Build 200/400/600 m rings and save output/site_rings.shp", vec![
                call("multi_ring_buffer", json!({"layer": "sites", "distances": [200, 400, 600], "output": "rings"})),
                save("rings", "output/site_rings.shp")])]),
        task("t05_roads_clip", GeometricOperations, "Polyline", "Clip road lines to a study area.",
            "Clip the roads in input/roads.shp to the study area in input/study_area.shp and save output/roads_clipped.shp.",
            vec![reading(&["roads", "study_area"]), step("Clip roads to the study area and save output/roads_clipped.shp", vec![
                call("clip", json!({"layer": "roads", "boundary": "study_area", "output": "roads_clipped"})),
                save("roads_clipped", "output/roads_clipped.shp")])]),
        task("t06_parcel_zone_overlay", GeometricOperations, "Polygon", "Intersect parcels with districts.",
            "Overlay the parcels (input/parcels.shp) with the districts (input/zones.shp), keeping attributes of both, and save output/parcel_zones.shp.",
            vec![reading(&["parcels", "zones"]), step("Intersect parcels with districts and save output/parcel_zones.shp", vec![
                call("overlay_intersection", json!({"layer": "parcels", "overlay": "zones", "output": "parcel_zones"})),
                save("parcel_zones", "output/parcel_zones.shp")])]),
        task("t07_site_voronoi", GeometricOperations, "Point", "Thiessen polygons of sites.",
            "Generate Thiessen (Voronoi) polygons for the sites in input/sites.shp and save output/site_cells.shp.",
            vec![reading(&["sites"]), step("Generate Voronoi cells and save output/site_cells.shp", vec![
                call("voronoi_points", json!({"layer": "sites", "output": "cells"})),
                save("cells", "output/site_cells.shp")])]),
        task("t08_feature_voronoi", GeometricOperations, "Mixed", "Thiessen regions of mixed point and line features.",
            "Generate Thiessen regions for the sites (input/sites.shp) and the rivers (input/rivers.shp) together and save output/feature_cells.shp.",
            vec![reading(&["sites", "rivers"]), step("Build Voronoi regions for sites and rivers and save output/feature_cells.shp", vec![
                call("voronoi_features", json!({"layers": ["sites", "rivers"], "output": "regions"})),
                save("regions", "output/feature_cells.shp")])]),
        task("t09_class_mbr", GeometricOperations, "Point", "Minimum-area rectangle per site class.",
            "Compute the minimum bounding rectangle of the sites in input/sites.shp for each CLASS and save output/class_mbr.shp.",
            vec![reading(&["sites"]), step("Build one minimum-area rectangle per CLASS and save output/class_mbr.shp", vec![
                call("minimum_bounding_rectangle", json!({"layer": "sites", "group_field": "CLASS", "output": "mbr"})),
                save("mbr", "output/class_mbr.shp")])]),
        task("t10_sites_extent", GeometricOperations, "Point", "Axis-aligned extent rectangle of all sites.",
            "Create the axis-aligned bounding rectangle of all sites in input/sites.shp and save output/sites_extent.shp.",
            vec![reading(&["sites"]), step("Build the axis-aligned rectangle and save output/sites_extent.shp", vec![
                call("minimum_bounding_rectangle", json!({"layer": "sites", "mode": "axis_aligned", "output": "extent"})),
                save("extent", "output/sites_extent.shp")])]),
        task("t11_road_vertices", GeometricOperations, "Polyline", "Road vertices as points.",
            "Convert the vertices of the roads in input/roads.shp into points and save output/road_vertices.shp.",
            vec![reading(&["roads"]), step("Extract road vertices and save output/road_vertices.shp", vec![
                call("vertices_to_points", json!({"layer": "roads", "output": "vertices"})),
                save("vertices", "output/road_vertices.shp")])]),
        task("t12_outline_polygons", GeometricOperations, "Polyline", "Close outline lines into polygons.",
            "Turn the outline lines in input/outlines.shp into polygons, keeping their attributes, and save output/outline_polygons.shp.",
            vec![reading(&["outlines"]), step("Convert outlines to polygons and save output/outline_polygons.shp", vec![
                call("lines_to_polygons", json!({"layer": "outlines", "output": "outline_polys"})),
                save("outline_polys", "output/outline_polygons.shp")])]),
        task("t13_parcel_edges", GeometricOperations, "Polygon", "Parcel boundaries as lines.",
            "Convert the parcels in input/parcels.shp into boundary lines and save output/parcel_edges.shp.",
            vec![reading(&["parcels"]), step("Convert parcels to lines and save output/parcel_edges.shp", vec![
                call("polygons_to_lines", json!({"layer": "parcels", "output": "edges"})),
                save("edges", "output/parcel_edges.shp")])]),
        task("t14_class_paths", GeometricOperations, "Point", "Lines through sites of each class in ID order.",
            "Connect the sites in input/sites.shp into one line per CLASS, ordered by ID, and save output/class_paths.shp.",
            vec![reading(&["sites"]), step("Join sites into lines per CLASS and save output/class_paths.shp", vec![
                call("points_to_line", json!({"layer": "sites", "group_field": "CLASS", "order_field": "ID", "output": "paths"})),
                save("paths", "output/class_paths.shp")])]),
        task("t15_parcel_split", GeometricOperations, "Polygon", "Split parcels along canal and rail lines.",
            "Split the parcels in input/parcels.shp with the lines in input/blades.shp and save output/parcel_split.shp.",
            vec![reading(&["parcels", "blades"]), step("Split parcels by the lines and save output/parcel_split.shp", vec![
                call("split_polygons_by_lines", json!({"layer": "parcels", "lines": "blades", "output": "split"})),
                save("split", "output/parcel_split.shp")])]),
        task("t16_case1_allocation", GeometricOperations, "Point", "Voronoi allocation of 500 m service areas.",
            "For the sites in input/sites.shp, generate Voronoi polygons, create 500 m buffers around the sites, clip the buffers with the Voronoi polygons, and save output/allocation.shp.",
            vec![
                step("Generate Voronoi polygons from input/sites.shp", vec![
                    read("sites"), call("voronoi_points", json!({"layer": "sites", "output": "cells"}))]),
                step("Create a 500-meter buffer around the sites", vec![
                    call("buffer", json!({"layer": "sites", "distance": 500, "output": "buffers"}))]),
                step("Clip the buffers with the Voronoi polygons and save output/allocation.shp", vec![
                    call("overlay_intersection", json!({"layer": "buffers", "overlay": "cells", "output": "allocation"})),
                    save("allocation", "output/allocation.shp")]),
            ]),
        task("t17_road_corridor", GeometricOperations, "Polyline", "Road buffer limited to the study area.",
            "Buffer the roads (input/roads.shp) by 50 m, clip the corridor to input/study_area.shp, and save output/road_corridor.shp.",
            vec![reading(&["roads", "study_area"]),
                step("Buffer roads by 50 m", vec![call("buffer", json!({"layer": "roads", "distance": 50, "output": "corridor"}))]),
                step("Clip the corridor to the study area and save output/road_corridor.shp", vec![
                    call("clip", json!({"layer": "corridor", "boundary": "study_area", "output": "corridor_clip"})),
                    save("corridor_clip", "output/road_corridor.shp")])]),
        task("t18_area_vertices", GeometricOperations, "Polygon", "Study area corners as points.",
            "Extract the corner points of the study area in input/study_area.shp and save output/area_vertices.shp.",
            vec![reading(&["study_area"]), step("Extract polygon vertices and save output/area_vertices.shp", vec![
                call("vertices_to_points", json!({"layer": "study_area", "output": "corners"})),
                save("corners", "output/area_vertices.shp")])]),
        task("t19_zone_boundary_band", GeometricOperations, "Polygon", "Band along district boundaries.",
            "Convert the districts in input/zones.shp to boundary lines, buffer them by 30 m, and save output/zone_boundary_band.shp.",
            vec![reading(&["zones"]),
                step("Convert districts to boundary lines", vec![call("polygons_to_lines", json!({"layer": "zones", "output": "zone_lines"}))]),
                step("Buffer the boundary lines by 30 m and save output/zone_boundary_band.shp", vec![
                    call("buffer", json!({"layer": "zone_lines", "distance": 30, "output": "band"})),
                    save("band", "output/zone_boundary_band.shp")])]),
        task("t20_outline_zones", GeometricOperations, "Polyline", "Outline polygons split by district.",
            "Turn the outlines in input/outlines.shp into polygons, intersect them with the districts in input/zones.shp, and save output/outline_zones.shp.",
            vec![reading(&["outlines", "zones"]),
                step("Convert outlines to polygons", vec![call("lines_to_polygons", json!({"layer": "outlines", "output": "outline_polys"}))]),
                step("Intersect with districts and save output/outline_zones.shp", vec![
                    call("overlay_intersection", json!({"layer": "outline_polys", "overlay": "zones", "output": "outline_zones"})),
                    save("outline_zones", "output/outline_zones.shp")])]),
        task("t21_outline_parcel_join", GeometricOperations, "Polyline", "Polygons from lines joined to overlapping parcels.",
            "Convert the outlines in input/outlines.shp to polygons, spatially join the overlapping parcels from input/parcels.shp, and save output/outline_parcels.shp.",
            vec![reading(&["outlines", "parcels"]),
                step("Convert outlines to polygons and join overlapping parcels", vec![
                    call("lines_to_polygons", json!({"layer": "outlines", "output": "outline_polys"})),
                    call("spatial_join", json!({"layer": "outline_polys", "join": "parcels", "predicate": "intersects", "output": "joined"}))]),
                step("Save the joined layer as output/outline_parcels.shp", vec![save("joined", "output/outline_parcels.shp")])]),
        task("t22_class_a_cells", GeometricOperations, "Point", "Voronoi cells of class A sites only.",
            "Select the sites of CLASS A from input/sites.shp, build Voronoi polygons for them, and save output/class_a_cells.shp.",
            vec![reading(&["sites"]),
                step("Select sites with CLASS = A", vec![
                    call("filter_features", json!({"layer": "sites", "field": "CLASS", "comparator": "=", "value": "A", "output": "class_a"}))]),
                step("Build Voronoi cells for the selection and save output/class_a_cells.shp", vec![
                    call("voronoi_points", json!({"layer": "class_a", "output": "a_cells"})),
                    save("a_cells", "output/class_a_cells.shp")])]),
        // queries and computations
        task("t23_primary_roads", QueriesAndComputations, "Polyline", "Attribute selection of primary roads.",
            "Select the roads with TYPE equal to primary from input/roads.shp and save them as output/primary_roads.shp.",
            vec![reading(&["roads"]), step("Filter TYPE = primary and save output/primary_roads.shp", vec![
                call("filter_features", json!({"layer": "roads", "field": "TYPE", "comparator": "=", "value": "primary", "output": "primary"})),
                save("primary", "output/primary_roads.shp")])]),
        task("t24_road_lengths", QueriesAndComputations, "Polyline", "Road lengths as a table.",
            "Calculate the length of every road in input/roads.shp and export the attribute table to output/road_lengths.csv.",
            vec![reading(&["roads"]), step("Add a LENGTH field and export output/road_lengths.csv", vec![
                call("calculate_length", json!({"layer": "roads", "field": "LENGTH", "id_field": "RID", "output": "roads_len"})),
                csv("roads_len", "output/road_lengths.csv")])]),
        task("t25_site_xy", QueriesAndComputations, "Point", "Site coordinates as a table.",
            "Add X and Y coordinate fields to the sites in input/sites.shp and export the table as output/site_xy.csv.",
            vec![reading(&["sites"]), step("Add X/Y fields and export output/site_xy.csv", vec![
                call("add_xy_fields", json!({"layer": "sites", "output": "sites_xy"})),
                csv("sites_xy", "output/site_xy.csv")])]),
        task("t26_sites_in_zones", QueriesAndComputations, "Point", "District attributes attached to sites.",
            "Attach to each site in input/sites.shp the district (input/zones.shp) it lies within and save output/sites_zones.shp.",
            vec![reading(&["sites", "zones"]), step("Join districts to sites by containment and save output/sites_zones.shp", vec![
                call("spatial_join", json!({"layer": "sites", "join": "zones", "predicate": "within", "output": "sites_zones"})),
                save("sites_zones", "output/sites_zones.shp")])]),
        task("t27_valuable_parcels", QueriesAndComputations, "Polygon", "Numeric attribute selection.",
            "Select parcels from input/parcels.shp with VALUE of at least 500 and save output/valuable_parcels.shp.",
            vec![reading(&["parcels"]), step("Filter VALUE >= 500 and save output/valuable_parcels.shp", vec![
                call("filter_features", json!({"layer": "parcels", "field": "VALUE", "comparator": ">=", "value": "500", "output": "valuable"})),
                save("valuable", "output/valuable_parcels.shp")])]),
        task("t28_parcel_status", QueriesAndComputations, "Polygon", "Add a constant status field.",
            "Add a text field STATUS with the value review to every parcel in input/parcels.shp and save output/parcels_status.shp.",
            vec![reading(&["parcels"]), step("Add STATUS = review and save output/parcels_status.shp", vec![
                call("add_field", json!({"layer": "parcels", "name": "STATUS", "kind": "text", "length": 8, "value": "review", "output": "status"})),
                save("status", "output/parcels_status.shp")])]),
        task("t29_parcel_rename", QueriesAndComputations, "Polygon", "Rename a field and export the table.",
            "Rename the ZONE field of input/parcels.shp to LANDUSE and export the attribute table to output/parcels_renamed.csv.",
            vec![reading(&["parcels"]), step("Rename ZONE to LANDUSE and export output/parcels_renamed.csv", vec![
                call("rename_field", json!({"layer": "parcels", "old_name": "ZONE", "new_name": "LANDUSE", "output": "renamed"})),
                csv("renamed", "output/parcels_renamed.csv")])]),
        // distance and direction
        task("t30_river_road_links", DistanceAndDirection, "Polyline", "Shortest connectors from rivers to roads.",
            "For each river in input/rivers.shp draw the shortest connecting line to the nearest road in input/roads.shp and save output/river_road_links.shp.",
            vec![reading(&["rivers", "roads"]), step("Build nearest connectors and save output/river_road_links.shp", vec![
                call("nearest_connector_lines", json!({"layer": "rivers", "target": "roads", "output": "links"})),
                save("links", "output/river_road_links.shp")])]),
        task("t31_class_dispersion", DistanceAndDirection, "Point", "Dispersion ellipse per site class.",
            "Compute the mean center, standard distance and orientation of the sites in input/sites.shp for each CLASS; save output/class_dispersion.shp.",
            vec![reading(&["sites"]), step("Compute dispersion per CLASS and save output/class_dispersion.shp", vec![
                call("cluster_dispersion", json!({"layer": "sites", "group_field": "CLASS", "output": "dispersion"})),
                save("dispersion", "output/class_dispersion.shp")])]),
        task("t32_site_dispersion", DistanceAndDirection, "Point", "Dispersion of all sites as a table.",
            "Summarize the spatial dispersion of all sites in input/sites.shp and export it to output/site_dispersion.csv.",
            vec![reading(&["sites"]), step("Compute overall dispersion and export output/site_dispersion.csv", vec![
                call("cluster_dispersion", json!({"layer": "sites", "output": "dispersion"})),
                csv("dispersion", "output/site_dispersion.csv")])]),
        task("t33_incident_zones", DistanceAndDirection, "Point", "Concentric hazard zones around an incident.",
            "Create multiple concentric buffers at 500, 1000 and 1500 m around the incident in input/incident.shp and save output/incident_zones.shp.",
            vec![reading(&["incident"]), step("Create 500/1000/1500 m concentric buffers and save output/incident_zones.shp", vec![
                call("multi_ring_buffer", json!({"layer": "incident", "distances": [500, 1000, 1500], "field": "DIST_M", "output": "zones"})),
                save("zones", "output/incident_zones.shp")])]),
        task("t34_parcels_near_sites", DistanceAndDirection, "Polygon", "Parcels within 300 m of a site.",
            "Find the parcels in input/parcels.shp that are within 300 m of a site in input/sites.shp, attach that site, and save output/parcels_near_sites.shp.",
            vec![reading(&["parcels", "sites"]),
                step("Buffer sites by 300 m", vec![call("buffer", json!({"layer": "sites", "distance": 300, "output": "site_zone"}))]),
                step("Join parcels touching a site buffer and save output/parcels_near_sites.shp", vec![
                    call("spatial_join", json!({"layer": "parcels", "join": "site_zone", "predicate": "intersects", "output": "near"})),
                    save("near", "output/parcels_near_sites.shp")])]),
        task("t35_road_river_links", DistanceAndDirection, "Polyline", "Shortest connectors from roads to rivers as a table.",
            "For each road in input/roads.shp find the shortest connector to a river in input/rivers.shp and export the table to output/road_river_links.csv.",
            vec![reading(&["roads", "rivers"]), step("Build road-to-river connectors and export output/road_river_links.csv", vec![
                call("nearest_connector_lines", json!({"layer": "roads", "target": "rivers", "output": "links"})),
                csv("links", "output/road_river_links.csv")])]),
        task("t36_connector_lengths", DistanceAndDirection, "Polyline", "Connector lengths from sites' paths to roads.",
            "Connect the sites of each CLASS in input/sites.shp into lines ordered by ID, find the shortest connector from each line to the roads in input/roads.shp, and export connector lengths to output/connector_lengths.csv.",
            vec![reading(&["sites", "roads"]),
                step("Join sites into one line per CLASS", vec![
                    call("points_to_line", json!({"layer": "sites", "group_field": "CLASS", "order_field": "ID", "output": "paths"}))]),
                step("Connect each line to the nearest road and export lengths to output/connector_lengths.csv", vec![
                    call("nearest_connector_lines", json!({"layer": "paths", "target": "roads", "output": "links"})),
                    call("calculate_length", json!({"layer": "links", "field": "LEN_M", "output": "links_len"})),
                    csv("links_len", "output/connector_lengths.csv")])]),
        // other
        task("t37_roads_map", Other, "Mixed", "Map image of districts and roads.",
            "Draw a map of the districts (input/zones.shp) and roads (input/roads.shp) and save it as output/roads_map.png.",
            vec![reading(&["zones", "roads"]), step("Render districts and roads to output/roads_map.png", vec![
                call("render_map_image", json!({"layers": ["zones", "roads"], "path": "output/roads_map.png"}))])]),
        task("t38_towns_mercator", Other, "Point", "Reproject towns to Web Mercator.",
            "Reproject the towns in input/towns.shp from WGS84 (EPSG:4326) to Web Mercator (EPSG:3857) and save output/towns_mercator.shp.",
            vec![reading(&["towns"]), step("Reproject to EPSG:3857 and save output/towns_mercator.shp", vec![
                call("reproject_layer", json!({"layer": "towns", "to_crs": "EPSG:3857", "from_crs": "EPSG:4326", "output": "towns_3857"})),
                save("towns_3857", "output/towns_mercator.shp")])]),
        task("t39_parcels_table", Other, "Polygon", "Export an attribute table.",
            "Export the attribute table of input/parcels.shp to output/parcels.csv.",
            vec![reading(&["parcels"]), step("Export the parcel table to output/parcels.csv", vec![csv("parcels", "output/parcels.csv")])]),
        task("t40_cells_map", Other, "Point", "Map image of site Voronoi cells.",
            "Build Voronoi polygons for the sites in input/sites.shp and draw them with the sites to output/site_cells.png.",
            vec![reading(&["sites"]),
                step("Generate Voronoi cells for the sites", vec![call("voronoi_points", json!({"layer": "sites", "output": "cells"}))]),
                step("Render cells and sites to output/site_cells.png", vec![
                    call("render_map_image", json!({"layers": ["cells", "sites"], "path": "output/site_cells.png"}))])]),
        task("t41_towns_xy", Other, "Point", "Projected town coordinates as a table.",
            "Reproject the towns in input/towns.shp to EPSG:3857, add X and Y fields, and export output/towns_xy.csv.",
            vec![reading(&["towns"]),
                step("Reproject towns to EPSG:3857", vec![
                    call("reproject_layer", json!({"layer": "towns", "to_crs": "EPSG:3857", "output": "towns_3857"}))]),
                step("Add X/Y fields and export output/towns_xy.csv", vec![
                    call("add_xy_fields", json!({"layer": "towns_3857", "x_field": "MX", "y_field": "MY", "output": "towns_xy"})),
                    csv("towns_xy", "output/towns_xy.csv")])]),
        task("t42_sites_copy", Other, "Point", "Inspect and copy a layer.",
            "Describe the sites layer in input/sites.shp and save a copy as output/sites_copy.shp.",
            vec![reading(&["sites"]), step("Describe the sites and save a copy as output/sites_copy.shp", vec![
                call("describe_shapefile", json!({"layer": "sites", "sample_rows": 3})),
                save("sites", "output/sites_copy.shp")])]),
    ]
}

// ---- writing ----

const SHAPEFILE_PARTS: [&str; 4] = ["shp", "shx", "dbf", "prj"];

fn copy_output(src: &Path, dst_dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dst_dir)?;
    let is_shp = src.extension().is_some_and(|e| e.eq_ignore_ascii_case("shp"));
    let files: Vec<PathBuf> = if is_shp {
        SHAPEFILE_PARTS.iter().map(|e| src.with_extension(e)).filter(|p| p.is_file()).collect()
    } else {
        vec![src.to_path_buf()]
    };
    for f in files {
        std::fs::copy(&f, dst_dir.join(f.file_name().expect("file name")))?;
    }
    Ok(())
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    std::fs::write(path, text)
}

/// Writes one task directory, including expected outputs from a replay.
pub fn write_task(def: &TaskDef, root: &Path, registry: &Registry) -> Result<(), GenError> {
    let dir = root.join(def.id);
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;
    let inputs = def.input_paths();
    for p in &inputs {
        let name = Path::new(p).file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let d = input_layer(name).unwrap_or_else(|| panic!("no input layer '{name}'"));
        write_dataset(&d, dir.join(p))?;
    }
    let spec = TaskSpec {
        task_id: def.id.to_string(),
        geometry_type: def.geometry_type.to_string(),
        category: def.category,
        description: def.description.to_string(),
        input_paths: inputs,
        output_paths: def.output_paths(),
        user_prompt: def.prompt.clone(),
        plan: def.steps.iter().map(|s| StepSpec { instruction: s.instruction.clone(), calls: s.calls.len() }).collect(),
    };
    write_json(&dir.join(TASK_FILE), &spec)?;
    std::fs::write(dir.join(PROMPT_FILE), format!("{}\n", def.prompt))?;
    let calls = def.calls();
    write_json(&dir.join(TRACE_FILE), &calls)?;

    let task = LoadedTask { spec, trace: GroundTruthTrace { task_id: def.id.to_string(), calls }, dir: dir.clone() };
    let tmp = tempfile::tempdir()?;
    let mut ws = prepare_workspace(&task, &tmp.path().join("sandbox"))?;
    let rec = TraceReplayRunner { cfg: SessionConfig::default() }.run(&task, &mut ws, registry);
    if let Some(index) = rec.calls.iter().position(|c| c.status != shapegpt_tools::Status::Ok) {
        return Err(GenError::Replay { task: def.id.to_string(), index });
    }
    for out in &task.spec.output_paths {
        copy_output(&ws.sandbox_dir().join(out), &dir.join(EXPECTED_DIR))?;
    }
    Ok(())
}

/// Writes the whole suite under `root` and loads it back.
pub fn gen_suite(root: impl AsRef<Path>, registry: &Registry) -> Result<Suite, GenError> {
    let root = root.as_ref();
    std::fs::create_dir_all(root)?;
    let defs = catalog();
    for d in &defs {
        write_task(d, root, registry)?;
    }
    let manifest = Manifest { name: SUITE_NAME.to_string(), tasks: defs.iter().map(|d| d.id.to_string()).collect() };
    write_json(&root.join(MANIFEST), &manifest)?;
    Ok(load_task_suite(root, registry)?)
}
