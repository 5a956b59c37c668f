//! The built-in tool set. The shipped YAML/JSON docs are exported from here.

use serde_json::{json, Value};

use crate::spec::{ParamKind, ParamSpec, ToolSpec, CATEGORY_PROCESSING, CATEGORY_READING, CATEGORY_SAVING};

fn req(name: &str, kind: ParamKind, description: &str) -> ParamSpec {
    ParamSpec { name: name.into(), kind, required: true, default: None, description: description.into() }
}

fn opt(name: &str, kind: ParamKind, default: Option<Value>, description: &str) -> ParamSpec {
    ParamSpec { name: name.into(), kind, required: false, default, description: description.into() }
}

fn tool(name: &str, category: &str, description: &str, params: Vec<ParamSpec>, examples: &[&str]) -> ToolSpec {
    ToolSpec {
        name: name.into(),
        category: category.into(),
        description: description.into(),
        params,
        examples: examples.iter().map(|s| s.to_string()).collect(),
    }
}

fn layer() -> ParamSpec {
    req("layer", ParamKind::LayerHandle, "Handle of the input layer.")
}

fn output() -> ParamSpec {
    opt("output", ParamKind::Text, None, "Handle for the result layer; generated when omitted.")
}

fn enumeration(values: &[&str]) -> ParamKind {
    ParamKind::Enum(values.iter().map(|s| s.to_string()).collect())
}

fn processing(name: &str, description: &str, mut params: Vec<ParamSpec>, examples: &[&str]) -> ToolSpec {
    params.push(output());
    tool(name, CATEGORY_PROCESSING, description, params, examples)
}

pub fn builtin_specs() -> Vec<ToolSpec> {
    use ParamKind::*;
    vec![
        tool(
            "read_shapefile",
            CATEGORY_READING,
            "Reads a shapefile (.shp with .shx/.dbf/.prj siblings) from the sandbox into a named layer.",
            vec![
                req("path", FilePath, "Path of the .shp file, relative to the sandbox."),
                opt("alias", Text, None, "Layer handle to assign; defaults to the file stem."),
            ],
            &[r#"read_shapefile(path="input/roads.shp", alias="roads")"#],
        ),
        tool(
            "describe_shapefile",
            CATEGORY_READING,
            "Summarizes a layer: geometry type, feature count, fields, extent and sample rows.",
            vec![layer(), opt("sample_rows", Integer, Some(json!(5)), "Number of attribute rows to show.")],
            &[r#"describe_shapefile(layer="roads")"#],
        ),
        processing(
            "rename_field",
            "Renames an attribute field. Names are at most 10 ASCII characters.",
            vec![layer(), req("old_name", Text, "Current field name."), req("new_name", Text, "New field name.")],
            &[r#"rename_field(layer="parcels", old_name="NAME", new_name="OWNER")"#],
        ),
        processing(
            "add_field",
            "Adds an attribute field, optionally filled with a constant value.",
            vec![
                layer(),
                req("name", Text, "Field name, at most 10 ASCII characters."),
                req("kind", enumeration(&["text", "integer", "real", "logical", "date"]), "Field type."),
                opt("length", Integer, None, "Field width in bytes; text 50, integer 10, real 19 when omitted."),
                opt("decimals", Integer, None, "Decimal places for real fields; 4 when omitted."),
                opt("value", Text, None, "Constant written to every row (dates as YYYY-MM-DD, logicals as T/F)."),
            ],
            &[r#"add_field(layer="parcels", name="ZONE", kind="text", length=20, value="R1")"#],
        ),
        processing(
            "filter_features",
            "Keeps features whose attribute satisfies `field comparator value`. Numeric fields compare numerically, text fields lexically.",
            vec![
                layer(),
                req("field", Text, "Field to test."),
                req("comparator", enumeration(&["=", "!=", "<", "<=", ">", ">=", "contains"]), "Comparison operator."),
                req("value", Text, "Literal to compare against, written as text."),
            ],
            &[r#"filter_features(layer="roads", field="TYPE", comparator="=", value="primary", output="primary_roads")"#],
        ),
        processing(
            "add_xy_fields",
            "Adds X and Y coordinate fields to a point layer.",
            vec![
                layer(),
                opt("x_field", Text, Some(json!("X")), "Name of the X field."),
                opt("y_field", Text, Some(json!("Y")), "Name of the Y field."),
            ],
            &[r#"add_xy_fields(layer="wells")"#],
        ),
        processing(
            "calculate_length",
            "Computes the planar length (perimeter for polygons) of each feature into a numeric field.",
            vec![
                layer(),
                opt("field", Text, Some(json!("LENGTH")), "Name of the length field."),
                opt("id_field", Text, None, "When set, also writes a 1-based sequential ID into this field."),
            ],
            &[r#"calculate_length(layer="rivers", field="LEN_M", id_field="ID")"#],
        ),
        processing(
            "reproject_layer",
            "Transforms coordinates between EPSG:4326 and EPSG:3857.",
            vec![
                layer(),
                req("to_crs", Text, "Target CRS, e.g. \"EPSG:3857\"."),
                opt("from_crs", Text, None, "Source CRS; read from the layer's .prj when omitted."),
            ],
            &[r#"reproject_layer(layer="cities", to_crs="EPSG:3857", output="cities_m")"#],
        ),
        processing(
            "buffer",
            "Builds a buffer polygon around every feature.",
            vec![layer(), req("distance", Real, "Buffer distance in layer units, > 0.")],
            &[r#"buffer(layer="roads", distance=500, output="roads_buf")"#],
        ),
        processing(
            "inward_buffer",
            "Builds the band inside each polygon (or closed line) within a distance of its boundary.",
            vec![layer(), req("distance", Real, "Band width in layer units, > 0.")],
            &[r#"inward_buffer(layer="lakes", distance=50, output="shore")"#],
        ),
        processing(
            "multi_ring_buffer",
            "Builds concentric non-overlapping rings around every feature; each ring records its outer distance.",
            vec![
                layer(),
                req("distances", RealList, "Strictly ascending distances."),
                opt("field", Text, Some(json!("DISTANCE")), "Name of the distance field."),
            ],
            &[r#"multi_ring_buffer(layer="site", distances=[1000, 2000, 3000], output="zones")"#],
        ),
        processing(
            "clip",
            "Keeps the parts of a layer inside the polygons of a boundary layer.",
            vec![layer(), req("boundary", LayerHandle, "Polygon layer to clip with.")],
            &[r#"clip(layer="roads", boundary="county", output="county_roads")"#],
        ),
        processing(
            "overlay_intersection",
            "Intersects every feature with every polygon of an overlay layer; pieces carry both attribute sets.",
            vec![layer(), req("overlay", LayerHandle, "Polygon layer to intersect with.")],
            &[r#"overlay_intersection(layer="buffers", overlay="cells", output="service_areas")"#],
        ),
        processing(
            "spatial_join",
            "Attaches the attributes of the first feature of a join layer matching a spatial predicate.",
            vec![
                layer(),
                req("join", LayerHandle, "Layer whose attributes are attached."),
                opt("predicate", enumeration(&["intersects", "contains", "within"]), Some(json!("intersects")), "Relation tested as predicate(layer feature, join feature)."),
                opt("keep_all", Boolean, Some(json!(false)), "Keep unmatched features with empty join attributes."),
            ],
            &[r#"spatial_join(layer="parcels", join="zones", predicate="within", output="parcels_zoned")"#],
        ),
        processing(
            "voronoi_points",
            "Builds Thiessen (Voronoi) polygons for a point layer, clipped to the layer extent grown by 10%.",
            vec![layer()],
            &[r#"voronoi_points(layer="stations", output="station_cells")"#],
        ),
        processing(
            "voronoi_features",
            "Builds regions nearest to each feature of one or more layers of any geometry type.",
            vec![req("layers", TextList, "Handles of the input layers.")],
            &[r#"voronoi_features(layers=["schools", "parks"], output="nearest")"#],
        ),
        processing(
            "minimum_bounding_rectangle",
            "Builds the minimum bounding rectangle of all vertices, or one per value of a group field.",
            vec![
                layer(),
                opt("group_field", Text, None, "Field whose values define the groups."),
                opt("mode", enumeration(&["min_area", "axis_aligned"]), Some(json!("min_area")), "Rotated or axis-aligned rectangle."),
            ],
            &[r#"minimum_bounding_rectangle(layer="trees", group_field="SPECIES", output="extents")"#],
        ),
        processing(
            "vertices_to_points",
            "Converts every vertex of a line or polygon layer to a point carrying the source attributes.",
            vec![layer()],
            &[r#"vertices_to_points(layer="parcels", output="corners")"#],
        ),
        processing(
            "lines_to_polygons",
            "Converts closed polylines to polygons.",
            vec![layer()],
            &[r#"lines_to_polygons(layer="contours", output="contour_areas")"#],
        ),
        processing(
            "polygons_to_lines",
            "Converts polygon boundaries to polylines.",
            vec![layer()],
            &[r#"polygons_to_lines(layer="parcels", output="parcel_edges")"#],
        ),
        processing(
            "points_to_line",
            "Connects the points of each group, in order, into one polyline.",
            vec![
                layer(),
                opt("group_field", Text, None, "Field whose values define separate lines."),
                opt("order_field", Text, None, "Field that orders points along the line; storage order when omitted."),
            ],
            &[r#"points_to_line(layer="gps", group_field="TRACK", order_field="TIME", output="tracks")"#],
        ),
        processing(
            "split_polygons_by_lines",
            "Splits polygons along the lines of a line layer.",
            vec![layer(), req("lines", LayerHandle, "Polyline layer used as blades.")],
            &[r#"split_polygons_by_lines(layer="fields", lines="roads", output="plots")"#],
        ),
        processing(
            "nearest_connector_lines",
            "Draws the shortest line from each feature to the nearest feature of a target layer.",
            vec![layer(), req("target", LayerHandle, "Layer searched for the nearest feature.")],
            &[r#"nearest_connector_lines(layer="houses", target="roads", output="access")"#],
        ),
        processing(
            "cluster_dispersion",
            "Computes mean center, standard distance and deviational-ellipse orientation of the vertices, per group when a field is given.",
            vec![layer(), opt("group_field", Text, None, "Field whose values define the groups.")],
            &[r#"cluster_dispersion(layer="incidents", group_field="TYPE", output="spread")"#],
        ),
        tool(
            "save_shapefile",
            CATEGORY_SAVING,
            "Writes a layer as a shapefile set (.shp, .shx, .dbf and .prj when the CRS is known).",
            vec![layer(), req("path", FilePath, "Output .shp path, relative to the sandbox.")],
            &[r#"save_shapefile(layer="roads_buf", path="output/roads_buf.shp")"#],
        ),
        tool(
            "save_table_csv",
            CATEGORY_SAVING,
            "Writes the attribute table of a layer as CSV with a header row.",
            vec![layer(), req("path", FilePath, "Output .csv path, relative to the sandbox.")],
            &[r#"save_table_csv(layer="extents", path="output/extents.csv")"#],
        ),
        tool(
            "render_map_image",
            CATEGORY_SAVING,
            "Draws one or more layers into a 1024x1024 PNG image, fitted to their combined extent.",
            vec![
                req("layers", TextList, "Handles to draw, bottom to top."),
                req("path", FilePath, "Output .png path, relative to the sandbox."),
            ],
            &[r#"render_map_image(layers=["county", "roads"], path="output/map.png")"#],
        ),
    ]
}
