use std::f64::consts::TAU;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapegpt_core::shapefile::{read_dataset, values_equal_as_stored, write_dataset};
use shapegpt_core::{Coord, Dataset, Feature, FieldDescriptor, FieldKind, FieldValue, Geometry, ShapeKind};

fn coord(rng: &mut ChaCha8Rng) -> Coord {
    Coord::new(rng.gen_range(-1e6..1e6), rng.gen_range(-1e6..1e6))
}

fn ring(rng: &mut ChaCha8Rng, c: Coord, r: f64, clockwise: bool) -> Vec<Coord> {
    let k = rng.gen_range(4..10);
    let phase = rng.gen_range(0.0..TAU);
    let mut pts: Vec<Coord> = (0..k)
        .map(|i| {
            let a = phase + (i as f64 + rng.gen_range(0.0..0.8)) * TAU / k as f64;
            let rr = r * rng.gen_range(0.6..1.0);
            Coord::new(c.x + rr * a.cos(), c.y + rr * a.sin())
        })
        .collect();
    if clockwise {
        pts.reverse();
    }
    pts.push(pts[0]);
    pts
}

fn geometry(rng: &mut ChaCha8Rng, kind: ShapeKind) -> Geometry {
    if rng.gen_bool(0.05) {
        return Geometry::Null;
    }
    match kind {
        ShapeKind::Point => Geometry::Point(coord(rng)),
        ShapeKind::MultiPoint => Geometry::MultiPoint((0..rng.gen_range(1..6)).map(|_| coord(rng)).collect()),
        ShapeKind::PolyLine => Geometry::PolyLine(
            (0..rng.gen_range(1..4)).map(|_| (0..rng.gen_range(2..7)).map(|_| coord(rng)).collect()).collect(),
        ),
        ShapeKind::Polygon => {
            let c = coord(rng);
            let r = rng.gen_range(10.0..1000.0);
            let mut rings = vec![ring(rng, c, r, true)];
            // the outer ring always contains the disc of radius 0.09 r
            if rng.gen_bool(0.4) {
                rings.push(ring(rng, c, r * 0.08, false));
            }
            Geometry::Polygon(rings)
        }
    }
}

fn field(rng: &mut ChaCha8Rng, i: usize) -> FieldDescriptor {
    let name = format!("F{i}_{}", rng.gen_range(0..100));
    match rng.gen_range(0..5) {
        0 => FieldDescriptor::character(name, rng.gen_range(1..40)),
        1 => FieldDescriptor::numeric(name, rng.gen_range(12..19), rng.gen_range(0..4)),
        2 => FieldDescriptor::new(name, FieldKind::Float, 19, rng.gen_range(0..8)),
        3 => FieldDescriptor::logical(name),
        _ => FieldDescriptor::date(name),
    }
}

fn value(rng: &mut ChaCha8Rng, fd: &FieldDescriptor) -> FieldValue {
    let null = rng.gen_bool(0.1);
    match fd.kind {
        FieldKind::Character => {
            let n = rng.gen_range(0..=fd.byte_length as usize);
            let alphabet: Vec<char> = "abcXYZ 019-_éüß".chars().collect();
            FieldValue::Text((0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect::<String>().trim_end().to_string())
        }
        FieldKind::Numeric | FieldKind::Float => {
            FieldValue::Number((!null).then(|| rng.gen_range(-1e6..1e6)))
        }
        FieldKind::Logical => FieldValue::Logical((!null).then(|| rng.gen_bool(0.5))),
        FieldKind::Date => FieldValue::Date(
            (!null).then(|| NaiveDate::from_ymd_opt(rng.gen_range(1900..2100), rng.gen_range(1..13), rng.gen_range(1..29)).unwrap()),
        ),
    }
}

fn dataset(rng: &mut ChaCha8Rng, kind: ShapeKind) -> Dataset {
    let fields: Vec<FieldDescriptor> = (0..rng.gen_range(1..6)).map(|i| field(rng, i)).collect();
    let n = rng.gen_range(0..30);
    let features = (0..n)
        .map(|_| {
            let g = geometry(rng, kind);
            let attrs = fields.iter().map(|fd| value(rng, fd)).collect();
            Feature::new(g, attrs)
        })
        .collect();
    let crs = rng.gen_bool(0.5).then(|| "GEOGCS[\"GCS_WGS_1984\"]".to_string());
    Dataset::new(kind, fields, features, crs).unwrap()
}

#[test]
fn hundred_random_datasets_round_trip() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kinds = [ShapeKind::Point, ShapeKind::PolyLine, ShapeKind::Polygon, ShapeKind::MultiPoint];
    for i in 0..100 {
        let d = dataset(&mut rng, kinds[i % 4]);
        let path = dir.path().join(format!("ds{i}.shp"));
        let files = write_dataset(&d, &path).unwrap();
        let shp = std::fs::read(&files.shp).unwrap();
        assert_eq!(&shp[..4], &9994i32.to_be_bytes());
        assert_eq!(std::fs::read(&files.dbf).unwrap()[0], 0x03);

        let back = read_dataset(&path).unwrap();
        assert_eq!(back.shape_kind(), d.shape_kind());
        assert_eq!(back.fields(), d.fields());
        assert_eq!(back.crs_wkt(), d.crs_wkt());
        assert_eq!(back.len(), d.len());
        for (a, b) in d.features().iter().zip(back.features()) {
            // bit-exact coordinates
            let ca: Vec<(u64, u64)> = a.geometry.coords().map(|c| (c.x.to_bits(), c.y.to_bits())).collect();
            let cb: Vec<(u64, u64)> = b.geometry.coords().map(|c| (c.x.to_bits(), c.y.to_bits())).collect();
            assert_eq!(ca, cb, "dataset {i}");
            if !a.geometry.is_empty() {
                assert_eq!(a.geometry, b.geometry);
            }
            for ((fd, va), vb) in d.fields().iter().zip(&a.attributes).zip(&b.attributes) {
                assert!(values_equal_as_stored(fd, va, vb), "dataset {i} field {}: {va:?} vs {vb:?}", fd.name);
            }
        }
    }
    assert!(started.elapsed().as_secs_f64() < 10.0);
}
