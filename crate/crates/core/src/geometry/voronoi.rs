//! Voronoi cells by half-plane clipping. Each cell starts as the expanded
//! extent and is cut by the bisector against every nearby seed; neighbours
//! are visited in rings of a uniform grid until none can still reach the cell.

use std::collections::BTreeMap;

use crate::model::{BBox, Coord, Dataset, Geometry};

use super::overlay::disjoint_union;
use super::{GeometryConfig, GeometryError};

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub polygon: Geometry,
    /// Index of the seed (or feature) the cell belongs to.
    pub source: usize,
}

fn expanded(extent: BBox, frac: f64) -> BBox {
    let (w, h) = (extent.width(), extent.height());
    let dx = if w > 0.0 { w * frac } else { h * frac };
    let dy = if h > 0.0 { h * frac } else { w * frac };
    BBox::new(extent.xmin - dx, extent.ymin - dy, extent.xmax + dx, extent.ymax + dy)
}

/// Keeps the part of convex `poly` closer to `s` than to `o`.
fn clip_half_plane(poly: &[Coord], s: Coord, o: Coord) -> Vec<Coord> {
    let (nx, ny) = (o.x - s.x, o.y - s.y);
    let (mx, my) = ((s.x + o.x) / 2.0, (s.y + o.y) / 2.0);
    let side = |p: &Coord| (p.x - mx) * nx + (p.y - my) * ny;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push(Coord::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    }
    out
}

struct Grid {
    origin: Coord,
    h: f64,
    cols: i64,
    rows: i64,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(pts: &[Coord], bb: BBox) -> Grid {
        let span = bb.width().max(bb.height()).max(f64::MIN_POSITIVE);
        let area = (bb.width() * bb.height()).max(span * span / pts.len() as f64);
        let h = (area / pts.len() as f64).sqrt().max(span / 4096.0);
        let cols = (bb.width() / h).floor() as i64 + 1;
        let rows = (bb.height() / h).floor() as i64 + 1;
        let mut g = Grid { origin: Coord::new(bb.xmin, bb.ymin), h, cols, rows, cells: BTreeMap::new() };
        for (i, p) in pts.iter().enumerate() {
            let k = g.key(*p);
            g.cells.entry(k).or_default().push(i);
        }
        g
    }

    fn key(&self, p: Coord) -> (i64, i64) {
        (
            (((p.x - self.origin.x) / self.h).floor() as i64).clamp(0, self.cols - 1),
            (((p.y - self.origin.y) / self.h).floor() as i64).clamp(0, self.rows - 1),
        )
    }

    /// Seeds in cells at Chebyshev grid distance exactly `k` from `c`.
    fn ring(&self, c: (i64, i64), k: i64, out: &mut Vec<usize>) {
        out.clear();
        for dx in -k..=k {
            for dy in -k..=k {
                if dx.abs() != k && dy.abs() != k {
                    continue;
                }
                if let Some(ids) = self.cells.get(&(c.0 + dx, c.1 + dy)) {
                    out.extend_from_slice(ids);
                }
            }
        }
    }
}

/// Voronoi cells of `seeds` clipped to `extent` grown by the configured
/// fraction. Seeds within `snap_epsilon` of an earlier seed get no cell.
pub fn voronoi_points(seeds: &[Coord], extent: BBox, cfg: &GeometryConfig) -> Result<Vec<VoronoiCell>, GeometryError> {
    cfg.validate()?;
    if seeds.len() < 2 {
        return Err(GeometryError::TooFewSeeds(seeds.len()));
    }
    let mut keep: Vec<usize> = Vec::new();
    {
        let mut table: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
        let cell = cfg.snap_epsilon * 2.0;
        'seeds: for (i, s) in seeds.iter().enumerate() {
            let k = ((s.x / cell).floor() as i64, (s.y / cell).floor() as i64);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = table.get(&(k.0 + dx, k.1 + dy)) {
                        if ids.iter().any(|&j| seeds[j].distance(s) <= cfg.snap_epsilon) {
                            continue 'seeds;
                        }
                    }
                }
            }
            table.entry(k).or_default().push(i);
            keep.push(i);
        }
    }
    if keep.len() < 2 {
        return Err(GeometryError::DuplicateSeedsOnly);
    }
    let pts: Vec<Coord> = keep.iter().map(|&i| seeds[i]).collect();
    let mut bb = extent;
    for p in &pts {
        bb.expand_to(*p);
    }
    let outer = expanded(bb, cfg.voronoi_extent_expansion);
    let frame: Vec<Coord> = vec![
        Coord::new(outer.xmin, outer.ymin),
        Coord::new(outer.xmax, outer.ymin),
        Coord::new(outer.xmax, outer.ymax),
        Coord::new(outer.xmin, outer.ymax),
    ];
    let grid = Grid::new(&pts, outer);
    let max_k = grid.cols.max(grid.rows);
    let mut cells = Vec::with_capacity(pts.len());
    let mut ring_ids = Vec::new();
    for (li, &s) in pts.iter().enumerate() {
        let mut poly = frame.clone();
        let home = grid.key(s);
        for k in 0..=max_k {
            grid.ring(home, k, &mut ring_ids);
            for &j in &ring_ids {
                if j != li {
                    poly = clip_half_plane(&poly, s, pts[j]);
                }
            }
            let reach = poly.iter().map(|p| p.distance(&s)).fold(0.0, f64::max);
            if k as f64 * grid.h > 2.0 * reach {
                break;
            }
        }
        if poly.len() < 3 {
            continue;
        }
        // counter-clockwise from clipping; stored clockwise
        poly.reverse();
        poly.push(poly[0]);
        cells.push(VoronoiCell { polygon: Geometry::Polygon(vec![poly]), source: keep[li] });
    }
    Ok(cells)
}

fn densify(part: &[Coord], step: f64, out: &mut Vec<Coord>) {
    for w in part.windows(2) {
        let len = w[0].distance(&w[1]);
        let n = (len / step).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push(Coord::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y)));
        }
    }
    if let Some(last) = part.last() {
        out.push(*last);
    }
}

/// Regions nearest to each feature: features are densified into seeds, the
/// seed cells are built, and cells are merged per source feature.
pub fn voronoi_features(d: &Dataset, extent: BBox, cfg: &GeometryConfig) -> Result<Vec<VoronoiCell>, GeometryError> {
    let geoms: Vec<Geometry> = d.geometries().cloned().collect();
    voronoi_geometries(&geoms, extent, cfg)
}

/// [`voronoi_features`] over a plain geometry list, which may mix kinds.
pub fn voronoi_geometries(geoms: &[Geometry], extent: BBox, cfg: &GeometryConfig) -> Result<Vec<VoronoiCell>, GeometryError> {
    cfg.validate()?;
    let live: Vec<usize> = (0..geoms.len()).filter(|&i| !geoms[i].is_empty()).collect();
    if live.len() < 2 {
        return Err(GeometryError::TooFewSeeds(live.len()));
    }
    let data_bbox = live
        .iter()
        .filter_map(|&i| geoms[i].bbox())
        .reduce(|a, b| a.union(&b))
        .expect("non-empty geometries");
    let diag = if data_bbox.diagonal() > 0.0 { data_bbox.diagonal() } else { extent.diagonal() };
    let step = cfg.densify_interval.unwrap_or(diag / 1000.0);
    let mut seeds = Vec::new();
    let mut owner = Vec::new();
    for &fi in &live {
        let mut pts = Vec::new();
        match &geoms[fi] {
            Geometry::Null => {}
            Geometry::Point(p) => pts.push(*p),
            Geometry::MultiPoint(ps) => pts.extend_from_slice(ps),
            Geometry::PolyLine(parts) => parts.iter().for_each(|p| densify(p, step, &mut pts)),
            Geometry::Polygon(rings) => rings.iter().for_each(|r| {
                densify(r, step, &mut pts);
                pts.pop();
            }),
        }
        owner.extend(std::iter::repeat(fi).take(pts.len()));
        seeds.extend(pts);
    }
    let cells = voronoi_points(&seeds, extent, cfg)?;
    let mut by_feature: BTreeMap<usize, Vec<Geometry>> = BTreeMap::new();
    for c in cells {
        by_feature.entry(owner[c.source]).or_default().push(c.polygon);
    }
    by_feature
        .into_iter()
        .map(|(fi, polys)| {
            let polygon =
                if polys.len() == 1 { polys.into_iter().next().expect("one") } else { disjoint_union(&polys, cfg)? };
            Ok(VoronoiCell { polygon, source: fi })
        })
        .collect()
}
