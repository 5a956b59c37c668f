//! Polygon overlay on a noded segment arrangement.
//!
//! Every ring edge of every input is noded, deduplicated, and labelled with
//! per-input winding contributions. An edge becomes part of the result
//! boundary when the result membership differs on its two sides; result
//! rings are then traced with the interior kept on the right, so outer rings
//! come out clockwise and holes counter-clockwise.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::model::{ring_signed_area, BBox, Coord, Dataset, Feature, Geometry};

use super::noding::node;
use super::primitives::{locate, orient_polygon_rings, point_in_rings, rings_bbox, Location};
use super::{GeometryConfig, GeometryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BooleanOp {
    Intersection,
    Union,
    Difference,
}

struct AreaInput {
    rings: Vec<Vec<Coord>>,
    bbox: BBox,
}

struct Edge {
    a: usize,
    b: usize,
    /// (area input, signed count of contributions running a -> b).
    winding: Vec<(usize, i32)>,
    on_line: bool,
}

struct Arrangement {
    coords: Vec<Coord>,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize), usize>,
    /// Vertex path of every line input part.
    line_paths: Vec<Vec<Vec<usize>>>,
    areas: Vec<AreaInput>,
}

#[derive(Clone, Copy)]
enum Source {
    Area(usize),
    Line,
}

impl Arrangement {
    fn build(
        areas: Vec<Vec<Vec<Coord>>>,
        lines: &[&[Vec<Coord>]],
        eps: f64,
    ) -> Result<Arrangement, GeometryError> {
        let mut segs = Vec::new();
        let mut sources = Vec::new();
        let mut area_inputs = Vec::with_capacity(areas.len());
        for (ai, mut rings) in areas.into_iter().enumerate() {
            rings.retain(|r| r.len() >= 4);
            orient_polygon_rings(&mut rings);
            for r in &rings {
                for w in r.windows(2) {
                    if w[0] != w[1] {
                        segs.push([w[0], w[1]]);
                        sources.push(Source::Area(ai));
                    }
                }
            }
            let bbox = rings_bbox(&rings).unwrap_or_default();
            area_inputs.push(AreaInput { rings, bbox });
        }
        let mut line_segs: Vec<Vec<Vec<usize>>> = Vec::with_capacity(lines.len());
        for parts in lines.iter() {
            let mut per_part = Vec::with_capacity(parts.len());
            for part in parts.iter() {
                let mut ids = Vec::new();
                for w in part.windows(2) {
                    if w[0] != w[1] {
                        ids.push(segs.len());
                        segs.push([w[0], w[1]]);
                        sources.push(Source::Line);
                    }
                }
                per_part.push(ids);
            }
            line_segs.push(per_part);
        }

        let noded = node(&segs, eps);
        for &(i, j) in &noded.crossings {
            if let (Source::Area(x), Source::Area(y)) = (sources[i], sources[j]) {
                if x == y {
                    return Err(GeometryError::InvalidGeometry(format!(
                        "ring edges of polygon {x} cross near ({}, {})",
                        segs[i][0].x, segs[i][0].y
                    )));
                }
            }
        }

        let mut arr = Arrangement {
            coords: noded.coords,
            edges: Vec::new(),
            index: HashMap::new(),
            line_paths: Vec::new(),
            areas: area_inputs,
        };
        for (si, chain) in noded.chains.iter().enumerate() {
            for w in chain.windows(2) {
                let (u, v) = (w[0], w[1]);
                let ei = arr.edge_id(u, v);
                match sources[si] {
                    Source::Area(ai) => {
                        let dir = if u < v { 1 } else { -1 };
                        let e = &mut arr.edges[ei];
                        match e.winding.iter_mut().find(|(k, _)| *k == ai) {
                            Some((_, d)) => *d += dir,
                            None => e.winding.push((ai, dir)),
                        }
                    }
                    Source::Line => arr.edges[ei].on_line = true,
                }
            }
        }
        arr.line_paths = line_segs
            .iter()
            .map(|parts| {
                parts
                    .iter()
                    .map(|ids| {
                        let mut path: Vec<usize> = Vec::new();
                        for &si in ids {
                            for &v in &noded.chains[si] {
                                if path.last() != Some(&v) {
                                    path.push(v);
                                }
                            }
                        }
                        path
                    })
                    .collect()
            })
            .collect();
        Ok(arr)
    }

    fn edge_id(&mut self, u: usize, v: usize) -> usize {
        let key = (u.min(v), u.max(v));
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.edges.len();
        self.edges.push(Edge { a: key.0, b: key.1, winding: Vec::new(), on_line: false });
        self.index.insert(key, id);
        id
    }

    fn midpoint(&self, e: &Edge) -> Coord {
        let (p, q) = (self.coords[e.a], self.coords[e.b]);
        Coord::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)
    }

    fn winding(e: &Edge, input: usize) -> i32 {
        e.winding.iter().find(|(k, _)| *k == input).map_or(0, |(_, d)| *d)
    }

    /// Whether area input `input` covers the (left, right) side of `e` as
    /// seen walking from `a` to `b`.
    fn sides(&self, e: &Edge, input: usize) -> (bool, bool) {
        let d = Self::winding(e, input);
        if d != 0 {
            return (d < 0, d > 0);
        }
        let inside = self.contains(input, self.midpoint(e));
        (inside, inside)
    }

    fn contains(&self, input: usize, p: Coord) -> bool {
        let a = &self.areas[input];
        a.bbox.contains(p) && point_in_rings(p, &a.rings)
    }

    /// Directed boundary edges of the region where `f` holds, interior on the right.
    fn boundary<F>(&self, f: F) -> Vec<(usize, usize)>
    where
        F: Fn(&dyn Fn(usize) -> (bool, bool)) -> (bool, bool),
    {
        let mut out = Vec::new();
        for e in &self.edges {
            let side = |i: usize| self.sides(e, i);
            let (l, r) = f(&side);
            if l != r {
                out.push(if r { (e.a, e.b) } else { (e.b, e.a) });
            }
        }
        out
    }
}

/// Follows directed edges into closed rings, turning as sharply right as
/// possible at each vertex. Chains that cannot close are dropped.
fn trace_rings(coords: &[Coord], directed: &[(usize, usize)], eps: f64) -> Vec<Vec<Coord>> {
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(from, _)) in directed.iter().enumerate() {
        outgoing.entry(from).or_default().push(i);
    }
    let angle = |from: usize, to: usize| {
        let (p, q) = (coords[from], coords[to]);
        (q.y - p.y).atan2(q.x - p.x)
    };
    let mut used = vec![false; directed.len()];
    let mut rings = Vec::new();
    for start in 0..directed.len() {
        if used[start] {
            continue;
        }
        let mut ids = vec![directed[start].0];
        let mut cur = start;
        let closed = loop {
            used[cur] = true;
            let (u, v) = directed[cur];
            let back = angle(v, u);
            let next = outgoing.get(&v).and_then(|cands| {
                cands
                    .iter()
                    .map(|&e| {
                        let w = directed[e].1;
                        let mut delta = (angle(v, w) - back).rem_euclid(TAU);
                        if w == u || delta == 0.0 {
                            delta = TAU;
                        }
                        (delta, e)
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, e)| e)
            });
            match next {
                Some(e) if e == start => break true,
                Some(e) if !used[e] => {
                    ids.push(v);
                    cur = e;
                }
                _ => break false,
            }
        };
        if !closed {
            continue;
        }
        let ids = remove_spikes(ids);
        if ids.len() < 3 {
            continue;
        }
        let mut ring: Vec<Coord> = ids.iter().map(|&i| coords[i]).collect();
        ring.push(ring[0]);
        let perimeter: f64 = ring.windows(2).map(|w| w[0].distance(&w[1])).sum();
        if ring_signed_area(&ring).abs() <= 0.5 * eps * perimeter {
            continue;
        }
        rings.push(ring);
    }
    rings
}

fn remove_spikes(mut ids: Vec<usize>) -> Vec<usize> {
    loop {
        let n = ids.len();
        if n < 3 {
            return ids;
        }
        let spike = (0..n).find(|&i| ids[(i + n - 1) % n] == ids[(i + 1) % n]);
        match spike {
            Some(i) => {
                let j = (i + 1) % n;
                let (hi, lo) = (i.max(j), i.min(j));
                ids.remove(hi);
                ids.remove(lo);
            }
            None => {
                ids.dedup();
                return ids;
            }
        }
    }
}

/// Groups traced rings into polygons: each counter-clockwise hole goes to
/// the smallest clockwise outer ring containing it.
fn assemble(rings: Vec<Vec<Coord>>) -> Vec<Vec<Vec<Coord>>> {
    let (outers, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| ring_signed_area(r) < 0.0);
    let mut polys: Vec<(f64, BBox, Vec<Vec<Coord>>)> = outers
        .into_iter()
        .map(|r| (ring_signed_area(&r).abs(), rings_bbox(std::slice::from_ref(&r)).unwrap_or_default(), vec![r]))
        .collect();
    for h in holes {
        let probe = Coord::new((h[0].x + h[1].x) / 2.0, (h[0].y + h[1].y) / 2.0);
        let owner = polys
            .iter()
            .enumerate()
            .filter(|(_, (_, bb, rs))| bb.contains(probe) && point_in_rings(probe, &rs[..1]))
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i);
        if let Some(i) = owner {
            polys[i].2.push(h);
        }
    }
    polys.into_iter().map(|(_, _, rs)| rs).collect()
}

fn polygon_rings(g: &Geometry) -> Result<&[Vec<Coord>], GeometryError> {
    match g {
        Geometry::Polygon(rings) => Ok(rings),
        other => Err(GeometryError::WrongGeometryKind { expected: "Polygon", found: other.kind_name() }),
    }
}

fn flatten(polys: Vec<Vec<Vec<Coord>>>) -> Geometry {
    Geometry::Polygon(polys.into_iter().flatten().collect())
}

pub fn polygon_boolean(op: BooleanOp, a: &Geometry, b: &Geometry, cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    let (ra, rb) = (polygon_rings(a)?, polygon_rings(b)?);
    let arr = Arrangement::build(vec![ra.to_vec(), rb.to_vec()], &[], cfg.snap_epsilon)?;
    let directed = arr.boundary(|side| {
        let (al, ar) = side(0);
        let (bl, br) = side(1);
        match op {
            BooleanOp::Intersection => (al && bl, ar && br),
            BooleanOp::Union => (al || bl, ar || br),
            BooleanOp::Difference => (al && !bl, ar && !br),
        }
    });
    Ok(flatten(assemble(trace_rings(&arr.coords, &directed, cfg.snap_epsilon))))
}

/// Union of any number of polygons.
pub fn union_all(polys: &[Geometry], cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    let areas = polys.iter().map(|g| polygon_rings(g).map(<[_]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    let n = areas.len();
    let arr = Arrangement::build(areas, &[], cfg.snap_epsilon)?;
    let directed = arr.boundary(|side| {
        let (mut l, mut r) = (false, false);
        for i in 0..n {
            let (a, b) = side(i);
            l |= a;
            r |= b;
            if l && r {
                break;
            }
        }
        (l, r)
    });
    Ok(flatten(assemble(trace_rings(&arr.coords, &directed, cfg.snap_epsilon))))
}

/// Union of polygons known to have pairwise disjoint interiors (such as
/// Voronoi cells): shared edges cancel by winding alone.
pub fn disjoint_union(polys: &[Geometry], cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    let areas = polys.iter().map(|g| polygon_rings(g).map(<[_]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    let arr = Arrangement::build(areas, &[], cfg.snap_epsilon)?;
    let directed: Vec<(usize, usize)> = arr
        .edges
        .iter()
        .filter_map(|e| {
            let total: i32 = e.winding.iter().map(|(_, d)| d).sum();
            match total.signum() {
                1 => Some((e.a, e.b)),
                -1 => Some((e.b, e.a)),
                _ => None,
            }
        })
        .collect();
    Ok(flatten(assemble(trace_rings(&arr.coords, &directed, cfg.snap_epsilon))))
}

/// Splits a polygon along blade polylines. Blade pieces outside the polygon
/// are ignored; the output faces partition the input.
pub fn split_polygon_by_lines(
    poly: &Geometry,
    blades: &[Geometry],
    cfg: &GeometryConfig,
) -> Result<Vec<Geometry>, GeometryError> {
    let rings = polygon_rings(poly)?;
    let mut lines: Vec<&[Vec<Coord>]> = Vec::with_capacity(blades.len());
    for b in blades {
        match b {
            Geometry::PolyLine(parts) => lines.push(parts),
            other => {
                return Err(GeometryError::WrongGeometryKind { expected: "PolyLine", found: other.kind_name() })
            }
        }
    }
    let arr = Arrangement::build(vec![rings.to_vec()], &lines, cfg.snap_epsilon)?;
    let mut directed = Vec::new();
    for e in &arr.edges {
        let d = Arrangement::winding(e, 0);
        if d > 0 {
            directed.push((e.a, e.b));
        } else if d < 0 {
            directed.push((e.b, e.a));
        } else if e.on_line && arr.contains(0, arr.midpoint(e)) {
            directed.push((e.a, e.b));
            directed.push((e.b, e.a));
        }
    }
    Ok(assemble(trace_rings(&arr.coords, &directed, cfg.snap_epsilon))
        .into_iter()
        .map(Geometry::Polygon)
        .collect())
}

/// Intersection of one geometry with a polygon boundary. Points are kept when
/// inside or on the boundary; an empty geometry means nothing remains.
pub fn clip_geometry(g: &Geometry, boundary: &Geometry, cfg: &GeometryConfig) -> Result<Geometry, GeometryError> {
    let rings = polygon_rings(boundary)?;
    let keep = |p: Coord| locate(p, rings, cfg.snap_epsilon) != Location::Outside;
    Ok(match g {
        Geometry::Null => Geometry::Null,
        Geometry::Point(p) => {
            if keep(*p) {
                Geometry::Point(*p)
            } else {
                Geometry::Null
            }
        }
        Geometry::MultiPoint(pts) => Geometry::MultiPoint(pts.iter().copied().filter(|&p| keep(p)).collect()),
        Geometry::Polygon(_) => polygon_boolean(BooleanOp::Intersection, g, boundary, cfg)?,
        Geometry::PolyLine(parts) => Geometry::PolyLine(clip_lines(parts, rings, cfg)?),
    })
}

fn clip_lines(parts: &[Vec<Coord>], rings: &[Vec<Coord>], cfg: &GeometryConfig) -> Result<Vec<Vec<Coord>>, GeometryError> {
    let arr = Arrangement::build(vec![rings.to_vec()], &[parts], cfg.snap_epsilon)?;
    let mut out = Vec::new();
    for path in &arr.line_paths[0] {
        let kept: Vec<bool> = path
            .windows(2)
            .map(|w| {
                let e = &arr.edges[arr.index[&(w[0].min(w[1]), w[0].max(w[1]))]];
                !e.winding.is_empty() || arr.contains(0, arr.midpoint(e))
            })
            .collect();
        let mut pieces: Vec<Vec<usize>> = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        for (k, w) in path.windows(2).enumerate() {
            if kept[k] {
                if current.is_empty() {
                    current.push(w[0]);
                }
                current.push(w[1]);
            } else if !current.is_empty() {
                pieces.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            pieces.push(current);
        }
        let closed = path.len() > 2 && path.first() == path.last();
        if closed && pieces.len() > 1 && kept[0] && kept[kept.len() - 1] {
            let first = pieces.remove(0);
            pieces.last_mut().expect("more than one piece").extend_from_slice(&first[1..]);
        }
        out.extend(pieces.into_iter().map(|p| p.into_iter().map(|v| arr.coords[v]).collect::<Vec<_>>()));
    }
    Ok(out)
}

/// Clips every feature of `target` to `boundary`, dropping features with
/// nothing left and copying attributes verbatim.
pub fn clip_dataset(target: &Dataset, boundary: &Geometry, cfg: &GeometryConfig) -> Result<Dataset, GeometryError> {
    let mut features = Vec::new();
    for f in target.features() {
        let g = clip_geometry(&f.geometry, boundary, cfg)?;
        if !g.is_empty() {
            features.push(Feature::new(g, f.attributes.clone()));
        }
    }
    Dataset::new(target.shape_kind(), target.fields().to_vec(), features, target.crs_wkt().map(str::to_string))
        .map_err(|e| GeometryError::InvalidGeometry(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_area;

    fn sq(x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
        Geometry::Polygon(vec![BBox::new(x0, y0, x1, y1).to_ring()])
    }

    fn area(g: &Geometry) -> f64 {
        polygon_area(g).unwrap()
    }

    fn cfg() -> GeometryConfig {
        GeometryConfig::default()
    }

    #[test]
    fn offset_squares() {
        let a = sq(0.0, 0.0, 1.0, 1.0);
        let b = sq(0.5, 0.5, 1.5, 1.5);
        assert!((area(&polygon_boolean(BooleanOp::Intersection, &a, &b, &cfg()).unwrap()) - 0.25).abs() < 1e-12);
        assert!((area(&polygon_boolean(BooleanOp::Union, &a, &b, &cfg()).unwrap()) - 1.75).abs() < 1e-12);
        assert!((area(&polygon_boolean(BooleanOp::Difference, &a, &b, &cfg()).unwrap()) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn identical_and_disjoint() {
        let a = sq(0.0, 0.0, 1.0, 1.0);
        let u = polygon_boolean(BooleanOp::Union, &a, &a, &cfg()).unwrap();
        assert_eq!(area(&u), 1.0);
        let i = polygon_boolean(BooleanOp::Intersection, &a, &a, &cfg()).unwrap();
        assert_eq!(area(&i), 1.0);
        let far = sq(5.0, 5.0, 6.0, 6.0);
        assert_eq!(area(&polygon_boolean(BooleanOp::Difference, &a, &far, &cfg()).unwrap()), 1.0);
        let none = polygon_boolean(BooleanOp::Intersection, &a, &far, &cfg()).unwrap();
        assert_eq!(none, Geometry::Polygon(vec![]));
    }

    #[test]
    fn difference_makes_a_hole() {
        let a = sq(0.0, 0.0, 4.0, 4.0);
        let b = sq(1.0, 1.0, 2.0, 2.0);
        let d = polygon_boolean(BooleanOp::Difference, &a, &b, &cfg()).unwrap();
        let Geometry::Polygon(rings) = &d else { panic!() };
        assert_eq!(rings.len(), 2);
        assert!(ring_signed_area(&rings[0]) < 0.0 && ring_signed_area(&rings[1]) > 0.0);
        assert_eq!(area(&d), 15.0);
        d.validate().unwrap();
    }

    #[test]
    fn edge_adjacent_union_merges() {
        let u = union_all(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0), sq(0.0, 1.0, 2.0, 2.0)], &cfg()).unwrap();
        let Geometry::Polygon(rings) = &u else { panic!() };
        assert_eq!(rings.len(), 1);
        assert_eq!(area(&u), 4.0);
        let d = disjoint_union(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 0.0, 2.0, 1.0)], &cfg()).unwrap();
        assert_eq!(area(&d), 2.0);
    }

    #[test]
    fn vertex_touching_union_keeps_two_rings() {
        let u = union_all(&[sq(0.0, 0.0, 1.0, 1.0), sq(1.0, 1.0, 2.0, 2.0)], &cfg()).unwrap();
        let Geometry::Polygon(rings) = &u else { panic!() };
        assert_eq!(rings.len(), 2);
        assert_eq!(area(&u), 2.0);
    }

    #[test]
    fn self_crossing_ring_is_rejected() {
        let bow = Geometry::Polygon(vec![vec![
            Coord::new(0.0, 0.0),
            Coord::new(1.0, 1.0),
            Coord::new(1.0, 0.0),
            Coord::new(0.0, 1.0),
            Coord::new(0.0, 0.0),
        ]]);
        let r = polygon_boolean(BooleanOp::Union, &bow, &sq(5.0, 5.0, 6.0, 6.0), &cfg());
        assert!(matches!(r, Err(GeometryError::InvalidGeometry(_))));
    }

    fn vline(x: f64, y0: f64, y1: f64) -> Geometry {
        Geometry::PolyLine(vec![vec![Coord::new(x, y0), Coord::new(x, y1)]])
    }

    #[test]
    fn split_square() {
        let s = sq(0.0, 0.0, 1.0, 1.0);
        let halves = split_polygon_by_lines(&s, &[vline(0.5, -1.0, 2.0)], &cfg()).unwrap();
        assert_eq!(halves.len(), 2);
        for h in &halves {
            assert!((area(h) - 0.5).abs() < 1e-12);
        }
        let hline = Geometry::PolyLine(vec![vec![Coord::new(-1.0, 0.5), Coord::new(2.0, 0.5)]]);
        let quarters = split_polygon_by_lines(&s, &[vline(0.5, -1.0, 2.0), hline], &cfg()).unwrap();
        assert_eq!(quarters.len(), 4);
        for q in &quarters {
            assert!((area(q) - 0.25).abs() < 1e-12);
        }
        let outside = split_polygon_by_lines(&s, &[vline(3.0, -1.0, 2.0)], &cfg()).unwrap();
        assert_eq!(outside.len(), 1);
        assert_eq!(area(&outside[0]), 1.0);
        // blade ending inside does not split
        let partial = split_polygon_by_lines(&s, &[vline(0.5, -1.0, 0.5)], &cfg()).unwrap();
        assert_eq!(partial.len(), 1);
        assert!((area(&partial[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clip_points_and_lines() {
        let b = sq(0.0, 0.0, 1.0, 1.0);
        assert_eq!(clip_geometry(&Geometry::Point(Coord::new(2.0, 2.0)), &b, &cfg()).unwrap(), Geometry::Null);
        assert!(!clip_geometry(&Geometry::Point(Coord::new(1.0, 0.5)), &b, &cfg()).unwrap().is_empty());
        let l = Geometry::PolyLine(vec![vec![Coord::new(-1.0, 0.5), Coord::new(2.0, 0.5)]]);
        let c = clip_geometry(&l, &b, &cfg()).unwrap();
        assert_eq!(c, Geometry::PolyLine(vec![vec![Coord::new(0.0, 0.5), Coord::new(1.0, 0.5)]]));
        // a line running along the boundary is kept
        let edge = Geometry::PolyLine(vec![vec![Coord::new(-1.0, 0.0), Coord::new(2.0, 0.0)]]);
        let c = clip_geometry(&edge, &b, &cfg()).unwrap();
        assert_eq!(c, Geometry::PolyLine(vec![vec![Coord::new(0.0, 0.0), Coord::new(1.0, 0.0)]]));
    }
}
