use serde::{Deserialize, Serialize};

use crate::model::{Coord, Geometry};

use super::primitives::{cross2, dot, sub};
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MbrMode {
    AxisAligned,
    MinArea,
}

impl MbrMode {
    pub fn parse(s: &str) -> Option<MbrMode> {
        match s {
            "axis_aligned" => Some(MbrMode::AxisAligned),
            "min_area" => Some(MbrMode::MinArea),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinRect {
    /// Closed clockwise ring of 4 corners.
    pub polygon: Geometry,
    pub area: f64,
    /// Direction of the first side in degrees, in [0, 180).
    pub angle_deg: f64,
    /// Collinear or single-point input: the rectangle has zero area.
    pub degenerate: bool,
}

/// Convex hull, counter-clockwise, no repeated closing point, collinear
/// points dropped.
pub fn convex_hull(points: &[Coord]) -> Vec<Coord> {
    let mut pts: Vec<Coord> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Coord, a: Coord, b: Coord| cross2(sub(a, o), sub(b, o));
    let mut lower: Vec<Coord> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Coord> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn closed_cw(mut corners: Vec<Coord>) -> Geometry {
    // corners arrive counter-clockwise
    corners.reverse();
    corners.push(corners[0]);
    Geometry::Polygon(vec![corners])
}

fn norm_angle(u: Coord) -> f64 {
    u.y.atan2(u.x).to_degrees().rem_euclid(180.0) % 180.0
}

pub fn min_bounding_rect(points: &[Coord], mode: MbrMode) -> Result<MinRect, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    if mode == MbrMode::AxisAligned {
        let mut b = crate::model::BBox::from_coord(points[0]);
        for p in points {
            b.expand_to(*p);
        }
        let corners = vec![
            Coord::new(b.xmin, b.ymin),
            Coord::new(b.xmax, b.ymin),
            Coord::new(b.xmax, b.ymax),
            Coord::new(b.xmin, b.ymax),
        ];
        return Ok(MinRect {
            polygon: closed_cw(corners),
            area: b.area(),
            angle_deg: 0.0,
            degenerate: b.area() == 0.0,
        });
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        let p = hull[0];
        let q = *hull.last().expect("non-empty");
        let angle = if p == q { 0.0 } else { norm_angle(sub(q, p)) };
        return Ok(MinRect { polygon: closed_cw(vec![p, q, q, p]), area: 0.0, angle_deg: angle, degenerate: true });
    }

    let n = hull.len();
    let at = |i: usize| hull[i % n];
    let mut best: Option<(f64, Vec<Coord>, f64)> = None;
    let (mut top, mut right, mut left) = (1usize, 1usize, 0usize);
    for i in 0..n {
        let o = hull[i];
        let e = sub(at(i + 1), o);
        let len = dot(e, e).sqrt();
        let u = Coord::new(e.x / len, e.y / len);
        let v = Coord::new(-u.y, u.x);
        let along = |p: Coord| dot(sub(p, o), u);
        let across = |p: Coord| dot(sub(p, o), v);
        if i == 0 {
            right = 1;
        }
        while along(at(right + 1)) > along(at(right)) {
            right += 1;
        }
        if i == 0 {
            top = right;
        }
        while across(at(top + 1)) > across(at(top)) {
            top += 1;
        }
        if i == 0 {
            left = top;
        }
        while along(at(left + 1)) < along(at(left)) {
            left += 1;
        }
        let (a, b, h) = (along(at(left)), along(at(right)), across(at(top)));
        let area = (b - a) * h;
        if best.as_ref().map_or(true, |(ba, _, _)| area < *ba) {
            let pt = |s: f64, t: f64| Coord::new(o.x + s * u.x + t * v.x, o.y + s * u.y + t * v.y);
            best = Some((area, vec![pt(a, 0.0), pt(b, 0.0), pt(b, h), pt(a, h)], norm_angle(u)));
        }
    }
    let (area, corners, angle) = best.expect("hull has edges");
    Ok(MinRect { polygon: closed_cw(corners), area, angle_deg: angle, degenerate: false })
}
