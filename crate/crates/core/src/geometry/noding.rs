//! Segment noding: splits every input segment at the points where other
//! segments cross or touch it and merges vertices closer than `eps`.

use std::collections::HashMap;

use crate::model::Coord;

use super::primitives::{closest_on_segment, cross2, sub};

pub(crate) struct Noded {
    pub coords: Vec<Coord>,
    /// Vertex ids along each input segment, in order from its start.
    pub chains: Vec<Vec<usize>>,
    /// Input segment pairs crossing at a point interior to both.
    pub crossings: Vec<(usize, usize)>,
}

struct VertexTable {
    cell: f64,
    eps: f64,
    coords: Vec<Coord>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl VertexTable {
    fn new(eps: f64) -> Self {
        VertexTable { cell: eps * 2.0, eps, coords: Vec::new(), grid: HashMap::new() }
    }

    fn key(&self, c: Coord) -> (i64, i64) {
        ((c.x / self.cell).floor() as i64, (c.y / self.cell).floor() as i64)
    }

    fn intern(&mut self, c: Coord) -> usize {
        let (kx, ky) = self.key(c);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.coords[id].distance(&c) <= self.eps) {
                        return id;
                    }
                }
            }
        }
        let id = self.coords.len();
        self.coords.push(c);
        self.grid.entry((kx, ky)).or_default().push(id);
        id
    }
}

pub(crate) fn node(segs: &[[Coord; 2]], eps: f64) -> Noded {
    let n = segs.len();
    let mut splits: Vec<Vec<(f64, Coord)>> = segs.iter().map(|s| vec![(0.0, s[0]), (1.0, s[1])]).collect();
    let mut crossings = Vec::new();

    let xmin = |s: &[Coord; 2]| s[0].x.min(s[1].x);
    let xmax = |s: &[Coord; 2]| s[0].x.max(s[1].x);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xmin(&segs[a]).total_cmp(&xmin(&segs[b])));

    for (oi, &i) in order.iter().enumerate() {
        let si = &segs[i];
        let reach = xmax(si) + eps;
        let (iy0, iy1) = (si[0].y.min(si[1].y) - eps, si[0].y.max(si[1].y) + eps);
        for &j in &order[oi + 1..] {
            let sj = &segs[j];
            if xmin(sj) > reach {
                break;
            }
            if sj[0].y.max(sj[1].y) < iy0 || sj[0].y.min(sj[1].y) > iy1 {
                continue;
            }
            intersect_pair(i, j, segs, eps, &mut splits, &mut crossings);
        }
    }

    let mut table = VertexTable::new(eps);
    // intern original endpoints first so they win over computed points
    for s in segs {
        table.intern(s[0]);
        table.intern(s[1]);
    }
    let chains = splits
        .into_iter()
        .map(|mut pts| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut chain: Vec<usize> = Vec::with_capacity(pts.len());
            for (_, c) in pts {
                let id = table.intern(c);
                if chain.last() != Some(&id) {
                    chain.push(id);
                }
            }
            chain
        })
        .collect();
    Noded { coords: table.coords, chains, crossings }
}

fn intersect_pair(
    i: usize,
    j: usize,
    segs: &[[Coord; 2]],
    eps: f64,
    splits: &mut [Vec<(f64, Coord)>],
    crossings: &mut Vec<(usize, usize)>,
) {
    let (a, b) = (segs[i], segs[j]);
    let near_end = |p: Coord, s: &[Coord; 2]| p.distance(&s[0]) <= eps || p.distance(&s[1]) <= eps;

    // endpoints touching the other segment's interior
    for (from, onto, target) in [(&b, &a, i), (&a, &b, j)] {
        for &e in from.iter() {
            let (d, _, t) = closest_on_segment(e, onto[0], onto[1]);
            if d <= eps && !near_end(e, onto) {
                splits[target].push((t, e));
            }
        }
    }

    let r = sub(a[1], a[0]);
    let s = sub(b[1], b[0]);
    let denom = cross2(r, s);
    if denom == 0.0 {
        return;
    }
    let qp = sub(b[0], a[0]);
    let t = cross2(qp, s) / denom;
    let u = cross2(qp, r) / denom;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
        return;
    }
    let p = Coord::new(a[0].x + t * r.x, a[0].y + t * r.y);
    if near_end(p, &a) || near_end(p, &b) {
        return;
    }
    splits[i].push((t, p));
    splits[j].push((u, p));
    crossings.push((i.min(j), i.max(j)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Coord {
        Coord::new(x, y)
    }

    #[test]
    fn crossing_segments_share_a_vertex() {
        let n = node(&[[c(0.0, 0.0), c(2.0, 2.0)], [c(0.0, 2.0), c(2.0, 0.0)]], 1e-9);
        assert_eq!(n.chains[0].len(), 3);
        assert_eq!(n.chains[1].len(), 3);
        assert_eq!(n.chains[0][1], n.chains[1][1]);
        assert_eq!(n.coords[n.chains[0][1]], c(1.0, 1.0));
        assert_eq!(n.crossings, vec![(0, 1)]);
    }

    #[test]
    fn t_junction_splits_the_stem_target() {
        let n = node(&[[c(0.0, 0.0), c(2.0, 0.0)], [c(1.0, 0.0), c(1.0, 1.0)]], 1e-9);
        assert_eq!(n.chains[0].len(), 3);
        assert_eq!(n.chains[1].len(), 2);
        assert!(n.crossings.is_empty());
    }

    #[test]
    fn collinear_overlap_nodes_both() {
        let n = node(&[[c(0.0, 0.0), c(2.0, 0.0)], [c(1.0, 0.0), c(3.0, 0.0)]], 1e-9);
        assert_eq!(n.chains[0].len(), 3);
        assert_eq!(n.chains[1].len(), 3);
        assert_eq!(n.chains[0][1..], n.chains[1][..2]);
    }

    #[test]
    fn near_vertices_merge() {
        let n = node(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0 + 1e-12, 0.0), c(1.0, 1.0)]], 1e-9);
        assert_eq!(n.coords.len(), 3);
        assert_eq!(n.chains[0][1], n.chains[1][0]);
    }
}
