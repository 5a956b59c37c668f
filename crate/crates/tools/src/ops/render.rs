//! Minimal rasterizer: even-odd polygon fill, 1-px strokes, square markers.

use image::{Rgba, RgbaImage};

use shapegpt_core::{BBox, Coord, Dataset, Geometry};

pub const CANVAS_SIZE: u32 = 1024;

const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

struct Canvas {
    img: RgbaImage,
    origin: Coord,
    scale: f64,
    offset: (f64, f64),
}

impl Canvas {
    fn fit(bb: BBox) -> Canvas {
        let size = CANVAS_SIZE as f64;
        let span = bb.width().max(bb.height());
        let (w, h) = if span == 0.0 { (1.0, 1.0) } else { (bb.width().max(span * 1e-3), bb.height().max(span * 1e-3)) };
        let scale = (size * 0.9 / w).min(size * 0.9 / h);
        let offset = ((size - bb.width() * scale) / 2.0, (size - bb.height() * scale) / 2.0);
        Canvas {
            img: RgbaImage::from_pixel(CANVAS_SIZE, CANVAS_SIZE, Rgba([255, 255, 255, 255])),
            origin: Coord::new(bb.xmin, bb.ymax),
            scale,
            offset,
        }
    }

    /// World to pixel space, y pointing down.
    fn px(&self, c: Coord) -> (f64, f64) {
        (self.offset.0 + (c.x - self.origin.x) * self.scale, self.offset.1 + (self.origin.y - c.y) * self.scale)
    }

    fn blend(&mut self, x: i64, y: i64, rgb: [u8; 3], alpha: f64) {
        if x < 0 || y < 0 || x >= CANVAS_SIZE as i64 || y >= CANVAS_SIZE as i64 {
            return;
        }
        let p = self.img.get_pixel_mut(x as u32, y as u32);
        for k in 0..3 {
            p.0[k] = (p.0[k] as f64 * (1.0 - alpha) + rgb[k] as f64 * alpha).round() as u8;
        }
    }

    fn line(&mut self, a: Coord, b: Coord, rgb: [u8; 3]) {
        let ((x0, y0), (x1, y1)) = (self.px(a), self.px(b));
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as i64;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.blend((x0 + t * (x1 - x0)).floor() as i64, (y0 + t * (y1 - y0)).floor() as i64, rgb, 1.0);
        }
    }

    fn marker(&mut self, c: Coord, rgb: [u8; 3]) {
        let (x, y) = self.px(c);
        for dx in -2..=2 {
            for dy in -2..=2 {
                self.blend(x.floor() as i64 + dx, y.floor() as i64 + dy, rgb, 1.0);
            }
        }
    }

    fn fill(&mut self, rings: &[Vec<Coord>], rgb: [u8; 3]) {
        let edges: Vec<((f64, f64), (f64, f64))> =
            rings.iter().flat_map(|r| r.windows(2).map(|w| (self.px(w[0]), self.px(w[1])))).collect();
        let (ymin, ymax) = edges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a.1).min(b.1), hi.max(a.1).max(b.1))
        });
        let (r0, r1) = (ymin.floor().max(0.0) as i64, ymax.ceil().min(CANVAS_SIZE as f64) as i64);
        let mut xs = Vec::new();
        for row in r0..r1 {
            let yc = row as f64 + 0.5;
            xs.clear();
            for (a, b) in &edges {
                if (a.1 <= yc) != (b.1 <= yc) {
                    xs.push(a.0 + (yc - a.1) / (b.1 - a.1) * (b.0 - a.0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let (from, to) = ((pair[0] - 0.5).ceil() as i64, (pair[1] - 0.5).floor() as i64);
                for x in from..=to {
                    self.blend(x, row, rgb, 0.35);
                }
            }
        }
    }

    fn draw(&mut self, g: &Geometry, rgb: [u8; 3]) {
        match g {
            Geometry::Null => {}
            Geometry::Point(p) => self.marker(*p, rgb),
            Geometry::MultiPoint(ps) => ps.iter().for_each(|p| self.marker(*p, rgb)),
            Geometry::PolyLine(parts) => parts.iter().flat_map(|p| p.windows(2)).for_each(|w| self.line(w[0], w[1], rgb)),
            Geometry::Polygon(rings) => {
                self.fill(rings, rgb);
                rings.iter().flat_map(|r| r.windows(2)).for_each(|w| self.line(w[0], w[1], rgb));
            }
        }
    }
}

/// Draws layers bottom to top; `None` when nothing has coordinates.
pub fn render_layers(layers: &[&Dataset]) -> Option<RgbaImage> {
    let bb = layers
        .iter()
        .flat_map(|d| d.geometries())
        .filter_map(Geometry::bbox)
        .reduce(|a, b| a.union(&b))?;
    let mut c = Canvas::fit(bb);
    for (i, d) in layers.iter().enumerate() {
        let rgb = PALETTE[i % PALETTE.len()];
        for g in d.geometries() {
            c.draw(g, rgb);
        }
    }
    Some(c.img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapegpt_core::{Feature, ShapeKind};

    #[test]
    fn square_fills_centre_with_margin() {
        let d = Dataset::new(
            ShapeKind::Polygon,
            vec![],
            vec![Feature::new(Geometry::Polygon(vec![BBox::new(0.0, 0.0, 10.0, 10.0).to_ring()]), vec![])],
            None,
        )
        .unwrap();
        let img = render_layers(&[&d]).unwrap();
        assert_eq!(img.dimensions(), (1024, 1024));
        assert_ne!(img.get_pixel(512, 512).0, [255, 255, 255, 255]);
        // 5% margin stays blank
        assert_eq!(img.get_pixel(20, 512).0, [255, 255, 255, 255]);
        assert_ne!(img.get_pixel(52, 512).0, [255, 255, 255, 255]);
    }
}
