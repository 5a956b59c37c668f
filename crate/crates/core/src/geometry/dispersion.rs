use serde::Serialize;

use crate::model::Coord;

use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Degeneracy {
    None,
    /// All points lie on one line; orientation follows the line.
    Collinear,
    /// All points coincide; orientation is reported as 0.
    Coincident,
}

/// Standard-deviational-ellipse summary of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionStats {
    pub mean_center: Coord,
    pub standard_distance: f64,
    /// Major-axis direction, counter-clockwise from +x, in [0, 180).
    pub orientation_deg: f64,
    pub sigma_major: f64,
    pub sigma_minor: f64,
    pub degeneracy: Degeneracy,
}

pub fn dispersion_stats(points: &[Coord]) -> Result<DispersionStats, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::TooFewPoints { needed: 1, got: 0 });
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let center = Coord::new(cx, cy);
    let standard_distance = ((sxx + syy) / n).sqrt();
    let scale = sxx + syy;
    if scale == 0.0 {
        return Ok(DispersionStats {
            mean_center: center,
            standard_distance: 0.0,
            orientation_deg: 0.0,
            sigma_major: 0.0,
            sigma_minor: 0.0,
            degeneracy: Degeneracy::Coincident,
        });
    }

    let a = sxx - syy;
    let b = sxy;
    // rotation measured clockwise from north, then turned into an x-axis angle
    let theta_north = if b == 0.0 {
        if a > 0.0 {
            90.0
        } else {
            0.0
        }
    } else {
        ((a + (a * a + 4.0 * b * b).sqrt()) / (2.0 * b)).atan().to_degrees()
    };
    let mut orientation = (90.0 - theta_north).rem_euclid(180.0);
    if orientation >= 180.0 {
        orientation -= 180.0;
    }

    let (ux, uy) = (orientation.to_radians().cos(), orientation.to_radians().sin());
    let (mut major, mut minor) = (0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - cx, p.y - cy);
        let along = dx * ux + dy * uy;
        let across = -dx * uy + dy * ux;
        major += along * along;
        minor += across * across;
    }
    let collinear = (sxx * syy - sxy * sxy).abs() <= 1e-12 * scale * scale;
    let sigma_major = (major / n).sqrt();
    let sigma_minor = if collinear { 0.0 } else { (minor / n).sqrt() };
    Ok(DispersionStats {
        mean_center: center,
        standard_distance,
        orientation_deg: orientation,
        sigma_major: sigma_major.max(sigma_minor),
        sigma_minor: sigma_minor.min(sigma_major),
        degeneracy: if collinear { Degeneracy::Collinear } else { Degeneracy::None },
    })
}
