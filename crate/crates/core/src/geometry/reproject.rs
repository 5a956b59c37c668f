//! Geographic WGS84 <-> spherical Web Mercator.
//!
//! y = R ln tan(pi/4 + phi/2) is evaluated as R asinh(tan phi), which is the
//! same function but exact at the equator.

use crate::model::Coord;

use super::GeometryError;

pub const EARTH_RADIUS: f64 = 6378137.0;
pub const MAX_LATITUDE: f64 = 85.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crs {
    Wgs84,
    WebMercator,
}

impl Crs {
    /// Accepts "EPSG:4326", "epsg:3857", or the bare code.
    pub fn parse(tag: &str) -> Option<Crs> {
        let t = tag.trim();
        let code = t.strip_prefix("EPSG:").or_else(|| t.strip_prefix("epsg:")).unwrap_or(t);
        match code {
            "4326" => Some(Crs::Wgs84),
            "3857" => Some(Crs::WebMercator),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Crs::Wgs84 => "EPSG:4326",
            Crs::WebMercator => "EPSG:3857",
        }
    }

    /// ESRI-style WKT written to `.prj` files.
    pub fn wkt(self) -> &'static str {
        match self {
            Crs::Wgs84 => {
                r#"GEOGCS["GCS_WGS_1984",DATUM["D_WGS_1984",SPHEROID["WGS_1984",6378137.0,298.257223563]],PRIMEM["Greenwich",0.0],UNIT["Degree",0.0174532925199433]]"#
            }
            Crs::WebMercator => {
                r#"PROJCS["WGS_1984_Web_Mercator_Auxiliary_Sphere",GEOGCS["GCS_WGS_1984",DATUM["D_WGS_1984",SPHEROID["WGS_1984",6378137.0,298.257223563]],PRIMEM["Greenwich",0.0],UNIT["Degree",0.0174532925199433]],PROJECTION["Mercator_Auxiliary_Sphere"],PARAMETER["False_Easting",0.0],PARAMETER["False_Northing",0.0],PARAMETER["Central_Meridian",0.0],PARAMETER["Standard_Parallel_1",0.0],PARAMETER["Auxiliary_Sphere_Type",0.0],UNIT["Meter",1.0]]"#
            }
        }
    }
}

pub fn reproject(c: Coord, from: &str, to: &str) -> Result<Coord, GeometryError> {
    let unsupported = || GeometryError::UnsupportedCrsPair { from: from.to_string(), to: to.to_string() };
    let (f, t) = (Crs::parse(from).ok_or_else(unsupported)?, Crs::parse(to).ok_or_else(unsupported)?);
    match (f, t) {
        _ if f == t => Ok(c),
        (Crs::Wgs84, Crs::WebMercator) => {
            if !(c.y.abs() < MAX_LATITUDE) {
                return Err(GeometryError::LatitudeOutOfRange(c.y));
            }
            let lat = c.y.to_radians();
            Ok(Coord::new(EARTH_RADIUS * c.x.to_radians(), EARTH_RADIUS * lat.tan().asinh()))
        }
        (Crs::WebMercator, Crs::Wgs84) => Ok(Coord::new(
            (c.x / EARTH_RADIUS).to_degrees(),
            (c.y / EARTH_RADIUS).sinh().atan().to_degrees(),
        )),
        _ => unreachable!("both variants covered"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_points() {
        assert_eq!(reproject(Coord::new(0.0, 0.0), "EPSG:4326", "EPSG:3857").unwrap(), Coord::new(0.0, 0.0));
        let x = reproject(Coord::new(180.0, 0.0), "EPSG:4326", "EPSG:3857").unwrap().x;
        assert!((x - 20037508.342789244).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            reproject(Coord::new(0.0, 86.0), "EPSG:4326", "EPSG:3857"),
            Err(GeometryError::LatitudeOutOfRange(_))
        ));
        assert!(matches!(
            reproject(Coord::new(0.0, 0.0), "EPSG:4326", "EPSG:27700"),
            Err(GeometryError::UnsupportedCrsPair { .. })
        ));
        assert_eq!(reproject(Coord::new(5.0, 6.0), "3857", "EPSG:3857").unwrap(), Coord::new(5.0, 6.0));
    }
}
