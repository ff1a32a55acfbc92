//! GPS arithmetic, great-circle distance, Web-Mercator projection, and the
//! mu-range video selection rule.
//!
//! All angles are decimal degrees. Pixel coordinates follow the slippy-map
//! convention: a `256 * 2^zoom` square world with y growing southward.

use crate::math;
use crate::{Error, Result};
use alloc::vec::Vec;

/// Mean Earth radius in miles, used by [`haversine_miles`].
pub const EARTH_RADIUS_MILES: f64 = 3958.7613;

/// Latitude bound of the Web-Mercator projection.
pub const MERCATOR_MAX_LAT_DEGREES: f64 = 85.05113;

/// Default lower bound (degrees) of the mu video selection range.
pub const MU_LOWER_DEGREES: f64 = 0.001;

/// Default upper bound (degrees) of the mu video selection range.
pub const MU_UPPER_DEGREES: f64 = 0.004;

/// Highest supported tile zoom level.
pub const MAX_ZOOM: u8 = 22;

/// A validated GPS point in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    /// Builds a point, rejecting coordinates outside the valid ranges.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::LatitudeOutOfRange(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::LongitudeOutOfRange(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// A global pixel coordinate at a fixed zoom level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    x: u64,
    y: u64,
    zoom: u8,
}

impl PixelCoord {
    pub fn new(x: u64, y: u64, zoom: u8) -> Result<Self> {
        if zoom > MAX_ZOOM {
            return Err(Error::ZoomOutOfRange(zoom));
        }
        let world = world_pixels(zoom);
        if x >= world || y >= world {
            return Err(Error::PixelOutOfBounds { x, y, zoom });
        }
        Ok(Self { x, y, zoom })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn zoom(&self) -> u8 {
        self.zoom
    }
}

/// Side length of the pixel world at `zoom`: `256 * 2^zoom`.
pub fn world_pixels(zoom: u8) -> u64 {
    256u64 << zoom
}

/// The mu selection statistic of a GPS trajectory: the larger of its
/// latitude span and longitude span, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuRange {
    pub mu: f64,
    pub lat_range: f64,
    pub lon_range: f64,
}

/// Computes [`MuRange`] over a nonempty list of points.
pub fn gps_range_mu(points: &[GeoPoint]) -> Result<MuRange> {
    let first = points.first().ok_or(Error::NoGpsLabels)?;
    let (mut lat_min, mut lat_max) = (first.lat, first.lat);
    let (mut lon_min, mut lon_max) = (first.lon, first.lon);
    for p in &points[1..] {
        lat_min = lat_min.min(p.lat);
        lat_max = lat_max.max(p.lat);
        lon_min = lon_min.min(p.lon);
        lon_max = lon_max.max(p.lon);
    }
    let lat_range = lat_max - lat_min;
    let lon_range = lon_max - lon_min;
    Ok(MuRange {
        mu: lat_range.max(lon_range),
        lat_range,
        lon_range,
    })
}

/// The video selection rule: keep a trajectory iff `lo <= mu <= hi`, both
/// bounds inclusive. Defaults are [`MU_LOWER_DEGREES`] / [`MU_UPPER_DEGREES`].
pub fn accept_video(points: &[GeoPoint], lo: f64, hi: f64) -> Result<bool> {
    let range = gps_range_mu(points)?;
    Ok(range.mu >= lo && range.mu <= hi)
}

/// Great-circle distance in miles on a sphere of radius
/// [`EARTH_RADIUS_MILES`]. Exactly symmetric in its arguments.
pub fn haversine_miles(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    // abs() keeps sin() arguments identical under argument swap.
    let dlat = math::abs(lat_b - lat_a);
    let dlon = math::abs(b.lon.to_radians() - a.lon.to_radians());
    let sl = math::sin(dlat / 2.0);
    let so = math::sin(dlon / 2.0);
    let h = sl * sl + math::cos(lat_a) * math::cos(lat_b) * so * so;
    2.0 * EARTH_RADIUS_MILES * math::asin(math::sqrt(h.min(1.0)))
}

/// Projects a GPS point to global pixels at `zoom`.
///
/// `x = floor((lon + 180)/360 * world)`;
/// `y = floor((1 - ln(tan(lat) + sec(lat)) / pi) / 2 * world)`.
pub fn gps_to_global_pixel(p: &GeoPoint, zoom: u8) -> Result<PixelCoord> {
    if zoom > MAX_ZOOM {
        return Err(Error::ZoomOutOfRange(zoom));
    }
    if math::abs(p.lat) > MERCATOR_MAX_LAT_DEGREES {
        return Err(Error::OutsideMercatorDomain(p.lat));
    }
    let world = world_pixels(zoom) as f64;
    let x = math::floor((p.lon + 180.0) / 360.0 * world);
    let lat_rad = p.lat.to_radians();
    let merc = math::ln(math::tan(lat_rad) + 1.0 / math::cos(lat_rad));
    let y = math::floor((1.0 - merc / core::f64::consts::PI) / 2.0 * world);
    // lon = 180 and the Mercator bound land exactly on the world edge;
    // clamp onto the last pixel.
    let max = world_pixels(zoom) - 1;
    let x = (x.max(0.0) as u64).min(max);
    let y = (y.max(0.0) as u64).min(max);
    PixelCoord::new(x, y, zoom)
}

/// Inverse projection, evaluated at the pixel center.
pub fn global_pixel_to_gps(px: &PixelCoord) -> GeoPoint {
    let world = world_pixels(px.zoom) as f64;
    let lon = (px.x as f64 + 0.5) / world * 360.0 - 180.0;
    let merc = core::f64::consts::PI * (1.0 - 2.0 * (px.y as f64 + 0.5) / world);
    let lat = math::atan(math::sinh(merc)).to_degrees();
    // A valid pixel center always maps into the valid GPS domain.
    GeoPoint { lat, lon }
}

/// Convenience: projects every point, failing on the first invalid one.
pub fn project_all(points: &[GeoPoint], zoom: u8) -> Result<Vec<PixelCoord>> {
    points.iter().map(|p| gps_to_global_pixel(p, zoom)).collect()
}
