//! Geodetic to UTM conversion and the planar predicates used for pole/road
//! overlap tests.
//!
//! The projection is the Krüger series form of transverse Mercator carried to
//! sixth order in the third flattening, which stays well below a millimetre of
//! error across a UTM zone. All planar geometry in a run happens in a single
//! [`UtmFrame`] so that segments never straddle zones.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;
const K0: f64 = 0.9996;
const FALSE_EASTING: f64 = 500_000.0;
const FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;
/// Poleward limit of the UTM grid.
pub const UTM_MAX_LAT: f64 = 84.0;

/// Default tolerance band for cross products, in square metres.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::Domain(format!("latitude {} outside [-90, 90]", self.lat)));
        }
        if !self.lon.is_finite() || !(-180.0..180.0).contains(&self.lon) {
            return Err(Error::Domain(format!("longitude {} outside [-180, 180)", self.lon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    North,
    South,
}

/// A UTM zone plus hemisphere: the plane every point of one analysis run is
/// projected into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UtmFrame {
    pub zone: u8,
    pub hemisphere: Hemisphere,
}

impl UtmFrame {
    pub fn new(zone: u8, hemisphere: Hemisphere) -> Result<Self> {
        if !(1..=60).contains(&zone) {
            return Err(Error::Domain(format!("UTM zone {zone} outside [1, 60]")));
        }
        Ok(UtmFrame { zone, hemisphere })
    }

    /// The frame a single point naturally falls in.
    pub fn of_point(p: GeoPoint) -> Result<Self> {
        p.validate()?;
        UtmFrame::new(zone_number(p.lon), hemisphere_of(p.lat))
    }

    /// Frame of the bounding-box centroid of `points`.
    pub fn for_points<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Result<Self> {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for p in points {
            any = true;
            lo = (lo.0.min(p.lat), lo.1.min(p.lon));
            hi = (hi.0.max(p.lat), hi.1.max(p.lon));
        }
        if !any {
            return Err(Error::Domain("cannot choose a UTM frame for an empty point set".into()));
        }
        UtmFrame::of_point(GeoPoint {
            lat: 0.5 * (lo.0 + hi.0),
            lon: 0.5 * (lo.1 + hi.1),
        })
    }

    fn central_meridian(&self) -> f64 {
        f64::from(self.zone) * 6.0 - 183.0
    }

    fn false_northing(&self) -> f64 {
        match self.hemisphere {
            Hemisphere::North => 0.0,
            Hemisphere::South => FALSE_NORTHING_SOUTH,
        }
    }
}

impl fmt::Display for UtmFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match self.hemisphere {
            Hemisphere::North => 'N',
            Hemisphere::South => 'S',
        };
        write!(f, "{}{}", self.zone, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
    pub hemisphere: Hemisphere,
}

impl PlanarPoint {
    pub fn new(easting: f64, northing: f64, frame: UtmFrame) -> Result<Self> {
        let p = PlanarPoint {
            easting,
            northing,
            zone: frame.zone,
            hemisphere: frame.hemisphere,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.easting > 0.0 && self.easting < 1_000_000.0) {
            return Err(Error::Domain(format!("easting {} outside (0, 1000000)", self.easting)));
        }
        if !self.northing.is_finite() {
            return Err(Error::Domain("non-finite northing".into()));
        }
        UtmFrame::new(self.zone, self.hemisphere).map(|_| ())
    }

    pub fn frame(&self) -> UtmFrame {
        UtmFrame {
            zone: self.zone,
            hemisphere: self.hemisphere,
        }
    }

    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.easting, self.northing)
    }

    /// Point displaced by `d` metres (east, north) in the same frame.
    pub fn offset(&self, d: Vec2) -> Result<Self> {
        PlanarPoint::new(self.easting + d.x, self.northing + d.y, self.frame())
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (other.xy() - self.xy()).norm()
    }
}

/// Plain planar vector in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

/// z-component of the 2-D cross product, `u.x·v.y − u.y·v.x`.
pub fn cross2(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: PlanarPoint,
    pub b: PlanarPoint,
}

impl Segment {
    pub fn new(a: PlanarPoint, b: PlanarPoint) -> Result<Self> {
        if a.frame() != b.frame() {
            return Err(Error::Domain(format!(
                "segment endpoints in different UTM frames ({} vs {})",
                a.frame(),
                b.frame()
            )));
        }
        Ok(Segment { a, b })
    }

    pub fn frame(&self) -> UtmFrame {
        self.a.frame()
    }

    /// b − a
    pub fn vector(&self) -> Vec2 {
        self.b.xy() - self.a.xy()
    }

    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    /// Minimum distance from `p` to any point of the segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        point_segment_distance(p - self.a.xy(), Vec2::default(), self.vector())
    }
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}

pub fn zone_number(lon: f64) -> u8 {
    let z = ((lon + 180.0) / 6.0).floor() as i64 + 1;
    z.clamp(1, 60) as u8
}

fn hemisphere_of(lat: f64) -> Hemisphere {
    if lat < 0.0 {
        Hemisphere::South
    } else {
        Hemisphere::North
    }
}

struct Kruger {
    /// Rectifying radius scaled by k0.
    a_k0: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
    e: f64,
}

fn kruger() -> Kruger {
    let n = WGS84_F / (2.0 - WGS84_F);
    let n2 = n * n;
    let n3 = n2 * n;
    let n4 = n3 * n;
    let n5 = n4 * n;
    let n6 = n5 * n;
    let a_rect = WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    let alpha = [
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0
            + 7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
            - 1983433.0 * n6 / 1935360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0
            + 167603.0 * n6 / 181440.0,
        49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
        34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
        212378941.0 * n6 / 319334400.0,
    ];
    let beta = [
        n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0
            + 96199.0 * n6 / 604800.0,
        n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0
            - 1118711.0 * n6 / 3870720.0,
        17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
        4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
        4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
        20648693.0 * n6 / 638668800.0,
    ];
    Kruger {
        a_k0: K0 * a_rect,
        alpha,
        beta,
        e: (WGS84_F * (2.0 - WGS84_F)).sqrt(),
    }
}

/// Project to UTM in the point's own zone.
pub fn latlon_to_utm(p: GeoPoint) -> Result<PlanarPoint> {
    let frame = UtmFrame::of_point(p)?;
    latlon_to_utm_in(p, frame)
}

/// Project into a caller-chosen frame, so that nearby points on either side of
/// a zone boundary share one plane.
pub fn latlon_to_utm_in(p: GeoPoint, frame: UtmFrame) -> Result<PlanarPoint> {
    p.validate()?;
    if p.lat.abs() > UTM_MAX_LAT {
        return Err(Error::Domain(format!(
            "latitude {} outside the UTM domain |lat| <= {UTM_MAX_LAT}",
            p.lat
        )));
    }
    let k = kruger();
    let phi = p.lat.to_radians();
    let mut dlon = p.lon - frame.central_meridian();
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let lam = dlon.to_radians();

    let sin_phi = phi.sin();
    let t = (sin_phi.atanh() - k.e * (k.e * sin_phi).atanh()).sinh();
    let xi_p = t.atan2(lam.cos());
    let eta_p = (lam.sin() / (1.0 + t * t).sqrt()).atanh();

    let mut xi = xi_p;
    let mut eta = eta_p;
    for (j, a) in k.alpha.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi += a * (m * xi_p).sin() * (m * eta_p).cosh();
        eta += a * (m * xi_p).cos() * (m * eta_p).sinh();
    }
    PlanarPoint::new(
        FALSE_EASTING + k.a_k0 * eta,
        frame.false_northing() + k.a_k0 * xi,
        frame,
    )
}

/// Inverse of [`latlon_to_utm_in`].
pub fn utm_to_latlon(p: PlanarPoint) -> Result<GeoPoint> {
    p.validate()?;
    let frame = p.frame();
    let k = kruger();
    let xi = (p.northing - frame.false_northing()) / k.a_k0;
    let eta = (p.easting - FALSE_EASTING) / k.a_k0;

    let mut xi_p = xi;
    let mut eta_p = eta;
    for (j, b) in k.beta.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi_p -= b * (m * xi).sin() * (m * eta).cosh();
        eta_p -= b * (m * xi).cos() * (m * eta).sinh();
    }
    let sinh_eta = eta_p.sinh();
    let cos_xi = xi_p.cos();
    let tau_p = xi_p.sin() / (sinh_eta * sinh_eta + cos_xi * cos_xi).sqrt();
    let lam = sinh_eta.atan2(cos_xi);

    // Newton iteration for tan(phi) from the conformal tan(phi').
    let e2 = k.e * k.e;
    let mut tau = tau_p;
    for _ in 0..8 {
        let s = (k.e * (k.e * tau / (1.0 + tau * tau).sqrt()).atanh()).sinh();
        let tau_i = tau * (1.0 + s * s).sqrt() - s * (1.0 + tau * tau).sqrt();
        let step = (tau_p - tau_i) / (1.0 + tau_i * tau_i).sqrt() * (1.0 + (1.0 - e2) * tau * tau)
            / ((1.0 - e2) * (1.0 + tau * tau).sqrt());
        tau += step;
        if step.abs() < 1e-14 * tau.abs().max(1.0) {
            break;
        }
    }
    let mut lon = frame.central_meridian() + lam.to_degrees();
    if lon >= 180.0 {
        lon -= 360.0;
    } else if lon < -180.0 {
        lon += 360.0;
    }
    GeoPoint::new(tau.atan().to_degrees(), lon)
}

/// Outcome of a road/pole segment test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Both segments properly cross: each one's endpoints lie strictly on
    /// opposite sides of the other.
    Crossing,
    /// Endpoint contact or collinear overlap.
    Touching,
    Disjoint,
}

fn sign_band(v: f64, eps: f64) -> i8 {
    if v > eps {
        1
    } else if v < -eps {
        -1
    } else {
        0
    }
}

/// Classify two raw planar segments. `eps` is the band (in the units of a
/// cross product, m²) inside which a cross product counts as zero.
///
/// Returns `None` when the road segment has zero length.
pub fn classify_segments(road: (Vec2, Vec2), pole: (Vec2, Vec2), eps: f64) -> Option<Verdict> {
    // Work relative to the road start so large UTM offsets cancel first.
    let origin = road.0;
    let r0 = Vec2::default();
    let r1 = road.1 - origin;
    let p0 = pole.0 - origin;
    let p1 = pole.1 - origin;

    let road_v = r1 - r0;
    if road_v.x == 0.0 && road_v.y == 0.0 {
        return None;
    }
    let pole_v = p1 - p0;
    if pole_v.x == 0.0 && pole_v.y == 0.0 {
        return Some(Verdict::Disjoint);
    }

    // Sides of the pole endpoints relative to the road line, and vice versa.
    let d1 = sign_band(cross2(road_v, p0 - r0), eps);
    let d2 = sign_band(cross2(road_v, p1 - r0), eps);
    let d3 = sign_band(cross2(pole_v, r0 - p0), eps);
    let d4 = sign_band(cross2(pole_v, r1 - p0), eps);

    if d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0 {
        // Collinear within tolerance: overlap of the projections on the road axis.
        let len2 = road_v.dot(road_v);
        let s0 = p0.dot(road_v) / len2;
        let s1 = p1.dot(road_v) / len2;
        let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
        let slack = eps / len2;
        return Some(if hi >= -slack && lo <= 1.0 + slack {
            Verdict::Touching
        } else {
            Verdict::Disjoint
        });
    }

    let road_side = d1 * d2;
    let pole_side = d3 * d4;
    Some(if road_side < 0 && pole_side < 0 {
        Verdict::Crossing
    } else if (road_side == 0 && pole_side <= 0) || (pole_side == 0 && road_side <= 0) {
        Verdict::Touching
    } else {
        Verdict::Disjoint
    })
}

/// Test a road segment against a pole projection.
pub fn segments_intersect(road: &Segment, pole: &Segment, eps: f64) -> Result<Verdict> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps must be non-negative, got {eps}")));
    }
    if road.frame() != pole.frame() {
        return Err(Error::Domain(format!(
            "road in frame {} but pole in frame {}",
            road.frame(),
            pole.frame()
        )));
    }
    classify_segments((road.a.xy(), road.b.xy()), (pole.a.xy(), pole.b.xy()), eps)
        .ok_or_else(|| Error::Domain("zero-length road segment".into()))
}
