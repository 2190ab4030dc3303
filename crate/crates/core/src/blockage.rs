//! Fallen-pole footprints and the road edges they make impassable.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{latlon_to_utm_in, segments_intersect, GeoPoint, Segment, UtmFrame, Vec2, Verdict};
use crate::osm::{find_nearby_edges, RoadEdge, RoadGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleState {
    pub pole_id: String,
    pub base: GeoPoint,
    pub height_m: f64,
    /// Degrees from vertical.
    pub tilt_deg: f64,
    /// Degrees clockwise from north.
    pub azimuth_deg: f64,
}

impl PoleState {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.height_m > 0.0 && self.height_m.is_finite()) {
            return Err(Error::Domain(format!("pole {}: height must be positive", self.pole_id)));
        }
        if !(0.0..=90.0).contains(&self.tilt_deg) {
            return Err(Error::Domain(format!("pole {}: tilt outside [0, 90]", self.pole_id)));
        }
        if !(0.0..360.0).contains(&self.azimuth_deg) {
            return Err(Error::Domain(format!("pole {}: azimuth outside [0, 360)", self.pole_id)));
        }
        Ok(())
    }

    /// Horizontal reach of the fallen pole, in metres.
    pub fn reach(&self) -> f64 {
        self.height_m * self.tilt_deg.to_radians().sin()
    }
}

/// One entry of the sensor feed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReading {
    pub pole_id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_m: Option<f64>,
    pub tilt_deg: f64,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageConfig {
    /// Cross-product tolerance passed to the segment test.
    pub eps: f64,
    /// Poles leaning less than this are treated as standing.
    pub min_tilt_deg: f64,
    /// Height used when a reading carries none.
    pub default_height_m: f64,
    /// Edge search radius around the pole base; `None` means the pole height.
    pub search_radius_m: Option<f64>,
}

impl Default for BlockageConfig {
    fn default() -> Self {
        BlockageConfig {
            eps: crate::geo::DEFAULT_EPS,
            min_tilt_deg: 10.0,
            default_height_m: 12.0,
            search_radius_m: None,
        }
    }
}

pub fn poles_from_readings(readings: &[PoleReading], cfg: &BlockageConfig) -> Result<Vec<PoleState>> {
    readings
        .iter()
        .map(|r| {
            let pole = PoleState {
                pole_id: r.pole_id.clone(),
                base: GeoPoint::new(r.lat, r.lon)?,
                height_m: r.height_m.unwrap_or(cfg.default_height_m),
                tilt_deg: r.tilt_deg,
                azimuth_deg: r.azimuth_deg,
            };
            pole.validate()?;
            Ok(pole)
        })
        .collect()
}

pub fn load_poles(path: &Path, cfg: &BlockageConfig) -> Result<Vec<PoleState>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let readings: Vec<PoleReading> = serde_json::from_str(&text)?;
    poles_from_readings(&readings, cfg)
}

/// Ground-plane segment from the pole base to its tip, in `frame`.
///
/// The azimuth is applied against grid north of the frame.
pub fn pole_projection(pole: &PoleState, frame: UtmFrame) -> Result<Segment> {
    pole.validate()?;
    let base = latlon_to_utm_in(pole.base, frame)?;
    let reach = pole.reach();
    let az = pole.azimuth_deg.to_radians();
    let tip = base.offset(Vec2::new(reach * az.sin(), reach * az.cos()))?;
    Segment::new(base, tip)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeImpact {
    pub edge_id: usize,
    pub verdict: Verdict,
    pub coverage_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockageReport {
    pub pole_id: String,
    pub projected: Segment,
    /// Pole leaned less than the tilt threshold and was not assessed.
    pub skipped: bool,
    pub affected: Vec<EdgeImpact>,
    pub blocked_edge_ids: Vec<usize>,
}

/// Fraction of the road width spanned, across the road axis, by the part of
/// `pole` lying inside the edge's width corridor.
pub fn corridor_coverage(edge: &RoadEdge, pole: &Segment) -> f64 {
    let origin = edge.geometry.a.xy();
    let axis = edge.geometry.vector();
    let len = axis.norm();
    if len == 0.0 || edge.width_m <= 0.0 {
        return 0.0;
    }
    let u = axis.scale(1.0 / len);
    let n = Vec2::new(-u.y, u.x);
    let local = |p: Vec2| {
        let d = p - origin;
        (d.dot(u), d.dot(n))
    };
    let (s0, v0) = local(pole.a.xy());
    let (s1, v1) = local(pole.b.xy());
    let half = 0.5 * edge.width_m;

    // Liang-Barsky clip of the pole against [0, len] x [-half, half].
    let (ds, dv) = (s1 - s0, v1 - v0);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [(-ds, s0), (ds, len - s0), (-dv, v0 + half), (dv, half - v0)] {
        if p == 0.0 {
            if q < 0.0 {
                return 0.0;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return 0.0;
    }
    let chord = ((t1 - t0) * dv).abs();
    (chord / edge.width_m).clamp(0.0, 1.0)
}

/// Decide which nearby edges a pole makes impassable.
///
/// An edge is blocked when the pole reaches its centreline (crossing or
/// touching) or spans more than half of its width.
pub fn assess(
    pole: &PoleState,
    graph: &RoadGraph,
    search_radius: f64,
    cfg: &BlockageConfig,
) -> Result<BlockageReport> {
    pole.validate()?;
    if !(search_radius >= pole.height_m) {
        return Err(Error::Domain(format!(
            "pole {}: search radius {search_radius} m is below pole height {} m",
            pole.pole_id, pole.height_m
        )));
    }
    let projected = pole_projection(pole, graph.frame())?;
    let mut report = BlockageReport {
        pole_id: pole.pole_id.clone(),
        projected,
        skipped: pole.tilt_deg < cfg.min_tilt_deg,
        affected: Vec::new(),
        blocked_edge_ids: Vec::new(),
    };
    if report.skipped {
        return Ok(report);
    }

    // Widen by half the widest road so corridors grazed near their edge are seen.
    let base = projected.a;
    for edge_id in find_nearby_edges(graph, base, search_radius + 0.5 * graph.max_width()) {
        let edge = &graph.edges()[edge_id];
        if edge.geometry.distance_to(base.xy()) > search_radius + 0.5 * edge.width_m {
            continue;
        }
        let verdict = segments_intersect(&edge.geometry, &projected, cfg.eps)?;
        let coverage_fraction = corridor_coverage(edge, &projected);
        if coverage_fraction > 0.5 || verdict != Verdict::Disjoint {
            report.blocked_edge_ids.push(edge_id);
        }
        report.affected.push(EdgeImpact {
            edge_id,
            verdict,
            coverage_fraction,
        });
    }
    report.blocked_edge_ids.sort_unstable();
    Ok(report)
}

/// Assess every pole, using the configured search radius or each pole's height.
pub fn assess_all(
    poles: &[PoleState],
    graph: &RoadGraph,
    cfg: &BlockageConfig,
) -> Result<Vec<BlockageReport>> {
    poles
        .iter()
        .map(|p| assess(p, graph, cfg.search_radius_m.unwrap_or(p.height_m).max(p.height_m), cfg))
        .collect()
}

/// New graph with the union of all blocked edges marked impassable.
pub fn apply_blockages(graph: &RoadGraph, reports: &[BlockageReport]) -> Result<RoadGraph> {
    let blocked: BTreeSet<usize> = reports
        .iter()
        .flat_map(|r| r.blocked_edge_ids.iter().copied())
        .collect();
    graph.with_impassable(&blocked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Hemisphere, PlanarPoint};
    use crate::osm::GraphNode;

    fn frame() -> UtmFrame {
        UtmFrame::new(54, Hemisphere::North).unwrap()
    }

    fn pole(h: f64, tilt: f64, az: f64) -> PoleState {
        PoleState {
            pole_id: "p".into(),
            base: GeoPoint::new(35.615, 139.514).unwrap(),
            height_m: h,
            tilt_deg: tilt,
            azimuth_deg: az,
        }
    }

    #[test]
    fn upright_pole_projects_to_a_point() {
        let s = pole_projection(&pole(12.0, 0.0, 45.0), frame()).unwrap();
        assert_eq!(s.length(), 0.0);
    }

    #[test]
    fn fallen_east() {
        let s = pole_projection(&pole(12.0, 90.0, 90.0), frame()).unwrap();
        let d = s.vector();
        assert!((d.x - 12.0).abs() < 1e-9);
        assert!(d.y.abs() < 1e-9);
    }

    #[test]
    fn thirty_degrees_north() {
        let s = pole_projection(&pole(10.0, 30.0, 0.0), frame()).unwrap();
        let d = s.vector();
        assert!(d.x.abs() < 1e-9);
        assert!((d.y - 5.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_poles_rejected() {
        assert!(pole_projection(&pole(0.0, 10.0, 0.0), frame()).is_err());
        assert!(pole_projection(&pole(10.0, 91.0, 0.0), frame()).is_err());
        assert!(pole_projection(&pole(10.0, 30.0, 360.0), frame()).is_err());
    }

    /// Straight east-west road of 100 m through the pole base's northing,
    /// offset `dy` metres north.
    fn road_graph(base: PlanarPoint, dy: f64, width: f64) -> RoadGraph {
        let f = frame();
        let a = PlanarPoint::new(base.easting - 50.0, base.northing + dy, f).unwrap();
        let b = PlanarPoint::new(base.easting + 50.0, base.northing + dy, f).unwrap();
        let geo = GeoPoint::new(0.0, 0.0).unwrap();
        let nodes = vec![
            GraphNode { id: 1, geo, planar: a },
            GraphNode { id: 2, geo, planar: b },
        ];
        let geometry = Segment::new(a, b).unwrap();
        let edges = vec![RoadEdge {
            edge_id: 0,
            way_id: 1,
            from: 1,
            to: 2,
            geometry,
            length_m: geometry.length(),
            width_m: width,
            travel_time_min: 1.0,
            impassable: false,
            oneway: false,
        }];
        RoadGraph::new(f, nodes, edges).unwrap()
    }

    #[test]
    fn pole_falling_short_of_corridor() {
        let p = pole(12.0, 90.0, 0.0);
        let base = latlon_to_utm_in(p.base, frame()).unwrap();
        // near corridor edge at 12 + 10 m north of base
        let g = road_graph(base, 25.0, 6.0);
        let r = assess(&p, &g, 30.0, &BlockageConfig::default()).unwrap();
        assert_eq!(r.affected.len(), 1);
        assert_eq!(r.affected[0].coverage_fraction, 0.0);
        assert_eq!(r.affected[0].verdict, Verdict::Disjoint);
        assert!(r.blocked_edge_ids.is_empty());
    }

    #[test]
    fn partial_and_crossing_coverage() {
        let p = pole(12.0, 90.0, 0.0);
        let base = latlon_to_utm_in(p.base, frame()).unwrap();
        // tip at 12 m; corridor 10..16 m north -> 2 m of 6 m covered
        let g = road_graph(base, 13.0, 6.0);
        let r = assess(&p, &g, 12.0, &BlockageConfig::default()).unwrap();
        assert!((r.affected[0].coverage_fraction - 2.0 / 6.0).abs() < 1e-6);
        assert!(r.blocked_edge_ids.is_empty());
        // centreline at 10 m -> crossing
        let g = road_graph(base, 10.0, 6.0);
        let r = assess(&p, &g, 12.0, &BlockageConfig::default()).unwrap();
        assert_eq!(r.affected[0].verdict, Verdict::Crossing);
        assert_eq!(r.blocked_edge_ids, vec![0]);
    }

    #[test]
    fn search_radius_below_height_is_rejected() {
        let p = pole(12.0, 90.0, 0.0);
        let base = latlon_to_utm_in(p.base, frame()).unwrap();
        let g = road_graph(base, 10.0, 6.0);
        assert!(matches!(
            assess(&p, &g, 11.0, &BlockageConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn low_tilt_is_skipped() {
        let p = pole(12.0, 5.0, 0.0);
        let base = latlon_to_utm_in(p.base, frame()).unwrap();
        let g = road_graph(base, 0.5, 6.0);
        let r = assess(&p, &g, 12.0, &BlockageConfig::default()).unwrap();
        assert!(r.skipped);
        assert!(r.blocked_edge_ids.is_empty());
    }

    #[test]
    fn apply_union_and_unknown_edge() {
        let p = pole(12.0, 90.0, 0.0);
        let base = latlon_to_utm_in(p.base, frame()).unwrap();
        let g = road_graph(base, 10.0, 6.0);
        assert_eq!(apply_blockages(&g, &[]).unwrap(), g);
        let r = assess(&p, &g, 12.0, &BlockageConfig::default()).unwrap();
        let blocked = apply_blockages(&g, &[r.clone(), r.clone()]).unwrap();
        assert!(blocked.edges()[0].impassable);
        assert!(!g.edges()[0].impassable);
        let mut bad = r;
        bad.blocked_edge_ids = vec![7];
        assert!(matches!(apply_blockages(&g, &[bad]), Err(Error::UnknownEdge(7))));
    }

    #[test]
    fn readings_fill_default_height() {
        let readings = vec![PoleReading {
            pole_id: "a".into(),
            lat: 35.6,
            lon: 139.5,
            height_m: None,
            tilt_deg: 40.0,
            azimuth_deg: 10.0,
        }];
        let poles = poles_from_readings(&readings, &BlockageConfig::default()).unwrap();
        assert_eq!(poles[0].height_m, 12.0);
    }
}
