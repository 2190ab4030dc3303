//! OpenStreetMap XML ingestion and the road graph built from it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{latlon_to_utm_in, utm_to_latlon, GeoPoint, PlanarPoint, Segment, UtmFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsmNode {
    pub id: i64,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsmWay {
    pub id: i64,
    pub node_ids: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

impl OsmWay {
    pub fn highway(&self) -> Option<&str> {
        self.tags.get("highway").map(String::as_str)
    }

    pub fn is_road(&self) -> bool {
        self.highway().is_some()
    }
}

/// Parsed contents of one OSM document. Nodes are keyed by id and ways sorted
/// by id, so sibling order in the source file never matters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OsmDocument {
    pub nodes: BTreeMap<i64, OsmNode>,
    pub ways: Vec<OsmWay>,
    /// Way ids excluded from road extraction (unresolved refs, too few nodes).
    pub dropped_ways: BTreeSet<i64>,
    pub warnings: Vec<String>,
}

impl OsmDocument {
    /// Ways tagged `highway` whose node refs all resolve.
    pub fn road_ways(&self) -> impl Iterator<Item = &OsmWay> {
        self.ways
            .iter()
            .filter(|w| w.is_road() && !self.dropped_ways.contains(&w.id))
    }

    pub fn non_road_ways(&self) -> impl Iterator<Item = &OsmWay> {
        self.ways.iter().filter(|w| !w.is_road())
    }
}

fn parse_error(doc: &roxmltree::Document, node: roxmltree::Node, message: String) -> Error {
    let pos = doc.text_pos_at(node.range().start);
    Error::Parse {
        line: pos.row,
        column: pos.col,
        message,
    }
}

fn attr<'a>(
    doc: &roxmltree::Document,
    node: roxmltree::Node<'a, 'a>,
    name: &str,
) -> Result<&'a str> {
    node.attribute(name).ok_or_else(|| {
        parse_error(
            doc,
            node,
            format!("<{}> is missing attribute '{name}'", node.tag_name().name()),
        )
    })
}

fn parse_num<T: std::str::FromStr>(
    doc: &roxmltree::Document,
    node: roxmltree::Node,
    name: &str,
    raw: &str,
) -> Result<T> {
    raw.trim().parse().map_err(|_| {
        parse_error(doc, node, format!("attribute '{name}' is not a number: {raw:?}"))
    })
}

/// Parse an OSM v0.6 XML document.
pub fn parse_osm(xml: &str) -> Result<OsmDocument> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        Error::Parse {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "osm" {
        return Err(parse_error(
            &doc,
            root,
            format!("root element is <{}>, expected <osm>", root.tag_name().name()),
        ));
    }

    let mut out = OsmDocument::default();
    let mut way_ids = BTreeSet::new();
    for el in root.children().filter(|n| n.is_element()) {
        match el.tag_name().name() {
            "node" => {
                let id: i64 = parse_num(&doc, el, "id", attr(&doc, el, "id")?)?;
                if id < 1 {
                    return Err(parse_error(&doc, el, format!("node id {id} is not positive")));
                }
                let lat = parse_num(&doc, el, "lat", attr(&doc, el, "lat")?)?;
                let lon = parse_num(&doc, el, "lon", attr(&doc, el, "lon")?)?;
                let location = GeoPoint::new(lat, lon)
                    .map_err(|e| parse_error(&doc, el, format!("node {id}: {e}")))?;
                if out.nodes.insert(id, OsmNode { id, location }).is_some() {
                    return Err(parse_error(&doc, el, format!("duplicate node id {id}")));
                }
            }
            "way" => {
                let id: i64 = parse_num(&doc, el, "id", attr(&doc, el, "id")?)?;
                if !way_ids.insert(id) {
                    return Err(parse_error(&doc, el, format!("duplicate way id {id}")));
                }
                let mut node_ids: Vec<i64> = Vec::new();
                let mut tags = BTreeMap::new();
                for child in el.children().filter(|n| n.is_element()) {
                    match child.tag_name().name() {
                        "nd" => {
                            let r = parse_num(&doc, child, "ref", attr(&doc, child, "ref")?)?;
                            if node_ids.last() == Some(&r) {
                                out.warnings.push(format!(
                                    "way {id}: repeated consecutive node {r} collapsed"
                                ));
                            } else {
                                node_ids.push(r);
                            }
                        }
                        "tag" => {
                            let k = attr(&doc, child, "k")?;
                            let v = attr(&doc, child, "v")?;
                            tags.insert(k.to_string(), v.to_string());
                        }
                        _ => {}
                    }
                }
                out.ways.push(OsmWay { id, node_ids, tags });
            }
            // bounds, relation, meta, ... are not needed
            _ => {}
        }
    }
    out.ways.sort_by_key(|w| w.id);

    for way in &out.ways {
        let missing: Vec<i64> = way
            .node_ids
            .iter()
            .copied()
            .filter(|r| !out.nodes.contains_key(r))
            .collect();
        if !missing.is_empty() {
            out.warnings
                .push(format!("way {}: unresolved node refs {missing:?}; dropped", way.id));
            out.dropped_ways.insert(way.id);
        } else if way.node_ids.len() < 2 {
            out.warnings
                .push(format!("way {}: fewer than two nodes; dropped", way.id));
            out.dropped_ways.insert(way.id);
        }
    }
    Ok(out)
}

pub fn read_osm(path: &Path) -> Result<OsmDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_osm(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDefaults {
    pub width_m: f64,
    pub speed_kmh: f64,
}

/// Width and speed per highway class, with a mandatory fallback entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadDefaults {
    pub fallback: ClassDefaults,
    #[serde(default)]
    pub classes: BTreeMap<String, ClassDefaults>,
}

impl RoadDefaults {
    pub fn from_toml(text: &str) -> Result<Self> {
        let d: RoadDefaults = toml::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in std::iter::once(("fallback", &self.fallback))
            .chain(self.classes.iter().map(|(k, v)| (k.as_str(), v)))
        {
            if !(c.width_m > 0.0 && c.width_m.is_finite()) {
                return Err(Error::Invalid(format!("class {name}: width_m must be positive")));
            }
            if !(c.speed_kmh > 0.0 && c.speed_kmh.is_finite()) {
                return Err(Error::Invalid(format!("class {name}: speed_kmh must be positive")));
            }
        }
        Ok(())
    }

    pub fn for_class(&self, class: &str) -> ClassDefaults {
        self.classes.get(class).copied().unwrap_or(self.fallback)
    }
}

impl Default for RoadDefaults {
    fn default() -> Self {
        let c = |width_m, speed_kmh| ClassDefaults { width_m, speed_kmh };
        RoadDefaults {
            fallback: c(4.0, 20.0),
            classes: [
                ("motorway", c(14.0, 80.0)),
                ("trunk", c(12.0, 60.0)),
                ("primary", c(10.0, 50.0)),
                ("secondary", c(8.0, 40.0)),
                ("tertiary", c(7.0, 40.0)),
                ("unclassified", c(6.0, 30.0)),
                ("residential", c(6.0, 30.0)),
                ("service", c(4.0, 20.0)),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Honor `oneway` tags; by default every edge is traversable both ways.
    pub honor_oneway: bool,
    /// Force a frame instead of using the bounding-box centroid.
    pub frame: Option<UtmFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: i64,
    pub geo: GeoPoint,
    pub planar: PlanarPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub edge_id: usize,
    pub way_id: i64,
    pub from: i64,
    pub to: i64,
    pub geometry: Segment,
    pub length_m: f64,
    pub width_m: f64,
    pub travel_time_min: f64,
    #[serde(default)]
    pub impassable: bool,
    /// Traversable only from `from` to `to`.
    #[serde(default)]
    pub oneway: bool,
}

impl RoadEdge {
    /// Node reached when leaving `node` along this edge, if allowed.
    pub fn traverse_from(&self, node: i64) -> Option<i64> {
        if node == self.from {
            Some(self.to)
        } else if node == self.to && !self.oneway {
            Some(self.from)
        } else {
            None
        }
    }
}

/// Immutable road network. Build it with [`RoadGraph::new`] (validated) or
/// [`build_road_graph`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadGraph {
    frame: UtmFrame,
    nodes: BTreeMap<i64, GraphNode>,
    edges: Vec<RoadEdge>,
    #[serde(skip)]
    adjacency: BTreeMap<i64, Vec<usize>>,
}

#[derive(Deserialize)]
struct RoadGraphFile {
    frame: UtmFrame,
    nodes: BTreeMap<i64, GraphNode>,
    edges: Vec<RoadEdge>,
}

impl<'de> Deserialize<'de> for RoadGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = RoadGraphFile::deserialize(d)?;
        RoadGraph::new(f.frame, f.nodes.into_values().collect(), f.edges)
            .map_err(serde::de::Error::custom)
    }
}

const LENGTH_TOLERANCE_M: f64 = 0.01;

impl RoadGraph {
    pub fn new(frame: UtmFrame, nodes: Vec<GraphNode>, edges: Vec<RoadEdge>) -> Result<Self> {
        let mut node_map = BTreeMap::new();
        for n in nodes {
            if n.planar.frame() != frame {
                return Err(Error::Invalid(format!("node {} is not in frame {frame}", n.id)));
            }
            if node_map.insert(n.id, n).is_some() {
                return Err(Error::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut adjacency: BTreeMap<i64, Vec<usize>> =
            node_map.keys().map(|&id| (id, Vec::new())).collect();
        for (i, e) in edges.iter().enumerate() {
            if e.edge_id != i {
                return Err(Error::Invalid(format!(
                    "edge ids must be dense: position {i} holds id {}",
                    e.edge_id
                )));
            }
            for end in [e.from, e.to] {
                if !node_map.contains_key(&end) {
                    return Err(Error::UnknownNode(end));
                }
            }
            if e.from == e.to {
                return Err(Error::Invalid(format!("edge {i} is a self-loop")));
            }
            if e.geometry.frame() != frame {
                return Err(Error::Invalid(format!("edge {i} geometry is not in frame {frame}")));
            }
            if !(e.length_m > 0.0) || !(e.width_m > 0.0) || !(e.travel_time_min > 0.0) {
                return Err(Error::Invalid(format!(
                    "edge {i}: length, width and travel time must be positive"
                )));
            }
            if (e.geometry.length() - e.length_m).abs() > LENGTH_TOLERANCE_M {
                return Err(Error::Invalid(format!(
                    "edge {i}: length {} disagrees with geometry {}",
                    e.length_m,
                    e.geometry.length()
                )));
            }
            adjacency.get_mut(&e.from).unwrap().push(i);
            adjacency.get_mut(&e.to).unwrap().push(i);
        }
        Ok(RoadGraph {
            frame,
            nodes: node_map,
            edges,
            adjacency,
        })
    }

    pub fn frame(&self) -> UtmFrame {
        self.frame
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: i64) -> Option<&GraphNode> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Option<&RoadEdge> {
        self.edges.get(id)
    }

    /// Edge ids incident to `node`.
    pub fn incident(&self, node: i64) -> &[usize] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_width(&self) -> f64 {
        self.edges.iter().map(|e| e.width_m).fold(0.0, f64::max)
    }

    /// Copy of the graph with `impassable` set on the given edges.
    pub fn with_impassable(&self, edge_ids: &BTreeSet<usize>) -> Result<RoadGraph> {
        if let Some(&bad) = edge_ids.iter().find(|&&id| id >= self.edges.len()) {
            return Err(Error::UnknownEdge(bad));
        }
        let mut g = self.clone();
        for &id in edge_ids {
            g.edges[id].impassable = true;
        }
        Ok(g)
    }

    /// Nearest graph node to a geodetic point, with its planar distance.
    pub fn nearest_node(&self, p: GeoPoint) -> Result<Option<(i64, f64)>> {
        let q = latlon_to_utm_in(p, self.frame)?;
        Ok(self
            .nodes
            .values()
            .map(|n| (n.id, n.planar.distance(&q)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Leading number of an OSM `width` value such as "6", "6.5 m" or "7m".
fn parse_width(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let end = s
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(end);
    let unit = unit.trim();
    if !(unit.is_empty() || unit == "m") {
        return None;
    }
    num.parse::<f64>().ok().filter(|w| *w > 0.0 && w.is_finite())
}

fn oneway_direction(tags: &BTreeMap<String, String>) -> Option<bool> {
    match tags.get("oneway").map(String::as_str) {
        Some("yes" | "true" | "1") => Some(true),
        Some("-1" | "reverse") => Some(false),
        _ => None,
    }
}

/// Turn every road way of `n` nodes into `n − 1` edges with planar geometry.
///
/// Edge ids are assigned densely in (way id, segment position) order.
pub fn build_road_graph(
    doc: &OsmDocument,
    defaults: &RoadDefaults,
    opts: GraphOptions,
) -> Result<RoadGraph> {
    defaults.validate()?;
    let roads: Vec<&OsmWay> = doc.road_ways().collect();
    if roads.is_empty() {
        return Err(Error::NoRoads);
    }
    let used: BTreeSet<i64> = roads.iter().flat_map(|w| w.node_ids.iter().copied()).collect();
    let frame = match opts.frame {
        Some(f) => f,
        None => UtmFrame::for_points(used.iter().map(|id| &doc.nodes[id].location))?,
    };

    let mut nodes = BTreeMap::new();
    for &id in &used {
        let geo = doc.nodes[&id].location;
        let planar = latlon_to_utm_in(geo, frame)?;
        nodes.insert(id, GraphNode { id, geo, planar });
    }

    let mut edges = Vec::new();
    for way in roads {
        let class = way.highway().unwrap_or_default();
        let cls = defaults.for_class(class);
        let width = way
            .tags
            .get("width")
            .and_then(|w| parse_width(w))
            .unwrap_or(cls.width_m);
        let metres_per_min = cls.speed_kmh * 1000.0 / 60.0;
        let direction = if opts.honor_oneway {
            oneway_direction(&way.tags)
        } else {
            None
        };
        for pair in way.node_ids.windows(2) {
            let (mut from, mut to) = (pair[0], pair[1]);
            if direction == Some(false) {
                std::mem::swap(&mut from, &mut to);
            }
            let geometry = Segment::new(nodes[&from].planar, nodes[&to].planar)?;
            let length_m = geometry.length();
            if length_m <= 0.0 {
                return Err(Error::Invalid(format!(
                    "way {}: nodes {from} and {to} coincide",
                    way.id
                )));
            }
            edges.push(RoadEdge {
                edge_id: edges.len(),
                way_id: way.id,
                from,
                to,
                geometry,
                length_m,
                width_m: width,
                travel_time_min: length_m / metres_per_min,
                impassable: false,
                oneway: direction.is_some(),
            });
        }
    }
    RoadGraph::new(frame, nodes.into_values().collect(), edges)
}

/// Edges whose centreline lies within `radius` metres of `p`, nearest first
/// (ties by edge id).
pub fn find_nearby_edges(graph: &RoadGraph, p: PlanarPoint, radius: f64) -> Vec<usize> {
    let q = if p.frame() == graph.frame() {
        p
    } else {
        match utm_to_latlon(p).and_then(|g| latlon_to_utm_in(g, graph.frame())) {
            Ok(q) => q,
            Err(_) => return Vec::new(),
        }
    };
    let mut hits: Vec<(f64, usize)> = graph
        .edges()
        .iter()
        .map(|e| (e.geometry.distance_to(q.xy()), e.edge_id))
        .filter(|(d, _)| *d <= radius)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, id)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<osm version="0.6">
  <node id="1" lat="35.6150" lon="139.5140"/>
  <node id="2" lat="35.6160" lon="139.5150"/>
  <way id="10"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
</osm>"#;

    #[test]
    fn minimal_document() {
        let doc = parse_osm(MINIMAL).unwrap();
        assert_eq!(doc.nodes.len(), 2);
        assert_eq!(doc.road_ways().count(), 1);
        let g = build_road_graph(&doc, &RoadDefaults::default(), GraphOptions::default()).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].width_m, 6.0);
    }

    #[test]
    fn building_only_is_not_a_road() {
        let xml = r#"<osm version="0.6">
  <node id="1" lat="35.6150" lon="139.5140"/>
  <node id="2" lat="35.6160" lon="139.5150"/>
  <node id="3" lat="35.6160" lon="139.5140"/>
  <way id="10"><nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="1"/><tag k="building" v="yes"/></way>
</osm>"#;
        let doc = parse_osm(xml).unwrap();
        assert_eq!(doc.road_ways().count(), 0);
        assert_eq!(doc.non_road_ways().count(), 1);
        let err = build_road_graph(&doc, &RoadDefaults::default(), GraphOptions::default());
        assert!(matches!(err, Err(Error::NoRoads)));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<osm version=\"0.6\">\n  <node id=\"1\" lat=\"1\" lon=\"2\">\n</osm>";
        match parse_osm(xml) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_attribute_reports_line() {
        let xml = "<osm version=\"0.6\">\n\n  <node id=\"1\" lat=\"north\" lon=\"2\"/>\n</osm>";
        match parse_osm(xml) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("lat"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_node_drops_way_with_warning() {
        let xml = r#"<osm version="0.6">
  <node id="1" lat="35.6150" lon="139.5140"/>
  <node id="2" lat="35.6160" lon="139.5150"/>
  <way id="10"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
  <way id="11"><nd ref="2"/><nd ref="99"/><tag k="highway" v="residential"/></way>
</osm>"#;
        let doc = parse_osm(xml).unwrap();
        assert_eq!(doc.road_ways().count(), 1);
        assert!(doc.dropped_ways.contains(&11));
        assert!(doc.warnings.iter().any(|w| w.contains("99")));
    }

    #[test]
    fn four_node_way_gives_three_edges_and_width_tag_wins() {
        let xml = r#"<osm version="0.6">
  <node id="1" lat="35.6150" lon="139.5140"/>
  <node id="2" lat="35.6152" lon="139.5142"/>
  <node id="3" lat="35.6154" lon="139.5144"/>
  <node id="4" lat="35.6156" lon="139.5146"/>
  <way id="7"><nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
    <tag k="highway" v="tertiary"/><tag k="width" v="9.5 m"/></way>
</osm>"#;
        let doc = parse_osm(xml).unwrap();
        let g = build_road_graph(&doc, &RoadDefaults::default(), GraphOptions::default()).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!(g.edges().iter().all(|e| e.width_m == 9.5));
        assert_eq!(
            g.edges().iter().map(|e| (e.from, e.to)).collect::<Vec<_>>(),
            vec![(1, 2), (2, 3), (3, 4)]
        );
    }

    #[test]
    fn travel_time_from_class_speed() {
        let defaults = RoadDefaults::default();
        let metres_per_min = defaults.for_class("residential").speed_kmh * 1000.0 / 60.0;
        assert!((500.0 / metres_per_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn width_parsing() {
        assert_eq!(parse_width("6"), Some(6.0));
        assert_eq!(parse_width("6.5 m"), Some(6.5));
        assert_eq!(parse_width("7m"), Some(7.0));
        assert_eq!(parse_width("3 ft"), None);
        assert_eq!(parse_width("wide"), None);
        assert_eq!(parse_width("0"), None);
    }

    #[test]
    fn oneway_only_when_requested() {
        let xml = r#"<osm version="0.6">
  <node id="1" lat="35.6150" lon="139.5140"/>
  <node id="2" lat="35.6160" lon="139.5150"/>
  <way id="10"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/><tag k="oneway" v="-1"/></way>
</osm>"#;
        let doc = parse_osm(xml).unwrap();
        let d = RoadDefaults::default();
        let g = build_road_graph(&doc, &d, GraphOptions::default()).unwrap();
        assert!(!g.edges()[0].oneway);
        let g = build_road_graph(
            &doc,
            &d,
            GraphOptions {
                honor_oneway: true,
                frame: None,
            },
        )
        .unwrap();
        let e = &g.edges()[0];
        assert!(e.oneway);
        assert_eq!((e.from, e.to), (2, 1));
        assert_eq!(e.traverse_from(2), Some(1));
        assert_eq!(e.traverse_from(1), None);
    }

    #[test]
    fn defaults_table_parses() {
        let d = RoadDefaults::from_toml(
            "[fallback]\nwidth_m = 4.0\nspeed_kmh = 20.0\n\n[classes.residential]\nwidth_m = 6.0\nspeed_kmh = 30.0\n",
        )
        .unwrap();
        assert_eq!(d.for_class("residential").width_m, 6.0);
        assert_eq!(d.for_class("footway").width_m, 4.0);
        assert!(RoadDefaults::from_toml("[classes.a]\nwidth_m = 1.0\nspeed_kmh = 2.0\n").is_err());
        assert!(RoadDefaults::from_toml(
            "[fallback]\nwidth_m = 0.0\nspeed_kmh = 20.0\n"
        )
        .is_err());
    }

    #[test]
    fn nearby_edges_by_distance() {
        let doc = parse_osm(MINIMAL).unwrap();
        let g = build_road_graph(&doc, &RoadDefaults::default(), GraphOptions::default()).unwrap();
        let e = &g.edges()[0];
        let mid = e.geometry.a.offset(e.geometry.vector().scale(0.5)).unwrap();
        assert_eq!(find_nearby_edges(&g, mid, 1.0), vec![0]);
        let far = mid.offset(crate::geo::Vec2::new(-100.0 * e.geometry.vector().y / e.length_m, 100.0 * e.geometry.vector().x / e.length_m)).unwrap();
        assert!(find_nearby_edges(&g, far, 50.0).is_empty());
        assert_eq!(find_nearby_edges(&g, far, f64::INFINITY), vec![0]);
    }

    #[test]
    fn graph_json_round_trip() {
        let doc = parse_osm(MINIMAL).unwrap();
        let g = build_road_graph(&doc, &RoadDefaults::default(), GraphOptions::default()).unwrap();
        let back = RoadGraph::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.incident(1), &[0]);
    }
}
