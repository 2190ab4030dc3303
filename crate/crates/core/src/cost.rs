//! Shortest travel times over the road graph and the site-to-site movement
//! cost matrix built from them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::osm::RoadGraph;

pub const DEFAULT_SENTINEL: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    StartDepot,
    FaultPole,
    FaultWire,
    EndDepot,
}

impl SiteKind {
    pub fn is_fault(self) -> bool {
        matches!(self, SiteKind::FaultPole | SiteKind::FaultWire)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePoint {
    pub site_id: usize,
    pub kind: SiteKind,
    pub location: GeoPoint,
    pub attach_node: i64,
}

/// Sites file entry; `attach_node` is resolved to the nearest graph node when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSpec {
    pub site_id: usize,
    pub kind: SiteKind,
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attach_node: Option<i64>,
}

/// Resolve site specs against a graph. Sites farther than `max_attach_m` from
/// every node are rejected.
pub fn attach_sites(specs: &[SiteSpec], graph: &RoadGraph, max_attach_m: f64) -> Result<Vec<SitePoint>> {
    let mut sites = Vec::with_capacity(specs.len());
    for s in specs {
        let location = GeoPoint::new(s.lat, s.lon)?;
        let attach_node = match s.attach_node {
            Some(id) => {
                if graph.node(id).is_none() {
                    return Err(Error::UnattachedSite {
                        site_id: s.site_id,
                        reason: format!("node {id} is not in the graph"),
                    });
                }
                id
            }
            None => match graph.nearest_node(location)? {
                Some((id, d)) if d <= max_attach_m => id,
                Some((id, d)) => {
                    return Err(Error::UnattachedSite {
                        site_id: s.site_id,
                        reason: format!("nearest node {id} is {d:.1} m away (limit {max_attach_m} m)"),
                    })
                }
                None => {
                    return Err(Error::UnattachedSite {
                        site_id: s.site_id,
                        reason: "graph has no nodes".into(),
                    })
                }
            },
        };
        sites.push(SitePoint {
            site_id: s.site_id,
            kind: s.kind,
            location,
            attach_node,
        });
    }
    validate_sites(&sites)?;
    Ok(sites)
}

fn validate_sites(sites: &[SitePoint]) -> Result<()> {
    let mut ids: Vec<usize> = sites.iter().map(|s| s.site_id).collect();
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(i, &id)| i != id) {
        return Err(Error::Invalid("site ids must be dense and unique from 0".into()));
    }
    if !sites.iter().any(|s| s.kind == SiteKind::StartDepot) {
        return Err(Error::Invalid("at least one start_depot site is required".into()));
    }
    if !sites.iter().any(|s| s.kind == SiteKind::EndDepot) {
        return Err(Error::Invalid("at least one end_depot site is required".into()));
    }
    Ok(())
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    cost: f64,
    node: i64,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `src` over passable edges; minutes to every reachable node.
pub fn travel_times_from(graph: &RoadGraph, src: i64) -> Result<BTreeMap<i64, f64>> {
    if graph.node(src).is_none() {
        return Err(Error::UnknownNode(src));
    }
    let mut dist: BTreeMap<i64, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, 0.0);
    heap.push(Frontier { cost: 0.0, node: src });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if cost > dist[&node] {
            continue;
        }
        for &eid in graph.incident(node) {
            let edge = &graph.edges()[eid];
            if edge.impassable {
                continue;
            }
            let Some(next) = edge.traverse_from(node) else {
                continue;
            };
            let cand = cost + edge.travel_time_min;
            if dist.get(&next).map_or(true, |&d| cand < d) {
                dist.insert(next, cand);
                heap.push(Frontier { cost: cand, node: next });
            }
        }
    }
    Ok(dist)
}

/// Minimum travel minutes from `src` to `dst`, or `None` when no passable path exists.
pub fn shortest_travel_time(graph: &RoadGraph, src: i64, dst: i64) -> Result<Option<f64>> {
    if graph.node(dst).is_none() {
        return Err(Error::UnknownNode(dst));
    }
    Ok(travel_times_from(graph, src)?.get(&dst).copied())
}

/// Square matrix of integer travel minutes between sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostMatrix {
    entries: Vec<Vec<u32>>,
    sentinel: u32,
    labels: Vec<usize>,
}

impl CostMatrix {
    pub fn new(entries: Vec<Vec<u32>>, sentinel: u32) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MatrixCell {
                    row: i,
                    column: row.len(),
                    message: format!("row has {} cells, expected {n}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v > sentinel {
                    return Err(Error::MatrixCell {
                        row: i,
                        column: j,
                        message: format!("value {v} exceeds sentinel {sentinel}"),
                    });
                }
                if i != j && v == 0 {
                    return Err(Error::MatrixCell {
                        row: i,
                        column: j,
                        message: "off-diagonal travel time must be positive".into(),
                    });
                }
            }
        }
        Ok(CostMatrix {
            entries,
            sentinel,
            labels: (0..n).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn sentinel(&self) -> u32 {
        self.sentinel
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i][j]
    }

    /// Finite travel minutes, `None` for the sentinel.
    pub fn travel(&self, i: usize, j: usize) -> Option<u32> {
        let v = self.entries[i][j];
        (v < self.sentinel).then_some(v)
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.entries
    }

    /// Copy with entry (i, j) replaced.
    pub fn with_entry(&self, i: usize, j: usize, v: u32) -> Result<Self> {
        let mut e = self.entries.clone();
        e[i][j] = v;
        CostMatrix::new(e, self.sentinel)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let n = self.size();
        let header: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        out.push(',');
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, row) in self.entries.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parse the labelled CSV layout written by [`CostMatrix::to_csv`].
    ///
    /// With `fixture_compat` the diagonal is kept as written; otherwise it is
    /// reset to zero.
    pub fn from_csv(text: &str, sentinel: u32, fixture_compat: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::MatrixCell {
                row,
                column: 0,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        let Some(header) = records.first() else {
            return Err(Error::MatrixCell {
                row: 0,
                column: 0,
                message: "empty matrix file".into(),
            });
        };
        let n = header.len().saturating_sub(1);
        for (j, cell) in header.iter().enumerate().skip(1) {
            if cell.parse::<usize>().ok() != Some(j - 1) {
                return Err(Error::MatrixCell {
                    row: 0,
                    column: j,
                    message: format!("header label {cell:?}, expected {}", j - 1),
                });
            }
        }
        if records.len() - 1 != n {
            return Err(Error::MatrixCell {
                row: records.len(),
                column: 0,
                message: format!("{} data rows for {n} columns", records.len() - 1),
            });
        }
        let mut entries = Vec::with_capacity(n);
        for (i, rec) in records.iter().enumerate().skip(1) {
            if rec.len() != n + 1 {
                return Err(Error::MatrixCell {
                    row: i,
                    column: rec.len(),
                    message: format!("row has {} cells, expected {}", rec.len(), n + 1),
                });
            }
            if rec[0].parse::<usize>().ok() != Some(i - 1) {
                return Err(Error::MatrixCell {
                    row: i,
                    column: 0,
                    message: format!("row label {:?}, expected {}", &rec[0], i - 1),
                });
            }
            let mut row = Vec::with_capacity(n);
            for (j, cell) in rec.iter().enumerate().skip(1) {
                let v: u32 = cell.parse().map_err(|_| Error::MatrixCell {
                    row: i,
                    column: j,
                    message: format!("not a non-negative integer: {cell:?}"),
                })?;
                row.push(if !fixture_compat && i - 1 == j - 1 { 0 } else { v });
            }
            entries.push(row);
        }
        CostMatrix::new(entries, sentinel)
    }
}

pub fn load_matrix(path: &Path, sentinel: u32, fixture_compat: bool) -> Result<CostMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CostMatrix::from_csv(&text, sentinel, fixture_compat)
}

pub fn save_matrix(m: &CostMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, m.to_csv()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDiff {
    pub i: usize,
    pub j: usize,
    pub a: u32,
    pub b: u32,
}

/// Cells where `a` and `b` differ, in row-major order.
pub fn diff_matrices(a: &CostMatrix, b: &CostMatrix) -> Result<Vec<CellDiff>> {
    if a.size() != b.size() {
        return Err(Error::SizeMismatch {
            left: a.size(),
            right: b.size(),
        });
    }
    let mut out = Vec::new();
    for i in 0..a.size() {
        for j in 0..a.size() {
            if a.get(i, j) != b.get(i, j) {
                out.push(CellDiff {
                    i,
                    j,
                    a: a.get(i, j),
                    b: b.get(i, j),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixOptions {
    pub sentinel: u32,
    /// Pairs farther apart than this many minutes get the sentinel.
    pub max_direct: Option<f64>,
    /// Write the sentinel on the diagonal instead of zero.
    pub fixture_compat: bool,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions {
            sentinel: DEFAULT_SENTINEL,
            max_direct: None,
            fixture_compat: false,
        }
    }
}

/// A computed matrix together with the unrounded shortest-path minutes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixBuild {
    pub matrix: CostMatrix,
    pub raw_minutes: Vec<Vec<Option<f64>>>,
}

/// Round half up; every real move costs at least one minute.
fn round_minutes(t: f64) -> u32 {
    ((t + 0.5).floor() as u32).max(1)
}

pub fn build_matrix(sites: &[SitePoint], graph: &RoadGraph, opts: &MatrixOptions) -> Result<MatrixBuild> {
    validate_sites(sites)?;
    for s in sites {
        if graph.node(s.attach_node).is_none() {
            return Err(Error::UnattachedSite {
                site_id: s.site_id,
                reason: format!("node {} is not in the graph", s.attach_node),
            });
        }
    }
    let n = sites.len();
    let mut by_id: Vec<&SitePoint> = sites.iter().collect();
    by_id.sort_by_key(|s| s.site_id);

    let mut from_node: BTreeMap<i64, BTreeMap<i64, f64>> = BTreeMap::new();
    for s in &by_id {
        if !from_node.contains_key(&s.attach_node) {
            from_node.insert(s.attach_node, travel_times_from(graph, s.attach_node)?);
        }
    }

    let mut entries = vec![vec![0u32; n]; n];
    let mut raw = vec![vec![None; n]; n];
    for (i, si) in by_id.iter().enumerate() {
        let dist = &from_node[&si.attach_node];
        for (j, sj) in by_id.iter().enumerate() {
            if i == j {
                raw[i][j] = Some(0.0);
                entries[i][j] = if opts.fixture_compat { opts.sentinel } else { 0 };
                continue;
            }
            let t = dist.get(&sj.attach_node).copied();
            raw[i][j] = t;
            entries[i][j] = match t {
                Some(t) if opts.max_direct.map_or(true, |m| t <= m) => {
                    let r = round_minutes(t);
                    if r >= opts.sentinel {
                        return Err(Error::Invalid(format!(
                            "travel time {t:.2} min between sites {i} and {j} reaches the sentinel {}",
                            opts.sentinel
                        )));
                    }
                    r
                }
                _ => opts.sentinel,
            };
        }
    }
    Ok(MatrixBuild {
        matrix: CostMatrix::new(entries, opts.sentinel)?,
        raw_minutes: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = ",0,1,2\n0,0,3,1000\n1,3,0,4\n2,1000,4,0\n";

    #[test]
    fn csv_round_trip() {
        let m = CostMatrix::from_csv(SMALL, 1000, true).unwrap();
        assert_eq!(m.get(0, 1), 3);
        assert_eq!(m.travel(0, 2), None);
        assert_eq!(m.to_csv(), SMALL);
    }

    #[test]
    fn diagonal_zeroed_without_compat() {
        let m = CostMatrix::from_csv(",0,1\n0,1000,2\n1,2,1000\n", 1000, false).unwrap();
        assert_eq!(m.get(0, 0), 0);
        let m = CostMatrix::from_csv(",0,1\n0,1000,2\n1,2,1000\n", 1000, true).unwrap();
        assert_eq!(m.get(1, 1), 1000);
    }

    #[test]
    fn malformed_cells_are_located() {
        let e = CostMatrix::from_csv(",0,1\n0,0,x\n1,2,0\n", 1000, false).unwrap_err();
        assert!(matches!(e, Error::MatrixCell { row: 1, column: 2, .. }), "{e}");
        let e = CostMatrix::from_csv(",0,1\n0,0,2\n", 1000, false).unwrap_err();
        assert!(matches!(e, Error::MatrixCell { .. }), "{e}");
        let e = CostMatrix::from_csv(",0,1\n0,0,2\n1,2\n", 1000, false).unwrap_err();
        assert!(matches!(e, Error::MatrixCell { row: 2, .. }), "{e}");
        let e = CostMatrix::from_csv(",0,1\n0,0,2000\n1,2,0\n", 1000, false).unwrap_err();
        assert!(matches!(e, Error::MatrixCell { row: 0, column: 1, .. }), "{e}");
    }

    #[test]
    fn diff_sizes_must_match() {
        let a = CostMatrix::from_csv(SMALL, 1000, true).unwrap();
        let b = CostMatrix::from_csv(",0,1\n0,0,2\n1,2,0\n", 1000, true).unwrap();
        assert!(matches!(diff_matrices(&a, &b), Err(Error::SizeMismatch { .. })));
        assert!(diff_matrices(&a, &a).unwrap().is_empty());
    }

    #[test]
    fn rounding_is_half_up_and_positive() {
        assert_eq!(round_minutes(2.5), 3);
        assert_eq!(round_minutes(2.4999), 2);
        assert_eq!(round_minutes(0.2), 1);
    }
}
