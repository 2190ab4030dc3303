//! End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
//! and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use gridrecover::blockage::{assess_all, pole_projection, BlockageConfig, PoleState};
use gridrecover::cost::{
    build_matrix, diff_matrices, load_matrix, CostMatrix, MatrixOptions, SiteKind, SitePoint, DEFAULT_SENTINEL,
};
use gridrecover::geo::{
    classify_segments, latlon_to_utm_in, segments_intersect, utm_to_latlon, GeoPoint, Hemisphere, PlanarPoint,
    Segment, UtmFrame, Vec2, Verdict, DEFAULT_EPS,
};
use gridrecover::osm::{GraphNode, RoadEdge, RoadGraph};
use gridrecover::scheduler::{
    brute_force, solve_exact, solve_greedy, Area, Crew, FaultPoint, FaultType, Instance, SolveOptions, VehiclePool,
};
use gridrecover_cli::{cmd_pipeline, PipelineRun};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const S: u32 = DEFAULT_SENTINEL;

// Tolerances and limits.
const SEGMENT_LIMIT: Duration = Duration::from_millis(1);
const FIXTURE_LIMIT: Duration = Duration::from_secs(1);
const SHORTEST_PATH_LIMIT: Duration = Duration::from_secs(30);
const SCHEDULER_LIMIT: Duration = Duration::from_secs(120);
const PIPELINE_LIMIT: Duration = Duration::from_secs(300);
const GEOMETRY_LIMIT: Duration = Duration::from_secs(30);
const PROJECTION_REL_TOL: f64 = 1e-9;
const OBJECTIVE_TOL: f64 = 1e-9;

// Reference comparison the calibration aims at.
const REFERENCE_AWARE_KWH: f64 = 1230.0;
const REFERENCE_UNAWARE_KWH: f64 = 1170.0;
const REFERENCE_AWARE_SLOTS: u32 = 31;
const REFERENCE_UNAWARE_SLOTS: u32 = 43;
const REFERENCE_REDUCTION_PCT: f64 = 28.0;
const REDUCTION_GOAL_BAND: f64 = 15.0;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let dt = t.elapsed();
    o.detail = format!("{}; {:.3?} (limit {:?})", o.detail, dt, limit);
    o.pass &= dt < limit;
    o
}

fn frame54() -> UtmFrame {
    UtmFrame::new(54, Hemisphere::North).unwrap()
}

fn reference_crossing() -> Outcome {
    let f = frame54();
    let p = |lon: f64, lat: f64| latlon_to_utm_in(GeoPoint::new(lat, lon).unwrap(), f).unwrap();
    let road = Segment::new(p(139.51453, 35.61492), p(139.51472, 35.61503)).unwrap();
    let pole = Segment::new(p(139.51456, 35.61496), p(139.51458, 35.61494)).unwrap();
    segments_intersect(&road, &pole, DEFAULT_EPS).unwrap(); // warm up
    let t = Instant::now();
    let v = segments_intersect(&road, &pole, DEFAULT_EPS).unwrap();
    let dt = t.elapsed();
    check(
        v == Verdict::Crossing && dt < SEGMENT_LIMIT,
        format!("road/pole verdict {v:?}; {dt:.3?} (limit {SEGMENT_LIMIT:?})"),
    )
}

fn matrix_fixtures() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut load = |name: &str| {
        let path = fixture(&format!("matrices/{name}"));
        let m = load_matrix(&path, S, true).unwrap();
        let same = m.to_csv() == std::fs::read_to_string(&path).unwrap();
        if !same {
            notes.push(format!("{name} does not round-trip"));
        }
        pass &= same;
        m
    };
    let before = load("grid14_before.csv");
    let after = load("grid14_after.csv");
    let diff = diff_matrices(&before, &after).unwrap();
    let cells: BTreeSet<_> = diff.iter().map(|d| (d.i, d.j, d.a, d.b)).collect();
    let depots = [0usize, 1, 12, 13];
    let has = cells.contains(&(2, 3, 3, 8)) && cells.contains(&(8, 11, 6, 11));
    let stray = diff.iter().any(|d| d.i == d.j || depots.contains(&d.i) || depots.contains(&d.j));
    pass &= has && !stray;
    notes.push(format!("{} changed cells {:?}", diff.len(), cells));
    check(pass, notes.join("; "))
}

fn at(x: f64, y: f64) -> PlanarPoint {
    PlanarPoint::new(400_000.0 + x, 3_900_000.0 + y, frame54()).unwrap()
}

/// Graph with nodes on a circle; links are (a, b, minutes, impassable).
fn circle_graph(n: usize, links: &[(usize, usize, f64, bool)]) -> RoadGraph {
    let pos = |i: usize| {
        let t = i as f64 * std::f64::consts::TAU / n as f64;
        at(500.0 * t.cos(), 500.0 * t.sin())
    };
    let nodes = (0..n)
        .map(|i| GraphNode {
            id: i as i64,
            geo: utm_to_latlon(pos(i)).unwrap(),
            planar: pos(i),
        })
        .collect();
    let edges = links
        .iter()
        .enumerate()
        .map(|(k, &(a, b, minutes, impassable))| {
            let geometry = Segment::new(pos(a), pos(b)).unwrap();
            RoadEdge {
                edge_id: k,
                way_id: k as i64,
                from: a as i64,
                to: b as i64,
                length_m: geometry.length(),
                geometry,
                width_m: 6.0,
                travel_time_min: minutes,
                impassable,
                oneway: false,
            }
        })
        .collect();
    RoadGraph::new(frame54(), nodes, edges).unwrap()
}

fn node_sites(g: &RoadGraph) -> Vec<SitePoint> {
    let n = g.node_count();
    g.nodes()
        .map(|node| SitePoint {
            site_id: node.id as usize,
            kind: match node.id as usize {
                0 => SiteKind::StartDepot,
                i if i == n - 1 => SiteKind::EndDepot,
                _ => SiteKind::FaultPole,
            },
            location: node.geo,
            attach_node: node.id,
        })
        .collect()
}

fn floyd_warshall(n: usize, links: &[(usize, usize, f64, bool)]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w, blocked) in links {
        if !blocked {
            d[a][b] = d[a][b].min(w);
            d[b][a] = d[b][a].min(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match d[i][j] {
                    _ if i == j => 0,
                    t if t.is_finite() => ((t + 0.5).floor() as u32).max(1),
                    _ => S,
                })
                .collect()
        })
        .collect()
}

fn shortest_paths() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut shortened = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=50);
        let mut links = Vec::new();
        // spanning tree, then extra links; quarter minutes keep sums exact
        for i in 1..n {
            links.push((rng.gen_range(0..i), i, f64::from(rng.gen_range(1..=80)) / 4.0, false));
        }
        for _ in 0..rng.gen_range(0..2 * n) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                links.push((a, b, f64::from(rng.gen_range(1..=80)) / 4.0, false));
            }
        }
        let g = circle_graph(n, &links);
        let m = build_matrix(&node_sites(&g), &g, &MatrixOptions::default()).unwrap().matrix;
        if m.rows() != floyd_warshall(n, &links).as_slice() {
            mismatches += 1;
        }
        let mut blocked_links = links.clone();
        for l in &mut blocked_links {
            l.3 = rng.gen_bool(0.3);
        }
        let gb = circle_graph(n, &blocked_links);
        let mb = build_matrix(&node_sites(&gb), &gb, &MatrixOptions::default()).unwrap().matrix;
        if mb.rows() != floyd_warshall(n, &blocked_links).as_slice() {
            mismatches += 1;
        }
        if diff_matrices(&m, &mb).unwrap().iter().any(|d| d.b < d.a) {
            shortened += 1;
        }
    }
    check(
        mismatches == 0 && shortened == 0,
        format!("100 graphs: {mismatches} oracle mismatches, {shortened} shortened by blocking"),
    )
}

fn random_instance(rng: &mut StdRng) -> Instance {
    let crews = rng.gen_range(1..=2);
    let nf = rng.gen_range(1..=4);
    let na = rng.gen_range(1..=3);
    let horizon = rng.gen_range(4..=15);
    let n = nf + 2;
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match () {
                    _ if i == j => 0,
                    _ if rng.gen_bool(0.1) => S,
                    _ => rng.gen_range(1..7),
                })
                .collect()
        })
        .collect();
    let area_of: Vec<usize> = (0..nf).map(|_| rng.gen_range(0..na)).collect();
    let faults = (0..nf)
        .map(|k| FaultPoint {
            site_id: k + 2,
            fault_type: if rng.gen_bool(0.5) { FaultType::Pole } else { FaultType::Wire },
            area_id: format!("a{}", area_of[k]),
            required_work: rng.gen_range(1..5),
        })
        .collect();
    let areas = (0..na)
        .map(|a| Area {
            area_id: format!("a{a}"),
            capacity_kw: if rng.gen_bool(0.5) {
                f64::from(rng.gen_range(1..40))
            } else {
                rng.gen_range(0.1..40.0)
            },
            fault_ids: (0..nf).filter(|&k| area_of[k] == a).map(|k| k + 2).collect(),
        })
        .collect();
    let vehicles = rng.gen_bool(0.2).then(|| VehiclePool {
        pole: rng.gen_range(1..3),
        wire: rng.gen_range(0..3),
    });
    let options = SolveOptions {
        enforce_vehicles: vehicles.is_some(),
        ..Default::default()
    };
    let crews = (0..crews)
        .map(|c| Crew {
            crew_id: c,
            start_site: 0,
            end_site: 1,
        })
        .collect();
    Instance::new(CostMatrix::new(rows, S).unwrap(), faults, areas, crews, horizon, vehicles, options).unwrap()
}

fn scheduler_exactness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let (mut feasible, mut disagree, mut greedy_over) = (0, 0, 0);
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        match (brute_force(&inst), solve_exact(&inst)) {
            (Ok(b), Ok(e)) => {
                feasible += 1;
                if (b.objective - e.objective).abs() > OBJECTIVE_TOL * (1.0 + b.objective.abs()) {
                    disagree += 1;
                }
                if let Ok(g) = solve_greedy(&inst) {
                    if g.objective > e.objective + OBJECTIVE_TOL * (1.0 + e.objective.abs()) {
                        greedy_over += 1;
                    }
                }
            }
            (Err(b), Err(e)) if b.is_infeasibility() && e.is_infeasibility() => {}
            _ => disagree += 1,
        }
    }
    check(
        disagree == 0 && greedy_over == 0,
        format!("200 instances ({feasible} feasible): {disagree} exact/brute disagreements, {greedy_over} greedy above exact"),
    )
}

fn fourteen_site_comparison(run: &PipelineRun) -> Outcome {
    let s = &run.summary;
    let a = s.aware.objective >= s.unaware.objective;
    let b = s.aware.makespan <= s.unaware.makespan;
    let c = s.reduction_pct > 0.0;
    check(
        a && b && c,
        format!(
            "aware {} kWh / {} slots, unaware {} kWh / {} slots, reduction {:.1}%",
            s.aware.objective, s.aware.makespan, s.unaware.objective, s.unaware.makespan, s.reduction_pct
        ),
    )
}

/// A point up to 12 m to either side of a random road.
fn near_road(g: &RoadGraph, rng: &mut StdRng) -> GeoPoint {
    let e = &g.edges()[rng.gen_range(0..g.edges().len())];
    let d = e.geometry.vector();
    let normal = Vec2::new(-d.y, d.x).scale(1.0 / d.norm());
    let p = e.geometry.a.xy() + d.scale(rng.gen_range(0.0..1.0)) + normal.scale(rng.gen_range(-12.0..12.0));
    utm_to_latlon(PlanarPoint::new(p.x, p.y, g.frame()).unwrap()).unwrap()
}

type IPoint = (i64, i64);

fn orient(a: IPoint, b: IPoint, c: IPoint) -> i128 {
    (i128::from(b.0 - a.0)) * i128::from(c.1 - a.1) - i128::from(b.1 - a.1) * i128::from(c.0 - a.0)
}

/// Parametric solve of a + t(b-a) = c + u(d-c) in exact rationals.
fn parametric(a: IPoint, b: IPoint, c: IPoint, d: IPoint) -> Verdict {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let den = i128::from(r.0) * i128::from(s.1) - i128::from(r.1) * i128::from(s.0);
    let q = (i128::from(c.0 - a.0), i128::from(c.1 - a.1));
    if den == 0 {
        if orient(a, b, c) != 0 {
            return Verdict::Disjoint;
        }
        // collinear: overlap of projections on r
        let rr = i128::from(r.0) * i128::from(r.0) + i128::from(r.1) * i128::from(r.1);
        let proj = |p: IPoint| i128::from(p.0 - a.0) * i128::from(r.0) + i128::from(p.1 - a.1) * i128::from(r.1);
        let (lo, hi) = (proj(c).min(proj(d)), proj(c).max(proj(d)));
        return if hi >= 0 && lo <= rr { Verdict::Touching } else { Verdict::Disjoint };
    }
    let t_num = q.0 * i128::from(s.1) - q.1 * i128::from(s.0);
    let u_num = q.0 * i128::from(r.1) - q.1 * i128::from(r.0);
    let (t_num, u_num, den) = if den < 0 { (-t_num, -u_num, -den) } else { (t_num, u_num, den) };
    let inside = |x: i128| (0..=den).contains(&x);
    let strict = |x: i128| x > 0 && x < den;
    if strict(t_num) && strict(u_num) {
        Verdict::Crossing
    } else if inside(t_num) && inside(u_num) {
        Verdict::Touching
    } else {
        Verdict::Disjoint
    }
}

fn geometry_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut wrong = 0;
    for _ in 0..10_000 {
        let mut p = || (rng.gen_range(-8..=8), rng.gen_range(-8..=8));
        let (a, b, c, d) = (p(), p(), p(), p());
        if a == b || c == d {
            continue;
        }
        let v = |q: IPoint| Vec2::new(q.0 as f64, q.1 as f64);
        let got = classify_segments((v(a), v(b)), (v(c), v(d)), 1e-9);
        if got != Some(parametric(a, b, c, d)) {
            wrong += 1;
        }
    }

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let pole = PoleState {
            pole_id: "p".into(),
            base: GeoPoint::new(rng.gen_range(-60.0..60.0), rng.gen_range(-179.0..179.0)).unwrap(),
            height_m: rng.gen_range(5.0..25.0),
            tilt_deg: rng.gen_range(10.0..=90.0),
            azimuth_deg: rng.gen_range(0.0..360.0),
        };
        let frame = UtmFrame::of_point(pole.base).unwrap();
        let seg = pole_projection(&pole, frame).unwrap();
        let want = pole.height_m * pole.tilt_deg.to_radians().sin();
        worst = worst.max((seg.length() - want).abs() / want);
    }

    let (mut unblocked, mut hits) = (0, 0);
    let roads = circle_graph(
        8,
        &[(0, 4, 1.0, false), (1, 5, 1.0, false), (2, 6, 1.0, false), (3, 7, 1.0, false), (0, 1, 1.0, false), (4, 5, 1.0, false)],
    );
    let cfg = BlockageConfig::default();
    for _ in 0..100 {
        let poles: Vec<PoleState> = (0..rng.gen_range(1..6))
            .map(|k| PoleState {
                pole_id: format!("p{k}"),
                base: near_road(&roads, &mut rng),
                height_m: rng.gen_range(5.0..25.0),
                tilt_deg: rng.gen_range(10.0..60.0),
                azimuth_deg: rng.gen_range(0.0..360.0),
            })
            .collect();
        let more: Vec<PoleState> = poles
            .iter()
            .map(|p| PoleState {
                tilt_deg: (p.tilt_deg + 30.0).min(90.0),
                ..p.clone()
            })
            .collect();
        let blocked = |ps: &[PoleState]| -> BTreeSet<usize> {
            assess_all(ps, &roads, &cfg)
                .unwrap()
                .iter()
                .flat_map(|r| r.blocked_edge_ids.clone())
                .collect()
        };
        let (low, high) = (blocked(&poles), blocked(&more));
        hits += usize::from(!low.is_empty());
        if !low.is_subset(&high) {
            unblocked += 1;
        }
    }
    check(
        wrong == 0 && worst < PROJECTION_REL_TOL && unblocked == 0 && hits > 0,
        format!(
            "{wrong} verdict mismatches, worst projection error {worst:.1e} (tol {PROJECTION_REL_TOL:.0e}), {unblocked} of 100 pole sets unblocked by leaning further ({hits} block something)"
        ),
    )
}

fn determinism(first: &PipelineRun) -> Outcome {
    let second = cmd_pipeline(&fixture("grid14/pipeline.toml")).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (run, dir) in [first, &second].into_iter().zip(&dirs) {
        for a in &run.artifacts {
            std::fs::write(dir.path().join(a.path.file_name().unwrap()), &a.bytes).unwrap();
        }
    }
    let mut differing = Vec::new();
    for a in &first.artifacts {
        let name = a.path.file_name().unwrap();
        let x = std::fs::read(dirs[0].path().join(name)).unwrap();
        let y = std::fs::read(dirs[1].path().join(name));
        if y.ok().as_ref() != Some(&x) {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    let same_count = first.artifacts.len() == second.artifacts.len();
    check(
        differing.is_empty() && same_count,
        format!("{} files compared, differing: {:?}", first.artifacts.len(), differing),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 reference road and pole segments cross", reference_crossing()));
    results.push(("2 matrix fixtures round-trip and differ as expected", timed(FIXTURE_LIMIT, matrix_fixtures)));
    results.push(("3 matrix equals Floyd-Warshall; blocking never shortens", timed(SHORTEST_PATH_LIMIT, shortest_paths)));
    results.push(("4 exact equals brute force; greedy never above exact", timed(SCHEDULER_LIMIT, scheduler_exactness)));

    let t = Instant::now();
    let run = cmd_pipeline(&fixture("grid14/pipeline.toml"));
    let dt = t.elapsed();
    match &run {
        Ok(run) => {
            let mut o = fourteen_site_comparison(run);
            o.detail = format!("{}; {:.3?} (limit {:?})", o.detail, dt, PIPELINE_LIMIT);
            o.pass &= dt < PIPELINE_LIMIT;
            results.push(("5 aware plan beats the obstacle-unaware replay", o));
        }
        Err(e) => results.push(("5 aware plan beats the obstacle-unaware replay", check(false, e.to_string()))),
    }

    results.push(("6 geometry properties", timed(GEOMETRY_LIMIT, geometry_suite)));
    match &run {
        Ok(run) => results.push(("7 pipeline output is byte-identical across runs", determinism(run))),
        Err(e) => results.push(("7 pipeline output is byte-identical across runs", check(false, e.to_string()))),
    }

    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "reference: aware {REFERENCE_AWARE_KWH} kWh / {REFERENCE_AWARE_SLOTS} slots, unaware {REFERENCE_UNAWARE_KWH} kWh / {REFERENCE_UNAWARE_SLOTS} slots, reduction {REFERENCE_REDUCTION_PCT}%"
    );
    if let Ok(run) = &run {
        let gap = run.summary.reduction_pct - REFERENCE_REDUCTION_PCT;
        println!(
            "calibration goal (reduction within {REDUCTION_GOAL_BAND} points of {REFERENCE_REDUCTION_PCT}%): {} ({:+.1} points)",
            if gap.abs() <= REDUCTION_GOAL_BAND { "met" } else { "not met" },
            gap
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
