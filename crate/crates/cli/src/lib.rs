//! Pipeline stages behind the `gridrecover` binary.
//!
//! Every stage computes all of its outputs in memory first; nothing is written
//! unless the whole stage succeeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gridrecover::blockage::{apply_blockages, assess_all, load_poles, BlockageConfig, BlockageReport};
use gridrecover::cost::{attach_sites, build_matrix, diff_matrices, load_matrix, CostMatrix, MatrixOptions, SiteSpec};
use gridrecover::osm::{build_road_graph, read_osm, GraphOptions, RoadDefaults, RoadGraph};
use gridrecover::scheduler::{replay, solve_exact, solve_greedy, Instance, InstanceFile, Plan};
use gridrecover::Error;
use serde::{Deserialize, Serialize};

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_infeasibility() => EXIT_INFEASIBLE,
            Error::Invariant(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        let message = match &e {
            Error::EnvelopeExceeded { .. } => format!("{e}; use --mode greedy for larger instances"),
            _ => e.to_string(),
        };
        CliError { code, message }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A file a stage wants to write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(path: impl Into<PathBuf>, text: String) -> Self {
        Artifact {
            path: path.into(),
            bytes: text.into_bytes(),
        }
    }
}

/// Write every artifact, or none: files go to temporaries first and are
/// renamed into place once all writes succeeded.
pub fn write_all(artifacts: &[Artifact]) -> CliResult<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let fail = |staged: &[(PathBuf, &Path)], msg: String| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
        CliError::input(msg)
    };
    for a in artifacts {
        if let Some(dir) = a.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if let Err(e) = fs::create_dir_all(dir) {
                return Err(fail(&staged, format!("{}: {e}", dir.display())));
            }
        }
        let mut tmp = a.path.clone().into_os_string();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        if let Err(e) = fs::write(&tmp, &a.bytes) {
            return Err(fail(&staged, format!("{}: {e}", tmp.display())));
        }
        staged.push((tmp, &a.path));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest).map_err(|e| CliError::input(format!("{}: {e}", dest.display())))?;
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::from(Error::from(e)))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

/// `plan.json` -> `plan.txt`
pub fn report_path(out: &Path) -> PathBuf {
    out.with_extension("txt")
}

// ---------------------------------------------------------------- ingest

pub fn load_defaults(path: Option<&Path>) -> CliResult<RoadDefaults> {
    Ok(match path {
        Some(p) => RoadDefaults::load(p)?,
        None => RoadDefaults::default(),
    })
}

pub fn ingest_graph(osm: &Path, defaults: Option<&Path>, honor_oneway: bool) -> CliResult<RoadGraph> {
    let doc = read_osm(osm)?;
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    let defaults = load_defaults(defaults)?;
    let opts = GraphOptions {
        honor_oneway,
        frame: None,
    };
    Ok(build_road_graph(&doc, &defaults, opts)?)
}

pub fn cmd_ingest(osm: &Path, defaults: Option<&Path>, honor_oneway: bool, out: &Path) -> CliResult<Vec<Artifact>> {
    let graph = ingest_graph(osm, defaults, honor_oneway)?;
    Ok(vec![Artifact::new(out, graph.to_json()?)])
}

// ---------------------------------------------------------------- blockage

pub fn cmd_blockage(
    graph: &Path,
    poles: &Path,
    cfg: &BlockageConfig,
    report_out: &Path,
    graph_out: &Path,
) -> CliResult<Vec<Artifact>> {
    let graph = RoadGraph::load(graph)?;
    let (reports, blocked) = run_blockage(&graph, poles, cfg)?;
    Ok(vec![
        Artifact::new(report_out, json(&reports)?),
        Artifact::new(graph_out, blocked.to_json()?),
    ])
}

fn run_blockage(graph: &RoadGraph, poles: &Path, cfg: &BlockageConfig) -> CliResult<(Vec<BlockageReport>, RoadGraph)> {
    let poles = load_poles(poles, cfg)?;
    let reports = assess_all(&poles, graph, cfg)?;
    let blocked = apply_blockages(graph, &reports)?;
    Ok((reports, blocked))
}

// ---------------------------------------------------------------- matrix

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixArgs {
    pub options: MatrixOptions,
    pub max_attach_m: f64,
}

impl Default for MatrixArgs {
    fn default() -> Self {
        MatrixArgs {
            options: MatrixOptions::default(),
            max_attach_m: 50.0,
        }
    }
}

pub fn load_sites(path: &Path) -> CliResult<Vec<SiteSpec>> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn matrix_for(graph: &RoadGraph, sites: &[SiteSpec], args: &MatrixArgs) -> CliResult<CostMatrix> {
    let points = attach_sites(sites, graph, args.max_attach_m)?;
    Ok(build_matrix(&points, graph, &args.options)?.matrix)
}

pub fn cmd_matrix(graph: &Path, sites: &Path, args: &MatrixArgs, out: &Path) -> CliResult<Vec<Artifact>> {
    let graph = RoadGraph::load(graph)?;
    let sites = load_sites(sites)?;
    let m = matrix_for(&graph, &sites, args)?;
    Ok(vec![Artifact::new(out, m.to_csv())])
}

/// Changed cells between two matrices as CSV.
pub fn diff_csv(a: &CostMatrix, b: &CostMatrix) -> CliResult<String> {
    let mut s = String::from("i,j,before,after\n");
    for d in diff_matrices(a, b)? {
        let _ = writeln!(s, "{},{},{},{}", d.i, d.j, d.a, d.b);
    }
    Ok(s)
}

pub fn cmd_diff(a: &Path, b: &Path, matrix: &MatrixLoad, out: &Path) -> CliResult<Vec<Artifact>> {
    let a = matrix.load(a)?;
    let b = matrix.load(b)?;
    Ok(vec![Artifact::new(out, diff_csv(&a, &b)?)])
}

// ---------------------------------------------------------------- plan / replay

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Greedy,
}

/// How matrix CSV files are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixLoad {
    pub sentinel: u32,
    pub fixture_compat: bool,
}

impl Default for MatrixLoad {
    fn default() -> Self {
        MatrixLoad {
            sentinel: gridrecover::cost::DEFAULT_SENTINEL,
            fixture_compat: false,
        }
    }
}

impl MatrixLoad {
    pub fn load(&self, path: &Path) -> CliResult<CostMatrix> {
        Ok(load_matrix(path, self.sentinel, self.fixture_compat)?)
    }
}

/// Settings that override the instance file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InstanceOverrides {
    pub horizon: Option<u32>,
    pub must_return: Option<bool>,
    pub enforce_vehicles: Option<bool>,
}

impl InstanceOverrides {
    fn apply(&self, file: &mut InstanceFile) {
        if let Some(h) = self.horizon {
            file.horizon = h;
        }
        if let Some(m) = self.must_return {
            file.must_return = m;
        }
        if let Some(v) = self.enforce_vehicles {
            file.enforce_vehicles = v;
        }
    }
}

/// Load an instance; `matrix` replaces the file's own `matrix_file`.
pub fn load_instance(
    path: &Path,
    matrix: Option<&Path>,
    load: &MatrixLoad,
    overrides: &InstanceOverrides,
) -> CliResult<Instance> {
    let mut file = InstanceFile::load(path)?;
    overrides.apply(&mut file);
    let m = match matrix {
        Some(p) => load.load(p)?,
        None => {
            let base = path.parent().unwrap_or(Path::new("."));
            let p = file
                .matrix_path(base)
                .ok_or_else(|| CliError::input(format!("{} names no matrix_file; pass --matrix", path.display())))?;
            load.load(&p)?
        }
    };
    Ok(file.into_instance(m)?)
}

pub fn solve(inst: &Instance, mode: Mode) -> CliResult<Plan> {
    let plan = match mode {
        Mode::Exact => solve_exact(inst)?,
        Mode::Greedy => solve_greedy(inst)?,
    };
    check_plan(&plan, inst)?;
    Ok(plan)
}

/// Reported objective must match the one implied by the recovery slots.
fn check_plan(plan: &Plan, inst: &Instance) -> CliResult<()> {
    let again = plan.recompute_objective(inst);
    if again != plan.objective {
        return Err(Error::Invariant(format!(
            "plan objective {} disagrees with recomputed {again}",
            plan.objective
        ))
        .into());
    }
    Ok(())
}

fn plan_artifacts(plan: &Plan, out: &Path) -> CliResult<Vec<Artifact>> {
    Ok(vec![
        Artifact::new(out, plan.to_json()?),
        Artifact::new(report_path(out), plan.report()),
    ])
}

pub fn cmd_plan(
    instance: &Path,
    matrix: Option<&Path>,
    load: &MatrixLoad,
    overrides: &InstanceOverrides,
    mode: Mode,
    out: &Path,
) -> CliResult<Vec<Artifact>> {
    let inst = load_instance(instance, matrix, load, overrides)?;
    plan_artifacts(&solve(&inst, mode)?, out)
}

pub fn cmd_replay(
    plan: &Path,
    actual: &Path,
    instance: &Path,
    load: &MatrixLoad,
    overrides: &InstanceOverrides,
    out: &Path,
) -> CliResult<Vec<Artifact>> {
    let planned = Plan::load(plan)?;
    let inst = load_instance(instance, Some(actual), load, overrides)?;
    let realized = replay(&planned, &inst)?;
    check_plan(&realized, &inst)?;
    plan_artifacts(&realized, out)
}

// ---------------------------------------------------------------- pipeline

/// Matrices supplied directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInputs {
    pub before: PathBuf,
    pub after: PathBuf,
}

/// Matrices derived from a road map and pole readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadInputs {
    pub osm: PathBuf,
    #[serde(default)]
    pub defaults: Option<PathBuf>,
    pub poles: PathBuf,
    pub sites: PathBuf,
    #[serde(default)]
    pub honor_oneway: bool,
    #[serde(default = "default_attach")]
    pub max_attach_m: f64,
    #[serde(default)]
    pub max_direct_min: Option<f64>,
    #[serde(default)]
    pub search_radius_m: Option<f64>,
    #[serde(default = "default_min_tilt")]
    pub min_tilt_deg: f64,
    #[serde(default = "default_height")]
    pub default_height_m: f64,
}

fn default_attach() -> f64 {
    50.0
}

fn default_min_tilt() -> f64 {
    BlockageConfig::default().min_tilt_deg
}

fn default_height() -> f64 {
    BlockageConfig::default().default_height_m
}

fn default_sentinel() -> u32 {
    gridrecover::cost::DEFAULT_SENTINEL
}

fn default_eps() -> f64 {
    gridrecover::geo::DEFAULT_EPS
}

/// Pipeline configuration file. Relative paths are taken from the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub instance: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub fixture_compat: bool,
    #[serde(default = "default_sentinel")]
    pub sentinel: u32,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default)]
    pub must_return: Option<bool>,
    #[serde(default)]
    pub enforce_vehicles: Option<bool>,
    #[serde(default)]
    pub matrices: Option<MatrixInputs>,
    #[serde(default)]
    pub road: Option<RoadInputs>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = read_text(path)?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| *p = base.join(&*p);
        fix(&mut self.output_dir);
        fix(&mut self.instance);
        if let Some(m) = &mut self.matrices {
            fix(&mut m.before);
            fix(&mut m.after);
        }
        if let Some(r) = &mut self.road {
            fix(&mut r.osm);
            fix(&mut r.poles);
            fix(&mut r.sites);
            if let Some(d) = &mut r.defaults {
                fix(d);
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.matrices.is_some() == self.road.is_some() {
            return Err(CliError::input("config needs exactly one of [matrices] or [road]"));
        }
        let mut inputs = vec![&self.instance];
        if let Some(m) = &self.matrices {
            inputs.extend([&m.before, &m.after]);
        }
        if let Some(r) = &self.road {
            inputs.extend([&r.osm, &r.poles, &r.sites]);
            inputs.extend(r.defaults.as_ref());
        }
        for p in inputs {
            if !p.is_file() {
                return Err(CliError::input(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn matrix_load(&self) -> MatrixLoad {
        MatrixLoad {
            sentinel: self.sentinel,
            fixture_compat: self.fixture_compat,
        }
    }

    pub fn overrides(&self) -> InstanceOverrides {
        InstanceOverrides {
            horizon: self.horizon,
            must_return: self.must_return,
            enforce_vehicles: self.enforce_vehicles,
        }
    }

    pub fn blockage_config(&self) -> BlockageConfig {
        let r = self.road.as_ref();
        BlockageConfig {
            eps: self.eps,
            min_tilt_deg: r.map_or_else(default_min_tilt, |r| r.min_tilt_deg),
            default_height_m: r.map_or_else(default_height, |r| r.default_height_m),
            search_radius_m: r.and_then(|r| r.search_radius_m),
        }
    }

    pub fn matrix_args(&self) -> MatrixArgs {
        let r = self.road.as_ref();
        MatrixArgs {
            options: MatrixOptions {
                sentinel: self.sentinel,
                max_direct: r.and_then(|r| r.max_direct_min),
                fixture_compat: self.fixture_compat,
            },
            max_attach_m: r.map_or_else(default_attach, |r| r.max_attach_m),
        }
    }
}

/// Output file names inside the pipeline's output directory.
pub mod names {
    pub const GRAPH: &str = "graph.json";
    pub const BLOCKAGE: &str = "blockage.json";
    pub const GRAPH_BLOCKED: &str = "graph_blocked.json";
    pub const MATRIX_BEFORE: &str = "matrix_before.csv";
    pub const MATRIX_AFTER: &str = "matrix_after.csv";
    pub const MATRIX_DIFF: &str = "matrix_diff.csv";
    pub const PLAN_AWARE: &str = "plan_aware.json";
    pub const PLAN_UNAWARE: &str = "plan_unaware.json";
    pub const REPLAY_UNAWARE: &str = "replay_unaware.json";
    pub const SUMMARY: &str = "summary.txt";
    pub const SUMMARY_JSON: &str = "summary.json";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub objective: f64,
    pub makespan: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub aware: ArmResult,
    pub unaware: ArmResult,
    pub reduction_pct: f64,
}

impl Summary {
    pub fn new(aware: &Plan, unaware: &Plan) -> Summary {
        let reduction_pct = if unaware.makespan == 0 {
            0.0
        } else {
            (1.0 - f64::from(aware.makespan) / f64::from(unaware.makespan)) * 100.0
        };
        Summary {
            aware: ArmResult {
                objective: aware.objective,
                makespan: aware.makespan,
            },
            unaware: ArmResult {
                objective: unaware.objective,
                makespan: unaware.makespan,
            },
            reduction_pct,
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10}{:>16}{:>16}", "", "aware", "unaware");
        let _ = writeln!(
            s,
            "{:<10}{:>16}{:>16}",
            "kWh", self.aware.objective, self.unaware.objective
        );
        let _ = writeln!(
            s,
            "{:<10}{:>16}{:>16}",
            "slots", self.aware.makespan, self.unaware.makespan
        );
        let _ = writeln!(s, "restoration time reduced by {:.1}%", self.reduction_pct);
        s
    }
}

pub struct PipelineRun {
    pub artifacts: Vec<Artifact>,
    pub summary: Summary,
}

pub fn cmd_pipeline(config: &Path) -> CliResult<PipelineRun> {
    let cfg = RunConfig::load(config)?;
    run_pipeline(&cfg)
}

pub fn run_pipeline(cfg: &RunConfig) -> CliResult<PipelineRun> {
    let out = |name: &str| cfg.output_dir.join(name);
    let load = cfg.matrix_load();
    let mut artifacts = Vec::new();

    let (before, after) = match (&cfg.matrices, &cfg.road) {
        (Some(m), _) => (load.load(&m.before)?, load.load(&m.after)?),
        (None, Some(r)) => {
            let graph = ingest_graph(&r.osm, r.defaults.as_deref(), r.honor_oneway)?;
            let bcfg = cfg.blockage_config();
            let (reports, blocked) = run_blockage(&graph, &r.poles, &bcfg)?;
            let sites = load_sites(&r.sites)?;
            let margs = cfg.matrix_args();
            let before = matrix_for(&graph, &sites, &margs)?;
            let after = matrix_for(&blocked, &sites, &margs)?;
            artifacts.push(Artifact::new(out(names::GRAPH), graph.to_json()?));
            artifacts.push(Artifact::new(out(names::BLOCKAGE), json(&reports)?));
            artifacts.push(Artifact::new(out(names::GRAPH_BLOCKED), blocked.to_json()?));
            (before, after)
        }
        (None, None) => return Err(CliError::input("config needs [matrices] or [road]")),
    };
    artifacts.push(Artifact::new(out(names::MATRIX_BEFORE), before.to_csv()));
    artifacts.push(Artifact::new(out(names::MATRIX_AFTER), after.to_csv()));
    artifacts.push(Artifact::new(out(names::MATRIX_DIFF), diff_csv(&before, &after)?));

    let mut file = InstanceFile::load(&cfg.instance)?;
    cfg.overrides().apply(&mut file);
    let on_before = file.clone().into_instance(before)?;
    let on_after = file.into_instance(after)?;

    let aware = solve(&on_after, cfg.mode)?;
    let unaware = solve(&on_before, cfg.mode)?;
    let realized = replay(&unaware, &on_after)?;
    check_plan(&realized, &on_after)?;

    artifacts.extend(plan_artifacts(&aware, &out(names::PLAN_AWARE))?);
    artifacts.extend(plan_artifacts(&unaware, &out(names::PLAN_UNAWARE))?);
    artifacts.extend(plan_artifacts(&realized, &out(names::REPLAY_UNAWARE))?);

    let summary = Summary::new(&aware, &realized);
    artifacts.push(Artifact::new(out(names::SUMMARY), summary.table()));
    artifacts.push(Artifact::new(out(names::SUMMARY_JSON), json(&summary)?));
    Ok(PipelineRun { artifacts, summary })
}
