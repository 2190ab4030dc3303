use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridrecover::blockage::BlockageConfig;
use gridrecover::cost::MatrixOptions;
use gridrecover_cli::{
    cmd_blockage, cmd_diff, cmd_ingest, cmd_matrix, cmd_pipeline, cmd_plan, cmd_replay, write_all, CliError,
    InstanceOverrides, MatrixArgs, MatrixLoad, Mode, EXIT_INPUT,
};

const FORMATS: &str = "\
FILE FORMATS
  OSM map          OpenStreetMap XML (<osm> with <node id lat lon> and <way> with <nd ref> and <tag k v>).
                   Ways tagged highway=* become road edges; others are ignored.
  defaults (TOML)  [fallback] width_m, speed_kmh and [classes.<highway>] width_m, speed_kmh per road class.
  graph (JSON)     {frame, nodes:[{id, geo:{lat,lon}, planar}], edges:[{edge_id, way_id, from, to, geometry,
                   length_m, width_m, travel_time_min, impassable, oneway}]}.
  poles (JSON)     [{pole_id, lat, lon, height_m?, tilt_deg, azimuth_deg}]; tilt from vertical,
                   azimuth clockwise from grid north; height defaults to 12 m.
  blockage (JSON)  [{pole_id, projected:{a,b}, skipped, affected:[{edge_id, verdict, coverage_fraction}],
                   blocked_edge_ids}].
  sites (JSON)     [{site_id, kind: start_depot|fault_pole|fault_wire|end_depot, lat, lon, attach_node?}];
                   site ids are 0..n-1.
  matrix (CSV)     header ',0,1,...,n-1' then one row 'i,v0,...,vn-1' per site; whole travel minutes,
                   the sentinel (default 1000) marks unreachable pairs.
  instance (JSON)  {matrix_file?, faults:[{site_id, fault_type: pole|wire, area_id, required_work}],
                   areas:[{area_id, capacity_kw, fault_ids}], crews:[{crew_id, start_site, end_site}],
                   horizon (default 60), vehicles?:{pole, wire}, slot_minutes, must_return, enforce_vehicles}.
  plan (JSON)      {routes:[{crew_id, visits:[{site, arrival, completion}], return_arrival?}], area_recovery,
                   fault_completion, makespan, objective, horizon, detours?}; a .txt report sits beside it.
  pipeline (TOML)  output_dir, instance, mode, fixture_compat, sentinel, eps, horizon?, must_return?,
                   enforce_vehicles?, and either [matrices] before, after or [road] osm, defaults?, poles,
                   sites, honor_oneway, max_attach_m, max_direct_min?, search_radius_m?, min_tilt_deg,
                   default_height_m.

EXIT STATUS
  0 success, 1 input or validation error, 2 no feasible plan, 3 internal invariant violated.
";

#[derive(Parser)]
#[command(name = "gridrecover", version, about = "Storm recovery planning: blocked roads, travel costs, crew dispatch")]
#[command(after_long_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a road graph from an OSM extract.
    Ingest {
        #[arg(long)]
        osm: PathBuf,
        #[arg(long)]
        defaults: Option<PathBuf>,
        #[arg(long)]
        honor_oneway: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mark edges blocked by fallen poles.
    Blockage {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        poles: PathBuf,
        #[arg(long)]
        report_out: PathBuf,
        #[arg(long)]
        graph_out: PathBuf,
        #[arg(long, default_value_t = gridrecover::geo::DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = 10.0)]
        min_tilt: f64,
        #[arg(long, default_value_t = 12.0)]
        default_height: f64,
        /// Defaults to each pole's height.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Site-to-site travel minutes over a road graph.
    Matrix {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = gridrecover::cost::DEFAULT_SENTINEL)]
        sentinel: u32,
        /// Pairs slower than this many minutes get the sentinel.
        #[arg(long)]
        max_direct: Option<f64>,
        #[arg(long, default_value_t = 50.0)]
        max_attach: f64,
        /// Sentinel on the diagonal, as in the reference matrices.
        #[arg(long)]
        fixture_compat: bool,
    },
    /// Cells that differ between two matrices.
    Diff {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a dispatch plan.
    Plan {
        #[arg(long)]
        instance: PathBuf,
        /// Use this matrix instead of the instance's matrix_file.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a plan's visit orders on another matrix.
    Replay {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from a TOML config and compare aware and unaware plans.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct LoadArgs {
    #[arg(long, default_value_t = gridrecover::cost::DEFAULT_SENTINEL)]
    sentinel: u32,
    /// Keep the sentinel diagonal of the reference matrices.
    #[arg(long)]
    fixture_compat: bool,
}

impl LoadArgs {
    fn get(&self) -> MatrixLoad {
        MatrixLoad {
            sentinel: self.sentinel,
            fixture_compat: self.fixture_compat,
        }
    }
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    must_return: Option<bool>,
    #[arg(long)]
    enforce_vehicles: Option<bool>,
}

impl OverrideArgs {
    fn get(&self) -> InstanceOverrides {
        InstanceOverrides {
            horizon: self.horizon,
            must_return: self.must_return,
            enforce_vehicles: self.enforce_vehicles,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Greedy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Greedy => Mode::Greedy,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let artifacts = match cli.command {
        Command::Ingest {
            osm,
            defaults,
            honor_oneway,
            out,
        } => cmd_ingest(&osm, defaults.as_deref(), honor_oneway, &out)?,
        Command::Blockage {
            graph,
            poles,
            report_out,
            graph_out,
            eps,
            min_tilt,
            default_height,
            radius,
        } => {
            let cfg = BlockageConfig {
                eps,
                min_tilt_deg: min_tilt,
                default_height_m: default_height,
                search_radius_m: radius,
            };
            cmd_blockage(&graph, &poles, &cfg, &report_out, &graph_out)?
        }
        Command::Matrix {
            graph,
            sites,
            out,
            sentinel,
            max_direct,
            max_attach,
            fixture_compat,
        } => {
            let args = MatrixArgs {
                options: MatrixOptions {
                    sentinel,
                    max_direct,
                    fixture_compat,
                },
                max_attach_m: max_attach,
            };
            cmd_matrix(&graph, &sites, &args, &out)?
        }
        Command::Diff { before, after, load, out } => cmd_diff(&before, &after, &load.get(), &out)?,
        Command::Plan {
            instance,
            matrix,
            mode,
            load,
            overrides,
            out,
        } => cmd_plan(&instance, matrix.as_deref(), &load.get(), &overrides.get(), mode.into(), &out)?,
        Command::Replay {
            plan,
            matrix,
            instance,
            load,
            overrides,
            out,
        } => cmd_replay(&plan, &matrix, &instance, &load.get(), &overrides.get(), &out)?,
        Command::Pipeline { config } => {
            let run = cmd_pipeline(&config)?;
            write_all(&run.artifacts)?;
            print!("{}", run.summary.table());
            return Ok(());
        }
    };
    write_all(&artifacts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
