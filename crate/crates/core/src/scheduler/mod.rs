//! Crew dispatch planning that maximizes cumulative restored capacity.
//!
//! Each area contributes its capacity for every slot between its recovery and
//! the horizon. Plans are per-crew visit orders over fault sites; [`evaluate`]
//! turns visit orders into timed plans, [`solve_exact`] searches for the best
//! one, [`solve_greedy`] is the dispatch-as-found baseline, and [`replay`]
//! executes a plan against a different (true) cost matrix.

mod brute;
mod exact;
mod greedy;
mod replay;
pub(crate) mod sim;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::{load_matrix, CostMatrix};
use crate::error::{Error, Result};
use sim::{DispatchError, Model, Sim, Step};

pub use brute::{brute_force, BRUTE_MAX_CREWS, BRUTE_MAX_FAULTS, BRUTE_MAX_HORIZON};
pub use exact::{solve_exact, EXACT_MAX_CREWS, EXACT_MAX_FAULTS, EXACT_MAX_HORIZON};
pub use greedy::solve_greedy;
pub use replay::replay;

/// Upper limit on faults per instance (visit sets are bitmasks).
pub const MAX_FAULTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultType {
    Pole,
    Wire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultPoint {
    pub site_id: usize,
    pub fault_type: FaultType,
    pub area_id: String,
    /// Crew-slots of work needed for the repair.
    pub required_work: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub area_id: String,
    pub capacity_kw: f64,
    pub fault_ids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crew {
    pub crew_id: usize,
    pub start_site: usize,
    pub end_site: usize,
}

/// Special vehicles available per repair type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehiclePool {
    pub pole: u32,
    pub wire: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Matrix minutes per timeslot.
    pub slot_minutes: u32,
    /// Crews must be able to drive back to their end depot.
    pub must_return: bool,
    /// Cap concurrent pole/wire work by the vehicle pool.
    pub enforce_vehicles: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            slot_minutes: 1,
            must_return: false,
            enforce_vehicles: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: CostMatrix,
    pub faults: Vec<FaultPoint>,
    pub areas: Vec<Area>,
    pub crews: Vec<Crew>,
    pub horizon: u32,
    pub vehicles: Option<VehiclePool>,
    pub options: SolveOptions,
}

fn default_horizon() -> u32 {
    60
}

fn default_slot() -> u32 {
    1
}

/// On-disk instance; `matrix_file` is resolved relative to the instance file
/// and may be left out when the matrix is supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    pub faults: Vec<FaultPoint>,
    pub areas: Vec<Area>,
    pub crews: Vec<Crew>,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicles: Option<VehiclePool>,
    #[serde(default = "default_slot")]
    pub slot_minutes: u32,
    #[serde(default)]
    pub must_return: bool,
    #[serde(default)]
    pub enforce_vehicles: bool,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Path of the matrix, relative paths taken from `base_dir`.
    pub fn matrix_path(&self, base_dir: &Path) -> Option<PathBuf> {
        self.matrix_file.as_ref().map(|f| base_dir.join(f))
    }

    pub fn into_instance(self, matrix: CostMatrix) -> Result<Instance> {
        Instance::new(
            matrix,
            self.faults,
            self.areas,
            self.crews,
            self.horizon,
            self.vehicles,
            SolveOptions {
                slot_minutes: self.slot_minutes,
                must_return: self.must_return,
                enforce_vehicles: self.enforce_vehicles,
            },
        )
    }
}

impl Instance {
    pub fn new(
        matrix: CostMatrix,
        faults: Vec<FaultPoint>,
        areas: Vec<Area>,
        crews: Vec<Crew>,
        horizon: u32,
        vehicles: Option<VehiclePool>,
        options: SolveOptions,
    ) -> Result<Self> {
        let inst = Instance {
            matrix,
            faults,
            areas,
            crews,
            horizon,
            vehicles,
            options,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Read an instance file and the matrix it points to.
    pub fn load(path: &Path, sentinel: u32, fixture_compat: bool) -> Result<Self> {
        let file = InstanceFile::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let matrix_path = file
            .matrix_path(base)
            .ok_or_else(|| Error::Invalid(format!("{} names no matrix_file", path.display())))?;
        let matrix = load_matrix(&matrix_path, sentinel, fixture_compat)?;
        file.into_instance(matrix)
    }

    /// Same instance over a different matrix of the same size.
    pub fn with_matrix(&self, matrix: CostMatrix) -> Result<Instance> {
        if matrix.size() != self.matrix.size() {
            return Err(Error::SizeMismatch {
                left: self.matrix.size(),
                right: matrix.size(),
            });
        }
        let mut inst = self.clone();
        inst.matrix = matrix;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.size();
        if self.horizon < 1 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if self.options.slot_minutes < 1 {
            return Err(Error::Invalid("slot_minutes must be at least 1".into()));
        }
        if self.faults.len() > MAX_FAULTS {
            return Err(Error::Invalid(format!("at most {MAX_FAULTS} faults are supported")));
        }
        let mut fault_sites = BTreeSet::new();
        for f in &self.faults {
            if f.site_id >= n {
                return Err(Error::Invalid(format!("fault site {} outside the matrix", f.site_id)));
            }
            if !fault_sites.insert(f.site_id) {
                return Err(Error::Invalid(format!("fault site {} listed twice", f.site_id)));
            }
            if f.required_work < 1 {
                return Err(Error::Invalid(format!("fault {}: required_work must be >= 1", f.site_id)));
            }
        }
        let mut area_ids = BTreeSet::new();
        let mut owner: BTreeMap<usize, &str> = BTreeMap::new();
        for a in &self.areas {
            if !area_ids.insert(a.area_id.as_str()) {
                return Err(Error::Invalid(format!("area {} listed twice", a.area_id)));
            }
            if !(a.capacity_kw > 0.0 && a.capacity_kw.is_finite()) {
                return Err(Error::Invalid(format!("area {}: capacity must be positive", a.area_id)));
            }
            for &s in &a.fault_ids {
                if !fault_sites.contains(&s) {
                    return Err(Error::Invalid(format!("area {} lists unknown fault {s}", a.area_id)));
                }
                if owner.insert(s, &a.area_id).is_some() {
                    return Err(Error::Invalid(format!("fault {s} belongs to more than one area")));
                }
            }
        }
        for f in &self.faults {
            match owner.get(&f.site_id) {
                Some(a) if *a == f.area_id => {}
                Some(a) => {
                    return Err(Error::Invalid(format!(
                        "fault {} says area {} but area {a} lists it",
                        f.site_id, f.area_id
                    )))
                }
                None => {
                    return Err(Error::Invalid(format!(
                        "fault {} is not listed by any area",
                        f.site_id
                    )))
                }
            }
        }
        let mut crew_ids = BTreeSet::new();
        for c in &self.crews {
            if !crew_ids.insert(c.crew_id) {
                return Err(Error::Invalid(format!("crew {} listed twice", c.crew_id)));
            }
            for s in [c.start_site, c.end_site] {
                if s >= n {
                    return Err(Error::Invalid(format!("crew {}: site {s} outside the matrix", c.crew_id)));
                }
                if fault_sites.contains(&s) {
                    return Err(Error::Invalid(format!("crew {}: depot {s} is a fault site", c.crew_id)));
                }
            }
        }
        Ok(())
    }

    pub fn area_index(&self, area_id: &str) -> Option<usize> {
        self.areas.iter().position(|a| a.area_id == area_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub site: usize,
    pub arrival: u32,
    /// Slot the crew left the site: the repair slot, or the arrival slot when
    /// the fault was already repaired.
    pub completion: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrewRoute {
    pub crew_id: usize,
    pub visits: Vec<Visit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_arrival: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub routes: Vec<CrewRoute>,
    pub area_recovery: BTreeMap<String, u32>,
    pub fault_completion: BTreeMap<usize, u32>,
    pub makespan: u32,
    pub objective: f64,
    pub horizon: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detours: Vec<String>,
}

impl Plan {
    /// Visit orders, one list of sites per crew.
    pub fn route_sites(&self) -> Vec<Vec<usize>> {
        self.routes
            .iter()
            .map(|r| r.visits.iter().map(|v| v.site).collect())
            .collect()
    }

    /// Objective recomputed from the recovery slots and the instance.
    pub fn recompute_objective(&self, inst: &Instance) -> f64 {
        let m = Model::new(inst);
        m.objective_of(inst.areas.iter().map(|a| self.area_recovery[&a.area_id]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &Path) -> Result<Plan> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Human-readable log: per-crew completions, area recovery, objective.
    pub fn report(&self) -> String {
        let mut s = String::from("Routes of crews\n");
        for r in &self.routes {
            let items: Vec<String> = r
                .visits
                .iter()
                .map(|v| format!("({}, {:.1})", v.site, f64::from(v.completion)))
                .collect();
            let _ = writeln!(
                s,
                "crew {} completes repairing location at time [{}]",
                r.crew_id,
                items.join(", ")
            );
        }
        s.push_str("\nTime of area recovery\n");
        for (area, slot) in &self.area_recovery {
            let _ = writeln!(s, "area {area} is recovered at time {slot}");
        }
        if !self.detours.is_empty() {
            s.push_str("\nDetours\n");
            for d in &self.detours {
                let _ = writeln!(s, "{d}");
            }
        }
        let _ = writeln!(s, "\nObjective value: {}", self.objective);
        s
    }
}

/// Ordering key shared by all solvers: higher objective, then earlier
/// makespan, then lexicographically smaller visit orders.
pub(crate) fn better(obj: f64, mk: u32, routes: &[Vec<usize>], than: (f64, u32, &[Vec<usize>])) -> bool {
    if obj != than.0 {
        return obj > than.0;
    }
    if mk != than.1 {
        return mk < than.1;
    }
    routes < than.2
}

fn dispatch_error(inst: &Instance, crew: usize, e: DispatchError) -> Error {
    let id = inst.crews[crew].crew_id;
    match e {
        DispatchError::Sentinel { from, to } => Error::InfeasiblePlan(format!(
            "crew {id}: leg {from} -> {to} has no finite travel cost"
        )),
        DispatchError::Revisit { site } => {
            Error::InfeasiblePlan(format!("crew {id}: site {site} visited twice"))
        }
    }
}

pub(crate) fn check_routes(inst: &Instance, m: &Model, routes: &[Vec<usize>]) -> Result<()> {
    if routes.len() != inst.crews.len() {
        return Err(Error::InfeasiblePlan(format!(
            "{} routes for {} crews",
            routes.len(),
            inst.crews.len()
        )));
    }
    for (c, r) in routes.iter().enumerate() {
        for &s in r {
            if s >= m.n_sites() || m.site_fault[s].is_none() {
                return Err(Error::InfeasiblePlan(format!(
                    "crew {}: site {s} is not a fault site",
                    inst.crews[c].crew_id
                )));
            }
        }
    }
    Ok(())
}

/// Build the timed plan from a finished simulation.
pub(crate) fn plan_from_sim(inst: &Instance, m: &Model, sim: &Sim, detours: Vec<String>) -> Result<Plan> {
    if sim.faults_left > 0 {
        let missing: Vec<usize> = (0..m.n_faults())
            .filter(|&f| sim.completed[f].is_none())
            .map(|f| m.fault_site[f])
            .collect();
        return Err(Error::InfeasiblePlan(format!("faults {missing:?} are never repaired")));
    }
    let mut routes = Vec::with_capacity(sim.crews.len());
    for (i, c) in sim.crews.iter().enumerate() {
        let return_arrival = if m.must_return && !c.visits.is_empty() {
            let leg = m.leg(c.loc, m.crew_end[i]).ok_or_else(|| {
                Error::InfeasiblePlan(format!(
                    "crew {}: return leg {} -> {} has no finite travel cost",
                    inst.crews[i].crew_id, c.loc, m.crew_end[i]
                ))
            })?;
            Some(c.done_at + leg)
        } else {
            None
        };
        routes.push(CrewRoute {
            crew_id: inst.crews[i].crew_id,
            visits: c.visits.clone(),
            return_arrival,
        });
    }
    let recovery: Vec<u32> = sim.area_done.iter().map(|r| r.unwrap_or(0)).collect();
    Ok(Plan {
        routes,
        area_recovery: inst
            .areas
            .iter()
            .zip(&recovery)
            .map(|(a, &r)| (a.area_id.clone(), r))
            .collect(),
        fault_completion: (0..m.n_faults())
            .map(|f| (m.fault_site[f], sim.completed[f].unwrap_or(0)))
            .collect(),
        makespan: sim.makespan(),
        objective: m.objective_of(recovery.iter().copied()),
        horizon: m.horizon,
        detours,
    })
}

/// Simulate fixed visit orders (one list of fault sites per crew, in crew order).
pub fn evaluate(routes: &[Vec<usize>], inst: &Instance) -> Result<Plan> {
    let m = Model::new(inst);
    evaluate_model(routes, inst, &m)
}

pub(crate) fn evaluate_model(routes: &[Vec<usize>], inst: &Instance, m: &Model) -> Result<Plan> {
    check_routes(inst, m, routes)?;
    let mut sim = Sim::new(m);
    let mut cursor = vec![0usize; routes.len()];
    loop {
        match sim.advance(m) {
            Step::Decision => {
                while let Some(c) = sim.first_idle() {
                    if let Some(&site) = routes[c].get(cursor[c]) {
                        cursor[c] += 1;
                        let f = m.site_fault[site].expect("checked");
                        sim.dispatch(m, c, f).map_err(|e| dispatch_error(inst, c, e))?;
                    } else {
                        sim.finish(c);
                    }
                }
            }
            Step::Finished => break,
            Step::Stalled => {
                return Err(Error::InfeasiblePlan(
                    "crews wait forever for special vehicles".into(),
                ))
            }
        }
    }
    plan_from_sim(inst, m, &sim, Vec::new())
}

/// Drop visits at the end of each route where the crew only passed through an
/// already repaired fault. Kept only if the timed plan is otherwise unchanged.
pub(crate) fn trim_idle_tails(plan: Plan, inst: &Instance, m: &Model) -> Plan {
    let mut routes = plan.route_sites();
    let mut changed = false;
    for (r, timed) in routes.iter_mut().zip(&plan.routes) {
        let mut keep = timed.visits.len();
        while keep > 0 && timed.visits[keep - 1].arrival == timed.visits[keep - 1].completion {
            keep -= 1;
        }
        changed |= keep < r.len();
        r.truncate(keep);
    }
    if !changed {
        return plan;
    }
    match evaluate_model(&routes, inst, m) {
        Ok(p)
            if p.objective == plan.objective
                && p.area_recovery == plan.area_recovery
                && p.fault_completion == plan.fault_completion =>
        {
            p
        }
        _ => plan,
    }
}

/// Unreachable-fault check shared by the solvers.
pub(crate) fn ensure_reachable(m: &Model) -> Result<()> {
    let unreachable = m.unreachable_faults();
    if unreachable.is_empty() {
        Ok(())
    } else {
        Err(Error::Unreachable { unreachable })
    }
}
