//! Slot-by-slot crew simulation shared by every solver and the evaluator.
//!
//! Crews leave their start depot at slot 0. A crew sent to a fault arrives
//! after the matrix travel time, then works one unit per slot until the fault
//! is repaired, at which point every crew there becomes idle again. A crew
//! arriving at an already repaired fault passes straight through.

use super::{FaultType, Instance, Visit};

#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub fault_site: Vec<usize>,
    pub site_fault: Vec<Option<usize>>,
    pub fault_area: Vec<usize>,
    pub fault_work: Vec<u32>,
    pub fault_is_pole: Vec<bool>,
    pub area_cap: Vec<f64>,
    pub area_faults: Vec<Vec<usize>>,
    /// Travel slots between sites, `None` for the sentinel.
    pub travel: Vec<Vec<Option<u32>>>,
    pub crew_start: Vec<usize>,
    pub crew_end: Vec<usize>,
    pub horizon: u32,
    /// (pole, wire) concurrent working limits when enforced.
    pub vehicles: Option<(u32, u32)>,
    pub must_return: bool,
}

impl Model {
    pub fn new(inst: &Instance) -> Model {
        let n = inst.matrix.size();
        let mut faults: Vec<_> = inst.faults.iter().collect();
        faults.sort_by_key(|f| f.site_id);
        let mut site_fault = vec![None; n];
        for (i, f) in faults.iter().enumerate() {
            site_fault[f.site_id] = Some(i);
        }
        let fault_area = faults
            .iter()
            .map(|f| {
                inst.areas
                    .iter()
                    .position(|a| a.area_id == f.area_id)
                    .expect("validated instance")
            })
            .collect();
        let area_faults = inst
            .areas
            .iter()
            .map(|a| {
                let mut v: Vec<usize> = a
                    .fault_ids
                    .iter()
                    .map(|s| site_fault[*s].expect("validated instance"))
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        let slot = inst.options.slot_minutes.max(1);
        let travel = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| inst.matrix.travel(i, j).map(|m| m.div_ceil(slot)))
                    .collect()
            })
            .collect();
        Model {
            fault_site: faults.iter().map(|f| f.site_id).collect(),
            site_fault,
            fault_area,
            fault_work: faults.iter().map(|f| f.required_work).collect(),
            fault_is_pole: faults.iter().map(|f| f.fault_type == FaultType::Pole).collect(),
            area_cap: inst.areas.iter().map(|a| a.capacity_kw).collect(),
            area_faults,
            travel,
            crew_start: inst.crews.iter().map(|c| c.start_site).collect(),
            crew_end: inst.crews.iter().map(|c| c.end_site).collect(),
            horizon: inst.horizon,
            vehicles: if inst.options.enforce_vehicles {
                inst.vehicles.map(|v| (v.pole, v.wire))
            } else {
                None
            },
            must_return: inst.options.must_return,
        }
    }

    pub fn n_faults(&self) -> usize {
        self.fault_site.len()
    }

    pub fn n_crews(&self) -> usize {
        self.crew_start.len()
    }

    pub fn n_sites(&self) -> usize {
        self.travel.len()
    }

    pub fn leg(&self, from_site: usize, to_site: usize) -> Option<u32> {
        self.travel[from_site][to_site]
    }

    /// Cumulative recovered capacity for the given per-area recovery slots.
    /// Bounds and final objectives go through this one function so that
    /// floating-point summation order is identical for both.
    pub fn objective_of(&self, recovery: impl Iterator<Item = u32>) -> f64 {
        let mut total = 0.0;
        for (cap, r) in self.area_cap.iter().zip(recovery) {
            total += cap * f64::from(self.horizon.saturating_sub(r));
        }
        total
    }

    /// All-pairs minimum travel slots over finite legs (any intermediate site).
    pub fn closure(&self) -> Vec<Vec<Option<u32>>> {
        let n = self.n_sites();
        let mut d: Vec<Vec<Option<u32>>> = self.travel.clone();
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = d[i][k] else { continue };
                for j in 0..n {
                    if let Some(kj) = d[k][j] {
                        let c = ik + kj;
                        if d[i][j].map_or(true, |cur| c < cur) {
                            d[i][j] = Some(c);
                        }
                    }
                }
            }
        }
        d
    }

    /// Fault sites no crew can reach through fault-to-fault legs.
    pub fn unreachable_faults(&self) -> Vec<usize> {
        let f = self.n_faults();
        let mut seen = vec![false; f];
        let mut stack: Vec<usize> = Vec::new();
        for &s in &self.crew_start {
            for (i, &site) in self.fault_site.iter().enumerate() {
                if !seen[i] && self.leg(s, site).is_some() {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        while let Some(i) = stack.pop() {
            for (j, &site) in self.fault_site.iter().enumerate() {
                if !seen[j] && self.leg(self.fault_site[i], site).is_some() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..f)
            .filter(|&i| !seen[i])
            .map(|i| self.fault_site[i])
            .collect()
    }

    /// Cheapest path from `from_site` to fault `target` whose intermediate
    /// stops are faults outside `visited`. Returns the cost and the fault
    /// indices to visit in order, ending with `target`. Ties prefer lower sites.
    pub fn fault_path(&self, from_site: usize, target: usize, visited: u64) -> Option<(u32, Vec<usize>)> {
        let f = self.n_faults();
        // Node f is the start; 0..f are faults.
        let mut dist: Vec<Option<u32>> = vec![None; f + 1];
        let mut prev: Vec<Option<usize>> = vec![None; f + 1];
        let mut done = vec![false; f + 1];
        dist[f] = Some(0);
        let site_of = |v: usize| if v == f { from_site } else { self.fault_site[v] };
        loop {
            let mut best: Option<(u32, usize, usize)> = None;
            for v in 0..=f {
                if done[v] {
                    continue;
                }
                if let Some(d) = dist[v] {
                    let key = (d, site_of(v), v);
                    if best.map_or(true, |b| (key.0, key.1) < (b.0, b.1)) {
                        best = Some(key);
                    }
                }
            }
            let (d, _, v) = best?;
            done[v] = true;
            if v == target {
                break;
            }
            if v != f && v != target && visited & (1 << v) != 0 {
                continue;
            }
            for w in 0..f {
                if done[w] || (w != target && visited & (1 << w) != 0) {
                    continue;
                }
                if let Some(leg) = self.leg(site_of(v), self.fault_site[w]) {
                    let c = d + leg;
                    if dist[w].map_or(true, |cur| c < cur) {
                        dist[w] = Some(c);
                        prev[w] = Some(v);
                    }
                }
            }
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = prev[cur] {
            if p == f {
                break;
            }
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some((dist[target]?, path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Idle,
    Travel { fault: usize, arrive: u32 },
    Work { fault: usize },
    Done,
}

#[derive(Debug, Clone)]
pub(crate) struct CrewSim {
    pub loc: usize,
    pub phase: Phase,
    pub visited: u64,
    pub visits: Vec<Visit>,
    /// Slot the current work visit began (vehicle priority).
    pub since: u32,
    pub done_at: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    /// At least one crew is idle and needs a decision at `Sim::t`.
    Decision,
    /// No crew is travelling or working.
    Finished,
    /// Crews are waiting on vehicles that will never free up.
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct Sim {
    pub t: u32,
    pub crews: Vec<CrewSim>,
    pub remaining: Vec<u32>,
    pub completed: Vec<Option<u32>>,
    pub area_left: Vec<usize>,
    pub area_done: Vec<Option<u32>>,
    pub faults_left: usize,
    /// Keep per-crew visit logs; searches that only need values turn this off.
    pub record: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DispatchError {
    Sentinel { from: usize, to: usize },
    Revisit { site: usize },
}

impl Sim {
    pub fn new(m: &Model) -> Sim {
        let area_left: Vec<usize> = m.area_faults.iter().map(Vec::len).collect();
        Sim {
            t: 0,
            crews: m
                .crew_start
                .iter()
                .map(|&s| CrewSim {
                    loc: s,
                    phase: Phase::Idle,
                    visited: 0,
                    visits: Vec::new(),
                    since: 0,
                    done_at: 0,
                })
                .collect(),
            remaining: m.fault_work.clone(),
            completed: vec![None; m.n_faults()],
            area_done: area_left.iter().map(|&n| (n == 0).then_some(0)).collect(),
            area_left,
            faults_left: m.n_faults(),
            record: true,
        }
    }

    pub fn unrecorded(m: &Model) -> Sim {
        Sim {
            record: false,
            ..Sim::new(m)
        }
    }

    pub fn first_idle(&self) -> Option<usize> {
        self.crews.iter().position(|c| c.phase == Phase::Idle)
    }

    pub fn is_visited(&self, crew: usize, fault: usize) -> bool {
        self.crews[crew].visited & (1 << fault) != 0
    }

    pub fn dispatch(&mut self, m: &Model, crew: usize, fault: usize) -> Result<(), DispatchError> {
        let c = &mut self.crews[crew];
        debug_assert_eq!(c.phase, Phase::Idle);
        let site = m.fault_site[fault];
        if c.visited & (1 << fault) != 0 {
            return Err(DispatchError::Revisit { site });
        }
        let d = m.leg(c.loc, site).ok_or(DispatchError::Sentinel { from: c.loc, to: site })?;
        c.phase = Phase::Travel {
            fault,
            arrive: self.t + d,
        };
        Ok(())
    }

    pub fn finish(&mut self, crew: usize) {
        let c = &mut self.crews[crew];
        c.phase = Phase::Done;
        c.done_at = self.t;
    }

    /// Bring a finished crew back into service at the current slot.
    pub fn revive(&mut self, crew: usize) {
        if self.crews[crew].phase == Phase::Done {
            self.crews[crew].phase = Phase::Idle;
        }
    }

    fn arrive(&mut self, m: &Model) {
        let t = self.t;
        for c in &mut self.crews {
            if let Phase::Travel { fault, arrive } = c.phase {
                if arrive == t {
                    let site = m.fault_site[fault];
                    c.loc = site;
                    c.visited |= 1 << fault;
                    if self.record {
                        c.visits.push(Visit {
                            site,
                            arrival: t,
                            completion: t,
                        });
                    }
                    if self.remaining[fault] == 0 {
                        c.phase = Phase::Idle;
                    } else {
                        c.phase = Phase::Work { fault };
                        c.since = t;
                    }
                }
            }
        }
    }

    /// Advance one slot of work. Returns whether any work was done.
    fn work_slot(&mut self, m: &Model) -> bool {
        let mut workers = vec![0u32; m.n_faults()];
        match m.vehicles {
            None => {
                for c in &self.crews {
                    if let Phase::Work { fault } = c.phase {
                        workers[fault] += 1;
                    }
                }
            }
            Some((pole, wire)) => {
                let mut order: Vec<(u32, usize, usize)> = self
                    .crews
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| match c.phase {
                        Phase::Work { fault } => Some((c.since, i, fault)),
                        _ => None,
                    })
                    .collect();
                order.sort_unstable();
                let (mut pole_left, mut wire_left) = (pole, wire);
                for (_, _, fault) in order {
                    let slot = if m.fault_is_pole[fault] {
                        &mut pole_left
                    } else {
                        &mut wire_left
                    };
                    if *slot > 0 {
                        *slot -= 1;
                        workers[fault] += 1;
                    }
                }
            }
        }
        let mut worked = false;
        let mut finished = Vec::new();
        for (f, &w) in workers.iter().enumerate() {
            if w > 0 {
                worked = true;
                self.remaining[f] = self.remaining[f].saturating_sub(w);
                if self.remaining[f] == 0 {
                    finished.push(f);
                }
            }
        }
        self.t += 1;
        let t = self.t;
        for f in finished {
            self.completed[f] = Some(t);
            self.faults_left -= 1;
            let a = m.fault_area[f];
            self.area_left[a] -= 1;
            if self.area_left[a] == 0 {
                self.area_done[a] = Some(t);
            }
        }
        for c in &mut self.crews {
            if let Phase::Work { fault } = c.phase {
                if self.remaining[fault] == 0 {
                    c.phase = Phase::Idle;
                    if let Some(v) = c.visits.last_mut() {
                        v.completion = t;
                    }
                }
            }
        }
        worked
    }

    /// Run until some crew needs a decision or nothing is left to simulate.
    pub fn advance(&mut self, m: &Model) -> Step {
        loop {
            self.arrive(m);
            if self.first_idle().is_some() {
                return Step::Decision;
            }
            let travelling = self
                .crews
                .iter()
                .any(|c| matches!(c.phase, Phase::Travel { .. }));
            let working = self
                .crews
                .iter()
                .any(|c| matches!(c.phase, Phase::Work { .. }));
            if !travelling && !working {
                return Step::Finished;
            }
            let worked = self.work_slot(m);
            if !worked && !travelling && self.first_idle().is_none() {
                return Step::Stalled;
            }
        }
    }

    /// Visit sites per crew, dropping crews still on the road to a target.
    pub fn route_sites(&self) -> Vec<Vec<usize>> {
        self.crews
            .iter()
            .map(|c| c.visits.iter().map(|v| v.site).collect())
            .collect()
    }

    pub fn makespan(&self) -> u32 {
        self.area_done.iter().map(|r| r.unwrap_or(0)).max().unwrap_or(0)
    }
}
