//! Depth-first branch and bound over crew dispatch decisions.
//!
//! Every time a crew becomes idle it either drives to a fault it has not yet
//! visited or stops for good. Nodes are pruned with an optimistic bound that
//! lets every crew start on every open fault as early as the shortest path
//! allows. The greedy plan seeds the incumbent.

use super::sim::{Model, Phase, Sim, Step};
use super::{ensure_reachable, evaluate_model, solve_greedy, trim_idle_tails, Instance, Plan};
use crate::error::{Error, Result};

pub const EXACT_MAX_CREWS: usize = 6;
pub const EXACT_MAX_FAULTS: usize = 10;
pub const EXACT_MAX_HORIZON: u32 = 60;

const STOP: usize = usize::MAX;
/// Area-order bound is exponential in the number of open areas.
const ORDER_BOUND_MAX_AREAS: usize = 6;
const NONE: u32 = u32::MAX;

type Starts = [u32; EXACT_MAX_CREWS];

struct Search<'a> {
    m: &'a Model,
    closure: Vec<Vec<Option<u32>>>,
    symmetry: bool,
    prune_moves: bool,
    /// Capacities are whole numbers, so objective sums are exact in any order.
    integral: bool,
    best_key: (f64, u32),
    /// Decisions (crew, option) leading to the current node and to the best leaf.
    path: Vec<(usize, usize)>,
    best: Option<Vec<(usize, usize)>>,
}

/// Optimal plan: highest cumulative restored capacity, then earliest makespan.
pub fn solve_exact(inst: &Instance) -> Result<Plan> {
    if inst.crews.len() > EXACT_MAX_CREWS {
        return Err(envelope(format!("{} crews (max {EXACT_MAX_CREWS})", inst.crews.len())));
    }
    if inst.faults.len() > EXACT_MAX_FAULTS {
        return Err(envelope(format!("{} faults (max {EXACT_MAX_FAULTS})", inst.faults.len())));
    }
    if inst.horizon > EXACT_MAX_HORIZON {
        return Err(envelope(format!("horizon {} (max {EXACT_MAX_HORIZON})", inst.horizon)));
    }
    let m = Model::new(inst);
    ensure_reachable(&m)?;
    let incumbent = solve_greedy(inst).ok();
    let vehicles = m.vehicles.is_some();
    let mut s = Search {
        closure: m.closure(),
        m: &m,
        symmetry: !vehicles,
        prune_moves: !vehicles && !m.must_return,
        integral: m
            .area_cap
            .iter()
            .all(|&c| c.fract() == 0.0 && c * f64::from(m.horizon) < 1e12),
        best_key: incumbent
            .as_ref()
            .map_or((f64::NEG_INFINITY, u32::MAX), |p| (p.objective, p.makespan)),
        path: Vec::new(),
        best: None,
    };
    let mut round = vec![None; m.n_crews()];
    s.descend(Sim::unrecorded(&m), &mut round);
    let Some(path) = s.best else {
        return incumbent.ok_or_else(|| Error::InfeasiblePlan("no dispatch order repairs every fault".into()));
    };
    let mut routes = vec![Vec::new(); m.n_crews()];
    for (c, opt) in path {
        if opt != STOP {
            routes[c].push(m.fault_site[opt]);
        }
    }
    let plan = evaluate_model(&routes, inst, &m)?;
    if (plan.objective, plan.makespan) != s.best_key {
        return Err(Error::Invariant(format!(
            "search value {:?} differs from evaluated ({}, {})",
            s.best_key, plan.objective, plan.makespan
        )));
    }
    Ok(trim_idle_tails(plan, inst, &m))
}

fn envelope(limit: String) -> Error {
    Error::EnvelopeExceeded {
        solver: "exact",
        limit,
    }
}

impl Search<'_> {
    /// `round[c]` holds the option crew `c` took at the current slot.
    fn descend(&mut self, mut sim: Sim, round: &mut Vec<Option<usize>>) {
        let before = sim.t;
        match sim.advance(self.m) {
            Step::Finished => {
                self.leaf(&sim);
                return;
            }
            Step::Stalled => return,
            Step::Decision => {}
        }
        if sim.t != before {
            let mut fresh = vec![None; self.m.n_crews()];
            self.branch(sim, &mut fresh);
        } else {
            self.branch(sim, round);
        }
    }

    fn branch(&mut self, sim: Sim, round: &mut Vec<Option<usize>>) {
        if !beats(self.bound(&sim), self.best_key) {
            return;
        }
        let c = sim.first_idle().expect("decision step");
        // Most promising child first, so strong incumbents appear early.
        let mut children = Vec::new();
        for opt in self.options(&sim, c, round) {
            let mut next = sim.clone();
            if opt == STOP {
                next.finish(c);
            } else if next.dispatch(self.m, c, opt).is_err() {
                continue;
            }
            let (ub, mk) = self.bound(&next);
            children.push((ub, mk, opt, next));
        }
        children.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (ub, mk, opt, next) in children {
            if !beats((ub, mk), self.best_key) {
                continue;
            }
            round[c] = Some(opt);
            self.path.push((c, opt));
            self.descend(next, round);
            self.path.pop();
            round[c] = None;
        }
    }

    fn leaf(&mut self, sim: &Sim) {
        let m = self.m;
        if sim.faults_left > 0 {
            return;
        }
        if m.must_return {
            for (i, c) in sim.crews.iter().enumerate() {
                if c.visited != 0 && m.leg(c.loc, m.crew_end[i]).is_none() {
                    return;
                }
            }
        }
        let recovery = sim.area_done.iter().map(|r| r.unwrap_or(0));
        let key = (m.objective_of(recovery), sim.makespan());
        if beats(key, self.best_key) {
            self.best_key = key;
            self.best = Some(self.path.clone());
        }
    }

    fn options(&self, sim: &Sim, c: usize, round: &[Option<usize>]) -> Vec<usize> {
        let m = self.m;
        let here = sim.crews[c].loc;
        let mut open = Vec::new();
        let mut passes = Vec::new();
        for f in 0..m.n_faults() {
            if sim.is_visited(c, f) {
                continue;
            }
            let Some(d) = m.leg(here, m.fault_site[f]) else { continue };
            // Arriving once the crews already bound there have finished is a pass.
            let doomed = self.prune_moves && sim.t + d >= self.committed_finish(sim, f);
            if sim.remaining[f] > 0 && !doomed {
                open.push((d, m.fault_site[f], f));
            } else if !self.prune_moves || self.pass_helps(sim, c, f, d) {
                passes.push((d, m.fault_site[f], f));
            }
        }
        let stop_ok = !self.prune_moves || open.is_empty();
        open.sort_unstable();
        passes.sort_unstable();
        let mut out: Vec<usize> = open.into_iter().chain(passes).map(|x| x.2).collect();
        if stop_ok {
            out.push(STOP);
        }
        if self.symmetry {
            if let Some(floor) = self.symmetry_floor(sim, c, round) {
                out.retain(|&o| key_of(m, o) >= floor);
            }
        }
        out
    }

    /// Slot by which the crews already bound to `f` alone will have repaired it.
    fn committed_finish(&self, sim: &Sim, f: usize) -> u32 {
        let mut starts = [NONE; EXACT_MAX_CREWS];
        for (s, c) in starts.iter_mut().zip(&sim.crews) {
            match c.phase {
                Phase::Work { fault } if fault == f => *s = sim.t,
                Phase::Travel { fault, arrive } if fault == f => *s = arrive,
                _ => {}
            }
        }
        finish_time(&starts, sim.remaining[f])
    }

    /// A pass through repaired fault `r` helps only if it shortens the way to
    /// some open fault this crew may still visit.
    fn pass_helps(&self, sim: &Sim, c: usize, r: usize, d: u32) -> bool {
        let m = self.m;
        let here = sim.crews[c].loc;
        let rs = m.fault_site[r];
        (0..m.n_faults()).any(|g| {
            if sim.remaining[g] == 0 || sim.is_visited(c, g) {
                return false;
            }
            let Some(via) = self.closure[rs][m.fault_site[g]] else { return false };
            match m.leg(here, m.fault_site[g]) {
                Some(direct) => direct > d + via,
                None => true,
            }
        })
    }

    /// Lowest option key allowed for crew `c` given identical crews already
    /// decided in this slot.
    fn symmetry_floor(&self, sim: &Sim, c: usize, round: &[Option<usize>]) -> Option<usize> {
        let m = self.m;
        let me = &sim.crews[c];
        (0..c)
            .filter(|&i| {
                let o = &sim.crews[i];
                round[i].is_some()
                    && o.loc == me.loc
                    && o.visited == me.visited
                    && m.crew_end[i] == m.crew_end[c]
            })
            .filter_map(|i| round[i].map(|o| key_of(m, o)))
            .max()
    }

    /// Optimistic objective and makespan reachable from `sim`.
    fn bound(&self, sim: &Sim) -> (f64, u32) {
        let m = self.m;
        let t = sim.t;
        // Earliest slot each crew could start working on each open fault.
        let mut avail = [[NONE; EXACT_MAX_CREWS]; EXACT_MAX_FAULTS];
        for (i, c) in sim.crews.iter().enumerate() {
            let (from, at, bound_to) = match c.phase {
                Phase::Idle => (c.loc, t, None),
                Phase::Travel { fault, arrive } => (m.fault_site[fault], arrive, Some((fault, arrive))),
                Phase::Work { fault } => (m.fault_site[fault], t + 1, Some((fault, t))),
                Phase::Done => continue,
            };
            let row = &self.closure[from];
            for (f, slot) in avail.iter_mut().enumerate().take(m.n_faults()) {
                if sim.remaining[f] == 0 {
                    continue;
                }
                slot[i] = match bound_to {
                    Some((g, s)) if g == f => s,
                    _ => row[m.fault_site[f]].map_or(NONE, |d| at + d),
                };
            }
        }

        let mut recovery = vec![0u32; m.area_faults.len()];
        // Open areas: (area, fault-level bound, outstanding work, per-crew earliest start).
        let mut open: Vec<(usize, u32, u32, Starts)> = Vec::new();
        for (a, faults) in m.area_faults.iter().enumerate() {
            if let Some(r) = sim.area_done[a] {
                recovery[a] = r;
                continue;
            }
            let mut lb = t + 1;
            let mut work = 0u32;
            let mut area_avail = [NONE; EXACT_MAX_CREWS];
            for &f in faults {
                if sim.remaining[f] == 0 {
                    lb = lb.max(sim.completed[f].unwrap_or(0));
                    continue;
                }
                work += sim.remaining[f];
                lb = lb.max(finish_time(&avail[f], sim.remaining[f]));
                for (x, &s) in area_avail.iter_mut().zip(&avail[f]) {
                    *x = (*x).min(s);
                }
            }
            lb = lb.max(finish_time(&area_avail, work));
            recovery[a] = lb;
            open.push((a, lb, work, area_avail));
        }
        let n_areas = recovery.len();
        let mut mk = recovery.iter().copied().max().unwrap_or(0);
        let independent = m.objective_of(recovery.iter().copied());
        if !self.integral || open.len() < 2 || open.len() > ORDER_BOUND_MAX_AREAS {
            return (independent, mk);
        }

        // Whichever open area recovers j-th waits for all work of the first j.
        let k = open.len();
        let full = (1usize << k) - 1;
        let mut set_lb = [0u32; 1 << ORDER_BOUND_MAX_AREAS];
        for mask in 1..=full {
            let mut starts = [NONE; EXACT_MAX_CREWS];
            let mut work = 0u32;
            for (bit, (_, _, w, av)) in open.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    work += w;
                    for (s, &x) in starts.iter_mut().zip(av) {
                        *s = (*s).min(x);
                    }
                }
            }
            set_lb[mask] = finish_time(&starts, work);
        }
        mk = mk.max(set_lb[full]);
        let mut best = [f64::NEG_INFINITY; 1 << ORDER_BOUND_MAX_AREAS];
        best[0] = 0.0;
        for mask in 1..=full {
            for (bit, &(a, lb, _, _)) in open.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    let r = lb.max(set_lb[mask]);
                    let v = best[mask & !(1 << bit)] + m.area_cap[a] * f64::from(m.horizon.saturating_sub(r));
                    if v > best[mask] {
                        best[mask] = v;
                    }
                }
            }
        }
        let closed = m.objective_of((0..n_areas).map(|a| sim.area_done[a].unwrap_or(m.horizon)));
        (independent.min(closed + best[full]), mk)
    }
}

/// Earliest T with sum over crews of (T - start) >= work; `NONE` if no crew
/// ever starts.
fn finish_time(starts: &[u32], work: u32) -> u32 {
    let mut s = [NONE; EXACT_MAX_CREWS];
    let mut n = 0;
    for &x in starts {
        if x != NONE {
            s[n] = x;
            n += 1;
        }
    }
    if n == 0 {
        return NONE;
    }
    let s = &mut s[..n];
    s.sort_unstable();
    // With k crews active from s[k-1] on, capacity grows by k per slot.
    let mut done: u64 = 0;
    let work = u64::from(work);
    for k in 1..=n {
        let from = s[k - 1];
        let need = work - done;
        let t = u64::from(from) + need.div_ceil(k as u64);
        match s.get(k) {
            Some(&next) if t > u64::from(next) => done += k as u64 * u64::from(next - from),
            _ => return t.min(u64::from(NONE - 1)) as u32,
        }
    }
    unreachable!("last segment always returns")
}

fn key_of(m: &Model, opt: usize) -> usize {
    if opt == STOP {
        STOP
    } else {
        m.fault_site[opt]
    }
}

fn beats(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}
