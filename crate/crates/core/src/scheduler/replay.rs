//! Execute a plan's visit orders on a different travel matrix.
//!
//! Crews follow their original order. When the next leg has no finite cost a
//! crew heads to the nearest reachable fault left in its queue, else threads
//! through unvisited faults, else gives its remaining faults up. Given-up
//! faults go to crews with nothing left to do.

use super::sim::{Model, Sim, Step};
use super::{plan_from_sim, Instance, Plan};
use crate::error::{Error, Result};

pub fn replay(plan: &Plan, inst: &Instance) -> Result<Plan> {
    let m = Model::new(inst);
    if plan.routes.len() != inst.crews.len() {
        return Err(Error::InfeasiblePlan(format!(
            "plan has {} routes for {} crews",
            plan.routes.len(),
            inst.crews.len()
        )));
    }
    let mut queues: Vec<Vec<usize>> = Vec::with_capacity(plan.routes.len());
    for (route, crew) in plan.routes.iter().zip(&inst.crews) {
        if route.crew_id != crew.crew_id {
            return Err(Error::InfeasiblePlan(format!(
                "plan route for crew {} where crew {} was expected",
                route.crew_id, crew.crew_id
            )));
        }
        let mut q = Vec::with_capacity(route.visits.len());
        for v in &route.visits {
            let f = m.site_fault.get(v.site).copied().flatten().ok_or_else(|| {
                Error::InfeasiblePlan(format!("crew {}: site {} is not a fault", crew.crew_id, v.site))
            })?;
            q.push(f);
        }
        queues.push(q);
    }
    let mut sim = Sim::new(&m);
    let mut orphans: Vec<usize> = Vec::new();
    let mut notes = Vec::new();
    loop {
        match sim.advance(&m) {
            Step::Finished => break,
            Step::Stalled => {
                return Err(Error::InfeasiblePlan(
                    "crews wait forever for special vehicles".into(),
                ))
            }
            Step::Decision => {}
        }
        while let Some(c) = sim.first_idle() {
            let id = inst.crews[c].crew_id;
            queues[c].retain(|&f| !sim.is_visited(c, f));
            if !queues[c].is_empty() {
                reroute(&m, &sim, c, id, &mut queues[c], &mut orphans, &mut notes);
                if queues[c].is_empty() {
                    for i in 0..sim.crews.len() {
                        sim.revive(i);
                    }
                }
            }
            if queues[c].is_empty() {
                orphans.retain(|&f| sim.remaining[f] > 0);
                if let Some((path, f)) = adopt(&m, &sim, c, &orphans) {
                    orphans.retain(|&o| o != f);
                    notes.push(format!(
                        "t={} crew {id}: takes over site {}",
                        sim.t, m.fault_site[f]
                    ));
                    queues[c] = path;
                }
            }
            if queues[c].is_empty() {
                sim.finish(c);
                continue;
            }
            let f = queues[c].remove(0);
            sim.dispatch(&m, c, f)
                .map_err(|_| Error::Invariant("replay chose a blocked leg".into()))?;
        }
    }
    plan_from_sim(inst, &m, &sim, notes)
}

/// Make the head of `queue` reachable by a finite leg, or empty the queue
/// into `orphans`.
fn reroute(
    m: &Model,
    sim: &Sim,
    c: usize,
    id: usize,
    queue: &mut Vec<usize>,
    orphans: &mut Vec<usize>,
    notes: &mut Vec<String>,
) {
    let here = sim.crews[c].loc;
    let next = queue[0];
    if m.leg(here, m.fault_site[next]).is_some() {
        return;
    }
    let blocked = format!("t={} crew {id}: {} -> {} blocked", sim.t, here, m.fault_site[next]);
    let nearest = queue
        .iter()
        .enumerate()
        .filter_map(|(k, &f)| m.leg(here, m.fault_site[f]).map(|d| (d, k)))
        .min();
    if let Some((_, k)) = nearest {
        let f = queue.remove(k);
        queue.insert(0, f);
        notes.push(format!("{blocked}; heading to {} first", m.fault_site[f]));
        return;
    }
    if let Some((_, path)) = m.fault_path(here, next, sim.crews[c].visited) {
        let via: Vec<String> = path[..path.len() - 1]
            .iter()
            .map(|&f| m.fault_site[f].to_string())
            .collect();
        notes.push(format!("{blocked}; going via {}", via.join(", ")));
        queue.remove(0);
        let rest: Vec<usize> = queue.iter().copied().filter(|f| !path.contains(f)).collect();
        *queue = path;
        queue.extend(rest);
        return;
    }
    let sites: Vec<String> = queue.iter().map(|&f| m.fault_site[f].to_string()).collect();
    notes.push(format!("{blocked}; gives up sites {}", sites.join(", ")));
    orphans.append(queue);
}

/// Cheapest reachable orphan for crew `c`, ties to the lower site.
fn adopt(m: &Model, sim: &Sim, c: usize, orphans: &[usize]) -> Option<(Vec<usize>, usize)> {
    let crew = &sim.crews[c];
    orphans
        .iter()
        .filter(|&&f| !sim.is_visited(c, f))
        .filter_map(|&f| {
            m.fault_path(crew.loc, f, crew.visited)
                .map(|(cost, path)| ((cost, m.fault_site[f]), path, f))
        })
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, path, f)| (path, f))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{evaluate, SolveOptions};
    use super::*;

    fn inst(legs: &[(usize, usize, u32)]) -> Instance {
        Instance::new(
            matrix(5, legs),
            vec![fault(2, "A", 1), fault(3, "A", 1), fault(4, "B", 2)],
            vec![area("A", 5.0, &[2, 3]), area("B", 2.0, &[4])],
            crews(2),
            40,
            None,
            SolveOptions::default(),
        )
        .unwrap()
    }

    const FULL: &[(usize, usize, u32)] = &[(0, 2, 2), (0, 3, 3), (0, 4, 4), (2, 3, 1), (2, 4, 2), (3, 4, 2)];

    #[test]
    fn same_matrix_same_plan() {
        let i = inst(FULL);
        let p = evaluate(&[vec![2, 3], vec![4]], &i).unwrap();
        assert_eq!(replay(&p, &i).unwrap(), p);
    }

    #[test]
    fn blocked_leg_retargets_queue() {
        let i = inst(FULL);
        let p = evaluate(&[vec![2, 3, 4], vec![]], &i).unwrap();
        let blocked = inst(&[(0, 2, 2), (0, 3, 3), (0, 4, 4), (2, 4, 2), (3, 4, 2)]);
        let r = replay(&p, &blocked).unwrap();
        assert_eq!(r.route_sites(), vec![vec![2, 4, 3], vec![]]);
        assert_eq!(r.detours.len(), 1);
        assert!(r.detours[0].contains("2 -> 3 blocked"), "{:?}", r.detours);
    }

    #[test]
    fn waypoint_detour() {
        let i = inst(FULL);
        let p = evaluate(&[vec![2, 3], vec![4]], &i).unwrap();
        // 2 -> 3 only via 4
        let blocked = inst(&[(0, 2, 2), (0, 3, 3), (0, 4, 4), (2, 4, 2), (3, 4, 2)]);
        let r = replay(&p, &blocked).unwrap();
        assert_eq!(r.route_sites()[0], vec![2, 4, 3]);
        assert!(r.objective <= p.objective);
    }

    #[test]
    fn orphans_are_adopted() {
        let i = inst(FULL);
        let p = evaluate(&[vec![2, 3], vec![4]], &i).unwrap();
        // crew 0 stranded at 2; crew 1 can still reach 3 from 4
        let blocked = inst(&[(0, 2, 2), (0, 3, 3), (0, 4, 4), (3, 4, 2)]);
        let r = replay(&p, &blocked).unwrap();
        assert_eq!(r.route_sites(), vec![vec![2], vec![4, 3]]);
        assert_eq!(r.detours.len(), 2, "{:?}", r.detours);
    }
}
