//! Dispatch-as-found baseline: each idle crew claims the open fault with the
//! best capacity per slot of travel plus work.

use super::sim::{Model, Sim, Step};
use super::{ensure_reachable, evaluate_model, Instance, Plan};
use crate::error::{Error, Result};

pub fn solve_greedy(inst: &Instance) -> Result<Plan> {
    let m = Model::new(inst);
    ensure_reachable(&m)?;
    let routes = greedy_routes(&m)?;
    evaluate_model(&routes, inst, &m)
}

fn greedy_routes(m: &Model) -> Result<Vec<Vec<usize>>> {
    let mut sim = Sim::new(m);
    let mut claimed: u64 = 0;
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); m.n_crews()];
    loop {
        match sim.advance(m) {
            Step::Finished => break,
            Step::Stalled => {
                return Err(Error::InfeasiblePlan(
                    "crews wait forever for special vehicles".into(),
                ))
            }
            Step::Decision => {}
        }
        while let Some(c) = sim.first_idle() {
            if queues[c].is_empty() {
                if let Some(path) = pick(m, &sim, c, claimed) {
                    for &f in &path {
                        claimed |= 1 << f;
                    }
                    queues[c] = path;
                }
            }
            if queues[c].is_empty() {
                sim.finish(c);
            } else {
                let f = queues[c].remove(0);
                sim.dispatch(m, c, f)
                    .map_err(|_| Error::Invariant("greedy path uses a blocked leg".into()))?;
            }
        }
    }
    Ok(sim.route_sites())
}

/// Path (fault indices) to the best unclaimed fault for crew `c`.
fn pick(m: &Model, sim: &Sim, c: usize, claimed: u64) -> Option<Vec<usize>> {
    let crew = &sim.crews[c];
    let mut best: Option<(f64, u64, usize, Vec<usize>)> = None;
    for f in 0..m.n_faults() {
        if claimed & (1 << f) != 0 || sim.remaining[f] == 0 || sim.is_visited(c, f) {
            continue;
        }
        let Some((cost, path)) = m.fault_path(crew.loc, f, crew.visited) else { continue };
        let cap = m.area_cap[m.fault_area[f]];
        let denom = u64::from(cost) + u64::from(sim.remaining[f]);
        let site = m.fault_site[f];
        let wins = match &best {
            None => true,
            // cap / denom > bcap / bdenom, ties to the lower site
            Some((bcap, bdenom, bsite, _)) => {
                let lhs = cap * *bdenom as f64;
                let rhs = *bcap * denom as f64;
                lhs > rhs || (lhs == rhs && site < *bsite)
            }
        };
        if wins {
            best = Some((cap, denom, site, path));
        }
    }
    best.map(|b| b.3)
}
