//! Exhaustive search over every per-crew visit order, for cross-checking.

use super::sim::Model;
use super::{better, evaluate_model, Instance, Plan};
use crate::error::{Error, Result};

pub const BRUTE_MAX_CREWS: usize = 2;
pub const BRUTE_MAX_FAULTS: usize = 4;
pub const BRUTE_MAX_HORIZON: u32 = 15;

/// Best plan over all combinations of distinct-site sequences; ties go to
/// the earlier makespan, then the lexicographically smaller visit orders.
pub fn brute_force(inst: &Instance) -> Result<Plan> {
    let envelope = |limit: String| Error::EnvelopeExceeded { solver: "brute", limit };
    if inst.crews.len() > BRUTE_MAX_CREWS {
        return Err(envelope(format!("{} crews (max {BRUTE_MAX_CREWS})", inst.crews.len())));
    }
    if inst.faults.len() > BRUTE_MAX_FAULTS {
        return Err(envelope(format!("{} faults (max {BRUTE_MAX_FAULTS})", inst.faults.len())));
    }
    if inst.horizon > BRUTE_MAX_HORIZON {
        return Err(envelope(format!("horizon {} (max {BRUTE_MAX_HORIZON})", inst.horizon)));
    }
    let m = Model::new(inst);
    let mut sites: Vec<usize> = inst.faults.iter().map(|f| f.site_id).collect();
    sites.sort_unstable();
    let mut seqs = Vec::new();
    sequences(&sites, &mut Vec::new(), &mut seqs);
    let mut best: Option<(Plan, Vec<Vec<usize>>)> = None;
    let mut pick = vec![0usize; inst.crews.len()];
    loop {
        let routes: Vec<Vec<usize>> = pick.iter().map(|&k| seqs[k].clone()).collect();
        if let Ok(p) = evaluate_model(&routes, inst, &m) {
            let wins = match &best {
                None => true,
                Some((b, br)) => better(p.objective, p.makespan, &routes, (b.objective, b.makespan, br)),
            };
            if wins {
                best = Some((p, routes));
            }
        }
        // odometer over crews
        let mut k = pick.len();
        loop {
            if k == 0 {
                return best
                    .map(|b| b.0)
                    .ok_or_else(|| Error::InfeasiblePlan("no visit orders repair every fault".into()));
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < seqs.len() {
                break;
            }
            pick[k] = 0;
        }
    }
}

/// All ordered selections of distinct elements, including the empty one.
fn sequences(items: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(cur.clone());
    for &x in items {
        if !cur.contains(&x) {
            cur.push(x);
            sequences(items, cur, out);
            cur.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_count() {
        let mut out = Vec::new();
        sequences(&[1, 2, 3, 4], &mut Vec::new(), &mut out);
        // sum over k of 4!/(4-k)!
        assert_eq!(out.len(), 1 + 4 + 12 + 24 + 24);
    }
}
