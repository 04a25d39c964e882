//! Independent solution checker. Re-derives schedules by plain forward
//! simulation over the visit lists, without touching the cached segment
//! summaries, so it can catch bugs in the incremental evaluation path.

use crate::model::{Instance, NodeId, TechId};
use crate::solution::{Solution, UNSCHEDULED_PENALTY};

/// Re-derived quantities for one route.
#[derive(Debug, Clone)]
pub struct RouteAudit {
    pub duration: f64,
    pub travel: f64,
    /// Latest departure from the home depot that keeps the schedule legal
    /// without delaying completion.
    pub departure: f64,
    pub completion: f64,
}

/// Re-derived quantities for a whole solution.
#[derive(Debug, Clone)]
pub struct SolutionAudit {
    pub duration: f64,
    pub travel: f64,
    pub fitness: f64,
    pub n_unscheduled: usize,
}

const EPS: f64 = 1e-9;

/// Simulates one route front to back and checks every constraint:
/// endpoints, depot multiplicity, compatibility, time windows, tools and
/// parts before replenishment, skills throughout.
pub fn audit_route(visits: &[NodeId], tech: TechId, inst: &Instance) -> Result<RouteAudit, String> {
    let t = &inst.technicians[tech];
    if visits.len() < 2 || visits[0] != t.home_depot || *visits.last().unwrap() != t.home_depot {
        return Err(format!("route {tech}: must start and end at node {}", t.home_depot));
    }
    if visits.iter().filter(|&&v| v == 0).count() > 1 {
        return Err(format!("route {tech}: more than one replenishment visit"));
    }

    // Earliest schedule, then time-window checks.
    let mut h = vec![0.0f64; visits.len()];
    let mut waits = vec![0.0f64; visits.len()];
    let mut travel = 0.0;
    let (e0, _) = inst.node_tw(visits[0]);
    h[0] = e0;
    for i in 1..visits.len() {
        let hop = inst.travel(visits[i - 1], visits[i]);
        travel += hop;
        let arrival = h[i - 1] + inst.node_service(visits[i - 1]) + hop;
        let (e, l) = inst.node_tw(visits[i]);
        h[i] = arrival.max(e);
        waits[i] = h[i] - arrival;
        if h[i] > l + EPS {
            return Err(format!(
                "route {tech}: service at node {} starts at {:.6} after window close {:.6}",
                visits[i], h[i], l
            ));
        }
    }

    // Largest departure delay that keeps every window and the completion
    // time intact; it is subtracted from the span.
    let mut fts = f64::INFINITY;
    let mut cum_wait = 0.0;
    for i in 0..visits.len() {
        cum_wait += waits[i];
        let (_, l) = inst.node_tw(visits[i]);
        fts = fts.min(cum_wait + l - h[i]);
    }
    let total_wait: f64 = waits.iter().sum();
    let delay = fts.min(total_wait).max(0.0);

    // Resource feasibility by direct accumulation.
    let mut before_depot = true;
    let mut part_used = vec![0u64; inst.counts.parts];
    for &v in &visits[1..visits.len() - 1] {
        if v == 0 {
            before_depot = false;
            continue;
        }
        let task = inst
            .task_at(v)
            .ok_or_else(|| format!("route {tech}: interior visit {v} is not a task node"))?;
        if !inst.is_compatible(task, tech) {
            return Err(format!("route {tech}: task {task} incompatible"));
        }
        let tk = &inst.tasks[task];
        for (q, &need) in tk.skill_need.iter().enumerate() {
            if need && !t.skill_has[q] {
                return Err(format!("route {tech}: task {task} needs missing skill {q}"));
            }
        }
        if before_depot {
            for (tool, &need) in tk.tool_need.iter().enumerate() {
                if need && !t.tool_onboard[tool] {
                    return Err(format!(
                        "route {tech}: task {task} needs tool {tool} before replenishment"
                    ));
                }
            }
            for (p, &d) in tk.part_demand.iter().enumerate() {
                part_used[p] += u64::from(d);
                if part_used[p] > u64::from(t.part_inventory[p]) {
                    return Err(format!(
                        "route {tech}: part {p} demand exceeds inventory before replenishment"
                    ));
                }
            }
        }
    }

    let completion = *h.last().unwrap() + inst.node_service(*visits.last().unwrap());
    let departure = h[0] + delay;
    Ok(RouteAudit {
        duration: completion - departure,
        travel,
        departure,
        completion,
    })
}

/// Audits every route of a solution plus the task partition, and returns
/// independently recomputed totals.
pub fn audit_solution(sol: &Solution, inst: &Instance) -> Result<SolutionAudit, String> {
    let mut seen = vec![false; inst.n_tasks()];
    let mut duration = 0.0;
    let mut travel = 0.0;
    for (k, route) in sol.routes().enumerate() {
        let a = audit_route(route.visits(), k, inst)?;
        duration += a.duration;
        travel += a.travel;
        for task in route.task_ids(inst) {
            if seen[task] {
                return Err(format!("task {task} served twice"));
            }
            seen[task] = true;
        }
    }
    for &task in sol.unscheduled() {
        if seen[task] {
            return Err(format!("task {task} both scheduled and unscheduled"));
        }
        seen[task] = true;
    }
    if let Some(task) = seen.iter().position(|&s| !s) {
        return Err(format!("task {task} missing from the solution"));
    }
    Ok(SolutionAudit {
        duration,
        travel,
        fitness: duration + UNSCHEDULED_PENALTY * sol.unscheduled().len() as f64,
        n_unscheduled: sol.unscheduled().len(),
    })
}
