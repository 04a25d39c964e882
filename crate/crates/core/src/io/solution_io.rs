//! Solution text format: one line per non-empty route listing visited
//! nodes with `D` marking the replenishment stop, the unscheduled pool,
//! and the claimed total duration.
//!
//! ```text
//! instance C101
//! 0: 27 45 D 89
//! 3: 31 52
//! unscheduled: 4 7
//! duration: 1234.567890
//! ```

use crate::error::{Result, TrspError};
use crate::model::{Instance, NodeId, TechId};
use crate::route::Route;
use crate::solution::Solution;

pub fn write_solution(sol: &Solution, inst: &Instance) -> String {
    let mut s = String::new();
    s.push_str(&format!("instance {}\n", inst.name));
    for (k, route) in sol.routes().enumerate() {
        if route.is_empty() {
            continue;
        }
        s.push_str(&format!("{k}:"));
        for &v in &route.visits()[1..route.len() - 1] {
            if v == 0 {
                s.push_str(" D");
            } else {
                s.push_str(&format!(" {v}"));
            }
        }
        s.push('\n');
    }
    s.push_str("unscheduled:");
    for &t in sol.unscheduled() {
        s.push_str(&format!(" {t}"));
    }
    s.push('\n');
    s.push_str(&format!("duration: {:.6}\n", sol.total_duration()));
    s
}

/// Parses and revalidates a solution file against its instance. Returns
/// the solution plus the duration the file claims; feasibility, the task
/// partition and the unscheduled list are all re-checked, so a tampered
/// file is rejected.
pub fn read_solution(text: &str, inst: &Instance) -> Result<(Solution, f64)> {
    let mut sol = Solution::empty(inst);
    let mut claimed_duration = None;
    let mut saw_unscheduled = false;
    let mut listed_unscheduled: Vec<usize> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with("instance ") {
            continue;
        }
        if let Some(rest) = l.strip_prefix("duration:") {
            claimed_duration = Some(rest.trim().parse().map_err(|_| TrspError::Parse {
                line,
                msg: format!("bad duration value {:?}", rest.trim()),
            })?);
            continue;
        }
        if let Some(rest) = l.strip_prefix("unscheduled:") {
            saw_unscheduled = true;
            for w in rest.split_whitespace() {
                let t: usize = w.parse().map_err(|_| TrspError::Parse {
                    line,
                    msg: format!("bad task id {w:?}"),
                })?;
                listed_unscheduled.push(t);
            }
            continue;
        }
        let (head, rest) = l.split_once(':').ok_or(TrspError::Parse {
            line,
            msg: "expected `tech:` route line".into(),
        })?;
        let tech: TechId = head.trim().parse().map_err(|_| TrspError::Parse {
            line,
            msg: format!("bad technician id {:?}", head.trim()),
        })?;
        if tech >= inst.n_techs() {
            return Err(TrspError::Parse { line, msg: format!("unknown technician {tech}") });
        }
        if !sol.route(tech).is_empty() {
            return Err(TrspError::Parse { line, msg: format!("duplicate route for {tech}") });
        }
        let home = inst.technicians[tech].home_depot;
        let mut visits: Vec<NodeId> = vec![home];
        for w in rest.split_whitespace() {
            if w == "D" {
                visits.push(0);
                continue;
            }
            let v: NodeId = w.parse().map_err(|_| TrspError::Parse {
                line,
                msg: format!("bad node id {w:?}"),
            })?;
            let task = inst.task_at(v).ok_or(TrspError::Parse {
                line,
                msg: format!("node {v} is not a task node"),
            })?;
            if sol.tech_of(task).is_some() {
                return Err(TrspError::Solution(format!("task {task} listed twice")));
            }
            sol.mark_scheduled(task, tech);
            visits.push(v);
        }
        visits.push(home);
        *sol.route_mut(tech) = Route::with_visits(tech, visits, inst);
    }

    let claimed_duration = claimed_duration
        .ok_or(TrspError::Solution("missing duration line".into()))?;
    if !saw_unscheduled {
        return Err(TrspError::Solution("missing unscheduled line".into()));
    }
    listed_unscheduled.sort_unstable();
    if listed_unscheduled != sol.unscheduled() {
        return Err(TrspError::Solution(
            "unscheduled line does not match the routes".into(),
        ));
    }
    sol.check_invariants(inst).map_err(TrspError::Solution)?;
    Ok((sol, claimed_duration))
}
