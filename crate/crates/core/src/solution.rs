//! A complete or partial TRSP solution: one route per technician plus the
//! unscheduled-task pool.

use std::sync::Arc;

use crate::model::{Instance, NodeId, TaskId, TechId};
use crate::route::Route;

/// Penalty per unscheduled task in the fitness of partial solutions.
pub const UNSCHEDULED_PENALTY: f64 = 1e3;

/// Routes are held behind [`Arc`] so cloning a solution is cheap and a
/// rolled-back trial only deep-copies the routes it actually touched.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    routes: Vec<Arc<Route>>,
    /// Sorted ids of tasks not assigned to any route.
    unscheduled: Vec<TaskId>,
    /// Technician currently serving each task, if any.
    task_tech: Vec<Option<TechId>>,
}

impl Solution {
    /// All tasks unscheduled, one empty route per technician.
    pub fn empty(inst: &Instance) -> Self {
        Solution {
            routes: (0..inst.n_techs())
                .map(|k| Arc::new(Route::new(k, inst)))
                .collect(),
            unscheduled: (0..inst.n_tasks()).collect(),
            task_tech: vec![None; inst.n_tasks()],
        }
    }

    #[inline]
    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    #[inline]
    pub fn route(&self, tech: TechId) -> &Route {
        &self.routes[tech]
    }

    /// Mutable access; deep-copies the route if it is shared.
    #[inline]
    pub fn route_mut(&mut self, tech: TechId) -> &mut Route {
        Arc::make_mut(&mut self.routes[tech])
    }

    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter().map(|r| r.as_ref())
    }

    #[inline]
    pub fn unscheduled(&self) -> &[TaskId] {
        &self.unscheduled
    }

    #[inline]
    pub fn tech_of(&self, task: TaskId) -> Option<TechId> {
        self.task_tech[task]
    }

    pub fn n_scheduled(&self) -> usize {
        self.task_tech.iter().filter(|t| t.is_some()).count()
    }

    pub fn scheduled_tasks(&self) -> Vec<TaskId> {
        (0..self.task_tech.len())
            .filter(|&t| self.task_tech[t].is_some())
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.routes.iter().map(|r| r.duration()).sum()
    }

    pub fn total_travel(&self) -> f64 {
        self.routes.iter().map(|r| r.travel_cost()).sum()
    }

    /// Duration plus a fixed penalty per unscheduled task.
    pub fn fitness(&self) -> f64 {
        self.total_duration() + UNSCHEDULED_PENALTY * self.unscheduled.len() as f64
    }

    /// Position of a task inside its route's visit list.
    pub fn position_of(&self, task: TaskId, inst: &Instance) -> Option<(TechId, usize)> {
        let tech = self.task_tech[task]?;
        let node = inst.task_node(task);
        let pos = self.routes[tech].visits().iter().position(|&v| v == node)?;
        Some((tech, pos))
    }

    pub fn mark_scheduled(&mut self, task: TaskId, tech: TechId) {
        debug_assert!(self.task_tech[task].is_none());
        self.task_tech[task] = Some(tech);
        if let Ok(i) = self.unscheduled.binary_search(&task) {
            self.unscheduled.remove(i);
        }
    }

    pub fn mark_unscheduled(&mut self, task: TaskId) {
        debug_assert!(self.task_tech[task].is_some());
        self.task_tech[task] = None;
        if let Err(i) = self.unscheduled.binary_search(&task) {
            self.unscheduled.insert(i, task);
        }
    }

    /// Re-reads task ownership from a route's visit list after an
    /// inter-route move (scheduled set unchanged).
    pub fn reindex_route(&mut self, tech: TechId, inst: &Instance) {
        let visits: Vec<NodeId> = self.routes[tech].visits().to_vec();
        for v in visits {
            if let Some(task) = inst.task_at(v) {
                self.task_tech[task] = Some(tech);
            }
        }
    }

    /// Directed arc set over all routes, sorted; used by the broken-pairs
    /// solution distance.
    pub fn arcs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for r in &self.routes {
            for w in r.visits().windows(2) {
                out.push((w[0], w[1]));
            }
        }
        out.sort_unstable();
        out
    }

    /// Full audit: task partition, route invariants, cache freshness and
    /// per-route feasibility.
    pub fn check_invariants(&self, inst: &Instance) -> Result<(), String> {
        let mut seen = vec![0usize; inst.n_tasks()];
        for t in &self.unscheduled {
            seen[*t] += 1;
            if self.task_tech[*t].is_some() {
                return Err(format!("task {t} both scheduled and unscheduled"));
            }
        }
        for (k, r) in self.routes.iter().enumerate() {
            if r.tech != k {
                return Err(format!("route {k} owned by technician {}", r.tech));
            }
            r.check_invariants(inst)?;
            for task in r.task_ids(inst) {
                seen[task] += 1;
                if self.task_tech[task] != Some(k) {
                    return Err(format!("task {task} index does not match route {k}"));
                }
            }
            if let Err(reason) = crate::eval::feasible_for(r.full(), &inst.technicians[k]) {
                return Err(format!("route {k} infeasible: {reason:?}"));
            }
        }
        if let Some(t) = seen.iter().position(|&c| c != 1) {
            return Err(format!("task {t} appears {} times", seen[t]));
        }
        Ok(())
    }
}
