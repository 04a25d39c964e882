//! Immutable problem data: tasks, technicians, travel times and the
//! derived per-task technician compatibility lists.
//!
//! Node index layout over `V = {0} ∪ O ∪ U`:
//! * `0` — central replenishment depot,
//! * `1..=K` — home depot of technician `k` at node `1 + k`,
//! * `K+1..K+N` — location of task `i` at node `K + 1 + i`.

use crate::error::{Result, TrspError};

pub type NodeId = usize;
pub type TaskId = usize;
pub type TechId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    /// Node id of the task location (`K + 1 + id`).
    pub node: NodeId,
    pub service_time: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    /// Units of each spare-part type consumed by the task.
    pub part_demand: Vec<u32>,
    /// Tool types the task requires.
    pub tool_need: Vec<bool>,
    /// Skills the task requires.
    pub skill_need: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Technician {
    pub id: TechId,
    /// Node id of the home depot (`1 + id`).
    pub home_depot: NodeId,
    /// Initial spare-part stock loaded at the home depot.
    pub part_inventory: Vec<u32>,
    pub tool_onboard: Vec<bool>,
    pub skill_has: Vec<bool>,
    /// Opening and closing times of the home depot.
    pub depot_tw: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceCounts {
    pub tools: usize,
    pub parts: usize,
    pub skills: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceRounding {
    /// Full-precision Euclidean distances.
    None,
    /// Truncate to one decimal (a common Solomon convention).
    TruncateOneDecimal,
}

impl DistanceRounding {
    pub fn apply(self, d: f64) -> f64 {
        match self {
            DistanceRounding::None => d,
            DistanceRounding::TruncateOneDecimal => (d * 10.0).floor() / 10.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DistanceRounding::None => "none",
            DistanceRounding::TruncateOneDecimal => "trunc1",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "none" => Ok(DistanceRounding::None),
            "trunc1" => Ok(DistanceRounding::TruncateOneDecimal),
            other => Err(TrspError::Config(format!("unknown rounding mode `{other}`"))),
        }
    }
}

/// Immutable TRSP instance. Safe to share across concurrent solver runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub tasks: Vec<Task>,
    pub technicians: Vec<Technician>,
    /// Replenishment (service) time at the central depot.
    pub replenishment_time: f64,
    /// Opening/closing times of the central depot.
    pub central_tw: (f64, f64),
    /// Per-node coordinates, indexed by node id.
    pub coords: Vec<(f64, f64)>,
    pub rounding: DistanceRounding,
    pub counts: ResourceCounts,
    /// Dense |V|×|V| travel-time matrix, identical for all vehicles.
    travel: Vec<f64>,
    /// `compat[i]` = sorted ids of technicians holding every skill task `i` needs.
    compat: Vec<Vec<TechId>>,
    // Per-node lookups used by the evaluation kernel.
    node_tw: Vec<(f64, f64)>,
    node_service: Vec<f64>,
    node_task: Vec<Option<TaskId>>,
    /// Cached single-visit summaries, indexed by node id.
    node_single: Vec<crate::eval::SegmentStats>,
    /// Cached `[central depot, node]` summaries, indexed by node id.
    depot_pair: Vec<crate::eval::SegmentStats>,
}

impl Instance {
    /// Builds an instance from per-node coordinates; travel times are
    /// Euclidean distances under the requested rounding.
    pub fn from_coords(
        name: String,
        tasks: Vec<Task>,
        technicians: Vec<Technician>,
        replenishment_time: f64,
        central_tw: (f64, f64),
        coords: Vec<(f64, f64)>,
        rounding: DistanceRounding,
        counts: ResourceCounts,
    ) -> Result<Self> {
        let n_nodes = 1 + technicians.len() + tasks.len();
        if coords.len() != n_nodes {
            return Err(TrspError::Domain(format!(
                "expected {n_nodes} coordinates, got {}",
                coords.len()
            )));
        }
        let mut travel = vec![0.0; n_nodes * n_nodes];
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                if i != j {
                    let dx = coords[i].0 - coords[j].0;
                    let dy = coords[i].1 - coords[j].1;
                    travel[i * n_nodes + j] = rounding.apply((dx * dx + dy * dy).sqrt());
                }
            }
        }
        Self::from_travel(
            name,
            tasks,
            technicians,
            replenishment_time,
            central_tw,
            coords,
            rounding,
            counts,
            travel,
        )
    }

    /// Builds an instance from an explicit travel matrix (row-major |V|×|V|).
    #[allow(clippy::too_many_arguments)]
    pub fn from_travel(
        name: String,
        tasks: Vec<Task>,
        technicians: Vec<Technician>,
        replenishment_time: f64,
        central_tw: (f64, f64),
        coords: Vec<(f64, f64)>,
        rounding: DistanceRounding,
        counts: ResourceCounts,
        travel: Vec<f64>,
    ) -> Result<Self> {
        let n_nodes = 1 + technicians.len() + tasks.len();
        if travel.len() != n_nodes * n_nodes {
            return Err(TrspError::Domain(format!(
                "travel matrix must be {n_nodes}x{n_nodes}"
            )));
        }
        let mut node_tw = vec![(0.0, 0.0); n_nodes];
        let mut node_service = vec![0.0; n_nodes];
        let mut node_task = vec![None; n_nodes];
        node_tw[0] = central_tw;
        node_service[0] = replenishment_time;
        for t in &technicians {
            node_tw[t.home_depot] = t.depot_tw;
        }
        for task in &tasks {
            node_tw[task.node] = (task.tw_open, task.tw_close);
            node_service[task.node] = task.service_time;
            node_task[task.node] = Some(task.id);
        }
        let compat = (0..tasks.len())
            .map(|i| {
                technicians
                    .iter()
                    .filter(|t| {
                        tasks[i]
                            .skill_need
                            .iter()
                            .zip(&t.skill_has)
                            .all(|(&need, &has)| !need || has)
                    })
                    .map(|t| t.id)
                    .collect()
            })
            .collect();
        let mut inst = Instance {
            name,
            tasks,
            technicians,
            replenishment_time,
            central_tw,
            coords,
            rounding,
            counts,
            travel,
            compat,
            node_tw,
            node_service,
            node_task,
            node_single: Vec::new(),
            depot_pair: Vec::new(),
        };
        inst.node_single = (0..n_nodes)
            .map(|v| crate::eval::compute_single(v, &inst))
            .collect();
        inst.depot_pair = (0..n_nodes)
            .map(|v| crate::eval::concat(&inst.node_single[0], &inst.node_single[v], &inst))
            .collect();
        Ok(inst)
    }

    /// Cached summary of the single-visit sequence `[node]`.
    #[inline]
    pub fn node_single(&self, node: NodeId) -> &crate::eval::SegmentStats {
        &self.node_single[node]
    }

    /// Cached summary of `[central depot, node]`.
    #[inline]
    pub fn depot_pair(&self, node: NodeId) -> &crate::eval::SegmentStats {
        &self.depot_pair[node]
    }

    #[inline]
    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    #[inline]
    pub fn n_techs(&self) -> usize {
        self.technicians.len()
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        1 + self.technicians.len() + self.tasks.len()
    }

    #[inline]
    pub fn travel(&self, from: NodeId, to: NodeId) -> f64 {
        self.travel[from * self.n_nodes() + to]
    }

    #[inline]
    pub fn node_tw(&self, node: NodeId) -> (f64, f64) {
        self.node_tw[node]
    }

    #[inline]
    pub fn node_service(&self, node: NodeId) -> f64 {
        self.node_service[node]
    }

    /// Task id at a node, if the node is a task location.
    #[inline]
    pub fn task_at(&self, node: NodeId) -> Option<TaskId> {
        self.node_task[node]
    }

    #[inline]
    pub fn task_node(&self, task: TaskId) -> NodeId {
        self.tasks[task].node
    }

    #[inline]
    pub fn is_task_node(&self, node: NodeId) -> bool {
        self.node_task[node].is_some()
    }

    /// The set `K_i` of technicians compatible with a task.
    pub fn compatible_technicians(&self, task: TaskId) -> Result<&[TechId]> {
        self.compat
            .get(task)
            .map(|v| v.as_slice())
            .ok_or_else(|| TrspError::Domain(format!("task id {task} out of range")))
    }

    pub fn is_compatible(&self, task: TaskId, tech: TechId) -> bool {
        self.compat[task].binary_search(&tech).is_ok()
    }

    pub fn max_travel(&self) -> f64 {
        self.travel.iter().cloned().fold(0.0, f64::max)
    }

    /// Latest time-window close over all nodes; used for normalizations.
    pub fn horizon(&self) -> f64 {
        self.node_tw.iter().map(|tw| tw.1).fold(0.0, f64::max)
    }
}

/// A named invariant violation found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.detail)
    }
}

fn violation(field: impl Into<String>, detail: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        detail: detail.into(),
    }
}

/// Checks every instance invariant; returns the (possibly empty) list of
/// violations. Violations are data, not errors.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_nodes = inst.n_nodes();
    for (i, task) in inst.tasks.iter().enumerate() {
        if task.id != i {
            out.push(violation(format!("tasks[{i}].id"), "id does not match position"));
        }
        if task.node != inst.n_techs() + 1 + i {
            out.push(violation(
                format!("tasks[{i}].node"),
                "node id breaks the layout bijection",
            ));
        }
        if task.tw_open > task.tw_close {
            out.push(violation(format!("tasks[{i}].tw"), "tw_open > tw_close"));
        }
        if task.service_time < 0.0 {
            out.push(violation(format!("tasks[{i}].service_time"), "negative"));
        }
        if task.part_demand.len() != inst.counts.parts
            || task.tool_need.len() != inst.counts.tools
            || task.skill_need.len() != inst.counts.skills
        {
            out.push(violation(format!("tasks[{i}]"), "requirement vector length mismatch"));
        }
    }
    for (k, tech) in inst.technicians.iter().enumerate() {
        if tech.id != k {
            out.push(violation(format!("technicians[{k}].id"), "id does not match position"));
        }
        if tech.home_depot != 1 + k {
            out.push(violation(
                format!("technicians[{k}].home_depot"),
                "node id breaks the layout bijection",
            ));
        }
        if tech.depot_tw.0 > tech.depot_tw.1 {
            out.push(violation(format!("technicians[{k}].depot_tw"), "open > close"));
        }
        if tech.part_inventory.len() != inst.counts.parts
            || tech.tool_onboard.len() != inst.counts.tools
            || tech.skill_has.len() != inst.counts.skills
        {
            out.push(violation(format!("technicians[{k}]"), "resource vector length mismatch"));
        }
    }
    for i in 0..n_nodes {
        if inst.travel(i, i) != 0.0 {
            out.push(violation(format!("travel[{i}][{i}]"), "diagonal must be zero"));
        }
        for j in 0..n_nodes {
            if inst.travel(i, j) < 0.0 {
                out.push(violation(format!("travel[{i}][{j}]"), "negative travel time"));
            }
        }
    }
    // compat lists must equal a brute-force filter over skill flags
    for (i, task) in inst.tasks.iter().enumerate() {
        let brute: Vec<TechId> = inst
            .technicians
            .iter()
            .filter(|t| {
                task.skill_need
                    .iter()
                    .zip(&t.skill_has)
                    .all(|(&need, &has)| !need || has)
            })
            .map(|t| t.id)
            .collect();
        if inst.compat[i] != brute {
            out.push(violation(format!("compat[{i}]"), "does not match skill flags"));
        }
    }
    out
}
