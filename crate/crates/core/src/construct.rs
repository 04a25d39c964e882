//! Removal and repair machinery: cheapest-insertion repair driven by a
//! lazily invalidated priority queue, three removal heuristics, and the
//! removal/repair perturbation built from them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::eval::{concat, stats_single, SegmentStats};
use crate::model::{Instance, TaskId, TechId};
use crate::solution::Solution;

/// What a move is priced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Duration,
    TravelCost,
}

impl Criterion {
    #[inline]
    pub fn pick(self, d_duration: f64, d_travel: f64) -> f64 {
        match self {
            Criterion::Duration => d_duration,
            Criterion::TravelCost => d_travel,
        }
    }
}

/// The removal heuristics used by the perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalKind {
    Random,
    Worst,
    SequenceRelated,
}

/// Removes one task from its route, then drops the replenishment stop if
/// nothing before the route end still needs it.
pub fn remove_task(sol: &mut Solution, task: TaskId, inst: &Instance) {
    let (tech, pos) = sol.position_of(task, inst).expect("task must be scheduled");
    sol.route_mut(tech).apply_splice(pos, pos + 1, &[], inst);
    sol.mark_unscheduled(task);
    sol.route_mut(tech).drop_depot_if_redundant(inst);
}

/// Removes `d` uniformly chosen scheduled tasks.
pub fn random_removal<R: Rng>(
    sol: &mut Solution,
    d: usize,
    inst: &Instance,
    rng: &mut R,
) -> Vec<TaskId> {
    let scheduled = sol.scheduled_tasks();
    let d = d.min(scheduled.len());
    let picks = rand::seq::index::sample(rng, scheduled.len(), d);
    let mut removed = Vec::with_capacity(d);
    for i in picks {
        let task = scheduled[i];
        remove_task(sol, task, inst);
        removed.push(task);
    }
    removed
}

/// Repeatedly removes the task whose removal improves the criterion most.
pub fn worst_removal(
    sol: &mut Solution,
    d: usize,
    criterion: Criterion,
    inst: &Instance,
) -> Vec<TaskId> {
    let mut removed = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<(f64, TaskId)> = None;
        for task in sol.scheduled_tasks() {
            let (tech, pos) = sol.position_of(task, inst).unwrap();
            let (dd, dt) = sol
                .route(tech)
                .eval_splice_fast(pos, pos + 1, &[], inst)
                .expect("removing a visit keeps the route feasible");
            let delta = criterion.pick(dd, dt);
            if best.map_or(true, |(b, _)| delta < b) {
                best = Some((delta, task));
            }
        }
        match best {
            Some((_, task)) => {
                remove_task(sol, task, inst);
                removed.push(task);
            }
            None => break,
        }
    }
    removed
}

/// Relatedness of two tasks: travel time between their locations plus the
/// gap between their window openings, both normalized. Smaller is closer.
pub fn shaw_relatedness(
    inst: &Instance,
    a: TaskId,
    b: TaskId,
    max_travel: f64,
    horizon: f64,
) -> f64 {
    let t = inst.travel(inst.task_node(a), inst.task_node(b));
    let de = (inst.tasks[a].tw_open - inst.tasks[b].tw_open).abs();
    t / max_travel.max(1e-12) + de / horizon.max(1e-12)
}

/// Removes up to `d` tasks as contiguous blocks of length at most
/// `block_len`: a random seed task plus the most related seeds on other
/// routes, each taking the consecutive task visits from its position on
/// (blocks stop at the replenishment visit or the route end).
pub fn sequence_related_removal<R: Rng>(
    sol: &mut Solution,
    d: usize,
    block_len: usize,
    inst: &Instance,
    rng: &mut R,
) -> Vec<TaskId> {
    let scheduled = sol.scheduled_tasks();
    if scheduled.is_empty() || d == 0 {
        return Vec::new();
    }
    let max_travel = inst.max_travel();
    let horizon = inst.horizon();

    let first = scheduled[rng.gen_range(0..scheduled.len())];
    let n_seeds = d.div_ceil(block_len);
    let mut seeds = vec![first];
    let mut used_routes = vec![false; inst.n_techs()];
    used_routes[sol.tech_of(first).unwrap()] = true;

    let mut others: Vec<(f64, TaskId)> = scheduled
        .iter()
        .filter(|&&t| t != first)
        .map(|&t| (shaw_relatedness(inst, first, t, max_travel, horizon), t))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, t) in others {
        if seeds.len() >= n_seeds {
            break;
        }
        let tech = sol.tech_of(t).unwrap();
        if !used_routes[tech] {
            used_routes[tech] = true;
            seeds.push(t);
        }
    }

    let mut removed = Vec::new();
    for seed in seeds {
        if removed.len() >= d {
            break;
        }
        let (tech, pos) = match sol.position_of(seed, inst) {
            Some(p) => p,
            None => continue,
        };
        // Collect the block first: positions shift while removing.
        let block: Vec<TaskId> = sol.route(tech).visits()[pos..]
            .iter()
            .map_while(|&v| inst.task_at(v))
            .take(block_len.min(d - removed.len()))
            .collect();
        for task in block {
            remove_task(sol, task, inst);
            removed.push(task);
        }
    }
    removed
}

// ---------------------------------------------------------------------------
// Cheapest insertion.

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand {
    cost: f64,
    pos: usize,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    task: TaskId,
    tech: TechId,
    pos: usize,
    with_depot: bool,
    version: u64,
}

impl Entry {
    fn key(&self) -> (f64, TaskId, TechId, usize, bool) {
        (self.cost, self.task, self.tech, self.pos, self.with_depot)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap and we want the cheapest first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (c0, t0, k0, p0, d0) = self.key();
        let (c1, t1, k1, p1, d1) = other.key();
        c1.total_cmp(&c0)
            .then(t1.cmp(&t0))
            .then(k1.cmp(&k0))
            .then(p1.cmp(&p0))
            .then(d1.cmp(&d0))
    }
}

/// Best plain insertion of a task into one route.
///
/// The resource verdict of inserting one task does not depend on the exact
/// position, only on which side of the replenishment stop it lands: before
/// it the task's tool and part needs join the pre-replenishment stretch,
/// after it only skills matter and the compatibility filter guarantees
/// those. So the resource check is done once here and the position loop
/// prices schedules only.
pub static SCAN_CALLS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
pub static SCAN_POSITIONS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

fn scan_plain(
    sol: &Solution,
    tech: TechId,
    single: &SegmentStats,
    criterion: Criterion,
    inst: &Instance,
) -> Option<Cand> {
    SCAN_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let route = sol.route(tech);
    SCAN_POSITIONS.fetch_add(route.len() as u64, std::sync::atomic::Ordering::Relaxed);
    let t = &inst.technicians[tech];
    let depot_pos = route.depot_pos();
    let pre_ok = single
        .ren_acc
        .iter()
        .enumerate()
        .all(|(i, &need)| need == 0 || t.tool_onboard[i])
        && {
            let base = &route.full().nonren_acc;
            single
                .nonren_acc
                .iter()
                .enumerate()
                .all(|(i, &need)| base[i] + need <= t.part_inventory[i])
        };
    let mut plain: Option<Cand> = None;
    for pos in 1..route.len() {
        let before_depot = depot_pos.map_or(true, |d| pos <= d);
        if before_depot && !pre_ok {
            continue;
        }
        if let Some((dd, dt)) = route.eval_splice_time(pos, pos, &[single], inst) {
            let cost = criterion.pick(dd, dt);
            if plain.map_or(true, |b| cost < b.cost) {
                plain = Some(Cand { cost, pos });
            }
        }
    }
    plain
}

/// Best depot-paired insertion: the replenishment stop directly in front
/// of the task, only while the route has no such stop yet. The stop leads
/// the inserted pair, so the pair adds no pre-replenishment tool or part
/// needs and the check reduces to the schedule.
fn scan_depot(
    sol: &Solution,
    tech: TechId,
    depot_pair: &SegmentStats,
    criterion: Criterion,
    inst: &Instance,
) -> Option<Cand> {
    let route = sol.route(tech);
    if route.depot_pos().is_some() {
        return None;
    }
    let mut depot: Option<Cand> = None;
    for pos in 1..route.len() {
        if let Some((dd, dt)) = route.eval_splice_time(pos, pos, &[depot_pair], inst) {
            let cost = criterion.pick(dd, dt);
            if depot.map_or(true, |b| cost < b.cost) {
                depot = Some(Cand { cost, pos });
            }
        }
    }
    depot
}

fn scan_route(
    sol: &Solution,
    tech: TechId,
    single: &SegmentStats,
    depot_pair: &SegmentStats,
    criterion: Criterion,
    inst: &Instance,
) -> (Option<Cand>, Option<Cand>) {
    (
        scan_plain(sol, tech, single, criterion, inst),
        scan_depot(sol, tech, depot_pair, criterion, inst),
    )
}

/// Reusable (task, route) candidate store keyed by route content version.
/// Carrying one across repeated [`best_insertion`] calls lets untouched
/// routes skip their rescans; entries are exact, never merely stale, so
/// results are identical with or without reuse.
/// Small LRU cell: slot 0 is the most recently used entry. Keeping a few
/// older versions matters because rejected rounds roll routes back to
/// their previous content, which a single slot would keep evicting.
const CELL_WAYS: usize = 4;
type Cell = [(u64, Option<Cand>); CELL_WAYS];

#[inline]
fn cell_get(cell: &mut Cell, v: u64) -> Option<Option<Cand>> {
    for i in 0..CELL_WAYS {
        if cell[i].0 == v {
            cell[..=i].rotate_right(1);
            return Some(cell[0].1);
        }
    }
    None
}

#[inline]
fn cell_put(cell: &mut Cell, v: u64, cand: Option<Cand>) {
    cell.rotate_right(1);
    cell[0] = (v, cand);
}

#[derive(Debug)]
pub struct InsertionCache {
    criterion: Criterion,
    n_techs: usize,
    plain: Vec<Cell>,
    depot: Vec<Cell>,
}

impl InsertionCache {
    pub fn new(inst: &Instance, criterion: Criterion) -> Self {
        let cells = inst.n_tasks() * inst.n_techs();
        InsertionCache {
            criterion,
            n_techs: inst.n_techs(),
            plain: vec![[(0, None); CELL_WAYS]; cells],
            depot: vec![[(0, None); CELL_WAYS]; cells],
        }
    }

    #[inline]
    fn idx(&self, task: TaskId, tech: TechId) -> usize {
        task * self.n_techs + tech
    }

    fn plain_of(
        &mut self,
        sol: &Solution,
        task: TaskId,
        tech: TechId,
        single: &SegmentStats,
        inst: &Instance,
    ) -> Option<Cand> {
        let v = sol.route(tech).version();
        let i = self.idx(task, tech);
        if let Some(hit) = cell_get(&mut self.plain[i], v) {
            return hit;
        }
        let cand = scan_plain(sol, tech, single, self.criterion, inst);
        cell_put(&mut self.plain[i], v, cand);
        cand
    }

    fn depot_of(
        &mut self,
        sol: &Solution,
        task: TaskId,
        tech: TechId,
        pair: &SegmentStats,
        inst: &Instance,
    ) -> Option<Cand> {
        let v = sol.route(tech).version();
        let i = self.idx(task, tech);
        if let Some(hit) = cell_get(&mut self.depot[i], v) {
            return hit;
        }
        let cand = scan_depot(sol, tech, pair, self.criterion, inst);
        cell_put(&mut self.depot[i], v, cand);
        cand
    }
}

/// One [`InsertionCache`] per pricing criterion, so a long-lived owner
/// (one solver run) can reuse scan results across every repair call it
/// makes, whichever criterion the current phase prices by.
#[derive(Debug)]
pub struct RepairCaches {
    duration: InsertionCache,
    travel: InsertionCache,
}

impl RepairCaches {
    pub fn new(inst: &Instance) -> Self {
        RepairCaches {
            duration: InsertionCache::new(inst, Criterion::Duration),
            travel: InsertionCache::new(inst, Criterion::TravelCost),
        }
    }

    #[inline]
    pub fn of(&mut self, criterion: Criterion) -> &mut InsertionCache {
        match criterion {
            Criterion::Duration => &mut self.duration,
            Criterion::TravelCost => &mut self.travel,
        }
    }
}

/// Inserts as many of `pending` as possible, cheapest feasible insertion
/// first across all tasks. Plain insertions are always preferred; a task
/// only competes with its depot-paired insertions while no route offers it
/// a plain one. Returns the tasks that could not be placed, ascending.
///
/// Candidate costs are cached per (task, route) and invalidated by a
/// per-route version counter; the queue pops lazily and skips entries
/// whose version or tier no longer matches. The result is identical to
/// [`best_insertion_naive`].
pub fn best_insertion(
    sol: &mut Solution,
    pending: Vec<TaskId>,
    criterion: Criterion,
    inst: &Instance,
) -> Vec<TaskId> {
    let mut cache = InsertionCache::new(inst, criterion);
    best_insertion_cached(sol, pending, criterion, inst, &mut cache)
}

/// [`best_insertion`] with a caller-owned candidate cache; see
/// [`InsertionCache`].
pub fn best_insertion_cached(
    sol: &mut Solution,
    pending: Vec<TaskId>,
    criterion: Criterion,
    inst: &Instance,
    cache: &mut InsertionCache,
) -> Vec<TaskId> {
    assert_eq!(cache.criterion, criterion, "cache bound to another criterion");
    let mut tasks: Vec<TaskId> = pending;
    tasks.sort_unstable();
    tasks.dedup();
    tasks.retain(|&t| sol.tech_of(t).is_none());
    if tasks.is_empty() {
        return tasks;
    }

    let idx_of = {
        let mut m = vec![usize::MAX; inst.n_tasks()];
        for (i, &t) in tasks.iter().enumerate() {
            m[t] = i;
        }
        m
    };
    let singles: Vec<&SegmentStats> =
        tasks.iter().map(|&t| inst.node_single(inst.task_node(t))).collect();
    let pairs: Vec<&SegmentStats> =
        tasks.iter().map(|&t| inst.depot_pair(inst.task_node(t))).collect();

    let mut plain_count = vec![0usize; tasks.len()];
    let mut pending_flag = vec![true; tasks.len()];
    // Depot-paired candidates only compete while a task has no plain
    // candidate at all, so they are scanned lazily on the transition.
    let mut depot_active = vec![false; tasks.len()];
    let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(64);

    let push_cand = |heap: &mut BinaryHeap<Entry>,
                     cand: Option<Cand>,
                     task: TaskId,
                     tech: TechId,
                     with_depot: bool,
                     version: u64| {
        if let Some(c) = cand {
            heap.push(Entry { cost: c.cost, task, tech, pos: c.pos, with_depot, version });
        }
    };

    for (i, &task) in tasks.iter().enumerate() {
        for &tech in inst.compatible_technicians(task).unwrap() {
            let v = sol.route(tech).version();
            let p = cache.plain_of(sol, task, tech, &singles[i], inst);
            plain_count[i] += usize::from(p.is_some());
            push_cand(&mut heap, p, task, tech, false, v);
        }
        if plain_count[i] == 0 {
            depot_active[i] = true;
            for &tech in inst.compatible_technicians(task).unwrap() {
                let v = sol.route(tech).version();
                let dp = cache.depot_of(sol, task, tech, &pairs[i], inst);
                push_cand(&mut heap, dp, task, tech, true, v);
            }
        }
    }

    while let Some(e) = heap.pop() {
        let i = idx_of[e.task];
        if !pending_flag[i]
            || e.version != sol.route(e.tech).version()
            || e.with_depot != (plain_count[i] == 0)
        {
            continue;
        }
        let nodes: &[usize] = if e.with_depot {
            &[0, inst.task_node(e.task)]
        } else {
            &[inst.task_node(e.task)]
        };
        let v_prev = sol.route(e.tech).version();
        sol.route_mut(e.tech).apply_splice(e.pos, e.pos, nodes, inst);
        sol.mark_scheduled(e.task, e.tech);
        pending_flag[i] = false;
        let v_new = sol.route(e.tech).version();

        for (j, &task) in tasks.iter().enumerate() {
            if !pending_flag[j] || !inst.is_compatible(task, e.tech) {
                continue;
            }
            // The count still reflects the scan made under the pre-splice
            // version, which is always still cached.
            let ci = cache.idx(task, e.tech);
            let old = cell_get(&mut cache.plain[ci], v_prev)
                .expect("pending pair was scanned before the splice")
                .is_some();
            let p = cache.plain_of(sol, task, e.tech, &singles[j], inst);
            plain_count[j] = plain_count[j] - usize::from(old) + usize::from(p.is_some());
            if plain_count[j] > 0 {
                push_cand(&mut heap, p, task, e.tech, false, v_new);
            } else if !depot_active[j] {
                // The task just fell back to depot-paired insertions:
                // activate them all.
                depot_active[j] = true;
                for &tech in inst.compatible_technicians(task).unwrap() {
                    let v = sol.route(tech).version();
                    let dp = cache.depot_of(sol, task, tech, &pairs[j], inst);
                    push_cand(&mut heap, dp, task, tech, true, v);
                }
            } else {
                let dp = cache.depot_of(sol, task, e.tech, &pairs[j], inst);
                push_cand(&mut heap, dp, task, e.tech, true, v_new);
            }
        }
    }

    tasks.retain(|&t| sol.tech_of(t).is_none());
    tasks
}

/// Quadratic reference implementation of [`best_insertion`]: rescans every
/// (task, route, position) triple before each placement and picks the
/// cheapest by (cost, task, technician, position).
pub fn best_insertion_naive(
    sol: &mut Solution,
    pending: Vec<TaskId>,
    criterion: Criterion,
    inst: &Instance,
) -> Vec<TaskId> {
    let mut tasks: Vec<TaskId> = pending;
    tasks.sort_unstable();
    tasks.dedup();
    tasks.retain(|&t| sol.tech_of(t).is_none());

    let depot_single = stats_single(0, inst);
    loop {
        let mut best: Option<(f64, TaskId, TechId, usize, bool)> = None;
        for &task in &tasks {
            if sol.tech_of(task).is_some() {
                continue;
            }
            let single = stats_single(inst.task_node(task), inst);
            let pair = concat(&depot_single, &single, inst);
            let mut task_best: Option<(f64, TechId, usize, bool)> = None;
            let mut any_plain = false;
            for &tech in inst.compatible_technicians(task).unwrap() {
                let (p, dp) = scan_route(sol, tech, &single, &pair, criterion, inst);
                if p.is_some() && !any_plain {
                    // First plain candidate: depot candidates are out.
                    any_plain = true;
                    task_best = None;
                }
                let consider = |cand: Option<Cand>, with_depot: bool| {
                    cand.map(|c| (c.cost, tech, c.pos, with_depot))
                };
                let cand = if any_plain {
                    consider(p, false)
                } else {
                    consider(dp, true)
                };
                if let Some(c) = cand {
                    if task_best.map_or(true, |b| (c.0, c.1, c.2) < (b.0, b.1, b.2)) {
                        task_best = Some(c);
                    }
                }
            }
            if let Some((cost, tech, pos, wd)) = task_best {
                if best.map_or(true, |b| (cost, task, tech, pos) < (b.0, b.1, b.2, b.3)) {
                    best = Some((cost, task, tech, pos, wd));
                }
            }
        }
        match best {
            Some((_, task, tech, pos, with_depot)) => {
                let nodes: &[usize] = if with_depot {
                    &[0, inst.task_node(task)]
                } else {
                    &[inst.task_node(task)]
                };
                sol.route_mut(tech).apply_splice(pos, pos, nodes, inst);
                sol.mark_scheduled(task, tech);
            }
            None => break,
        }
    }
    tasks.retain(|&t| sol.tech_of(t).is_none());
    tasks
}

/// Block length for the sequence-related removal, growing with the
/// perturbation ceiling.
pub fn related_block_len(d_max: usize, d0: usize) -> usize {
    (3 + d_max.saturating_sub(d0) / 3).min(6)
}

/// One removal/repair round: draw a degree in `1..=d_max`, remove that
/// many tasks (with the requested heuristic, or one of the three uniformly
/// at random), then run cheapest insertion twice: first over the tasks
/// that were already unscheduled, then over the freshly removed ones.
pub fn removal_repair_perturbation<R: Rng>(
    sol: &mut Solution,
    d_max: usize,
    d0: usize,
    criterion: Criterion,
    kind: Option<RemovalKind>,
    inst: &Instance,
    rng: &mut R,
) {
    let mut cache = InsertionCache::new(inst, criterion);
    removal_repair_cached(sol, d_max, d0, criterion, kind, inst, rng, &mut cache)
}

/// [`removal_repair_perturbation`] with a caller-owned insertion cache, so
/// routes untouched by the removal keep their scan results across rounds.
#[allow(clippy::too_many_arguments)]
pub fn removal_repair_cached<R: Rng>(
    sol: &mut Solution,
    d_max: usize,
    d0: usize,
    criterion: Criterion,
    kind: Option<RemovalKind>,
    inst: &Instance,
    rng: &mut R,
    cache: &mut InsertionCache,
) {
    let pool_before = sol.unscheduled().to_vec();
    let d = rng.gen_range(1..=d_max.max(1));
    let kind = kind.unwrap_or_else(|| match rng.gen_range(0..3u8) {
        0 => RemovalKind::Random,
        1 => RemovalKind::Worst,
        _ => RemovalKind::SequenceRelated,
    });
    let removed = match kind {
        RemovalKind::Random => random_removal(sol, d, inst, rng),
        RemovalKind::Worst => worst_removal(sol, d, criterion, inst),
        RemovalKind::SequenceRelated => {
            sequence_related_removal(sol, d, related_block_len(d_max, d0), inst, rng)
        }
    };
    best_insertion_cached(sol, pool_before, criterion, inst, cache);
    best_insertion_cached(sol, removed, criterion, inst, cache);
}
