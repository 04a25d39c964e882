//! Local-search operators. Inter-route scans are pruned by nearest
//! time/space predecessor lists; every candidate is priced through the
//! scalar chain evaluation over cached segment summaries, so no operator
//! walks a route to cost a move. All operators apply the first improving
//! move found and rescan until none remains.

use smallvec::SmallVec;

use crate::construct::Criterion;
use crate::eval::{chain_resources_ok, SegmentStats, TimeAcc, IMPROVE_EPS};
use crate::model::{Instance, NodeId, TaskId, TechId};
use crate::route::Route;
use crate::solution::Solution;

type Parts<'a> = SmallVec<[&'a SegmentStats; 8]>;

/// Per-task nearest-predecessor lists: for task `i`, the tasks `j` that
/// are closest by `max(max(0, open_i - close_j), travel(j, i))` and can
/// legally precede `i` (serving `j` at its opening still reaches `i`
/// before its window closes). At most `chi` entries, closest first.
pub struct PredecessorLists {
    lists: Vec<Vec<TaskId>>,
}

impl PredecessorLists {
    #[inline]
    pub fn of(&self, task: TaskId) -> &[TaskId] {
        &self.lists[task]
    }
}

pub fn build_predecessors(inst: &Instance, chi: usize) -> PredecessorLists {
    let n = inst.n_tasks();
    let mut lists = Vec::with_capacity(n);
    for i in 0..n {
        let ti = &inst.tasks[i];
        let mut cands: Vec<(f64, TaskId)> = Vec::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let tj = &inst.tasks[j];
            let t_ji = inst.travel(tj.node, ti.node);
            if tj.tw_open + tj.service_time + t_ji > ti.tw_close {
                continue; // j can never directly precede i
            }
            let d = (ti.tw_open - tj.tw_close).max(0.0).max(t_ji);
            cands.push((d, j));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.truncate(chi);
        lists.push(cands.into_iter().map(|(_, j)| j).collect());
    }
    PredecessorLists { lists }
}

/// How often each task took part in an applied move; drives the
/// deterministic part of the local-search perturbation.
pub struct MoveCounters {
    counts: Vec<u32>,
}

impl MoveCounters {
    pub fn new(n_tasks: usize) -> Self {
        MoveCounters { counts: vec![0; n_tasks] }
    }

    #[inline]
    pub fn bump(&mut self, task: TaskId) {
        self.counts[task] += 1;
    }

    #[inline]
    pub fn get(&self, task: TaskId) -> u32 {
        self.counts[task]
    }

    /// Tasks ordered by count non-increasing, ties by id.
    pub fn order_desc(&self) -> Vec<TaskId> {
        let mut order: Vec<TaskId> = (0..self.counts.len()).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        order
    }
}

/// One applied or candidate inter-route sequence swap: `a` visits starting
/// at `pos_a` on route `tech_a` trade places with `k` visits starting at
/// `pos_b` on route `tech_b`.
#[derive(Debug, Clone, Copy)]
pub struct SwapSeqMove {
    pub tech_a: TechId,
    pub pos_a: usize,
    pub a: usize,
    pub tech_b: TechId,
    pub pos_b: usize,
    pub k: usize,
    pub delta: f64,
}

pub struct LocalSearch<'a> {
    inst: &'a Instance,
    preds: &'a PredecessorLists,
}

impl<'a> LocalSearch<'a> {
    pub fn new(inst: &'a Instance, preds: &'a PredecessorLists) -> Self {
        LocalSearch { inst, preds }
    }

    /// Duration/travel delta of rebuilding `route` as the given chain, or
    /// `None` when the chain is infeasible for the route's technician.
    fn chain_delta(&self, route: &Route, parts: &[&SegmentStats]) -> Option<(f64, f64)> {
        let mut acc = TimeAcc::empty();
        for p in parts {
            acc.push(p, self.inst);
            if !acc.tw_feasible {
                return None;
            }
        }
        if chain_resources_ok(parts, &self.inst.technicians[route.tech]).is_err() {
            return None;
        }
        Some((acc.duration() - route.duration(), acc.travel - route.travel_cost()))
    }

    fn pos_of(&self, sol: &Solution, task: TaskId) -> Option<(TechId, usize)> {
        sol.position_of(task, self.inst)
    }

    /// Drives a per-anchor first-improvement step cyclically: stays on an
    /// anchor while it keeps improving, stops after a full clean cycle.
    /// Reaches the same fixed points as restarting the scan from the top
    /// after every applied move, without paying a full sweep per move.
    fn cyclic_improve(
        &self,
        sol: &mut Solution,
        n_anchors: usize,
        mut step: impl FnMut(&Self, &mut Solution, usize) -> bool,
    ) -> bool {
        if n_anchors == 0 {
            return false;
        }
        let mut improved = false;
        let mut misses = 0;
        let mut at = 0;
        while misses < n_anchors {
            if step(self, sol, at) {
                improved = true;
                misses = 0;
            } else {
                misses += 1;
                at += 1;
                if at == n_anchors {
                    at = 0;
                }
            }
        }
        improved
    }

    // -- tail exchange -----------------------------------------------------

    /// 2-opt*: for a task `j` and a near predecessor `p` on another route,
    /// swaps the route tails so that `j` directly follows `p`.
    pub fn two_opt_star(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, self.inst.n_tasks(), |ls, sol, j| {
            ls.two_opt_star_at(sol, counters, criterion, j)
        })
    }

    fn two_opt_star_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        j: TaskId,
    ) -> bool {
        // Tail summaries are maintained lazily; refresh the stale ones
        // before scanning (content is unchanged, so shared routes are only
        // cloned when a splice actually dirtied them).
        for t in 0..sol.n_routes() {
            if !sol.route(t).body_valid() {
                sol.route_mut(t).ensure_body(self.inst);
            }
        }
        {
            let Some((r1, pj)) = self.pos_of(sol, j) else { return false };
            for &p in self.preds.of(j) {
                let Some((r2, pp)) = self.pos_of(sol, p) else { continue };
                if r2 == r1 {
                    continue;
                }
                let ra = sol.route(r1);
                let rb = sol.route(r2);
                // A tail swap may not duplicate the replenishment stop.
                if ra.prefix(pj - 1).depot_visited && rb.suffix_body(pp + 1).depot_visited {
                    continue;
                }
                if rb.prefix(pp).depot_visited && ra.suffix_body(pj).depot_visited {
                    continue;
                }
                let home_a = ra.single(ra.len() - 1);
                let home_b = rb.single(rb.len() - 1);
                let Some((dd_a, dt_a)) =
                    self.chain_delta(ra, &[ra.prefix(pj - 1), rb.suffix_body(pp + 1), home_a])
                else {
                    continue;
                };
                let Some((dd_b, dt_b)) =
                    self.chain_delta(rb, &[rb.prefix(pp), ra.suffix_body(pj), home_b])
                else {
                    continue;
                };
                if criterion.pick(dd_a + dd_b, dt_a + dt_b) < -IMPROVE_EPS {
                    let tail_a: Vec<NodeId> = ra.visits()[pj..ra.len() - 1].to_vec();
                    let tail_b: Vec<NodeId> = rb.visits()[pp + 1..rb.len() - 1].to_vec();
                    for t in tail_a.iter().chain(&tail_b) {
                        if let Some(task) = self.inst.task_at(*t) {
                            counters.bump(task);
                        }
                    }
                    let end_a = sol.route(r1).len() - 1;
                    sol.route_mut(r1).apply_splice(pj, end_a, &tail_b, self.inst);
                    let end_b = sol.route(r2).len() - 1;
                    sol.route_mut(r2).apply_splice(pp + 1, end_b, &tail_a, self.inst);
                    sol.reindex_route(r1, self.inst);
                    sol.reindex_route(r2, self.inst);
                    return true;
                }
            }
        }
        false
    }

    // -- relocations and segment/task swaps ---------------------------------

    /// Relocates or exchanges segments of one or two visits between routes:
    /// variants (1,0), (2,0), (1,1), (2,1), plus the reversed-segment forms
    /// of the two-visit ones, plus relocations into empty routes.
    pub fn swap_relocate(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, self.inst.n_tasks(), |ls, sol, j| {
            ls.swap_relocate_at(sol, counters, criterion, j)
        })
    }

    fn swap_relocate_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        j: TaskId,
    ) -> bool {
        let inst = self.inst;
        {
            let Some((r1, pj)) = self.pos_of(sol, j) else { return false };
            let has_second = {
                let ra = sol.route(r1);
                pj + 1 < ra.len() - 1 && inst.task_at(ra.visits()[pj + 1]).is_some()
            };
            // (length, reversed)
            let variants: &[(usize, bool)] =
                if has_second { &[(1, false), (2, false), (2, true)] } else { &[(1, false)] };

            for &(len, rev) in variants {
                // Relocation after a near predecessor, or exchange with it.
                for &p in self.preds.of(j) {
                    let Some((r2, pp)) = self.pos_of(sol, p) else { continue };
                    if r2 == r1 {
                        continue;
                    }
                    if self.try_relocate(sol, counters, criterion, r1, pj, len, rev, r2, pp + 1) {
                        return true;
                    }
                    if self.try_swap_with(sol, counters, criterion, r1, pj, len, rev, r2, pp) {
                        return true;
                    }
                }
                // Relocation into an empty route.
                for r2 in 0..sol.n_routes() {
                    if r2 == r1 || !sol.route(r2).is_empty() {
                        continue;
                    }
                    if self.try_relocate(sol, counters, criterion, r1, pj, len, rev, r2, 1) {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn seg_parts<'b>(
        &self,
        sol: &'b Solution,
        tech: TechId,
        pos: usize,
        len: usize,
        rev: bool,
    ) -> Parts<'b> {
        let r = sol.route(tech);
        let mut v: Parts = SmallVec::new();
        if rev {
            for i in (pos..pos + len).rev() {
                v.push(r.single(i));
            }
        } else {
            for i in pos..pos + len {
                v.push(r.single(i));
            }
        }
        v
    }

    #[allow(clippy::too_many_arguments)]
    fn try_relocate(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        r1: TechId,
        pj: usize,
        len: usize,
        rev: bool,
        r2: TechId,
        at: usize,
    ) -> bool {
        let inst = self.inst;
        let seg = self.seg_parts(sol, r1, pj, len, rev);
        let Some((dd_a, dt_a)) = sol.route(r1).eval_splice_fast(pj, pj + len, &[], inst) else {
            return false;
        };
        let Some((dd_b, dt_b)) = sol.route(r2).eval_splice_fast(at, at, &seg, inst) else {
            return false;
        };
        if criterion.pick(dd_a + dd_b, dt_a + dt_b) >= -IMPROVE_EPS {
            return false;
        }
        drop(seg);
        let mut nodes: Vec<NodeId> = sol.route(r1).visits()[pj..pj + len].to_vec();
        if rev {
            nodes.reverse();
        }
        for &n in &nodes {
            counters.bump(inst.task_at(n).unwrap());
        }
        sol.route_mut(r2).apply_splice(at, at, &nodes, inst);
        sol.route_mut(r1).apply_splice(pj, pj + len, &[], inst);
        sol.route_mut(r1).drop_depot_if_redundant(inst);
        sol.reindex_route(r1, inst);
        sol.reindex_route(r2, inst);
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn try_swap_with(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        r1: TechId,
        pj: usize,
        len: usize,
        rev: bool,
        r2: TechId,
        pp: usize,
    ) -> bool {
        let inst = self.inst;
        let seg = self.seg_parts(sol, r1, pj, len, rev);
        let single_p: Parts = self.seg_parts(sol, r2, pp, 1, false);
        let Some((dd_a, dt_a)) = sol.route(r1).eval_splice_fast(pj, pj + len, &single_p, inst)
        else {
            return false;
        };
        let Some((dd_b, dt_b)) = sol.route(r2).eval_splice_fast(pp, pp + 1, &seg, inst) else {
            return false;
        };
        if criterion.pick(dd_a + dd_b, dt_a + dt_b) >= -IMPROVE_EPS {
            return false;
        }
        drop(seg);
        drop(single_p);
        let node_p = sol.route(r2).visits()[pp];
        let mut nodes: Vec<NodeId> = sol.route(r1).visits()[pj..pj + len].to_vec();
        if rev {
            nodes.reverse();
        }
        for &n in &nodes {
            counters.bump(inst.task_at(n).unwrap());
        }
        counters.bump(inst.task_at(node_p).unwrap());
        sol.route_mut(r2).apply_splice(pp, pp + 1, &nodes, inst);
        sol.route_mut(r1).apply_splice(pj, pj + len, &[node_p], inst);
        sol.reindex_route(r1, inst);
        sol.reindex_route(r2, inst);
        true
    }

    // -- inter-route sequence swap ------------------------------------------

    /// Exchanges a sequence of `a` visits starting at a task with a
    /// sequence of `k` visits following a near predecessor on another
    /// route; no reversal.
    pub fn swap_sequence(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        combos: &[(usize, usize)],
    ) -> bool {
        self.cyclic_improve(sol, self.inst.n_tasks(), |ls, sol, j| {
            match ls.first_improving_swap_seq(sol, j, combos, criterion) {
                Some(m) => {
                    ls.apply_swap_sequence(sol, counters, &m);
                    true
                }
                None => false,
            }
        })
    }

    fn first_improving_swap_seq(
        &self,
        sol: &Solution,
        j: TaskId,
        combos: &[(usize, usize)],
        criterion: Criterion,
    ) -> Option<SwapSeqMove> {
        self.swap_seq_candidates(sol, j, combos, criterion, &mut |m| m.delta < -IMPROVE_EPS)
    }

    /// Walks the swap-sequence neighborhood of task `j`; returns the first
    /// candidate accepted by `take`, or feeds every feasible candidate to
    /// `take` when it keeps returning false.
    pub fn swap_seq_candidates(
        &self,
        sol: &Solution,
        j: TaskId,
        combos: &[(usize, usize)],
        criterion: Criterion,
        take: &mut dyn FnMut(&SwapSeqMove) -> bool,
    ) -> Option<SwapSeqMove> {
        let inst = self.inst;
        let (r1, pj) = self.pos_of(sol, j)?;
        let ra = sol.route(r1);
        for &(a, k) in combos {
            if pj + a > ra.len() - 1 {
                continue;
            }
            if ra.visits()[pj..pj + a].iter().any(|&v| inst.task_at(v).is_none()) {
                continue;
            }
            let seg_a = self.seg_parts(sol, r1, pj, a, false);
            for &p in self.preds.of(j) {
                let Some((r2, pp)) = self.pos_of(sol, p) else { continue };
                if r2 == r1 {
                    continue;
                }
                let rb = sol.route(r2);
                let start_b = pp + 1;
                if start_b + k > rb.len() - 1 {
                    continue;
                }
                if rb.visits()[start_b..start_b + k].iter().any(|&v| inst.task_at(v).is_none()) {
                    continue;
                }
                let seg_b = self.seg_parts(sol, r2, start_b, k, false);
                let Some((dd_a, dt_a)) = ra.eval_splice_fast(pj, pj + a, &seg_b, inst) else {
                    continue;
                };
                let Some((dd_b, dt_b)) = rb.eval_splice_fast(start_b, start_b + k, &seg_a, inst)
                else {
                    continue;
                };
                let m = SwapSeqMove {
                    tech_a: r1,
                    pos_a: pj,
                    a,
                    tech_b: r2,
                    pos_b: start_b,
                    k,
                    delta: criterion.pick(dd_a + dd_b, dt_a + dt_b),
                };
                if take(&m) {
                    return Some(m);
                }
            }
        }
        None
    }

    pub fn apply_swap_sequence(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        m: &SwapSeqMove,
    ) {
        let inst = self.inst;
        let seg_a: Vec<NodeId> = sol.route(m.tech_a).visits()[m.pos_a..m.pos_a + m.a].to_vec();
        let seg_b: Vec<NodeId> = sol.route(m.tech_b).visits()[m.pos_b..m.pos_b + m.k].to_vec();
        for &n in seg_a.iter().chain(&seg_b) {
            counters.bump(inst.task_at(n).unwrap());
        }
        sol.route_mut(m.tech_a).apply_splice(m.pos_a, m.pos_a + m.a, &seg_b, inst);
        sol.route_mut(m.tech_b).apply_splice(m.pos_b, m.pos_b + m.k, &seg_a, inst);
        sol.reindex_route(m.tech_a, inst);
        sol.reindex_route(m.tech_b, inst);
    }

    // -- intra-route operators ----------------------------------------------

    /// Swaps two task visits inside one route.
    pub fn exchange1(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, sol.n_routes(), |ls, sol, k| {
            ls.exchange1_at(sol, counters, criterion, k)
        })
    }

    fn exchange1_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        k: TechId,
    ) -> bool {
        let inst = self.inst;
        {
            let r = sol.route(k);
            let len = r.len();
            for i in 1..len.saturating_sub(2) {
                if inst.task_at(r.visits()[i]).is_none() {
                    continue;
                }
                for j in i + 1..len - 1 {
                    if inst.task_at(r.visits()[j]).is_none() {
                        continue;
                    }
                    let mut parts: Parts = SmallVec::new();
                    parts.push(r.single(j));
                    for m in i + 1..j {
                        parts.push(r.single(m));
                    }
                    parts.push(r.single(i));
                    let Some((dd, dt)) = r.eval_splice_fast(i, j + 1, &parts, inst) else {
                        continue;
                    };
                    if criterion.pick(dd, dt) < -IMPROVE_EPS {
                        let (vi, vj) = (r.visits()[i], r.visits()[j]);
                        counters.bump(inst.task_at(vi).unwrap());
                        counters.bump(inst.task_at(vj).unwrap());
                        let mut nodes: Vec<NodeId> = r.visits()[i..j + 1].to_vec();
                        let last = nodes.len() - 1;
                        nodes.swap(0, last);
                        drop(parts);
                        sol.route_mut(k).apply_splice(i, j + 1, &nodes, inst);
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Moves one visit to another position in its route. This is the only
    /// operator allowed to move the replenishment stop; when it does, the
    /// stop is dropped again if it became redundant.
    pub fn shift1(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, sol.n_routes(), |ls, sol, k| {
            ls.shift1_at(sol, counters, criterion, k)
        })
    }

    fn shift1_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        k: TechId,
    ) -> bool {
        let inst = self.inst;
        {
            let r = sol.route(k);
            let len = r.len();
            for i in 1..len - 1 {
                for t in 1..len - 1 {
                    if t == i || t == i + 1 {
                        continue;
                    }
                    let (start, end) = if t < i { (t, i + 1) } else { (i, t) };
                    let mut parts: Parts = SmallVec::new();
                    if t < i {
                        parts.push(r.single(i));
                        for m in t..i {
                            parts.push(r.single(m));
                        }
                    } else {
                        for m in i + 1..t {
                            parts.push(r.single(m));
                        }
                        parts.push(r.single(i));
                    }
                    let Some((dd, dt)) = r.eval_splice_fast(start, end, &parts, inst) else {
                        continue;
                    };
                    if criterion.pick(dd, dt) < -IMPROVE_EPS {
                        let v = r.visits()[i];
                        let mut nodes: Vec<NodeId> = Vec::with_capacity(end - start);
                        if t < i {
                            nodes.push(v);
                            nodes.extend_from_slice(&r.visits()[t..i]);
                        } else {
                            nodes.extend_from_slice(&r.visits()[i + 1..t]);
                            nodes.push(v);
                        }
                        drop(parts);
                        sol.route_mut(k).apply_splice(start, end, &nodes, inst);
                        if let Some(task) = inst.task_at(v) {
                            counters.bump(task);
                        } else {
                            // The replenishment stop moved: re-check that
                            // it still gates something.
                            sol.route_mut(k).drop_depot_if_redundant(inst);
                        }
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Moves a block of two or three consecutive task visits to another
    /// position in the same route.
    pub fn r_opt(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, sol.n_routes(), |ls, sol, k| {
            ls.r_opt_at(sol, counters, criterion, k)
        })
    }

    fn r_opt_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        k: TechId,
    ) -> bool {
        let inst = self.inst;
        {
            let r = sol.route(k);
            let len = r.len();
            for block in [2usize, 3] {
                for i in 1..len.saturating_sub(block) {
                    if r.visits()[i..i + block].iter().any(|&v| inst.task_at(v).is_none()) {
                        continue;
                    }
                    for t in 1..len - 1 {
                        if t >= i && t <= i + block {
                            continue;
                        }
                        let (start, end) = if t < i { (t, i + block) } else { (i, t) };
                        let mut parts: Parts = SmallVec::new();
                        if t < i {
                            for m in i..i + block {
                                parts.push(r.single(m));
                            }
                            for m in t..i {
                                parts.push(r.single(m));
                            }
                        } else {
                            for m in i + block..t {
                                parts.push(r.single(m));
                            }
                            for m in i..i + block {
                                parts.push(r.single(m));
                            }
                        }
                        let Some((dd, dt)) = r.eval_splice_fast(start, end, &parts, inst) else {
                            continue;
                        };
                        if criterion.pick(dd, dt) < -IMPROVE_EPS {
                            let blk: Vec<NodeId> = r.visits()[i..i + block].to_vec();
                            for &n in &blk {
                                counters.bump(inst.task_at(n).unwrap());
                            }
                            let mut nodes: Vec<NodeId> = Vec::with_capacity(end - start);
                            if t < i {
                                nodes.extend_from_slice(&blk);
                                nodes.extend_from_slice(&r.visits()[t..i]);
                            } else {
                                nodes.extend_from_slice(&r.visits()[i + block..t]);
                                nodes.extend_from_slice(&blk);
                            }
                            drop(parts);
                            sol.route_mut(k).apply_splice(start, end, &nodes, inst);
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Classic 2-opt: reverses a stretch of consecutive task visits.
    /// Stretches containing the replenishment stop are skipped, since
    /// reversal would change which tasks it covers.
    pub fn two_opt(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
    ) -> bool {
        self.cyclic_improve(sol, sol.n_routes(), |ls, sol, k| {
            ls.two_opt_at(sol, counters, criterion, k)
        })
    }

    fn two_opt_at(
        &self,
        sol: &mut Solution,
        counters: &mut MoveCounters,
        criterion: Criterion,
        k: TechId,
    ) -> bool {
        let inst = self.inst;
        {
            let r = sol.route(k);
            let len = r.len();
            for i in 1..len.saturating_sub(2) {
                if inst.task_at(r.visits()[i]).is_none() {
                    continue;
                }
                for j in i + 1..len - 1 {
                    if inst.task_at(r.visits()[j]).is_none() {
                        break; // the stretch would contain the depot
                    }
                    let mut parts: Parts = SmallVec::new();
                    for m in (i..=j).rev() {
                        parts.push(r.single(m));
                    }
                    let Some((dd, dt)) = r.eval_splice_fast(i, j + 1, &parts, inst) else {
                        continue;
                    };
                    if criterion.pick(dd, dt) < -IMPROVE_EPS {
                        let mut nodes: Vec<NodeId> = r.visits()[i..j + 1].to_vec();
                        nodes.reverse();
                        for &n in &nodes {
                            counters.bump(inst.task_at(n).unwrap());
                        }
                        drop(parts);
                        sol.route_mut(k).apply_splice(i, j + 1, &nodes, inst);
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::audit_solution;
    use crate::construct::best_insertion;
    use crate::io::generator::{derive_trsp, GeneratorConfig};
    use crate::io::solomon::synth_solomon;

    fn setup(n: usize, seed: u64) -> (Instance, Solution) {
        let base = synth_solomon("R101", n, seed).unwrap();
        let inst = derive_trsp(
            &base,
            &GeneratorConfig { seed, n_depots: 5, ..GeneratorConfig::default() },
        )
        .unwrap();
        let mut sol = Solution::empty(&inst);
        best_insertion(&mut sol, (0..inst.n_tasks()).collect(), Criterion::Duration, &inst);
        (inst, sol)
    }

    fn check(inst: &Instance, sol: &Solution) {
        sol.check_invariants(inst).unwrap();
        let audit = audit_solution(sol, inst).unwrap();
        assert!((audit.duration - sol.total_duration()).abs() < 1e-6);
    }

    #[test]
    fn predecessor_lists_are_legal_and_bounded() {
        let (inst, _) = setup(30, 1);
        let preds = build_predecessors(&inst, 7);
        for i in 0..inst.n_tasks() {
            let l = preds.of(i);
            assert!(l.len() <= 7);
            for &j in l {
                assert_ne!(i, j);
                let tj = &inst.tasks[j];
                let reach = tj.tw_open + tj.service_time + inst.travel(tj.node, inst.tasks[i].node);
                assert!(reach <= inst.tasks[i].tw_close);
            }
        }
    }

    #[test]
    fn every_operator_only_improves_and_stays_feasible() {
        let (inst, sol0) = setup(35, 3);
        let preds = build_predecessors(&inst, 30);
        let ls = LocalSearch::new(&inst, &preds);
        type Op = fn(&LocalSearch, &mut Solution, &mut MoveCounters, Criterion) -> bool;
        let ops: Vec<(&str, Op)> = vec![
            ("two_opt_star", |l, s, c, cr| l.two_opt_star(s, c, cr)),
            ("swap_relocate", |l, s, c, cr| l.swap_relocate(s, c, cr)),
            ("exchange1", |l, s, c, cr| l.exchange1(s, c, cr)),
            ("shift1", |l, s, c, cr| l.shift1(s, c, cr)),
            ("r_opt", |l, s, c, cr| l.r_opt(s, c, cr)),
            ("two_opt", |l, s, c, cr| l.two_opt(s, c, cr)),
            ("swap_sequence", |l, s, c, cr| {
                l.swap_sequence(s, c, cr, &[(3, 1), (3, 2), (3, 3)])
            }),
        ];
        for (name, op) in ops {
            let mut sol = sol0.clone();
            let mut counters = MoveCounters::new(inst.n_tasks());
            let before = sol.total_duration();
            let improved = op(&ls, &mut sol, &mut counters, Criterion::Duration);
            check(&inst, &sol);
            if improved {
                assert!(
                    sol.total_duration() < before - IMPROVE_EPS,
                    "{name} claimed improvement without one"
                );
                assert!((0..inst.n_tasks()).any(|t| counters.get(t) > 0), "{name}");
            } else {
                assert_eq!(sol.total_duration(), before, "{name}");
            }
        }
    }

    #[test]
    fn operators_reach_a_joint_fixed_point() {
        let (inst, mut sol) = setup(25, 9);
        let preds = build_predecessors(&inst, 30);
        let ls = LocalSearch::new(&inst, &preds);
        let mut counters = MoveCounters::new(inst.n_tasks());
        loop {
            let mut any = false;
            any |= ls.shift1(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.exchange1(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.two_opt_star(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.two_opt(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.r_opt(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.swap_relocate(&mut sol, &mut counters, Criterion::Duration);
            any |= ls.swap_sequence(&mut sol, &mut counters, Criterion::Duration, &[(3, 1), (3, 2), (3, 3)]);
            if !any {
                break;
            }
        }
        check(&inst, &sol);
        // At the fixed point no operator may still find a move.
        assert!(!ls.shift1(&mut sol, &mut counters, Criterion::Duration));
        assert!(!ls.two_opt(&mut sol, &mut counters, Criterion::Duration));
    }

    #[test]
    fn crossed_tails_get_uncrossed() {
        // Two technicians, two tasks placed on the wrong sides: their home
        // depots sit at x=0 and x=60, the tasks at x=50 and x=10. Serving
        // the far task costs each route twice the extra distance, so the
        // tail swap strictly reduces total duration.
        use crate::model::{DistanceRounding, ResourceCounts, Task, Technician};
        let mk_task = |id: usize, node: usize| Task {
            id,
            node,
            service_time: 1.0,
            tw_open: 0.0,
            tw_close: 2000.0,
            part_demand: vec![],
            tool_need: vec![],
            skill_need: vec![],
        };
        let mk_tech = |id: usize, node: usize| Technician {
            id,
            home_depot: node,
            part_inventory: vec![],
            tool_onboard: vec![],
            skill_has: vec![],
            depot_tw: (0.0, 2000.0),
        };
        let inst = Instance::from_coords(
            "crossed".into(),
            vec![mk_task(0, 3), mk_task(1, 4)],
            vec![mk_tech(0, 1), mk_tech(1, 2)],
            0.0,
            (0.0, 2000.0),
            vec![(30.0, 40.0), (0.0, 0.0), (60.0, 0.0), (50.0, 0.0), (10.0, 0.0)],
            DistanceRounding::None,
            ResourceCounts { tools: 0, parts: 0, skills: 0 },
        )
        .unwrap();
        let mut sol = Solution::empty(&inst);
        *sol.route_mut(0) = Route::with_visits(0, vec![1, 3, 1], &inst);
        *sol.route_mut(1) = Route::with_visits(1, vec![2, 4, 2], &inst);
        sol.mark_scheduled(0, 0);
        sol.mark_scheduled(1, 1);
        let before = sol.total_duration();
        assert!((before - 202.0).abs() < 1e-9);

        let preds = build_predecessors(&inst, 30);
        let ls = LocalSearch::new(&inst, &preds);
        let mut counters = MoveCounters::new(2);
        assert!(ls.two_opt_star(&mut sol, &mut counters, Criterion::Duration));
        check(&inst, &sol);
        assert!(sol.total_duration() < before - IMPROVE_EPS);
        // Together with the relocation operator the crossing resolves
        // fully: each technician serves the task nearest its home.
        while ls.swap_relocate(&mut sol, &mut counters, Criterion::Duration)
            || ls.two_opt_star(&mut sol, &mut counters, Criterion::Duration)
        {}
        check(&inst, &sol);
        assert!((sol.total_duration() - 42.0).abs() < 1e-9);
        assert_eq!(sol.tech_of(0), Some(1));
        assert_eq!(sol.tech_of(1), Some(0));
    }

    #[test]
    fn counter_order_is_stable() {
        let mut c = MoveCounters::new(4);
        c.bump(2);
        c.bump(2);
        c.bump(0);
        assert_eq!(c.order_desc(), vec![2, 0, 1, 3]);
    }
}
