//! One technician's route: the visit sequence plus cached per-position
//! segment summaries, giving O(1) evaluation of splice-style moves.

use smallvec::SmallVec;

use crate::eval::{
    chain_resources_ok, concat, concat_into, feasible_for, stats_single, SegmentStats, TimeAcc,
    Verdict,
};
use crate::model::{Instance, NodeId, TaskId, TechId};

/// Outcome of evaluating a candidate splice on a route.
#[derive(Debug, Clone)]
pub struct SpliceEval {
    /// Summary of the whole route after the splice.
    pub stats: SegmentStats,
    pub d_duration: f64,
    pub d_travel: f64,
}

impl SpliceEval {
    #[inline]
    pub fn delta(&self, by_travel: bool) -> f64 {
        if by_travel {
            self.d_travel
        } else {
            self.d_duration
        }
    }
}

/// Fresh content-version ticket. Two routes with the same version are
/// guaranteed to have identical content (the converse does not hold);
/// candidate caches use this to skip rescans of untouched routes.
fn next_version() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    // Starts at 1 so a zeroed cache entry never matches.
    static TICKET: AtomicU64 = AtomicU64::new(1);
    TICKET.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone)]
pub struct Route {
    pub tech: TechId,
    /// Visit sequence; starts and ends at the technician's home depot and
    /// contains the central depot at most once.
    visits: Vec<NodeId>,
    /// `prefix[i]` summarizes `visits[0..=i]`.
    prefix: Vec<SegmentStats>,
    /// `suffix[i]` summarizes `visits[i..]` (through the final home depot).
    suffix: Vec<SegmentStats>,
    /// `suffix_body[i]` summarizes `visits[i..len-1]` (final home excluded).
    /// Maintained lazily: splices invalidate it and only the tail-exchange
    /// scans pay for the recompute, via [`Route::ensure_body`].
    suffix_body: Vec<SegmentStats>,
    body_valid: bool,
    singles: Vec<SegmentStats>,
    version: u64,
}

// Version tickets are identity bookkeeping, not content; equality is the
// visit sequence (the caches are a pure function of it).
impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.tech == other.tech && self.visits == other.visits
    }
}

impl Route {
    pub fn new(tech: TechId, inst: &Instance) -> Self {
        let home = inst.technicians[tech].home_depot;
        let mut r = Route {
            tech,
            visits: vec![home, home],
            prefix: Vec::new(),
            suffix: Vec::new(),
            suffix_body: Vec::new(),
            body_valid: false,
            singles: Vec::new(),
            version: next_version(),
        };
        r.rebuild(inst);
        r
    }

    pub fn with_visits(tech: TechId, visits: Vec<NodeId>, inst: &Instance) -> Self {
        let mut r = Route {
            tech,
            visits,
            prefix: Vec::new(),
            suffix: Vec::new(),
            suffix_body: Vec::new(),
            body_valid: false,
            singles: Vec::new(),
            version: next_version(),
        };
        r.rebuild(inst);
        r
    }

    /// Content-version ticket; changes whenever the visit list changes.
    #[inline]
    pub fn version(&self) -> u64 {
        self.version
    }

    #[inline]
    pub fn visits(&self) -> &[NodeId] {
        &self.visits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.visits.len()
    }

    /// True when the route serves no visit between the two home-depot stops.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.visits.len() == 2
    }

    /// Summary of the full route.
    #[inline]
    pub fn full(&self) -> &SegmentStats {
        self.prefix.last().expect("route always has visits")
    }

    #[inline]
    pub fn duration(&self) -> f64 {
        self.full().duration()
    }

    #[inline]
    pub fn travel_cost(&self) -> f64 {
        self.full().travel
    }

    #[inline]
    pub fn prefix(&self, i: usize) -> &SegmentStats {
        &self.prefix[i]
    }

    #[inline]
    pub fn suffix(&self, i: usize) -> &SegmentStats {
        &self.suffix[i]
    }

    #[inline]
    pub fn suffix_body(&self, i: usize) -> &SegmentStats {
        debug_assert!(self.body_valid, "suffix_body read before ensure_body");
        &self.suffix_body[i]
    }

    #[inline]
    pub fn body_valid(&self) -> bool {
        self.body_valid
    }

    /// Recomputes `suffix_body` if a splice has invalidated it. Content is
    /// unchanged, so the version ticket stays.
    pub fn ensure_body(&mut self, inst: &Instance) {
        if self.body_valid {
            return;
        }
        let n = self.visits.len();
        self.suffix_body.clear();
        self.suffix_body.resize(n, SegmentStats::empty(inst));
        for i in (0..n - 1).rev() {
            let (head, tail) = self.suffix_body.split_at_mut(i + 1);
            concat_into(&self.singles[i], &tail[0], inst, &mut head[i]);
        }
        self.body_valid = true;
    }

    #[inline]
    pub fn single(&self, i: usize) -> &SegmentStats {
        &self.singles[i]
    }

    /// Position of the central depot in the visit list, if present.
    pub fn depot_pos(&self) -> Option<usize> {
        self.visits.iter().position(|&v| v == 0)
    }

    pub fn task_ids<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = TaskId> + 'a {
        self.visits.iter().filter_map(|&v| inst.task_at(v))
    }

    /// Number of scheduled tasks on the route.
    pub fn n_tasks(&self) -> usize {
        self.visits.len() - 2 - usize::from(self.depot_pos().is_some())
    }

    /// Recomputes all cached summaries from the visit list.
    pub fn rebuild(&mut self, inst: &Instance) {
        let n = self.visits.len();
        self.singles.clear();
        self.singles
            .extend(self.visits.iter().map(|&v| stats_single(v, inst)));

        self.prefix.clear();
        self.prefix.resize(n, SegmentStats::empty(inst));
        self.prefix[0] = self.singles[0].clone();
        for i in 1..n {
            let (head, tail) = self.prefix.split_at_mut(i);
            concat_into(&head[i - 1], &self.singles[i], inst, &mut tail[0]);
        }

        self.suffix.clear();
        self.suffix.resize(n, SegmentStats::empty(inst));
        self.suffix[n - 1] = self.singles[n - 1].clone();
        for i in (0..n - 1).rev() {
            let (head, tail) = self.suffix.split_at_mut(i + 1);
            concat_into(&self.singles[i], &tail[0], inst, &mut head[i]);
        }

        self.suffix_body.clear();
        self.suffix_body.resize(n, SegmentStats::empty(inst));
        for i in (0..n - 1).rev() {
            let (head, tail) = self.suffix_body.split_at_mut(i + 1);
            concat_into(&self.singles[i], &tail[0], inst, &mut head[i]);
        }
        self.body_valid = true;
    }

    /// Evaluates replacing `visits[start..end]` by `replacement` in O(1).
    /// Requires `1 <= start`, `start <= end`, `end <= len - 1`.
    pub fn eval_splice(
        &self,
        start: usize,
        end: usize,
        replacement: &SegmentStats,
        inst: &Instance,
    ) -> SpliceEval {
        debug_assert!(start >= 1 && start <= end && end <= self.visits.len() - 1);
        let head = concat(&self.prefix[start - 1], replacement, inst);
        let stats = concat(&head, &self.suffix[end], inst);
        SpliceEval {
            d_duration: stats.duration() - self.duration(),
            d_travel: stats.travel - self.travel_cost(),
            stats,
        }
    }

    /// Scalar-path version of [`Route::eval_splice`]: prices replacing
    /// `visits[start..end]` by the chained `repl` summaries without
    /// building an intermediate summary, and folds the technician
    /// feasibility check in. Returns `(d_duration, d_travel)` for
    /// feasible splices, `None` otherwise. Matches `eval_splice` plus
    /// `splice_verdict` exactly.
    pub fn eval_splice_fast(
        &self,
        start: usize,
        end: usize,
        repl: &[&SegmentStats],
        inst: &Instance,
    ) -> Option<(f64, f64)> {
        let deltas = self.eval_splice_time(start, end, repl, inst)?;
        let mut parts: SmallVec<[&SegmentStats; 8]> = SmallVec::new();
        parts.push(&self.prefix[start - 1]);
        parts.extend(repl.iter().copied());
        parts.push(&self.suffix[end]);
        if chain_resources_ok(&parts, &inst.technicians[self.tech]).is_err() {
            return None;
        }
        Some(deltas)
    }

    /// Time-window half of [`Route::eval_splice_fast`]: prices the splice
    /// and checks schedule feasibility only. The caller is responsible for
    /// the technician resource check.
    pub fn eval_splice_time(
        &self,
        start: usize,
        end: usize,
        repl: &[&SegmentStats],
        inst: &Instance,
    ) -> Option<(f64, f64)> {
        debug_assert!(start >= 1 && start <= end && end <= self.visits.len() - 1);
        let mut acc = TimeAcc::start(&self.prefix[start - 1]);
        for part in repl {
            acc.push(part, inst);
            if !acc.tw_feasible {
                return None;
            }
        }
        acc.push(&self.suffix[end], inst);
        if !acc.tw_feasible {
            return None;
        }
        Some((
            acc.duration() - self.duration(),
            acc.travel - self.travel_cost(),
        ))
    }

    /// Evaluates inserting a single task before `visits[pos]`.
    pub fn eval_insertion(&self, pos: usize, task: TaskId, inst: &Instance) -> SpliceEval {
        self.eval_splice(pos, pos, &stats_single(inst.task_node(task), inst), inst)
    }

    /// Evaluates inserting `[central depot, task]` before `visits[pos]`.
    pub fn eval_insertion_with_depot(
        &self,
        pos: usize,
        task: TaskId,
        inst: &Instance,
    ) -> SpliceEval {
        let repl = concat(
            &stats_single(0, inst),
            &stats_single(inst.task_node(task), inst),
            inst,
        );
        self.eval_splice(pos, pos, &repl, inst)
    }

    /// Whether the central depot appears outside `visits[start..end]`.
    pub fn depot_outside(&self, start: usize, end: usize) -> bool {
        self.prefix[start - 1].depot_visited || self.suffix[end].depot_visited
    }

    /// Full feasibility verdict of a candidate splice for this technician.
    pub fn splice_verdict(&self, ev: &SpliceEval, inst: &Instance) -> Verdict {
        feasible_for(&ev.stats, &inst.technicians[self.tech])
    }

    /// Applies a splice, updating the caches incrementally: the prefix
    /// entries before `start` and the suffix entries after the spliced
    /// stretch stay valid and are kept.
    pub fn apply_splice(&mut self, start: usize, end: usize, nodes: &[NodeId], inst: &Instance) {
        debug_assert!(start >= 1 && start <= end && end <= self.visits.len() - 1);
        self.version = next_version();
        self.visits.splice(start..end, nodes.iter().copied());
        let n = self.visits.len();
        let ins = nodes.len();

        self.singles
            .splice(start..end, nodes.iter().map(|&v| stats_single(v, inst)));

        // Entries in start..n are overwritten in place; their buffers are
        // reused, only a net growth allocates fresh slots.
        if n > self.prefix.len() {
            let empty = SegmentStats::empty(inst);
            self.prefix.resize(n, empty);
        } else {
            self.prefix.truncate(n);
        }
        for i in start..n {
            let (head, tail) = self.prefix.split_at_mut(i);
            concat_into(&head[i - 1], &self.singles[i], inst, &mut tail[0]);
        }

        // Shift the still-valid tails into place, then fill the gap
        // backwards. start + ins <= n - 1, so index i + 1 below is always
        // either freshly computed or preserved.
        self.suffix
            .splice(start..end, std::iter::repeat_with(|| SegmentStats::empty(inst)).take(ins));
        for i in (0..start + ins).rev() {
            let (head, tail) = self.suffix.split_at_mut(i + 1);
            concat_into(&self.singles[i], &tail[0], inst, &mut head[i]);
        }
        self.body_valid = false;
    }

    /// Whether the central-depot visit is still needed: removing it must
    /// break tool or part feasibility.
    pub fn depot_visit_relevant(&self, inst: &Instance) -> bool {
        let pos = match self.depot_pos() {
            Some(p) => p,
            None => return false,
        };
        let without = self.eval_splice(pos, pos + 1, &SegmentStats::empty(inst), inst);
        matches!(
            feasible_for(&without.stats, &inst.technicians[self.tech]),
            Err(crate::eval::Infeasibility::Tool(_)) | Err(crate::eval::Infeasibility::Part(_))
        )
    }

    /// Drops the central-depot visit when it no longer gates any tool or
    /// part requirement. Returns whether the route changed.
    pub fn drop_depot_if_redundant(&mut self, inst: &Instance) -> bool {
        match self.depot_pos() {
            Some(pos) if !self.depot_visit_relevant(inst) => {
                self.apply_splice(pos, pos + 1, &[], inst);
                true
            }
            _ => false,
        }
    }

    /// Route-level invariants, for audits and tests.
    pub fn check_invariants(&self, inst: &Instance) -> Result<(), String> {
        let home = inst.technicians[self.tech].home_depot;
        if self.visits.first() != Some(&home) || self.visits.last() != Some(&home) {
            return Err(format!("route {} does not start/end at home depot", self.tech));
        }
        if self.visits.iter().filter(|&&v| v == 0).count() > 1 {
            return Err(format!("route {} visits the central depot twice", self.tech));
        }
        for &v in &self.visits[1..self.visits.len() - 1] {
            if let Some(task) = inst.task_at(v) {
                if !inst.is_compatible(task, self.tech) {
                    return Err(format!("task {task} incompatible with technician {}", self.tech));
                }
            } else if v != 0 {
                return Err(format!("interior visit {v} is a depot of another route"));
            }
        }
        let mut fresh = self.clone();
        fresh.rebuild(inst);
        let mut pairs = vec![
            (&self.prefix, &fresh.prefix),
            (&self.suffix, &fresh.suffix),
            (&self.singles, &fresh.singles),
        ];
        // A splice leaves suffix_body unmaintained until the next read.
        if self.body_valid {
            pairs.push((&self.suffix_body, &fresh.suffix_body));
        }
        for (mine, theirs) in pairs {
            if mine.len() != theirs.len() {
                return Err(format!("route {} cache length is stale", self.tech));
            }
            for (a, b) in mine.iter().zip(theirs) {
                let close = (a.duration() - b.duration()).abs() <= 1e-9
                    && (a.travel - b.travel).abs() <= 1e-9
                    && (a.fts - b.fts).abs() <= 1e-9
                    && a.first == b.first
                    && a.last == b.last
                    && a.len == b.len
                    && a.ren_acc == b.ren_acc
                    && a.nonren_acc == b.nonren_acc
                    && a.skill_acc == b.skill_acc
                    && a.depot_visited == b.depot_visited
                    && a.tw_feasible == b.tw_feasible;
                if !close {
                    return Err(format!("route {} caches are stale", self.tech));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceRounding, ResourceCounts, Task, Technician};

    fn inst_two_tasks() -> Instance {
        let tasks = vec![
            Task {
                id: 0,
                node: 2,
                service_time: 2.0,
                tw_open: 0.0,
                tw_close: 500.0,
                part_demand: vec![0],
                tool_need: vec![true],
                skill_need: vec![false],
            },
            Task {
                id: 1,
                node: 3,
                service_time: 3.0,
                tw_open: 0.0,
                tw_close: 500.0,
                part_demand: vec![2],
                tool_need: vec![false],
                skill_need: vec![false],
            },
        ];
        let tech = Technician {
            id: 0,
            home_depot: 1,
            part_inventory: vec![2],
            tool_onboard: vec![true],
            skill_has: vec![true],
            depot_tw: (0.0, 1000.0),
        };
        Instance::from_coords(
            "two".into(),
            tasks,
            vec![tech],
            4.0,
            (0.0, 1000.0),
            vec![(0.0, 5.0), (0.0, 0.0), (3.0, 0.0), (3.0, 4.0)],
            DistanceRounding::None,
            ResourceCounts { tools: 1, parts: 1, skills: 1 },
        )
        .unwrap()
    }

    #[test]
    fn empty_route_has_zero_duration() {
        let inst = inst_two_tasks();
        let r = Route::new(0, &inst);
        assert_eq!(r.duration(), 0.0);
        assert_eq!(r.travel_cost(), 0.0);
        assert!(r.is_empty());
    }

    #[test]
    fn single_task_route_duration_with_loose_windows() {
        let inst = inst_two_tasks();
        let r = Route::with_visits(0, vec![1, 2, 1], &inst);
        // t(home, task0) = 3, service 2, back 3
        assert!((r.duration() - 8.0).abs() < 1e-12);
        assert!((r.travel_cost() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn insertion_into_empty_route_costs_round_trip() {
        let inst = inst_two_tasks();
        let r = Route::new(0, &inst);
        let ev = r.eval_insertion(1, 0, &inst);
        assert!(r.splice_verdict(&ev, &inst).is_ok());
        assert!((ev.d_travel - 6.0).abs() < 1e-12);
        assert!((ev.d_duration - 8.0).abs() < 1e-12);
    }

    #[test]
    fn noop_splice_has_zero_delta() {
        let inst = inst_two_tasks();
        let r = Route::with_visits(0, vec![1, 2, 3, 1], &inst);
        let seg = crate::eval::stats_sequence(&[2, 3], &inst);
        let ev = r.eval_splice(1, 3, &seg, &inst);
        assert!(ev.d_duration.abs() < 1e-9);
        assert!(ev.d_travel.abs() < 1e-9);
        assert!(r.splice_verdict(&ev, &inst).is_ok());
    }

    #[test]
    fn removing_only_task_zeroes_duration() {
        let inst = inst_two_tasks();
        let r = Route::with_visits(0, vec![1, 2, 1], &inst);
        let ev = r.eval_splice(1, 2, &SegmentStats::empty(&inst), &inst);
        assert!((ev.d_duration + r.duration()).abs() < 1e-12);
    }

    #[test]
    fn depot_relevance_tracks_inventory() {
        let inst = inst_two_tasks();
        // task 1 demands 2 parts; inventory covers it, so a depot is redundant
        let mut r = Route::with_visits(0, vec![1, 0, 3, 1], &inst);
        assert!(!r.depot_visit_relevant(&inst));
        assert!(r.drop_depot_if_redundant(&inst));
        assert_eq!(r.visits(), &[1, 3, 1]);

        // doubling the demand makes the depot load-bearing
        let mut inst2 = inst.clone();
        inst2.tasks[1].part_demand[0] = 3;
        let inst2 = Instance::from_coords(
            inst2.name.clone(),
            inst2.tasks.clone(),
            inst2.technicians.clone(),
            inst2.replenishment_time,
            inst2.central_tw,
            inst2.coords.clone(),
            inst2.rounding,
            inst2.counts,
        )
        .unwrap();
        let mut r2 = Route::with_visits(0, vec![1, 0, 3, 1], &inst2);
        assert!(r2.depot_visit_relevant(&inst2));
        assert!(!r2.drop_depot_if_redundant(&inst2));
        assert_eq!(r2.visits(), &[1, 0, 3, 1]);
    }

    #[test]
    fn insertion_violating_own_window_is_infeasible() {
        let mut inst = inst_two_tasks();
        inst.tasks[0].tw_close = 1.0; // cannot be reached before close
        let inst = Instance::from_coords(
            inst.name.clone(),
            inst.tasks.clone(),
            inst.technicians.clone(),
            inst.replenishment_time,
            inst.central_tw,
            inst.coords.clone(),
            inst.rounding,
            inst.counts,
        )
        .unwrap();
        let r = Route::new(0, &inst);
        let ev = r.eval_insertion(1, 0, &inst);
        assert!(r.splice_verdict(&ev, &inst).is_err());
    }
}
