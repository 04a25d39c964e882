//! The solver driver: constructive and intensifying removal/repair
//! rounds, the inner iterated local search with its four variants, the
//! elite solution pool with biased fitness/diversity ranking, and the
//! top-level loop tying them together.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::construct::{
    removal_repair_cached, removal_repair_perturbation, best_insertion, Criterion,
    InsertionCache, RemovalKind,
};
use crate::eval::IMPROVE_EPS;
use crate::model::{Instance, NodeId};
use crate::search::{build_predecessors, LocalSearch, MoveCounters, SwapSeqMove};
use crate::solution::Solution;

/// Tunable parameters with their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Outer iterations of the top-level loop.
    pub n_ils: usize,
    /// Elite pool capacity, also the number of constructive starts.
    pub n_pop: usize,
    /// Initial (and reset) perturbation ceiling.
    pub d0: usize,
    /// Fixed perturbation ceiling of the intensifying rounds.
    pub d_max_intensify: usize,
    /// Outer iterations without improvement before leaving variant 1.
    pub cv1: usize,
    /// Outer iterations granted to each of the variants 2..4 in turn.
    pub cv2: usize,
    /// Nearest-predecessor list length.
    pub chi: usize,
    /// Fraction of the pool counted as "close" in the diversity measure.
    pub n_close_frac: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n_ils: 600,
            n_pop: 10,
            d0: 3,
            d_max_intensify: 10,
            cv1: 45,
            cv2: 30,
            chi: 30,
            n_close_frac: 0.2,
        }
    }
}

/// How a variant shakes the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbKind {
    /// Removal/repair rounds.
    RemoveRepair,
    /// Random non-improving sequence swaps, biased to busy tasks.
    LocalShuffle,
}

/// One of the four inner-search configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IlsVariant {
    pub id: u8,
    pub perturbation: PerturbKind,
    pub criterion: Criterion,
}

pub const ILS_VARIANTS: [IlsVariant; 4] = [
    IlsVariant { id: 1, perturbation: PerturbKind::RemoveRepair, criterion: Criterion::Duration },
    IlsVariant { id: 2, perturbation: PerturbKind::RemoveRepair, criterion: Criterion::TravelCost },
    IlsVariant { id: 3, perturbation: PerturbKind::LocalShuffle, criterion: Criterion::Duration },
    IlsVariant { id: 4, perturbation: PerturbKind::LocalShuffle, criterion: Criterion::TravelCost },
];

/// Variant schedule: variant 1 while the global best improved within the
/// last `cv1` outer iterations, then variants 2, 3, 4 cycling every `cv2`.
pub fn select_ils(iter: usize, last_improvement: usize, params: &Params) -> IlsVariant {
    let gap = iter.saturating_sub(last_improvement);
    if gap <= params.cv1 {
        ILS_VARIANTS[0]
    } else {
        let idx = (gap - params.cv1 - 1) / params.cv2.max(1) % 3;
        ILS_VARIANTS[1 + idx]
    }
}

// ---------------------------------------------------------------------------
// Elite pool.

/// Broken-pairs distance between two solutions: the share of directed
/// arcs (depot arcs included) present in exactly one of them.
pub fn solution_distance(a: &Solution, b: &Solution) -> f64 {
    arc_distance(&a.arcs(), &b.arcs())
}

fn arc_distance(a: &[(NodeId, NodeId)], b: &[(NodeId, NodeId)]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let mut common = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (total - 2 * common) as f64 / total as f64
}

struct Member {
    sol: Solution,
    fitness: f64,
    arcs: Vec<(NodeId, NodeId)>,
}

/// Bounded pool of distinct good solutions. Members are ranked by the sum
/// of their fitness rank and their diversity rank (mean distance to the
/// closest members, most diverse first); the pool never evicts its best
/// member by fitness.
pub struct EliteSet {
    members: Vec<Member>,
    capacity: usize,
    n_close_frac: f64,
}

impl EliteSet {
    pub fn new(capacity: usize, n_close_frac: f64) -> Self {
        EliteSet { members: Vec::new(), capacity: capacity.max(1), n_close_frac }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Solution {
        let i = self
            .members
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness).then(a.0.cmp(&b.0)))
            .expect("elite pool is empty")
            .0;
        &self.members[i].sol
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> {
        self.members.iter().map(|m| &m.sol)
    }

    /// Biased rank of every member (lower is better):
    /// rank by fitness ascending plus rank by diversity descending.
    pub fn biased_ranks(&self) -> Vec<usize> {
        let n = self.members.len();
        if n == 0 {
            return Vec::new();
        }
        let mut fit_rank = vec![0usize; n];
        let mut by_fit: Vec<usize> = (0..n).collect();
        by_fit.sort_by(|&a, &b| {
            self.members[a].fitness.total_cmp(&self.members[b].fitness).then(a.cmp(&b))
        });
        for (rank, &i) in by_fit.iter().enumerate() {
            fit_rank[i] = rank;
        }

        let n_close = ((n.saturating_sub(1)) as f64 * self.n_close_frac).ceil().max(1.0) as usize;
        let mut div = vec![0.0f64; n];
        for i in 0..n {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| arc_distance(&self.members[i].arcs, &self.members[j].arcs))
                .collect();
            d.sort_by(f64::total_cmp);
            let k = n_close.min(d.len()).max(1);
            div[i] = if d.is_empty() { 0.0 } else { d[..k].iter().sum::<f64>() / k as f64 };
        }
        let mut div_rank = vec![0usize; n];
        let mut by_div: Vec<usize> = (0..n).collect();
        by_div.sort_by(|&a, &b| div[b].total_cmp(&div[a]).then(a.cmp(&b)));
        for (rank, &i) in by_div.iter().enumerate() {
            div_rank[i] = rank;
        }

        (0..n).map(|i| fit_rank[i] + div_rank[i]).collect()
    }

    /// Inserts unless an identical solution (arc distance zero) is already
    /// present; evicts the worst biased-rank member on overflow, but never
    /// the incumbent best. Returns whether the solution was kept.
    pub fn add(&mut self, sol: Solution) -> bool {
        let arcs = sol.arcs();
        if self.members.iter().any(|m| arc_distance(&m.arcs, &arcs) == 0.0) {
            return false;
        }
        let fitness = sol.fitness();
        self.members.push(Member { sol, fitness, arcs });
        if self.members.len() <= self.capacity {
            return true;
        }
        let ranks = self.biased_ranks();
        let best_fit = (0..self.members.len())
            .min_by(|&a, &b| {
                self.members[a].fitness.total_cmp(&self.members[b].fitness).then(a.cmp(&b))
            })
            .unwrap();
        let evict = (0..self.members.len())
            .filter(|&i| i != best_fit)
            .max_by(|&a, &b| {
                ranks[a]
                    .cmp(&ranks[b])
                    .then(self.members[a].fitness.total_cmp(&self.members[b].fitness))
                    .then(a.cmp(&b))
            })
            .unwrap();
        let kept = evict != self.members.len() - 1;
        self.members.swap_remove(evict);
        kept
    }

    /// Binary tournament: two distinct members, the better biased rank
    /// wins (ties by fitness, then by position).
    pub fn tournament<R: Rng>(&self, rng: &mut R) -> &Solution {
        assert!(!self.members.is_empty());
        if self.members.len() == 1 {
            return &self.members[0].sol;
        }
        let a = rng.gen_range(0..self.members.len());
        let mut b = rng.gen_range(0..self.members.len() - 1);
        if b >= a {
            b += 1;
        }
        let ranks = self.biased_ranks();
        let a_wins = ranks[a]
            .cmp(&ranks[b])
            .then(self.members[a].fitness.total_cmp(&self.members[b].fitness))
            .then(a.cmp(&b))
            == std::cmp::Ordering::Less;
        &self.members[if a_wins { a } else { b }].sol
    }
}

// ---------------------------------------------------------------------------
// Removal/repair rounds.

/// Constructive run: starts from scratch, accepts every perturbed
/// solution as the next incumbent (a pure random walk) and returns the
/// best of `2N + K` rounds. The perturbation ceiling grows by one per
/// non-improving round and resets on improvement.
pub fn irrp_constructive<R: Rng>(
    inst: &Instance,
    params: &Params,
    rng: &mut R,
    caches: &mut RepairCaches,
) -> Solution {
    let mut cur = Solution::empty(inst);
    best_insertion_cached(
        &mut cur,
        (0..inst.n_tasks()).collect(),
        Criterion::Duration,
        inst,
        caches.of(Criterion::Duration),
    );
    let mut best = cur.clone();
    let mut d_max = params.d0;
    let rounds = 2 * inst.n_tasks() + inst.n_techs();
    for _ in 0..rounds {
        removal_repair_cached(
            &mut cur,
            d_max,
            params.d0,
            Criterion::Duration,
            None,
            inst,
            rng,
            caches.of(Criterion::Duration),
        );
        if cur.fitness() < best.fitness() - IMPROVE_EPS {
            best = cur.clone();
            d_max = params.d0;
        } else {
            d_max = (d_max + 1).min(inst.n_tasks().max(params.d0));
        }
    }
    best
}

/// Intensifying run: up to `N` random-removal rounds with a fixed
/// ceiling, keeping only strict improvements. Returns whether the
/// incumbent improved.
pub fn irrp_intensify<R: Rng>(
    sol: &mut Solution,
    inst: &Instance,
    params: &Params,
    rng: &mut R,
    caches: &mut RepairCaches,
) -> bool {
    let mut improved = false;
    // Rollbacks below restore the snapshot's route handles unchanged, so
    // their cached scan results stay valid for the next round.
    let cache = caches.of(Criterion::Duration);
    for _ in 0..inst.n_tasks() {
        let snapshot = sol.clone();
        removal_repair_cached(
            sol,
            params.d_max_intensify,
            params.d0,
            Criterion::Duration,
            Some(RemovalKind::Random),
            inst,
            rng,
            cache,
        );
        if sol.fitness() < snapshot.fitness() - IMPROVE_EPS {
            improved = true;
        } else {
            *sol = snapshot;
        }
    }
    improved
}

// ---------------------------------------------------------------------------
// Intensification and perturbations.

/// Runs the whole operator suite to a joint fixed point: intensifying
/// removal/repair first, then the intra- and inter-route operators, over
/// and over while anything improves.
pub fn intensification<R: Rng>(
    sol: &mut Solution,
    ls: &LocalSearch,
    counters: &mut MoveCounters,
    inst: &Instance,
    params: &Params,
    rng: &mut R,
    caches: &mut RepairCaches,
) {
    let cr = Criterion::Duration;
    loop {
        let mut any = false;
        any |= irrp_intensify(sol, inst, params, rng, caches);
        any |= ls.shift1(sol, counters, cr);
        any |= ls.exchange1(sol, counters, cr);
        any |= ls.two_opt_star(sol, counters, cr);
        any |= ls.two_opt(sol, counters, cr);
        any |= ls.r_opt(sol, counters, cr);
        any |= ls.swap_relocate(sol, counters, cr);
        any |= ls.swap_sequence(sol, counters, cr, &[(3, 1), (3, 2), (3, 3)]);
        if !any {
            return;
        }
    }
}

/// Combinations tried by the shuffle perturbation.
const SHUFFLE_COMBOS: [(usize, usize); 6] = [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)];

/// Applies up to `degree` random feasible, non-improving sequence swaps.
/// Tasks are visited cyclically, most-moved first, so the shuffle targets
/// the regions the search keeps touching.
pub fn ls_perturbation<R: Rng>(
    sol: &mut Solution,
    degree: usize,
    criterion: Criterion,
    ls: &LocalSearch,
    counters: &mut MoveCounters,
    rng: &mut R,
) {
    let order = counters.order_desc();
    if order.is_empty() {
        return;
    }
    let mut moves = 0usize;
    let mut misses = 0usize;
    let mut idx = 0usize;
    while moves < degree && misses < order.len() {
        let task = order[idx % order.len()];
        idx += 1;
        let mut cands: Vec<SwapSeqMove> = Vec::new();
        ls.swap_seq_candidates(sol, task, &SHUFFLE_COMBOS, criterion, &mut |m| {
            if m.delta >= -IMPROVE_EPS {
                cands.push(*m);
            }
            false
        });
        if cands.is_empty() {
            misses += 1;
            continue;
        }
        let pick = cands[rng.gen_range(0..cands.len())];
        ls.apply_swap_sequence(sol, counters, &pick);
        moves += 1;
        misses = 0;
    }
}

#[allow(clippy::too_many_arguments)]
fn perturb<R: Rng>(
    sol: &mut Solution,
    variant: IlsVariant,
    d_max: usize,
    ls: &LocalSearch,
    counters: &mut MoveCounters,
    inst: &Instance,
    params: &Params,
    rng: &mut R,
    caches: &mut RepairCaches,
) {
    match variant.perturbation {
        PerturbKind::RemoveRepair => removal_repair_cached(
            sol,
            d_max,
            params.d0,
            variant.criterion,
            None,
            inst,
            rng,
            caches.of(variant.criterion),
        ),
        PerturbKind::LocalShuffle => {
            let degree = rng.gen_range(1..=d_max.max(1));
            ls_perturbation(sol, degree, variant.criterion, ls, counters, rng)
        }
    }
}

// ---------------------------------------------------------------------------
// Inner and outer search.

/// Inner iterated local search: perturb, intensify, continue from the
/// result regardless of quality (random-walk acceptance), track the best,
/// and stop after `N` iterations in a row without improvement. The
/// perturbation ceiling grows on failure and resets on success.
pub fn ils<R: Rng>(
    sol: &mut Solution,
    variant: IlsVariant,
    ls: &LocalSearch,
    counters: &mut MoveCounters,
    inst: &Instance,
    params: &Params,
    rng: &mut R,
) {
    let mut best = sol.clone();
    let mut d_max = params.d0;
    let mut stale = 0usize;
    let n = inst.n_tasks();
    while stale < n {
        perturb(sol, variant, d_max, ls, counters, inst, params, rng);
        intensification(sol, ls, counters, inst, params, rng);
        if sol.fitness() < best.fitness() - IMPROVE_EPS {
            best = sol.clone();
            d_max = params.d0;
            stale = 0;
        } else {
            d_max = (d_max + 1).min(n.max(params.d0));
            stale += 1;
        }
    }
    *sol = best;
}

/// Progress record of one full run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Best fitness after each outer iteration (monotone non-increasing).
    pub best_by_iter: Vec<f64>,
    pub iterations: usize,
}

pub struct EilsResult {
    pub best: Solution,
    pub trace: RunTrace,
}

/// Full solver run, deterministic in `(instance, params, seed)`: seed the
/// elite pool with constructive starts, then repeatedly pick a parent by
/// tournament, shake it hard (degree `N/2`) with the scheduled variant,
/// run the inner search and feed the result back into the pool.
pub fn eils(inst: &Instance, params: &Params, seed: u64) -> EilsResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preds = build_predecessors(inst, params.chi);
    let ls = LocalSearch::new(inst, &preds);
    let mut counters = MoveCounters::new(inst.n_tasks());

    let mut elite = EliteSet::new(params.n_pop, params.n_close_frac);
    for _ in 0..params.n_pop {
        elite.add(irrp_constructive(inst, params, &mut rng));
    }
    let mut best = elite.best().clone();
    let mut trace = RunTrace { best_by_iter: Vec::with_capacity(params.n_ils), iterations: 0 };
    let mut last_improvement = 0usize;

    for iter in 1..=params.n_ils {
        let variant = select_ils(iter, last_improvement, params);
        let mut s = elite.tournament(&mut rng).clone();
        perturb(
            &mut s,
            variant,
            (inst.n_tasks() / 2).max(1),
            &ls,
            &mut counters,
            inst,
            params,
            &mut rng,
        );
        ils(&mut s, variant, &ls, &mut counters, inst, params, &mut rng);
        if s.fitness() < best.fitness() - IMPROVE_EPS {
            best = s.clone();
            last_improvement = iter;
        }
        elite.add(s);
        trace.best_by_iter.push(best.fitness());
        trace.iterations = iter;
    }
    EilsResult { best, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::audit_solution;
    use crate::io::generator::{derive_trsp, GeneratorConfig};
    use crate::io::solomon::synth_solomon;

    fn small_inst(n: usize, seed: u64) -> Instance {
        let base = synth_solomon("C101", n, seed).unwrap();
        derive_trsp(
            &base,
            &GeneratorConfig { seed, n_depots: 4, ..GeneratorConfig::default() },
        )
        .unwrap()
    }

    fn tiny_params() -> Params {
        Params { n_ils: 4, n_pop: 4, ..Params::default() }
    }

    #[test]
    fn variant_schedule_follows_the_improvement_gap() {
        let p = Params::default();
        assert_eq!(select_ils(10, 0, &p).id, 1);
        assert_eq!(select_ils(45, 0, &p).id, 1);
        assert_eq!(select_ils(46, 0, &p).id, 2);
        assert_eq!(select_ils(75, 0, &p).id, 2);
        assert_eq!(select_ils(76, 0, &p).id, 3);
        assert_eq!(select_ils(105, 0, &p).id, 3);
        assert_eq!(select_ils(106, 0, &p).id, 4);
        assert_eq!(select_ils(135, 0, &p).id, 4);
        assert_eq!(select_ils(136, 0, &p).id, 2);
        // Any recent improvement pins variant 1.
        assert_eq!(select_ils(500, 480, &p).id, 1);
    }

    #[test]
    fn distance_is_a_normalized_symmetric_difference() {
        let inst = small_inst(10, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = irrp_constructive(&inst, &tiny_params(), &mut rng);
        let b = irrp_constructive(&inst, &tiny_params(), &mut rng);
        assert_eq!(solution_distance(&a, &a), 0.0);
        let d = solution_distance(&a, &b);
        assert!((0.0..=1.0).contains(&d));
        assert_eq!(d, solution_distance(&b, &a));
    }

    #[test]
    fn elite_rejects_duplicates_and_respects_capacity() {
        let inst = small_inst(12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut elite = EliteSet::new(3, 0.2);
        let mut sols = Vec::new();
        for _ in 0..6 {
            let s = irrp_constructive(&inst, &tiny_params(), &mut rng);
            sols.push(s.clone());
            elite.add(s);
        }
        assert!(elite.len() <= 3);
        // Re-adding any current member must be rejected.
        let again = elite.best().clone();
        assert!(!elite.add(again));
        // The best fitness ever seen that survived eviction rules: the
        // pool keeps its best member.
        let pool_best = elite.best().fitness();
        for s in elite.solutions() {
            assert!(pool_best <= s.fitness() + 1e-12);
        }
    }

    #[test]
    fn constructive_run_is_deterministic_and_feasible() {
        let inst = small_inst(15, 5);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            irrp_constructive(&inst, &Params::default(), &mut rng)
        };
        let a = run(1);
        let b = run(1);
        assert_eq!(a, b);
        a.check_invariants(&inst).unwrap();
        let audit = audit_solution(&a, &inst).unwrap();
        assert!((audit.fitness - a.fitness()).abs() < 1e-6);
    }

    #[test]
    fn intensify_never_worsens() {
        let inst = small_inst(15, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sol = irrp_constructive(&inst, &tiny_params(), &mut rng);
        let before = sol.fitness();
        irrp_intensify(&mut sol, &inst, &Params::default(), &mut rng);
        assert!(sol.fitness() <= before + 1e-12);
        sol.check_invariants(&inst).unwrap();
    }

    #[test]
    fn shuffle_perturbation_keeps_feasibility() {
        let inst = small_inst(15, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sol = irrp_constructive(&inst, &tiny_params(), &mut rng);
        let preds = build_predecessors(&inst, 30);
        let ls = LocalSearch::new(&inst, &preds);
        let mut counters = MoveCounters::new(inst.n_tasks());
        // Mark a few tasks as busy so the ordering is non-trivial.
        counters.bump(0);
        counters.bump(0);
        counters.bump(3);
        ls_perturbation(&mut sol, 5, Criterion::Duration, &ls, &mut counters, &mut rng);
        sol.check_invariants(&inst).unwrap();
    }

    #[test]
    fn full_run_is_deterministic_and_traced() {
        let inst = small_inst(10, 11);
        let params = Params { n_ils: 3, n_pop: 3, ..Params::default() };
        let a = eils(&inst, &params, 42);
        let b = eils(&inst, &params, 42);
        assert_eq!(a.best, b.best);
        assert_eq!(a.trace.best_by_iter, b.trace.best_by_iter);
        assert_eq!(a.trace.iterations, 3);
        // The trace is monotone non-increasing.
        for w in a.trace.best_by_iter.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        a.best.check_invariants(&inst).unwrap();
        let c = eils(&inst, &params, 43);
        let _ = c; // different seed may or may not differ; just must run
    }
}
