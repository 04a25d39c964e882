//! Property tests for the segment-summary calculus: the incremental
//! kernel must agree with a plain forward-simulation oracle and with
//! itself under re-association.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{oracle_accumulators, oracle_duration, random_instance, random_sequence, simulate};
use trsp::eval::{concat, stats_sequence, SegmentStats, TimeAcc};
use trsp::model::Instance;

const TOL: f64 = 1e-6;

fn setup(seed: u64, n_tasks: usize, n_techs: usize) -> (Instance, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(&mut rng, n_tasks, n_techs);
    (inst, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_matches_simulation(seed in 0u64..1 << 48) {
        let (inst, mut rng) = setup(seed, 10, 2);
        let (nodes, _) = random_sequence(&mut rng, &inst, 10);
        let stats = stats_sequence(&nodes, &inst);
        let sim = simulate(&nodes, &inst, 0.0);
        prop_assert_eq!(stats.tw_feasible, sim.feasible);
        prop_assert!((stats.travel - sim.travel).abs() < TOL);
        if sim.feasible {
            let oracle = oracle_duration(&nodes, &inst).unwrap();
            prop_assert!(
                (stats.duration() - oracle).abs() < TOL,
                "duration {} vs oracle {} for {:?}", stats.duration(), oracle, nodes
            );
        }
        let (tools, parts, skills) = oracle_accumulators(&nodes, &inst);
        prop_assert!(stats.ren_acc.iter().map(|&x| x as u32).eq(tools));
        prop_assert!(stats.nonren_acc.iter().copied().eq(parts));
        prop_assert!(stats.skill_acc.iter().map(|&x| x as u32).eq(skills));
    }

    /// Any split point yields the same summary as the left fold.
    #[test]
    fn concat_is_associative(seed in 0u64..1 << 48, cut in 0usize..12) {
        let (inst, mut rng) = setup(seed, 10, 2);
        let (nodes, _) = random_sequence(&mut rng, &inst, 10);
        let folded = stats_sequence(&nodes, &inst);
        let cut = cut.min(nodes.len());
        let left = stats_sequence(&nodes[..cut], &inst);
        let right = stats_sequence(&nodes[cut..], &inst);
        let joined = concat(&left, &right, &inst);
        prop_assert!((joined.duration() - folded.duration()).abs() < TOL);
        prop_assert!((joined.travel - folded.travel).abs() < TOL);
        prop_assert!((joined.h_last - folded.h_last).abs() < TOL);
        prop_assert!((joined.twt - folded.twt).abs() < TOL);
        prop_assert_eq!(joined.tw_feasible, folded.tw_feasible);
        prop_assert_eq!(&joined.ren_acc, &folded.ren_acc);
        prop_assert_eq!(&joined.nonren_acc, &folded.nonren_acc);
        prop_assert_eq!(&joined.skill_acc, &folded.skill_acc);
    }

    /// Extending an infeasible sequence never makes it feasible.
    #[test]
    fn infeasibility_is_monotone(seed in 0u64..1 << 48) {
        let (inst, mut rng) = setup(seed, 10, 2);
        let (nodes, _) = random_sequence(&mut rng, &inst, 10);
        let mut acc: Option<SegmentStats> = None;
        let mut broken = false;
        for &v in &nodes {
            let single = trsp::eval::stats_single(v, &inst);
            let next = match &acc {
                Some(a) => concat(a, &single, &inst),
                None => single,
            };
            if broken {
                prop_assert!(!next.tw_feasible);
            }
            broken = !next.tw_feasible;
            acc = Some(next);
        }
    }

    /// The scalar accumulator prices a chain exactly like full concat.
    #[test]
    fn time_acc_matches_concat(seed in 0u64..1 << 48, cuts in prop::collection::vec(0usize..12, 1..4)) {
        let (inst, mut rng) = setup(seed, 10, 2);
        let (nodes, _) = random_sequence(&mut rng, &inst, 10);
        let mut bounds: Vec<usize> = cuts.iter().map(|&c| c.min(nodes.len())).collect();
        bounds.push(0);
        bounds.push(nodes.len());
        bounds.sort_unstable();
        let segs: Vec<SegmentStats> = bounds
            .windows(2)
            .map(|w| stats_sequence(&nodes[w[0]..w[1]], &inst))
            .collect();
        let mut acc = TimeAcc::empty();
        let mut full = SegmentStats::empty(&inst);
        for s in &segs {
            acc.push(s, &inst);
            full = concat(&full, s, &inst);
        }
        prop_assert_eq!(acc.tw_feasible, full.tw_feasible);
        prop_assert!((acc.duration() - full.duration()).abs() < TOL);
        prop_assert!((acc.travel - full.travel).abs() < TOL);
    }

    /// The reclaimable delay really is reclaimable: pushing the departure
    /// back by the passive slack keeps the schedule legal and removes the
    /// wait from the span.
    #[test]
    fn passive_slack_is_realizable(seed in 0u64..1 << 48) {
        let (inst, mut rng) = setup(seed, 10, 2);
        let (nodes, _) = random_sequence(&mut rng, &inst, 10);
        let stats = stats_sequence(&nodes, &inst);
        prop_assume!(stats.tw_feasible);
        let delayed = simulate(&nodes, &inst, stats.pts);
        prop_assert!(delayed.feasible);
        prop_assert!(
            (delayed.completion - delayed.start) - stats.duration() < TOL,
            "delayed span {} vs kernel duration {}",
            delayed.completion - delayed.start, stats.duration()
        );
    }
}
