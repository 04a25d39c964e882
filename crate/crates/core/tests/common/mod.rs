//! Shared helpers for the integration tests: independent schedule oracles
//! and small random instance builders.
//!
//! The oracles deliberately avoid the library's slack calculus. Durations
//! come from a direct search over departure delays on top of a plain
//! forward simulation, so agreement with the incremental kernel is
//! evidence, not circularity.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trsp::model::{DistanceRounding, Instance, NodeId, ResourceCounts, Task, TechId, Technician};
use trsp::solution::UNSCHEDULED_PENALTY;

/// Forward simulation of a visit sequence with the first service start
/// delayed by `delay` past its window opening.
#[derive(Debug, Clone, Copy)]
pub struct Sim {
    pub feasible: bool,
    /// Service start at the first node.
    pub start: f64,
    /// End of service at the last node.
    pub completion: f64,
    pub travel: f64,
    /// Total waiting over positions 2..n.
    pub waiting: f64,
}

pub fn simulate(nodes: &[NodeId], inst: &Instance, delay: f64) -> Sim {
    const EPS: f64 = 1e-9;
    assert!(!nodes.is_empty());
    let (e0, l0) = inst.node_tw(nodes[0]);
    let mut h = e0 + delay;
    let start = h;
    let mut feasible = h <= l0 + EPS;
    let mut travel = 0.0;
    let mut waiting = 0.0;
    let mut prev = nodes[0];
    let mut done = h + inst.node_service(prev);
    for &v in &nodes[1..] {
        let hop = inst.travel(prev, v);
        travel += hop;
        let arrival = done + hop;
        let (e, l) = inst.node_tw(v);
        h = arrival.max(e);
        waiting += h - arrival;
        if h > l + EPS {
            feasible = false;
        }
        done = h + inst.node_service(v);
        prev = v;
    }
    Sim { feasible, start, completion: done, travel, waiting }
}

/// Minimal duration of a fixed visit sequence over all feasible departure
/// delays, or `None` when even the earliest schedule breaks a window.
///
/// The completion time is a convex piecewise-linear function of the delay
/// and the feasible delays form an interval, so a bisection for the
/// largest feasible delay followed by a ternary search is exact to well
/// below the comparison tolerances used in the tests.
pub fn oracle_duration(nodes: &[NodeId], inst: &Instance) -> Option<f64> {
    let base = simulate(nodes, inst, 0.0);
    if !base.feasible {
        return None;
    }
    // Largest feasible delay by bisection; horizon bounds every window.
    let mut lo = 0.0;
    let mut hi = inst.horizon() + 1.0;
    if simulate(nodes, inst, hi).feasible {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if simulate(nodes, inst, mid).feasible {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let d_max = lo;
    let dur = |d: f64| {
        let s = simulate(nodes, inst, d);
        s.completion - s.start
    };
    let (mut a, mut b) = (0.0, d_max);
    for _ in 0..300 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if dur(m1) <= dur(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    Some(dur(0.5 * (a + b)))
}

/// Resource totals of a sequence accumulated directly: tools and parts
/// over the visits before the first central-depot stop, skills throughout.
pub fn oracle_accumulators(nodes: &[NodeId], inst: &Instance) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let c = inst.counts;
    let mut tools = vec![0u32; c.tools];
    let mut parts = vec![0u32; c.parts];
    let mut skills = vec![0u32; c.skills];
    let mut before_depot = true;
    for &v in nodes {
        if v == 0 {
            before_depot = false;
        }
        if let Some(t) = inst.task_at(v) {
            let tk = &inst.tasks[t];
            for (q, &need) in tk.skill_need.iter().enumerate() {
                skills[q] += need as u32;
            }
            if before_depot {
                for (i, &need) in tk.tool_need.iter().enumerate() {
                    tools[i] += need as u32;
                }
                for (p, &d) in tk.part_demand.iter().enumerate() {
                    parts[p] += d;
                }
            }
        }
    }
    (tools, parts, skills)
}

/// Feasibility of a full route body for a technician, checked directly.
pub fn oracle_route_ok(visits: &[NodeId], tech: TechId, inst: &Instance) -> bool {
    if simulate(visits, inst, 0.0).feasible {
        let (tools, parts, skills) = oracle_accumulators(visits, inst);
        let t = &inst.technicians[tech];
        tools.iter().enumerate().all(|(i, &n)| n == 0 || t.tool_onboard[i])
            && parts.iter().enumerate().all(|(p, &n)| n <= t.part_inventory[p])
            && skills.iter().enumerate().all(|(q, &n)| n == 0 || t.skill_has[q])
    } else {
        false
    }
}

/// Exhaustive optimum for tiny instances: every task-to-technician
/// assignment (including leaving tasks out at the fixed penalty), every
/// visit order, every replenishment placement. Route costs come from the
/// simulation oracle above. Intended for at most 8 tasks and 3 technicians.
pub fn brute_force_optimum(inst: &Instance) -> f64 {
    let n = inst.n_tasks();
    let k = inst.n_techs();
    assert!(n <= 8 && k <= 3, "brute force is exponential");

    // Best route cost per technician and task subset, memoized.
    let mut best: Vec<Vec<Option<Option<f64>>>> = vec![vec![None; 1 << n]; k];
    fn subset_cost(inst: &Instance, tech: TechId, mask: u32) -> Option<f64> {
        if mask == 0 {
            return Some(0.0);
        }
        let tasks: Vec<usize> = (0..inst.n_tasks()).filter(|&t| mask >> t & 1 == 1).collect();
        let home = inst.technicians[tech].home_depot;
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        let mut best: Option<f64> = None;
        permute(&mut order, 0, &mut |perm| {
            let body: Vec<NodeId> = perm.iter().map(|&i| inst.task_node(tasks[i])).collect();
            // depot_at == body.len() + 1 means no replenishment stop
            for depot_at in 0..=body.len() + 1 {
                let mut visits = vec![home];
                for (i, &v) in body.iter().enumerate() {
                    if i == depot_at {
                        visits.push(0);
                    }
                    visits.push(v);
                }
                if depot_at == body.len() {
                    visits.push(0);
                }
                visits.push(home);
                if oracle_route_ok(&visits, tech, inst) {
                    let d = oracle_duration(&visits, inst).unwrap();
                    if best.map_or(true, |b| d < b) {
                        best = Some(d);
                    }
                }
            }
        });
        best
    }

    let mut opt = f64::INFINITY;
    // assignment[t] in 0..k is a technician, k means unscheduled
    let mut assignment = vec![0usize; n];
    loop {
        let mut masks = vec![0u32; k];
        let mut penalty = 0.0;
        let mut valid = true;
        for (t, &a) in assignment.iter().enumerate() {
            if a == k {
                penalty += UNSCHEDULED_PENALTY;
            } else if inst.is_compatible(t, a) {
                masks[a] |= 1 << t;
            } else {
                valid = false;
                break;
            }
        }
        if valid {
            let mut cost = penalty;
            for (tech, &mask) in masks.iter().enumerate() {
                let entry = &mut best[tech][mask as usize];
                let c = match entry {
                    Some(c) => *c,
                    None => {
                        let c = subset_cost(inst, tech, mask);
                        *entry = Some(c);
                        c
                    }
                };
                match c {
                    Some(c) => cost += c,
                    None => {
                        cost = f64::INFINITY;
                        break;
                    }
                }
            }
            if cost < opt {
                opt = cost;
            }
        }
        // next assignment in base k+1
        let mut carry = true;
        for a in assignment.iter_mut() {
            if carry {
                *a += 1;
                if *a > k {
                    *a = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    opt
}

fn permute(order: &mut Vec<usize>, from: usize, f: &mut impl FnMut(&[usize])) {
    if from == order.len() {
        f(order);
        return;
    }
    for i in from..order.len() {
        order.swap(from, i);
        permute(order, from + 1, f);
        order.swap(from, i);
    }
}

/// Random instance on a square, sized for the exhaustive oracle. Windows
/// are generous enough that most tasks are schedulable but tight enough
/// that ordering matters; a minority of tasks carry tool, part, or skill
/// needs so the replenishment and compatibility logic stays exercised.
pub fn random_instance(rng: &mut ChaCha8Rng, n_tasks: usize, n_techs: usize) -> Instance {
    let counts = ResourceCounts { tools: 2, parts: 2, skills: 2 };
    let horizon = 300.0;
    let mut coords = Vec::with_capacity(1 + n_techs + n_tasks);
    for _ in 0..1 + n_techs + n_tasks {
        coords.push((rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)));
    }
    let tasks: Vec<Task> = (0..n_tasks)
        .map(|i| {
            let open = rng.gen_range(0.0..horizon * 0.6);
            let width = rng.gen_range(40.0..160.0);
            Task {
                id: i,
                node: 1 + n_techs + i,
                service_time: rng.gen_range(5.0..20.0),
                tw_open: open,
                tw_close: (open + width).min(horizon),
                part_demand: (0..counts.parts)
                    .map(|_| if rng.gen_bool(0.3) { rng.gen_range(1..3) } else { 0 })
                    .collect(),
                tool_need: (0..counts.tools).map(|_| rng.gen_bool(0.25)).collect(),
                skill_need: (0..counts.skills).map(|_| rng.gen_bool(0.25)).collect(),
            }
        })
        .collect();
    let technicians: Vec<Technician> = (0..n_techs)
        .map(|id| Technician {
            id,
            home_depot: 1 + id,
            part_inventory: (0..counts.parts).map(|_| rng.gen_range(1..4)).collect(),
            tool_onboard: (0..counts.tools).map(|_| rng.gen_bool(0.7)).collect(),
            skill_has: (0..counts.skills).map(|_| rng.gen_bool(0.7)).collect(),
            depot_tw: (0.0, horizon),
        })
        .collect();
    Instance::from_coords(
        format!("rand-{n_tasks}x{n_techs}"),
        tasks,
        technicians,
        5.0,
        (0.0, horizon),
        coords,
        DistanceRounding::None,
        counts,
    )
    .unwrap()
}

/// Random visit sequence over an instance's nodes: starts and ends at a
/// technician's home, interior mixes task nodes and at most one
/// replenishment stop. Not necessarily feasible.
pub fn random_sequence(rng: &mut ChaCha8Rng, inst: &Instance, max_tasks: usize) -> (Vec<NodeId>, TechId) {
    let tech = rng.gen_range(0..inst.n_techs());
    let home = inst.technicians[tech].home_depot;
    let n = rng.gen_range(0..=max_tasks.min(inst.n_tasks()));
    let mut pool: Vec<usize> = (0..inst.n_tasks()).collect();
    let mut body: Vec<NodeId> = (0..n)
        .map(|_| {
            let i = rng.gen_range(0..pool.len());
            inst.task_node(pool.swap_remove(i))
        })
        .collect();
    if rng.gen_bool(0.4) {
        let at = rng.gen_range(0..=body.len());
        body.insert(at, 0);
    }
    let mut visits = vec![home];
    visits.extend(body);
    visits.push(home);
    (visits, tech)
}
