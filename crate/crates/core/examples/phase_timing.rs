use std::time::Instant;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trsp::construct::{removal_repair_cached, Criterion, InsertionCache, RemovalKind};
use trsp::io::generator::{derive_trsp, GeneratorConfig};
use trsp::io::solomon::synth_solomon;
use trsp::meta::{irrp_constructive, Params};

fn main() {
    let base = synth_solomon("C101", 100, 1).unwrap();
    let inst = derive_trsp(&base, &GeneratorConfig::default()).unwrap();
    let params = Params::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let t = Instant::now();
    let mut sol = irrp_constructive(&inst, &params, &mut rng);
    println!("constructive: {:.3}s fitness={:.1}", t.elapsed().as_secs_f64(), sol.fitness());
    println!("after constructive: scan calls={}",
        trsp::construct::SCAN_CALLS.load(std::sync::atomic::Ordering::Relaxed));

    let mut cache = InsertionCache::new(&inst, Criterion::Duration);
    let t = Instant::now();
    let rounds: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(4000);
    for _ in 0..rounds {
        let snap = sol.clone();
        removal_repair_cached(&mut sol, params.d_max_intensify, params.d0,
            Criterion::Duration, Some(RemovalKind::Random), &inst, &mut rng, &mut cache);
        if sol.fitness() >= snap.fitness() - 1e-6 { sol = snap; }
    }
    let el = t.elapsed().as_secs_f64();
    println!("scan calls={} positions={}",
        trsp::construct::SCAN_CALLS.load(std::sync::atomic::Ordering::Relaxed),
        trsp::construct::SCAN_POSITIONS.load(std::sync::atomic::Ordering::Relaxed));
    println!("{} intensify-style rounds: {:.3}s ({:.1}us/round) fitness={:.1}",
        rounds, el, el / rounds as f64 * 1e6, sol.fitness());

}
