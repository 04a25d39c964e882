//! Derives full technician routing instances from Solomon-style layouts:
//! the VRPTW depot becomes the central replenishment depot, customers
//! become tasks, and seeded draws add home depots, skills, tools and
//! spare-part data on top.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TrspError};
use crate::io::solomon::SolomonInstance;
use crate::model::{DistanceRounding, Instance, ResourceCounts, Task, Technician};

/// Knobs for the derivation. Densities are per-item Bernoulli
/// probabilities; `seed` fixes every draw, so equal `(layout, config)`
/// pairs give byte-identical instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Number of technicians, each with its own home depot.
    pub n_depots: usize,
    pub n_skills: usize,
    pub n_tools: usize,
    pub n_parts: usize,
    /// Chance that a task requires a given skill.
    pub skill_density: f64,
    /// Chance that a task requires a given tool.
    pub tool_density: f64,
    /// Chance that a technician masters a given skill.
    pub tech_skill_density: f64,
    /// Chance that a technician starts with a given tool onboard.
    pub tech_tool_density: f64,
    /// Per-part demand of a task is uniform in `0..=max_part_demand`.
    pub max_part_demand: u32,
    pub rounding: DistanceRounding,
    /// Service time of the central depot visit.
    pub replenishment_time: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_depots: 25,
            n_skills: 5,
            n_tools: 5,
            n_parts: 5,
            skill_density: 0.25,
            tool_density: 0.25,
            tech_skill_density: 0.7,
            tech_tool_density: 0.7,
            max_part_demand: 3,
            rounding: DistanceRounding::None,
            replenishment_time: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_depots == 0 {
            return Err(TrspError::Config("need at least one technician".into()));
        }
        for (label, d) in [
            ("skill_density", self.skill_density),
            ("tool_density", self.tool_density),
            ("tech_skill_density", self.tech_skill_density),
            ("tech_tool_density", self.tech_tool_density),
        ] {
            if !(0.0..=1.0).contains(&d) {
                return Err(TrspError::Config(format!("{label} must lie in [0, 1], got {d}")));
            }
        }
        if self.n_skills == 0 && self.skill_density > 0.0 {
            return Err(TrspError::Config(
                "skill_density > 0 requires at least one skill".into(),
            ));
        }
        if self.n_tools == 0 && self.tool_density > 0.0 {
            return Err(TrspError::Config("tool_density > 0 requires at least one tool".into()));
        }
        if self.replenishment_time < 0.0 {
            return Err(TrspError::Config("replenishment_time must be nonnegative".into()));
        }
        Ok(())
    }
}

fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn bernoulli_vec(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<bool> {
    (0..n).map(|_| rng.gen::<f64>() < p).collect()
}

/// Derives a full instance. Node ids: 0 is the central depot (at the
/// layout's depot location), `1..=n_depots` are home depots drawn inside
/// the layout's bounding box, task nodes follow in customer order.
///
/// Draw order (fixed, part of the format): per technician skills, tools
/// and inventory; then per task skills, tools and part demands, redrawn
/// as a block until at least one technician masters every required skill.
pub fn derive_trsp(base: &SolomonInstance, cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let horizon = base.depot.due;

    let (mut min_x, mut min_y, mut max_x, mut max_y) =
        (base.depot.x, base.depot.y, base.depot.x, base.depot.y);
    for c in &base.customers {
        min_x = min_x.min(c.x);
        min_y = min_y.min(c.y);
        max_x = max_x.max(c.x);
        max_y = max_y.max(c.y);
    }

    let mut technicians = Vec::with_capacity(cfg.n_depots);
    let mut home_coords = Vec::with_capacity(cfg.n_depots);
    for k in 0..cfg.n_depots {
        let skills = bernoulli_vec(&mut rng, cfg.n_skills, cfg.tech_skill_density);
        let tools = bernoulli_vec(&mut rng, cfg.n_tools, cfg.tech_tool_density);
        let inventory: Vec<u32> = (0..cfg.n_parts)
            .map(|_| rng.gen_range(0..=2 * cfg.max_part_demand))
            .collect();
        home_coords.push((
            quantize(rng.gen_range(min_x..=max_x)),
            quantize(rng.gen_range(min_y..=max_y)),
        ));
        technicians.push(Technician {
            id: k,
            home_depot: 1 + k,
            part_inventory: inventory,
            tool_onboard: tools,
            skill_has: skills,
            depot_tw: (0.0, horizon),
        });
    }

    let mut tasks = Vec::with_capacity(base.customers.len());
    for (i, c) in base.customers.iter().enumerate() {
        let mut attempts = 0;
        let (skill_need, tool_need, part_demand) = loop {
            let skills = bernoulli_vec(&mut rng, cfg.n_skills, cfg.skill_density);
            let tools = bernoulli_vec(&mut rng, cfg.n_tools, cfg.tool_density);
            let parts: Vec<u32> =
                (0..cfg.n_parts).map(|_| rng.gen_range(0..=cfg.max_part_demand)).collect();
            let covered = technicians.iter().any(|t| {
                skills.iter().zip(&t.skill_has).all(|(&need, &has)| !need || has)
            });
            if covered {
                break (skills, tools, parts);
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(TrspError::Config(format!(
                    "no technician can cover task {i}: skill densities leave \
                     required skills unmastered"
                )));
            }
        };
        tasks.push(Task {
            id: i,
            node: 1 + cfg.n_depots + i,
            service_time: c.service,
            tw_open: c.ready,
            tw_close: c.due,
            part_demand,
            tool_need,
            skill_need,
        });
    }

    let mut coords = Vec::with_capacity(1 + cfg.n_depots + tasks.len());
    coords.push((quantize(base.depot.x), quantize(base.depot.y)));
    coords.extend(home_coords);
    coords.extend(base.customers.iter().map(|c| (quantize(c.x), quantize(c.y))));

    Instance::from_coords(
        base.name.clone(),
        tasks,
        technicians,
        cfg.replenishment_time,
        (0.0, horizon),
        coords,
        cfg.rounding,
        ResourceCounts { tools: cfg.n_tools, parts: cfg.n_parts, skills: cfg.n_skills },
    )
}
