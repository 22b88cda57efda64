//! Elitist real-valued genetic algorithm over genotypes, the three
//! task-presentation paradigms, and run bookkeeping.
//!
//! Each generation the whole population is evaluated and ranked; the
//! top `elite_fraction` survive unchanged and the remaining slots are
//! filled with mutated copies of the elites (per-gene Gaussian noise,
//! clamped back to `[-1, 1]`). Everything is deterministic given the
//! seed: per-individual RNG streams are derived from
//! `(seed, generation, index)`, never from execution order, so parallel
//! evaluation cannot change results.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ctrnn::{decode_genotype, genotype_len, Genotype};
use crate::embodiment::{evaluate_task, SimConfig, Task};

/// Task presentation paradigm. `switch_gen` is the generation at which
/// a single-task phase hands over to the product-fitness phase; setting
/// it at or beyond the total generation count gives a single-task run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Paradigm {
    /// Product fitness from the start.
    Both,
    /// Pole-balancing alone until `switch_gen`, then product fitness.
    PoleFirst { switch_gen: u64 },
    /// Categorization alone until `switch_gen`, then product fitness.
    CatFirst { switch_gen: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoConfig {
    pub pop_size: usize,
    pub elite_fraction: f64,
    pub mutation_variance: f64,
    pub n_inter: usize,
    pub paradigm: Paradigm,
    pub total_generations: u64,
    pub seed: u64,
    /// Stop once the best selection fitness reaches this value.
    pub stop_at_fitness: Option<f64>,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            pop_size: 100,
            elite_fraction: 0.04,
            mutation_variance: 0.3,
            n_inter: 2,
            paradigm: Paradigm::Both,
            total_generations: 100,
            seed: 0,
            stop_at_fitness: None,
        }
    }
}

impl EvoConfig {
    pub fn elite_count(&self) -> usize {
        ((self.pop_size as f64 * self.elite_fraction).ceil() as usize).max(1)
    }
}

/// Which tasks the paradigm needs at a given generation.
pub fn tasks_for_generation(paradigm: Paradigm, generation: u64) -> (bool, bool) {
    match paradigm {
        Paradigm::Both => (true, true),
        Paradigm::PoleFirst { switch_gen } => (generation >= switch_gen, true),
        Paradigm::CatFirst { switch_gen } => (true, generation >= switch_gen),
    }
}

/// Per-individual task fitness values, as far as they were evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskFit {
    pub cat: Option<f64>,
    pub pole: Option<f64>,
}

/// Selection fitness for the given generation: the single-task score
/// during a pre-switch phase, the product of both afterwards.
pub fn fitness_for_generation(fit: &TaskFit, paradigm: Paradigm, generation: u64) -> f64 {
    let (need_cat, need_pole) = tasks_for_generation(paradigm, generation);
    match (need_cat, need_pole) {
        (true, true) => fit.cat.unwrap_or(0.0) * fit.pole.unwrap_or(0.0),
        (false, true) => fit.pole.unwrap_or(0.0),
        (true, false) => fit.cat.unwrap_or(0.0),
        (false, false) => unreachable!(),
    }
}

/// RNG stream derived from (seed, label, generation, index); independent
/// of evaluation order.
pub fn derived_rng(seed: u64, label: &[u8], generation: u64, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(label);
    h.update(seed.to_le_bytes());
    h.update(generation.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    rand::SeedableRng::from_seed(key)
}

/// Derive the per-run seed for run `i` of a batch from a master seed.
pub fn derived_run_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"run-seed");
    h.update(master_seed.to_le_bytes());
    h.update(run_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Mutate a copy of `parent`: i.i.d. Gaussian noise per gene, then clamp
/// to `[-1, 1]`.
pub fn mutate(parent: &Genotype, variance: f64, rng: &mut ChaCha8Rng) -> Genotype {
    let normal = Normal::new(0.0, variance.sqrt()).unwrap();
    Genotype {
        genes: parent
            .genes
            .iter()
            .map(|g| (g + normal.sample(rng)).clamp(-1.0, 1.0))
            .collect(),
    }
}

/// Per-generation summary written to the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    pub best_cat: Option<f64>,
    pub best_pole: Option<f64>,
    pub mean_cat: Option<f64>,
    pub mean_pole: Option<f64>,
    pub best_genotype: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config_hash: String,
    pub n_inter: usize,
    pub generations: Vec<GenRecord>,
}

impl RunRecord {
    pub fn final_best(&self) -> f64 {
        self.generations.last().map(|g| g.best).unwrap_or(0.0)
    }

    pub fn best_genotype(&self) -> Option<Genotype> {
        self.generations
            .last()
            .map(|g| Genotype { genes: g.best_genotype.clone() })
    }
}

/// Evaluate the tasks required at `generation`, reusing any values an
/// elite already carries (valid only with deterministic trial grids).
fn evaluate_individual(
    genotype: &Genotype,
    cfg: &EvoConfig,
    sim: &SimConfig,
    generation: u64,
    index: usize,
    cached: Option<TaskFit>,
) -> TaskFit {
    let params = decode_genotype(genotype, cfg.n_inter).expect("population genotype length");
    let (need_cat, need_pole) = tasks_for_generation(cfg.paradigm, generation);
    let cached = if sim.random_trials { None } else { cached };
    let mut fit = cached.unwrap_or_default();
    let mut rng = if sim.random_trials {
        Some(derived_rng(cfg.seed, b"trials", generation, index as u64))
    } else {
        None
    };
    if need_cat && (fit.cat.is_none() || sim.random_trials) {
        fit.cat = Some(evaluate_task(&params, Task::Categorization, sim, rng.as_mut()));
    }
    if need_pole && (fit.pole.is_none() || sim.random_trials) {
        fit.pole = Some(evaluate_task(&params, Task::PoleBalance, sim, rng.as_mut()));
    }
    fit
}

/// Run the elitist GA with the standard task-based fitness. The
/// observer is called once per generation with the freshly written
/// record.
pub fn evolve(
    cfg: &EvoConfig,
    sim: &SimConfig,
    config_hash: &str,
    mut observer: impl FnMut(&GenRecord),
) -> RunRecord {
    let d = genotype_len(cfg.n_inter);
    let elite_count = cfg.elite_count();

    // independent init stream per individual
    let mut population: Vec<Genotype> = (0..cfg.pop_size)
        .map(|i| {
            let mut rng = derived_rng(cfg.seed, b"init", 0, i as u64);
            Genotype { genes: (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect() }
        })
        .collect();
    let mut cached: Vec<Option<TaskFit>> = vec![None; cfg.pop_size];

    let mut record = RunRecord {
        seed: cfg.seed,
        config_hash: config_hash.to_string(),
        n_inter: cfg.n_inter,
        generations: Vec::new(),
    };

    for generation in 0..cfg.total_generations {
        let fits: Vec<TaskFit> = population
            .par_iter()
            .enumerate()
            .map(|(i, g)| evaluate_individual(g, cfg, sim, generation, i, cached[i]))
            .collect();
        let selection: Vec<f64> = fits
            .iter()
            .map(|f| fitness_for_generation(f, cfg.paradigm, generation))
            .collect();

        // rank by fitness descending; stable sort keeps index order on ties
        let mut order: Vec<usize> = (0..cfg.pop_size).collect();
        order.sort_by(|&a, &b| selection[b].partial_cmp(&selection[a]).unwrap());

        let best_i = order[0];
        let gen_record = GenRecord {
            generation,
            best: selection[best_i],
            mean: selection.iter().sum::<f64>() / cfg.pop_size as f64,
            worst: selection[*order.last().unwrap()],
            best_cat: fits[best_i].cat,
            best_pole: fits[best_i].pole,
            mean_cat: mean_of(fits.iter().map(|f| f.cat)),
            mean_pole: mean_of(fits.iter().map(|f| f.pole)),
            best_genotype: population[best_i].genes.clone(),
        };
        observer(&gen_record);
        let best = gen_record.best;
        record.generations.push(gen_record);
        if cfg.stop_at_fitness.is_some_and(|target| best >= target) {
            break;
        }
        if generation + 1 == cfg.total_generations {
            break;
        }

        // elites survive unchanged (with their fitness), the rest are
        // mutated copies of the elites, parents assigned round-robin
        let elites: Vec<Genotype> =
            order[..elite_count].iter().map(|&i| population[i].clone()).collect();
        let elite_fits: Vec<TaskFit> = order[..elite_count].iter().map(|&i| fits[i]).collect();
        let mut next_pop = Vec::with_capacity(cfg.pop_size);
        let mut next_cached = Vec::with_capacity(cfg.pop_size);
        for e in 0..elite_count {
            next_pop.push(elites[e].clone());
            next_cached.push(Some(elite_fits[e]));
        }
        for slot in elite_count..cfg.pop_size {
            let parent = &elites[(slot - elite_count) % elite_count];
            let mut rng = derived_rng(cfg.seed, b"mutate", generation + 1, slot as u64);
            next_pop.push(mutate(parent, cfg.mutation_variance, &mut rng));
            next_cached.push(None);
        }
        population = next_pop;
        cached = next_cached;
    }
    record
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Evaluate one unchanged genotype on both tasks (deterministic grids).
pub fn cross_evaluate(genotype: &Genotype, n_inter: usize, sim: &SimConfig) -> (f64, f64) {
    let params = decode_genotype(genotype, n_inter).expect("genotype length");
    let cat = evaluate_task::<ChaCha8Rng>(&params, Task::Categorization, sim, None);
    let pole = evaluate_task::<ChaCha8Rng>(&params, Task::PoleBalance, sim, None);
    (cat, pole)
}

/// Sample a random genotype, for the random-agent baseline.
pub fn random_genotype(n_inter: usize, seed: u64, index: u64) -> Genotype {
    let mut rng = derived_rng(seed, b"baseline", 0, index);
    let d = genotype_len(n_inter);
    Genotype { genes: (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect() }
}
