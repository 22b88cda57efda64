//! Experiment driver: seeded evolution runs, genome evaluation,
//! cross-task evaluation, and dynamical analysis, all persisted as
//! JSON/JSONL/CSV for external plotting.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use minicog::artifacts::{
    aligned_transient_csv, attractor_csv, trajectory_csv, GenomeFile, RunLogWriter, RunSummary,
    TrialSidecar,
};
use minicog::config::ExperimentConfig;
use minicog::ctrnn::{decode_genotype, AgentParams};
use minicog::dynamics::{
    basin_census, build_attractor_set, compare_attractor_sets, match_transients, sensory_context,
    state_grid, static_conditions, trajectory_conditions, AttractorSet, Behavior, InputCondition,
};
use minicog::embodiment::{
    categorization_trials, pole_trials, run_trial, SimConfig, TrialResult, TrialSpec,
};
use minicog::evolution::{
    cross_evaluate, derived_run_seed, evolve, random_genotype, RunRecord,
};

#[derive(Parser)]
#[command(name = "minicog", version, about = "Multifunctional embodied CTRNN agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolutionary optimization and persist the run record.
    Evolve {
        /// Experiment config (TOML or JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (one subdirectory per run in batch mode).
        #[arg(long)]
        out: PathBuf,
        /// Number of independent runs; per-run seeds derive from the
        /// master seed.
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the full trial grid for one task and dump trajectories.
    Evaluate {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate genomes on both tasks, regardless of what they were
    /// trained on.
    CrossEval {
        /// A single genome file...
        #[arg(long)]
        genome: Option<PathBuf>,
        /// ...or a directory of run outputs (each containing best_genome.json).
        #[arg(long)]
        run_dir: Option<PathBuf>,
        /// Also score this many random-genotype baseline agents.
        #[arg(long, default_value_t = 0)]
        baseline: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Attractor, basin, or transient analysis of one genome.
    Analyze {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long, value_enum)]
        mode: AnalyzeMode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// First behavior for transient matching.
        #[arg(long, value_enum, default_value_t = BehaviorArg::CircleCatch)]
        behavior_a: BehaviorArg,
        /// Second behavior for transient matching.
        #[arg(long, value_enum, default_value_t = BehaviorArg::Pole)]
        behavior_b: BehaviorArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Categorization,
    Pole,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeMode {
    Attractors,
    Basins,
    Transients,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum BehaviorArg {
    CircleCatch,
    LineAvoid,
    Pole,
}

impl From<BehaviorArg> for Behavior {
    fn from(b: BehaviorArg) -> Behavior {
        match b {
            BehaviorArg::CircleCatch => Behavior::CircleCatch,
            BehaviorArg::LineAvoid => Behavior::LineAvoid,
            BehaviorArg::Pole => Behavior::PoleBalance,
        }
    }
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("MINICOG_THREADS") {
        let n: usize = threads.parse().context("MINICOG_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Evolve { config, out, runs, seed, quiet } => cmd_evolve(config, out, runs, seed, quiet),
        Command::Evaluate { genome, task, out, config } => cmd_evaluate(genome, task, out, config),
        Command::CrossEval { genome, run_dir, baseline, out, config, seed } => {
            cmd_cross_eval(genome, run_dir, baseline, out, config, seed)
        }
        Command::Analyze { genome, mode, out, config, behavior_a, behavior_b } => {
            cmd_analyze(genome, mode, out, config, behavior_a, behavior_b)
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(Into::into),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_evolve(
    config: Option<PathBuf>,
    out: PathBuf,
    runs: u64,
    seed: Option<u64>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(s) = seed {
        cfg.evo.seed = s;
    }
    let master_seed = cfg.evo.seed;
    std::fs::create_dir_all(&out)?;
    for run_i in 0..runs {
        let run_dir = if runs == 1 { out.clone() } else { out.join(format!("run_{run_i:03}")) };
        std::fs::create_dir_all(&run_dir)?;
        let mut run_cfg = cfg.clone();
        if runs > 1 {
            run_cfg.evo.seed = derived_run_seed(master_seed, run_i);
        }
        let hash = run_cfg.hash();
        write_json(&run_dir.join("config.json"), &run_cfg)?;
        let mut log = RunLogWriter::create(&run_dir.join("run.jsonl"))?;
        let record = evolve(&run_cfg.evo, &run_cfg.sim, &hash, |gen| {
            log.write(gen).expect("run log write");
            if !quiet {
                println!(
                    "run {run_i} gen {:4}  best {:.4}  mean {:.4}",
                    gen.generation, gen.best, gen.mean
                );
            }
        });
        log.finish()?;
        persist_run(&run_dir, &record, &run_cfg)?;
        println!(
            "run {run_i}: {} generations, best fitness {:.4} -> {}",
            record.generations.len(),
            record.final_best(),
            run_dir.display()
        );
    }
    Ok(())
}

fn persist_run(run_dir: &Path, record: &RunRecord, cfg: &ExperimentConfig) -> Result<()> {
    if let Some(best) = record.best_genotype() {
        let mut genome = GenomeFile::new(&best, cfg.evo.n_inter);
        genome.config_hash = Some(record.config_hash.clone());
        genome.seed = Some(record.seed);
        genome.save(&run_dir.join("best_genome.json"))?;
    }
    write_json(&run_dir.join("summary.json"), &RunSummary::from_record(record))
}

fn load_agent(path: &Path) -> Result<(GenomeFile, AgentParams)> {
    let genome = GenomeFile::load(path)?;
    let params = decode_genotype(&genome.genotype(), genome.n_inter)?;
    Ok((genome, params))
}

fn cmd_evaluate(
    genome_path: PathBuf,
    task: TaskArg,
    out: PathBuf,
    config: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(config.as_ref())?;
    let hash = cfg.hash();
    let (_, params) = load_agent(&genome_path)?;
    std::fs::create_dir_all(&out)?;
    let specs = match task {
        TaskArg::Categorization => categorization_trials::<rand_chacha::ChaCha8Rng>(&cfg.sim, None),
        TaskArg::Pole => pole_trials(&cfg.sim),
    };
    let mut results = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let result = run_trial(&params, spec, &cfg.sim, true)?;
        println!("trial {i:2}  {:?}  score {:.4}  {:?}", spec, result.score, result.termination);
        std::fs::write(out.join(format!("trial_{i:02}.csv")), trajectory_csv(&result, params.n_inter))?;
        write_json(
            &out.join(format!("trial_{i:02}.json")),
            &TrialSidecar {
                spec: *spec,
                score: result.score,
                termination: result.termination,
                config_hash: hash.clone(),
            },
        )?;
        results.push(result.score);
    }
    let mean = results.iter().sum::<f64>() / results.len() as f64;
    println!("task fitness: {mean:.4}");
    write_json(
        &out.join("report.json"),
        &serde_json::json!({
            "task": match task { TaskArg::Categorization => "categorization", TaskArg::Pole => "pole" },
            "config_hash": hash,
            "trial_scores": results,
            "fitness": mean,
        }),
    )
}

fn cmd_cross_eval(
    genome: Option<PathBuf>,
    run_dir: Option<PathBuf>,
    baseline: u64,
    out: PathBuf,
    config: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = load_config(config.as_ref())?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    if let Some(path) = genome {
        let g = GenomeFile::load(&path)?;
        let (cat, pole) = cross_evaluate(&g.genotype(), g.n_inter, &cfg.sim);
        rows.push((path.display().to_string(), cat, pole));
    }
    if let Some(dir) = run_dir {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join("best_genome.json").exists())
            .collect();
        entries.sort();
        if dir.join("best_genome.json").exists() {
            entries.push(dir.clone());
        }
        for p in entries {
            let g = GenomeFile::load(&p.join("best_genome.json"))?;
            let (cat, pole) = cross_evaluate(&g.genotype(), g.n_inter, &cfg.sim);
            rows.push((p.display().to_string(), cat, pole));
        }
    }
    let base_seed = seed.unwrap_or(cfg.evo.seed);
    for i in 0..baseline {
        let g = random_genotype(cfg.evo.n_inter, base_seed, i);
        let (cat, pole) = cross_evaluate(&g, cfg.evo.n_inter, &cfg.sim);
        rows.push((format!("random_{i}"), cat, pole));
    }
    if rows.is_empty() {
        bail!("nothing to evaluate: pass --genome, --run-dir, or --baseline");
    }
    let mut csv = String::from("source,cat_fitness,pole_fitness\n");
    for (name, cat, pole) in &rows {
        println!("{name}: categorization {cat:.4}, pole {pole:.4}");
        csv.push_str(&format!("{name},{cat},{pole}\n"));
    }
    std::fs::write(&out, csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Representative recorded trials for a behavior, reusing the standard
/// evaluation grids.
fn behavior_trials(
    params: &AgentParams,
    behavior: Behavior,
    sim: &SimConfig,
) -> Result<Vec<TrialResult>> {
    let specs: Vec<TrialSpec> = match behavior {
        Behavior::CircleCatch => categorization_trials::<rand_chacha::ChaCha8Rng>(sim, None)
            .into_iter()
            .filter(|s| matches!(s, TrialSpec::Catch { .. }))
            .collect(),
        Behavior::LineAvoid => categorization_trials::<rand_chacha::ChaCha8Rng>(sim, None)
            .into_iter()
            .filter(|s| matches!(s, TrialSpec::Avoid { .. }))
            .collect(),
        Behavior::PoleBalance => pole_trials(sim),
    };
    specs
        .iter()
        .map(|s| run_trial(params, s, sim, true).map_err(Into::into))
        .collect()
}

fn behavior_attractor_set(
    params: &AgentParams,
    behavior: Behavior,
    cfg: &ExperimentConfig,
) -> Result<AttractorSet> {
    let mut conditions: Vec<InputCondition> = static_conditions(behavior, &cfg.sim);
    let mut initial_states = state_grid(
        params.n_inter,
        cfg.analysis.grid_points_per_dim,
        cfg.analysis.state_range,
    );
    for traj in behavior_trials(params, behavior, &cfg.sim)? {
        let (conds, states) = trajectory_conditions(behavior, &traj, &cfg.analysis);
        for c in conds {
            if !conditions.iter().any(|x| x.inputs == c.inputs) {
                conditions.push(c);
            }
        }
        initial_states.extend(states);
    }
    Ok(build_attractor_set(params, behavior, &conditions, &initial_states, &cfg.analysis))
}

fn cmd_analyze(
    genome_path: PathBuf,
    mode: AnalyzeMode,
    out: PathBuf,
    config: Option<PathBuf>,
    behavior_a: BehaviorArg,
    behavior_b: BehaviorArg,
) -> Result<()> {
    let cfg = load_config(config.as_ref())?;
    let hash = cfg.hash();
    let (genome, params) = load_agent(&genome_path)?;
    std::fs::create_dir_all(&out)?;
    match mode {
        AnalyzeMode::Attractors => {
            let behaviors = [Behavior::CircleCatch, Behavior::LineAvoid, Behavior::PoleBalance];
            let mut sets = Vec::new();
            for b in behaviors {
                let set = behavior_attractor_set(&params, b, &cfg)?;
                println!(
                    "{b:?}: {} attractors ({} non-convergent settles)",
                    set.attractors.len(),
                    set.non_convergent
                );
                if set.non_convergent > 0 {
                    eprintln!("warning: {} settles did not converge for {b:?}", set.non_convergent);
                }
                sets.push(set);
            }
            let mut comparisons = Vec::new();
            for i in 0..sets.len() {
                for j in (i + 1)..sets.len() {
                    let cmp = compare_attractor_sets(&sets[i], &sets[j], cfg.analysis.eps_loc);
                    println!(
                        "{:?} vs {:?}: {} shared, {} + {} unique",
                        sets[i].behavior,
                        sets[j].behavior,
                        cmp.shared.len(),
                        cmp.only_a.len(),
                        cmp.only_b.len()
                    );
                    comparisons.push(serde_json::json!({
                        "a": sets[i].behavior,
                        "b": sets[j].behavior,
                        "comparison": cmp,
                    }));
                }
            }
            write_json(
                &out.join("attractors.json"),
                &serde_json::json!({
                    "config_hash": hash,
                    "genome_seed": genome.seed,
                    "sets": sets,
                    "comparisons": comparisons,
                }),
            )?;
            let set_refs: Vec<&AttractorSet> = sets.iter().collect();
            std::fs::write(out.join("attractors.csv"), attractor_csv(&set_refs))?;
        }
        AnalyzeMode::Basins => {
            let behaviors = [Behavior::CircleCatch, Behavior::LineAvoid, Behavior::PoleBalance];
            let grid = state_grid(
                params.n_inter,
                cfg.analysis.grid_points_per_dim * 2 + 1,
                cfg.analysis.state_range,
            );
            let mut report = Vec::new();
            for b in behaviors {
                for cond in static_conditions(b, &cfg.sim) {
                    let set = build_attractor_set(
                        &params,
                        b,
                        std::slice::from_ref(&cond),
                        &grid,
                        &cfg.analysis,
                    );
                    let census = basin_census(&params, &cond.inputs, &set.attractors, &grid, &cfg.analysis);
                    if census.non_convergent > 0 {
                        eprintln!(
                            "warning: {} grid points did not converge ({})",
                            census.non_convergent, cond.provenance
                        );
                    }
                    report.push(serde_json::json!({
                        "behavior": b,
                        "provenance": cond.provenance,
                        "inputs": cond.inputs,
                        "attractors": set.attractors,
                        "census": census,
                    }));
                }
            }
            write_json(
                &out.join("basins.json"),
                &serde_json::json!({ "config_hash": hash, "conditions": report }),
            )?;
        }
        AnalyzeMode::Transients => {
            if behavior_a == behavior_b {
                bail!("transient matching needs two different behaviors");
            }
            let trial_for = |b: BehaviorArg| -> TrialSpec {
                match b {
                    BehaviorArg::CircleCatch => TrialSpec::Catch { offset: 0.0 },
                    BehaviorArg::LineAvoid => TrialSpec::Avoid { offset: 0.0 },
                    BehaviorArg::Pole => {
                        TrialSpec::Pole { theta0: 4.5_f64.to_radians(), omega0: 0.1 }
                    }
                }
            };
            let ta = run_trial(&params, &trial_for(behavior_a), &cfg.sim, true)?;
            let tb = run_trial(&params, &trial_for(behavior_b), &cfg.sim, true)?;
            let outputs = |t: &TrialResult| -> Vec<Vec<f64>> {
                t.trajectory.iter().map(|s| params.interneuron_outputs(&s.s_inter)).collect()
            };
            let (sa, sb) = (outputs(&ta), outputs(&tb));
            let shift_range = sa.len().max(sb.len()) as f64 * cfg.sim.dt;
            let matches = match_transients(
                &sa,
                &sb,
                cfg.analysis.match_window,
                shift_range,
                cfg.analysis.match_tol,
                cfg.sim.dt,
            );
            println!("{} matched windows", matches.len());
            let mut contexts = Vec::new();
            if let Some(top) = matches.first() {
                println!(
                    "longest: {:.1} time units at shift {:.1} (A t={:.1}, B t={:.1})",
                    top.duration, top.shift, top.t_a, top.t_b
                );
                std::fs::write(
                    out.join("aligned_top_match.csv"),
                    aligned_transient_csv(&sa, &sb, top, cfg.sim.dt),
                )?;
                contexts.push(serde_json::json!({
                    "series": "a",
                    "stats": sensory_context(&ta, top.t_a, top.t_a + top.duration),
                }));
                contexts.push(serde_json::json!({
                    "series": "b",
                    "stats": sensory_context(&tb, top.t_b, top.t_b + top.duration),
                }));
            }
            write_json(
                &out.join("transients.json"),
                &serde_json::json!({
                    "config_hash": hash,
                    "behavior_a": Behavior::from(behavior_a),
                    "behavior_b": Behavior::from(behavior_b),
                    "matches": matches,
                    "sensory_context": contexts,
                }),
            )?;
        }
    }
    Ok(())
}
