//! Oracle-driven evolution runs.
//!
//! Uses the same stream layout as interactive sessions (stream 0 for the
//! initial population, stream `G + 1` for the trials against generation
//! `G`), so a session scored by a monotone transform of an oracle evolves
//! exactly like the corresponding synthetic run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    init_population, propose_trials, step_generation, DeConfig, DeRng, EngineError, Fitness, Population,
};
use crate::fitness::{FitnessError, SyntheticOracle};
use crate::genome::{random_genome, Genome, SearchBounds};

/// Stream reserved for drawing hidden targets.
pub const TARGET_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRun {
    pub oracle: SyntheticOracle,
    pub de: DeConfig,
    pub bounds: SearchBounds,
    pub generations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub stats: Vec<GenerationStats>,
    pub best: Genome,
    pub best_fitness: f64,
    pub population: Population,
}

impl ConvergenceReport {
    /// Best fitness at generation 0 divided by the final best.
    pub fn improvement_factor(&self) -> f64 {
        let first = self.stats.first().map_or(f64::NAN, |s| s.best);
        first / self.best_fitness
    }

    /// Line-oriented report: a header comment, one `generation best mean`
    /// row per generation, then the final genome.
    pub fn to_text(&self, run: &SyntheticRun) -> String {
        let mut out = String::new();
        let oracle = match run.oracle {
            SyntheticOracle::Sphere => "sphere",
            SyntheticOracle::HiddenTarget { .. } => "hidden-target",
        };
        let _ = writeln!(
            out,
            "# oracle={oracle} dims={} pop={} gens={} F={} Cr={} seed={}",
            run.de.dimensions,
            run.de.population_size,
            run.generations,
            run.de.scale_factor,
            run.de.crossover_rate,
            run.de.seed
        );
        out.push_str("generation\tbest_f\tmean_f\n");
        for s in &self.stats {
            let _ = writeln!(out, "{}\t{:e}\t{:e}", s.generation, s.best, s.mean);
        }
        let _ = writeln!(out, "final_fitness\t{:e}", self.best_fitness);
        let genes: Vec<String> = self.best.genes().iter().map(|g| format!("{g:e}")).collect();
        let _ = writeln!(out, "final_genome\t{}", genes.join("\t"));
        out
    }
}

impl SyntheticOracle {
    /// Hidden target drawn from the run seed's reserved stream.
    pub fn hidden_target(seed: u64, bounds: &SearchBounds) -> Self {
        let mut rng = DeRng::for_stream(seed, TARGET_STREAM);
        SyntheticOracle::HiddenTarget { target: random_genome(&mut rng, bounds) }
    }
}

fn evaluate_all(oracle: &SyntheticOracle, genomes: &[&Genome]) -> Result<Vec<Option<Fitness>>, FitnessError> {
    genomes.iter().map(|g| oracle.evaluate(g).map(Some)).collect()
}

fn stats(pop: &Population) -> GenerationStats {
    GenerationStats {
        generation: pop.generation,
        best: pop.best().map_or(f64::NAN, |(_, f)| f.value()),
        mean: pop.mean_fitness().unwrap_or(f64::NAN),
    }
}

pub fn run(cfg: &SyntheticRun) -> Result<ConvergenceReport, SyntheticError> {
    let mut pop = init_population(&cfg.de, &cfg.bounds, &mut DeRng::for_stream(cfg.de.seed, 0))?;
    pop.fitness = evaluate_all(&cfg.oracle, &pop.members.iter().collect::<Vec<_>>())?;
    let mut history = vec![stats(&pop)];
    for _ in 0..cfg.generations {
        let mut rng = DeRng::for_stream(cfg.de.seed, pop.generation + 1);
        let mut trials = propose_trials(&pop, &cfg.de, &mut rng)?;
        for t in &mut trials {
            t.fitness = Some(cfg.oracle.evaluate(&t.trial)?);
        }
        pop = step_generation(&pop, &trials)?.0;
        history.push(stats(&pop));
    }
    let (slot, best) = pop.best().expect("population is scored");
    Ok(ConvergenceReport {
        stats: history,
        best: pop.members[slot].clone(),
        best_fitness: best.value(),
        population: pop,
    })
}
