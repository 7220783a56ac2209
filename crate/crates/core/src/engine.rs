//! DE/rand/1/bin over real-valued genomes.
//!
//! One generation is `propose_trials` (index draw, differential mutation and
//! binomial crossover for every slot), external scoring of the trials, then
//! `step_generation` (greedy per-slot selection). The objective is minimised.
//!
//! Randomness comes through [`DrawSource`] so tests can script every draw.
//! Production runs use [`DeRng`], a ChaCha stream keyed by the run seed with
//! one independent stream per generation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{random_genome, Genome, SearchBounds};

pub const MIN_POPULATION: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid DE configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("invalid mutation draw ({r1}, {r2}, {r3}) for target {target} in population of {size}")]
    InvalidDraw { target: usize, r1: usize, r2: usize, r3: usize, size: usize },
    #[error("genome length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("slot {0} has no fitness")]
    Unscored(usize),
    #[error("expected {expected} trials, got {actual}")]
    TrialCount { expected: usize, actual: usize },
    #[error("trial at position {position} targets slot {target}")]
    TrialOrder { position: usize, target: usize },
    #[error("mutation produced a non-finite gene in slot {0}")]
    NonFinite(usize),
    #[error("fitness value must be finite, got {0}")]
    NonFiniteFitness(f64),
}

/// Objective value; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Fitness(f64);

impl Fitness {
    pub fn new(value: f64) -> Result<Self, EngineError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(EngineError::NonFiniteFitness(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Fitness {
    type Error = EngineError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Fitness::new(v)
    }
}

impl From<Fitness> for f64 {
    fn from(f: Fitness) -> f64 {
        f.0
    }
}

/// Omitted fields take their defaults, except `dimensions`, which reads as 0
/// so that sessions can derive it from the melody length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub population_size: usize,
    /// Differential weight `F`.
    #[serde(rename = "F")]
    pub scale_factor: f64,
    /// Crossover probability `Cr`.
    #[serde(rename = "Cr")]
    pub crossover_rate: f64,
    #[serde(default)]
    pub dimensions: usize,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { population_size: 12, scale_factor: 0.5, crossover_rate: 0.9, dimensions: 48, seed: 0 }
    }
}

impl DeConfig {
    /// Lists every violated constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.population_size < MIN_POPULATION {
            v.push(format!("population_size must be at least {MIN_POPULATION}, got {}", self.population_size));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 2.0) {
            v.push(format!("F must be in (0, 2], got {}", self.scale_factor));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            v.push(format!("Cr must be in [0, 1], got {}", self.crossover_rate));
        }
        if self.dimensions == 0 {
            v.push("dimensions must be positive".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(EngineError::InvalidConfig(v))
        }
    }
}

/// Source of the two kinds of random draws the algorithm consumes.
pub trait DrawSource {
    /// Uniform integer in `0..n`.
    fn index(&mut self, n: usize) -> usize;
    /// Uniform real in `[0, 1)`.
    fn unit(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> DrawSource for R {
    fn index(&mut self, n: usize) -> usize {
        self.gen_range(0..n)
    }

    fn unit(&mut self) -> f64 {
        self.gen::<f64>()
    }
}

/// Position inside the run's random stream family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngPosition {
    pub stream: u64,
    /// 32-bit words consumed from the stream.
    pub word_pos: u64,
}

/// Seeded generator with one ChaCha stream per generation.
///
/// Stream 0 initialises the population; the trials scored against
/// generation `G` are proposed from stream `G + 1`.
#[derive(Debug, Clone)]
pub struct DeRng {
    inner: ChaCha8Rng,
}

impl DeRng {
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn restore(seed: u64, pos: RngPosition) -> Self {
        let mut rng = Self::for_stream(seed, pos.stream);
        rng.inner.set_word_pos(u128::from(pos.word_pos));
        rng
    }

    pub fn position(&self) -> RngPosition {
        let word_pos = u64::try_from(self.inner.get_word_pos()).expect("a generation never exhausts 2^64 words");
        RngPosition { stream: self.inner.get_stream(), word_pos }
    }
}

impl RngCore for DeRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: u64,
    pub members: Vec<Genome>,
    pub fitness: Vec<Option<Fitness>>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dimensions(&self) -> usize {
        self.members.first().map_or(0, Genome::len)
    }

    pub fn is_fully_scored(&self) -> bool {
        self.fitness.iter().all(Option::is_some)
    }

    /// Slot and value of the lowest fitness, first slot on ties.
    pub fn best(&self) -> Option<(usize, Fitness)> {
        self.fitness.iter().enumerate().filter_map(|(i, f)| f.map(|f| (i, f))).fold(None, |acc, (i, f)| match acc {
            Some((_, b)) if b <= f => acc,
            _ => Some((i, f)),
        })
    }

    pub fn mean_fitness(&self) -> Option<f64> {
        let scored: Vec<f64> = self.fitness.iter().flatten().map(|f| f.value()).collect();
        (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64)
    }

    /// Bitwise equality of generation, genes and fitness.
    pub fn bit_eq(&self, other: &Population) -> bool {
        self.generation == other.generation
            && self.members.len() == other.members.len()
            && self.members.iter().zip(&other.members).all(|(a, b)| a.bit_eq(b))
            && self.fitness.len() == other.fitness.len()
            && self.fitness.iter().zip(&other.fitness).all(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => a.value().to_bits() == b.value().to_bits(),
                (None, None) => true,
                _ => false,
            })
    }
}

/// Donor indices for one mutant vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationDraw {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

impl MutationDraw {
    pub fn is_valid_for(&self, target: usize, size: usize) -> bool {
        let MutationDraw { r1, r2, r3 } = *self;
        r1 < size && r2 < size && r3 < size && r1 != r2 && r1 != r3 && r2 != r3 && ![r1, r2, r3].contains(&target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCandidate {
    pub target_index: usize,
    pub trial: Genome,
    pub fitness: Option<Fitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Survivor {
    Target,
    Trial,
}

pub fn init_population<R: Rng + ?Sized>(
    cfg: &DeConfig,
    bounds: &SearchBounds,
    rng: &mut R,
) -> Result<Population, EngineError> {
    cfg.validate()?;
    if bounds.dimensions() != cfg.dimensions {
        return Err(EngineError::LengthMismatch { expected: cfg.dimensions, actual: bounds.dimensions() });
    }
    let members: Vec<Genome> = (0..cfg.population_size).map(|_| random_genome(rng, bounds)).collect();
    Ok(Population { generation: 0, fitness: vec![None; members.len()], members })
}

/// Three distinct donors, none equal to `target`, uniform over ordered triples.
pub fn draw_indices<D: DrawSource + ?Sized>(draws: &mut D, size: usize, target: usize) -> MutationDraw {
    assert!(size >= MIN_POPULATION && target < size, "population too small for DE/rand/1");
    let mut pool: Vec<usize> = (0..size).filter(|&k| k != target).collect();
    let mut pick = || {
        let k = draws.index(pool.len());
        pool.remove(k)
    };
    let r1 = pick();
    let r2 = pick();
    let r3 = pick();
    MutationDraw { r1, r2, r3 }
}

/// `x_r1 + F * (x_r2 - x_r3)`, component-wise, without clamping.
pub fn mutate(pop: &Population, target: usize, draw: MutationDraw, f: f64) -> Result<Genome, EngineError> {
    if !draw.is_valid_for(target, pop.len()) {
        return Err(EngineError::InvalidDraw { target, r1: draw.r1, r2: draw.r2, r3: draw.r3, size: pop.len() });
    }
    let (a, b, c) = (&pop.members[draw.r1], &pop.members[draw.r2], &pop.members[draw.r3]);
    let genes = a.genes().iter().zip(b.genes()).zip(c.genes()).map(|((x1, x2), x3)| x1 + f * (x2 - x3)).collect();
    Genome::new(genes).map_err(|_| EngineError::NonFinite(target))
}

/// Binomial crossover with one forced mutant component.
///
/// Draw order: the forced index `j_rand` first, then one uniform per
/// component in gene order.
pub fn crossover<D: DrawSource + ?Sized>(
    target: &Genome,
    mutant: &Genome,
    cr: f64,
    draws: &mut D,
) -> Result<Genome, EngineError> {
    if target.len() != mutant.len() {
        return Err(EngineError::LengthMismatch { expected: target.len(), actual: mutant.len() });
    }
    let forced = draws.index(target.len());
    let genes = target
        .genes()
        .iter()
        .zip(mutant.genes())
        .enumerate()
        .map(|(j, (&x, &v))| {
            let r = draws.unit();
            if r <= cr || j == forced {
                v
            } else {
                x
            }
        })
        .collect();
    Ok(Genome::new(genes).expect("components come from finite parents"))
}

/// Greedy selection; ties keep the trial.
pub fn select(
    target_fitness: Option<Fitness>,
    trial_fitness: Option<Fitness>,
    slot: usize,
) -> Result<Survivor, EngineError> {
    let target = target_fitness.ok_or(EngineError::Unscored(slot))?;
    let trial = trial_fitness.ok_or(EngineError::Unscored(slot))?;
    Ok(if trial <= target { Survivor::Trial } else { Survivor::Target })
}

pub fn propose_trials<D: DrawSource + ?Sized>(
    pop: &Population,
    cfg: &DeConfig,
    draws: &mut D,
) -> Result<Vec<TrialCandidate>, EngineError> {
    cfg.validate()?;
    if pop.len() != cfg.population_size {
        return Err(EngineError::TrialCount { expected: cfg.population_size, actual: pop.len() });
    }
    if let Some(slot) = pop.fitness.iter().position(Option::is_none) {
        return Err(EngineError::Unscored(slot));
    }
    (0..pop.len())
        .map(|i| {
            let draw = draw_indices(draws, pop.len(), i);
            let mutant = mutate(pop, i, draw, cfg.scale_factor)?;
            let trial = crossover(&pop.members[i], &mutant, cfg.crossover_rate, draws)?;
            Ok(TrialCandidate { target_index: i, trial, fitness: None })
        })
        .collect()
}

/// Applies selection to every slot and returns generation `G + 1`.
pub fn step_generation(
    pop: &Population,
    trials: &[TrialCandidate],
) -> Result<(Population, Vec<Survivor>), EngineError> {
    if trials.len() != pop.len() {
        return Err(EngineError::TrialCount { expected: pop.len(), actual: trials.len() });
    }
    let mut next = Population {
        generation: pop.generation + 1,
        members: Vec::with_capacity(pop.len()),
        fitness: Vec::with_capacity(pop.len()),
    };
    let mut outcome = Vec::with_capacity(pop.len());
    for (i, t) in trials.iter().enumerate() {
        if t.target_index != i {
            return Err(EngineError::TrialOrder { position: i, target: t.target_index });
        }
        if t.trial.len() != pop.members[i].len() {
            return Err(EngineError::LengthMismatch { expected: pop.members[i].len(), actual: t.trial.len() });
        }
        let survivor = select(pop.fitness[i], t.fitness, i)?;
        let (genome, fitness) = match survivor {
            Survivor::Trial => (t.trial.clone(), t.fitness),
            Survivor::Target => (pop.members[i].clone(), pop.fitness[i]),
        };
        next.members.push(genome);
        next.fitness.push(fitness);
        outcome.push(survivor);
    }
    Ok((next, outcome))
}
