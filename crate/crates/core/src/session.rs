//! Resumable human-in-the-loop evolution runs.
//!
//! A session walks a small state machine:
//!
//! ```text
//! scoring_initial --(all scored)--> ready_to_advance --advance--> scoring_trials
//!                                          ^                            |
//!                                          +-------(all scored)---------+
//! any state --finish--> finished
//! ```
//!
//! Round `0` asks for scores of the initial population. Every advance
//! commits the finished round (selection for trial rounds), then proposes
//! round `r + 1` from random stream `r + 1`. Trials that are bitwise equal
//! to an already-scored member inherit its fitness and are never shown as
//! pending.
//!
//! Evolution depends only on the seed, the config and the order and values
//! of submitted scores; timestamps are logged but ignored, so
//! [`Session::replay`] rebuilds the live state exactly.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    init_population, propose_trials, step_generation, DeConfig, DeRng, EngineError, Fitness, Population, RngPosition,
    Survivor, TrialCandidate,
};
use crate::expression::{ExpressionProfile, MIN_TPQN};
use crate::fitness::{fitness_to_score, CandidateId, FitnessError, HumanScore, ScoreBook, ScoreRange};
use crate::genome::{Genome, MelodyConfig, MelodyPhrase};
use crate::midi::{render_phrase, MidiError, MAX_TPQN};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("{} candidate(s) still need a score", .0.len())]
    Pending(Vec<CandidateId>),
    #[error("session is finished")]
    Finished,
    #[error("unknown candidate {0}")]
    UnknownCandidate(CandidateId),
    #[error(transparent)]
    Score(FitnessError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Midi(#[from] MidiError),
    #[error("session schema version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("corrupted session document: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<FitnessError> for SessionError {
    fn from(e: FitnessError) -> Self {
        match e {
            FitnessError::UnknownCandidate(id) => SessionError::UnknownCandidate(id),
            other => SessionError::Score(other),
        }
    }
}

fn derived_de() -> DeConfig {
    DeConfig { dimensions: 0, ..DeConfig::default() }
}

fn default_tpqn() -> u16 {
    480
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// `dimensions` may be left at 0; it is derived from the melody length.
    #[serde(default = "derived_de")]
    pub de: DeConfig,
    #[serde(default)]
    pub melody: MelodyConfig,
    #[serde(default)]
    pub expression: ExpressionProfile,
    #[serde(default)]
    pub score_range: ScoreRange,
    #[serde(default = "default_tpqn")]
    pub tpqn: u16,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let melody = MelodyConfig::default();
        Self {
            de: DeConfig { dimensions: melody.dimensions(), ..DeConfig::default() },
            melody,
            expression: ExpressionProfile::default(),
            score_range: ScoreRange::default(),
            tpqn: default_tpqn(),
        }
    }
}

impl SessionConfig {
    fn normalized(mut self) -> Self {
        if self.de.dimensions == 0 {
            self.de.dimensions = self.melody.dimensions();
        }
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.de.violations();
        if let Err(e) = self.melody.validate() {
            v.push(e.to_string());
        }
        if self.melody.bpm >= 1000.0 {
            v.push(format!("bpm {} must be below 1000", self.melody.bpm));
        }
        if self.de.dimensions != 0 && self.de.dimensions != self.melody.dimensions() {
            v.push(format!(
                "dimensions {} do not match {} notes ({} genes)",
                self.de.dimensions,
                self.melody.notes,
                self.melody.dimensions()
            ));
        }
        if let Err(e) = self.expression.validate() {
            v.push(e.to_string());
        }
        if !self.score_range.is_valid() {
            v.push(format!("score range [{}, {}] is empty", self.score_range.min, self.score_range.max));
        }
        if !(MIN_TPQN..=MAX_TPQN).contains(&self.tpqn) {
            v.push(format!("tpqn {} outside [{MIN_TPQN}, {MAX_TPQN}]", self.tpqn));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    ScoringInitial,
    ScoringTrials,
    ReadyToAdvance,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    Initial,
    Trials,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub slot: usize,
    pub genome: Genome,
    /// Fitness inherited from an identical, already-scored vector.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub generation: u64,
    pub kind: RoundKind,
    pub candidates: Vec<Candidate>,
    pub book: ScoreBook,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundScore {
    pub candidate_id: CandidateId,
    pub fitness: Fitness,
    pub cached: bool,
}

/// One committed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub generation: u64,
    pub scores: Vec<RoundScore>,
    /// Per-slot selection outcome; empty for the initial round.
    pub selections: Vec<Survivor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedScore {
    pub generation: u64,
    #[serde(flatten)]
    pub score: HumanScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub session_id: String,
    pub config: SessionConfig,
    pub state: SessionState,
    pub population: Population,
    /// Candidate id of the vector currently held in each slot.
    pub member_ids: Vec<CandidateId>,
    pub round: Round,
    pub rng: RngPosition,
    pub history: Vec<HistoryEntry>,
    pub score_log: Vec<LoggedScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub state: SessionState,
    pub generation: u64,
    pub population_generation: u64,
    pub population_size: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub rank: usize,
    pub candidate_id: CandidateId,
    pub slot: usize,
    pub fitness: Option<f64>,
    pub score: Option<f64>,
    pub genes: Vec<f64>,
    pub phrase: MelodyPhrase,
    /// SMF path relative to the export directory.
    pub midi_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub session_id: String,
    pub population_generation: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Session {
    pub fn create(cfg: SessionConfig) -> Result<Self, SessionError> {
        Self::create_with_id(cfg, uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn create_with_id(cfg: SessionConfig, session_id: String) -> Result<Self, SessionError> {
        let cfg = cfg.normalized();
        let violations = cfg.violations();
        if !violations.is_empty() {
            return Err(SessionError::InvalidConfig(violations));
        }
        let mut rng = DeRng::for_stream(cfg.de.seed, 0);
        let population = init_population(&cfg.de, &cfg.melody.sampling_bounds(), &mut rng)?;
        let candidates: Vec<Candidate> = population
            .members
            .iter()
            .enumerate()
            .map(|(slot, g)| Candidate { id: CandidateId::for_slot(0, slot), slot, genome: g.clone(), cached: false })
            .collect();
        let member_ids = candidates.iter().map(|c| c.id.clone()).collect();
        let book = ScoreBook::for_round(candidates.iter().map(|c| c.id.clone()).collect(), cfg.score_range);
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            session_id,
            state: SessionState::ScoringInitial,
            population,
            member_ids,
            round: Round { generation: 0, kind: RoundKind::Initial, candidates, book },
            rng: rng.position(),
            history: Vec::new(),
            score_log: Vec::new(),
            config: cfg,
        })
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            state: self.state,
            generation: self.round.generation,
            population_generation: self.population.generation,
            population_size: self.population.len(),
            pending: self.pending().len(),
        }
    }

    pub fn pending(&self) -> Vec<CandidateId> {
        if self.state == SessionState::Finished {
            return Vec::new();
        }
        self.round.book.pending()
    }

    /// Records a score for a candidate of the current round.
    pub fn submit_score(&mut self, score: HumanScore) -> Result<Vec<CandidateId>, SessionError> {
        if self.state == SessionState::Finished {
            return Err(SessionError::Finished);
        }
        self.round.book.ingest(&score)?;
        self.score_log.push(LoggedScore { generation: self.round.generation, score });
        if self.round.book.is_complete() {
            self.state = SessionState::ReadyToAdvance;
        }
        Ok(self.pending())
    }

    fn round_fitness(&self) -> Result<Vec<Fitness>, SessionError> {
        self.round
            .candidates
            .iter()
            .map(|c| self.round.book.get(&c.id).ok_or_else(|| SessionError::Pending(self.pending())))
            .collect()
    }

    /// Commits the current round and proposes the next one.
    pub fn advance(&mut self) -> Result<(), SessionError> {
        match self.state {
            SessionState::ReadyToAdvance => {}
            SessionState::Finished => return Err(SessionError::Finished),
            SessionState::ScoringInitial | SessionState::ScoringTrials => {
                return Err(SessionError::Pending(self.pending()))
            }
        }
        let fitness = self.round_fitness()?;
        let scores = self
            .round
            .candidates
            .iter()
            .zip(&fitness)
            .map(|(c, &f)| RoundScore { candidate_id: c.id.clone(), fitness: f, cached: c.cached })
            .collect();

        let (population, selections) = match self.round.kind {
            RoundKind::Initial => {
                let mut pop = self.population.clone();
                pop.fitness = fitness.iter().map(|&f| Some(f)).collect();
                (pop, Vec::new())
            }
            RoundKind::Trials => {
                let trials: Vec<TrialCandidate> = self
                    .round
                    .candidates
                    .iter()
                    .zip(&fitness)
                    .map(|(c, &f)| TrialCandidate { target_index: c.slot, trial: c.genome.clone(), fitness: Some(f) })
                    .collect();
                let (next, outcome) = step_generation(&self.population, &trials)?;
                for (slot, s) in outcome.iter().enumerate() {
                    if *s == Survivor::Trial {
                        self.member_ids[slot] = self.round.candidates[slot].id.clone();
                    }
                }
                (next, outcome)
            }
        };

        let generation = self.round.generation + 1;
        let mut rng = DeRng::for_stream(self.config.de.seed, generation);
        let trials = propose_trials(&population, &self.config.de, &mut rng)?;

        let candidates: Vec<Candidate> = trials
            .into_iter()
            .map(|t| {
                let cached = population.members.iter().any(|m| m.bit_eq(&t.trial));
                Candidate {
                    id: CandidateId::for_slot(generation, t.target_index),
                    slot: t.target_index,
                    genome: t.trial,
                    cached,
                }
            })
            .collect();
        let mut book = ScoreBook::for_round(candidates.iter().map(|c| c.id.clone()).collect(), self.config.score_range);
        for c in candidates.iter().filter(|c| c.cached) {
            let known = population
                .members
                .iter()
                .zip(&population.fitness)
                .find(|(m, _)| m.bit_eq(&c.genome))
                .and_then(|(_, f)| *f)
                .expect("population is fully scored");
            book.prefill(&c.id, known)?;
        }

        self.history.push(HistoryEntry { generation: self.round.generation, scores, selections });
        self.population = population;
        self.rng = rng.position();
        self.state = if book.is_complete() { SessionState::ReadyToAdvance } else { SessionState::ScoringTrials };
        self.round = Round { generation, kind: RoundKind::Trials, candidates, book };
        Ok(())
    }

    /// Ends the run and ranks the current population, best first.
    ///
    /// Calling it again returns the same manifest.
    pub fn finish(&mut self) -> Result<Manifest, SessionError> {
        self.state = SessionState::Finished;
        self.manifest()
    }

    pub fn manifest(&self) -> Result<Manifest, SessionError> {
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        // round 0 scores are not committed to the population until advance
        let fitness: Vec<Option<Fitness>> = match self.round.kind {
            RoundKind::Initial => self.member_ids.iter().map(|id| self.round.book.get(id)).collect(),
            RoundKind::Trials => self.population.fitness.clone(),
        };
        order.sort_by(|&a, &b| match (fitness[a], fitness[b]) {
            (Some(x), Some(y)) => x.partial_cmp(&y).expect("finite fitness"),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        let entries = order
            .into_iter()
            .enumerate()
            .map(|(rank, slot)| {
                let genome = &self.population.members[slot];
                let id = self.member_ids[slot].clone();
                Ok(ManifestEntry {
                    rank: rank + 1,
                    midi_file: format!("{id}.mid"),
                    candidate_id: id,
                    slot,
                    fitness: fitness[slot].map(Fitness::value),
                    score: fitness[slot].map(fitness_to_score),
                    genes: genome.genes().to_vec(),
                    phrase: self.config.melody.decode(genome).map_err(|e| SessionError::Corrupt(e.to_string()))?,
                })
            })
            .collect::<Result<_, SessionError>>()?;
        Ok(Manifest { session_id: self.session_id.clone(), population_generation: self.population.generation, entries })
    }

    /// Looks a candidate up in the current round, then among population members.
    pub fn candidate_genome(&self, id: &CandidateId) -> Option<&Genome> {
        self.round
            .candidates
            .iter()
            .find(|c| &c.id == id)
            .map(|c| &c.genome)
            .or_else(|| self.member_ids.iter().position(|m| m == id).map(|slot| &self.population.members[slot]))
    }

    pub fn phrase(&self, id: &CandidateId) -> Result<MelodyPhrase, SessionError> {
        let g = self.candidate_genome(id).ok_or_else(|| SessionError::UnknownCandidate(id.clone()))?;
        self.config.melody.decode(g).map_err(|e| SessionError::Corrupt(e.to_string()))
    }

    /// Renders a candidate with the session's expression profile.
    pub fn midi(&self, id: &CandidateId) -> Result<Vec<u8>, SessionError> {
        let phrase = self.phrase(id)?;
        Ok(render_phrase(&phrase, &self.config.expression, self.config.tpqn, 0)?)
    }

    /// Writes `manifest.json` and one SMF per ranked member into `dir`.
    pub fn export(&self, dir: &Path) -> Result<Manifest, SessionError> {
        let manifest = self.manifest()?;
        fs::create_dir_all(dir)?;
        for e in &manifest.entries {
            fs::write(dir.join(&e.midi_file), self.midi(&e.candidate_id)?)?;
        }
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        write_atomic(&dir.join("manifest.json"), &json)?;
        Ok(manifest)
    }

    pub fn save(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("session values are serialisable")
    }

    pub fn load(bytes: &[u8]) -> Result<Self, SessionError> {
        let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        let found = doc
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| SessionError::Corrupt("missing schema_version".into()))?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(SessionError::Version { found, expected: SCHEMA_VERSION });
        }
        let session: Session = serde_json::from_value(doc).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        session.check_consistency().map_err(SessionError::Corrupt)?;
        Ok(session)
    }

    /// Write-then-rename, so a crash never leaves a half-written document.
    pub fn save_to_path(&self, path: &Path) -> Result<(), SessionError> {
        Ok(write_atomic(path, &self.save())?)
    }

    pub fn load_from_path(path: &Path) -> Result<Self, SessionError> {
        Self::load(&fs::read(path)?)
    }

    fn check_consistency(&self) -> Result<(), String> {
        let violations = self.config.violations();
        if !violations.is_empty() {
            return Err(violations.join("; "));
        }
        let n = self.config.de.population_size;
        let d = self.config.de.dimensions;
        if self.population.len() != n || self.population.fitness.len() != n || self.member_ids.len() != n {
            return Err(format!("population does not have {n} slots"));
        }
        if self.population.members.iter().chain(self.round.candidates.iter().map(|c| &c.genome)).any(|g| g.len() != d) {
            return Err(format!("genome length differs from {d}"));
        }
        if self.round.candidates.len() != n
            || self.round.candidates.iter().enumerate().any(|(i, c)| c.slot != i)
            || self.round.book.round().iter().ne(self.round.candidates.iter().map(|c| &c.id))
        {
            return Err("round candidates do not match population slots".into());
        }
        if self.history.len() as u64 != self.round.generation {
            return Err("history length does not match generation".into());
        }
        Ok(())
    }

    /// Rebuilds the session from its seed, config and score log.
    pub fn replay(&self) -> Result<Session, SessionError> {
        let mut s = Session::create_with_id(self.config.clone(), self.session_id.clone())?;
        let mut log = self.score_log.iter().peekable();
        loop {
            while let Some(entry) = log.next_if(|e| e.generation == s.round.generation) {
                s.submit_score(entry.score.clone())?;
            }
            if s.history.len() < self.history.len() {
                s.advance()?;
            } else {
                break;
            }
        }
        if let Some(stray) = log.next() {
            return Err(SessionError::Corrupt(format!(
                "score for {} logged in round {} out of order",
                stray.score.candidate_id, stray.generation
            )));
        }
        if self.state == SessionState::Finished {
            s.finish()?;
        }
        Ok(s)
    }

    /// Differences between the live state and its replay; empty when they agree.
    pub fn replay_diff(&self) -> Vec<String> {
        match self.replay() {
            Ok(r) => diff(self, &r),
            Err(e) => vec![format!("replay failed: {e}")],
        }
    }
}

fn diff(live: &Session, replayed: &Session) -> Vec<String> {
    let mut out = Vec::new();
    if live.state != replayed.state {
        out.push(format!("state: live {:?}, replayed {:?}", live.state, replayed.state));
    }
    if !live.population.bit_eq(&replayed.population) {
        out.push(format!("population differs at generation {}", live.population.generation));
    }
    if live.member_ids != replayed.member_ids {
        out.push("member ids differ".into());
    }
    for (k, (a, b)) in live.history.iter().zip(&replayed.history).enumerate() {
        if a != b {
            for (x, y) in a.scores.iter().zip(&b.scores).filter(|(x, y)| x != y) {
                out.push(format!(
                    "history[{k}] {}: live fitness {}, replayed {}",
                    x.candidate_id,
                    x.fitness.value(),
                    y.fitness.value()
                ));
            }
            if a.selections != b.selections {
                out.push(format!("history[{k}] selections differ"));
            }
        }
    }
    if live.history.len() != replayed.history.len() {
        out.push(format!("history length: live {}, replayed {}", live.history.len(), replayed.history.len()));
    }
    if live.round != replayed.round {
        out.push(format!("round {} differs", live.round.generation));
    }
    if live.rng != replayed.rng {
        out.push("rng position differs".into());
    }
    out
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
