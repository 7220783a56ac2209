//! Human scores and synthetic objectives mapped onto the minimised fitness.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Fitness;
use crate::genome::Genome;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitnessError {
    #[error("unknown candidate {0}")]
    UnknownCandidate(CandidateId),
    #[error("score {score} outside the accepted range [{min}, {max}]")]
    OutOfRange { score: f64, min: f64, max: f64 },
    #[error("oracle expects {expected} genes, got {actual}")]
    Dimension { expected: usize, actual: usize },
}

/// Stable identifier of a candidate within a session, e.g. `g3-s07`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub String);

impl CandidateId {
    pub fn for_slot(generation: u64, slot: usize) -> Self {
        Self(format!("g{generation}-s{slot:02}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CandidateId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub candidate_id: CandidateId,
    pub score: f64,
    /// Unix time in milliseconds. Logged only; never influences evolution.
    pub submitted_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl Default for ScoreRange {
    fn default() -> Self {
        Self { min: 0.0, max: 10.0 }
    }
}

impl ScoreRange {
    pub fn check(&self, score: f64) -> Result<(), FitnessError> {
        if score.is_finite() && score >= self.min && score <= self.max {
            Ok(())
        } else {
            Err(FitnessError::OutOfRange { score, min: self.min, max: self.max })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min < self.max
    }
}

/// Fitness for one scoring round, keyed by candidate.
///
/// Scores are stored negated so that a higher human rating is a lower
/// (better) fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBook {
    range: ScoreRange,
    round: Vec<CandidateId>,
    entries: BTreeMap<CandidateId, Fitness>,
}

impl ScoreBook {
    pub fn for_round(round: Vec<CandidateId>, range: ScoreRange) -> Self {
        Self { range, round, entries: BTreeMap::new() }
    }

    pub fn range(&self) -> ScoreRange {
        self.range
    }

    pub fn round(&self) -> &[CandidateId] {
        &self.round
    }

    /// Last write wins on resubmission.
    pub fn ingest(&mut self, s: &HumanScore) -> Result<Fitness, FitnessError> {
        if !self.round.contains(&s.candidate_id) {
            return Err(FitnessError::UnknownCandidate(s.candidate_id.clone()));
        }
        self.range.check(s.score)?;
        let f = score_to_fitness(s.score);
        self.entries.insert(s.candidate_id.clone(), f);
        Ok(f)
    }

    /// Records a fitness already known for this vector without asking the user again.
    pub fn prefill(&mut self, id: &CandidateId, f: Fitness) -> Result<(), FitnessError> {
        if !self.round.contains(id) {
            return Err(FitnessError::UnknownCandidate(id.clone()));
        }
        self.entries.insert(id.clone(), f);
        Ok(())
    }

    pub fn get(&self, id: &CandidateId) -> Option<Fitness> {
        self.entries.get(id).copied()
    }

    pub fn pending(&self) -> Vec<CandidateId> {
        pending(self, &self.round)
    }

    pub fn is_complete(&self) -> bool {
        self.round.iter().all(|id| self.entries.contains_key(id))
    }
}

/// Candidates of `round` lacking a score, in slot order.
pub fn pending(book: &ScoreBook, round: &[CandidateId]) -> Vec<CandidateId> {
    round.iter().filter(|id| !book.entries.contains_key(*id)).cloned().collect()
}

pub fn score_to_fitness(score: f64) -> Fitness {
    Fitness::new(-score).expect("validated scores are finite")
}

pub fn fitness_to_score(f: Fitness) -> f64 {
    -f.value()
}

/// Stand-in objectives for automated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticOracle {
    /// Sum of squares.
    Sphere,
    /// Squared distance to a hidden reference genome.
    HiddenTarget { target: Genome },
}

impl SyntheticOracle {
    pub fn evaluate(&self, g: &Genome) -> Result<Fitness, FitnessError> {
        let value = match self {
            SyntheticOracle::Sphere => g.genes().iter().map(|x| x * x).sum(),
            SyntheticOracle::HiddenTarget { target } => {
                if target.len() != g.len() {
                    return Err(FitnessError::Dimension { expected: target.len(), actual: g.len() });
                }
                g.genes().iter().zip(target.genes()).map(|(x, t)| (x - t) * (x - t)).sum()
            }
        };
        // squares of finite genes can still overflow
        Ok(Fitness::new(value).unwrap_or(Fitness::new(f64::MAX).expect("finite")))
    }
}

pub fn eval_oracle(oracle: &SyntheticOracle, g: &Genome) -> Result<Fitness, FitnessError> {
    oracle.evaluate(g)
}
