//! Interactive melody evolution with differential evolution.
//!
//! Melodies are flat real vectors (`[pitch, duration, velocity]` per note)
//! evolved with DE/rand/1/bin. Fitness comes from a person scoring each
//! candidate, or from a synthetic objective in automated runs. Results are
//! written as Standard MIDI Files, optionally with performance expression.
//!
//! - [`genome`]: vector layout and decoding onto a key, register and duration grid
//! - [`engine`]: initialisation, mutation, crossover and selection
//! - [`fitness`]: human score book and synthetic oracles
//! - [`expression`]: velocity, aftertouch, vibrato, brightness and release shaping
//! - [`midi`]: format-0 SMF writer
//! - [`session`]: resumable scoring rounds with replayable history
//! - [`service`]: HTTP API over sessions
//! - [`synthetic`]: oracle-driven runs and convergence reports
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod engine;
pub mod expression;
pub mod fitness;
pub mod genome;
pub mod midi;
pub mod service;
pub mod session;
pub mod synthetic;

pub use engine::{DeConfig, Fitness, Population};
pub use fitness::{CandidateId, HumanScore, SyntheticOracle};
pub use genome::{Genome, MelodyConfig, MelodyPhrase};
pub use session::{Session, SessionConfig};
