//! Walks a session through a few rounds, saving and reloading between
//! rounds the way the service does, then exports the ranked population.
//!
//! Scores come from a stand-in "listener" that likes high, short, loud
//! notes; a real run would collect them from a person.
//!
//! ```text
//! cargo run --example interactive_session -- [output-dir]
//! ```

use std::path::PathBuf;

use evomelody::engine::DeConfig;
use evomelody::fitness::HumanScore;
use evomelody::genome::MelodyConfig;
use evomelody::session::{Session, SessionConfig};

fn listener(s: &Session, id: &evomelody::fitness::CandidateId) -> f64 {
    let phrase = s.phrase(id).unwrap();
    let taste: f64 = phrase
        .notes
        .iter()
        .map(|n| f64::from(n.pitch) / 84.0 + f64::from(n.velocity) / 127.0 - n.duration)
        .sum::<f64>()
        / phrase.notes.len() as f64;
    ((taste - 0.8).clamp(0.0, 1.0) * 20.0).round() / 2.0
}

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("evomelody-demo"));
    std::fs::create_dir_all(&out).unwrap();
    let doc = out.join("session.json");

    let melody = MelodyConfig { notes: 8, ..MelodyConfig::default() };
    let cfg = SessionConfig {
        de: DeConfig { population_size: 8, dimensions: melody.dimensions(), seed: 7, ..DeConfig::default() },
        melody,
        ..SessionConfig::default()
    };
    let mut s = Session::create(cfg).unwrap();
    s.save_to_path(&doc).unwrap();

    for _ in 0..6 {
        let mut s2 = Session::load_from_path(&doc).unwrap();
        let pending = s2.pending();
        for id in &pending {
            let score = listener(&s2, id);
            s2.submit_score(HumanScore { candidate_id: id.clone(), score, submitted_at: 0 }).unwrap();
        }
        let round = s2.round.generation;
        s2.advance().unwrap();
        let best = s2.population.best().map_or(f64::NAN, |(_, f)| -f.value());
        println!("round {round}: scored {} new candidate(s), population best {best:.1}", pending.len());
        s2.save_to_path(&doc).unwrap();
        s = s2;
    }

    let manifest = s.finish().unwrap();
    s.export(&out).unwrap();
    s.save_to_path(&doc).unwrap();
    println!("\nfinal ranking (population generation {}):", manifest.population_generation);
    for e in &manifest.entries {
        println!("  #{} {} score {:?} -> {}", e.rank, e.candidate_id, e.score, e.midi_file);
    }
    println!("replay check: {}", if s.replay_diff().is_empty() { "ok" } else { "diverged" });
    println!("wrote {} and {}", doc.display(), out.join("manifest.json").display());
}
