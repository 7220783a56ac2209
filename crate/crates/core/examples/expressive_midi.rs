//! Renders one phrase twice, plain and with all expression controls on,
//! and writes both as Standard MIDI Files.
//!
//! ```text
//! cargo run --example expressive_midi -- [output-dir]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use evomelody::expression::{apply_expression, EventKind, ExpressionProfile};
use evomelody::genome::{encode_phrase, MelodyConfig, MelodyPhrase, Note};
use evomelody::midi::{write_smf, SmfConfig};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out).unwrap();

    let mut onset = 0.0;
    let notes = [(67, 0.25, 96), (69, 0.125, 80), (71, 0.125, 84), (72, 0.5, 110), (67, 1.0, 90)]
        .into_iter()
        .map(|(pitch, duration, velocity)| {
            let n = Note { pitch, duration, velocity, onset };
            onset += duration;
            n
        })
        .collect();
    let phrase = MelodyPhrase { notes, bpm: 84.0 };
    // decoding the encoded phrase gives it back unchanged
    let cfg = MelodyConfig { notes: 5, bpm: 84.0, ..MelodyConfig::default() };
    assert_eq!(cfg.decode(&encode_phrase(&phrase).unwrap()).unwrap(), phrase);

    let smf = SmfConfig { bpm: phrase.bpm, ..SmfConfig::default() };
    for (name, profile) in [("plain", ExpressionProfile::default()), ("expressive", ExpressionProfile::expressive(3))] {
        let events = apply_expression(&phrase, &profile, smf.tpqn).unwrap();
        let mut counts = BTreeMap::new();
        for e in events.iter() {
            let kind = match e.kind {
                EventKind::NoteOn { .. } => "note_on",
                EventKind::NoteOff { .. } => "note_off",
                EventKind::ChannelPressure { .. } => "channel_pressure",
                EventKind::PitchBend { .. } => "pitch_bend",
                EventKind::ControlChange { .. } => "control_change",
            };
            *counts.entry(kind).or_insert(0) += 1;
        }
        let bytes = write_smf(&events, &smf).unwrap();
        let path = out.join(format!("{name}.mid"));
        std::fs::write(&path, &bytes).unwrap();
        println!("{name:>10}: {} bytes, {counts:?} -> {}", bytes.len(), path.display());
    }
}
