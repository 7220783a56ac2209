//! Decodes a hand-written genome into a melody in D dorian and prints it.
//!
//! ```text
//! cargo run --example decode_melody
//! ```

use evomelody::genome::{midi_to_hz, scale_pitches, DurationGrid, Genome, MelodyConfig, Mode, ScaleContext};

fn main() {
    let cfg = MelodyConfig {
        scale: ScaleContext::new(2, Mode::Dorian, 50, 74).unwrap(),
        grid: DurationGrid::default(),
        bpm: 96.0,
        notes: 6,
    };
    println!("scale pitches: {:?}", scale_pitches(&cfg.scale));

    // (pitch, duration, velocity) per note; values need not be tidy
    #[rustfmt::skip]
    let genes = vec![
        61.2, 0.12, 80.0,
        63.9, 0.26, 95.5,
        -40.0, 0.2, 300.0,
        66.5, 0.51, 70.0,
        1e6, 0.0, 64.0,
        62.0, 1.7, 101.4,
    ];
    let phrase = cfg.decode(&Genome::melodic(genes).unwrap()).unwrap();

    println!("{:>6} {:>6} {:>9} {:>8} {:>9}", "onset", "pitch", "freq_hz", "dur", "velocity");
    for n in &phrase.notes {
        println!("{:>6.3} {:>6} {:>9.2} {:>8.4} {:>9}", n.onset, n.pitch, midi_to_hz(n.pitch), n.duration, n.velocity);
    }
    println!("length: {} whole notes at {} bpm", phrase.length(), phrase.bpm);
}
