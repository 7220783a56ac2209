//! Standard MIDI File (format 0) writer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expression::{apply_expression, EventKind, ExpressionProfile, ExpressiveEvents, MIN_TPQN};
use crate::genome::MelodyPhrase;

pub const MAX_TPQN: u16 = 960;
pub const MAX_VLQ: u32 = 0x0FFF_FFFF;
pub const MIDI_MEDIA_TYPE: &str = "audio/midi";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MidiError {
    #[error("ticks per quarter note {0} outside [24, 960]")]
    Tpqn(u16),
    #[error("tempo {0} bpm outside (0, 1000) or not representable")]
    Tempo(f64),
    #[error("channel {0} outside 0-15")]
    Channel(u8),
    #[error("malformed event stream: {0}")]
    Events(String),
    #[error("value {0} exceeds the variable-length quantity range")]
    Vlq(u64),
    #[error(transparent)]
    Expression(#[from] crate::expression::ExpressionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmfConfig {
    pub tpqn: u16,
    pub bpm: f64,
    pub channel: u8,
}

impl Default for SmfConfig {
    fn default() -> Self {
        Self { tpqn: 480, bpm: 120.0, channel: 0 }
    }
}

impl SmfConfig {
    pub fn validate(&self) -> Result<(), MidiError> {
        if !(MIN_TPQN..=MAX_TPQN).contains(&self.tpqn) {
            return Err(MidiError::Tpqn(self.tpqn));
        }
        if !(self.bpm.is_finite() && self.bpm > 0.0 && self.bpm < 1000.0) {
            return Err(MidiError::Tempo(self.bpm));
        }
        if self.channel > 15 {
            return Err(MidiError::Channel(self.channel));
        }
        Ok(())
    }
}

/// Whole-note fraction to ticks; a whole note is four quarters.
pub fn ticks_for(duration: f64, tpqn: u16) -> u64 {
    (duration * 4.0 * f64::from(tpqn)).round() as u64
}

/// Microseconds per quarter note for the Set Tempo meta event.
pub fn tempo_meta(bpm: f64) -> u32 {
    (60_000_000.0 / bpm).round() as u32
}

pub fn encode_vlq(value: u64, out: &mut Vec<u8>) -> Result<(), MidiError> {
    if value > u64::from(MAX_VLQ) {
        return Err(MidiError::Vlq(value));
    }
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut v = value;
    loop {
        groups[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for k in (0..n).rev() {
        out.push(if k > 0 { groups[k] | 0x80 } else { groups[k] });
    }
    Ok(())
}

/// Returns the decoded value and the number of bytes consumed.
pub fn decode_vlq(bytes: &[u8]) -> Option<(u32, usize)> {
    let mut value: u32 = 0;
    for (k, &b) in bytes.iter().take(4).enumerate() {
        value = (value << 7) | u32::from(b & 0x7F);
        if b & 0x80 == 0 {
            return Some((value, k + 1));
        }
    }
    None
}

fn chunk(out: &mut Vec<u8>, tag: &[u8; 4], body: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
}

/// Serialises `events` as a single-track format-0 file.
///
/// When the stream contains pitch bends, a ±2 semitone bend-range RPN is
/// written at tick 0 so receivers agree on the bend scale.
pub fn write_smf(events: &ExpressiveEvents, cfg: &SmfConfig) -> Result<Vec<u8>, MidiError> {
    cfg.validate()?;
    events.validate().map_err(MidiError::Events)?;
    let tempo = tempo_meta(cfg.bpm);
    if tempo > 0x00FF_FFFF {
        return Err(MidiError::Tempo(cfg.bpm));
    }
    let ch = cfg.channel;

    let mut track = Vec::new();
    track.extend_from_slice(&[0x00, 0xFF, 0x51, 0x03]);
    track.extend_from_slice(&tempo.to_be_bytes()[1..]);

    if events.iter().any(|e| matches!(e.kind, EventKind::PitchBend { .. })) {
        let cc = 0xB0 | ch;
        for (controller, value) in [(101, 0), (100, 0), (6, 2), (38, 0), (101, 127), (100, 127)] {
            track.extend_from_slice(&[0x00, cc, controller, value]);
        }
    }

    let mut now = 0u64;
    for e in events.iter() {
        encode_vlq(e.tick - now, &mut track)?;
        now = e.tick;
        match e.kind {
            EventKind::NoteOn { pitch, velocity } => track.extend_from_slice(&[0x90 | ch, pitch, velocity]),
            EventKind::NoteOff { pitch, velocity } => track.extend_from_slice(&[0x80 | ch, pitch, velocity]),
            EventKind::ChannelPressure { value } => track.extend_from_slice(&[0xD0 | ch, value]),
            EventKind::PitchBend { value } => {
                track.extend_from_slice(&[0xE0 | ch, (value & 0x7F) as u8, (value >> 7) as u8])
            }
            EventKind::ControlChange { controller, value } => track.extend_from_slice(&[0xB0 | ch, controller, value]),
        }
    }
    track.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    let mut header = Vec::with_capacity(6);
    header.extend_from_slice(&0u16.to_be_bytes());
    header.extend_from_slice(&1u16.to_be_bytes());
    header.extend_from_slice(&cfg.tpqn.to_be_bytes());
    chunk(&mut out, b"MThd", &header);
    chunk(&mut out, b"MTrk", &track);
    Ok(out)
}

/// Applies `profile` and writes the phrase at its own tempo.
pub fn render_phrase(
    phrase: &MelodyPhrase,
    profile: &ExpressionProfile,
    tpqn: u16,
    channel: u8,
) -> Result<Vec<u8>, MidiError> {
    let events = apply_expression(phrase, profile, tpqn)?;
    write_smf(&events, &SmfConfig { tpqn, bpm: phrase.bpm, channel })
}
