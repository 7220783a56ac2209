//! Performance expression applied to a decoded phrase.
//!
//! Five controls shape the rendering of each note:
//!
//! 1. strike velocity: gain plus seeded humanising jitter
//! 2. aftertouch: channel pressure following an attack/decay envelope
//! 3. lateral motion: vibrato as pitch-bend samples tracing a sine
//! 4. vertical motion: brightness (CC74) interpolated over the phrase
//! 5. release velocity carried on the note-off, with jitter
//!
//! Continuous controllers are sampled on a fixed grid, 1/32 note by default.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::MelodyPhrase;
use crate::midi::ticks_for;

/// Centre of the 14-bit pitch-bend range.
pub const BEND_CENTER: u16 = 8192;
pub const BEND_MAX: u16 = 16383;
/// Bend range declared in rendered files, in cents either side of centre.
pub const BEND_RANGE_CENTS: f64 = 200.0;
pub const BRIGHTNESS_CC: u8 = 74;
/// Fraction of the note at which the envelope attack peaks.
pub const ATTACK_END: f64 = 0.1;
pub const MIN_TPQN: u16 = 24;
pub const DEFAULT_RELEASE_VELOCITY: u8 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpressionError {
    #[error("invalid expression profile: {0}")]
    Profile(String),
    #[error("ticks per quarter note must be at least {MIN_TPQN}, got {0}")]
    Tpqn(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityShaping {
    pub gain: f64,
    /// Maximum deviation in velocity units.
    pub jitter: f64,
}

/// Attack/decay curve: linear rise to `attack_level` by `ATTACK_END`, then
/// exponential decay at `decay_rate` per note length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub attack_level: f64,
    pub decay_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vibrato {
    pub rate_hz: f64,
    pub depth_cents: f64,
    /// Fraction of the note before vibrato starts.
    pub onset_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessSweep {
    pub start: u8,
    pub end: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseVelocity {
    pub base: u8,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionProfile {
    pub velocity: VelocityShaping,
    pub aftertouch: EnvelopeSpec,
    pub vibrato: Vibrato,
    pub brightness: Option<BrightnessSweep>,
    pub release: ReleaseVelocity,
    pub jitter_seed: u64,
    /// Controller sampling interval as a fraction of a whole note.
    pub control_resolution: f64,
}

impl Default for ExpressionProfile {
    /// Every feature disabled.
    fn default() -> Self {
        Self {
            velocity: VelocityShaping { gain: 1.0, jitter: 0.0 },
            aftertouch: EnvelopeSpec { attack_level: 0.0, decay_rate: 0.0 },
            vibrato: Vibrato { rate_hz: 0.0, depth_cents: 0.0, onset_delay: 0.0 },
            brightness: None,
            release: ReleaseVelocity { base: DEFAULT_RELEASE_VELOCITY, jitter: 0.0 },
            jitter_seed: 0,
            control_resolution: 1.0 / 32.0,
        }
    }
}

impl ExpressionProfile {
    /// A moderate setting of all five controls.
    pub fn expressive(jitter_seed: u64) -> Self {
        Self {
            velocity: VelocityShaping { gain: 0.9, jitter: 6.0 },
            aftertouch: EnvelopeSpec { attack_level: 0.8, decay_rate: 2.5 },
            vibrato: Vibrato { rate_hz: 5.5, depth_cents: 30.0, onset_delay: 0.3 },
            brightness: Some(BrightnessSweep { start: 40, end: 100 }),
            release: ReleaseVelocity { base: 64, jitter: 12.0 },
            jitter_seed,
            control_resolution: 1.0 / 32.0,
        }
    }

    pub fn validate(&self) -> Result<(), ExpressionError> {
        let bad = |m: String| Err(ExpressionError::Profile(m));
        let v = &self.vibrato;
        if !(0.0..=200.0).contains(&v.depth_cents) {
            return bad(format!("vibrato depth {} outside [0, 200] cents", v.depth_cents));
        }
        if !(0.0..=12.0).contains(&v.rate_hz) {
            return bad(format!("vibrato rate {} outside [0, 12] Hz", v.rate_hz));
        }
        if !(0.0..=1.0).contains(&v.onset_delay) {
            return bad(format!("vibrato onset delay {} outside [0, 1]", v.onset_delay));
        }
        if !(self.velocity.gain.is_finite() && self.velocity.gain >= 0.0) {
            return bad(format!("velocity gain {} must be non-negative", self.velocity.gain));
        }
        for (name, j) in [("velocity", self.velocity.jitter), ("release", self.release.jitter)] {
            if !(j.is_finite() && j >= 0.0) {
                return bad(format!("{name} jitter {j} must be non-negative"));
            }
        }
        let a = &self.aftertouch;
        if !(a.attack_level.is_finite() && a.decay_rate.is_finite() && a.decay_rate >= 0.0) {
            return bad("aftertouch envelope must be finite with non-negative decay".into());
        }
        if !(self.control_resolution.is_finite() && self.control_resolution > 0.0) {
            return bad(format!("control resolution {} must be positive", self.control_resolution));
        }
        if self.release.base > 127 {
            return bad(format!("release velocity {} above 127", self.release.base));
        }
        if let Some(b) = self.brightness {
            if b.start > 127 || b.end > 127 {
                return bad("brightness values must be 0-127".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    NoteOn { pitch: u8, velocity: u8 },
    NoteOff { pitch: u8, velocity: u8 },
    ChannelPressure { value: u8 },
    PitchBend { value: u16 },
    ControlChange { controller: u8, value: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Tick-ordered channel events for one monophonic voice.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressiveEvents {
    pub events: Vec<TimedEvent>,
}

impl ExpressiveEvents {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimedEvent> {
        self.events.iter()
    }

    /// Ticks non-decreasing, values in MIDI range, every note-on closed by a later note-off.
    pub fn validate(&self) -> Result<(), String> {
        let mut last = 0;
        let mut sounding: Vec<(u8, u64)> = Vec::new();
        for (k, e) in self.events.iter().enumerate() {
            if e.tick < last {
                return Err(format!("event {k} at tick {} precedes tick {last}", e.tick));
            }
            last = e.tick;
            let in_range = match e.kind {
                EventKind::NoteOn { pitch, velocity } => pitch <= 127 && (1..=127).contains(&velocity),
                EventKind::NoteOff { pitch, velocity } => pitch <= 127 && velocity <= 127,
                EventKind::ChannelPressure { value } => value <= 127,
                EventKind::PitchBend { value } => value <= BEND_MAX,
                EventKind::ControlChange { controller, value } => controller <= 127 && value <= 127,
            };
            if !in_range {
                return Err(format!("event {k} out of MIDI range: {:?}", e.kind));
            }
            match e.kind {
                EventKind::NoteOn { pitch, .. } => sounding.push((pitch, e.tick)),
                EventKind::NoteOff { pitch, .. } => {
                    let Some(pos) = sounding.iter().position(|(p, _)| *p == pitch) else {
                        return Err(format!("event {k}: note-off for {pitch} without note-on"));
                    };
                    let (_, on) = sounding.remove(pos);
                    if e.tick <= on {
                        return Err(format!("event {k}: note {pitch} ends at its start tick"));
                    }
                }
                _ => {}
            }
        }
        match sounding.first() {
            Some((p, t)) => Err(format!("note {p} from tick {t} never released")),
            None => Ok(()),
        }
    }
}

/// Envelope value at position `t` through the note.
pub fn eval_envelope(spec: &EnvelopeSpec, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let peak = spec.attack_level.clamp(0.0, 1.0);
    let v = if t < ATTACK_END { peak * t / ATTACK_END } else { peak * (-spec.decay_rate * (t - ATTACK_END)).exp() };
    v.clamp(0.0, 1.0)
}

/// 14-bit bend value for a deviation in cents, assuming a ±2 semitone range.
pub fn bend_value(cents: f64) -> u16 {
    let raw = f64::from(BEND_CENTER) + (cents / BEND_RANGE_CENTS * f64::from(BEND_CENTER)).round();
    raw.clamp(0.0, f64::from(BEND_MAX)) as u16
}

fn clamp_midi(x: f64, lo: u8, hi: u8) -> u8 {
    x.round().clamp(f64::from(lo), f64::from(hi)) as u8
}

/// The phrase as bare note-on/note-off pairs.
pub fn render_plain(phrase: &MelodyPhrase, tpqn: u16) -> ExpressiveEvents {
    let mut events = Vec::with_capacity(phrase.notes.len() * 2);
    for n in &phrase.notes {
        let on = ticks_for(n.onset, tpqn);
        let off = ticks_for(n.onset + n.duration, tpqn);
        events.push(TimedEvent { tick: on, kind: EventKind::NoteOn { pitch: n.pitch, velocity: n.velocity } });
        events.push(TimedEvent {
            tick: off,
            kind: EventKind::NoteOff { pitch: n.pitch, velocity: DEFAULT_RELEASE_VELOCITY },
        });
    }
    events.sort_by_key(|e| e.tick);
    ExpressiveEvents { events }
}

pub fn apply_expression(
    phrase: &MelodyPhrase,
    profile: &ExpressionProfile,
    tpqn: u16,
) -> Result<ExpressiveEvents, ExpressionError> {
    if tpqn < MIN_TPQN {
        return Err(ExpressionError::Tpqn(tpqn));
    }
    profile.validate()?;

    let mut jitter = ChaCha8Rng::seed_from_u64(profile.jitter_seed);
    let step = ticks_for(profile.control_resolution, tpqn).max(1);
    let seconds_per_tick = 60.0 / (phrase.bpm * f64::from(tpqn));
    let total = ticks_for(phrase.length(), tpqn).max(1);
    let vib = profile.vibrato;
    let mut events = Vec::new();

    for n in &phrase.notes {
        // two draws per note regardless of settings keep streams aligned
        let u_strike: f64 = jitter.gen_range(-1.0..1.0);
        let u_release: f64 = jitter.gen_range(-1.0..1.0);

        let on = ticks_for(n.onset, tpqn);
        let off = ticks_for(n.onset + n.duration, tpqn);
        let len = (off - on).max(1) as f64;

        if let Some(b) = profile.brightness {
            let pos = on as f64 / total as f64;
            let value = f64::from(b.start) + (f64::from(b.end) - f64::from(b.start)) * pos;
            events.push(TimedEvent {
                tick: on,
                kind: EventKind::ControlChange { controller: BRIGHTNESS_CC, value: clamp_midi(value, 0, 127) },
            });
        }

        let velocity = f64::from(n.velocity) * profile.velocity.gain + profile.velocity.jitter * u_strike;
        events.push(TimedEvent {
            tick: on,
            kind: EventKind::NoteOn { pitch: n.pitch, velocity: clamp_midi(velocity, 1, 127) },
        });

        let vib_start = vib.onset_delay * len;
        for tick in (on..off).step_by(step as usize) {
            let t = (tick - on) as f64 / len;
            if profile.aftertouch.attack_level > 0.0 {
                let value = 127.0 * eval_envelope(&profile.aftertouch, t);
                events.push(TimedEvent { tick, kind: EventKind::ChannelPressure { value: clamp_midi(value, 0, 127) } });
            }
            if vib.depth_cents > 0.0 && (tick - on) as f64 >= vib_start {
                let elapsed = ((tick - on) as f64 - vib_start) * seconds_per_tick;
                let cents = vib.depth_cents * (std::f64::consts::TAU * vib.rate_hz * elapsed).sin();
                events.push(TimedEvent { tick, kind: EventKind::PitchBend { value: bend_value(cents) } });
            }
        }

        let release = f64::from(profile.release.base) + profile.release.jitter * u_release;
        events.push(TimedEvent {
            tick: off,
            kind: EventKind::NoteOff { pitch: n.pitch, velocity: clamp_midi(release, 0, 127) },
        });
        if vib.depth_cents > 0.0 {
            events.push(TimedEvent { tick: off, kind: EventKind::PitchBend { value: BEND_CENTER } });
        }
    }
    events.sort_by_key(|e| e.tick);
    Ok(ExpressiveEvents { events })
}
