#![allow(dead_code)]

use std::collections::VecDeque;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use evomelody::engine::{DeConfig, DrawSource};
use evomelody::expression::EventKind;
use evomelody::fitness::{CandidateId, HumanScore};
use evomelody::genome::{MelodyConfig, Note};
use evomelody::session::{Session, SessionConfig};
use http_body_util::BodyExt;
use tower::ServiceExt;

/// Replays a fixed list of draws; panics when the engine asks for anything else.
pub struct ScriptedDraws {
    pub indices: VecDeque<usize>,
    pub units: VecDeque<f64>,
}

impl ScriptedDraws {
    pub fn new(indices: &[usize], units: &[f64]) -> Self {
        Self { indices: indices.iter().copied().collect(), units: units.iter().copied().collect() }
    }

    pub fn exhausted(&self) -> bool {
        self.indices.is_empty() && self.units.is_empty()
    }
}

impl DrawSource for ScriptedDraws {
    fn index(&mut self, n: usize) -> usize {
        let k = self.indices.pop_front().expect("script ran out of index draws");
        assert!(k < n, "scripted index {k} out of range 0..{n}");
        k
    }

    fn unit(&mut self) -> f64 {
        self.units.pop_front().expect("script ran out of uniform draws")
    }
}

pub fn scripted_config(seed: u64) -> SessionConfig {
    let melody = MelodyConfig { notes: 8, ..MelodyConfig::default() };
    SessionConfig {
        de: DeConfig { population_size: 8, dimensions: melody.dimensions(), seed, ..DeConfig::default() },
        melody,
        ..SessionConfig::default()
    }
}

/// The listener's taste: melodies near G4, in eighths, played firmly.
/// Scores land on half points, as a slider would produce.
pub fn scripted_score(notes: &[Note]) -> f64 {
    let d: f64 = notes
        .iter()
        .map(|n| {
            let p = (f64::from(n.pitch) - 67.0) / 12.0;
            let r = (n.duration - 0.125) / 0.25;
            let v = (f64::from(n.velocity) - 96.0) / 40.0;
            p * p + r * r + v * v
        })
        .sum();
    (20.0 / (1.0 + d)).round() / 2.0
}

pub fn score_of(s: &Session, id: &CandidateId) -> f64 {
    scripted_score(&s.phrase(id).unwrap().notes)
}

pub fn submit(s: &mut Session, id: &CandidateId) {
    let score = score_of(s, id);
    s.submit_score(HumanScore { candidate_id: id.clone(), score, submitted_at: 0 }).unwrap();
}

pub fn score_pending(s: &mut Session) {
    for id in s.pending() {
        submit(s, &id);
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<serde_json::Value>,
) -> (StatusCode, serde_json::Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    let v = if bytes.is_empty() { serde_json::Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

/// What an independent SMF reader recovers from a format-0 file.
#[derive(Debug)]
pub struct ParsedSmf {
    pub tpqn: u16,
    pub tempo: Option<u32>,
    /// `(absolute tick, channel, event)` in file order.
    pub events: Vec<(u64, u8, EventKind)>,
    pub ends_with_end_of_track: bool,
}

/// Reads a file back with `midly`, an independent SMF parser.
pub fn parse_smf(bytes: &[u8]) -> Result<ParsedSmf, String> {
    use midly::{Format, MetaMessage, MidiMessage, Smf, Timing, TrackEventKind};

    let smf = Smf::parse(bytes).map_err(|e| e.to_string())?;
    if smf.header.format != Format::SingleTrack {
        return Err(format!("expected format 0, got {:?}", smf.header.format));
    }
    let Timing::Metrical(tpqn) = smf.header.timing else {
        return Err("expected metrical timing".into());
    };
    let [track] = smf.tracks.as_slice() else {
        return Err(format!("expected one track, got {}", smf.tracks.len()));
    };
    let mut tick = 0u64;
    let mut tempo = None;
    let mut events = Vec::new();
    let mut ends_with_end_of_track = false;
    for ev in track {
        tick += u64::from(ev.delta.as_int());
        ends_with_end_of_track = false;
        match ev.kind {
            TrackEventKind::Meta(MetaMessage::Tempo(t)) => tempo = Some(t.as_int()),
            TrackEventKind::Meta(MetaMessage::EndOfTrack) => ends_with_end_of_track = true,
            TrackEventKind::Midi { channel, message } => {
                let kind = match message {
                    MidiMessage::NoteOn { key, vel } => {
                        EventKind::NoteOn { pitch: key.as_int(), velocity: vel.as_int() }
                    }
                    MidiMessage::NoteOff { key, vel } => {
                        EventKind::NoteOff { pitch: key.as_int(), velocity: vel.as_int() }
                    }
                    MidiMessage::ChannelAftertouch { vel } => EventKind::ChannelPressure { value: vel.as_int() },
                    MidiMessage::PitchBend { bend } => EventKind::PitchBend { value: bend.0.as_int() },
                    MidiMessage::Controller { controller, value } => {
                        EventKind::ControlChange { controller: controller.as_int(), value: value.as_int() }
                    }
                    other => return Err(format!("unexpected message {other:?}")),
                };
                events.push((tick, channel.as_int(), kind));
            }
            other => return Err(format!("unexpected event {other:?}")),
        }
    }
    Ok(ParsedSmf { tpqn: tpqn.as_int(), tempo, events, ends_with_end_of_track })
}

/// The pitch-bend-range preamble (RPN 0 set to 2 semitones, then RPN null).
pub const BEND_RANGE_RPN: [(u8, u8); 6] = [(101, 0), (100, 0), (6, 2), (38, 0), (101, 127), (100, 127)];
