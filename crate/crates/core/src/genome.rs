//! Melody genomes and their decoding into scale-constrained notes.
//!
//! A genome is a flat vector of unconstrained reals. Melody genomes use an
//! interleaved per-note layout `[pitch, duration, velocity, pitch, ...]`, so a
//! phrase of `N` notes has `3 * N` genes. Range constraints are applied only
//! when decoding: pitch genes are clamped to the register and snapped to the
//! nearest scale tone, duration genes snap to the nearest grid fraction and
//! velocity genes are rounded and clamped to `1..=127`.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Genes per note in the interleaved melody layout.
pub const GENES_PER_NOTE: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenomeError {
    #[error("genome must contain at least one gene")]
    Empty,
    #[error("gene {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("melody genome length {0} is not a positive multiple of 3")]
    NotMelodic(usize),
    #[error("invalid scale context: {0}")]
    Scale(String),
    #[error("invalid duration grid: {0}")]
    Grid(String),
    #[error("bpm must be positive and finite, got {0}")]
    Bpm(f64),
    #[error("note count must be at least 1")]
    NoNotes,
    #[error("sampling interval {index} is invalid: [{lo}, {hi}]")]
    Bounds { index: usize, lo: f64, hi: f64 },
}

/// Real-valued candidate vector.
///
/// Every gene is finite. The melody interpretation additionally needs the
/// length to be a multiple of three; synthetic objectives accept any length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Genome {
    genes: Vec<f64>,
}

impl Genome {
    pub fn new(genes: Vec<f64>) -> Result<Self, GenomeError> {
        if genes.is_empty() {
            return Err(GenomeError::Empty);
        }
        if let Some((index, &value)) = genes.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(GenomeError::NonFinite { index, value });
        }
        Ok(Self { genes })
    }

    /// Builds a melody genome, additionally requiring `len == 3 * N`.
    pub fn melodic(genes: Vec<f64>) -> Result<Self, GenomeError> {
        let g = Self::new(genes)?;
        g.note_count()?;
        Ok(g)
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn into_genes(self) -> Vec<f64> {
        self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn note_count(&self) -> Result<usize, GenomeError> {
        if self.genes.len().is_multiple_of(GENES_PER_NOTE) {
            Ok(self.genes.len() / GENES_PER_NOTE)
        } else {
            Err(GenomeError::NotMelodic(self.genes.len()))
        }
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Genome) -> bool {
        self.genes.len() == other.genes.len()
            && self.genes.iter().zip(&other.genes).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl TryFrom<Vec<f64>> for Genome {
    type Error = GenomeError;

    fn try_from(genes: Vec<f64>) -> Result<Self, Self::Error> {
        Genome::new(genes)
    }
}

impl From<Genome> for Vec<f64> {
    fn from(g: Genome) -> Self {
        g.genes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Major,
    NaturalMinor,
    HarmonicMinor,
    Dorian,
    Mixolydian,
    PentatonicMajor,
    PentatonicMinor,
}

impl Mode {
    /// Semitone offsets from the root.
    pub fn intervals(self) -> &'static [u8] {
        match self {
            Mode::Major => &[0, 2, 4, 5, 7, 9, 11],
            Mode::NaturalMinor => &[0, 2, 3, 5, 7, 8, 10],
            Mode::HarmonicMinor => &[0, 2, 3, 5, 7, 8, 11],
            Mode::Dorian => &[0, 2, 3, 5, 7, 9, 10],
            Mode::Mixolydian => &[0, 2, 4, 5, 7, 9, 10],
            Mode::PentatonicMajor => &[0, 2, 4, 7, 9],
            Mode::PentatonicMinor => &[0, 3, 5, 7, 10],
        }
    }

    pub fn contains_pitch_class(self, root: u8, pitch_class: u8) -> bool {
        let offset = (pitch_class + 12 - root % 12) % 12;
        self.intervals().contains(&offset)
    }
}

/// Key, mode and register that pitch genes are projected onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale")]
pub struct ScaleContext {
    key_root: u8,
    mode: Mode,
    low_bound: u8,
    high_bound: u8,
    #[serde(skip)]
    pitches: Vec<u8>,
}

#[derive(Deserialize)]
struct RawScale {
    key_root: u8,
    mode: Mode,
    low_bound: u8,
    high_bound: u8,
}

impl TryFrom<RawScale> for ScaleContext {
    type Error = GenomeError;

    fn try_from(r: RawScale) -> Result<Self, Self::Error> {
        ScaleContext::new(r.key_root, r.mode, r.low_bound, r.high_bound)
    }
}

impl ScaleContext {
    pub fn new(key_root: u8, mode: Mode, low_bound: u8, high_bound: u8) -> Result<Self, GenomeError> {
        if key_root > 11 {
            return Err(GenomeError::Scale(format!("key root {key_root} is not a pitch class 0-11")));
        }
        if low_bound > 127 || high_bound > 127 {
            return Err(GenomeError::Scale("bounds must be MIDI notes 0-127".into()));
        }
        if low_bound >= high_bound {
            return Err(GenomeError::Scale(format!("low bound {low_bound} must be below high bound {high_bound}")));
        }
        let pitches: Vec<u8> =
            (low_bound..=high_bound).filter(|&n| mode.contains_pitch_class(key_root, n % 12)).collect();
        if pitches.is_empty() {
            return Err(GenomeError::Scale(format!("no {mode:?} scale tones between {low_bound} and {high_bound}")));
        }
        Ok(Self { key_root, mode, low_bound, high_bound, pitches })
    }

    pub fn key_root(&self) -> u8 {
        self.key_root
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn low_bound(&self) -> u8 {
        self.low_bound
    }

    pub fn high_bound(&self) -> u8 {
        self.high_bound
    }

    /// Scale tones inside the register, ascending.
    pub fn pitches(&self) -> &[u8] {
        &self.pitches
    }
}

impl Default for ScaleContext {
    /// C major over C4..C6.
    fn default() -> Self {
        Self::new(0, Mode::Major, 60, 84).expect("default scale is valid")
    }
}

pub fn scale_pitches(ctx: &ScaleContext) -> BTreeSet<u8> {
    ctx.pitches.iter().copied().collect()
}

/// Allowed note durations, as fractions of a whole note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DurationGrid {
    allowed: Vec<f64>,
}

impl DurationGrid {
    pub fn new(allowed: Vec<f64>) -> Result<Self, GenomeError> {
        if allowed.is_empty() {
            return Err(GenomeError::Grid("grid is empty".into()));
        }
        if let Some(bad) = allowed.iter().find(|d| !(d.is_finite() && **d > 0.0 && **d <= 4.0)) {
            return Err(GenomeError::Grid(format!("duration {bad} outside (0, 4]")));
        }
        if allowed.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GenomeError::Grid("durations must be strictly increasing".into()));
        }
        Ok(Self { allowed })
    }

    pub fn allowed(&self) -> &[f64] {
        &self.allowed
    }

    pub fn shortest(&self) -> f64 {
        self.allowed[0]
    }

    pub fn longest(&self) -> f64 {
        self.allowed[self.allowed.len() - 1]
    }

    pub fn contains(&self, d: f64) -> bool {
        self.allowed.iter().any(|a| a.to_bits() == d.to_bits())
    }
}

impl Default for DurationGrid {
    fn default() -> Self {
        Self::new(vec![1.0 / 16.0, 1.0 / 8.0, 3.0 / 16.0, 1.0 / 4.0, 3.0 / 8.0, 1.0 / 2.0, 1.0])
            .expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for DurationGrid {
    type Error = GenomeError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        DurationGrid::new(v)
    }
}

impl From<DurationGrid> for Vec<f64> {
    fn from(g: DurationGrid) -> Self {
        g.allowed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub pitch: u8,
    /// Fraction of a whole note.
    pub duration: f64,
    pub velocity: u8,
    /// Start position in whole notes from the beginning of the phrase.
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelodyPhrase {
    pub notes: Vec<Note>,
    pub bpm: f64,
}

impl MelodyPhrase {
    /// Total length in whole notes.
    pub fn length(&self) -> f64 {
        self.notes.last().map_or(0.0, |n| n.onset + n.duration)
    }

    /// Checks the decoding invariants against the context used to produce it.
    pub fn check(&self, ctx: &ScaleContext, grid: &DurationGrid) -> Result<(), String> {
        for (k, n) in self.notes.iter().enumerate() {
            if ctx.pitches.binary_search(&n.pitch).is_err() {
                return Err(format!("note {k}: pitch {} not in scale", n.pitch));
            }
            if !grid.contains(n.duration) {
                return Err(format!("note {k}: duration {} not on grid", n.duration));
            }
            if !(1..=127).contains(&n.velocity) {
                return Err(format!("note {k}: velocity {} out of range", n.velocity));
            }
        }
        Ok(())
    }
}

/// Everything needed to turn a melody genome into a phrase, and to sample
/// fresh melody genomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelodyConfig {
    pub scale: ScaleContext,
    pub grid: DurationGrid,
    pub bpm: f64,
    pub notes: usize,
}

impl Default for MelodyConfig {
    fn default() -> Self {
        Self { scale: ScaleContext::default(), grid: DurationGrid::default(), bpm: 120.0, notes: 16 }
    }
}

impl MelodyConfig {
    pub fn validate(&self) -> Result<(), GenomeError> {
        if !(self.bpm.is_finite() && self.bpm > 0.0) {
            return Err(GenomeError::Bpm(self.bpm));
        }
        if self.notes == 0 {
            return Err(GenomeError::NoNotes);
        }
        Ok(())
    }

    pub fn dimensions(&self) -> usize {
        self.notes * GENES_PER_NOTE
    }

    /// Per-gene sampling intervals for initial melody genomes.
    pub fn sampling_bounds(&self) -> SearchBounds {
        let note = [
            (f64::from(self.scale.low_bound), f64::from(self.scale.high_bound)),
            (self.grid.shortest(), self.grid.longest()),
            (1.0, 127.0),
        ];
        SearchBounds::new(note.iter().copied().cycle().take(self.dimensions()).collect())
            .expect("melody bounds are ordered")
    }

    pub fn decode(&self, g: &Genome) -> Result<MelodyPhrase, GenomeError> {
        decode_genome(g, &self.scale, &self.grid, self.bpm)
    }
}

/// Per-gene closed sampling intervals used for random initialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds(Vec<(f64, f64)>);

impl SearchBounds {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, GenomeError> {
        if intervals.is_empty() {
            return Err(GenomeError::Empty);
        }
        for (index, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GenomeError::Bounds { index, lo, hi });
            }
        }
        Ok(Self(intervals))
    }

    pub fn uniform(dims: usize, lo: f64, hi: f64) -> Result<Self, GenomeError> {
        Self::new(vec![(lo, hi); dims])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn dimensions(&self) -> usize {
        self.0.len()
    }
}

pub fn decode_pitch(gene: f64, ctx: &ScaleContext) -> u8 {
    let x = gene.clamp(f64::from(ctx.low_bound), f64::from(ctx.high_bound));
    let pitches = &ctx.pitches;
    // first scale tone >= x
    let upper = pitches.partition_point(|&p| f64::from(p) < x);
    if upper == 0 {
        return pitches[0];
    }
    if upper == pitches.len() {
        return pitches[pitches.len() - 1];
    }
    let (lo, hi) = (pitches[upper - 1], pitches[upper]);
    if x - f64::from(lo) <= f64::from(hi) - x {
        lo
    } else {
        hi
    }
}

pub fn decode_duration(gene: f64, grid: &DurationGrid) -> f64 {
    let mut best = grid.allowed[0];
    let mut best_dist = (gene - best).abs();
    for &d in &grid.allowed[1..] {
        let dist = (gene - d).abs();
        // strict: equal distance keeps the shorter entry
        if dist < best_dist {
            best = d;
            best_dist = dist;
        }
    }
    best
}

pub fn decode_velocity(gene: f64) -> u8 {
    gene.clamp(1.0, 127.0).round() as u8
}

pub fn decode_genome(
    g: &Genome,
    ctx: &ScaleContext,
    grid: &DurationGrid,
    bpm: f64,
) -> Result<MelodyPhrase, GenomeError> {
    if !(bpm.is_finite() && bpm > 0.0) {
        return Err(GenomeError::Bpm(bpm));
    }
    g.note_count()?;
    let mut onset = 0.0;
    let notes = g
        .genes()
        .chunks_exact(GENES_PER_NOTE)
        .map(|triple| {
            let note = Note {
                pitch: decode_pitch(triple[0], ctx),
                duration: decode_duration(triple[1], grid),
                velocity: decode_velocity(triple[2]),
                onset,
            };
            onset += note.duration;
            note
        })
        .collect();
    Ok(MelodyPhrase { notes, bpm })
}

/// Re-encodes a phrase as the genome whose genes sit exactly on the decoded values.
pub fn encode_phrase(phrase: &MelodyPhrase) -> Result<Genome, GenomeError> {
    Genome::melodic(phrase.notes.iter().flat_map(|n| [f64::from(n.pitch), n.duration, f64::from(n.velocity)]).collect())
}

/// Draws each gene uniformly from its sampling interval, in gene order.
pub fn random_genome<R: Rng + ?Sized>(rng: &mut R, bounds: &SearchBounds) -> Genome {
    let genes = bounds.intervals().iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect();
    Genome::new(genes).expect("bounded samples are finite")
}

/// Equal-tempered frequency of a MIDI note, A4 = 440 Hz.
pub fn midi_to_hz(note: u8) -> f64 {
    440.0 * 2f64.powf((f64::from(note) - 69.0) / 12.0)
}

impl fmt::Display for Note {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.pitch, self.duration, self.velocity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c_major(lo: u8, hi: u8) -> ScaleContext {
        ScaleContext::new(0, Mode::Major, lo, hi).unwrap()
    }

    fn grid5() -> DurationGrid {
        DurationGrid::new(vec![1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0]).unwrap()
    }

    /// Brute-force nearest member, ties to the lower value.
    fn nearest_brute(x: f64, set: &[f64]) -> f64 {
        let mut best = set[0];
        for &s in set {
            let (d, bd) = ((x - s).abs(), (x - best).abs());
            if d < bd || (d == bd && s < best) {
                best = s;
            }
        }
        best
    }

    fn enumerate_scale(root: u8, classes: &[u8], lo: u8, hi: u8) -> Vec<u8> {
        (lo..=hi).filter(|n| classes.iter().any(|&c| (c + root) % 12 == n % 12)).collect()
    }

    #[test]
    fn scale_pitches_c_major() {
        let expected = enumerate_scale(0, &[0, 2, 4, 5, 7, 9, 11], 60, 72);
        assert_eq!(expected, vec![60, 62, 64, 65, 67, 69, 71, 72]);
        assert_eq!(scale_pitches(&c_major(60, 72)).into_iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn scale_pitches_a_minor() {
        let ctx = ScaleContext::new(9, Mode::NaturalMinor, 57, 69).unwrap();
        let got: Vec<u8> = scale_pitches(&ctx).into_iter().collect();
        assert_eq!(got, vec![57, 59, 60, 62, 64, 65, 67, 69]);
    }

    #[test]
    fn degenerate_register_rejected() {
        assert!(matches!(ScaleContext::new(0, Mode::Major, 60, 60), Err(GenomeError::Scale(_))));
        assert!(ScaleContext::new(12, Mode::Major, 60, 72).is_err());
        // C# only inside [61, 61]... register with no scale tone
        assert!(ScaleContext::new(0, Mode::PentatonicMajor, 65, 66).is_err());
    }

    #[test]
    fn pitch_decoding() {
        let ctx = c_major(60, 72);
        let set: Vec<f64> = ctx.pitches().iter().map(|&p| f64::from(p)).collect();
        assert_eq!(nearest_brute(61.3, &set), 62.0);
        assert_eq!(decode_pitch(61.3, &ctx), 62);
        assert_eq!(decode_pitch(60.0, &ctx), 60);
        assert_eq!(decode_pitch(-500.0, &ctx), 60);
        assert_eq!(decode_pitch(1e9, &ctx), 72);
        // 61 sits halfway between 60 and 62
        assert_eq!(decode_pitch(61.0, &ctx), 60);
    }

    #[test]
    fn duration_decoding() {
        let grid = grid5();
        assert_eq!(nearest_brute(0.26, grid.allowed()), 0.25);
        assert_eq!(decode_duration(0.26, &grid), 0.25);
        assert_eq!(decode_duration(0.125, &grid), 0.125);
        assert_eq!(decode_duration(0.1875, &grid), 0.125);
        assert_eq!(decode_duration(-3.0, &grid), 1.0 / 16.0);
        assert_eq!(decode_duration(40.0, &grid), 1.0);
    }

    #[test]
    fn velocity_decoding() {
        assert_eq!(decode_velocity(100.4), 100);
        assert_eq!(decode_velocity(0.0), 1);
        assert_eq!(decode_velocity(300.0), 127);
        assert_eq!(decode_velocity(-1e12), 1);
    }

    #[test]
    fn genome_decoding() {
        let ctx = c_major(60, 72);
        let g = Genome::new(vec![61.3, 0.26, 100.4]).unwrap();
        let p = decode_genome(&g, &ctx, &grid5(), 120.0).unwrap();
        assert_eq!(p.notes, vec![Note { pitch: 62, duration: 0.25, velocity: 100, onset: 0.0 }]);
        assert_eq!(p.bpm, 120.0);

        let g2 = Genome::new(vec![61.3, 0.26, 100.4, 61.3, 0.26, 100.4]).unwrap();
        let p2 = decode_genome(&g2, &ctx, &grid5(), 120.0).unwrap();
        assert_eq!(p2.notes.len(), 2);
        assert_eq!(p2.notes[1].onset, 0.25);
        assert_eq!(p2.notes[0].pitch, p2.notes[1].pitch);
    }

    #[test]
    fn genome_invariants() {
        assert_eq!(Genome::new(vec![]), Err(GenomeError::Empty));
        assert!(matches!(Genome::new(vec![1.0, f64::NAN]), Err(GenomeError::NonFinite { index: 1, .. })));
        assert!(Genome::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(Genome::melodic(vec![1.0, 2.0]), Err(GenomeError::NotMelodic(2)));
        let g = Genome::new(vec![1.0, 2.0]).unwrap();
        assert!(decode_genome(&g, &c_major(60, 72), &grid5(), 120.0).is_err());
        assert!(serde_json::from_str::<Genome>("[]").is_err());
    }

    #[test]
    fn grid_invariants() {
        assert!(DurationGrid::new(vec![]).is_err());
        assert!(DurationGrid::new(vec![0.5, 0.25]).is_err());
        assert!(DurationGrid::new(vec![0.0, 0.25]).is_err());
        assert!(DurationGrid::new(vec![0.25, 5.0]).is_err());
        assert!(DurationGrid::new(vec![4.0]).is_ok());
    }

    #[test]
    fn random_genome_is_deterministic() {
        let cfg = MelodyConfig { notes: 8, ..MelodyConfig::default() };
        let bounds = cfg.sampling_bounds();
        let a = random_genome(&mut ChaCha8Rng::seed_from_u64(11), &bounds);
        let b = random_genome(&mut ChaCha8Rng::seed_from_u64(11), &bounds);
        assert!(a.bit_eq(&b));
        assert_eq!(a.len(), 24);
    }

    #[test]
    fn random_pitch_genes_stay_in_interval() {
        let cfg = MelodyConfig { notes: 1, ..MelodyConfig::default() };
        let bounds = cfg.sampling_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (lo, hi) = bounds.intervals()[0];
        let samples: Vec<f64> = (0..10_000).map(|_| random_genome(&mut rng, &bounds).genes()[0]).collect();
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min >= lo && max <= hi);
        // 10^4 uniform draws land within 1% of each end with overwhelming probability
        assert!(min - lo < 0.01 * (hi - lo) && hi - max < 0.01 * (hi - lo));
    }

    #[test]
    fn midi_frequency() {
        assert_eq!(midi_to_hz(69), 440.0);
        assert!((midi_to_hz(60) - 261.6256).abs() < 1e-3);
    }

    #[test]
    fn scale_serde_rebuilds_pitch_table() {
        let ctx = ScaleContext::new(2, Mode::Dorian, 50, 74).unwrap();
        let json = serde_json::to_string(&ctx).unwrap();
        let back: ScaleContext = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ctx);
        assert!(serde_json::from_str::<ScaleContext>(
            r#"{"key_root":0,"mode":"major","low_bound":70,"high_bound":60}"#
        )
        .is_err());
    }

    fn any_mode() -> impl Strategy<Value = Mode> {
        prop_oneof![
            Just(Mode::Major),
            Just(Mode::NaturalMinor),
            Just(Mode::HarmonicMinor),
            Just(Mode::Dorian),
            Just(Mode::Mixolydian),
            Just(Mode::PentatonicMajor),
            Just(Mode::PentatonicMinor),
        ]
    }

    proptest! {
        #[test]
        fn pitch_matches_brute_force(root in 0u8..12, mode in any_mode(), lo in 0u8..100, span in 12u8..27, gene in -1e6f64..1e6) {
            let ctx = ScaleContext::new(root, mode, lo, lo + span).unwrap();
            let set: Vec<f64> = ctx.pitches().iter().map(|&p| f64::from(p)).collect();
            let clamped = gene.clamp(f64::from(lo), f64::from(lo + span));
            prop_assert_eq!(f64::from(decode_pitch(gene, &ctx)), nearest_brute(clamped, &set));
        }

        #[test]
        fn pitch_is_monotone(root in 0u8..12, mode in any_mode(), a in 40.0f64..90.0, b in 40.0f64..90.0) {
            let ctx = ScaleContext::new(root, mode, 48, 80).unwrap();
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(decode_pitch(x, &ctx) <= decode_pitch(y, &ctx));
        }

        #[test]
        fn decoding_is_idempotent(genes in proptest::collection::vec(-1e3f64..1e3, 3..30)) {
            let n = genes.len() / 3 * 3;
            let cfg = MelodyConfig::default();
            let g = Genome::new(genes[..n].to_vec()).unwrap();
            let phrase = cfg.decode(&g).unwrap();
            prop_assert!(phrase.check(&cfg.scale, &cfg.grid).is_ok());
            let again = cfg.decode(&encode_phrase(&phrase).unwrap()).unwrap();
            prop_assert_eq!(again, phrase);
        }
    }
}
