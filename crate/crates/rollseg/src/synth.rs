//! Seeded synthetic corpus generator: ground-truth rolls sampled from the
//! two-state Markov prior, plus noisy two-level activity matrices with
//! optional adjacent-pitch leakage. Per-piece derived seeds keep parallel
//! generation deterministic.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::{derive_rng, Corpus, Piece};
use crate::io::{
    save_activity_csv, save_manifest, save_pianoroll_csv, DatasetManifest, FileHeader,
    GroundTruthKind, ManifestEntry,
};
use crate::model::{ActivityMatrix, FrameGrid, PianoRoll, DEFAULT_FLOOR_DB, DEFAULT_FRAME_PERIOD_S, DEFAULT_PITCH_OFFSET};

/// Generator configuration.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub num_pitches: usize,
    pub num_frames: usize,
    /// Shared off->on / on->off transition probabilities.
    pub tau0: f64,
    pub tau1: f64,
    /// Emission level of active cells, dB.
    pub on_db: f64,
    /// Emission level of inactive cells, dB.
    pub off_db: f64,
    /// Gaussian noise standard deviation, dB.
    pub noise_std_db: f64,
    /// Probability that an off cell adjacent (in pitch) to an on cell emits
    /// the on level instead, a crude stand-in for harmonic confusion.
    pub leakage: f64,
    pub floor_db: f64,
    pub frame_period_s: f64,
    pub pitch_offset: u8,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_pitches: 88,
            num_frames: 6000,
            tau0: 0.02,
            tau1: 0.1,
            on_db: 0.0,
            off_db: -5.0,
            noise_std_db: 0.5,
            leakage: 0.0,
            floor_db: DEFAULT_FLOOR_DB,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
            pitch_offset: DEFAULT_PITCH_OFFSET,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.num_pitches == 0 || self.num_frames == 0 {
            return Err(Error::Invalid("synth spec needs at least one pitch and one frame".into()));
        }
        for (name, p) in [("tau0", self.tau0), ("tau1", self.tau1), ("leakage", self.leakage)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("{name} must be a probability, got {p}")));
            }
        }
        if self.on_db > 0.0 || self.off_db > 0.0 || self.on_db < self.floor_db || self.off_db < self.floor_db {
            return Err(Error::Invalid(format!(
                "emission levels must lie within [{}, 0], got on={} off={}",
                self.floor_db, self.on_db, self.off_db
            )));
        }
        if self.noise_std_db < 0.0 {
            return Err(Error::Invalid("noise std must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FrameGrid> {
        FrameGrid::new(self.frame_period_s, self.num_frames)
    }
}

/// Sample a ground-truth roll: each pitch row is an independent Markov chain
/// from q_0 = 0 with the configured (tau0, tau1). Deterministic per
/// (seed, piece_index).
pub fn generate_pianoroll(spec: &SynthSpec, piece_index: u64) -> Result<PianoRoll> {
    spec.validate()?;
    let mut rng = derive_rng(spec.seed, piece_index * 2);
    let mut roll = PianoRoll::zeros(spec.num_pitches, spec.pitch_offset, spec.grid()?);
    for p in 0..spec.num_pitches {
        let mut state = 0u8;
        for t in 0..spec.num_frames {
            let switch = if state == 0 { spec.tau0 } else { spec.tau1 };
            if rng.gen::<f64>() < switch {
                state = 1 - state;
            }
            roll.set(p, t, state == 1);
        }
    }
    Ok(roll)
}

/// Emit a noisy activity matrix for a roll: on/off levels, optional
/// adjacent-pitch leakage, Gaussian noise in dB, clamp to [floor, 0], and
/// re-pin the maximum to 0 when anything sounds.
pub fn generate_activity(roll: &PianoRoll, spec: &SynthSpec, piece_index: u64) -> Result<ActivityMatrix> {
    spec.validate()?;
    if roll.num_pitches() != spec.num_pitches || roll.num_frames() != spec.num_frames {
        return Err(Error::Shape("roll dimensions do not match the synth spec".into()));
    }
    let mut rng = derive_rng(spec.seed, piece_index * 2 + 1);
    let noise = Normal::new(0.0, spec.noise_std_db.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numerical(format!("noise distribution: {e}")))?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.num_pitches);
    for p in 0..spec.num_pitches {
        let mut row = Vec::with_capacity(spec.num_frames);
        for t in 0..spec.num_frames {
            let mut level = if roll.get(p, t) { spec.on_db } else { spec.off_db };
            if !roll.get(p, t) && spec.leakage > 0.0 {
                let neighbor_on = (p > 0 && roll.get(p - 1, t))
                    || (p + 1 < spec.num_pitches && roll.get(p + 1, t));
                if neighbor_on && rng.gen::<f64>() < spec.leakage {
                    level = spec.on_db;
                }
            }
            let n = if spec.noise_std_db > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            row.push((level + n).clamp(spec.floor_db, 0.0));
        }
        rows.push(row);
    }

    // re-pin the maximum to 0 (skip all-silent pieces, where shifting the
    // noise floor up would be meaningless)
    if roll.count_active() > 0 {
        let max = rows.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        if max < 0.0 {
            for row in &mut rows {
                for v in row.iter_mut() {
                    *v = (*v - max).max(spec.floor_db);
                }
            }
        }
    }
    ActivityMatrix::from_rows(rows, spec.pitch_offset, spec.grid()?)
}

/// Generate one piece (roll + matrix) under per-piece derived seeds.
pub fn generate_piece(spec: &SynthSpec, piece_index: u64) -> Result<Piece> {
    let truth = generate_pianoroll(spec, piece_index)?;
    let activity = generate_activity(&truth, spec, piece_index)?;
    Ok(Piece { id: format!("synth-{piece_index:03}"), activity, truth })
}

/// Generate an in-memory corpus of `num_pieces` pieces.
pub fn generate_corpus(spec: &SynthSpec, num_pieces: usize) -> Result<Corpus> {
    let pieces = (0..num_pieces as u64)
        .map(|i| generate_piece(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(pieces)
}

/// Write a corpus to disk in the standard file layout: per piece an activity
/// CSV and pianoroll CSV, plus a manifest referencing them. Returns the
/// manifest path.
pub fn write_corpus(
    dir: &std::path::Path,
    spec: &SynthSpec,
    num_pieces: usize,
    header: Option<&FileHeader>,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(num_pieces);
    for i in 0..num_pieces as u64 {
        let piece = generate_piece(spec, i)?;
        let activity_name = format!("{}_activity.csv", piece.id);
        let truth_name = format!("{}_truth.csv", piece.id);
        save_activity_csv(&dir.join(&activity_name), &piece.activity, header)?;
        save_pianoroll_csv(&dir.join(&truth_name), &piece.truth, header)?;
        // manifest entries stay relative to the manifest's own directory
        entries.push(ManifestEntry {
            id: piece.id,
            activity_path: activity_name.into(),
            groundtruth_path: truth_name.into(),
            kind: GroundTruthKind::PianorollCsv,
        });
    }
    let manifest = DatasetManifest { label: Some("synthetic".into()), entries };
    let manifest_path = dir.join("manifest.csv");
    save_manifest(&manifest_path, &manifest, header)?;
    Ok(manifest_path)
}
