//! Shared data model: frame grid, activity matrices, binary pianorolls and
//! note event lists. All types are immutable after construction and safe to
//! share across parallel workers.

use crate::error::{Error, Result};

/// Default lowest MIDI pitch (A0, piano range).
pub const DEFAULT_PITCH_OFFSET: u8 = 21;
/// Default number of pitch rows (88-key piano, MIDI 21..=108).
pub const DEFAULT_NUM_PITCHES: usize = 88;
/// Default analysis frame period in seconds (10 ms).
pub const DEFAULT_FRAME_PERIOD_S: f64 = 0.01;
/// Default clamp value for silent cells, in dB below the normalized maximum.
pub const DEFAULT_FLOOR_DB: f64 = -8.0;

/// Uniform time grid of analysis frames. Frame `i` starts at
/// `origin_s + i * frame_period_s` and covers the half-open interval up to
/// the next frame start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGrid {
    pub frame_period_s: f64,
    pub num_frames: usize,
    pub origin_s: f64,
}

impl FrameGrid {
    pub fn new(frame_period_s: f64, num_frames: usize) -> Result<Self> {
        Self::with_origin(frame_period_s, num_frames, 0.0)
    }

    pub fn with_origin(frame_period_s: f64, num_frames: usize, origin_s: f64) -> Result<Self> {
        if !(frame_period_s > 0.0) || !frame_period_s.is_finite() {
            return Err(Error::Invalid(format!(
                "frame period must be positive and finite, got {frame_period_s}"
            )));
        }
        if !origin_s.is_finite() {
            return Err(Error::Invalid("frame grid origin must be finite".into()));
        }
        Ok(FrameGrid { frame_period_s, num_frames, origin_s })
    }

    /// Start time of frame `i` in seconds.
    pub fn time_at(&self, i: usize) -> f64 {
        self.origin_s + i as f64 * self.frame_period_s
    }
}

/// Log-scale pitch activity matrix X(p, t): one row per pitch (ascending from
/// `pitch_offset`), one column per frame. Values are base-10 log of
/// max-normalized activity, so the working range is dB-like with 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMatrix {
    values: Vec<f64>,
    num_pitches: usize,
    pub pitch_offset: u8,
    pub grid: FrameGrid,
}

impl ActivityMatrix {
    pub fn new(values: Vec<f64>, num_pitches: usize, pitch_offset: u8, grid: FrameGrid) -> Result<Self> {
        if num_pitches == 0 {
            return Err(Error::Invalid("activity matrix needs at least one pitch row".into()));
        }
        if values.len() != num_pitches * grid.num_frames {
            return Err(Error::Shape(format!(
                "activity matrix has {} values, expected {} x {}",
                values.len(),
                num_pitches,
                grid.num_frames
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite activity value at pitch row {}, frame {}",
                bad / grid.num_frames,
                bad % grid.num_frames
            )));
        }
        Ok(ActivityMatrix { values, num_pitches, pitch_offset, grid })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, pitch_offset: u8, grid: FrameGrid) -> Result<Self> {
        let num_pitches = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.num_frames {
                return Err(Error::Shape(format!(
                    "row {} has {} frames, expected {}",
                    i + 1,
                    row.len(),
                    grid.num_frames
                )));
            }
        }
        let values = rows.into_iter().flatten().collect();
        Self::new(values, num_pitches, pitch_offset, grid)
    }

    pub fn num_pitches(&self) -> usize {
        self.num_pitches
    }

    pub fn num_frames(&self) -> usize {
        self.grid.num_frames
    }

    pub fn row(&self, p: usize) -> &[f64] {
        let t = self.grid.num_frames;
        &self.values[p * t..(p + 1) * t]
    }

    pub fn get(&self, p: usize, t: usize) -> f64 {
        self.values[p * self.grid.num_frames + t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.num_frames.max(1)).take(self.num_pitches)
    }
}

/// Binary pitch-by-frame matrix; used both for ground truth and for
/// segmentation output. Cells are 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PianoRoll {
    active: Vec<u8>,
    num_pitches: usize,
    pub pitch_offset: u8,
    grid: FrameGrid,
}

impl PianoRoll {
    pub fn zeros(num_pitches: usize, pitch_offset: u8, grid: FrameGrid) -> Self {
        PianoRoll {
            active: vec![0; num_pitches * grid.num_frames],
            num_pitches,
            pitch_offset,
            grid,
        }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>, pitch_offset: u8, grid: FrameGrid) -> Result<Self> {
        let num_pitches = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.num_frames {
                return Err(Error::Shape(format!(
                    "row {} has {} frames, expected {}",
                    i + 1,
                    row.len(),
                    grid.num_frames
                )));
            }
            if let Some(v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::Invalid(format!("pianoroll cell must be 0 or 1, got {v}")));
            }
        }
        let mut roll = PianoRoll::zeros(num_pitches, pitch_offset, grid);
        roll.active = rows.into_iter().flatten().collect();
        Ok(roll)
    }

    pub fn grid(&self) -> FrameGrid {
        self.grid
    }

    pub fn num_pitches(&self) -> usize {
        self.num_pitches
    }

    pub fn num_frames(&self) -> usize {
        self.grid.num_frames
    }

    pub fn row(&self, p: usize) -> &[u8] {
        let t = self.grid.num_frames;
        &self.active[p * t..(p + 1) * t]
    }

    pub fn get(&self, p: usize, t: usize) -> bool {
        self.active[p * self.grid.num_frames + t] != 0
    }

    pub fn set(&mut self, p: usize, t: usize, on: bool) {
        self.active[p * self.grid.num_frames + t] = on as u8;
    }

    pub fn set_row(&mut self, p: usize, row: &[u8]) {
        let t = self.grid.num_frames;
        debug_assert_eq!(row.len(), t);
        self.active[p * t..(p + 1) * t].copy_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.active.chunks_exact(self.grid.num_frames.max(1)).take(self.num_pitches)
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().map(|&v| v as usize).sum()
    }

    pub fn same_shape(&self, other: &PianoRoll) -> bool {
        self.num_pitches == other.num_pitches
            && self.grid.num_frames == other.grid.num_frames
            && self.pitch_offset == other.pitch_offset
    }
}

/// A single note: MIDI pitch, onset/offset in seconds, velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub velocity: u8,
}

/// Notes sorted by onset (ties broken by pitch ascending), each with
/// `offset_s > onset_s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoteEventList {
    notes: Vec<NoteEvent>,
}

impl NoteEventList {
    pub fn new(mut notes: Vec<NoteEvent>) -> Result<Self> {
        for n in &notes {
            if n.pitch > 127 {
                return Err(Error::Invalid(format!("note pitch {} outside 0-127", n.pitch)));
            }
            if !(n.offset_s > n.onset_s) {
                return Err(Error::Invalid(format!(
                    "note (pitch {}) has offset {} <= onset {}",
                    n.pitch, n.offset_s, n.onset_s
                )));
            }
            if n.onset_s < 0.0 {
                return Err(Error::Invalid(format!("note (pitch {}) has negative onset", n.pitch)));
            }
        }
        notes.sort_by(|a, b| {
            a.onset_s
                .partial_cmp(&b.onset_s)
                .unwrap()
                .then(a.pitch.cmp(&b.pitch))
        });
        Ok(NoteEventList { notes })
    }

    pub fn empty() -> Self {
        NoteEventList { notes: Vec::new() }
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }
}

/// Turn nonnegative linear activity P(p, t) into the log-scale matrix:
/// X = log10(P / max P), with zeros clamped to `floor_db`. The output maximum
/// is exactly 0.
pub fn normalize_and_log(
    raw: &[Vec<f64>],
    floor_db: f64,
    pitch_offset: u8,
    grid: FrameGrid,
) -> Result<ActivityMatrix> {
    let mut max = 0.0_f64;
    for (i, row) in raw.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Numerical(format!(
                    "linear activity must be finite and >= 0, got {v} at ({i}, {j})"
                )));
            }
            if v > max {
                max = v;
            }
        }
    }
    if max == 0.0 {
        return Err(Error::Numerical(
            "all-zero activity: no normalization reference".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if v == 0.0 {
                        floor_db
                    } else {
                        ((v / max).log10()).max(floor_db)
                    }
                })
                .collect()
        })
        .collect();
    ActivityMatrix::from_rows(rows, pitch_offset, grid)
}

/// Result of sampling a note list onto a frame grid.
#[derive(Debug, Clone)]
pub struct SampledRoll {
    pub roll: PianoRoll,
    /// Notes whose pitch fell outside the represented range.
    pub dropped_notes: usize,
}

/// Sample notes onto a frame grid: cell (p, i) is active iff some note of
/// pitch p satisfies `onset_s <= t_i < offset_s`, with `t_i` the frame start
/// time. Out-of-range pitches are dropped and counted, never fatal.
pub fn sample_pianoroll(
    notes: &NoteEventList,
    grid: FrameGrid,
    pitch_offset: u8,
    num_pitches: usize,
) -> SampledRoll {
    let mut roll = PianoRoll::zeros(num_pitches, pitch_offset, grid);
    let mut dropped = 0usize;
    let hi = pitch_offset as usize + num_pitches;
    for note in notes.notes() {
        let pitch = note.pitch as usize;
        if pitch < pitch_offset as usize || pitch >= hi {
            dropped += 1;
            continue;
        }
        let p = pitch - pitch_offset as usize;
        for i in 0..grid.num_frames {
            let t = grid.time_at(i);
            if t >= note.onset_s && t < note.offset_s {
                roll.set(p, i, true);
            } else if t >= note.offset_s {
                break;
            }
        }
    }
    SampledRoll { roll, dropped_notes: dropped }
}
