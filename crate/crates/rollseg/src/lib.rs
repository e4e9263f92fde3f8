//! Note segmentation of pitch-activity matrices.
//!
//! The library turns frame-level pitch activity (dB values on a fixed time
//! grid) into binary pianorolls. Three strategies are provided:
//!
//! * hard thresholding at a dB cutoff,
//! * a two-state HMM whose observation model is a sigmoid around that cutoff
//!   ("soft thresholding"),
//! * the same HMM with the sigmoid slope and midpoint trained per pitch
//!   against ground truth.
//!
//! Supporting pieces: Nelder-Mead training ([`optim`]), MIREX-style frame
//! metrics and cross-validation harnesses ([`eval`]), Standard MIDI File
//! ingestion for ground truth ([`midi`]), CSV formats ([`io`]), and a seeded
//! synthetic corpus generator ([`synth`]). The `examples/` directory has one
//! runnable program per capability; `rollseg` is the equivalent CLI.

pub mod cli;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod io;
pub mod midi;
pub mod model;
pub mod optim;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{compute_metrics, frame_counts, FrameCounts, Metrics};
pub use hmm::{forward_backward, viterbi, DecodeRule, HmmParamSet, PitchHmmParams};
pub use model::{ActivityMatrix, FrameGrid, NoteEvent, NoteEventList, PianoRoll};
pub use segment::{segment, SegmentationStrategy, StrategyKind};
