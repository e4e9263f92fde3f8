//! Note segmentation strategies: hard thresholding (HT), soft thresholding
//! via the two-state HMM (ST), and optimized soft thresholding (OST), plus
//! minimum-duration pruning and transition estimation from ground truth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{
    clamp_prob, decode_posterior, forward_backward, viterbi, DecodeRule, HmmParamSet,
    PitchHmmParams, DEFAULT_TAU0, DEFAULT_TAU1,
};
use crate::model::{ActivityMatrix, PianoRoll};

/// Which of the three strategies to run, with its constants.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyKind {
    /// Fixed cutoff on the log activity matrix.
    HardThreshold { beta_ht: f64 },
    /// HMM decode with every pitch at (alpha, beta) = (0, beta_ht).
    SoftThreshold { beta_ht: f64, transitions: Vec<(f64, f64)> },
    /// HMM decode with per-pitch trained parameters.
    OptimizedSoftThreshold { params: HmmParamSet },
}

/// A full segmentation configuration: strategy plus shared post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationStrategy {
    pub kind: StrategyKind,
    /// Runs of active frames shorter than this are zeroed; 0 or 1 disables.
    pub min_duration_frames: usize,
    pub decode_rule: DecodeRule,
}

impl SegmentationStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        SegmentationStrategy { kind, min_duration_frames: 0, decode_rule: DecodeRule::default() }
    }

    pub fn with_min_duration(mut self, k: usize) -> Self {
        self.min_duration_frames = k;
        self
    }

    pub fn with_decode_rule(mut self, rule: DecodeRule) -> Self {
        self.decode_rule = rule;
        self
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            StrategyKind::HardThreshold { beta_ht } => format!("ht(beta={beta_ht:.3})"),
            StrategyKind::SoftThreshold { beta_ht, .. } => format!("st(beta={beta_ht:.3})"),
            StrategyKind::OptimizedSoftThreshold { .. } => "ost".to_string(),
        }
    }
}

/// Per-pitch transition estimates from a ground-truth roll, with the q_0 = 0
/// prefix. Pitches with no visits to a state fall back to pooled all-pitch
/// estimates, then to fixed defaults. Results are clamped to [eps, 1-eps].
pub fn estimate_transitions(roll: &PianoRoll) -> Result<Vec<(f64, f64)>> {
    estimate_transitions_multi(&[roll])
}

/// Pooled variant over several pieces; counts accumulate per pitch across
/// all rolls (each roll contributes its own q_0 = 0 boundary).
pub fn estimate_transitions_multi(rolls: &[&PianoRoll]) -> Result<Vec<(f64, f64)>> {
    if rolls.is_empty() {
        return Err(Error::Invalid("no pianorolls to estimate transitions from".into()));
    }
    let num_pitches = rolls[0].num_pitches();
    for r in rolls {
        if r.num_pitches() != num_pitches {
            return Err(Error::Shape("pitch count differs across training rolls".into()));
        }
        if r.num_frames() == 0 {
            return Err(Error::Invalid("zero-length pianoroll in transition estimation".into()));
        }
    }

    // per-pitch counts: from-0 total, 0->1, from-1 total, 1->0
    let mut counts = vec![[0u64; 4]; num_pitches];
    for roll in rolls {
        for (p, row) in roll.rows().enumerate() {
            let mut prev = 0u8; // q_0 = 0
            for &q in row {
                if prev == 0 {
                    counts[p][0] += 1;
                    if q == 1 {
                        counts[p][1] += 1;
                    }
                } else {
                    counts[p][2] += 1;
                    if q == 0 {
                        counts[p][3] += 1;
                    }
                }
                prev = q;
            }
        }
    }

    let pooled: [u64; 4] = counts.iter().fold([0; 4], |mut acc, c| {
        for i in 0..4 {
            acc[i] += c[i];
        }
        acc
    });
    let pooled_tau0 = ratio(pooled[1], pooled[0]);
    let pooled_tau1 = ratio(pooled[3], pooled[2]);

    Ok(counts
        .iter()
        .map(|c| {
            let tau0 = ratio(c[1], c[0]).or(pooled_tau0).unwrap_or(DEFAULT_TAU0);
            let tau1 = ratio(c[3], c[2]).or(pooled_tau1).unwrap_or(DEFAULT_TAU1);
            (clamp_prob(tau0), clamp_prob(tau1))
        })
        .collect())
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Binary roll from a fixed threshold: active iff X(p, t) >= beta_ht.
pub fn hard_threshold(matrix: &ActivityMatrix, beta_ht: f64) -> PianoRoll {
    let mut roll = PianoRoll::zeros(matrix.num_pitches(), matrix.pitch_offset, matrix.grid);
    for (p, xs) in matrix.rows().enumerate() {
        let row: Vec<u8> = xs.iter().map(|&x| (x >= beta_ht) as u8).collect();
        roll.set_row(p, &row);
    }
    roll
}

/// Zero every maximal run of active frames shorter than `k`; k of 0 or 1 is
/// the identity.
pub fn prune_min_duration(roll: &PianoRoll, k: usize) -> PianoRoll {
    if k <= 1 {
        return roll.clone();
    }
    let mut out = roll.clone();
    let t_len = roll.num_frames();
    for p in 0..roll.num_pitches() {
        let row = roll.row(p);
        let mut t = 0;
        while t < t_len {
            if row[t] == 1 {
                let start = t;
                while t < t_len && row[t] == 1 {
                    t += 1;
                }
                if t - start < k {
                    for i in start..t {
                        out.set(p, i, false);
                    }
                }
            } else {
                t += 1;
            }
        }
    }
    out
}

/// Run a segmentation strategy over a full activity matrix. Pitch rows are
/// independent chains and are processed as a parallel map; output order is
/// deterministic regardless of worker count.
pub fn segment(matrix: &ActivityMatrix, strategy: &SegmentationStrategy) -> Result<PianoRoll> {
    let roll = match &strategy.kind {
        StrategyKind::HardThreshold { beta_ht } => hard_threshold(matrix, *beta_ht),
        StrategyKind::SoftThreshold { beta_ht, transitions } => {
            if transitions.len() != matrix.num_pitches() {
                return Err(Error::Shape(format!(
                    "{} transition pairs for {} pitch rows",
                    transitions.len(),
                    matrix.num_pitches()
                )));
            }
            let params = HmmParamSet::soft_threshold(*beta_ht, transitions)?;
            decode_all(matrix, &params, strategy.decode_rule)?
        }
        StrategyKind::OptimizedSoftThreshold { params } => {
            if params.len() != matrix.num_pitches() {
                return Err(Error::Shape(format!(
                    "{} parameter rows for {} pitch rows",
                    params.len(),
                    matrix.num_pitches()
                )));
            }
            decode_all(matrix, params, strategy.decode_rule)?
        }
    };
    Ok(if strategy.min_duration_frames > 1 {
        prune_min_duration(&roll, strategy.min_duration_frames)
    } else {
        roll
    })
}

fn decode_all(matrix: &ActivityMatrix, params: &HmmParamSet, rule: DecodeRule) -> Result<PianoRoll> {
    let rows: Result<Vec<Vec<u8>>> = (0..matrix.num_pitches())
        .into_par_iter()
        .map(|p| decode_row(matrix.row(p), &params.per_pitch[p], rule))
        .collect();
    let mut roll = PianoRoll::zeros(matrix.num_pitches(), matrix.pitch_offset, matrix.grid);
    for (p, row) in rows?.into_iter().enumerate() {
        roll.set_row(p, &row);
    }
    Ok(roll)
}

fn decode_row(xs: &[f64], params: &PitchHmmParams, rule: DecodeRule) -> Result<Vec<u8>> {
    match rule {
        DecodeRule::PosteriorThreshold => Ok(decode_posterior(&forward_backward(xs, params)?)),
        DecodeRule::Viterbi => viterbi(xs, params),
    }
}
