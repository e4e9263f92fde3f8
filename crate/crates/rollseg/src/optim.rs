//! Training machinery: Nelder-Mead simplex minimization, the LMSE objective
//! on smoothed posteriors, per-pitch {alpha, beta} training, and ROC-sweep
//! selection of the hard threshold.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{compute_metrics, FrameCounts};
use crate::hmm::{forward_backward_into, HmmParamSet, PitchHmmParams, ALPHA_BOUNDS, BETA_BOUNDS};
use crate::model::{ActivityMatrix, PianoRoll};
use crate::segment::hard_threshold;

/// Nelder-Mead configuration. The coefficient set is the standard
/// (1, 2, 1/2, 1/2); bounds, when present, act through a quadratic penalty
/// added to the objective so the simplex geometry stays intact.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset added per coordinate to build the initial simplex.
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Stop when the objective spread across vertices falls below this.
    pub objective_tolerance: f64,
    /// Stop when the simplex diameter falls below this.
    pub diameter_tolerance: f64,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub penalty_weight: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.5,
            max_iterations: 200,
            objective_tolerance: 1e-6,
            diameter_tolerance: 1e-4,
            bounds: None,
            penalty_weight: 1e3,
        }
    }
}

impl SimplexOptions {
    /// The box used for {alpha, beta} training.
    pub fn with_sigmoid_bounds(mut self) -> Self {
        self.bounds = Some(vec![ALPHA_BOUNDS, BETA_BOUNDS]);
        self
    }
}

/// Outcome of a simplex run. `trace` holds the best-vertex objective value
/// after every iteration; it is non-increasing.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Minimize `objective` from `start` with the Nelder-Mead simplex method.
/// The returned value never exceeds the objective at the start point.
pub fn nelder_mead<F>(objective: F, start: &[f64], options: &SimplexOptions) -> Result<SimplexResult>
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    if n == 0 {
        return Err(Error::Invalid("nelder_mead needs at least one dimension".into()));
    }
    if let Some(bounds) = &options.bounds {
        if bounds.len() != n {
            return Err(Error::Invalid("bounds dimension does not match start point".into()));
        }
    }
    let penalized = |v: &[f64]| -> f64 {
        let mut val = objective(v);
        if let Some(bounds) = &options.bounds {
            for (x, &(lo, hi)) in v.iter().zip(bounds) {
                let d = if *x < lo { lo - x } else if *x > hi { x - hi } else { 0.0 };
                val += options.penalty_weight * d * d;
            }
        }
        val
    };

    let f_start = penalized(start);
    if !f_start.is_finite() {
        return Err(Error::Numerical(format!(
            "objective is not finite at the start point {start:?}"
        )));
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += options.initial_step;
        let f = penalized(&v);
        simplex.push((v, f));
    }

    let mut trace = Vec::with_capacity(options.max_iterations);
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if iterations >= options.max_iterations
            || (spread <= options.objective_tolerance && diameter <= options.diameter_tolerance)
        {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(v, _)| v[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].0.clone();
        let f_best = simplex[0].1;
        let f_second_worst = simplex[n - 1].1;
        let f_worst = simplex[n].1;

        let point_along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point_along(options.reflection);
        let f_reflected = penalized(&reflected);

        if f_reflected < f_best {
            let expanded = point_along(options.expansion);
            let f_expanded = penalized(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < f_second_worst {
            simplex[n] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < f_worst {
                point_along(options.reflection * options.contraction)
            } else {
                point_along(-options.contraction)
            };
            let f_contracted = penalized(&contracted);
            if f_contracted < f_worst.min(f_reflected) {
                simplex[n] = (contracted, f_contracted);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = vertex
                        .0
                        .iter()
                        .zip(&best)
                        .map(|(x, b)| b + options.shrink * (x - b))
                        .collect();
                    let f = penalized(&v);
                    *vertex = (v, f);
                }
            }
        }

        let best_now = simplex
            .iter()
            .map(|(_, f)| *f)
            .fold(f64::INFINITY, f64::min);
        trace.push(best_now);
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (argmin, value) = simplex.swap_remove(0);
    Ok(SimplexResult { argmin, value, iterations, trace })
}

/// Paired activity matrices and ground-truth rolls with matching dimensions.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pairs: Vec<(ActivityMatrix, PianoRoll)>,
}

impl TrainingSet {
    pub fn new(pairs: Vec<(ActivityMatrix, PianoRoll)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Invalid("training set is empty".into()));
        }
        let num_pitches = pairs[0].0.num_pitches();
        for (i, (m, r)) in pairs.iter().enumerate() {
            if m.num_pitches() != r.num_pitches()
                || m.num_frames() != r.num_frames()
                || m.pitch_offset != r.pitch_offset
            {
                return Err(Error::Shape(format!(
                    "training pair {i}: activity {}x{} vs roll {}x{}",
                    m.num_pitches(),
                    m.num_frames(),
                    r.num_pitches(),
                    r.num_frames()
                )));
            }
            if m.num_pitches() != num_pitches {
                return Err(Error::Shape("training pairs disagree on pitch count".into()));
            }
        }
        Ok(TrainingSet { pairs })
    }

    pub fn pairs(&self) -> &[(ActivityMatrix, PianoRoll)] {
        &self.pairs
    }

    pub fn num_pitches(&self) -> usize {
        self.pairs[0].0.num_pitches()
    }
}

/// Mean squared error between posterior rows and a binary roll, over all
/// cells. Always in [0, 1].
pub fn lmse(posteriors: &[Vec<f64>], truth: &PianoRoll) -> Result<f64> {
    if posteriors.len() != truth.num_pitches() {
        return Err(Error::Shape(format!(
            "{} posterior rows vs {} roll rows",
            posteriors.len(),
            truth.num_pitches()
        )));
    }
    let mut sum = 0.0;
    let mut cells = 0usize;
    for (p, row) in posteriors.iter().enumerate() {
        if row.len() != truth.num_frames() {
            return Err(Error::Shape(format!(
                "posterior row {p} has {} frames, roll has {}",
                row.len(),
                truth.num_frames()
            )));
        }
        sum += lmse_row_sum(row, truth.row(p));
        cells += row.len();
    }
    Ok(sum / cells as f64)
}

fn lmse_row_sum(posteriors: &[f64], truth: &[u8]) -> f64 {
    posteriors
        .iter()
        .zip(truth)
        .map(|(&eta, &q)| {
            let d = eta - q as f64;
            d * d
        })
        .sum()
}

/// LMSE of the smoothed posteriors for one pitch under (alpha, beta), over
/// that pitch's rows across all training pieces.
fn pitch_objective(
    rows: &[(&[f64], &[u8])],
    tau0: f64,
    tau1: f64,
    alpha: f64,
    beta: f64,
    buf: &mut Vec<f64>,
) -> f64 {
    let params = PitchHmmParams { tau0, tau1, alpha, beta };
    let mut sum = 0.0;
    let mut cells = 0usize;
    for (xs, truth) in rows {
        buf.resize(xs.len(), 0.0);
        if forward_backward_into(xs, &params, buf).is_err() {
            return f64::INFINITY;
        }
        sum += lmse_row_sum(buf, truth);
        cells += xs.len();
    }
    sum / cells as f64
}

/// Training outcome: the parameter set plus per-pitch diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: HmmParamSet,
    /// Pitches with no ground-truth activity that inherited the pooled optimum.
    pub fallback_pitches: Vec<usize>,
    /// Final LMSE per pitch (at the trained parameters).
    pub final_lmse: Vec<f64>,
    /// LMSE per pitch at the start point (0, beta_ht_init).
    pub start_lmse: Vec<f64>,
}

/// Train per-pitch {alpha, beta} by Nelder-Mead on the LMSE objective,
/// starting every pitch from (0, beta_ht_init). Pitches with zero
/// ground-truth activity inherit a single pooled optimum trained over all
/// pitches jointly.
pub fn train_ost(
    training: &TrainingSet,
    beta_ht_init: f64,
    transitions: &[(f64, f64)],
    options: &SimplexOptions,
) -> Result<TrainOutcome> {
    if transitions.len() != training.num_pitches() {
        return Err(Error::Shape(format!(
            "{} transition pairs for {} pitches",
            transitions.len(),
            training.num_pitches()
        )));
    }
    let options = bounded(options);
    let num_pitches = training.num_pitches();
    let start = [0.0, beta_ht_init];

    let per_pitch: Vec<Result<Option<(PitchHmmParams, f64, f64)>>> = (0..num_pitches)
        .into_par_iter()
        .map(|p| {
            let rows: Vec<(&[f64], &[u8])> = training
                .pairs()
                .iter()
                .map(|(m, r)| (m.row(p), r.row(p)))
                .collect();
            let active = rows.iter().any(|(_, truth)| truth.iter().any(|&q| q == 1));
            if !active {
                return Ok(None);
            }
            let (tau0, tau1) = transitions[p];
            let objective = |v: &[f64]| {
                let mut buf = Vec::new();
                pitch_objective(&rows, tau0, tau1, v[0], v[1], &mut buf)
            };
            let start_value = objective(&start);
            let result = nelder_mead(objective, &start, &options)?;
            Ok(Some((
                PitchHmmParams::new(tau0, tau1, result.argmin[0], result.argmin[1])?,
                result.value,
                start_value,
            )))
        })
        .collect();

    let mut fallback_pitches = Vec::new();
    let mut trained: Vec<Option<(PitchHmmParams, f64, f64)>> = Vec::with_capacity(num_pitches);
    for (p, r) in per_pitch.into_iter().enumerate() {
        let slot = r?;
        if slot.is_none() {
            fallback_pitches.push(p);
        }
        trained.push(slot);
    }

    // Pooled optimum for pitches that never sound in the training data.
    let pooled = if fallback_pitches.is_empty() {
        None
    } else {
        Some(train_pooled(training, beta_ht_init, transitions, &options)?)
    };

    let mut params = Vec::with_capacity(num_pitches);
    let mut final_lmse = Vec::with_capacity(num_pitches);
    let mut start_lmse = Vec::with_capacity(num_pitches);
    for (p, slot) in trained.into_iter().enumerate() {
        match slot {
            Some((pp, value, start_value)) => {
                params.push(pp);
                final_lmse.push(value);
                start_lmse.push(start_value);
            }
            None => {
                let (alpha, beta) = pooled.expect("pooled optimum exists when fallbacks exist");
                let (tau0, tau1) = transitions[p];
                params.push(PitchHmmParams::new(tau0, tau1, alpha, beta)?);
                final_lmse.push(0.0);
                start_lmse.push(0.0);
            }
        }
    }

    Ok(TrainOutcome {
        params: HmmParamSet { per_pitch: params },
        fallback_pitches,
        final_lmse,
        start_lmse,
    })
}

/// Optimize a single (alpha, beta) pair shared by every pitch (each pitch
/// keeps its own transitions). Used for fallback pitches and `--global` mode.
pub fn train_global(
    training: &TrainingSet,
    beta_ht_init: f64,
    transitions: &[(f64, f64)],
    options: &SimplexOptions,
) -> Result<HmmParamSet> {
    if transitions.len() != training.num_pitches() {
        return Err(Error::Shape(format!(
            "{} transition pairs for {} pitches",
            transitions.len(),
            training.num_pitches()
        )));
    }
    let options = bounded(options);
    let (alpha, beta) = train_pooled(training, beta_ht_init, transitions, &options)?;
    let per_pitch = transitions
        .iter()
        .map(|&(t0, t1)| PitchHmmParams::new(t0, t1, alpha, beta))
        .collect::<Result<Vec<_>>>()?;
    Ok(HmmParamSet { per_pitch })
}

fn bounded(options: &SimplexOptions) -> SimplexOptions {
    let mut o = options.clone();
    if o.bounds.is_none() {
        o.bounds = Some(vec![ALPHA_BOUNDS, BETA_BOUNDS]);
    }
    o
}

fn train_pooled(
    training: &TrainingSet,
    beta_ht_init: f64,
    transitions: &[(f64, f64)],
    options: &SimplexOptions,
) -> Result<(f64, f64)> {
    let num_pitches = training.num_pitches();
    let objective = |v: &[f64]| {
        let sums: Vec<(f64, usize)> = (0..num_pitches)
            .into_par_iter()
            .map(|p| {
                let rows: Vec<(&[f64], &[u8])> = training
                    .pairs()
                    .iter()
                    .map(|(m, r)| (m.row(p), r.row(p)))
                    .collect();
                let (tau0, tau1) = transitions[p];
                let mut buf = Vec::new();
                let cells: usize = rows.iter().map(|(xs, _)| xs.len()).sum();
                let v = pitch_objective(&rows, tau0, tau1, v[0], v[1], &mut buf);
                (v * cells as f64, cells)
            })
            .collect();
        let total_cells: usize = sums.iter().map(|(_, c)| c).sum();
        sums.iter().map(|(s, _)| s).sum::<f64>() / total_cells as f64
    };
    let result = nelder_mead(objective, &[0.0, beta_ht_init], options)?;
    Ok((result.argmin[0], result.argmin[1]))
}

/// Threshold-selection criterion for the ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RocCriterion {
    /// Argmax of frame-based F-measure over the grid.
    #[default]
    FMeasure,
    /// Argmax of Youden's J statistic (TPR - FPR).
    Youden,
}

/// One row of the ROC table: confusion counts at a candidate threshold.
#[derive(Debug, Clone, Copy)]
pub struct RocPoint {
    pub threshold: f64,
    pub counts: FrameCounts,
}

impl RocPoint {
    pub fn tpr(&self) -> f64 {
        let pos = self.counts.true_pos + self.counts.false_neg;
        if pos == 0 {
            0.0
        } else {
            self.counts.true_pos as f64 / pos as f64
        }
    }

    pub fn fpr(&self) -> f64 {
        let neg = self.counts.false_pos + self.counts.true_neg;
        if neg == 0 {
            0.0
        } else {
            self.counts.false_pos as f64 / neg as f64
        }
    }
}

/// The default sweep grid: [-5, 0] dB in 0.1 dB steps, ascending.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=50).map(|i| -5.0 + 0.1 * i as f64).collect()
}

/// Sweep hard thresholds over the grid and pick the best one under the given
/// criterion. Ties break toward the higher (more conservative) threshold.
/// Returns the winning threshold and the full ROC table.
pub fn select_beta_ht(
    dataset: &TrainingSet,
    grid: &[f64],
    criterion: RocCriterion,
) -> Result<(f64, Vec<RocPoint>)> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty threshold grid".into()));
    }
    let any_positive = dataset
        .pairs()
        .iter()
        .any(|(_, roll)| roll.count_active() > 0);
    if !any_positive && criterion == RocCriterion::FMeasure {
        return Err(Error::Invalid(
            "ground truth is all-silent: F-measure is undefined at every threshold; \
             use the youden criterion instead"
                .into(),
        ));
    }

    let mut sorted_grid: Vec<f64> = grid.to_vec();
    sorted_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let table: Vec<RocPoint> = sorted_grid
        .par_iter()
        .map(|&threshold| {
            let mut counts = FrameCounts::default();
            for (matrix, truth) in dataset.pairs() {
                let est = hard_threshold(matrix, threshold);
                counts = counts + crate::eval::frame_counts(&est, truth).expect("dims checked");
            }
            RocPoint { threshold, counts }
        })
        .collect();

    let mut best_score = f64::NEG_INFINITY;
    let mut best_threshold = sorted_grid[0];
    for point in &table {
        let score = match criterion {
            RocCriterion::FMeasure => compute_metrics(&point.counts).fmeas,
            RocCriterion::Youden => point.tpr() - point.fpr(),
        };
        // ascending grid + ">=" leaves the highest threshold among ties
        if score >= best_score {
            best_score = score;
            best_threshold = point.threshold;
        }
    }
    Ok((best_threshold, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActivityMatrix, FrameGrid, PianoRoll};

    fn grid(n: usize) -> FrameGrid {
        FrameGrid::new(0.01, n).unwrap()
    }

    #[test]
    fn quadratic_minimum_found() {
        let f = |v: &[f64]| (v[0] - 1.0).powi(2) + (v[1] + 2.0).powi(2);
        let r = nelder_mead(f, &[0.0, -1.0], &SimplexOptions::default()).unwrap();
        assert!((r.argmin[0] - 1.0).abs() < 1e-4, "{:?}", r.argmin);
        assert!((r.argmin[1] + 2.0).abs() < 1e-4, "{:?}", r.argmin);
    }

    #[test]
    fn start_at_minimum_stays_put() {
        let f = |v: &[f64]| v[0] * v[0] + v[1] * v[1];
        let r = nelder_mead(f, &[0.0, 0.0], &SimplexOptions::default()).unwrap();
        assert!(r.value <= f(&[0.0, 0.0]) + 1e-12);
        assert!(r.argmin[0].abs() < 1e-3 && r.argmin[1].abs() < 1e-3);
    }

    #[test]
    fn rosenbrock_converges() {
        let f = |v: &[f64]| 100.0 * (v[1] - v[0] * v[0]).powi(2) + (1.0 - v[0]).powi(2);
        let opts = SimplexOptions {
            max_iterations: 2000,
            objective_tolerance: 1e-12,
            diameter_tolerance: 1e-8,
            ..SimplexOptions::default()
        };
        let r = nelder_mead(f, &[-1.2, 1.0], &opts).unwrap();
        assert!((r.argmin[0] - 1.0).abs() < 1e-3, "{:?}", r.argmin);
        assert!((r.argmin[1] - 1.0).abs() < 1e-3, "{:?}", r.argmin);
    }

    #[test]
    fn trace_is_monotone_non_increasing() {
        let f = |v: &[f64]| (v[0] + 3.0).powi(2) + (v[1] - 0.5).powi(4);
        let r = nelder_mead(f, &[5.0, 5.0], &SimplexOptions::default()).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64]| f64::NAN;
        assert!(matches!(
            nelder_mead(f, &[0.0], &SimplexOptions::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn penalty_keeps_result_near_bounds() {
        // unconstrained minimum at beta = 1, outside [-6, 0]
        let f = |v: &[f64]| v[0] * v[0] + (v[1] - 1.0).powi(2);
        let opts = SimplexOptions {
            max_iterations: 1000,
            ..SimplexOptions::default()
        }
        .with_sigmoid_bounds();
        let r = nelder_mead(f, &[0.0, -1.0], &opts).unwrap();
        assert!(r.argmin[1] < 0.01, "beta {} should sit near the bound", r.argmin[1]);
    }

    #[test]
    fn lmse_hand_values() {
        let truth = PianoRoll::from_rows(vec![vec![1, 1, 0]], 21, grid(3)).unwrap();
        let v = lmse(&[vec![1.0, 0.0, 0.5]], &truth).unwrap();
        assert!((v - 5.0 / 12.0).abs() < 1e-15);

        let exact = lmse(&[vec![1.0, 1.0, 0.0]], &truth).unwrap();
        assert_eq!(exact, 0.0);

        let flat = lmse(&[vec![0.5, 0.5, 0.5]], &truth).unwrap();
        assert!((flat - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lmse_rejects_dimension_mismatch() {
        let truth = PianoRoll::from_rows(vec![vec![1, 0]], 21, grid(2)).unwrap();
        assert!(lmse(&[vec![0.5]], &truth).is_err());
        assert!(lmse(&[vec![0.5, 0.5], vec![0.5, 0.5]], &truth).is_err());
    }

    fn separable_set() -> (TrainingSet, Vec<(f64, f64)>) {
        // active cells at 0 dB, inactive at -5 dB: separable at any
        // threshold in between
        let truth_rows = vec![vec![0, 1, 1, 0, 0, 1, 1, 1, 0, 0]];
        let act_rows: Vec<Vec<f64>> = truth_rows
            .iter()
            .map(|r| r.iter().map(|&q| if q == 1 { 0.0 } else { -5.0 }).collect())
            .collect();
        let matrix = ActivityMatrix::from_rows(act_rows, 21, grid(10)).unwrap();
        let truth = PianoRoll::from_rows(truth_rows, 21, grid(10)).unwrap();
        let transitions = vec![(0.3, 0.3)];
        (TrainingSet::new(vec![(matrix, truth)]).unwrap(), transitions)
    }

    #[test]
    fn train_ost_beats_start_on_separable_data() {
        let (set, transitions) = separable_set();
        let outcome = train_ost(&set, -1.0, &transitions, &SimplexOptions::default()).unwrap();
        assert!(outcome.fallback_pitches.is_empty());
        assert!(outcome.final_lmse[0] <= outcome.start_lmse[0]);
        assert!(outcome.final_lmse[0] < 0.01, "lmse {}", outcome.final_lmse[0]);
    }

    #[test]
    fn train_ost_silent_pitch_inherits_pooled() {
        let truth_rows = vec![vec![0, 1, 1, 0], vec![0, 0, 0, 0]];
        let act_rows = vec![vec![-5.0, 0.0, 0.0, -5.0], vec![-5.0; 4]];
        let matrix = ActivityMatrix::from_rows(act_rows, 21, grid(4)).unwrap();
        let truth = PianoRoll::from_rows(truth_rows, 21, grid(4)).unwrap();
        let set = TrainingSet::new(vec![(matrix, truth)]).unwrap();
        let transitions = vec![(0.3, 0.3), (0.3, 0.3)];
        let outcome = train_ost(&set, -2.5, &transitions, &SimplexOptions::default()).unwrap();
        assert_eq!(outcome.fallback_pitches, vec![1]);
        assert_eq!(outcome.params.per_pitch[1].alpha, outcome.params.per_pitch[0].alpha);
    }

    #[test]
    fn select_beta_ht_perfect_separation_tie_breaks_high() {
        let (set, _) = separable_set();
        let (beta, table) = select_beta_ht(&set, &default_threshold_grid(), RocCriterion::FMeasure).unwrap();
        // every threshold in (-5, 0] is perfect; ties resolve to the top
        assert!((beta - 0.0).abs() < 1e-12, "beta {beta}");
        assert_eq!(table.len(), 51);
    }

    #[test]
    fn select_beta_ht_matches_exhaustive_sweep() {
        let act = vec![vec![0.0, -0.6, -1.4, -2.2, -3.0, -4.4]];
        let tru = vec![vec![1, 1, 1, 0, 0, 0]];
        let matrix = ActivityMatrix::from_rows(act, 21, grid(6)).unwrap();
        let truth = PianoRoll::from_rows(tru, 21, grid(6)).unwrap();
        let set = TrainingSet::new(vec![(matrix.clone(), truth.clone())]).unwrap();
        let grid_vals = default_threshold_grid();
        let (beta, _) = select_beta_ht(&set, &grid_vals, RocCriterion::FMeasure).unwrap();

        // independent sweep
        let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &g in &grid_vals {
            let est = hard_threshold(&matrix, g);
            let counts = crate::eval::frame_counts(&est, &truth).unwrap();
            let f = compute_metrics(&counts).fmeas;
            if f >= best.0 {
                best = (f, g);
            }
        }
        assert_eq!(beta, best.1);
    }

    #[test]
    fn select_beta_ht_all_silent_advises_youden() {
        let matrix = ActivityMatrix::from_rows(vec![vec![-3.0, -4.0]], 21, grid(2)).unwrap();
        let truth = PianoRoll::from_rows(vec![vec![0, 0]], 21, grid(2)).unwrap();
        let set = TrainingSet::new(vec![(matrix, truth)]).unwrap();
        let err = select_beta_ht(&set, &default_threshold_grid(), RocCriterion::FMeasure).unwrap_err();
        assert!(err.to_string().contains("youden"));
        assert!(select_beta_ht(
            &TrainingSet::new(vec![(
                ActivityMatrix::from_rows(vec![vec![-3.0, -4.0]], 21, grid(2)).unwrap(),
                PianoRoll::from_rows(vec![vec![0, 0]], 21, grid(2)).unwrap()
            )])
            .unwrap(),
            &default_threshold_grid(),
            RocCriterion::Youden
        )
        .is_ok());
    }

    #[test]
    fn select_beta_ht_invariant_under_piece_reordering() {
        let m1 = ActivityMatrix::from_rows(vec![vec![0.0, -3.0, -1.2]], 21, grid(3)).unwrap();
        let r1 = PianoRoll::from_rows(vec![vec![1, 0, 1]], 21, grid(3)).unwrap();
        let m2 = ActivityMatrix::from_rows(vec![vec![-0.4, -2.6, -4.0]], 21, grid(3)).unwrap();
        let r2 = PianoRoll::from_rows(vec![vec![1, 0, 0]], 21, grid(3)).unwrap();
        let a = TrainingSet::new(vec![(m1.clone(), r1.clone()), (m2.clone(), r2.clone())]).unwrap();
        let b = TrainingSet::new(vec![(m2, r2), (m1, r1)]).unwrap();
        let ga = select_beta_ht(&a, &default_threshold_grid(), RocCriterion::FMeasure).unwrap().0;
        let gb = select_beta_ht(&b, &default_threshold_grid(), RocCriterion::FMeasure).unwrap().0;
        assert_eq!(ga, gb);
    }
}
