//! Randomized invariants over the core numerics and file formats.

use proptest::prelude::*;

use rollseg::eval::{compute_metrics, frame_counts};
use rollseg::hmm::{forward_backward, observation_posterior_on, viterbi, PitchHmmParams, PROB_EPS};
use rollseg::io::{load_activity_csv, save_activity_csv, LoadOptions};
use rollseg::midi::{parse_smf, smf_to_notes, write_smf};
use rollseg::model::{sample_pianoroll, ActivityMatrix, FrameGrid, NoteEvent, NoteEventList, PianoRoll};
use rollseg::segment::{hard_threshold, prune_min_duration};

fn params_strategy() -> impl Strategy<Value = PitchHmmParams> {
    (
        PROB_EPS..(1.0 - PROB_EPS),
        PROB_EPS..(1.0 - PROB_EPS),
        -3.0..3.0,
        -6.0..0.0f64,
    )
        .prop_map(|(t0, t1, a, b)| PitchHmmParams::new(t0, t1, a, b).unwrap())
}

proptest! {
    #[test]
    fn posteriors_are_probabilities(
        xs in prop::collection::vec(-8.0..0.0f64, 1..200),
        params in params_strategy(),
    ) {
        let eta = forward_backward(&xs, &params).unwrap();
        prop_assert_eq!(eta.len(), xs.len());
        for &e in &eta {
            prop_assert!((0.0..=1.0).contains(&e), "posterior {} out of range", e);
        }
    }

    #[test]
    fn viterbi_weight_at_least_any_single_flip(
        xs in prop::collection::vec(-8.0..0.0f64, 1..40),
        params in params_strategy(),
    ) {
        // local optimality: flipping any one state never increases the weight
        let weight = |q: &[u8]| -> f64 {
            let trans = [[1.0 - params.tau0, params.tau0], [params.tau1, 1.0 - params.tau1]];
            let mut w = 0.0;
            let mut prev = 0usize;
            for (t, &s) in q.iter().enumerate() {
                w += trans[prev][s as usize].ln();
                let p_on = observation_posterior_on(xs[t], params.alpha, params.beta);
                w += if s == 1 { p_on.ln() } else { (1.0 - p_on).ln() };
                prev = s as usize;
            }
            w
        };
        let path = viterbi(&xs, &params).unwrap();
        let best = weight(&path);
        for t in 0..path.len() {
            let mut flipped = path.clone();
            flipped[t] = 1 - flipped[t];
            prop_assert!(weight(&flipped) <= best + 1e-9);
        }
    }

    #[test]
    fn sigmoid_is_monotone_in_x(
        alpha in -3.0..3.0f64,
        beta in -6.0..0.0f64,
        x0 in -8.0..0.0f64,
        dx in 0.0..4.0f64,
    ) {
        let lo = observation_posterior_on(x0, alpha, beta);
        let hi = observation_posterior_on(x0 + dx, alpha, beta);
        prop_assert!(hi >= lo);
    }

    #[test]
    fn metrics_stay_in_unit_interval(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
        let m = compute_metrics(&rollseg::eval::FrameCounts {
            true_pos: tp, false_pos: fp, false_neg: fn_, true_neg: tn,
        });
        for v in [m.tpr, m.ppv, m.fmeas, m.acc] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // F-measure lies between accuracy and the better of its inputs
        prop_assert!(m.fmeas <= m.tpr.max(m.ppv) + 1e-12);
    }

    #[test]
    fn counts_cover_every_cell(
        est_rows in prop::collection::vec(prop::collection::vec(0u8..2, 10), 1..5),
        ref_bits in prop::collection::vec(prop::collection::vec(0u8..2, 10), 1..5),
    ) {
        prop_assume!(est_rows.len() == ref_bits.len());
        let grid = FrameGrid::new(0.01, 10).unwrap();
        let est = PianoRoll::from_rows(est_rows, 21, grid).unwrap();
        let reference = PianoRoll::from_rows(ref_bits, 21, grid).unwrap();
        let c = frame_counts(&est, &reference).unwrap();
        prop_assert_eq!(c.total() as usize, est.num_pitches() * est.num_frames());
    }

    #[test]
    fn pruning_never_adds_activity(
        rows in prop::collection::vec(prop::collection::vec(0u8..2, 30), 1..4),
        k in 0usize..6,
    ) {
        let grid = FrameGrid::new(0.01, 30).unwrap();
        let roll = PianoRoll::from_rows(rows, 21, grid).unwrap();
        let pruned = prune_min_duration(&roll, k);
        prop_assert!(pruned.count_active() <= roll.count_active());
        for p in 0..roll.num_pitches() {
            for t in 0..roll.num_frames() {
                if pruned.get(p, t) {
                    prop_assert!(roll.get(p, t), "pruning turned a cell on");
                }
            }
        }
    }

    #[test]
    fn hard_threshold_is_monotone_in_beta(
        rows in prop::collection::vec(prop::collection::vec(-8.0..0.0f64, 20), 1..4),
        beta in -6.0..0.0f64,
        step in 0.0..2.0f64,
    ) {
        let grid = FrameGrid::new(0.01, 20).unwrap();
        let matrix = ActivityMatrix::from_rows(rows, 21, grid).unwrap();
        let loose = hard_threshold(&matrix, beta - step);
        let tight = hard_threshold(&matrix, beta);
        prop_assert!(loose.count_active() >= tight.count_active());
    }

    #[test]
    fn sampled_roll_matches_brute_force(
        raw_notes in prop::collection::vec((0u8..100, 0.0..2.0f64, 0.01..0.5f64), 0..10),
    ) {
        let notes = NoteEventList::new(
            raw_notes
                .iter()
                .map(|&(pitch, onset, dur)| NoteEvent {
                    pitch: pitch + 21,
                    onset_s: onset,
                    offset_s: onset + dur,
                    velocity: 64,
                })
                .collect(),
        )
        .unwrap();
        let grid = FrameGrid::new(0.01, 300).unwrap();
        let sampled = sample_pianoroll(&notes, grid, 21, 100);
        prop_assert_eq!(sampled.dropped_notes, 0);
        for p in 0..100usize {
            for t in 0..300usize {
                let time = grid.time_at(t);
                let expect = notes.notes().iter().any(|n| {
                    (n.pitch - 21) as usize == p && n.onset_s <= time && time < n.offset_s
                });
                prop_assert_eq!(sampled.roll.get(p, t), expect, "cell ({}, {})", p, t);
            }
        }
    }

    #[test]
    fn activity_csv_round_trips_exactly(
        rows in prop::collection::vec(prop::collection::vec(-8.0..0.0f64, 12), 1..4),
    ) {
        let grid = FrameGrid::new(0.01, 12).unwrap();
        let matrix = ActivityMatrix::from_rows(rows, 21, grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        save_activity_csv(&path, &matrix, None).unwrap();
        let loaded = load_activity_csv(&path, &LoadOptions::default()).unwrap();
        for p in 0..matrix.num_pitches() {
            prop_assert_eq!(matrix.row(p), loaded.row(p), "row {} changed", p);
        }
    }

    #[test]
    fn midi_note_count_survives_round_trip(
        raw_notes in prop::collection::vec((0u8..128, 0.0..4.0f64, 0.05..1.0f64, 1u8..128), 0..12),
    ) {
        let notes = NoteEventList::new(
            raw_notes
                .iter()
                .map(|&(pitch, onset, dur, vel)| NoteEvent {
                    pitch,
                    onset_s: onset,
                    offset_s: onset + dur,
                    velocity: vel,
                })
                .collect(),
        )
        .unwrap();
        let bytes = write_smf(&notes, 480, 500_000).unwrap();
        let converted = smf_to_notes(&parse_smf(&bytes).unwrap()).unwrap();
        prop_assert_eq!(converted.notes.len(), notes.len());
        // multiset of pitches is preserved even with overlapping same-pitch notes
        let mut expect: Vec<u8> = notes.notes().iter().map(|n| n.pitch).collect();
        let mut got: Vec<u8> = converted.notes.notes().iter().map(|n| n.pitch).collect();
        expect.sort_unstable();
        got.sort_unstable();
        prop_assert_eq!(expect, got);
    }
}
