//! Run all three segmentation strategies on one synthetic piece and score
//! them against the ground truth.

use rollseg::eval::{compute_metrics, frame_counts};
use rollseg::optim::{SimplexOptions, TrainingSet};
use rollseg::segment::{estimate_transitions, segment, SegmentationStrategy, StrategyKind};
use rollseg::synth::{generate_piece, SynthSpec};

fn main() {
    let spec = SynthSpec {
        num_pitches: 12,
        num_frames: 2000,
        noise_std_db: 1.2,
        leakage: 0.05,
        seed: 7,
        ..SynthSpec::default()
    };
    let train = generate_piece(&spec, 0).unwrap();
    let test = generate_piece(&spec, 1).unwrap();

    let beta = -2.5;
    let transitions = estimate_transitions(&train.truth).unwrap();

    // train the per-pitch sigmoid on the training piece
    let training =
        TrainingSet::new(vec![(train.activity.clone(), train.truth.clone())]).unwrap();
    let outcome = rollseg::optim::train_ost(
        &training,
        beta,
        &transitions,
        &SimplexOptions::default(),
    )
    .unwrap();

    let strategies = [
        ("HT ", StrategyKind::HardThreshold { beta_ht: beta }),
        ("ST ", StrategyKind::SoftThreshold { beta_ht: beta, transitions: transitions.clone() }),
        ("OST", StrategyKind::OptimizedSoftThreshold { params: outcome.params.clone() }),
    ];

    println!("strategy   TPR     PPV     FMeas   Acc");
    for (name, kind) in strategies {
        let roll = segment(&test.activity, &SegmentationStrategy::new(kind)).unwrap();
        let m = compute_metrics(&frame_counts(&roll, &test.truth).unwrap());
        println!(
            "{name}      {:.4}  {:.4}  {:.4}  {:.4}",
            m.tpr, m.ppv, m.fmeas, m.acc
        );
    }
}
