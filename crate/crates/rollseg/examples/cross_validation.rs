//! Cross-validated strategy comparison: leave-one-out and Monte Carlo CV on
//! a synthetic corpus, plus the gain-vs-training-ratio sweep.

use rollseg::eval::{
    leave_one_out, monte_carlo_cv, ratio_sweep, EvalConfig, EvalStrategy,
};
use rollseg::synth::{generate_corpus, SynthSpec};

fn main() {
    let spec = SynthSpec {
        num_pitches: 16,
        num_frames: 1500,
        noise_std_db: 1.0,
        leakage: 0.05,
        seed: 42,
        ..SynthSpec::default()
    };
    let corpus = generate_corpus(&spec, 6).unwrap();
    let config = EvalConfig::default();

    println!("leave-one-out (train on one piece, test on the rest):");
    println!("strategy  macro FMeas  macro Acc   micro FMeas");
    for strategy in [EvalStrategy::Ht, EvalStrategy::St, EvalStrategy::Ost] {
        let report = leave_one_out(&corpus, strategy, &config).unwrap();
        println!(
            "{:<8}  {:.4}       {:.4}      {:.4}",
            report.strategy, report.macro_avg.fmeas, report.macro_avg.acc, report.micro.fmeas
        );
    }

    println!();
    println!("Monte Carlo CV, ratio 0.5, 10 iterations, seed 1:");
    for strategy in [EvalStrategy::Ht, EvalStrategy::Ost] {
        let report = monte_carlo_cv(&corpus, strategy, &config, 0.5, 10, 1).unwrap();
        let spread = report
            .iteration_macro
            .iter()
            .map(|m| m.fmeas)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        println!(
            "{:<8}  macro FMeas {:.4}  (per-iteration range {:.4} .. {:.4})",
            report.strategy, report.macro_avg.fmeas, spread.0, spread.1
        );
    }

    println!();
    println!("OST gain over HT by training ratio (10 iterations each):");
    let rows = ratio_sweep(&corpus, &config, &[0.2, 0.4, 0.6], 10, 1).unwrap();
    for (ratio, delta) in rows {
        println!("  ratio {ratio:.1}: delta FMeas {delta:+.4}");
    }
}
