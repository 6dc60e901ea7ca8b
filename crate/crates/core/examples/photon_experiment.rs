//! A reduced-length Monte Carlo run of the counting experiment with
//! bootstrap uncertainty. Set `REALQT_CYCLES` for the full 21742 cycles.

use realqt::photon::{run_experiment, ExperimentConfig};

pub fn run_example() -> realqt::Result<()> {
    let cycles = std::env::var("REALQT_CYCLES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(3000);
    let cfg = ExperimentConfig {
        num_cycles: cycles,
        bootstrap_resamples: 200,
        seed: 2024,
        ..Default::default()
    };
    let report = run_experiment(&cfg, false)?;
    let est = &report.estimate;
    println!("cycles {cycles}, recorded four-folds {}", report.recorded_fourfold_events);
    println!("sum_y p_hat = {:.4} +/- {:.4}", est.sum_pb, est.sum_pb_sigma);
    println!("W_hat = {:.4} +/- {:.4} (analytic {:.4})", est.w, est.sigma, report.analytic_w);
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
