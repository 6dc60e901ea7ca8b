//! The Bell-measurement success estimator on exact expected counts and on
//! sampled cycles.

use realqt::photon::{
    cycle_rng, estimate_pb, expected_counts, simulate_cycle_with, ExperimentConfig, Setting,
};
use realqt::protocol::standard_table;

pub fn run_example() -> realqt::Result<()> {
    let cfg = ExperimentConfig::default();
    let table = standard_table(&cfg.noise)?;
    println!("uniform detection efficiency {:.4}", cfg.eta_a);
    let mut sum = 0.0;
    for y in 0..4 {
        let pb = estimate_pb(&expected_counts(&cfg, &table, Setting { x: 0, y, z: 0 }))?;
        sum += pb;
        println!("y = {y}: exact-count estimate {pb:.12}");
    }
    println!("sum {sum:.12}");
    let setting = Setting { x: 2, y: 1, z: 4 };
    let n = 2000;
    let mut acc = 0.0;
    let mut used = 0;
    for i in 0..n {
        let mut rng = cycle_rng(7, i);
        let rec = simulate_cycle_with(&cfg, &table, setting, &mut rng)?;
        if let Ok(p) = estimate_pb(&rec.counts()) {
            acc += p;
            used += 1;
        }
    }
    println!("mean over {used} sampled cycles: {:.4}", acc / used as f64);
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
