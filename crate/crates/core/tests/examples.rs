//! Every example runs to completion.

#[allow(dead_code)]
#[path = "../examples/ideal_protocol.rs"]
mod ideal_protocol;

#[allow(dead_code)]
#[path = "../examples/noise_emulation.rs"]
mod noise_emulation;

#[allow(dead_code)]
#[path = "../examples/waveplate_tables.rs"]
mod waveplate_tables;

#[allow(dead_code)]
#[path = "../examples/quantum_primitives.rs"]
mod quantum_primitives;

#[allow(dead_code)]
#[path = "../examples/estimator_consistency.rs"]
mod estimator_consistency;

#[allow(dead_code)]
#[path = "../examples/photon_experiment.rs"]
mod photon_experiment;

#[allow(dead_code)]
#[path = "../examples/moment_relaxation.rs"]
mod moment_relaxation;

#[allow(dead_code)]
#[path = "../examples/export_sdpa.rs"]
mod export_sdpa;

#[allow(dead_code)]
#[path = "../examples/solve_relaxation.rs"]
mod solve_relaxation;

#[allow(dead_code)]
#[path = "../examples/seesaw.rs"]
mod seesaw;


#[test]
fn ideal_protocol_runs() {
    ideal_protocol::run_example().unwrap();
}

#[test]
fn noise_emulation_runs() {
    noise_emulation::run_example().unwrap();
}

#[test]
fn waveplate_tables_runs() {
    waveplate_tables::run_example().unwrap();
}

#[test]
fn quantum_primitives_runs() {
    quantum_primitives::run_example().unwrap();
}

#[test]
fn estimator_consistency_runs() {
    estimator_consistency::run_example().unwrap();
}

#[test]
fn photon_experiment_runs() {
    photon_experiment::run_example().unwrap();
}

#[test]
fn moment_relaxation_runs() {
    moment_relaxation::run_example().unwrap();
}

#[test]
fn export_sdpa_runs() {
    export_sdpa::run_example().unwrap();
}

#[test]
fn solve_relaxation_runs() {
    solve_relaxation::run_example().unwrap();
}

#[test]
fn seesaw_runs() {
    seesaw::run_example().unwrap();
}
