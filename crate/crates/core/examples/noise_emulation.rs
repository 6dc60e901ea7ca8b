//! W under source visibility v_E and interference visibility v_I, for both
//! ways of mixing Bob's Bell-state effects.

use realqt::protocol::{standard_table, w_value, MixtureModel, NoiseParams};

pub fn run_example() -> realqt::Result<()> {
    let (v_e, v_i) = (0.9909, 0.9844);
    for model in [MixtureModel::Depolarizing, MixtureModel::Subspace] {
        let w = w_value(&standard_table(&NoiseParams::new(v_e, v_i, model)?)?);
        println!("{model:?}: W = {w:.6}");
    }
    let closed = v_e * v_e * v_i * 6.0 * 2f64.sqrt() / 5.0 - 0.8;
    println!("depolarizing closed form v_E^2 v_I 6 sqrt(2)/5 - 4/5 = {closed:.6}");
    for v in [1.0, 0.9, 0.8, 0.7] {
        let w = w_value(&standard_table(&NoiseParams::new(v, 1.0, MixtureModel::Depolarizing)?)?);
        println!("v_E = {v:.1}, v_I = 1: W = {w:.6}");
    }
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
