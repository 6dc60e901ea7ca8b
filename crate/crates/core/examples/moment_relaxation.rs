//! Relaxation sizes per level, and which constraints the complex protocol
//! and a real strategy satisfy.

use rand::SeedableRng;
use realqt::bound::{assemble_problem, feasibility_check, Level, Strategy};

pub fn run_example() -> realqt::Result<()> {
    for level in Level::ALL {
        let p = assemble_problem(level, true);
        println!(
            "level {level}: block {}, keys {}, variables {}, equalities {}",
            p.block_size(),
            p.num_keys(),
            p.num_vars(),
            p.constraints.len()
        );
    }
    let p = assemble_problem(Level::OneAB, true);
    let complex = feasibility_check(&p, &Strategy::ideal_complex())?;
    println!(
        "complex protocol: W = {:.9}, violated {:?}",
        complex.objective,
        complex.violated(1e-9)
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let real = feasibility_check(&p, &Strategy::random_real([2, 2, 2, 2], &mut rng)?)?;
    println!("random real strategy: W = {:.6}, violated {:?}", real.objective, real.violated(1e-9));
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
