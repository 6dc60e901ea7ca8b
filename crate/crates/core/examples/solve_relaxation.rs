//! Certified upper bound on W over real quantum models at a chosen level.
//!
//! `REALQT_LEVEL=2 cargo run --release --example solve_relaxation`

use realqt::bound::{assemble_problem, solve, Level, SolverOptions};

pub fn run_example() -> realqt::Result<()> {
    let level: Level = std::env::var("REALQT_LEVEL").unwrap_or_else(|_| "1".into()).parse()?;
    let problem = assemble_problem(level, true);
    println!(
        "level {level}: 8 blocks of {}, {} moment keys",
        problem.block_size(),
        problem.num_keys()
    );
    let opts = SolverOptions {
        verbose: std::env::var_os("REALQT_VERBOSE").is_some(),
        ..Default::default()
    };
    let bound = solve(&problem, &opts)?;
    println!("{}", serde_json::to_string_pretty(&bound)?);
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
