//! Writes the relaxation as a sparse SDPA file and parses it back.
//! `REALQT_LEVEL` selects the level (default 1).

use realqt::bound::{assemble_problem, export_sdpa, sdpa::read_sdpa, Level, SdpaInstance};

pub fn run_example() -> realqt::Result<()> {
    let level: Level = std::env::var("REALQT_LEVEL").unwrap_or_else(|_| "1".into()).parse()?;
    let problem = assemble_problem(level, true);
    let dir = std::env::temp_dir();
    let path = dir.join(format!("realqt-level-{level}.dat-s"));
    let hash = export_sdpa(&problem, &path)?;
    let parsed = read_sdpa(&path)?;
    println!("wrote {} (sha256 {hash})", path.display());
    println!("block structure {:?}", parsed.block_struct);
    println!("round trip exact: {}", parsed == SdpaInstance::from_problem(&problem));
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
