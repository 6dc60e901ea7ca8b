//! Jones-calculus check of the wave-plate settings for Bob's partial Bell
//! measurement and for Alice's and Charlie's observables.

use realqt::jones::verify_all_tables;

pub fn run_example() -> realqt::Result<()> {
    for row in verify_all_tables()? {
        let bloch = row
            .realized
            .iter()
            .map(|v| format!("{v:+.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "{:4} {:9} residual {:.2e}  realized [{bloch}]",
            row.label,
            if row.matches(1e-10) { "match" } else { "mismatch" },
            row.residual
        );
    }
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
