//! See-saw lower bounds over real strategies, against exhaustive search
//! over deterministic strategies.

use realqt::bound::{exhaustive_deterministic, seesaw_lower_bound};

pub fn run_example() -> realqt::Result<()> {
    let (best, a, b, c) = exhaustive_deterministic();
    println!("best deterministic W = {best:.6} (a {a:?}, b {b:?}, c {c:?})");
    for dims in [[1, 1, 1, 1], [2, 2, 2, 2]] {
        let r = seesaw_lower_bound(dims, 20, 11)?;
        println!("dims {dims:?}: best W over {} restarts = {:.6}", r.restarts, r.value);
    }
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
