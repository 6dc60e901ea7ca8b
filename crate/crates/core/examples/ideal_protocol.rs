//! The noiseless swapping protocol: all 72 correlators, the four T_y and W.

use realqt::protocol::{standard_table, summarize, NoiseParams};

pub fn run_example() -> realqt::Result<()> {
    let noise = NoiseParams::ideal();
    let summary = summarize(&standard_table(&noise)?, noise);
    for (y, t) in summary.t_values.iter().enumerate() {
        println!("T_{y} = {t:.12}");
    }
    println!("sum_y p(b=+1|y) = {:.12}", summary.sum_p_b_plus);
    println!("W = {:.12}  ((6*sqrt(2)-4)/5 = {:.12})", summary.w, (6.0 * 2f64.sqrt() - 4.0) / 5.0);
    let nonzero = summary.s_values.iter().filter(|e| e.s.abs() > 1e-12).count();
    println!("{nonzero} of {} correlators are nonzero", summary.s_values.len());
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
