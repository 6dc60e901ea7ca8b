//! Bell states, Kronecker products, partial traces and fidelity.

use realqt::protocol::epr_state;
use realqt::quantum::{bell_state, fidelity, kron, partial_trace, pauli_z, BellState};

pub fn run_example() -> realqt::Result<()> {
    let zz = kron(&pauli_z(), &pauli_z());
    for b in BellState::ALL {
        let rho = bell_state(b as usize)?;
        println!("{b:?}: <ZZ> = {:+.3}", rho.expect(&zz));
    }
    let noisy = epr_state(0.9909)?;
    let phi = bell_state(0)?;
    println!("F(rho_EPR, Phi+) = {:.6}", fidelity(&noisy, &phi)?);
    let reduced = partial_trace(&noisy, &[2, 2], &[0])?;
    println!("tr_B rho_EPR = {:?}", reduced.matrix());
    Ok(())
}

fn main() -> realqt::Result<()> {
    run_example()
}
