//! Heavy-hexagon processor layouts and the size of their compiled 1D
//! circuits for the ABCDA schedule.

use nsebd::channels::NoiseModel;
use nsebd::lightcone::{compile_sebd, heavy_hex_processor, random_instance, GateFamily};

fn main() {
    for lx in [11, 15, 27] {
        let lattice = heavy_hex_processor(lx).unwrap();
        let circuit =
            random_instance(&lattice, &"ABCDA".parse().unwrap(), GateFamily::Iswap, NoiseModel::noiseless(), 0).unwrap();
        let ec = compile_sebd(&circuit).unwrap();
        println!(
            "L_x={lx:>2}: {:>4} qubits, {:>3} bonds, {:>3} slots, carried {:>3}, max gate range {}",
            lattice.n_sites(),
            lattice.bonds.len(),
            ec.n_sites,
            ec.carried_sites(),
            ec.max_gate_range()
        );
    }
}
