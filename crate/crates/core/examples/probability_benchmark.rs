//! Trajectory estimate of `P(z)` against the dense density matrix and the
//! MPO oracle on a 2 × 4 circuit.

use nsebd::channels::{NoiseModel, Unraveling};
use nsebd::lightcone::{build_lattice, compile_sebd, random_instance, GateFamily, LatticeKind};
use nsebd::mps::TruncationPolicy;
use nsebd::oracles::circuit::{bits_of, dense_evolve};
use nsebd::oracles::mpo::mpo_sebd_probability;
use nsebd::sampler::{estimate_probability, RunConfig};

fn main() {
    let lattice = build_lattice(LatticeKind::Square, 2, 4).unwrap();
    let circuit =
        random_instance(&lattice, &"ABC".parse().unwrap(), GateFamily::Fsim, NoiseModel::dephasing(0.1), 3).unwrap();
    let ec = compile_sebd(&circuit).unwrap();
    let rho = dense_evolve(&circuit).unwrap();

    for u in [Unraveling::Canonical, Unraveling::Projective, Unraveling::Weak] {
        let cfg = RunConfig::new(ec.clone(), u, TruncationPolicy::default(), 2000, 1).unwrap();
        println!("{u:?}");
        for idx in [0usize, 37, 130, 255] {
            let z = bits_of(idx, 8);
            let est = estimate_probability(&cfg, &z).unwrap();
            let mpo = mpo_sebd_probability(&ec, &z, &TruncationPolicy::exact()).unwrap();
            println!(
                "  z={idx:>3}  dense={:.6}  mpo={:.6}  trajectories={:.6} ± {:.6}",
                rho.probability(&z),
                mpo.probability,
                est.mean,
                est.stderr
            );
        }
    }
}
