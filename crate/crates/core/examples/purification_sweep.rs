//! Reference-qubit purification on a 4 × 12 strip for a few noise rates,
//! with the fitted purification time.

use nsebd::analysis::{default_window, fit_tau};
use nsebd::channels::{NoiseModel, Unraveling};
use nsebd::lightcone::{build_lattice, compile_sebd, random_instance, GateFamily, LatticeKind};
use nsebd::mps::TruncationPolicy;
use nsebd::sampler::{purification_run, RunConfig};

fn main() {
    let (lx, ly) = (4, 12);
    let lattice = build_lattice(LatticeKind::Square, lx, ly).unwrap();
    for eps in [0.01, 0.03, 0.06, 0.12] {
        let circuit =
            random_instance(&lattice, &"ABCD".parse().unwrap(), GateFamily::Fsim, NoiseModel::depolarizing(eps), 0).unwrap();
        let ec = compile_sebd(&circuit).unwrap();
        let probe = ec.probe_slot();
        let cfg = RunConfig::new(ec, Unraveling::Weak, TruncationPolicy::default(), 40, 1).unwrap();
        let series = purification_run(&cfg, probe, ly);
        let s: Vec<String> = series.s_r.iter().map(|v| format!("{v:.3}")).collect();
        let tau = fit_tau(&series.s_r, default_window(lx)).map(|f| format!("{:.2}", f.tau)).unwrap_or_else(|e| e.to_string());
        println!("eps={eps:<5} tau={tau}  S_R: {}", s.join(" "));
    }
}
