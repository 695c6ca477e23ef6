//! Purification cost `x` of the built-in unravelings and the phase the
//! two-replica Ising model assigns to each.

use nsebd::channels::{optimize_unraveling, unraveling_cost_x, NoiseKind, NoiseModel, Unraveling};
use nsebd::statmech::{critical_x, phase_of_cost};

fn main() {
    let xc = critical_x(2);
    println!("x_c = {xc:.6}");
    let forms = [
        Unraveling::Canonical,
        Unraveling::Projective,
        Unraveling::Weak,
        Unraveling::WeakOctahedron,
        Unraveling::Erasure,
    ];
    for kind in [NoiseKind::Dephasing, NoiseKind::Depolarizing, NoiseKind::AmplitudeDamping] {
        for eps in [0.02, 0.1, 0.3] {
            let model = NoiseModel { kind, strength: eps, unital: None };
            let mut line = format!("{kind:?} eps={eps}:");
            for u in forms {
                if let Ok(k) = model.kraus(u) {
                    let x = unraveling_cost_x(&k);
                    line += &format!(" {u:?}={x:.4}({})", phase_of_cost(x, 2));
                }
            }
            let canonical = model.kraus(Unraveling::Canonical).unwrap();
            let best = optimize_unraveling(&canonical, canonical.len().max(4), 300, 0).unwrap();
            line += &format!(" numeric={:.4}", best.x);
            println!("{line}");
        }
    }
}
