//! Tripartite mutual information of monitored Clifford dynamics: SEBD strips
//! of depth 8 and conventional 2D squares.

use nsebd::analysis::mipt::{CliffordSquare, CliffordStrip};

fn main() {
    println!("strip, T = 8");
    for eps in [0.03, 0.07, 0.11] {
        let row: Vec<String> = [16, 32]
            .iter()
            .map(|&lx| {
                let e = CliffordStrip::new(lx, 8, eps).i3(40, 1).unwrap();
                format!("L={lx}: {:+.3} ± {:.3}", e.mean, e.stderr)
            })
            .collect();
        println!("  eps={eps:<5} {}", row.join("   "));
    }
    println!("square, depth 2L");
    for eps in [0.12, 0.16, 0.2] {
        let row: Vec<String> = [8, 16]
            .iter()
            .map(|&l| {
                let e = CliffordSquare::new(l, eps).i3(40, 2).unwrap();
                format!("L={l}: {:+.3} ± {:.3}", e.mean, e.stderr)
            })
            .collect();
        println!("  eps={eps:<5} {}", row.join("   "));
    }
}
