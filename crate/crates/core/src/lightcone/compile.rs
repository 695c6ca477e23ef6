use serde::{Deserialize, Serialize};

use super::{Circuit2D, LightconeError, LightconeResult};
use crate::channels::NoiseModel;
use crate::linalg::{self, CMat};

/// One step of the effective 1D circuit. Indices `i`, `j` are 1D slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    Gate {
        i: usize,
        j: usize,
        /// Ordered `(i, j)`.
        #[serde(with = "linalg::cmat_serde")]
        matrix: CMat,
    },
    Single {
        i: usize,
        #[serde(with = "linalg::cmat_serde")]
        matrix: CMat,
    },
    Noise {
        i: usize,
    },
    /// Read out the 2D qubit `site` held in slot `i`, then reset the slot.
    MeasureReset {
        i: usize,
        site: usize,
        coord: (usize, usize),
    },
}

/// Row-by-row event stream of a compiled circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveCircuit1D {
    pub n_sites: usize,
    /// Number of 2D qubits (= number of `MeasureReset` events).
    pub n_qubits: usize,
    pub depth: usize,
    /// Slot of every 2D qubit.
    pub slot_of: Vec<usize>,
    pub coords: Vec<(usize, usize)>,
    pub noise: NoiseModel,
    /// `rows[y]` holds the events emitted for output row `y`, ending with its
    /// readout.
    pub rows: Vec<Vec<Event>>,
    /// Rows of the 2D array packed into each column of slots.
    pub rows_per_column: usize,
}

impl EffectiveCircuit1D {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.rows.iter().flatten()
    }

    pub fn n_noise_events(&self) -> usize {
        self.events().filter(|e| matches!(e, Event::Noise { .. })).count()
    }

    pub fn n_gates(&self) -> usize {
        self.events().filter(|e| matches!(e, Event::Gate { .. })).count()
    }

    /// Largest `|i − j|` over two-qubit gates.
    pub fn max_gate_range(&self) -> usize {
        self.events()
            .filter_map(|e| match e {
                Event::Gate { i, j, .. } => Some(i.abs_diff(*j)),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest number of qubits alive across a row boundary, i.e. touched by
    /// an emitted event but not yet read out.
    pub fn carried_sites(&self) -> usize {
        self.live_profile().into_iter().max().unwrap_or(0)
    }

    /// Live qubit count after each row.
    pub fn live_profile(&self) -> Vec<usize> {
        let mut live = vec![false; self.n_sites];
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            for e in row {
                match e {
                    Event::Gate { i, j, .. } => {
                        live[*i] = true;
                        live[*j] = true;
                    }
                    Event::Single { i, .. } | Event::Noise { i } => live[*i] = true,
                    Event::MeasureReset { i, .. } => live[*i] = false,
                }
            }
            out.push(live.iter().filter(|&&l| l).count());
        }
        out
    }

    /// Slot of the qubit at the middle of the first row, used for the probe
    /// qubit of purification runs.
    pub fn probe_slot(&self) -> usize {
        let first: Vec<usize> = (0..self.n_qubits).filter(|&q| self.coords[q].1 == 0).collect();
        let mut xs: Vec<(usize, usize)> = first.iter().map(|&q| (self.coords[q].0, q)).collect();
        xs.sort_unstable();
        self.slot_of[xs[xs.len() / 2].1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("effective circuit serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[derive(Clone, Copy, Debug)]
enum Raw {
    Single { t: usize, k: usize },
    Gate { t: usize, k: usize },
    Noise { site: usize },
}

/// Compiles a 2D circuit by sweeping rows in increasing `y`: for each row the
/// not-yet-emitted events of its past lightcone are emitted in circuit order,
/// followed by the readout of the row.
///
/// Qubit `(x, y)` lives in slot key `(x, y mod w)` ordered column-major, with
/// `w` the smallest value for which no two live qubits share a key.
pub fn compile_sebd(c: &Circuit2D) -> LightconeResult<EffectiveCircuit1D> {
    c.validate()?;
    let lat = &c.lattice;
    let n = lat.n_sites();
    let depth = c.depth();
    let noisy = !c.noise.is_trivial();

    // Events in canonical circuit order and per-layer membership.
    let mut raw = Vec::new();
    let mut by_layer: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> = Vec::with_capacity(depth);
    for (t, layer) in c.layers.iter().enumerate() {
        let mut singles = Vec::new();
        let mut gates = Vec::new();
        let mut noise = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        for k in 0..layer.singles.len() {
            singles.push(raw.len());
            raw.push(Raw::Single { t, k });
        }
        for (k, g) in layer.gates.iter().enumerate() {
            for q in [g.a, g.b] {
                if std::mem::replace(&mut seen[q], true) {
                    return Err(LightconeError::NotMatching(layer.label, q));
                }
            }
            gates.push(raw.len());
            raw.push(Raw::Gate { t, k });
        }
        if noisy {
            for (q, slot) in noise.iter_mut().enumerate() {
                *slot = raw.len();
                raw.push(Raw::Noise { site: q });
            }
        } else {
            noise.clear();
        }
        by_layer.push((singles, gates, noise));
    }

    // Row sweep.
    let (_, height) = lat.extent();
    let mut emitted = vec![false; raw.len()];
    let mut order: Vec<Vec<Step>> = Vec::with_capacity(height);
    for y in 0..height {
        let row = lat.row_sites(y);
        let mut front = vec![false; n];
        row.iter().for_each(|&q| front[q] = true);
        let mut cone = Vec::new();
        for t in (0..depth).rev() {
            let (singles, gates, noise) = &by_layer[t];
            if noisy {
                cone.extend((0..n).filter(|&q| front[q]).map(|q| noise[q]));
            }
            for &id in gates {
                let Raw::Gate { k, .. } = raw[id] else { unreachable!() };
                let g = &c.layers[t].gates[k];
                if front[g.a] || front[g.b] {
                    cone.push(id);
                    front[g.a] = true;
                    front[g.b] = true;
                }
            }
            for &id in singles {
                let Raw::Single { k, .. } = raw[id] else { unreachable!() };
                if front[c.layers[t].singles[k].site] {
                    cone.push(id);
                }
            }
        }
        cone.sort_unstable();
        let mut steps: Vec<Step> = Vec::new();
        for id in cone {
            if !std::mem::replace(&mut emitted[id], true) {
                steps.push(Step::Raw(id));
            }
        }
        steps.extend(row.iter().map(|&q| Step::Measure(q)));
        order.push(steps);
    }

    let qubits_of = |s: &Step| -> Vec<usize> {
        match *s {
            Step::Measure(q) => vec![q],
            Step::Raw(id) => match raw[id] {
                Raw::Single { t, k } => vec![c.layers[t].singles[k].site],
                Raw::Gate { t, k } => vec![c.layers[t].gates[k].a, c.layers[t].gates[k].b],
                Raw::Noise { site } => vec![site],
            },
        }
    };

    // Smallest packing height without collisions.
    let w = (1..=height.max(1))
        .find(|&w| {
            let mut occupant: std::collections::HashMap<(usize, usize), usize> = Default::default();
            for s in order.iter().flatten() {
                for q in qubits_of(s) {
                    let (x, y) = lat.sites[q];
                    let key = (x, y % w);
                    match occupant.get(&key) {
                        Some(&o) if o != q => return false,
                        _ => {
                            occupant.insert(key, q);
                        }
                    }
                }
                if let Step::Measure(q) = *s {
                    let (x, y) = lat.sites[q];
                    occupant.remove(&(x, y % w));
                }
            }
            true
        })
        .unwrap_or(height);
    let mut keys: Vec<(usize, usize)> = lat.sites.iter().map(|&(x, y)| (x, y % w)).collect();
    keys.sort_unstable();
    keys.dedup();
    let slot_of: Vec<usize> = lat
        .sites
        .iter()
        .map(|&(x, y)| keys.binary_search(&(x, y % w)).expect("key present"))
        .collect();

    let rows = order
        .iter()
        .map(|steps| {
            steps
                .iter()
                .map(|s| match *s {
                    Step::Measure(q) => Event::MeasureReset { i: slot_of[q], site: q, coord: lat.sites[q] },
                    Step::Raw(id) => match raw[id] {
                        Raw::Single { t, k } => {
                            let op = &c.layers[t].singles[k];
                            Event::Single { i: slot_of[op.site], matrix: op.matrix.clone() }
                        }
                        Raw::Gate { t, k } => {
                            let g = &c.layers[t].gates[k];
                            Event::Gate { i: slot_of[g.a], j: slot_of[g.b], matrix: g.matrix.clone() }
                        }
                        Raw::Noise { site } => Event::Noise { i: slot_of[site] },
                    },
                })
                .collect()
        })
        .collect();

    Ok(EffectiveCircuit1D {
        n_sites: keys.len(),
        n_qubits: n,
        depth,
        slot_of,
        coords: lat.sites.clone(),
        noise: c.noise,
        rows,
        rows_per_column: w,
    })
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Raw(usize),
    Measure(usize),
}
