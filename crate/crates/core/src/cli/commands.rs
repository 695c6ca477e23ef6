//! The subcommands. Each returns the paths it wrote, in write order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CollapseOptions, ExperimentConfig, Instance, NoiseSpec, OracleKind, UnravelOptions};
use super::{CliError, CliResult};
use crate::analysis::{data_collapse, AnalysisError, POSITIVITY_FLOOR, find_crossings, fit_tau, CollapseFit, CrossingEstimate, ScalingPoint, SizeCurve};
use crate::channels::{
    gauge_transform, optimize_unraveling, rotation_gauge, unraveling_cost_x, KrausSet, NoiseKind, Unraveling,
};
use crate::lightcone::{compile_sebd, Circuit2D, EffectiveCircuit1D, GateFamily};
use crate::oracles::circuit::{dense_evolve, dense_unitary, index_of, replay_probability};
use crate::oracles::dense::{MAX_DENSITY_QUBITS, MAX_VECTOR_QUBITS};
use crate::oracles::mpo::mpo_sebd_probability;
use crate::oracles::tableau::{CliffordProgram, TableauNoise};
use crate::sampler::{self, estimate_probability, purification_run, RunConfig};
use crate::statmech::{critical_x, phase_of_cost};

/// Decorrelates the benchmark's target draws from the estimator streams.
const TARGET_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

/// A CSV writer whose first line is `# schema: nsebd/<schema>`.
fn csv_writer(path: &Path, schema: &str, header: &[&str]) -> CliResult<csv::Writer<BufWriter<File>>> {
    let mut f = create(path)?;
    writeln!(f, "# schema: nsebd/{schema}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    Ok(w)
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `z` in row-major order (`y` outer, `x` inner) as ASCII 0/1.
fn row_major_bits(z: &[u8], coords: &[(usize, usize)]) -> String {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by_key(|&q| (coords[q].1, coords[q].0));
    order.into_iter().map(|q| if z[q] == 1 { '1' } else { '0' }).collect()
}

fn compiled(cfg: &ExperimentConfig, inst: &Instance, ly: usize) -> CliResult<(Circuit2D, EffectiveCircuit1D)> {
    let c = cfg.circuit(inst, ly)?;
    let ec = compile_sebd(&c)?;
    Ok((c, ec))
}

fn run_config(cfg: &ExperimentConfig, ec: EffectiveCircuit1D, trajectories: usize, seed: u64) -> CliResult<RunConfig> {
    Ok(RunConfig::new(ec, cfg.noise.unraveling, cfg.truncation, trajectories, seed)?.with_telemetry(cfg.telemetry))
}

/// Per sweep point: `samples_<tag>.txt` with one line per successful
/// trajectory, `telemetry_<tag>.csv`, and optionally `entropy_<tag>.csv`
/// and `noise_<tag>.csv`.
pub fn cmd_sample(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    create_dir(&cfg.output)?;
    let mut written = Vec::new();
    for inst in cfg.instances() {
        let (_, ec) = compiled(cfg, &inst, cfg.lattice.ly)?;
        let coords = ec.coords.clone();
        let run = run_config(cfg, ec, cfg.sweep.trajectories, cfg.sweep.master_seed)?;
        let set = sampler::sample(&run);
        let tag = inst.tag();

        let path = cfg.output.join(format!("samples_{tag}.txt"));
        let mut f = create(&path)?;
        for r in set.successful() {
            writeln!(f, "{}", row_major_bits(&r.z, &coords)).map_err(|e| CliError::io(&path, e))?;
        }
        f.flush().map_err(|e| CliError::io(&path, e))?;
        written.push(path);

        let path = cfg.output.join(format!("telemetry_{tag}.csv"));
        let mut w = csv_writer(
            &path,
            "sample-telemetry/v1",
            &["trajectory", "chi_max_seen", "trunc_total", "noise_events", "failure"],
        )?;
        for r in &set.records {
            let failure = r.failure.clone().unwrap_or_default();
            w.write_record([r.index.to_string(), r.chi_max_seen.to_string(), r.trunc_total.to_string(), r.m.len().to_string(), failure])?;
        }
        finish(w, &path)?;
        written.push(path);

        if cfg.telemetry.entropies {
            let path = cfg.output.join(format!("entropy_{tag}.csv"));
            let mut w = csv_writer(&path, "sample-entropy/v1", &["trajectory", "row", "s_half"])?;
            for r in &set.records {
                for (row, s) in r.entropies.iter().enumerate() {
                    w.write_record([r.index.to_string(), row.to_string(), s.to_string()])?;
                }
            }
            finish(w, &path)?;
            written.push(path);
        }
        if cfg.telemetry.noise_record {
            let path = cfg.output.join(format!("noise_{tag}.csv"));
            let mut w = csv_writer(&path, "sample-noise/v1", &["trajectory", "outcomes"])?;
            for r in &set.records {
                let m: String = r.m.iter().map(|&k| char::from_digit(k as u32, 36).unwrap_or('?')).collect();
                w.write_record([r.index.to_string(), m])?;
            }
            finish(w, &path)?;
            written.push(path);
        }
        log::info!("{tag}: {} samples, {} failures", set.records.len() - set.failures, set.failures);
    }
    Ok(written)
}

/// Purification on `lx × aspect·lx` lattices. Reference entropies are
/// averaged over trajectories and instances before the exponential fit.
/// Writes `purification.csv`, `tau.csv` and, with two or more widths,
/// `collapse.json` plus `collapse_surface.csv`.
pub fn cmd_phase_sweep(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    create_dir(&cfg.output)?;
    let pur_path = cfg.output.join("purification.csv");
    let mut pur = csv_writer(
        &pur_path,
        "purification/v1",
        &["eps", "lx", "seed", "row", "s_r", "trajectories", "failures"],
    )?;
    let tau_path = cfg.output.join("tau.csv");
    let mut tau = csv_writer(
        &tau_path,
        "tau/v1",
        &["eps", "lx", "instances", "tau", "tau_over_lx", "intercept", "residual", "row_lo", "row_hi", "status"],
    )?;
    let mut points = Vec::new();
    for &eps in &cfg.sweep.eps {
        for lx in cfg.widths() {
            let ly = cfg.phase.aspect * lx;
            let mut runs = Vec::new();
            for &seed in &cfg.sweep.seeds {
                let inst = Instance { eps, lx, seed };
                let (_, ec) = compiled(cfg, &inst, ly)?;
                let probe = ec.probe_slot();
                let run = run_config(cfg, ec, cfg.sweep.trajectories, cfg.sweep.master_seed)?;
                let series = purification_run(&run, probe, ly);
                for (row, s) in series.s_r.iter().enumerate() {
                    pur.write_record([
                        eps.to_string(),
                        lx.to_string(),
                        seed.to_string(),
                        row.to_string(),
                        s.to_string(),
                        series.trajectories.to_string(),
                        series.failures.to_string(),
                    ])?;
                }
                runs.push(series.s_r);
            }
            let mean = sampler::mean_series(runs.iter().map(|v| v.as_slice()));
            let window = (cfg.phase.window.0 * lx, cfg.phase.window.1 * lx);
            // Fully purified before the window opens: fit the leading rows instead.
            let fitted = match fit_tau(&mean, window) {
                Err(AnalysisError::EmptyWindow { .. }) => {
                    fit_tau(&mean, (0, window.1)).map(|f| (f, format!("early-window 0..{}", window.1)))
                }
                other => other.map(|f| (f, "ok".to_string())),
            };
            let (fields, status) = match fitted {
                Ok((fit, status)) => {
                    let y = fit.tau / lx as f64;
                    points.push(ScalingPoint { eps, l: lx as f64, y });
                    ([Some(fit.tau), Some(y), Some(fit.intercept), Some(fit.residual)], status)
                }
                Err(AnalysisError::EmptyWindow { .. }) if mean.iter().any(|&s| s <= POSITIVITY_FLOOR) => {
                    let row = mean.iter().position(|&s| s <= POSITIVITY_FLOOR).unwrap_or_default();
                    ([None; 4], format!("purified-by-row-{row}"))
                }
                Err(e) => {
                    log::warn!("eps {eps}, lx {lx}: {e}");
                    ([None; 4], e.to_string())
                }
            };
            let mut rec = vec![eps.to_string(), lx.to_string(), runs.len().to_string()];
            rec.extend(fields.map(opt));
            let (lo, hi) = if status == "ok" { window } else { (0, window.1) };
            rec.extend([lo.to_string(), hi.to_string(), status]);
            tau.write_record(&rec)?;
        }
    }
    finish(pur, &pur_path)?;
    finish(tau, &tau_path)?;
    let mut written = vec![pur_path, tau_path];
    let widths = points.iter().map(|p| p.l.to_bits()).collect::<std::collections::BTreeSet<_>>().len();
    if cfg.phase.collapse && widths >= 2 {
        match write_collapse(&points, &cfg.collapse, &cfg.output) {
            Ok(mut files) => written.append(&mut files),
            Err(e) => log::warn!("collapse skipped: {e}"),
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct CollapseReport<'a> {
    fit: &'a CollapseFit,
    crossing: CrossingEstimate,
    points: usize,
}

fn write_collapse(points: &[ScalingPoint], opts: &CollapseOptions, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let fit = data_collapse(points, &opts.grid(points))?;
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    let curves: Vec<SizeCurve> = sizes
        .iter()
        .map(|&l| {
            let mut pts: Vec<(f64, f64)> = points.iter().filter(|p| p.l == l).map(|p| (p.eps, p.y)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            SizeCurve { l, points: pts }
        })
        .collect();
    let report = CollapseReport { fit: &fit, crossing: find_crossings(&curves), points: points.len() };
    let json = dir.join("collapse.json");
    write_json(&json, &report)?;
    let surf = dir.join("collapse_surface.csv");
    let mut w = csv_writer(&surf, "collapse-surface/v1", &["eps_c", "nu", "r"])?;
    for (e, n, r) in &fit.surface {
        w.write_record([e.to_string(), n.to_string(), r.to_string()])?;
    }
    finish(w, &surf)?;
    log::info!("collapse: eps_c = {}, nu = {}, identifiable = {}", fit.eps_c, fit.nu, fit.identifiable);
    Ok(vec![json, surf])
}

/// Reads `eps`, `lx` and `tau_over_lx` from a `tau.csv` table (rows without a
/// fit are skipped) and writes `collapse.json` and `collapse_surface.csv`.
pub fn cmd_collapse(input: &Path, opts: &CollapseOptions, out: &Path) -> CliResult<Vec<PathBuf>> {
    let file = File::open(input).map_err(|e| CliError::io(input, e))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::Config(format!("{}: no column '{name}'", input.display())))
    };
    let (ie, il, iy) = (col("eps")?, col("lx")?, col("tau_over_lx")?);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).unwrap_or("").trim().parse::<f64>().ok();
        if let (Some(eps), Some(l), Some(y)) = (num(ie), num(il), num(iy)) {
            points.push(ScalingPoint { eps, l, y });
        }
    }
    create_dir(out)?;
    write_collapse(&points, opts, out)
}

fn tableau_noise(ec: &EffectiveCircuit1D) -> TableauNoise {
    match ec.noise.kind {
        NoiseKind::Dephasing => TableauNoise::ProjectiveZ,
        _ => TableauNoise::Erasure,
    }
}

/// Stabilizer-trajectory mean and standard error of `P(z)`.
fn tableau_estimate(prog: &CliffordProgram, z: &[u8], k: usize, seed: u64) -> (f64, f64) {
    let vals: Vec<f64> = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            prog.probability_trajectory(z, &mut rng)
        })
        .collect();
    let n = k as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = if k > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

enum DenseRef {
    Table(Vec<f64>),
    Replay,
    Unavailable(String),
}

fn dense_reference(c: &Circuit2D, ec: &EffectiveCircuit1D) -> DenseRef {
    let n = c.n_qubits();
    let table = if c.noise.is_trivial() && n <= MAX_VECTOR_QUBITS {
        dense_unitary(c).map(|v| v.probabilities())
    } else if n <= MAX_DENSITY_QUBITS {
        dense_evolve(c).map(|r| r.diagonal())
    } else if ec.n_sites <= MAX_DENSITY_QUBITS {
        return DenseRef::Replay;
    } else {
        return DenseRef::Unavailable(format!("{n} qubits exceed the dense limits"));
    };
    match table {
        Ok(t) => DenseRef::Table(t),
        Err(e) => DenseRef::Unavailable(e.to_string()),
    }
}

/// Per sweep point: the serialized instance `circuit_<tag>.json`, then
/// `targets` bitstrings drawn by the sampler, each estimated with
/// `estimate_probability` and every configured oracle. One row per
/// (instance, target, oracle) in `benchmark.csv`.
pub fn cmd_benchmark(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    create_dir(&cfg.output)?;
    let mut written = Vec::new();
    let path = cfg.output.join("benchmark.csv");
    let mut w = csv_writer(
        &path,
        "benchmark/v1",
        &[
            "eps", "lx", "seed", "target", "bits", "p_hat", "p_hat_se", "oracle", "p_ref", "p_ref_se", "ratio", "ratio_se",
            "status",
        ],
    )?;
    let k_oracle = cfg.benchmark.oracle_trajectories.unwrap_or(cfg.sweep.trajectories);
    for inst in cfg.instances() {
        let (c, ec) = compiled(cfg, &inst, cfg.lattice.ly)?;
        let json = cfg.output.join(format!("circuit_{}.json", inst.tag()));
        std::fs::write(&json, c.to_json()).map_err(|e| CliError::io(&json, e))?;
        written.push(json);

        let coords = ec.coords.clone();
        let draws = run_config(cfg, ec.clone(), cfg.benchmark.targets.max(1), cfg.sweep.master_seed ^ TARGET_STREAM_SALT)?;
        let targets: Vec<Vec<u8>> =
            sampler::sample(&draws).successful().take(cfg.benchmark.targets).map(|r| r.z.clone()).collect();
        let est_cfg = run_config(cfg, ec.clone(), cfg.sweep.trajectories, cfg.sweep.master_seed)?;
        let dense = cfg.benchmark.oracles.contains(&OracleKind::Dense).then(|| dense_reference(&c, &ec));
        let tableau = cfg.benchmark.oracles.contains(&OracleKind::Tableau).then(|| {
            if cfg.lattice.gates == GateFamily::CliffordIswapSwap {
                CliffordProgram::from_effective(&ec, tableau_noise(&ec)).map_err(|e| e.to_string())
            } else {
                Err(format!("gate family {:?} is not Clifford", cfg.lattice.gates))
            }
        });

        for (t, z) in targets.iter().enumerate() {
            let est = estimate_probability(&est_cfg, z)?;
            for &oracle in &cfg.benchmark.oracles {
                let reference: Result<(f64, f64), String> = match oracle {
                    OracleKind::Dense => match dense.as_ref().expect("dense reference prepared") {
                        DenseRef::Table(p) => Ok((p[index_of(z)], 0.0)),
                        DenseRef::Replay => replay_probability(&ec, z).map(|p| (p, 0.0)).map_err(|e| e.to_string()),
                        DenseRef::Unavailable(why) => Err(why.clone()),
                    },
                    OracleKind::Mpo => {
                        mpo_sebd_probability(&ec, z, &cfg.truncation).map(|m| (m.probability, 0.0)).map_err(|e| e.to_string())
                    }
                    OracleKind::Tableau => match tableau.as_ref().expect("tableau program prepared") {
                        Ok(prog) => Ok(tableau_estimate(prog, z, k_oracle, cfg.sweep.master_seed)),
                        Err(why) => Err(why.clone()),
                    },
                };
                let (p_ref, se_ref, ratio, ratio_se, status) = match reference {
                    Ok((p, se)) if p > 0.0 => {
                        let r = est.mean / p;
                        let rel = ((est.stderr / est.mean.max(f64::MIN_POSITIVE)).powi(2) + (se / p).powi(2)).sqrt();
                        (Some(p), Some(se), Some(r), Some(r * rel), "ok".to_string())
                    }
                    Ok((p, se)) => (Some(p), Some(se), None, None, "zero reference".to_string()),
                    Err(why) => (None, None, None, None, why),
                };
                w.write_record([
                    inst.eps.to_string(),
                    inst.lx.to_string(),
                    inst.seed.to_string(),
                    t.to_string(),
                    row_major_bits(z, &coords),
                    est.mean.to_string(),
                    est.stderr.to_string(),
                    format!("{oracle:?}").to_lowercase(),
                    opt(p_ref),
                    opt(se_ref),
                    opt(ratio),
                    opt(ratio_se),
                    status,
                ])?;
            }
        }
    }
    finish(w, &path)?;
    written.push(path);
    Ok(written)
}

/// Channel and rates for `unravel-optimize`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnravelRequest {
    pub noise: NoiseSpec,
    pub eps: Vec<f64>,
    pub opts: UnravelOptions,
}

impl UnravelRequest {
    /// Flags take precedence over the config file.
    pub fn resolve(
        cfg: Option<&ExperimentConfig>,
        kind: Option<NoiseKind>,
        eps: &[f64],
        seed: Option<u64>,
    ) -> CliResult<Self> {
        let mut noise = match (cfg, kind) {
            (Some(c), _) => c.noise,
            (None, Some(k)) => NoiseSpec { kind: k, unraveling: Unraveling::Weak, weights: None },
            (None, None) => return Err(CliError::Usage("unravel-optimize needs --noise or --config".into())),
        };
        if let Some(k) = kind {
            noise.kind = k;
        }
        let eps = if eps.is_empty() { cfg.map(|c| c.sweep.eps.clone()).unwrap_or_default() } else { eps.to_vec() };
        if eps.is_empty() {
            return Err(CliError::Usage("unravel-optimize needs --eps or a config with sweep.eps".into()));
        }
        let mut opts = cfg.map(|c| c.unravel.clone()).unwrap_or_default();
        if let Some(s) = seed {
            opts.seed = s;
        }
        Ok(Self { noise, eps, opts })
    }
}

/// One channel's unraveling summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnravelRow {
    pub kind: NoiseKind,
    pub eps: f64,
    pub x_canonical: f64,
    /// The closed-form weak unraveling, where one exists.
    pub x_analytic: Option<f64>,
    pub x_numeric: f64,
    /// Maximizing rotation angle of the damping Kraus pair.
    pub theta_star: Option<f64>,
    pub x_critical: f64,
    pub phase: String,
}

fn damping_theta_star(k: &KrausSet) -> CliResult<f64> {
    let steps = 3600;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=steps {
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
        let x = unraveling_cost_x(&gauge_transform(k, &rotation_gauge(theta))?);
        if x > best.0 + 1e-14 {
            best = (x, theta);
        }
    }
    Ok(best.1)
}

pub fn unravel_rows(req: &UnravelRequest) -> CliResult<Vec<UnravelRow>> {
    req.eps
        .iter()
        .map(|&eps| {
            let model = req.noise.model(eps)?;
            let canonical = model.kraus(Unraveling::Canonical)?;
            let x_analytic = model.kraus(Unraveling::Weak).ok().map(|k| unraveling_cost_x(&k));
            let n_out = req.opts.n_out.unwrap_or(canonical.len().max(4));
            let numeric = optimize_unraveling(&canonical, n_out, req.opts.budget, req.opts.seed)?;
            let theta_star = match model.kind {
                NoiseKind::AmplitudeDamping if canonical.len() == 2 => Some(damping_theta_star(&canonical)?),
                _ => None,
            };
            let best = x_analytic.unwrap_or(f64::NEG_INFINITY).max(numeric.x);
            Ok(UnravelRow {
                kind: model.kind,
                eps,
                x_canonical: unraveling_cost_x(&canonical),
                x_analytic,
                x_numeric: numeric.x,
                theta_star,
                x_critical: critical_x(2),
                phase: phase_of_cost(best, 2).to_string(),
            })
        })
        .collect()
}

/// Prints one line per rate and, given a directory, writes `unravel.csv`.
pub fn cmd_unravel_optimize(req: &UnravelRequest, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let rows = unravel_rows(req)?;
    for r in &rows {
        let theta = r.theta_star.map(|t| format!(" theta*={:.4}pi", t / std::f64::consts::PI)).unwrap_or_default();
        println!(
            "{:?} eps={} x_canonical={:.6} x_analytic={} x_numeric={:.6}{theta} x_c={:.6} phase={}",
            r.kind,
            r.eps,
            r.x_canonical,
            r.x_analytic.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into()),
            r.x_numeric,
            r.x_critical,
            r.phase
        );
    }
    let Some(dir) = out else { return Ok(Vec::new()) };
    create_dir(dir)?;
    let path = dir.join("unravel.csv");
    let mut w = csv_writer(
        &path,
        "unravel/v1",
        &["kind", "eps", "x_canonical", "x_analytic", "x_numeric", "theta_star", "x_critical", "phase"],
    )?;
    for r in &rows {
        let kind = serde_json::to_value(r.kind)?.as_str().unwrap_or_default().to_string();
        w.write_record([
            kind,
            r.eps.to_string(),
            r.x_canonical.to_string(),
            opt(r.x_analytic),
            r.x_numeric.to_string(),
            opt(r.theta_star),
            r.x_critical.to_string(),
            r.phase.clone(),
        ])?;
    }
    finish(w, &path)?;
    Ok(vec![path])
}
