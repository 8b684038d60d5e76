//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pif_cli::scenario::{open, Overrides};
use pif_cli::Report;
use pif_core::evolve::{evolve, StepperConfig};
use pif_core::greens::{dyson_check, greens_spectrum, impulse_response, resolvent_element, resolvent_spectrum, EnergyGrid};
use pif_core::lattice::{build_chain, ChainModel, PotentialProfile};
use pif_core::protocols::{forward_pass, pif_from, ForwardPass, ProtocolConfig};
use pif_core::wavefield::{norm, WaveField};
use pif_core::{Protocol, C64};
use pif_oracles as oracle;
use tempfile::TempDir;

const UNITARITY_TOL: f64 = 1e-9;
const UNITARITY_STEPS: usize = 100_000;
const BESSEL_TOL: f64 = 1e-6;
const BESSEL_T_MAX: f64 = 50.0;
const BESSEL_DT: f64 = 2e-4;
const GREENS_TOL: f64 = 1e-3;
const GREENS_DT: f64 = 0.002;
const GREENS_ETA: f64 = 0.1;
const DYSON_TOL: f64 = 1e-10;
const LDOS_TOL: f64 = 1e-3;
const REVERSAL_TOL: f64 = 1e-2;
const MIN_ORDER: f64 = 2.0;
const REFINEMENT_SECONDS: f64 = 60.0;
const ECHO_FIDELITY_MIN: f64 = 0.99;
const ECHO_VELOCITY_TOL: f64 = 0.02;
const SHAPE_CORRELATION_MIN: f64 = 0.95;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario_path(name: &str) -> PathBuf {
    workspace().join("scenarios").join(format!("{name}.cfg"))
}

fn model_of(name: &str) -> (ChainModel, WaveField, ProtocolConfig) {
    let r = open(&scenario_path(name), &Overrides::default()).expect("shipped scenario resolves");
    let cfg = r.scenario.protocol_config();
    (r.model, r.packet, cfg)
}

/// Runs `pif run` from `cwd` into the relative directory `out`.
fn run_cli(name: &str, cwd: &Path) -> Report {
    fs::create_dir_all(cwd).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pif"))
        .args(["run", scenario_path(name).to_str().unwrap(), "--out-dir", "out"])
        .current_dir(cwd)
        .output()
        .expect("pif binary runs");
    assert!(o.status.success(), "pif run {name} failed: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&fs::read_to_string(cwd.join("out/report.json")).unwrap()).unwrap()
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn unitarity() -> Outcome {
    let (model, packet, _) = model_of("fig2");
    let dt = 0.02;
    let out = evolve(&model, &packet, &StepperConfig::with_dt(dt), None, UNITARITY_STEPS as f64 * dt, &mut []).unwrap();
    let dev = (norm(&out) - 1.0).abs();
    outcome(dev < UNITARITY_TOL, format!("|norm - 1| = {dev:.3e} after {UNITARITY_STEPS} steps on {} sites (< {UNITARITY_TOL:e})", model.n_sites()))
}

fn bessel_propagator() -> Outcome {
    let n = 301;
    let c = 150;
    let model = build_chain(n, c, PotentialProfile::free()).unwrap();
    let cfg = StepperConfig::with_dt(BESSEL_DT);
    let mut psi = WaveField::delta(n, c);
    let mut worst: f64 = 0.0;
    for t in [5.0, 12.5, 25.0, 37.5, BESSEL_T_MAX] {
        psi = evolve(&model, &psi, &cfg, None, t, &mut []).unwrap();
        for j in 0..n {
            let exact = oracle::bessel_j(j as i32 - c as i32, 2.0 * t).powi(2);
            worst = worst.max((psi.amplitudes[j].norm_sqr() - exact).abs());
        }
    }
    outcome(worst < BESSEL_TOL, format!("max |ρ - J²| = {worst:.3e} for t ≤ {BESSEL_T_MAX} at dt = {BESSEL_DT} (< {BESSEL_TOL:e})"))
}

fn greens_cross_check() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["free", "fig4"] {
        let (model, _, _) = model_of(name);
        let s = model.probe();
        let rec = impulse_response(&model, s, 10.0 / GREENS_ETA, GREENS_DT).unwrap();
        let grid = EnergyGrid::conjugate(GREENS_DT, 1.0, rec.len(), 2, GREENS_ETA).unwrap();
        let g = greens_spectrum(&rec, &grid, 1.0).unwrap();
        let (lo, hi) = model.band();
        let margin = 0.05 * (hi - lo);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for i in 0..grid.n_points {
            let e = grid.energy(i);
            if e > lo + margin && e < hi - margin {
                let direct = resolvent_element(&model, s, s, C64::new(e, GREENS_ETA)).unwrap();
                worst = worst.max((g.values[i] - direct).norm() / direct.norm());
                count += 1;
            }
        }
        pass &= worst < GREENS_TOL;
        parts.push(format!("{name}: {worst:.3e} over {count} energies"));
    }
    outcome(pass, format!("max relative |G_time - G_resolvent| {} at η = {GREENS_ETA} (< {GREENS_TOL:e})", parts.join(", ")))
}

/// Largest elementwise residual of `G = Ḡ + Ḡ W G` from dense inverses.
fn dense_dyson(model: &ChainModel, cut: usize, z: C64) -> f64 {
    let n = model.n_sites();
    let off = vec![-1.0; n - 1];
    let g = oracle::dense_resolvent(model.site_energies(), &off, z);
    let mut cut_off = off.clone();
    cut_off[cut] = 0.0;
    let g0 = oracle::dense_resolvent(model.site_energies(), &cut_off, z);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = g0[(i, cut)] * C64::new(-1.0, 0.0) * g[(cut + 1, j)] + g0[(i, cut + 1)] * C64::new(-1.0, 0.0) * g[(cut, j)];
            worst = worst.max((g[(i, j)] - g0[(i, j)] - w).norm());
        }
    }
    worst
}

fn dyson_identity() -> Outcome {
    let energies = [C64::new(0.3, 0.01), C64::new(1.1, 0.1), C64::new(2.0, 0.5), C64::new(3.6, 0.02), C64::new(-0.5, 1.0)];
    let s = 50;
    let fig4_like = build_chain(s + 201, s, PotentialProfile::free().with_segment(s + 100, s + 105, 0.2)).unwrap();
    let (fig4, _, _) = model_of("fig4");
    let cases = [
        ("3-site", build_chain(3, 1, PotentialProfile::free()).unwrap(), 1usize, true),
        ("50-site", build_chain(50, 25, PotentialProfile::free()).unwrap(), 24, true),
        ("fig4 cavity", fig4_like, s, true),
        ("fig4", fig4.clone(), fig4.probe(), false),
    ];
    let mut worst_core: f64 = 0.0;
    let mut worst_dense: f64 = 0.0;
    let mut worst_element: f64 = 0.0;
    for (_, m, cut, dense) in &cases {
        for z in energies {
            worst_core = worst_core.max(dyson_check(m, *cut, z).unwrap());
            if *dense {
                worst_dense = worst_dense.max(dense_dyson(m, *cut, z));
                let g = oracle::dense_resolvent(m.site_energies(), &vec![-1.0; m.n_sites() - 1], z);
                for &(i, j) in &[(0, 0), (*cut, *cut), (*cut, *cut + 1), (0, m.n_sites() - 1)] {
                    worst_element = worst_element.max((resolvent_element(m, i, j, z).unwrap() - g[(i, j)]).norm());
                }
            }
        }
    }
    let pass = worst_core < DYSON_TOL && worst_dense < DYSON_TOL && worst_element < DYSON_TOL;
    outcome(
        pass,
        format!(
            "residual {worst_core:.2e} (library), {worst_dense:.2e} (dense oracle), resolvent vs dense {worst_element:.2e} on 3-site, 50-site and fig4 chains at 5 energies (< {DYSON_TOL:e})"
        ),
    )
}

fn ldos_sum_rule() -> Outcome {
    let model = build_chain(200, 100, PotentialProfile::free()).unwrap();
    let eta = 0.05;
    let grid = EnergyGrid::uniform(-60.0, 64.0, 24801, eta).unwrap();
    let g = resolvent_spectrum(&model, 100, &grid).unwrap();
    let resolvent_route = -g.values.iter().map(|v| v.im).sum::<f64>() * grid.spacing / std::f64::consts::PI;

    let dt = 0.02;
    let rec = impulse_response(&model, 100, 200.0, dt).unwrap();
    let full = EnergyGrid::conjugate(dt, 1.0, rec.len(), 2, eta).unwrap();
    let gt = greens_spectrum(&rec, &full, 1.0).unwrap();
    let time_route = -gt.values.iter().map(|v| v.im).sum::<f64>() * full.spacing / std::f64::consts::PI;

    let pass = (resolvent_route - 1.0).abs() < LDOS_TOL && (time_route - 1.0).abs() < LDOS_TOL;
    outcome(pass, format!("-(1/π)∫Im G dε = {resolvent_route:.6} (resolvent), {time_route:.6} (impulse response), tolerance {LDOS_TOL:e}"))
}

fn cavity_states(run: &pif_core::ProtocolReport, fp: &ForwardPass, probe: usize, dt: f64) -> Vec<C64> {
    let mut v = Vec::new();
    for &d in &fp.offsets {
        let s = run.snapshot_at(fp.window.t_r + d, dt).expect("backward snapshot");
        v.extend_from_slice(&s.amplitudes[probe + 1..]);
    }
    v
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn refinement() -> Outcome {
    let started = Instant::now();
    let (model, packet, base) = model_of("fig4");
    let probe = model.probe();
    let mut errors = Vec::new();
    let mut states = Vec::new();
    let mut window = None;
    for dt in [0.02, 0.01, 0.005] {
        let cfg = ProtocolConfig { dt, pinned_window: window, ..base.clone() };
        let fp = forward_pass(&model, &packet, &cfg).unwrap();
        window = Some(fp.window);
        let run = pif_from(&model, &fp, &cfg).unwrap();
        errors.push(run.reversal_error_series.iter().map(|e| e.1).fold(0.0, f64::max));
        states.push(cavity_states(&run, &fp, probe, dt));
    }
    let d12 = distance(&states[0], &states[1]);
    let d23 = distance(&states[1], &states[2]);
    let order = (d12 / d23).log2();
    let decreasing = errors[1] < errors[0] && errors[2] < errors[1];
    let seconds = started.elapsed().as_secs_f64();
    let pass = errors[0] < REVERSAL_TOL && decreasing && order >= MIN_ORDER && seconds < REFINEMENT_SECONDS;
    outcome(
        pass,
        format!(
            "max cavity error {:.3e} / {:.3e} / {:.3e} at dt = 0.02 / 0.01 / 0.005 (first < {REVERSAL_TOL:e}, decreasing); self-convergence order {order:.2} (≥ {MIN_ORDER}); {seconds:.0} s (< {REFINEMENT_SECONDS})",
            errors[0],
            errors[1],
            errors[2],
        ),
    )
}

fn echo_recovery(fig2: &Report) -> Outcome {
    let pif = fig2.run(Protocol::Pif).expect("PIF run");
    let rel = (pif.echo_velocity + pif.initial_velocity).abs() / pif.initial_velocity.abs();
    outcome(
        pif.echo_fidelity > ECHO_FIDELITY_MIN && rel < ECHO_VELOCITY_TOL,
        format!(
            "fig2 PIF fidelity {:.9} (> {ECHO_FIDELITY_MIN}), velocity {:.6} -> {:.6}, mismatch {rel:.2e} (< {ECHO_VELOCITY_TOL})",
            pif.echo_fidelity, pif.initial_velocity, pif.echo_velocity
        ),
    )
}

fn pif_beats_trm(fig4: &Report, fig2: &Report) -> Outcome {
    let c4 = fig4.comparison.as_ref().expect("fig4 compares both protocols");
    let c2 = fig2.comparison.as_ref().expect("fig2 compares both protocols");
    let sampled = fig4.run(Protocol::Pif).unwrap().reversal_error.iter().filter(|e| e.0 > 0.0).count();
    let pass = c4.fidelity_gain > 0.0 && c4.pif_not_better_at.is_empty() && c2.probe_shape_correlation > SHAPE_CORRELATION_MIN;
    outcome(
        pass,
        format!(
            "fig4 fidelity gain {:.4e} (> 0), PIF error not below TRM at {} of {sampled} sampled δt > 0; fig2 probe shape correlation {:.6} (> {SHAPE_CORRELATION_MIN})",
            c4.fidelity_gain,
            c4.pif_not_better_at.len(),
            c2.probe_shape_correlation
        ),
    )
}

fn side_lobe(reports: &[(&str, &Report)]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, r) in reports {
        let series = &r.run(Protocol::Pif).unwrap().outer_norm;
        let base = series[0].1;
        let min_gain = series.iter().skip(1).map(|e| e.1 - base).fold(f64::INFINITY, f64::min);
        pass &= min_gain > 0.0;
        parts.push(format!("{name}: outer norm {base:.6} at t_R, smallest later gain {min_gain:.3e}"));
    }
    outcome(pass, parts.join("; "))
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (ta, tb) = (tree(a), tree(b));
    let same = ta == tb;
    let mismatch = ta.iter().zip(&tb).find(|(x, y)| x != y).map(|(x, _)| x.0.display().to_string());
    outcome(
        same,
        match mismatch {
            None if same => format!("{} files byte-identical across two runs of scenarios/fig2.cfg", ta.len()),
            None => format!("file lists differ ({} vs {})", ta.len(), tb.len()),
            Some(f) => format!("first differing file {f}"),
        },
    )
}

fn main() {
    let tmp = TempDir::new().unwrap();
    let (fig2_a, fig2_b, fig4_dir) = (tmp.path().join("fig2_a"), tmp.path().join("fig2_b"), tmp.path().join("fig4"));

    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "unitarity", unitarity()),
        (2, "propagator oracle", bessel_propagator()),
        (3, "Green's function cross-check", greens_cross_check()),
        (4, "Dyson identity", dyson_identity()),
        (5, "LDOS sum rule", ldos_sum_rule()),
        (6, "PIF exactness under refinement", refinement()),
    ];
    let fig2 = run_cli("fig2", &fig2_a);
    let fig2_again = run_cli("fig2", &fig2_b);
    let fig4 = run_cli("fig4", &fig4_dir);
    results.push((7, "echo recovery", echo_recovery(&fig2)));
    results.push((8, "PIF beats TRM", pif_beats_trm(&fig4, &fig2)));
    results.push((9, "injection side lobe", side_lobe(&[("fig4", &fig4), ("fig2", &fig2_again)])));
    results.push((10, "determinism", determinism(&fig2_a.join("out"), &fig2_b.join("out"))));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
