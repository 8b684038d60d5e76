use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pif_core::greens::resolvent_spectrum;
use pif_core::metrics::figure_tables;
use pif_core::protocols::{echo_free, forward_pass, pif_from, trm_from};
use pif_core::{greens_spectrum, impulse_response, EnergyGrid, ProbeRecord, Protocol, ProtocolReport};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{Comparison, ForwardSummary, LatticeSummary, Report, RunSummary};
use crate::scenario::{open, Overrides, ProtocolChoice, Resolved};

/// Relative path and contents of every output file, in write order.
pub type FileSet = Vec<(String, String)>;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn record_rows(record: &ProbeRecord, stride: usize) -> String {
    let mut out = String::from("t,re,im\n");
    for n in (0..record.len()).step_by(stride.max(1)) {
        let c = record.samples[n];
        let _ = writeln!(out, "{},{},{}", fmt(record.time(n)), fmt(c.re), fmt(c.im));
    }
    out
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the scenario's protocol(s) and renders the full output tree.
pub fn render_run(res: &Resolved) -> Result<(Report, FileSet), CliError> {
    let sc = &res.scenario;
    let cfg = sc.protocol_config();
    let model = &res.model;
    let fp = forward_pass(model, &res.packet, &cfg)?;

    let volume = sc.protocol.trm_volume;
    let (pif, trm): (Option<ProtocolReport>, Option<ProtocolReport>) = match sc.protocol.kind {
        ProtocolChoice::Pif => (Some(pif_from(model, &fp, &cfg)?), None),
        ProtocolChoice::Trm => (None, Some(trm_from(model, &fp, &cfg, volume)?)),
        ProtocolChoice::Both => {
            let (p, t) = std::thread::scope(|s| {
                let p = s.spawn(|| pif_from(model, &fp, &cfg));
                let t = s.spawn(|| trm_from(model, &fp, &cfg, volume));
                (p.join().expect("PIF worker panicked"), t.join().expect("TRM worker panicked"))
            });
            (Some(p?), Some(t?))
        }
    };

    let w = fp.window;
    let mut key_times = vec![0.0, w.t1, w.t_r, 2.0 * w.t_r - w.t1, 2.0 * w.t_r];
    key_times.extend(&sc.output.snapshot_times);

    let mut files: FileSet = vec![("effective.cfg".into(), sc.to_toml())];
    let record_file = "forward_record.csv";
    files.push((record_file.into(), record_rows(&fp.record, sc.output.series_stride)));

    let mut runs = Vec::new();
    for run in pif.iter().chain(trm.iter()) {
        let dir = run.protocol.to_string().to_lowercase();
        let tables = figure_tables(run, model, &fp.record, sc.output.series_stride, Some(&key_times), cfg.dt);
        let names: Vec<String> = tables.iter().map(|(n, _)| format!("{dir}/{n}")).collect();
        files.extend(names.iter().cloned().zip(tables.into_iter().map(|(_, b)| b)));
        runs.push(RunSummary::of(run, names));
    }
    let comparison = match (&pif, &trm) {
        (Some(p), Some(t)) => Some(Comparison::of(p, t)),
        _ => None,
    };
    let report = Report {
        scenario: sc.clone(),
        lattice: LatticeSummary::of(model),
        forward: ForwardSummary::of(&fp, record_file),
        runs,
        comparison,
    };
    files.push(("report.json".into(), json(&report)));
    Ok((report, files))
}

pub fn write_tree(dir: &Path, files: &FileSet) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (rel, body) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

fn first_difference(a: &FileSet, b: &FileSet) -> Option<String> {
    if a.len() != b.len() {
        return Some(format!("{} files vs {}", a.len(), b.len()));
    }
    a.iter().zip(b).find(|(x, y)| x != y).map(|(x, _)| x.0.clone())
}

pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// `run`: executes the scenario and writes its output tree. With
/// `seedless_check` the whole pipeline runs twice and the two renderings must
/// agree byte for byte before anything is written.
pub fn cmd_run(path: &Path, overrides: &Overrides, seedless_check: bool) -> Result<RunOutcome, CliError> {
    let res = open(path, overrides)?;
    let (report, files) = render_run(&res)?;
    if seedless_check {
        let (_, again) = render_run(&res)?;
        if let Some(name) = first_difference(&files, &again) {
            return Err(CliError::Nondeterministic(name));
        }
    }
    let out_dir = res.scenario.output.dir.clone();
    let files = write_tree(&out_dir, &files)?;
    Ok(RunOutcome { report, out_dir, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct GreensExport {
    pub eta: f64,
    pub t_max: f64,
    pub dt: f64,
    pub grid: EnergyGrid,
    /// Sites of the deepened chain used for the impulse response.
    pub n_sites: usize,
    pub probe: usize,
}

/// Decay rates per horizon used by `greens` when no broadening is given: the
/// response has decayed by `e^{-10}` at the end of the record.
pub const GREENS_DECAY_PER_HORIZON: f64 = 10.0;

/// Renders `G^R_{ss}(t)` over the horizon and `G^R_{ss}(ε)` across the band,
/// next to a direct resolvent evaluation at the same complex energies.
pub fn render_greens(res: &Resolved) -> Result<(GreensExport, FileSet), CliError> {
    let sc = &res.scenario;
    let dt = sc.stepper.dt;
    let hbar = res.model.hbar();
    let t_max = (sc.stepper.horizon / dt).round() * dt;
    let eta = sc.greens.eta.unwrap_or(GREENS_DECAY_PER_HORIZON * hbar / t_max);
    let deep = echo_free(&res.model, t_max)?;
    let probe = deep.probe();
    let record = impulse_response(&deep, probe, t_max, dt)?;
    let grid = EnergyGrid::conjugate(dt, hbar, record.len(), sc.greens.grid_padding, eta)?;
    let spectrum = greens_spectrum(&record, &grid, hbar)?;

    let (lo, hi) = res.model.band();
    let margin = if sc.greens.band_margin > 0.0 { sc.greens.band_margin } else { 0.5 };
    let first = ((lo - margin - grid.eps_min) / grid.spacing).floor().max(0.0) as usize;
    let last = (((hi + margin - grid.eps_min) / grid.spacing).ceil() as usize).min(grid.n_points - 1);
    let sub = EnergyGrid { eps_min: grid.energy(first), spacing: grid.spacing, n_points: last - first + 1, eta };
    let direct = resolvent_spectrum(&deep, probe, &sub)?;

    let mut energy = String::from("energy,re,im,abs,resolvent_re,resolvent_im\n");
    for (k, r) in direct.values.iter().enumerate() {
        let g = spectrum.values[first + k];
        let _ = writeln!(energy, "{},{},{},{},{},{}", fmt(sub.energy(k)), fmt(g.re), fmt(g.im), fmt(g.norm()), fmt(r.re), fmt(r.im));
    }
    let meta = GreensExport { eta, t_max, dt, grid, n_sites: deep.n_sites(), probe };
    let files = vec![
        ("greens_time.csv".to_string(), record_rows(&record, 1)),
        ("greens_energy.csv".to_string(), energy),
        ("greens.json".to_string(), json(&meta)),
    ];
    Ok((meta, files))
}

pub fn cmd_greens(path: &Path, overrides: &Overrides) -> Result<(GreensExport, Vec<PathBuf>), CliError> {
    let res = open(path, overrides)?;
    let (meta, files) = render_greens(&res)?;
    let written = write_tree(&res.scenario.output.dir, &files)?;
    Ok((meta, written))
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub fidelity: f64,
    pub time: f64,
    pub series: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { fidelity: 1e-9, time: 1e-9, series: 1e-9 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompareSummary {
    pub lines: Vec<String>,
    pub violations: Vec<String>,
}

fn max_delta(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs())).fold(0.0, f64::max)
}

pub fn read_report(path: &Path) -> Result<Report, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::NotFound(path.to_path_buf())
        } else {
            CliError::Io(format!("{}: {e}", path.display()))
        }
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Fidelities, windows and series of two reports side by side. Runs are paired
/// by protocol; when the two reports hold different protocols they are paired
/// in order.
pub fn compare_reports(a: &Report, b: &Report, tol: &Tolerances) -> CompareSummary {
    let mut s = CompareSummary::default();
    let check = |label: String, delta: f64, limit: f64, s: &mut CompareSummary| {
        let line = format!("{label}: delta {delta:.3e} (tolerance {limit:.1e})");
        if !(delta <= limit) {
            s.violations.push(line.clone());
        }
        s.lines.push(line);
    };
    let (wa, wb) = (a.forward.window, b.forward.window);
    check("window t1".into(), (wa.t1 - wb.t1).abs(), tol.time, &mut s);
    check("window t_R".into(), (wa.t_r - wb.t_r).abs(), tol.time, &mut s);

    let pairs: Vec<(&RunSummary, &RunSummary)> = {
        let by_protocol: Vec<_> = a.runs.iter().filter_map(|ra| b.runs.iter().find(|rb| rb.protocol == ra.protocol).map(|rb| (ra, rb))).collect();
        if by_protocol.is_empty() {
            a.runs.iter().zip(&b.runs).collect()
        } else {
            by_protocol
        }
    };
    if pairs.len() != a.runs.len().max(b.runs.len()) {
        s.violations.push(format!("run count {} vs {}", a.runs.len(), b.runs.len()));
    }
    for (ra, rb) in pairs {
        let tag = if ra.protocol == rb.protocol { ra.protocol.to_string() } else { format!("{}/{}", ra.protocol, rb.protocol) };
        s.lines.push(format!("{tag} fidelity: {:.12} vs {:.12}", ra.echo_fidelity, rb.echo_fidelity));
        if ra.echo_fidelity != rb.echo_fidelity {
            let winner = if ra.echo_fidelity > rb.echo_fidelity { ra.protocol } else { rb.protocol };
            let side = if ra.echo_fidelity > rb.echo_fidelity { "first" } else { "second" };
            s.lines.push(format!("{tag} higher fidelity: {winner} ({side} report)"));
        }
        check(format!("{tag} fidelity"), (ra.echo_fidelity - rb.echo_fidelity).abs(), tol.fidelity, &mut s);
        check(format!("{tag} reversal error series"), max_delta(&ra.reversal_error, &rb.reversal_error), tol.series, &mut s);
        check(format!("{tag} outer norm series"), max_delta(&ra.outer_norm, &rb.outer_norm), tol.series, &mut s);
    }
    s
}

pub fn cmd_compare(a: &Path, b: &Path, tol: &Tolerances) -> Result<CompareSummary, CliError> {
    let (ra, rb) = (read_report(a)?, read_report(b)?);
    let summary = compare_reports(&ra, &rb, tol);
    if summary.violations.is_empty() {
        Ok(summary)
    } else {
        for l in &summary.lines {
            println!("{l}");
        }
        Err(CliError::Mismatch(summary.violations.join("; ")))
    }
}

/// Protocol name as used for output subdirectories.
pub fn run_dir(p: Protocol) -> String {
    p.to_string().to_lowercase()
}
