//! Reversal diagnostics and plot-ready tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;

use crate::error::{PifError, Result};
use crate::greens::SpectralSignal;
use crate::lattice::ChainModel;
use crate::protocols::ProtocolReport;
use crate::signal::ProbeRecord;
use crate::wavefield::{centroid_velocity, WaveField};

/// Relative amplitude below which a site is outside a packet's support.
pub const SUPPORT_CUTOFF: f64 = 1e-6;

fn find<'a>(snaps: &'a [WaveField], t: f64, dt: f64) -> Result<&'a WaveField> {
    snaps.iter().find(|s| (s.time - t).abs() < 0.5 * dt).ok_or(PifError::MissingSnapshot(t))
}

/// `ψ(t_R + δt) - conj(ψ(t_R - δt))` on the cavity sites `j > s`, for each
/// sampled δt.
pub fn cavity_deviations(
    run: &ProtocolReport,
    forward_snaps: &[WaveField],
    offsets: &[f64],
    probe: usize,
    dt: f64,
) -> Result<Vec<(f64, Vec<C64>)>> {
    let t_r = run.window.t_r;
    offsets
        .iter()
        .map(|&d| {
            let fwd = find(forward_snaps, t_r - d, dt)?;
            let bwd = find(&run.snapshots, t_r + d, dt)?;
            let dev = bwd.amplitudes[probe + 1..]
                .iter()
                .zip(&fwd.amplitudes[probe + 1..])
                .map(|(b, f)| b - f.conj())
                .collect();
            Ok((d, dev))
        })
        .collect()
}

/// Cavity-restricted L2 distance between `ψ(t_R + δt)` and
/// `conj(ψ(t_R - δt))`, divided by the largest cavity norm of the forward
/// states over the sampled δt.
pub fn cavity_reversal_error(
    run: &ProtocolReport,
    forward_snaps: &[WaveField],
    offsets: &[f64],
    probe: usize,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let t_r = run.window.t_r;
    let scale = offsets
        .iter()
        .map(|&d| find(forward_snaps, t_r - d, dt).map(|f| cavity_l2(&f.amplitudes, probe)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let devs = cavity_deviations(run, forward_snaps, offsets, probe, dt)?;
    Ok(devs
        .into_iter()
        .map(|(d, v)| {
            let e = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            (d, if scale > 0.0 { e / scale } else { e })
        })
        .collect())
}

fn cavity_l2(amps: &[C64], probe: usize) -> f64 {
    amps[probe + 1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Sites where `|ψ_j| ≥ SUPPORT_CUTOFF · max|ψ|`.
pub fn support(field: &WaveField) -> Vec<usize> {
    let peak = field.amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max);
    (0..field.len()).filter(|&j| field.amplitudes[j].norm() >= SUPPORT_CUTOFF * peak).collect()
}

/// `|⟨a|b⟩_S|² / (‖a‖_S² ‖b‖_S²)` over the listed sites; 0 when either
/// restriction vanishes.
pub fn restricted_fidelity(a: &WaveField, b: &WaveField, sites: &[usize]) -> f64 {
    let mut ov = C64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for &j in sites {
        ov += a.amplitudes[j].conj() * b.amplitudes[j];
        na += a.amplitudes[j].norm_sqr();
        nb += b.amplitudes[j].norm_sqr();
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (ov.norm_sqr() / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoAnalysis {
    pub fidelity: f64,
    pub initial_velocity: f64,
    pub echo_velocity: f64,
}

/// Fidelity of `ψ(2t_R)` against `conj(ψ(0))` on the initial packet's
/// support.
pub fn echo_fidelity(run: &ProtocolReport, initial: &WaveField, dt: f64) -> Result<f64> {
    let echo = find(&run.snapshots, 2.0 * run.window.t_r, dt)?;
    Ok(restricted_fidelity(echo, &initial.conj(), &support(initial)))
}

pub fn echo_analysis(run: &ProtocolReport, initial: &WaveField, model: &ChainModel, dt: f64) -> Result<EchoAnalysis> {
    let echo = find(&run.snapshots, 2.0 * run.window.t_r, dt)?;
    let sites = support(initial);
    let fidelity = restricted_fidelity(echo, &initial.conj(), &sites);
    let range = match (sites.first(), sites.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    };
    Ok(EchoAnalysis {
        fidelity,
        initial_velocity: centroid_velocity(initial, model, range.clone()),
        echo_velocity: centroid_velocity(echo, model, range),
    })
}

/// Pearson correlation of two equally long series after each is scaled to
/// unit maximum.
pub fn shape_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let norm = |v: &[f64]| {
        let m = v.iter().cloned().fold(0.0, f64::max);
        v.iter().map(|x| if m > 0.0 { x / m } else { 0.0 }).collect::<Vec<_>>()
    };
    let (a, b) = (norm(&a[..n]), norm(&b[..n]));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (a[i] - ma, b[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Outer,
    Probe,
    Cavity,
}

impl RegionTag {
    fn of(site: usize, probe: usize) -> Self {
        match site.cmp(&probe) {
            std::cmp::Ordering::Less => RegionTag::Outer,
            std::cmp::Ordering::Equal => RegionTag::Probe,
            std::cmp::Ordering::Greater => RegionTag::Cavity,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            RegionTag::Outer => "outer",
            RegionTag::Probe => "probe",
            RegionTag::Cavity => "cavity",
        }
    }
}

/// One row per site: `site, x, re, im, density, region`.
pub fn snapshot_table(field: &WaveField, model: &ChainModel) -> String {
    let a = model.units().a;
    let mut out = String::from("time,site,x,re,im,density,region\n");
    let t = fmt(field.time);
    for (j, c) in field.amplitudes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{j},{},{},{},{},{}",
            fmt(j as f64 * a),
            fmt(c.re),
            fmt(c.im),
            fmt(c.norm_sqr()),
            RegionTag::of(j, model.probe()).as_str()
        );
    }
    out
}

/// `t, probe density, injected density, protocol` on the stepper grid,
/// covering the forward registry up to `t_R` followed by the reversal.
/// The injected column holds `|χ|²` of the step starting at `t`.
pub fn probe_series_table(run: &ProtocolReport, forward: &ProbeRecord, stride: usize) -> String {
    let stride = stride.max(1);
    let tag = run.protocol.to_string();
    let mut out = String::from("t,density,injected_density,protocol\n");
    let n_fwd = forward.index_of(run.window.t_r).unwrap_or(forward.len().saturating_sub(1));
    for n in (0..n_fwd).step_by(stride) {
        let _ = writeln!(out, "{},{},{},{tag}", fmt(forward.time(n)), fmt(forward.samples[n].norm_sqr()), fmt(0.0));
    }
    let back = &run.backward_probe;
    for n in (0..back.len()).step_by(stride) {
        let inj = run.injection.samples.get(n).map(|c| c.norm_sqr()).unwrap_or(0.0);
        let _ = writeln!(out, "{},{},{},{tag}", fmt(back.time(n)), fmt(back.samples[n].norm_sqr()), fmt(inj));
    }
    out
}

pub fn record_table(record: &ProbeRecord) -> String {
    let mut out = String::from("t,re,im\n");
    for (n, c) in record.samples.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt(record.time(n)), fmt(c.re), fmt(c.im));
    }
    out
}

/// Spectrum rows restricted to `[lo, hi]`.
pub fn spectrum_table(spectral: &SpectralSignal, lo: f64, hi: f64) -> String {
    let mut out = String::from("energy,re,im,abs\n");
    for (i, v) in spectral.values.iter().enumerate() {
        let e = spectral.grid.energy(i);
        if e >= lo && e <= hi {
            let _ = writeln!(out, "{},{},{},{}", fmt(e), fmt(v.re), fmt(v.im), fmt(v.norm()));
        }
    }
    out
}

pub fn potential_table(model: &ChainModel) -> String {
    let u = model.profile().potential(model.n_sites());
    let mut out = String::from("site,x,potential,site_energy\n");
    for (j, (uj, ej)) in u.iter().zip(model.site_energies()).enumerate() {
        let _ = writeln!(out, "{j},{},{},{}", fmt(j as f64 * model.units().a), fmt(*uj), fmt(*ej));
    }
    out
}

pub fn series_table(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (a, b) in rows {
        let _ = writeln!(out, "{},{}", fmt(*a), fmt(*b));
    }
    out
}

/// The tables behind the potential profile, density snapshots, probe series,
/// injection and reversal error of one run, as `(file name, contents)`.
/// Only snapshots at `snapshot_times` are included; all of them when `None`.
pub fn figure_tables(
    run: &ProtocolReport,
    model: &ChainModel,
    forward: &ProbeRecord,
    series_stride: usize,
    snapshot_times: Option<&[f64]>,
    dt: f64,
) -> Vec<(String, String)> {
    let mut files = vec![("potential.csv".to_string(), potential_table(model))];
    let wanted = |t: f64| snapshot_times.map_or(true, |ts| ts.iter().any(|&w| (w - t).abs() < 0.5 * dt));
    for (i, snap) in run.snapshots.iter().enumerate().filter(|(_, s)| wanted(s.time)) {
        files.push((format!("snapshot_{i:04}.csv"), snapshot_table(snap, model)));
    }
    files.push(("probe_series.csv".to_string(), probe_series_table(run, forward, series_stride)));
    let mut body = String::from("t,re,im\n");
    for (t, c) in crate::protocols::injection_series(&run.injection) {
        let _ = writeln!(body, "{},{},{}", fmt(t), fmt(c.re), fmt(c.im));
    }
    files.push(("injection.csv".to_string(), body));
    files.push(("reversal_error.csv".to_string(), series_table("dt_offset,error", &run.reversal_error_series)));
    files.push(("outer_norm.csv".to_string(), series_table("dt_offset,outer_norm", &run.outer_norm_series)));
    files
}

/// Writes [`figure_tables`] into `dir`. Returns the paths in write order.
pub fn export_figures(
    run: &ProtocolReport,
    model: &ChainModel,
    forward: &ProbeRecord,
    dir: &Path,
    series_stride: usize,
    snapshot_times: Option<&[f64]>,
    dt: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, body) in figure_tables(run, model, forward, series_stride, snapshot_times, dt) {
        let path = dir.join(name);
        fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
