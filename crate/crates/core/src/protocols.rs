//! End-to-end time-reversal runs: the perfect inverse filter (PIF) and the
//! time-reversal mirror (TRM) baseline.
//!
//! Both share the forward half: record `ψ(x_s, t)` during free evolution,
//! find the recording window `(t_1, t_R)`, and measure `G^R_{ss}`. They differ
//! only in the injection built from the record: PIF divides the reversed
//! target by `G^R_{ss}(ε)`, TRM re-emits the mirrored record scaled by `c`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PifError, Result};
use crate::evolve::{evolve, steps_between, ProbeRecorder, SnapshotTaker, StepperConfig, DEFAULT_DT};
use crate::greens::{greens_spectrum, impulse_response, EnergyGrid, SpectralSignal};
use crate::lattice::{extend_left, ChainModel};
use crate::metrics;
use crate::signal::{
    band_taper, detect_window, inverse_filter, reversed_target, to_time_bounded, InjectionSchedule, ProbeRecord, RecordingWindow,
    TruncationReport, WindowParams,
};
use crate::wavefield::{norm, region_norm, Region, WaveField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Pif,
    Trm,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Pif => write!(f, "PIF"),
            Protocol::Trm => write!(f, "TRM"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub dt: f64,
    /// Length of the forward recording.
    pub horizon: f64,
    pub window: WindowParams,
    /// Skips detection when set.
    pub pinned_window: Option<RecordingWindow>,
    /// Broadening; `ħ/T_rec` when unset.
    pub eta: Option<f64>,
    /// `η T_rec / ħ` used when `eta` is unset.
    pub eta_per_window: f64,
    pub grid_padding: usize,
    /// Length of the recorded `G^R_{ss}(t)` in units of `ħ/η`.
    pub greens_span: f64,
    /// Width of the roll-off that confines the injection spectrum to the band.
    pub band_margin: Option<f64>,
    pub max_initial_cavity_norm: f64,
    /// Spacing of the δt samples used for reversal diagnostics.
    pub sample_interval: f64,
    /// Injection peak allowed relative to the recorded peak amplitude.
    pub blowup_factor: f64,
    /// Largest energy fraction of the injection allowed beyond the window.
    pub max_out_of_window: f64,
    /// TRM records only the outgoing part of the signal, which starts after
    /// the first silence at the probe lasting this long. `None` records the
    /// whole window.
    pub trm_min_gap: Option<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            dt: DEFAULT_DT,
            horizon: 1000.0,
            window: WindowParams::default(),
            pinned_window: None,
            eta: None,
            eta_per_window: 1.0,
            grid_padding: 4,
            greens_span: 2.0,
            band_margin: Some(1.0),
            max_initial_cavity_norm: 1e-12,
            sample_interval: 10.0,
            blowup_factor: 1e6,
            max_out_of_window: crate::signal::MAX_OUT_OF_WINDOW_FRACTION,
            trm_min_gap: Some(100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensMeta {
    pub eta: f64,
    pub t_max: f64,
    pub grid: EnergyGrid,
}

/// Steps 1–3 of the protocol, shared by PIF and TRM.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub initial: WaveField,
    /// Probe registry over the whole forward horizon.
    pub record: ProbeRecord,
    pub window: RecordingWindow,
    /// δt offsets (from `t_R`) at which states are compared.
    pub offsets: Vec<f64>,
    /// `ψ(t_R - δt)` for every offset, plus `ψ(0)`; sorted by time.
    pub snapshots: Vec<WaveField>,
    pub state_at_tr: WaveField,
    pub greens_time: ProbeRecord,
    pub greens: SpectralSignal,
    pub greens_meta: GreensMeta,
}

#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub window: RecordingWindow,
    pub greens_meta: Option<GreensMeta>,
    pub injection: InjectionSchedule,
    pub truncation: Option<TruncationReport>,
    /// Forward and backward states, sorted by time.
    pub snapshots: Vec<WaveField>,
    /// `ψ(x_s, t)` over `[t_R, 2t_R]` during the reversal.
    pub backward_probe: ProbeRecord,
    pub reversal_error_series: Vec<(f64, f64)>,
    /// `(δt, Σ_{j<s} |ψ(t_R + δt)|²)`.
    pub outer_norm_series: Vec<(f64, f64)>,
    /// `None` for a degenerate (empty) run.
    pub echo_fidelity: Option<f64>,
    pub initial_velocity: f64,
    pub echo_velocity: f64,
    pub trm_volume: Option<f64>,
    /// Where the TRM recording begins; `t_1` unless only the outgoing part
    /// was re-emitted.
    pub trm_record_start: Option<f64>,
}

impl ProtocolReport {
    pub fn is_degenerate(&self) -> bool {
        self.echo_fidelity.is_none()
    }

    pub fn snapshot_at(&self, t: f64, dt: f64) -> Option<&WaveField> {
        self.snapshots.iter().find(|s| (s.time - t).abs() < 0.5 * dt)
    }
}

fn snap_to_grid(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// δt sample offsets `0, Δ, 2Δ, …` up to and including `T_rec`, on the grid.
pub fn sample_offsets(window: &RecordingWindow, interval: f64, dt: f64) -> Vec<f64> {
    let t_rec = window.t_rec();
    let mut v: Vec<f64> = Vec::new();
    let mut i = 0usize;
    loop {
        let d = snap_to_grid(i as f64 * interval, dt);
        if d >= t_rec - 0.5 * dt {
            break;
        }
        v.push(d);
        i += 1;
    }
    v.push(snap_to_grid(t_rec, dt));
    v
}

/// Free evolution of the incoming packet with the probe registered at every
/// step (steps 2–3). `snapshot_times` are absolute.
pub fn run_forward(
    model: &ChainModel,
    packet: &WaveField,
    dt: f64,
    horizon: f64,
    max_initial_cavity_norm: f64,
    snapshot_times: &[f64],
) -> Result<(ProbeRecord, Vec<WaveField>)> {
    let cavity = region_norm(packet, Region::Cavity, model.probe());
    if cavity > max_initial_cavity_norm {
        return Err(PifError::InitialCavityOccupied { norm: cavity, bound: max_initial_cavity_norm });
    }
    if !(horizon > 0.0) {
        return Err(PifError::InvalidHorizon(horizon));
    }
    let cfg = StepperConfig::with_dt(dt);
    let mut rec = ProbeRecorder::new(model.probe(), dt);
    let mut snaps = SnapshotTaker::new(snapshot_times, packet.time, dt);
    evolve(model, packet, &cfg, None, packet.time + horizon, &mut [&mut rec, &mut snaps])?;
    Ok((rec.into_record(), snaps.into_snapshots()))
}

fn snapshot_times(w: &RecordingWindow, offsets: &[f64]) -> Vec<f64> {
    let mut times: Vec<f64> = offsets.iter().map(|d| w.t_r - d).collect();
    times.push(0.0);
    times.push(w.t_r);
    times
}

fn outer_depth(model: &ChainModel, t: f64) -> usize {
    let u = model.units();
    (u.max_group_speed() * t / (2.0 * u.a)).ceil() as usize + 50
}

/// The chain deepened on the left so that nothing leaving the probe returns
/// from the outer end within `t`.
pub fn echo_free(model: &ChainModel, t: f64) -> Result<ChainModel> {
    let extra = outer_depth(model, t).saturating_sub(model.probe());
    extend_left(model, extra)
}

fn greens_probe(model: &ChainModel, t: f64) -> usize {
    model.probe().max(outer_depth(model, t))
}

/// Steps 1–3: forward registry, window, and `G^R_{ss}` in time and energy.
pub fn forward_pass(model: &ChainModel, packet: &WaveField, cfg: &ProtocolConfig) -> Result<ForwardPass> {
    let dt = cfg.dt;
    let (record, window, snapshots, state_at_tr) = match cfg.pinned_window {
        Some(w) => {
            let offsets = sample_offsets(&w, cfg.sample_interval, dt);
            let (rec, snaps) = run_forward(model, packet, dt, w.t_r, cfg.max_initial_cavity_norm, &snapshot_times(&w, &offsets))?;
            let last = snaps.iter().rposition(|f| (f.time - w.t_r).abs() < 0.5 * dt).ok_or(PifError::MissingSnapshot(w.t_r))?;
            let at_tr = snaps[last].clone();
            (rec, w, snaps, at_tr)
        }
        None => {
            let (rec, _) = run_forward(model, packet, dt, cfg.horizon, cfg.max_initial_cavity_norm, &[])?;
            let w = detect_window(&rec, &cfg.window)?;
            let offsets = sample_offsets(&w, cfg.sample_interval, dt);
            let mut taker = SnapshotTaker::new(&snapshot_times(&w, &offsets), packet.time, dt);
            let at_tr = evolve(model, packet, &StepperConfig::with_dt(dt), None, w.t_r, &mut [&mut taker])?;
            (rec, w, taker.into_snapshots(), at_tr)
        }
    };
    let offsets = sample_offsets(&window, cfg.sample_interval, dt);

    let eta = cfg.eta.unwrap_or(cfg.eta_per_window * model.hbar() / window.t_rec());
    let t_max = snap_to_grid((cfg.greens_span * model.hbar() / eta).max(window.t_rec()), dt);
    let greens_time = impulse_response(&echo_free(model, t_max)?, greens_probe(model, t_max), t_max, dt)?;
    // period grid_padding · T_rec exactly, so the grid does not move with dt
    let n_steps = steps_between(0.0, window.t_rec(), dt);
    let grid = EnergyGrid::conjugate(dt, model.hbar(), n_steps, cfg.grid_padding.max(2), eta)?;
    let greens = greens_spectrum(&greens_time, &grid, model.hbar())?;

    Ok(ForwardPass {
        initial: packet.clone(),
        record,
        window,
        offsets,
        snapshots,
        state_at_tr,
        greens_time,
        greens,
        greens_meta: GreensMeta { eta, t_max, grid },
    })
}

/// Injection that reproduces the time-reversed probe signal:
/// the reversed target divided by `G^R_{ss}(ε)`, transformed back to time.
pub fn pif_injection(model: &ChainModel, fp: &ForwardPass, cfg: &ProtocolConfig) -> Result<(InjectionSchedule, TruncationReport)> {
    let grid = fp.greens_meta.grid;
    let target = reversed_target(&fp.record, &fp.window, &grid, model.hbar())?;
    let mut chi = inverse_filter(&target, &fp.greens)?;
    if let Some(margin) = cfg.band_margin {
        let (lo, hi) = model.band();
        chi = band_taper(&chi, lo, hi, margin);
    }
    let (schedule, trunc) = to_time_bounded(&chi, &fp.window, model.probe(), cfg.dt, model.hbar(), cfg.max_out_of_window)?;
    let recorded_peak = fp.record.samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let ratio = schedule.peak() / recorded_peak;
    if ratio > cfg.blowup_factor || !ratio.is_finite() {
        return Err(PifError::DeconvolutionBlowUp(ratio));
    }
    Ok((schedule, trunc))
}

/// `χ(t_R + δt) = c·conj(ψ(x_s, t_R - δt))`, sampled at step midpoints,
/// for `t_R - δt ≥ record_start`; zero before.
pub fn trm_injection(model: &ChainModel, fp: &ForwardPass, volume: f64, dt: f64, record_start: f64) -> Result<InjectionSchedule> {
    let mirrored = crate::signal::mirrored_record(&fp.record, &fp.window)?;
    let mut samples = crate::signal::midpoints(&mirrored.samples, volume);
    let keep = ((fp.window.t_r - record_start) / dt).round().max(0.0) as usize;
    for s in samples.iter_mut().skip(keep) {
        *s = C64::new(0.0, 0.0);
    }
    Ok(InjectionSchedule { site: model.probe(), t_start: fp.window.t_r, dt, samples })
}

fn degenerate_report(protocol: Protocol, model: &ChainModel, packet: &WaveField, cfg: &ProtocolConfig, volume: Option<f64>) -> ProtocolReport {
    let window = RecordingWindow { t1: 0.0, t_r: 0.0, threshold: cfg.window.threshold };
    ProtocolReport {
        protocol,
        window,
        greens_meta: None,
        injection: InjectionSchedule { site: model.probe(), t_start: 0.0, dt: cfg.dt, samples: Vec::new() },
        truncation: None,
        snapshots: vec![packet.clone()],
        backward_probe: ProbeRecord { site: model.probe(), t0: 0.0, dt: cfg.dt, samples: Vec::new() },
        reversal_error_series: Vec::new(),
        outer_norm_series: Vec::new(),
        echo_fidelity: None,
        initial_velocity: 0.0,
        echo_velocity: 0.0,
        trm_volume: volume,
        trm_record_start: None,
    }
}

/// Step 5: evolve from the actual state at `t_R` under `schedule` up to
/// `2t_R`, then evaluate the reversal diagnostics.
pub fn reverse_with(
    model: &ChainModel,
    fp: &ForwardPass,
    cfg: &ProtocolConfig,
    protocol: Protocol,
    schedule: InjectionSchedule,
    truncation: Option<TruncationReport>,
    volume: Option<f64>,
) -> Result<ProtocolReport> {
    let dt = cfg.dt;
    let w = fp.window;
    let t_end = 2.0 * w.t_r;
    let mut times: Vec<f64> = fp.offsets.iter().map(|d| w.t_r + d).collect();
    times.push(2.0 * w.t_r - w.t1);
    times.push(t_end);
    let mut probe = ProbeRecorder::new(model.probe(), dt);
    let mut snaps = SnapshotTaker::new(&times, w.t_r, dt);
    evolve(model, &fp.state_at_tr, &StepperConfig::with_dt(dt), Some(&schedule), t_end, &mut [&mut probe, &mut snaps])?;
    let backward = snaps.into_snapshots();

    let mut snapshots = fp.snapshots.clone();
    snapshots.extend(backward.iter().cloned());
    snapshots.sort_by(|a, b| a.time.total_cmp(&b.time));
    snapshots.dedup_by(|a, b| (a.time - b.time).abs() < 0.5 * dt);

    let mut report = ProtocolReport {
        protocol,
        window: w,
        greens_meta: Some(fp.greens_meta),
        injection: schedule,
        truncation,
        snapshots,
        backward_probe: probe.into_record(),
        reversal_error_series: Vec::new(),
        outer_norm_series: Vec::new(),
        echo_fidelity: None,
        initial_velocity: 0.0,
        echo_velocity: 0.0,
        trm_volume: volume,
        trm_record_start: None,
    };
    report.reversal_error_series = metrics::cavity_reversal_error(&report, &fp.snapshots, &fp.offsets, model.probe(), dt)?;
    report.outer_norm_series = fp
        .offsets
        .iter()
        .map(|&d| {
            report
                .snapshot_at(w.t_r + d, dt)
                .map(|s| (d, region_norm(s, Region::Outer, model.probe())))
                .ok_or(PifError::MissingSnapshot(w.t_r + d))
        })
        .collect::<Result<_>>()?;
    let echo = metrics::echo_analysis(&report, &fp.initial, model, dt)?;
    report.echo_fidelity = Some(echo.fidelity);
    report.initial_velocity = echo.initial_velocity;
    report.echo_velocity = echo.echo_velocity;
    Ok(report)
}

pub fn run_pif(model: &ChainModel, packet: &WaveField, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    if norm(packet) == 0.0 {
        return Ok(degenerate_report(Protocol::Pif, model, packet, cfg, None));
    }
    let fp = forward_pass(model, packet, cfg)?;
    pif_from(model, &fp, cfg)
}

pub fn pif_from(model: &ChainModel, fp: &ForwardPass, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    let (schedule, trunc) = pif_injection(model, fp, cfg)?;
    reverse_with(model, fp, cfg, Protocol::Pif, schedule, Some(trunc), None)
}

pub fn run_trm(model: &ChainModel, packet: &WaveField, cfg: &ProtocolConfig, volume: f64) -> Result<ProtocolReport> {
    if norm(packet) == 0.0 {
        return Ok(degenerate_report(Protocol::Trm, model, packet, cfg, Some(volume)));
    }
    let fp = forward_pass(model, packet, cfg)?;
    trm_from(model, &fp, cfg, volume)
}

pub fn trm_from(model: &ChainModel, fp: &ForwardPass, cfg: &ProtocolConfig, volume: f64) -> Result<ProtocolReport> {
    let start = match cfg.trm_min_gap {
        Some(gap) => crate::signal::outgoing_start(&fp.record, &fp.window, gap)?,
        None => fp.window.t1,
    };
    let schedule = trm_injection(model, fp, volume, cfg.dt, start)?;
    let mut report = reverse_with(model, fp, cfg, Protocol::Trm, schedule, None, Some(volume))?;
    report.trm_record_start = Some(start);
    Ok(report)
}

/// Injection amplitude as a function of time over `[t_R, t_R + T_rec]`,
/// plotted at step midpoints.
pub fn injection_series(schedule: &InjectionSchedule) -> Vec<(f64, C64)> {
    (0..schedule.samples.len()).map(|k| (schedule.midpoint(k), schedule.samples[k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, PotentialProfile};
    use crate::wavefield::gaussian_packet;

    #[test]
    fn offsets_cover_window() {
        let w = RecordingWindow { t1: 3.0, t_r: 48.0, threshold: 1e-8 };
        let o = sample_offsets(&w, 10.0, 0.02);
        assert_eq!(o, vec![0.0, 10.0, 20.0, 30.0, 40.0, 45.0]);
    }

    #[test]
    fn zero_packet_is_degenerate() {
        let m = build_chain(60, 30, PotentialProfile::free()).unwrap();
        let r = run_pif(&m, &WaveField::zeros(60), &ProtocolConfig::default()).unwrap();
        assert!(r.is_degenerate());
        assert!(r.injection.samples.is_empty());
    }

    #[test]
    fn occupied_cavity_is_rejected() {
        let m = build_chain(200, 100, PotentialProfile::free()).unwrap();
        let p = gaussian_packet(&m, 100.0, 5.0, 1.0).unwrap();
        let r = run_forward(&m, &p, 0.02, 10.0, 1e-12, &[]);
        assert!(matches!(r, Err(PifError::InitialCavityOccupied { .. })));
    }
}
