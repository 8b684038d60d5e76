//! Probe-site records, the recording window, and the time/energy transforms
//! that turn a record into an injection schedule.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PifError, Result};
use crate::greens::{to_energy, SpectralSignal};
use crate::transform;

/// Maximum fraction of the inverse transform's energy allowed outside the
/// injection window before truncation is refused.
pub const MAX_OUT_OF_WINDOW_FRACTION: f64 = 1e-4;

/// `ψ(x_s, t0 + n dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub site: usize,
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<C64>,
}

impl ProbeRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Index of the sample at time `t`, if `t` is on the grid and inside.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let n = x.round();
        if (x - n).abs() > 1e-6 || n < 0.0 || n as usize >= self.samples.len() {
            return None;
        }
        Some(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordingWindow {
    pub t1: f64,
    pub t_r: f64,
    pub threshold: f64,
}

impl RecordingWindow {
    /// `T_rec = t_R - t_1`.
    pub fn t_rec(&self) -> f64 {
        self.t_r - self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    /// Edge criterion as a fraction of the peak density.
    pub threshold: f64,
    /// Time the density must stay below threshold after `t_R`.
    pub guard: f64,
    /// Absolute peak density below which the record counts as empty.
    pub min_peak: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { threshold: 1e-8, guard: 50.0, min_peak: 1e-8 }
    }
}

/// Source amplitude `χ(x_s, t)`. `samples[k]` drives the step from
/// `t_start + k dt` to `t_start + (k+1) dt`, i.e. it is the value at the
/// step midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSchedule {
    pub site: usize,
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<C64>,
}

impl InjectionSchedule {
    pub fn midpoint(&self, k: usize) -> f64 {
        self.t_start + (k as f64 + 0.5) * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.samples.len() as f64 * self.dt
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub out_of_window_fraction: f64,
    pub kept_samples: usize,
    pub transform_length: usize,
}

/// Finds `(t_1, t_R)` bracketing the support of the probe density.
///
/// `t_1` is the last sample before the peak below `threshold·peak` (the
/// record start if there is none); `t_R` is the first sample after the peak
/// that starts a run below `threshold·peak` lasting at least `guard`.
pub fn detect_window(record: &ProbeRecord, params: &WindowParams) -> Result<RecordingWindow> {
    let density = record.density();
    let (peak_idx, peak) = density
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if !(peak >= params.min_peak) || peak == 0.0 {
        return Err(PifError::EmptySignal(peak));
    }
    let thr = params.threshold * peak;
    let i1 = density[..peak_idx].iter().rposition(|&d| d < thr).unwrap_or(0);
    let guard_steps = (params.guard / record.dt).ceil() as usize;
    let mut run_start = None;
    let mut i_r = None;
    for (i, &d) in density.iter().enumerate().skip(peak_idx + 1) {
        if d < thr {
            let start = *run_start.get_or_insert(i);
            if i - start >= guard_steps {
                i_r = Some(start);
                break;
            }
        } else {
            run_start = None;
        }
    }
    let i_r = i_r.ok_or(PifError::NoDecay)?;
    Ok(RecordingWindow { t1: record.time(i1), t_r: record.time(i_r), threshold: params.threshold })
}

/// Start of the outgoing part of the record: the end of the first run below
/// `threshold·peak` inside the window that lasts at least `min_gap`. Signals
/// with no such silence between entrance and escape return `t_1`.
pub fn outgoing_start(record: &ProbeRecord, window: &RecordingWindow, min_gap: f64) -> Result<f64> {
    let out_of_range = || PifError::WindowOutOfRange { t1: window.t1, t_r: window.t_r };
    let i_1 = record.index_of(window.t1).ok_or_else(out_of_range)?;
    let i_r = record.index_of(window.t_r).ok_or_else(out_of_range)?;
    let density = record.density();
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let thr = window.threshold * peak;
    let gap_steps = (min_gap / record.dt).ceil() as usize;
    let mut seen_signal = false;
    let mut run_start = None;
    for i in i_1..i_r {
        if density[i] < thr {
            if seen_signal {
                run_start.get_or_insert(i);
            }
        } else {
            if let Some(s) = run_start.take() {
                if i - s >= gap_steps {
                    return Ok(record.time(i));
                }
            }
            seen_signal = true;
        }
    }
    Ok(window.t1)
}

/// `conj(ψ(x_s, t_R - m dt))` for `m = 0..=T_rec/dt`, placed at `t_R + m dt`.
pub fn mirrored_record(record: &ProbeRecord, window: &RecordingWindow) -> Result<ProbeRecord> {
    let out_of_range = || PifError::WindowOutOfRange { t1: window.t1, t_r: window.t_r };
    let i_r = record.index_of(window.t_r).ok_or_else(out_of_range)?;
    let i_1 = record.index_of(window.t1).ok_or_else(out_of_range)?;
    if i_1 >= i_r {
        return Err(out_of_range());
    }
    let samples = (0..=i_r - i_1).map(|m| record.samples[i_r - m].conj()).collect();
    Ok(ProbeRecord { site: record.site, t0: window.t_r, dt: record.dt, samples })
}

/// Energy representation of the time-reversed target,
/// `Σ_m conj(ψ(x_s, t_R - m dt)) exp(i(ε + iη)(t_R + m dt)/ħ) dt`.
pub fn reversed_target(
    record: &ProbeRecord,
    window: &RecordingWindow,
    grid: &crate::greens::EnergyGrid,
    hbar: f64,
) -> Result<SpectralSignal> {
    let mirrored = mirrored_record(record, window)?;
    if transform::conjugate_offset(grid, record.dt, hbar).is_none() {
        return Err(PifError::GridMismatch("energy grid is not conjugate to the record time step".into()));
    }
    to_energy(&mirrored, grid, hbar)
}

/// Pointwise `target(ε) / kernel(ε)`.
pub fn inverse_filter(target: &SpectralSignal, kernel: &SpectralSignal) -> Result<SpectralSignal> {
    if target.grid != kernel.grid {
        return Err(PifError::GridMismatch("target and kernel live on different grids".into()));
    }
    let values = target.values.iter().zip(&kernel.values).map(|(t, k)| t / k).collect();
    Ok(SpectralSignal { grid: target.grid, values })
}

/// Keeps `[lo, hi]` untouched and rolls off to zero over `margin` on either
/// side with a raised cosine.
pub fn band_taper(spectral: &SpectralSignal, lo: f64, hi: f64, margin: f64) -> SpectralSignal {
    let grid = spectral.grid;
    let values = spectral
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let e = grid.energy(i);
            let d = (lo - e).max(e - hi);
            if d <= 0.0 {
                v
            } else if d >= margin {
                C64::new(0.0, 0.0)
            } else {
                v * (0.5 * (1.0 + (std::f64::consts::PI * d / margin).cos()))
            }
        })
        .collect();
    SpectralSignal { grid, values }
}

/// Inverse transform of `spectral` evaluated at `t_first + k dt` for every
/// `k` in the transform length.
pub fn inverse_samples(spectral: &SpectralSignal, t_first: f64, dt: f64, hbar: f64) -> Result<Vec<C64>> {
    let q0 = transform::conjugate_offset(&spectral.grid, dt, hbar)
        .ok_or_else(|| PifError::GridMismatch("energy grid is not conjugate to the time step".into()))?;
    Ok(transform::inverse(&spectral.values, &spectral.grid, q0, t_first, dt, hbar))
}

/// Back to time on `t_R + k dt`, `k = 0..=T_rec/dt`. Everything after the
/// window is dropped once its energy fraction is checked. The schedule holds
/// the averages of neighbouring samples, i.e. the step-midpoint values the
/// stepper consumes.
pub fn to_time(
    spectral: &SpectralSignal,
    window: &RecordingWindow,
    site: usize,
    dt: f64,
    hbar: f64,
) -> Result<(InjectionSchedule, TruncationReport)> {
    to_time_bounded(spectral, window, site, dt, hbar, MAX_OUT_OF_WINDOW_FRACTION)
}

/// [`to_time`] with an explicit bound on the discarded energy fraction.
pub fn to_time_bounded(
    spectral: &SpectralSignal,
    window: &RecordingWindow,
    site: usize,
    dt: f64,
    hbar: f64,
    max_fraction: f64,
) -> Result<(InjectionSchedule, TruncationReport)> {
    let n_keep = (window.t_rec() / dt).round() as usize + 1;
    let m = spectral.grid.n_points;
    if m < n_keep {
        return Err(PifError::GridMismatch(format!("transform length {m} shorter than window of {n_keep} samples")));
    }
    let all = inverse_samples(spectral, window.t_r, dt, hbar)?;
    let total: f64 = all.iter().map(|c| c.norm_sqr()).sum();
    let outside: f64 = all[n_keep..].iter().map(|c| c.norm_sqr()).sum();
    let fraction = if total > 0.0 { outside / total } else { 0.0 };
    if !(fraction <= max_fraction) {
        return Err(PifError::OutOfWindowEnergy { fraction, bound: max_fraction });
    }
    let schedule = InjectionSchedule { site, t_start: window.t_r, dt, samples: midpoints(&all[..n_keep], 1.0) };
    Ok((schedule, TruncationReport { out_of_window_fraction: fraction, kept_samples: n_keep, transform_length: m }))
}

/// `scale · (x_k + x_{k+1}) / 2` for consecutive pairs.
pub fn midpoints(samples: &[C64], scale: f64) -> Vec<C64> {
    samples.windows(2).map(|w| (w[0] + w[1]) * (0.5 * scale)).collect()
}
