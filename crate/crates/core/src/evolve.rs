//! Crank–Nicolson propagation of `iħ ∂ψ/∂t = Hψ + χ(t) e_s`.
//!
//! One step solves
//! `(I + i dt H/2ħ) ψ' = (I - i dt H/2ħ) ψ - (i dt/ħ) χ e_s`
//! with `χ` the source sample at the midpoint of the step. Writing
//! `A = I + i dt H/2ħ`, the update is `ψ' = A⁻¹(2ψ - (i dt/ħ) χ e_s) - ψ`, so
//! each step is one tridiagonal solve with a factorization computed once.

use num_complex::Complex64 as C64;

use crate::error::{PifError, Result};
use crate::lattice::ChainModel;
use crate::signal::{InjectionSchedule, ProbeRecord};
use crate::wavefield::WaveField;

pub const DEFAULT_DT: f64 = 0.02;
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub source_site: Option<usize>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { dt: DEFAULT_DT, source_site: None }
    }
}

impl StepperConfig {
    pub fn with_dt(dt: f64) -> Self {
        StepperConfig { dt, source_site: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(PifError::InvalidTimeStep(self.dt));
        }
        Ok(())
    }
}

/// Pre-factorized Crank–Nicolson propagator for one model and time step.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dt: f64,
    hbar: f64,
    source_site: Option<usize>,
    c_prime: Vec<C64>,
    inv_pivot: Vec<C64>,
}

impl CrankNicolson {
    pub fn new(model: &ChainModel, cfg: &StepperConfig) -> Result<Self> {
        cfg.validate()?;
        if let Some(site) = cfg.source_site {
            if site >= model.n_sites() {
                return Err(PifError::SiteOutOfRange { site, n_sites: model.n_sites() });
            }
        }
        let n = model.n_sites();
        let beta = cfg.dt / (2.0 * model.hbar());
        let off = C64::new(0.0, -beta * model.hopping());
        let mut c_prime = vec![C64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![C64::new(0.0, 0.0); n];
        let mut prev_c = C64::new(0.0, 0.0);
        for (j, &e) in model.site_energies().iter().enumerate() {
            let pivot = C64::new(1.0, beta * e) - off * prev_c;
            if pivot.norm() == 0.0 || !pivot.is_finite() {
                return Err(PifError::SingularSystem(j));
            }
            let inv = pivot.inv();
            inv_pivot[j] = inv;
            prev_c = off * inv;
            c_prime[j] = prev_c;
        }
        Ok(CrankNicolson { dt: cfg.dt, hbar: model.hbar(), source_site: cfg.source_site, c_prime, inv_pivot })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.c_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_prime.is_empty()
    }

    /// Advances `psi` by one step. `scratch` must have the same length.
    pub fn step_in_place(&self, psi: &mut [C64], scratch: &mut [C64], source: Option<C64>) -> Result<()> {
        let n = self.c_prime.len();
        if psi.len() != n || scratch.len() != n {
            return Err(PifError::LengthMismatch { expected: n, got: psi.len().min(scratch.len()) });
        }
        let kick = match (source, self.source_site) {
            (Some(chi), Some(site)) => Some((site, C64::new(0.0, -self.dt / self.hbar) * chi)),
            (Some(_), None) => return Err(PifError::MissingSourceSite),
            (None, _) => None,
        };
        let mut d_prev = C64::new(0.0, 0.0);
        for ((d, &x), (&inv, &c)) in scratch.iter_mut().zip(psi.iter()).zip(self.inv_pivot.iter().zip(&self.c_prime)) {
            d_prev = (x + x) * inv - c * d_prev;
            *d = d_prev;
        }
        if let Some((site, k)) = kick {
            // the source only enters row `site`; propagate its correction forward
            let mut corr = k * self.inv_pivot[site];
            scratch[site] += corr;
            for j in site + 1..n {
                corr = -self.c_prime[j] * corr;
                scratch[j] += corr;
            }
        }
        let mut y_next = C64::new(0.0, 0.0);
        for ((x, &d), &c) in psi.iter_mut().zip(scratch.iter()).zip(&self.c_prime).rev() {
            let y = d - c * y_next;
            *x = y - *x;
            y_next = y;
        }
        Ok(())
    }
}

/// One step from `field`; `source_value` is the midpoint source sample.
pub fn step(model: &ChainModel, field: &WaveField, cfg: &StepperConfig, source_value: Option<C64>) -> Result<WaveField> {
    if field.len() != model.n_sites() {
        return Err(PifError::LengthMismatch { expected: model.n_sites(), got: field.len() });
    }
    let cn = CrankNicolson::new(model, cfg)?;
    let mut out = field.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); field.len()];
    cn.step_in_place(&mut out.amplitudes, &mut scratch, source_value)?;
    out.time = field.time + cfg.dt;
    Ok(out)
}

/// Receives the state at step 0 (the initial state) and after every step.
pub trait Observer {
    fn observe(&mut self, step: usize, field: &WaveField);
}

/// Registers amplitude and phase at one site.
#[derive(Debug, Clone)]
pub struct ProbeRecorder {
    site: usize,
    t0: Option<f64>,
    dt: f64,
    samples: Vec<C64>,
}

impl ProbeRecorder {
    pub fn new(site: usize, dt: f64) -> Self {
        ProbeRecorder { site, t0: None, dt, samples: Vec::new() }
    }

    pub fn into_record(self) -> ProbeRecord {
        ProbeRecord { site: self.site, t0: self.t0.unwrap_or(0.0), dt: self.dt, samples: self.samples }
    }
}

impl Observer for ProbeRecorder {
    fn observe(&mut self, _step: usize, field: &WaveField) {
        if self.t0.is_none() {
            self.t0 = Some(field.time);
        }
        self.samples.push(field.amplitudes[self.site]);
    }
}

/// Stores full states at requested instants, each snapped to the nearest
/// grid point of the run it observes.
#[derive(Debug, Clone)]
pub struct SnapshotTaker {
    steps: Vec<usize>,
    snapshots: Vec<WaveField>,
}

impl SnapshotTaker {
    pub fn new(times: &[f64], t0: f64, dt: f64) -> Self {
        let mut steps: Vec<usize> = times
            .iter()
            .filter(|&&t| t >= t0 - 0.5 * dt)
            .map(|&t| ((t - t0) / dt).round().max(0.0) as usize)
            .collect();
        steps.sort_unstable();
        steps.dedup();
        SnapshotTaker { steps, snapshots: Vec::new() }
    }

    pub fn into_snapshots(self) -> Vec<WaveField> {
        self.snapshots
    }
}

impl Observer for SnapshotTaker {
    fn observe(&mut self, step: usize, field: &WaveField) {
        if self.steps.binary_search(&step).is_ok() {
            self.snapshots.push(field.clone());
        }
    }
}

/// Number of steps from `t_start` to `t_end` on a grid of spacing `dt`.
pub fn steps_between(t_start: f64, t_end: f64, dt: f64) -> usize {
    ((t_end - t_start) / dt).round().max(0.0) as usize
}

/// Propagates `field` up to `t_end` (absolute time), optionally driven by an
/// injection schedule. Outside the schedule's support the source is zero.
pub fn evolve(
    model: &ChainModel,
    field: &WaveField,
    cfg: &StepperConfig,
    schedule: Option<&InjectionSchedule>,
    t_end: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<WaveField> {
    if field.len() != model.n_sites() {
        return Err(PifError::LengthMismatch { expected: model.n_sites(), got: field.len() });
    }
    let mut cfg = *cfg;
    // offset of the schedule's first sample relative to our step 0
    let mut schedule_offset: i64 = 0;
    if let Some(s) = schedule {
        if (s.dt - cfg.dt).abs() > 1e-12 * cfg.dt {
            return Err(PifError::ScheduleGridMismatch(format!("schedule dt {} vs stepper dt {}", s.dt, cfg.dt)));
        }
        let shift = (field.time - s.t_start) / cfg.dt;
        if (shift - shift.round()).abs() > 1e-6 {
            return Err(PifError::ScheduleGridMismatch(format!(
                "schedule starts at {} which is off the grid through {}",
                s.t_start, field.time
            )));
        }
        schedule_offset = shift.round() as i64;
        match cfg.source_site {
            Some(site) if site != s.site => {
                return Err(PifError::ScheduleGridMismatch(format!(
                    "schedule site {} differs from stepper source site {site}",
                    s.site
                )))
            }
            _ => cfg.source_site = Some(s.site),
        }
    }
    let cn = CrankNicolson::new(model, &cfg)?;
    let n_steps = steps_between(field.time, t_end, cfg.dt);
    let t_start = field.time;
    let mut state = field.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); state.len()];
    for obs in observers.iter_mut() {
        obs.observe(0, &state);
    }
    for n in 0..n_steps {
        let source = schedule.map(|s| {
            let k = n as i64 + schedule_offset;
            if k >= 0 && (k as usize) < s.samples.len() {
                s.samples[k as usize]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        cn.step_in_place(&mut state.amplitudes, &mut scratch, source)?;
        state.time = t_start + (n + 1) as f64 * cfg.dt;
        for obs in observers.iter_mut() {
            obs.observe(n + 1, &state);
        }
    }
    Ok(state)
}
