//! Retarded Green's function at the probe site, in time and energy, plus the
//! resolvent and Dyson-splitting checks that serve as its independent route.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PifError, Result};
use crate::evolve::{evolve, ProbeRecorder, StepperConfig};
use crate::lattice::{ChainModel, Tridiagonal};
use crate::signal::ProbeRecord;
use crate::transform;
use crate::wavefield::WaveField;

/// Uniform energy grid `ε_i = eps_min + i·spacing` with broadening `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub eps_min: f64,
    pub spacing: f64,
    pub n_points: usize,
    pub eta: f64,
}

impl EnergyGrid {
    pub fn uniform(eps_min: f64, eps_max: f64, n_points: usize, eta: f64) -> Result<Self> {
        if n_points == 0 {
            return Err(PifError::EmptyGrid);
        }
        if !(eta > 0.0) {
            return Err(PifError::InvalidBroadening(eta));
        }
        let spacing = if n_points > 1 { (eps_max - eps_min) / (n_points - 1) as f64 } else { 0.0 };
        Ok(EnergyGrid { eps_min, spacing, n_points, eta })
    }

    /// DFT-conjugate grid for `n_samples` time samples of step `dt`, zero
    /// padded by `pad_factor`. Covers `[-πħ/dt, πħ/dt)`.
    pub fn conjugate(dt: f64, hbar: f64, n_samples: usize, pad_factor: usize, eta: f64) -> Result<Self> {
        let m = n_samples * pad_factor.max(1);
        if m == 0 {
            return Err(PifError::EmptyGrid);
        }
        if !(eta > 0.0) {
            return Err(PifError::InvalidBroadening(eta));
        }
        let spacing = 2.0 * PI * hbar / (m as f64 * dt);
        Ok(EnergyGrid { eps_min: -((m / 2) as f64) * spacing, spacing, n_points: m, eta })
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.eps_min + i as f64 * self.spacing
    }

    pub fn eps_max(&self) -> f64 {
        self.energy(self.n_points.saturating_sub(1))
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.energy(i))
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.eps_min <= lo && self.eps_max() >= hi
    }

    fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(PifError::EmptyGrid);
        }
        if !(self.eta > 0.0) {
            return Err(PifError::InvalidBroadening(self.eta));
        }
        Ok(())
    }
}

/// Complex function sampled on an energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    pub grid: EnergyGrid,
    pub values: Vec<C64>,
}

/// `G^R_{ss}(t_n) = -(i/ħ)⟨s|U(t_n)|s⟩` on `t_n = n dt ∈ [0, t_max]`, from
/// source-free propagation of a unit impulse at `site`.
pub fn impulse_response(model: &ChainModel, site: usize, t_max: f64, dt: f64) -> Result<ProbeRecord> {
    if !(t_max > 0.0) {
        return Err(PifError::InvalidHorizon(t_max));
    }
    if site >= model.n_sites() {
        return Err(PifError::SiteOutOfRange { site, n_sites: model.n_sites() });
    }
    let cfg = StepperConfig::with_dt(dt);
    let mut rec = ProbeRecorder::new(site, dt);
    evolve(model, &WaveField::delta(model.n_sites(), site), &cfg, None, t_max, &mut [&mut rec])?;
    let mut record = rec.into_record();
    let factor = C64::new(0.0, -1.0 / model.hbar());
    for g in &mut record.samples {
        *g *= factor;
    }
    Ok(record)
}

/// Damped half-axis transform `Σ_n x(t_n) exp(i(ε + iη)t_n/ħ) dt`.
pub fn to_energy(record: &ProbeRecord, grid: &EnergyGrid, hbar: f64) -> Result<SpectralSignal> {
    grid.validate()?;
    let values = transform::forward(&record.samples, record.t0, record.dt, hbar, grid);
    Ok(SpectralSignal { grid: *grid, values })
}

/// `G^R(ε + iη)` from a sampled causal response. The response jumps from 0 to
/// `G(0⁺)` at the first sample, so that sample carries half weight; this makes
/// the quadrature second order in `dt`.
pub fn greens_spectrum(record: &ProbeRecord, grid: &EnergyGrid, hbar: f64) -> Result<SpectralSignal> {
    let mut s = to_energy(record, grid, hbar)?;
    if let Some(&g0) = record.samples.first() {
        for (i, v) in s.values.iter_mut().enumerate() {
            let w = C64::new(grid.energy(i), grid.eta);
            *v -= g0 * (C64::i() * w * record.t0 / hbar).exp() * (0.5 * record.dt);
        }
    }
    Ok(s)
}

fn check_retarded(z: C64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(PifError::NonRetardedEnergy(z.im));
    }
    Ok(())
}

/// Column `j` of `(z - H)⁻¹` by a direct tridiagonal solve.
pub fn resolvent_column(h: &Tridiagonal, j: usize, z: C64) -> Result<Vec<C64>> {
    check_retarded(z)?;
    let n = h.len();
    if j >= n {
        return Err(PifError::SiteOutOfRange { site: j, n_sites: n });
    }
    // (z - H): diagonal z - E_k, off-diagonals -off_k
    let mut c_prime = vec![C64::new(0.0, 0.0); n];
    let mut d_prime = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let a = z - h.diag[k];
        let lower = if k > 0 { C64::from(-h.off[k - 1]) } else { C64::new(0.0, 0.0) };
        let pivot = if k > 0 { a - lower * c_prime[k - 1] } else { a };
        if pivot.norm() == 0.0 {
            return Err(PifError::SingularSystem(k));
        }
        if k + 1 < n {
            c_prime[k] = C64::from(-h.off[k]) / pivot;
        }
        let rhs = if k == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        let prev = if k > 0 { lower * d_prime[k - 1] } else { C64::new(0.0, 0.0) };
        d_prime[k] = (rhs - prev) / pivot;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = d_prime[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d_prime[k] - c_prime[k] * x[k + 1];
    }
    Ok(x)
}

/// `[(z) I - H]⁻¹_{ij}` with `Im z > 0`.
pub fn resolvent_element(model: &ChainModel, i: usize, j: usize, z: C64) -> Result<C64> {
    if i >= model.n_sites() {
        return Err(PifError::SiteOutOfRange { site: i, n_sites: model.n_sites() });
    }
    Ok(resolvent_column(&model.tridiagonal(), j, z)?[i])
}

/// `G_{ss}` at every grid energy, computed independently per point.
pub fn resolvent_spectrum(model: &ChainModel, site: usize, grid: &EnergyGrid) -> Result<SpectralSignal> {
    grid.validate()?;
    let h = model.tridiagonal();
    let values = (0..grid.n_points)
        .into_par_iter()
        .map(|i| resolvent_column(&h, site, C64::new(grid.energy(i), grid.eta)).map(|c| c[site]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralSignal { grid: *grid, values })
}

fn probe_set(n: usize, cut: usize) -> Vec<usize> {
    if n <= 64 {
        return (0..n).collect();
    }
    let mut v = vec![0, 1, n / 4, n / 2, 3 * n / 4, n - 2, n - 1];
    for d in 0..4 {
        if cut >= d {
            v.push(cut - d);
        }
        if cut + 1 + d < n {
            v.push(cut + 1 + d);
        }
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Residual of the Dyson equation relating the full resolvent to that of
/// the two half-chains decoupled at bond `cut` (between `cut` and `cut+1`).
///
/// Checks `G = Ḡ + Ḡ W G` with `W` the cut bond, elementwise over a probe set,
/// and the one-sided identity `G_{x,c} = Ḡ_{x,c+1} W_{c+1,c} G_{c,c}` for
/// `x > c`. Returns the largest absolute residual.
pub fn dyson_residual(h: &Tridiagonal, cut: usize, z: C64) -> Result<f64> {
    check_retarded(z)?;
    let n = h.len();
    if cut + 1 >= n {
        return Err(PifError::CutAtEdge { cut, n_sites: n });
    }
    let w = h.off[cut];
    let mut split = h.clone();
    split.off[cut] = 0.0;

    let sites = probe_set(n, cut);
    let full: Vec<Vec<C64>> = sites.iter().map(|&j| resolvent_column(h, j, z)).collect::<Result<_>>()?;
    let bar: Vec<Vec<C64>> = sites.iter().map(|&j| resolvent_column(&split, j, z)).collect::<Result<_>>()?;
    let bar_c = resolvent_column(&split, cut, z)?;
    let bar_c1 = resolvent_column(&split, cut + 1, z)?;
    let full_c = resolvent_column(h, cut, z)?;

    let mut worst: f64 = 0.0;
    for (g, gb) in full.iter().zip(&bar) {
        for &x in &sites {
            // Ḡ is symmetric, so Ḡ_{x,c+1} = bar_c1[x]
            let rhs = gb[x] + bar_c1[x] * w * g[cut] + bar_c[x] * w * g[cut + 1];
            worst = worst.max((g[x] - rhs).norm());
        }
    }
    for x in cut + 1..n {
        let rhs = bar_c1[x] * w * full_c[cut];
        worst = worst.max((full_c[x] - rhs).norm());
    }
    Ok(worst)
}

pub fn dyson_check(model: &ChainModel, cut: usize, z: C64) -> Result<f64> {
    dyson_residual(&model.tridiagonal(), cut, z)
}
