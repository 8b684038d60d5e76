//! Damped Fourier sums between uniform time grids and energy grids.
//!
//! Forward: `X(ε) = dt Σ_n x_n exp(i(ε + iη) t_n / ħ)`.
//! On a grid conjugate to the time step (spacing `2πħ/(M dt)`, points at
//! integer multiples of the spacing) the sum is a length-`M` DFT and the
//! inverse is exact up to aliasing damped by `exp(-η M dt/ħ)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::greens::EnergyGrid;

/// Index of the first grid point in units of the spacing, when the grid is
/// DFT-conjugate to `dt`.
pub(crate) fn conjugate_offset(grid: &EnergyGrid, dt: f64, hbar: f64) -> Option<i64> {
    let m = grid.n_points as f64;
    let period = grid.spacing * m * dt / hbar;
    if ((period - 2.0 * PI) / (2.0 * PI)).abs() > 1e-12 {
        return None;
    }
    let q = grid.eps_min / grid.spacing;
    if (q - q.round()).abs() > 1e-6 {
        return None;
    }
    Some(q.round() as i64)
}

fn wrap(q: i64, m: usize) -> usize {
    q.rem_euclid(m as i64) as usize
}

pub(crate) fn forward(samples: &[C64], t0: f64, dt: f64, hbar: f64, grid: &EnergyGrid) -> Vec<C64> {
    match conjugate_offset(grid, dt, hbar) {
        Some(q0) => forward_fft(samples, t0, dt, hbar, grid, q0),
        None => forward_direct(samples, t0, dt, hbar, grid),
    }
}

fn forward_fft(samples: &[C64], t0: f64, dt: f64, hbar: f64, grid: &EnergyGrid, q0: i64) -> Vec<C64> {
    let m = grid.n_points;
    let eta = grid.eta;
    let mut buf = vec![C64::new(0.0, 0.0); m];
    // samples beyond M fold onto n mod M because exp(iε_q n dt/ħ) has period M
    for (n, &x) in samples.iter().enumerate() {
        let t = t0 + n as f64 * dt;
        buf[n % m] += x * (-eta * t / hbar).exp();
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    (0..m)
        .map(|i| {
            let eps = grid.energy(i);
            let phase = C64::from_polar(dt, eps * t0 / hbar);
            let q = q0 + i as i64;
            phase * buf[wrap(q, m)]
        })
        .collect()
}

fn forward_direct(samples: &[C64], t0: f64, dt: f64, hbar: f64, grid: &EnergyGrid) -> Vec<C64> {
    const REANCHOR: usize = 512;
    let eta = grid.eta;
    (0..grid.n_points)
        .into_par_iter()
        .map(|i| {
            let w = C64::new(grid.energy(i), eta) / hbar;
            let step = (C64::i() * w * dt).exp();
            let mut acc = C64::new(0.0, 0.0);
            let mut phase = C64::new(0.0, 0.0);
            for (n, &x) in samples.iter().enumerate() {
                if n % REANCHOR == 0 {
                    phase = (C64::i() * w * (t0 + n as f64 * dt)).exp();
                } else {
                    phase *= step;
                }
                acc += x * phase;
            }
            acc * dt
        })
        .collect()
}

/// Inverse of [`forward`] on a conjugate grid, evaluated at
/// `t_first + k dt` for `k = 0..M`.
pub(crate) fn inverse(values: &[C64], grid: &EnergyGrid, q0: i64, t_first: f64, dt: f64, hbar: f64) -> Vec<C64> {
    let m = grid.n_points;
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (i, &v) in values.iter().enumerate() {
        let eps = grid.energy(i);
        buf[wrap(q0 + i as i64, m)] = v * C64::from_polar(1.0, -eps * t_first / hbar);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let norm = 1.0 / (m as f64 * dt);
    buf.iter()
        .enumerate()
        .map(|(k, &y)| {
            let t = t_first + k as f64 * dt;
            y * (norm * (grid.eta * t / hbar).exp())
        })
        .collect()
}
