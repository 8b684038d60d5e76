//! Reference values computed by routes that share no code with `pif-core`:
//! Bessel functions, dense linear algebra and closed forms for tiny chains.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// `J_n(x)` from `(1/2π) ∫_0^{2π} cos(nτ - x sin τ) dτ`.
///
/// The integrand is periodic and smooth, so the trapezoid rule converges
/// geometrically once the point count exceeds `|n| + |x|` by a margin.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let pts = (4.0 * (x.abs() + n.abs() as f64) + 1024.0) as usize;
    let h = 2.0 * PI / pts as f64;
    let mut acc = 0.0;
    for k in 0..pts {
        let tau = k as f64 * h;
        acc += (n as f64 * tau - x * tau.sin()).cos();
    }
    acc / pts as f64
}

/// Power series for `J_n(x)`, `n ≥ 0`. Only trustworthy for modest `x`; the
/// alternating terms cancel badly beyond `x ≈ 20`.
pub fn bessel_j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32);
    for k in 1..=n {
        term /= k as f64;
    }
    let mut sum = term;
    for m in 1..200 {
        term *= -half * half / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `⟨j|e^{-iHt}|k⟩` on the infinite uniform chain with on-site energy `2V`
/// and hopping `-V` (ħ = 1), with `n = j - k`.
pub fn free_chain_propagator(n: i32, t: f64, v: f64) -> C64 {
    let phase = C64::from_polar(1.0, -2.0 * v * t);
    let i_pow = match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    phase * i_pow * bessel_j(n, 2.0 * v * t)
}

pub fn dense_hamiltonian(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
    let n = diag.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = diag[i];
    }
    for (i, &o) in off.iter().enumerate() {
        h[(i, i + 1)] = o;
        h[(i + 1, i)] = o;
    }
    h
}

/// `(z - H)^{-1}` by dense LU.
pub fn dense_resolvent(diag: &[f64], off: &[f64], z: C64) -> DMatrix<C64> {
    let h = dense_hamiltonian(diag, off);
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { z } else { C64::new(0.0, 0.0) };
        d - C64::new(h[(i, j)], 0.0)
    });
    m.try_inverse().expect("resolvent is singular")
}

pub struct Spectrum {
    pub energies: Vec<f64>,
    /// Column `k` is the eigenvector of `energies[k]`.
    pub vectors: DMatrix<f64>,
}

pub fn spectrum(diag: &[f64], off: &[f64]) -> Spectrum {
    let eig = SymmetricEigen::new(dense_hamiltonian(diag, off));
    Spectrum { energies: eig.eigenvalues.iter().cloned().collect(), vectors: eig.eigenvectors }
}

impl Spectrum {
    /// `(E_k, |⟨s|k⟩|²)` for every eigenstate.
    pub fn ldos_weights(&self, site: usize) -> Vec<(f64, f64)> {
        self.energies
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, self.vectors[(site, k)].powi(2)))
            .collect()
    }

    /// `Σ_k ⟨i|k⟩⟨k|j⟩ / (z - E_k)`.
    pub fn greens(&self, i: usize, j: usize, z: C64) -> C64 {
        self.energies
            .iter()
            .enumerate()
            .map(|(k, &e)| self.vectors[(i, k)] * self.vectors[(j, k)] / (z - e))
            .sum()
    }

    /// `G^R_{ij}(t) = -i Σ_k ⟨i|k⟩⟨k|j⟩ e^{-iE_k t}` for `t ≥ 0`.
    pub fn greens_time(&self, i: usize, j: usize, t: f64) -> C64 {
        let s: C64 = self
            .energies
            .iter()
            .enumerate()
            .map(|(k, &e)| self.vectors[(i, k)] * self.vectors[(j, k)] * C64::from_polar(1.0, -e * t))
            .sum();
        -C64::i() * s
    }

    /// `e^{-iHt} ψ`.
    pub fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let n = psi.len();
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let c: C64 = (0..n).map(|j| psi[j] * self.vectors[(j, k)]).sum();
            coeffs[k] = c * C64::from_polar(1.0, -self.energies[k] * t);
        }
        (0..n).map(|j| (0..n).map(|k| coeffs[k] * self.vectors[(j, k)]).sum()).collect()
    }
}

/// Retarded `G_{11}(t)` of two degenerate sites at energy `e0` coupled by
/// hopping `-v`: `-i e^{-i e0 t} cos(v t)`.
pub fn two_site_greens(e0: f64, v: f64, t: f64) -> C64 {
    -C64::i() * C64::from_polar((v * t).cos(), -e0 * t)
}

/// `dt Σ_{n=0}^{N-1} a e^{-i e0 t_n} e^{i(ε + iη) t_n}` with `t_n = n dt`,
/// summed as a geometric series.
pub fn damped_level_sum(a: C64, e0: f64, eps: f64, eta: f64, dt: f64, n: usize) -> C64 {
    let r = (C64::i() * C64::new(eps - e0, eta) * dt).exp();
    a * dt * (C64::new(1.0, 0.0) - r.powu(n as u32)) / (C64::new(1.0, 0.0) - r)
}
