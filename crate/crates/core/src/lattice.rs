//! Discrete 1-D chain: potential profile and tight-binding Hamiltonian.
//!
//! Site energies are `E_j = U(x_j) + 2V` and every bond carries hopping `-V`.
//! Amplitudes beyond the first and last site are identically zero (hard walls).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PifError, Result};

/// Natural units. All three are fixed to 1; the struct exists so that derived
/// quantities are written in terms of named constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub a: f64,
    pub hopping: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem { hbar: 1.0, a: 1.0, hopping: 1.0 }
    }
}

impl UnitSystem {
    /// Largest group velocity of the uniform chain, `2Va/ħ`.
    pub fn max_group_speed(&self) -> f64 {
        2.0 * self.hopping * self.a / self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    HardWall,
    /// The end is far enough away that nothing reaches it within the run.
    Open,
}

/// Constant potential `height` (in units of V) on sites `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    pub segments: Vec<Segment>,
    pub left: Boundary,
    pub right: Boundary,
}

impl Default for PotentialProfile {
    fn default() -> Self {
        PotentialProfile { segments: Vec::new(), left: Boundary::Open, right: Boundary::HardWall }
    }
}

impl PotentialProfile {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn with_segment(mut self, start: usize, end: usize, height: f64) -> Self {
        self.segments.push(Segment { start, end, height });
        self
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        for seg in &self.segments {
            if !seg.height.is_finite() {
                return Err(PifError::NonFiniteHeight(seg.height));
            }
            if seg.start > seg.end || seg.end >= n_sites {
                return Err(PifError::SegmentOutOfRange { start: seg.start, end: seg.end, n_sites });
            }
        }
        let mut sorted: Vec<&Segment> = self.segments.iter().collect();
        sorted.sort_by_key(|s| s.start);
        for pair in sorted.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(PifError::OverlappingSegments {
                    a_start: pair[0].start,
                    a_end: pair[0].end,
                    b_start: pair[1].start,
                    b_end: pair[1].end,
                });
            }
        }
        Ok(())
    }

    /// `U(x_j)` for every site.
    pub fn potential(&self, n_sites: usize) -> Vec<f64> {
        let mut u = vec![0.0; n_sites];
        for seg in &self.segments {
            for v in &mut u[seg.start..=seg.end] {
                *v = seg.height;
            }
        }
        u
    }
}

/// The same chain with `extra` free sites prepended on the left. The probe
/// and every segment move with the sites they sit on.
pub fn extend_left(model: &ChainModel, extra: usize) -> Result<ChainModel> {
    let mut profile = model.profile().clone();
    for seg in &mut profile.segments {
        seg.start += extra;
        seg.end += extra;
    }
    build_chain(model.n_sites() + extra, model.probe() + extra, profile)
}

/// Real symmetric tridiagonal matrix. `off[j]` couples sites `j` and `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let n = self.diag.len();
        for j in 0..n {
            let mut acc = psi[j] * self.diag[j];
            if j > 0 {
                acc += psi[j - 1] * self.off[j - 1];
            }
            if j + 1 < n {
                acc += psi[j + 1] * self.off[j];
            }
            out[j] = acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    n_sites: usize,
    probe: usize,
    profile: PotentialProfile,
    site_energies: Vec<f64>,
    units: UnitSystem,
}

/// Builds the chain with `E_j = U(x_j) + 2V` and uniform hopping `-V`.
pub fn build_chain(n_sites: usize, probe_index: usize, profile: PotentialProfile) -> Result<ChainModel> {
    if n_sites < 3 {
        return Err(PifError::LatticeTooSmall(n_sites));
    }
    if probe_index == 0 || probe_index + 1 >= n_sites {
        return Err(PifError::ProbeOutOfRange { probe: probe_index, n_sites });
    }
    profile.validate(n_sites)?;
    let units = UnitSystem::default();
    let site_energies = profile
        .potential(n_sites)
        .into_iter()
        .map(|u| u * units.hopping + 2.0 * units.hopping)
        .collect();
    Ok(ChainModel { n_sites, probe: probe_index, profile, site_energies, units })
}

impl ChainModel {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probe(&self) -> usize {
        self.probe
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar
    }

    /// Magnitude V of the hopping; the matrix element itself is `-V`.
    pub fn hopping(&self) -> f64 {
        self.units.hopping
    }

    /// Band edges `[min_j E_j - 2V, max_j E_j + 2V]`.
    pub fn band(&self) -> (f64, f64) {
        let lo = self.site_energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.site_energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo - 2.0 * self.hopping(), hi + 2.0 * self.hopping())
    }

    pub fn tridiagonal(&self) -> Tridiagonal {
        Tridiagonal {
            diag: self.site_energies.clone(),
            off: vec![-self.hopping(); self.n_sites - 1],
        }
    }
}

/// `(Hψ)_j = E_j ψ_j - V ψ_{j-1} - V ψ_{j+1}`.
pub fn apply_hamiltonian(model: &ChainModel, psi: &[C64]) -> Result<Vec<C64>> {
    if psi.len() != model.n_sites {
        return Err(PifError::LengthMismatch { expected: model.n_sites, got: psi.len() });
    }
    let v = model.hopping();
    let e = &model.site_energies;
    let n = psi.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = psi[j] * e[j];
        if j > 0 {
            acc -= psi[j - 1] * v;
        }
        if j + 1 < n {
            acc -= psi[j + 1] * v;
        }
        out[j] = acc;
    }
    Ok(out)
}
