//! Instantaneous wave function on the lattice and Gaussian packet construction.

use num_complex::Complex64 as C64;

use crate::error::{PifError, Result};
use crate::lattice::ChainModel;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

/// Site ranges used for restricted norms and overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `j < s`
    Outer,
    /// `j > s`
    Cavity,
    All,
}

impl Region {
    pub fn range(self, n_sites: usize, probe: usize) -> std::ops::Range<usize> {
        match self {
            Region::Outer => 0..probe,
            Region::Cavity => probe + 1..n_sites,
            Region::All => 0..n_sites,
        }
    }
}

impl WaveField {
    pub fn zeros(n_sites: usize) -> Self {
        WaveField { amplitudes: vec![C64::new(0.0, 0.0); n_sites], time: 0.0 }
    }

    pub fn delta(n_sites: usize, site: usize) -> Self {
        let mut f = Self::zeros(n_sites);
        f.amplitudes[site] = C64::new(1.0, 0.0);
        f
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn conj(&self) -> Self {
        WaveField { amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(), time: self.time }
    }

    pub fn scaled(&self, c: C64) -> Self {
        WaveField { amplitudes: self.amplitudes.iter().map(|a| a * c).collect(), time: self.time }
    }
}

fn check_len(a: &WaveField, b: &WaveField) -> Result<()> {
    if a.len() != b.len() {
        return Err(PifError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(())
}

pub fn norm(field: &WaveField) -> f64 {
    field.amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

pub fn density(field: &WaveField) -> Vec<f64> {
    field.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// `Σ_j conj(a_j) b_j`.
pub fn overlap(a: &WaveField, b: &WaveField) -> Result<C64> {
    check_len(a, b)?;
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

pub fn norm_in(field: &WaveField, sites: std::ops::Range<usize>) -> f64 {
    field.amplitudes[sites].iter().map(|a| a.norm_sqr()).sum()
}

pub fn region_norm(field: &WaveField, region: Region, probe: usize) -> f64 {
    norm_in(field, region.range(field.len(), probe))
}

/// `⟨x⟩` in lattice units over the given sites; zero for an empty region.
pub fn centroid(field: &WaveField, sites: std::ops::Range<usize>) -> f64 {
    let w = norm_in(field, sites.clone());
    if w == 0.0 {
        return 0.0;
    }
    sites.map(|j| j as f64 * field.amplitudes[j].norm_sqr()).sum::<f64>() / w
}

/// Rate of change of the centroid over `sites`, from the lattice probability
/// current `J_{j→j+1} = (2V a/ħ) Im(conj(ψ_j) ψ_{j+1})`, normalized by the
/// region's weight. For a packet isolated inside the region this equals
/// `d⟨x⟩/dt` exactly.
pub fn centroid_velocity(field: &WaveField, model: &ChainModel, sites: std::ops::Range<usize>) -> f64 {
    let w = norm_in(field, sites.clone());
    if w == 0.0 || sites.len() < 2 {
        return 0.0;
    }
    let u = model.units();
    let scale = 2.0 * u.hopping * u.a / u.hbar;
    let psi = &field.amplitudes;
    let current: f64 = (sites.start..sites.end - 1)
        .map(|j| (psi[j].conj() * psi[j + 1]).im)
        .sum();
    scale * current / w
}

/// Normalized Gaussian packet `ψ_j ∝ exp(-(j-c)²/(4σ²)) exp(i k₀ j)`.
///
/// `sigma` is the standard deviation of the density in sites. Normalization is
/// by direct lattice sum. Fails when the packet density at either lattice edge
/// exceeds 1e-12.
pub fn gaussian_packet(model: &ChainModel, center: f64, sigma: f64, k0: f64) -> Result<WaveField> {
    let n = model.n_sites();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(PifError::InvalidPacket(format!("sigma must be positive, got {sigma}")));
    }
    if !k0.is_finite() {
        return Err(PifError::InvalidPacket(format!("k0 must be finite, got {k0}")));
    }
    if !(center >= 0.0 && center <= (n - 1) as f64) {
        return Err(PifError::InvalidPacket(format!("center {center} outside lattice [0, {}]", n - 1)));
    }
    let mut amplitudes: Vec<C64> = (0..n)
        .map(|j| {
            let x = j as f64 - center;
            let envelope = (-x * x / (4.0 * sigma * sigma)).exp();
            C64::from_polar(envelope, k0 * j as f64)
        })
        .collect();
    let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let scale = 1.0 / total.sqrt();
    for a in &mut amplitudes {
        *a *= scale;
    }
    let edge = amplitudes[0].norm_sqr().max(amplitudes[n - 1].norm_sqr());
    if edge > 1e-12 {
        return Err(PifError::PacketClipped(edge));
    }
    Ok(WaveField { amplitudes, time: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, PotentialProfile};

    fn chain(n: usize) -> ChainModel {
        build_chain(n, n / 2, PotentialProfile::free()).unwrap()
    }

    #[test]
    fn fresh_packet_is_normalized() {
        let m = chain(400);
        let p = gaussian_packet(&m, 150.0, 10.0, 0.7).unwrap();
        assert!((norm(&p) - 1.0).abs() < 1e-14);
        let o = overlap(&p, &p).unwrap();
        assert!((o.re - 1.0).abs() < 1e-14 && o.im.abs() < 1e-15);
        assert_eq!(p.time, 0.0);
    }

    #[test]
    fn overlap_is_linear_in_phase() {
        let m = chain(300);
        let p = gaussian_packet(&m, 150.0, 8.0, 1.0).unwrap();
        let ip = p.scaled(C64::i());
        let o = overlap(&p, &ip).unwrap();
        assert!((o - C64::i()).norm() < 1e-14);
    }

    #[test]
    fn zero_momentum_packet_has_no_current() {
        let m = chain(300);
        let p = gaussian_packet(&m, 150.0, 8.0, 0.0).unwrap();
        assert!(centroid_velocity(&p, &m, 0..300).abs() < 1e-15);
    }

    #[test]
    fn conjugation_inverts_momentum() {
        let m = chain(300);
        let p = gaussian_packet(&m, 140.0, 12.0, 0.9).unwrap();
        let q = gaussian_packet(&m, 140.0, 12.0, -0.9).unwrap();
        let c = p.conj();
        let o = overlap(&c, &q).unwrap();
        assert!((o.norm() - 1.0).abs() < 1e-13);
        let v = centroid_velocity(&p, &m, 0..300);
        let vc = centroid_velocity(&c, &m, 0..300);
        assert!((v + vc).abs() < 1e-14);
        assert!(v > 0.0);
    }

    #[test]
    fn clipped_packet_is_rejected() {
        let m = chain(100);
        assert!(matches!(gaussian_packet(&m, 10.0, 5.0, 0.0), Err(PifError::PacketClipped(_))));
        assert!(matches!(gaussian_packet(&m, 50.0, -1.0, 0.0), Err(PifError::InvalidPacket(_))));
        assert!(matches!(gaussian_packet(&m, 150.0, 1.0, 0.0), Err(PifError::InvalidPacket(_))));
    }

    #[test]
    fn density_and_regions() {
        let m = chain(11);
        let mut f = WaveField::zeros(11);
        f.amplitudes[2] = C64::new(0.0, 2.0);
        f.amplitudes[5] = C64::new(1.0, 0.0);
        f.amplitudes[8] = C64::new(1.0, 1.0);
        assert_eq!(density(&f)[2], 4.0);
        assert_eq!(region_norm(&f, Region::Outer, m.probe()), 4.0);
        assert_eq!(region_norm(&f, Region::Cavity, m.probe()), 2.0);
        assert_eq!(norm(&f), 7.0);
    }

    #[test]
    fn overlap_length_mismatch() {
        let a = WaveField::zeros(3);
        let b = WaveField::zeros(4);
        assert!(overlap(&a, &b).is_err());
    }
}
