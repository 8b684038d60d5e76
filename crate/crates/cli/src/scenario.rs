//! Scenario files: strict TOML with one section per stage of the run.
//!
//! Lattice positions are given relative to the probe site `x_s`: segment
//! bounds and the right wall are offsets into the cavity, the packet center is
//! an offset into the outer region (negative).

use std::fs;
use std::path::{Path, PathBuf};

use pif_core::lattice::Segment;
use pif_core::protocols::ProtocolConfig;
use pif_core::signal::{WindowParams, MAX_OUT_OF_WINDOW_FRACTION};
use pif_core::{build_chain, gaussian_packet, ChainModel, PotentialProfile, StepperConfig, UnitSystem, WaveField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub lattice: LatticeSection,
    pub packet: PacketSection,
    pub stepper: StepperSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub greens: GreensSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    /// Sites left of the probe. Derived from the horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_padding: Option<usize>,
    /// Offset of the last site from the probe.
    pub right_wall: usize,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: i64,
    pub end: i64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub center: f64,
    pub sigma: f64,
    pub k0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub threshold: f64,
    pub guard: f64,
    pub min_peak: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        let w = WindowParams::default();
        WindowSection { threshold: w.threshold, guard: w.guard, min_peak: w.min_peak }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub eta_per_window: f64,
    pub grid_padding: usize,
    pub span: f64,
    /// Zero disables the band roll-off.
    pub band_margin: f64,
}

impl Default for GreensSection {
    fn default() -> Self {
        let c = ProtocolConfig::default();
        GreensSection {
            eta: None,
            eta_per_window: c.eta_per_window,
            grid_padding: c.grid_padding,
            span: c.greens_span,
            band_margin: c.band_margin.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Pif,
    Trm,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: ProtocolChoice,
    pub trm_volume: f64,
    pub max_initial_cavity_norm: f64,
    pub max_out_of_window: f64,
    pub sample_interval: f64,
    pub blowup_factor: f64,
    /// Silence at the probe that separates entrance from escape for the TRM
    /// recording; zero records the whole window.
    pub trm_min_gap: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let c = ProtocolConfig::default();
        ProtocolSection {
            kind: ProtocolChoice::Pif,
            trm_volume: 1.0,
            max_initial_cavity_norm: c.max_initial_cavity_norm,
            max_out_of_window: MAX_OUT_OF_WINDOW_FRACTION,
            sample_interval: c.sample_interval,
            blowup_factor: c.blowup_factor,
            trm_min_gap: c.trm_min_gap.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Row stride of the time-series tables.
    pub series_stride: usize,
    /// Extra snapshot times exported besides `0, t_1, t_R, 2t_R - t_1, 2t_R`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), series_stride: 10, snapshot_times: Vec::new() }
    }
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub eta: Option<f64>,
    pub threshold: Option<f64>,
    pub protocol: Option<ProtocolChoice>,
    pub out_dir: Option<PathBuf>,
}

/// A scenario after overrides and padding resolution, with the model it
/// describes.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub model: ChainModel,
    pub packet: WaveField,
}

/// 1-based line of `key` inside `[section]` (or at top level for ""),
/// falling back to the section header.
fn line_of(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

struct Check<'a> {
    path: &'a Path,
    src: &'a str,
}

impl Check<'_> {
    fn fail(&self, section: &str, key: &str, msg: impl Into<String>) -> CliError {
        CliError::Validation {
            path: self.path.to_path_buf(),
            line: line_of(self.src, section, key),
            message: format!("{}{key}: {}", if section.is_empty() { String::new() } else { format!("{section}.") }, msg.into()),
        }
    }

    fn require(&self, ok: bool, section: &str, key: &str, msg: impl Into<String>) -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(section, key, msg))
        }
    }
}

pub fn parse(src: &str, path: &Path) -> Result<Scenario, CliError> {
    toml::from_str(src).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load(path: &Path) -> Result<(Scenario, String), CliError> {
    let src = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::NotFound(path.to_path_buf())
        } else {
            CliError::Io(format!("{}: {e}", path.display()))
        }
    })?;
    Ok((parse(&src, path)?, src))
}

/// Sites needed left of the probe so that nothing leaving the probe region
/// returns from the outer end before `2·horizon`, and the packet fits.
pub fn auto_padding(sc: &Scenario) -> usize {
    let v = UnitSystem::default().max_group_speed();
    let echo = (v * sc.stepper.horizon).ceil() as usize + 50;
    let packet = (-sc.packet.center + 10.0 * sc.packet.sigma).ceil().max(0.0) as usize;
    echo.max(packet)
}

impl Scenario {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.stepper.dt = dt;
        }
        if let Some(eta) = o.eta {
            self.greens.eta = Some(eta);
        }
        if let Some(t) = o.threshold {
            self.window.threshold = t;
        }
        if let Some(p) = o.protocol {
            self.protocol.kind = p;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
    }

    /// Validates every cross-field constraint and builds the chain and packet.
    /// `src` is the file text, used only for line numbers.
    pub fn resolve(mut self, path: &Path, src: &str) -> Result<Resolved, CliError> {
        let c = Check { path, src };
        c.require(!self.name.trim().is_empty(), "", "name", "must not be empty")?;

        let st = self.stepper;
        c.require(StepperConfig::with_dt(st.dt).validate().is_ok(), "stepper", "dt", format!("{} outside (0, 0.1]", st.dt))?;
        c.require(st.horizon > 0.0 && st.horizon.is_finite(), "stepper", "horizon", format!("must be positive, got {}", st.horizon))?;

        let p = self.packet;
        c.require(p.sigma > 0.0 && p.sigma.is_finite(), "packet", "sigma", "must be positive")?;
        c.require(p.k0.is_finite(), "packet", "k0", "must be finite")?;
        c.require(p.center < 0.0, "packet", "center", "must lie left of the probe (negative offset)")?;

        let w = self.window;
        c.require(w.threshold > 0.0 && w.threshold < 1.0, "window", "threshold", "must lie in (0, 1)")?;
        c.require(w.guard >= 0.0 && w.guard.is_finite(), "window", "guard", "must be non-negative")?;
        c.require(w.min_peak > 0.0, "window", "min_peak", "must be positive")?;
        c.require(st.horizon > w.guard, "stepper", "horizon", "must exceed window.guard")?;

        let g = self.greens;
        if let Some(eta) = g.eta {
            c.require(eta > 0.0 && eta.is_finite(), "greens", "eta", "must be positive")?;
        }
        c.require(g.eta_per_window > 0.0, "greens", "eta_per_window", "must be positive")?;
        c.require(g.grid_padding >= 2, "greens", "grid_padding", "must be at least 2")?;
        c.require(g.span > 0.0, "greens", "span", "must be positive")?;
        c.require(g.band_margin >= 0.0, "greens", "band_margin", "must be non-negative")?;

        let pr = self.protocol;
        c.require(pr.trm_volume.is_finite() && pr.trm_volume != 0.0, "protocol", "trm_volume", "must be finite and nonzero")?;
        c.require(pr.max_initial_cavity_norm >= 0.0, "protocol", "max_initial_cavity_norm", "must be non-negative")?;
        c.require(pr.max_out_of_window > 0.0 && pr.max_out_of_window <= 1.0, "protocol", "max_out_of_window", "must lie in (0, 1]")?;
        c.require(pr.sample_interval > 0.0, "protocol", "sample_interval", "must be positive")?;
        c.require(pr.blowup_factor > 1.0, "protocol", "blowup_factor", "must exceed 1")?;
        c.require(pr.trm_min_gap >= 0.0 && pr.trm_min_gap.is_finite(), "protocol", "trm_min_gap", "must be non-negative")?;

        c.require(self.output.series_stride >= 1, "output", "series_stride", "must be at least 1")?;
        c.require(!self.output.dir.as_os_str().is_empty(), "output", "dir", "must not be empty")?;
        c.require(self.output.snapshot_times.iter().all(|t| t.is_finite() && *t >= 0.0), "output", "snapshot_times", "must be non-negative")?;

        let pad = match self.lattice.outer_padding {
            Some(n) => n,
            None => auto_padding(&self),
        };
        self.lattice.outer_padding = Some(pad);
        c.require(pad >= 1, "lattice", "outer_padding", "must be at least 1")?;
        c.require(self.lattice.right_wall >= 1, "lattice", "right_wall", "must be at least 1")?;

        let mut segments = Vec::new();
        for s in &self.lattice.segments {
            let lo = s.start + pad as i64;
            let hi = s.end + pad as i64;
            c.require(s.start <= s.end, "lattice", "segments", format!("segment [{}, {}] has start after end", s.start, s.end))?;
            c.require(
                lo >= 0 && s.end <= self.lattice.right_wall as i64,
                "lattice",
                "segments",
                format!("segment [{}, {}] outside [-{pad}, {}]", s.start, s.end, self.lattice.right_wall),
            )?;
            segments.push(Segment { start: lo as usize, end: hi as usize, height: s.height });
        }
        let profile = PotentialProfile { segments, ..PotentialProfile::free() };
        let n_sites = pad + self.lattice.right_wall + 1;
        let model = build_chain(n_sites, pad, profile).map_err(|e| c.fail("lattice", "segments", e.to_string()))?;
        let packet = gaussian_packet(&model, pad as f64 + p.center, p.sigma, p.k0).map_err(|e| c.fail("packet", "center", e.to_string()))?;
        Ok(Resolved { scenario: self, model, packet })
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            dt: self.stepper.dt,
            horizon: self.stepper.horizon,
            window: WindowParams { threshold: self.window.threshold, guard: self.window.guard, min_peak: self.window.min_peak },
            pinned_window: None,
            eta: self.greens.eta,
            eta_per_window: self.greens.eta_per_window,
            grid_padding: self.greens.grid_padding,
            greens_span: self.greens.span,
            band_margin: (self.greens.band_margin > 0.0).then_some(self.greens.band_margin),
            max_initial_cavity_norm: self.protocol.max_initial_cavity_norm,
            sample_interval: self.protocol.sample_interval,
            blowup_factor: self.protocol.blowup_factor,
            max_out_of_window: self.protocol.max_out_of_window,
            trm_min_gap: (self.protocol.trm_min_gap > 0.0).then_some(self.protocol.trm_min_gap),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// Load, override and resolve in one go.
pub fn open(path: &Path, overrides: &Overrides) -> Result<Resolved, CliError> {
    let (mut sc, src) = load(path)?;
    sc.apply(overrides);
    sc.resolve(path, &src)
}
