//! The structured run report written as `report.json`.

use pif_core::protocols::{ForwardPass, GreensMeta};
use pif_core::signal::TruncationReport;
use pif_core::{ChainModel, Protocol, ProtocolReport, RecordingWindow};
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub lattice: LatticeSummary,
    pub forward: ForwardSummary,
    pub runs: Vec<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSummary {
    pub n_sites: usize,
    pub probe: usize,
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSummary {
    pub window: RecordingWindow,
    pub t_rec: f64,
    pub greens: GreensMeta,
    pub record_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: Protocol,
    pub echo_fidelity: f64,
    pub initial_velocity: f64,
    pub echo_velocity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trm_volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trm_record_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationReport>,
    pub injection_peak: f64,
    pub max_reversal_error: f64,
    /// `(δt, error)`.
    pub reversal_error: Vec<(f64, f64)>,
    /// `(δt, outer-region norm)`.
    pub outer_norm: Vec<(f64, f64)>,
    pub files: Vec<String>,
}

/// Present when both protocols ran on the same forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `fidelity(PIF) - fidelity(TRM)`.
    pub fidelity_gain: f64,
    /// Offsets δt > 0 where the PIF cavity error is not below TRM's.
    pub pif_not_better_at: Vec<f64>,
    /// Correlation of the max-normalized probe densities over `[t_R, 2t_R]`.
    pub probe_shape_correlation: f64,
}

impl LatticeSummary {
    pub fn of(model: &ChainModel) -> Self {
        LatticeSummary { n_sites: model.n_sites(), probe: model.probe(), band: model.band() }
    }
}

impl ForwardSummary {
    pub fn of(fp: &ForwardPass, record_file: &str) -> Self {
        ForwardSummary { window: fp.window, t_rec: fp.window.t_rec(), greens: fp.greens_meta, record_file: record_file.to_string() }
    }
}

impl RunSummary {
    pub fn of(run: &ProtocolReport, files: Vec<String>) -> Self {
        RunSummary {
            protocol: run.protocol,
            echo_fidelity: run.echo_fidelity.unwrap_or(0.0),
            initial_velocity: run.initial_velocity,
            echo_velocity: run.echo_velocity,
            trm_volume: run.trm_volume,
            trm_record_start: run.trm_record_start,
            truncation: run.truncation,
            injection_peak: run.injection.peak(),
            max_reversal_error: run.reversal_error_series.iter().map(|e| e.1).fold(0.0, f64::max),
            reversal_error: run.reversal_error_series.clone(),
            outer_norm: run.outer_norm_series.clone(),
            files,
        }
    }
}

impl Comparison {
    pub fn of(pif: &ProtocolReport, trm: &ProtocolReport) -> Self {
        let pif_not_better_at = pif
            .reversal_error_series
            .iter()
            .zip(&trm.reversal_error_series)
            .filter(|(p, t)| p.0 > 0.0 && !(p.1 < t.1))
            .map(|(p, _)| p.0)
            .collect();
        Comparison {
            fidelity_gain: pif.echo_fidelity.unwrap_or(0.0) - trm.echo_fidelity.unwrap_or(0.0),
            pif_not_better_at,
            probe_shape_correlation: pif_core::metrics::shape_correlation(
                &pif.backward_probe.density(),
                &trm.backward_probe.density(),
            ),
        }
    }
}

impl Report {
    pub fn run(&self, p: Protocol) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.protocol == p)
    }
}
