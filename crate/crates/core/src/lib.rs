//! Tight-binding chain simulator for time reversal of quantum wave packets
//! through a single probe site.

pub mod error;
pub mod evolve;
pub mod greens;
pub mod lattice;
pub mod metrics;
pub mod protocols;
pub mod signal;
mod transform;
pub mod wavefield;

pub use num_complex::Complex64 as C64;

pub use error::{PifError, Result};
pub use evolve::{evolve, CrankNicolson, Observer, ProbeRecorder, SnapshotTaker, StepperConfig};
pub use greens::{greens_spectrum, impulse_response, resolvent_element, to_energy, EnergyGrid, SpectralSignal};
pub use lattice::{apply_hamiltonian, build_chain, Boundary, ChainModel, PotentialProfile, Segment, UnitSystem};
pub use protocols::{run_pif, run_trm, ForwardPass, Protocol, ProtocolConfig, ProtocolReport};
pub use signal::{detect_window, to_time, InjectionSchedule, ProbeRecord, RecordingWindow, WindowParams};
pub use wavefield::{gaussian_packet, Region, WaveField};
