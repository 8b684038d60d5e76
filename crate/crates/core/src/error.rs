use thiserror::Error;

pub type Result<T> = std::result::Result<T, PifError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PifError {
    #[error("lattice needs at least 3 sites, got {0}")]
    LatticeTooSmall(usize),
    #[error("probe index {probe} must be strictly interior to a {n_sites}-site lattice")]
    ProbeOutOfRange { probe: usize, n_sites: usize },
    #[error("potential segment [{start}, {end}] does not fit a {n_sites}-site lattice")]
    SegmentOutOfRange { start: usize, end: usize, n_sites: usize },
    #[error("potential segments [{a_start}, {a_end}] and [{b_start}, {b_end}] overlap")]
    OverlappingSegments {
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },
    #[error("potential height {0} is not finite")]
    NonFiniteHeight(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid wave packet: {0}")]
    InvalidPacket(String),
    #[error("wave packet clipped by lattice edge: edge density {0:e} exceeds 1e-12")]
    PacketClipped(f64),

    #[error("time step {0} outside (0, 0.1]")]
    InvalidTimeStep(f64),
    #[error("source value supplied but the stepper has no source site")]
    MissingSourceSite,
    #[error("tridiagonal system is singular at row {0}")]
    SingularSystem(usize),
    #[error("injection schedule grid does not match the stepper grid: {0}")]
    ScheduleGridMismatch(String),

    #[error("time horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("energy grid is empty")]
    EmptyGrid,
    #[error("broadening must be positive, got {0}")]
    InvalidBroadening(f64),
    #[error("resolvent requires Im(energy) > 0, got {0}")]
    NonRetardedEnergy(f64),
    #[error("cut bond {cut} is at the lattice edge of a {n_sites}-site chain")]
    CutAtEdge { cut: usize, n_sites: usize },
    #[error("site index {site} outside a {n_sites}-site lattice")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("probe record is empty: peak density {0:e} below detection floor")]
    EmptySignal(f64),
    #[error("probe density never decays below threshold after the peak (localized state in the cavity?)")]
    NoDecay,
    #[error("recording window [{t1}, {t_r}] is not inside the record")]
    WindowOutOfRange { t1: f64, t_r: f64 },
    #[error("spectral grid does not match the time grid: {0}")]
    GridMismatch(String),
    #[error("out-of-window energy fraction {fraction:e} exceeds {bound:e}")]
    OutOfWindowEnergy { fraction: f64, bound: f64 },

    #[error("initial cavity norm {norm:e} exceeds bound {bound:e}")]
    InitialCavityOccupied { norm: f64, bound: f64 },
    #[error("deconvolution blow-up: injection peak is {0:e} times the recorded peak")]
    DeconvolutionBlowUp(f64),
    #[error("no snapshot at t = {0}")]
    MissingSnapshot(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PifError {
    fn from(e: std::io::Error) -> Self {
        PifError::Io(e.to_string())
    }
}
