//! Receive-mode lens experiments and the DoA-indexed coupling table.

pub mod doa;
pub mod experiment;
pub mod profile;
pub mod table;

pub use doa::{
    array_drive_phases, doa_response, phase_ramp, simulate_doa, sweep, CouplingVector, DoaRun,
};
pub use experiment::{
    channel_beta, Excitation, FdtdConfig, LensModel, PortRun, PortWave, PowerBalance,
    SourceWaveform,
};
pub use profile::{dominant_maxima, observation_profile, ObservationProfile};
pub use table::{sidecar_path, write_vector_csv, CouplingTable, TableMeta};
