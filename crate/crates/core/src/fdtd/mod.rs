//! Two-dimensional finite-difference time-domain solver for the parallel-plate lens.

pub mod analytic;
pub mod export;
pub mod grid;
pub mod solver;

pub use analytic::{hankel2_0, validate_line_source, ValidationConfig, ValidationReport};
pub use grid::{rasterize, CellKind, FaceLine, MaterialGrid, PortFace, RasterConfig, Region};
pub use solver::{
    dft_phasor, time_step, whole_period_window, Engine, FdtdState, LineSource, PowerAudit, Probe,
    RunOutput, RunSpec, Waveform,
};
