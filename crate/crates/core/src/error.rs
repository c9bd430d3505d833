//! Error types shared across the solver modules.

use thiserror::Error;

/// Errors raised by grid operations, solvers and the inversion loop.
#[derive(Debug, Error)]
pub enum Error {
    /// A value vector does not match the cell count of its grid.
    #[error("field has {len} values but the grid has {cells} cells")]
    DimensionMismatch { len: usize, cells: usize },

    /// Two fields that must share a grid do not.
    #[error("fields live on different grids")]
    GridMismatch,

    /// A field contains NaN or infinite entries.
    #[error("field contains a non-finite value at cell {cell}")]
    NonFiniteField { cell: usize },

    /// Initial data violates the nonnegativity hypothesis.
    #[error("initial {which} is negative at cell {cell}: hypothesis S0 >= 0, I0 >= 0 violated")]
    NegativeInitialData { which: &'static str, cell: usize },

    /// The initial infected mass vanishes.
    #[error("initial infected mass is zero: hypothesis integral of I0 > 0 violated")]
    ZeroInfectedMass,

    /// The initial total population touches zero somewhere.
    #[error("S0 + I0 is zero at cell {cell}: hypothesis S0 + I0 >= phi0 > 0 violated")]
    ZeroPopulationCell { cell: usize },

    /// The conjugate-gradient solve for the implicit diffusion step failed.
    #[error(
        "linear solve diverged: residual {residual:.3e} after {iterations} iterations \
         (cap {cap})"
    )]
    LinearSolveDiverged {
        iterations: usize,
        cap: usize,
        residual: f64,
    },

    /// A time step inside a marching solver failed.
    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// A trajectory is missing time levels required by a consumer.
    #[error("trajectory is incomplete: expected {expected} time levels, found {found}")]
    TrajectoryIncomplete { expected: usize, found: usize },

    /// Two time-indexed objects do not share the same time grid.
    #[error("time grids do not match: {left} vs {right} levels")]
    TimeGridMismatch { left: usize, right: usize },

    /// Box bounds are not ordered inside (0, 1).
    #[error("invalid box bounds: require 0 < {lo} <= {hi} < 1 for {which}")]
    InvalidBounds {
        which: &'static str,
        lo: f64,
        hi: f64,
    },

    /// A coefficient field leaves its admissible box.
    #[error("{which} = {value} at cell {cell} lies outside [{lo}, {hi}]")]
    ParameterOutOfBounds {
        which: &'static str,
        cell: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A model constant violates its admissible range.
    #[error("{name} = {value} violates: {constraint}")]
    InvalidModelConstant {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A synthetic coefficient profile leaves the admissible box.
    #[error(
        "{which} profile takes values in [{min:.6}, {max:.6}], not strictly inside \
         ({lo}, {hi})"
    )]
    ProfileOutOfBounds {
        which: &'static str,
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
    },

    /// Field CSV input could not be parsed.
    #[error("field csv: {0}")]
    FieldCsv(String),

    /// Underlying file I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
