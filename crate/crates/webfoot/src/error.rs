//! Error type shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Four-bar ankle coupling cannot close at the requested knee angle.
    #[error("four-bar linkage has no closure at knee angle {knee_rad} rad")]
    NoClosure { knee_rad: f64 },

    /// Fold angle handed to the foot geometry is outside its hard-stop range
    /// by more than the penalty penetration allowance.
    #[error("fold angle {fold_rad} rad outside [0, {fold_max_rad}] beyond tolerance")]
    FoldOutOfRange { fold_rad: f64, fold_max_rad: f64 },

    /// A tendon coupling ratio was requested for a joint the route does not cross.
    #[error("tendon route does not cross joint {joint}")]
    JointNotOnRoute { joint: &'static str },

    /// Joint-space mass matrix lost positive definiteness (configuration error).
    #[error("mass matrix is not positive definite")]
    MassMatrixNotPd,

    /// A state entry became non-finite during integration.
    #[error("simulation diverged (non-finite state) at t = {t} s")]
    NonFiniteState { t: f64 },

    /// Integration window is not an integer number of gait cycles.
    #[error("metric window [{t_start}, {t_end}] s does not span an integer number of cycles of period {period} s")]
    WindowNotCycleAligned {
        t_start: f64,
        t_end: f64,
        period: f64,
    },

    /// Window reaches outside the logged time range.
    #[error("metric window [{t_start}, {t_end}] s outside logged range [{log_start}, {log_end}] s")]
    WindowOutOfRange {
        t_start: f64,
        t_end: f64,
        log_start: f64,
        log_end: f64,
    },

    /// Efficiency is undefined when the input work is not positive.
    #[error("input work {w_input} J is not positive; efficiency undefined")]
    ZeroInputWork { w_input: f64 },

    /// TP1 requested from a log whose configuration has no global spring tendon.
    #[error("log for configuration {config} carries no GST channel")]
    MissingGstChannel { config: String },

    /// Phase grids of two mean curves differ.
    #[error("phase grids differ: {left} vs {right} bins (periods {left_period} vs {right_period} s)")]
    GridMismatch {
        left: usize,
        right: usize,
        left_period: f64,
        right_period: f64,
    },

    /// No cycles available for averaging.
    #[error("no samples available: {context}")]
    EmptyInput { context: &'static str },

    /// A configuration value violates its documented range.
    #[error("config value out of range: {what}")]
    InvalidConfig { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
