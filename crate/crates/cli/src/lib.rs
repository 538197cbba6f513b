//! Experiment harness: fits, contraction-ratio scans and RER-versus-CR curves
//! over manifest-described datasets, with CSV and SVG output.

pub mod commands;
pub mod grid;
pub mod svg;

pub use commands::{
    cmd_alpha_scan, cmd_fit, cmd_info, cmd_rer_curve, cmd_synth, read_alpha_scan, AlphaRow, AlphaScan,
    ExperimentSpec, FitOutcome, SynthSpec,
};
pub use grid::RankGrid;

use mcca::MccaError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Exit status for a failed command: 1 for numerical failures, 2 for
/// everything caused by the input.
pub fn exit_code(err: &MccaError) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}
