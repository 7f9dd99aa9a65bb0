//! Experiment driver: JSON specs in, JSON reports and CSV tables out.

pub mod reproduce;
pub mod run;
pub mod spec;

use confinement_core::Error;

pub use run::{csv_table, execute, write_outputs, Outcome, Payload, RunReport};
pub use spec::{ExperimentSpec, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Exit status for a library error: numerical breakdowns are solver
/// failures, everything else is a bad spec.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::UnsupportedSingularity(_) | Error::Chart(_) | Error::Rank { .. } => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Solver { residual: 1e-3 }), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::UnsupportedSingularity("x".into())), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::Validation("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::Dimension { expected: 2, got: 3 }), EXIT_VALIDATION);
    }
}
