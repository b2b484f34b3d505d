//! Trace comparison, mismatch classification and reporting.

mod classify;
mod report;
pub mod vcd;

pub use classify::{
    boundary_fit, classify, compare, match_fraction, mismatches, BoundaryVariant, ClassifierParams, Evidence,
    MismatchClass, MismatchKind,
};
pub use report::{render_report, CaseReport, CaseStatus, ReportConfig, Verdict, VerificationReport, WindowRow};
pub use vcd::{parse_vcd, VcdError};
