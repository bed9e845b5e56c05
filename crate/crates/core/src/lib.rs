//! Numerical laboratory for stability of phase retrieval on nonlinear
//! priors in truncated Hilbert spaces.
//!
//! The crate builds frames and prior sets, evaluates quotient and
//! measurement distances exactly at finite truncation, and searches for
//! pairs that certify or refute Lipschitz and Hölder stability bounds.

pub mod constructions;
pub mod error;
pub mod frame;
pub mod hilbert;
pub mod lab;
pub mod priors;

pub use error::{Error, Result};
pub use frame::{
    analysis, frame_bounds, frame_operator, measure, measurement_distance, parsevalize, Frame, FrameBounds,
    MeasurementVector,
};
pub use hilbert::{align_phase, inner, project_head, quotient_distance, ScalarField, Vector};
pub use lab::{
    certify_lipschitz, frame_id, holder_fit, holder_scan, holder_to_lip_check, orthogonal_reduction_check, prior_id,
    scan_csv, stability_ratio, subspace_constant, worst_pair_search, RatioEval, ReductionResult, ScanRecord,
    SearchConfig, SigmaFit, StabilityReport, SubspaceEstimate, Verdict, Witness, DEFAULT_TOL, INJECTIVITY_RATIO,
    SCHEMA_VERSION,
};
pub use priors::{
    envelope_from_growth, growth_witness_pair, level_witness_pair, membership, repair, sample, Growth, Membership,
    PriorSet, Provenance,
};
