//! Time integration of the modified anomaly flow and the Laplacian coflow.
//!
//! The state is (φ, f) on a grid. The right-hand side is assembled from
//! the flux H_C: η = −dH_C is split as Q⋄ψ and converted to a 3-form
//! variation ∂φ = A⋄φ.

mod checks;
mod config;
mod flux;
mod integrate;

pub use checks::{
    fixed_point_residuals, frame_h2_closed_form, frame_metric_rhs_explicit, frame_metric_rhs_thm,
    metric_evolution_check, metric_rhs, FixedPointReport, MetricEvolutionReport, MetricSnapshot,
};
pub use config::{DilatonMode, FlowConfig, FlowState, Stepper, Variant};
pub use flux::{compute_hc, flow_rhs, hc_definition, hc_torsion_forms, skew_torsion_h, HcResult};
pub use integrate::{
    cohomology_periods, diagnostics, run, run_with, step, unsupported_by_theory, DiagnosticsRecord, HaltReason,
    RunOutput, CSV_HEADER,
};
