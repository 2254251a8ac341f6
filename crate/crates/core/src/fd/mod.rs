//! Finite-difference solver for the system reduced to one space dimension,
//! `x ∈ T₁`, `θ ∈ T_{2π}`, plus its two-state extension.

mod diagnostics;
mod grid;
pub mod linalg;
mod single;
mod two_state;

pub use diagnostics::{averaging_diagnostic, AveragingSeries, NormOrder};
pub use grid::{DensityGrid, DENSITY_HEADER, FIELD_HEADER};
pub use single::{
    run_to_steady, steady_residual, step, step_with_stats, AdvectionScheme, FdParams,
    NegativityPolicy, SteadyOutcome, MAX_DT,
};
pub use two_state::{
    smell_field, step_two_state, step_two_state_with_stats, transition_mass_defect,
    ProductionSpec, SmellField, TransitionOp, TwoStateGrid,
};
