//! Exact ground truth for tabular fleets, theoretical constants and the
//! hyperparameters they prescribe.

mod constants;
mod enumerate;
mod exact;
mod measure;

pub use constants::{
    default_delta, recommended_hyperparams, theory_constants, Algorithm, HyperparamPlan, TheoryConstants,
};
pub use enumerate::{
    enumerate_expectation, enumerate_scalar, enumerate_trajectories, enumeration_size, ENUMERATION_BUDGET,
};
pub use exact::{exact_gradient, exact_value, fleet_objective, FleetObjective};
pub use measure::{
    gradient_variance, is_weight_variance, measure_assumption_constants, MeasureOptions, MeasuredConstants,
};
