//! Error exponents, correct-decoding exponents and capacity of random
//! cloud-channel ensembles, with a brute-force primal oracle and a Monte
//! Carlo simulator of the ensemble.
//!
//! All quantities are in nats.

pub mod dual;
pub mod error;
pub mod input;
pub mod io;
mod optimize;
pub mod primal;
pub mod prob;
pub mod sim;
pub mod validation;

pub use dual::{
    achievable_error_exponent, achievable_zero_crossing, converse_error_exponent,
    converse_error_exponent_for_input, correct_decoding_exponent_dual, gallager_e0, r_min_jump,
    r_min_jump_for_input, tilted_joint, DualWitness, SolverSettings,
};
pub use error::{Error, Result};
pub use input::{
    correct_decoding_departure, ensemble_capacity, h_max, maximize_achievable_over_p,
    maximize_e0_over_p, minimize_correct_decoding_over_p, shannon_capacity, E0Optimum,
    InputOptimum,
};
pub use optimize::{SimplexOptimum, SimplexSearch};
pub use primal::{
    primal_achievable, primal_achievable_batch, primal_converse, primal_correct_decoding,
    primal_correct_decoding_batch, primal_rmin, single_min_form, PrimalResult, SimplexGrid,
};
pub use prob::{
    divergence_joint, functional_a, functional_b, functional_h, Channel, Distribution,
    JointDistribution, Nats,
};
pub use validation::{run_validation, Check, Level, ValidationReport};
