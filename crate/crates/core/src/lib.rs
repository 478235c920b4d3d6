//! Maximal violation of the CHSH inequality and an integral lower bound on
//! the Vértesi-inequality violation for two-qubit states, before and after
//! optimized local filtering, plus a Monte-Carlo check of an explicit
//! local-hidden-variable model.

pub mod chsh;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lhv;
pub mod optim;
pub mod pauli;
pub mod rotation;
pub mod vertesi;

pub use chsh::{
    chsh_expectation, holevo_bound, mvci, optimal_chsh_settings, teleportation_fidelity_bound,
    ChshResult, ChshSettings, TSIRELSON,
};
pub use error::{Error, Result};
pub use filter::{
    apply_filter_density, filter_coefficients, filtered_correlation, filtered_mvci_objective,
    maximize_filtered_mvci, maximize_filtered_mvci_in, FilterParams, FilterResult,
    FilteredCorrelation, StrengthBox,
};
pub use lhv::{
    lhv_report, quantum_joint, sample_biased_lambda, simulate_lhv, JointDistribution, LhvModel,
    LhvReport,
};
pub use optim::OptimizerOptions;
pub use pauli::{
    correlation_data, make_density, ppt_min_eigenvalue, rho1, rho2, werner, DensityMatrix,
    ExtendedCorrelation, PauliBasis, StateFile,
};
pub use rotation::{euler_to_rotation, local_unitary_rotate, Rotation3};
pub use vertesi::{
    cap_area, cap_first_moment, maximize_vertesi_bound, vertesi_lower_bound, vertesi_terms,
    CapWindow, Quadrature, VertesiOptions, VertesiResult, VertesiTerms,
};
