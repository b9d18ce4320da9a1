//! Second-quantized finite models and their exact two-time measurement
//! heat laws.

mod engine;
mod fock;
mod scans;
pub mod sparse;

pub use engine::{
    law_char_fn, law_moments, ttm_distribution, DiscreteAtomicLaw, FiniteModel, TtmEngine, CLUSTER_REL_TOL,
    COMMUTATION_TOL,
};
pub use fock::{
    build_linear_v, build_quadratic_v, gibbs_state, second_quantize, FockBasis, FockSpec, Statistics,
    BOSON_DIM_CAP, FERMION_DIM_CAP,
};
pub use scans::{
    commutator_bound_check, impurity_model, moment_growth_scan, tl_convergence, CommutatorReport, CommutatorRow,
    MomentGrowthRow, MomentGrowthTable, TlFamily, TlReport, TlRow, TruncatedVanHove, MONOTONE_SLACK,
    STABILIZATION_TOL,
};
pub use sparse::SparseMat;
