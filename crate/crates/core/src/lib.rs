//! Exact laboratory for rank-one cutting-and-stacking transformations of an
//! infinite-measure space, with a focus on Sidon constructions.
//!
//! Sets are unions of full tower levels and every measure is an exact
//! rational, normalised so that the first base level has measure 1.

pub mod correlation;
pub mod error;
pub mod gamma;
pub mod geometry;
pub mod levelset;
pub mod lp;
pub mod oracle;
pub mod params;
pub mod poly;
pub mod rational;
pub mod sidon;
pub mod thm41;

pub use correlation::{
    autocorrelation, measure_intersection, shift_profile, Autocorrelator, Correlator, Profile,
};
pub use error::{Error, Result};
pub use gamma::{
    disjointness_experiment, gamma_params, DisjointnessReport, ExperimentSpec, GammaSet,
};
pub use geometry::{build_geometry, StageGeometry};
pub use levelset::{base_set, column_set, tower_set, LevelSet, Run};
pub use lp::{lp_convergence_report, LpReport, LpSchedule, SparseVector};
pub use oracle::{estimate_autocorrelation, Estimate, PointState};
pub use params::{reference, validate_params, ConstructionParams, StageParams, ValidationReport};
pub use poly::{block_average, q_poly, OperatorPolynomial};
pub use rational::Rational;
pub use sidon::{
    dissipativity_report, intersection_profile, mixing_bound_check, power_disjointness_check,
    sidon_check, DissipativityReport, MixingReport, PowerReport, SidonReport, SidonVerdict,
};
pub use thm41::{theorem41_report, Theorem41Report};
