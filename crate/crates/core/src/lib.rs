//! Outer ellipsoidal bounds for p-sums of ellipsoids and forward reach sets
//! of linear systems.
//!
//! The crate computes, for a set `E(c₁,Q₁) +_p … +_p E(c_n,Q_n)`, members of
//! a one-parameter family of ellipsoids that are guaranteed to contain it,
//! picking the member of minimum trace or minimum volume. Folding those
//! pairwise bounds over the blocks of a reach set gives ellipsoidal reach
//! tubes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod outer;
pub mod reach;
pub mod scenarios;

pub use error::{Error, Result};
pub use exec::Strategy;
pub use geometry::{Ellipsoid, Exponent, MinkowskiExpression, PSumSet, QuadraticForm};
pub use metrics::{hausdorff_sampled, hausdorff_upper_bound, report, SphereSampler, StepReport};
pub use oracle::{check_containment, grid_beta_argmin, mvee_khachiyan, psum_mvee_reference, ContainmentReport};
pub use linalg::{Matrix, SpdMatrix, Vector};
pub use outer::{
    beta_trace_opt, beta_volume_opt, fold_minkowski_outer, fold_psum_outer, pair_outer, q_beta,
    Criterion, FixedPointConfig, OuterResult, RecursionExponent, Tightness,
};
pub use reach::{
    propagate_blocks, reach_support, reach_tube, ControlSets, ControlTiming, Dynamics,
    ExplicitControls, LtiSystem, ModulatedControls, ReachTube, TubeConfig, TubeStep,
    UncertaintyModel,
};
