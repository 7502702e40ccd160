//! Exact truncated-series distributions of the largest eigenvalue of
//! singular beta-Wishart matrices, built on Jack polynomials and
//! hypergeometric functions of matrix argument.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod capacity;
pub mod cli;
pub mod eigendist;
pub mod error;
pub mod hypergeom;
pub mod jack;
pub mod montecarlo;
pub mod numeric;
pub mod partitions;

pub use beta::Beta;
pub use capacity::{
    miso_capacity, CapacityEstimate, CapacityQuery, CapacityUnit, MisoChannel, QuadraturePolicy,
};
pub use eigendist::{
    cdf_largest, joint_density, log_multigamma_beta, pdf_largest, pdf_m2_nonnull, quantile_largest,
    CdfRoute, DistValue, HeldCdf, JointDensity, LargestEigenDistribution, WishartSpec,
};
pub use error::{Error, Result};
pub use hypergeom::{
    hyper_hetero, hyper_one_matrix, kummer_transform, HeteroSeries, HypergeomParams, SeriesValue,
    TruncationBudget,
};
pub use jack::{jack_c, jack_identity_value, EigenSpectrum, JackLayers};
pub use montecarlo::{
    empirical_cdf, ks_distance, ks_from_sorted_cdf, sample_largest_eigs, stiefel_splitting_check,
    SampleBatch, SplittingCheck,
};
pub use partitions::{conjugate, enumerate_partitions, hook_product, pochhammer_beta, Partition};
