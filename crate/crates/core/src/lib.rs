//! Debiased Bayesian inference for high-dimensional sparse linear regression.
//!
//! The pipeline has three stages:
//!
//! 1. an *initial posterior* for the coefficients under a sparsity-inducing
//!    prior, either the mean-field variational approximation to the
//!    spike-and-slab posterior ([`vb`]) or a Gibbs sampler for the horseshoe
//!    prior ([`horseshoe`]);
//! 2. a frequentist plug-in estimate of the precision matrix of the
//!    covariates ([`precision`]): nodewise LASSO, CLIME, or the direct inverse
//!    of the Gram matrix when `p < n`;
//! 3. the debiasing transform ([`debias`]), which maps every posterior draw
//!    `β` to
//!
//! ```text
//! β̃ = β + Θ̂ Σᵢ Wᵢ Xᵢ (Yᵢ − Xᵢᵀβ)
//! ```
//!
//! with a fresh vector of Bayesian-bootstrap weights `W` for every draw.
//! Equal-tailed quantile intervals of the debiased draws are asymptotically
//! valid frequentist confidence intervals.
//!
//! [`sim`] reproduces the Monte Carlo study (scenarios S1–S6) used to compare
//! standard Bayes, debiased Bayes, and the debiased LASSO.
//!
//! ```
//! use debayes::prelude::*;
//!
//! let scenario = SimulationScenario::new(ScenarioId::S1, 100, 20);
//! let data = scenario.generate(7).unwrap();
//!
//! let vb = fit_vb(&data, &SpikeSlabPrior::default(), &VbConfig::default()).unwrap();
//! let initial = vb.sample(1_000, 11);
//!
//! let penalties = default_nodewise_penalties(data.n(), data.p(), 1.0).unwrap();
//! let theta = nodewise_lasso(&data, &penalties).unwrap();
//!
//! let debiased = run_algorithm1(&data, &initial, &theta, 13).unwrap();
//! let ci = debiased.credible_interval(4, 0.05).unwrap();
//! assert!(ci.lower > 0.0);
//! ```

pub mod data;
pub mod debias;
pub mod draws;
pub mod error;
pub mod horseshoe;
pub mod lasso;
mod linalg;
pub mod precision;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod vb;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{gram_matrix, CoefficientVector, CredibleInterval, Dataset, Standardization};
    pub use crate::debias::{
        debias_draw, debiased_lasso, draw_weights, estimate_sandwich_variance, run_algorithm1,
        DebiasedDrawSet, WeightVector,
    };
    pub use crate::draws::{PosteriorDrawSet, PriorTag};
    pub use crate::horseshoe::{sample_horseshoe, HorseshoeConfig};
    pub use crate::lasso::{default_penalty, fit_lasso, LassoConfig, LassoFit};
    pub use crate::precision::{
        clime, default_nodewise_penalties, direct_inverse, nodewise_lasso, PrecisionEstimate,
        PrecisionMethod,
    };
    pub use crate::sim::{Method, MetricsTable, ScenarioId, SimulationScenario, StudyConfig};
    pub use crate::vb::{fit_vb, SpikeSlabPrior, VariationalState, VbConfig};
}
