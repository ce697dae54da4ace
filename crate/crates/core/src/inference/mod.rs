//! Binned likelihood, priors, and the Adaptive Metropolis posterior sampler.

pub mod am;
pub mod geweke;
pub mod histogram;
pub mod likelihood;
pub mod params;
pub mod prior;
pub mod sampler;

pub use am::{am_step, AmConfig, AmState};
pub use geweke::{geweke_partial_means, geweke_with, VarianceMethod};
pub use histogram::{make_bins, BinGroup, BinnedHistogram};
pub use likelihood::{log_likelihood, log_likelihood_structure, LikelihoodConfig};
pub use params::ParamLayout;
pub use prior::{log_prior, sample_prior, PriorConfig};
pub use sampler::{run_sampler, run_with_target, Chain, SamplerConfig};
