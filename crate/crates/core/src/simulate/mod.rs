//! Monte Carlo machinery: random streams, variates, samplers and ensembles.

mod ensemble;
pub mod gof;
mod sampler;
pub mod variates;

pub use ensemble::{
    build_ensemble, build_ensemble_sequential, histogram, lower_quantile, summarize, EnsembleSummary,
    HorizonFrequencies, HorizonSummary, PredictiveEnsemble,
};
pub use sampler::{sample_marginal_chain, sample_path, PathSample, SamplerChoice};
pub use variates::{draw_beta, draw_gamma, draw_poisson, RngStream};

pub(crate) use sampler::chain_final_state;
