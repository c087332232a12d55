//! Monte Carlo laboratory for boundary-case branching Brownian motion and its
//! embedded branching random walk of birth positions.

pub mod batch;
pub mod bbm;
pub mod brw;
pub mod quad;
pub mod real;
pub mod rng;
pub mod sampler;
pub mod spine;
pub mod stats;

pub use real::Real;

pub type Params = sampler::ModelParams<f64>;
pub type Displacement = sampler::DisplacementLaw<f64>;
pub type SpineStep = sampler::SpineStepLaw<f64>;
pub type Explore = brw::ExploreConfig<f64>;
pub type Explorer = brw::TreeExplorer<f64>;
pub type Line = bbm::LineConfig<f64>;
pub type LineDraw = bbm::LineSample<f64>;
pub type Snapshot = bbm::PopulationSnapshot<f64>;
