//! Layout compiler and topology selector for neutral-atom circuits.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`circuit`]: logical circuits, parsers, random generation, interaction graph
//! * [`topology`]: square / s-triangle / t-triangle lattices and radii
//! * [`features`]: the fourteen static descriptors and PageRank
//! * [`mapper`]: initial placement and SWAP routing
//! * [`scheduler`]: dependency DAG and blockade-aware greedy scheduling
//! * [`predictor`]: per-topology MLP regressors and topology selection
//! * [`noise_sim`]: state-vector simulator with depolarizing noise
//! * [`pipeline`]: end-to-end compile, labelling and benchmark helpers
//!
//! The numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the pipeline uses.

pub mod circuit;
pub mod features;
pub mod mapper;
pub mod noise_sim;
pub mod pipeline;
pub mod predictor;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod topology;

pub use scalar::Scalar;

pub type Lattice = topology::Lattice<f64>;
pub type LatticeSpec = topology::LatticeSpec<f64>;
pub type Site = topology::Site<f64>;
pub type RadiusConfig = topology::RadiusConfig<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type NormStats = features::NormStats<f64>;
pub type Mlp = predictor::Mlp<f64>;
pub type TrainedModel = predictor::TrainedModel<f64>;
pub type ModelBank = predictor::ModelBank<f64>;
pub type AdamConfig = predictor::AdamConfig<f64>;
pub type Sample = predictor::Sample<f64>;
pub type StateVector = noise_sim::StateVector<f64>;
