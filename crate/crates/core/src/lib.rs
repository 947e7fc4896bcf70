//! Conflict-graph allocation of downlink beam-training resources for FDD
//! massive MIMO, with the link-level chain needed to evaluate it.
//!
//! The pipeline per geometry drop:
//!
//! 1. [`env`]: random users/scatterers, single-bounce paths, covariances.
//! 2. [`spectrum`]: DFT beam gains and thresholded dominant beam sets.
//! 3. [`graph`]: beam conflict graph and greedy slot coloring.
//! 4. [`training`]: contaminated pilots, MMSE estimates, analytic MSE.
//! 5. [`txsim`]: RZF precoding, SINR and overhead-aware rates.
//! 6. [`harness`]: threshold sweeps, aggregation and CSV output.

pub mod env;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod spectrum;
pub mod training;
pub mod txsim;

pub use env::{
    covariance, derive_paths, generate_environment, path_loss, realize_channel, steering_vector,
    ChannelRealization, Covariance, EnvConfig, Environment, PathSet,
};
pub use error::{Error, Result};
pub use graph::{
    association_matrix, greedy_color, overhead_reduction, validate_coloring, AssociationMatrix, Coloring,
    ConflictGraph,
};
pub use spectrum::{beam_gains, dft_codebook, dominant_support, BeamDomainChannel, BeamGains, DftCodebook, DominantSupport};
pub use training::{
    analytic_mse, build_training_plan, embed_estimate, estimate, mmse_filter, simulate_pilots, MmseFilter,
    PilotObservation, Scheme, TrainingPlan, UserEstimator,
};
pub use txsim::{rate, rzf_precoder, scale_power, sinr, LogBase, PrecoderSet, RateReport, RzfMode};
