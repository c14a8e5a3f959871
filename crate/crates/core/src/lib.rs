//! Analysis, design and simulation of raptor codes on the binary-input AWGN
//! channel.
//!
//! The analysis side tracks the information content (IC) of belief
//! propagation messages under a Gaussian approximation, including the
//! extrinsic information a precode feeds back to the LT part when both are
//! decoded jointly. Output degree distributions are then optimized by linear
//! programming. The simulation side encodes, transmits and decodes raptor
//! codes bit-exactly so that designs can be checked against measured BER.

pub mod codec;
pub mod config;
pub mod degree;
pub mod decoder;
pub mod design;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod gaussian_ic;
pub mod interp;
pub mod simplex;
pub mod transfer;

pub use error::{Error, Result};
pub use gaussian_ic::{
    channel_from_sigma, j, j_inv, j_of_mean, mean_of_ic, ChannelParam, IcValue, LlrMean,
};
pub use degree::{InputEnsemble, LdpcEnsemble, OutputDegreeDistribution};
pub use evolution::{EvolutionContext, EvolutionKernel, Trajectory, Verdict};
pub use transfer::{PrecodeThreshold, TransferFunction};
pub use design::{DesignConfig, DesignResult, LpStatus, SweepReport};
pub use experiment::{ExperimentConfig, ExperimentRecord, Schedule};
