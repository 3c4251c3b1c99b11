//! Fused higher-spin stochastic vertex model on a strip.

pub mod askey_wilson;
pub mod dense;
pub mod error;
pub mod mpa;
pub mod qseries;
pub mod quadrature;
pub mod scalar;
pub mod strip_model;
pub mod vertex_weights;

pub use askey_wilson::{AWMeasure, AWParams, AwModel, Phase, PhasePoint};
pub use error::{Error, Result};
pub use mpa::{ABCDParams, BandedRep, DEHPParams};
pub use scalar::Scalar;
pub use strip_model::{DownRightPath, Step, TransitionMatrix};
pub use vertex_weights::{FusedWeights, ModelParams};
