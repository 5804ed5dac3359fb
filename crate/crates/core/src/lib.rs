//! Thresholding bandits: characteristic times, optimal weights and identification
//! algorithms for Gaussian arms, with or without increasing means.

pub mod complexity;
pub mod error;
pub mod harness;
pub mod isotonic;
pub mod model;
pub mod policies;

pub use error::{Error, Result};
pub use model::{optimal_arm, BanditInstance, GaussianEnv, OptimalArm, Setting, Weights};
