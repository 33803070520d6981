//! Monetary propagation on production networks: network generation,
//! spectral analysis, money dynamics, price setting and distortion
//! statistics, with closed-form theory and Monte Carlo ensembles.

pub mod ensemble;
pub mod error;
pub mod export;
pub mod moments;
pub mod monetary;
pub mod netgen;
pub mod pipeline;
pub mod pricing;
pub mod sparse;
pub mod spectral;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use moments::{EmpiricalMoments, MomentProvider, TruncatedPareto};
pub use netgen::{build_economy, Economy, NetworkParams};
pub use sparse::CscMatrix;
pub use spectral::SpectralSummary;
