//! Multi-index sequential Monte Carlo ratio estimators for Bayesian inverse
//! problems.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod error;
pub mod estimator;
pub mod fem1d;
pub mod fem2d;
pub mod kl;
pub mod linalg;
pub mod models;
pub mod multiindex;
pub mod quadrature;
pub mod ratefit;
pub mod rng;
pub mod scalar;
pub mod smc;

pub use error::{Error, Result};
pub use estimator::{allocate_samples, mismc_ratio_estimate, mismc_sn_estimate, single_level_smc_estimate, AllocationPlan, EstimateReport};
pub use models::Model;
pub use multiindex::{corners, mixed_difference, IndexSet, MultiIndex, SignedCorner};
pub use scalar::Scalar;
pub use smc::{run_coupled_smc, run_smc, CoupledRun, SmcConfig, TemperingSchedule, Zeta};

pub type Toy1D = models::Toy1D<f64>;
pub type Elliptic2D = models::Elliptic2D<f64>;
pub type LogGaussian = models::LogGaussian<f64>;
pub type Run = smc::CoupledRun<f64>;
