//! Individual uplift estimation from separately labeled samples.
//!
//! Two training populations that differ only in their treatment policies each
//! provide an outcome-only set `{(x, y)}` and a treatment-only set `{(x, t)}`.
//! The crate provides
//!
//! - [`direct`]: the min-max least-squares estimator with closed-form solutions
//!   for Gaussian-basis models,
//! - [`baseline`]: four separate regressions combined through the ratio identity,
//! - [`evaluation`]: uplift curves, AUUC and MSE,
//! - [`synthetic`]: a generator with known ground-truth uplift.

pub mod baseline;
pub mod data;
pub mod direct;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod linalg;
pub mod methods;
pub mod rng;
pub mod synthetic;

pub use baseline::{FourModelUplift, LogisticModel, RidgeModel};
pub use data::{JointSample, OutcomeSet, PooledWSet, PooledZSet, Source, TreatmentSet};
pub use direct::{ContrastTest, FitDiagnostics, HyperParams, MinMaxModel, Statistics};
pub use error::{Result, UpliftError};
pub use evaluation::{EvalResult, Evidence, UpliftCurve};
pub use features::GaussianBasis;
pub use methods::{Method, MethodParams, TrainingSets};
pub use synthetic::{SyntheticConfig, SyntheticData};
