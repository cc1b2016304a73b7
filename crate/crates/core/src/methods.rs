//! Fit-and-predict entry points shared by the CLI and the acceptance suite.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::baseline::{fit_four, uplift_four, FourModelOptions, LogisticOptions, OutcomeRegression};
use crate::data::{attach_importance_weights, pool_outcome_sets, pool_treatment_sets, OutcomeSet, TreatmentSet};
use crate::direct::{fit, FitDiagnostics, HyperParams, MinMaxModel};
use crate::error::{invalid, Result, UpliftError};
use crate::features::{fit_centers, GaussianBasis, DEFAULT_BANDWIDTH, DEFAULT_BASIS_SIZE};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MinMax,
    FourRidge,
    FourLogistic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MinMax, Method::FourRidge, Method::FourLogistic];

    pub fn name(self) -> &'static str {
        match self {
            Method::MinMax => "minmax",
            Method::FourRidge => "four_ridge",
            Method::FourLogistic => "four_logistic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = UpliftError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UpliftError::InvalidInput(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    pub hyper: HyperParams,
    pub basis_size: usize,
    pub bandwidth: f64,
    pub denom_epsilon: f64,
    pub logistic: LogisticOptions,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            hyper: HyperParams::default(),
            basis_size: DEFAULT_BASIS_SIZE,
            bandwidth: DEFAULT_BANDWIDTH,
            denom_epsilon: crate::baseline::DEFAULT_DENOM_EPSILON,
            logistic: LogisticOptions::default(),
        }
    }
}

/// The four training sets of a problem instance.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSets<'a> {
    pub outcomes: [&'a OutcomeSet; 2],
    pub treatments: [&'a TreatmentSet; 2],
}

impl TrainingSets<'_> {
    pub fn all_features(&self) -> Result<DMatrix<f64>> {
        let parts = [
            self.outcomes[0].features(),
            self.outcomes[1].features(),
            self.treatments[0].features(),
            self.treatments[1].features(),
        ];
        let d = parts.iter().find(|p| p.nrows() > 0).map_or(0, |p| p.ncols());
        if let Some(p) = parts.iter().find(|p| p.nrows() > 0 && p.ncols() != d) {
            return Err(UpliftError::DimensionMismatch {
                context: "training feature dimension",
                expected: d,
                got: p.ncols(),
            });
        }
        let rows: usize = parts.iter().map(|p| p.nrows()).sum();
        let mut out = DMatrix::zeros(rows, d);
        let mut at = 0;
        for p in parts {
            if p.nrows() > 0 {
                out.rows_mut(at, p.nrows()).copy_from(p);
                at += p.nrows();
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub predictions: DVector<f64>,
    pub clamp_count: usize,
    /// Only the direct estimator reports conditioning diagnostics.
    pub diagnostics: Option<FitDiagnostics>,
}

/// Fits the two bases for the direct estimator from the pooled training features.
pub fn fit_bases(sets: &TrainingSets<'_>, params: &MethodParams, seed: u64) -> Result<(GaussianBasis, GaussianBasis)> {
    let features = sets.all_features()?;
    let basis_f = fit_centers(&features, params.basis_size, params.bandwidth, derive_seed(seed, 1))?;
    let basis_g = fit_centers(&features, params.basis_size, params.bandwidth, derive_seed(seed, 2))?;
    Ok((basis_f, basis_g))
}

/// Pools the training sets with size-balancing importance weights
/// (density ratios ≡ 1) and fits the direct estimator.
pub fn fit_minmax(sets: &TrainingSets<'_>, params: &MethodParams, seed: u64) -> Result<MinMaxModel> {
    let (basis_f, basis_g) = fit_bases(sets, params, seed)?;
    let n = sets.outcomes[0].len() + sets.outcomes[1].len();
    let n_tilde = sets.treatments[0].len() + sets.treatments[1].len();
    let weigh_out = |s: &OutcomeSet| attach_importance_weights(s.clone(), n, &vec![1.0; s.len()]);
    let weigh_treat = |s: &TreatmentSet| attach_importance_weights(s.clone(), n_tilde, &vec![1.0; s.len()]);
    let zs = pool_outcome_sets(&weigh_out(sets.outcomes[0])?, &weigh_out(sets.outcomes[1])?)?;
    let ws = pool_treatment_sets(&weigh_treat(sets.treatments[0])?, &weigh_treat(sets.treatments[1])?)?;
    fit(&zs, &ws, &basis_f, &basis_g, params.hyper)
}

/// Fits `method` on the training sets and predicts the uplift at `test`.
pub fn fit_predict(
    method: Method,
    sets: &TrainingSets<'_>,
    test: &DMatrix<f64>,
    params: &MethodParams,
    seed: u64,
) -> Result<MethodOutput> {
    match method {
        Method::MinMax => {
            let model = fit_minmax(sets, params, seed)?;
            Ok(MethodOutput {
                predictions: model.predict(test)?,
                clamp_count: 0,
                diagnostics: model.diagnostics().copied(),
            })
        }
        Method::FourRidge | Method::FourLogistic => {
            let outcome = if method == Method::FourRidge {
                OutcomeRegression::Ridge
            } else {
                if !sets.outcomes.iter().all(|s| s.is_binary()) {
                    return invalid("four_logistic needs binary outcomes in {-1, +1}");
                }
                OutcomeRegression::Logistic
            };
            let features = sets.all_features()?;
            let basis = fit_centers(&features, params.basis_size, params.bandwidth, derive_seed(seed, 1))?;
            let opts = FourModelOptions {
                outcome,
                ridge_lambda: params.hyper.lambda_f,
                logistic: LogisticOptions {
                    lambda: params.logistic.lambda,
                    ..params.logistic
                },
                denom_epsilon: params.denom_epsilon,
            };
            let models = fit_four(sets.outcomes, sets.treatments, &basis, opts)?;
            let mut out = uplift_four(&models, test)?;
            if params.hyper.clip_binary {
                out.values
                    .apply(|v| *v = v.clamp(-crate::direct::BINARY_UPLIFT_BOUND, crate::direct::BINARY_UPLIFT_BOUND));
            }
            Ok(MethodOutput {
                predictions: out.values,
                clamp_count: out.clamp_count,
                diagnostics: None,
            })
        }
    }
}
