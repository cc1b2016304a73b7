//! Two-dimensional synthetic benchmark with known individual uplift.
//!
//! Features are `N(0, 10·I₂)`. Outcomes `y ∈ {-1, 1}` follow
//! `p(y|x,t) = σ(y a_tᵀx)` and the two training policies are
//! `p₁(t=1|x) = σ(x₂)` and `p₂(t=1|x) = σ(x₂ + b)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::baseline::sigmoid;
use crate::data::{JointSample, OutcomeSet, Source, TreatmentSet};
use crate::error::{invalid, Result};
use crate::rng::{seeded, UpliftRng};

pub const DIM: usize = 2;

/// Number of points in the standard policy-gap sweep over `[0, 10]`.
pub const GAP_GRID_POINTS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub feature_cov_scale: f64,
    pub a_plus: [f64; DIM],
    pub a_minus: [f64; DIM],
    pub b_offset: f64,
    pub n1: usize,
    pub n2: usize,
    pub n_tilde1: usize,
    pub n_tilde2: usize,
    pub holdout: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            feature_cov_scale: 10.0,
            a_plus: [10.0, -10.0],
            a_minus: [10.0, 10.0],
            b_offset: 5.0,
            n1: 1000,
            n2: 1000,
            n_tilde1: 1000,
            n_tilde2: 1000,
            holdout: 2000,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Splits pooled sizes `n` and `ñ` evenly between the two populations.
    pub fn with_pooled_sizes(mut self, n: usize, n_tilde: usize) -> Self {
        self.n1 = n.div_ceil(2);
        self.n2 = n / 2;
        self.n_tilde1 = n_tilde.div_ceil(2);
        self.n_tilde2 = n_tilde / 2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.feature_cov_scale.is_finite() && self.feature_cov_scale > 0.0) {
            return invalid(format!(
                "feature covariance scale must be positive, got {}",
                self.feature_cov_scale
            ));
        }
        if [self.n1, self.n2, self.n_tilde1, self.n_tilde2].contains(&0) {
            return invalid("every training set needs at least one sample");
        }
        if !self.b_offset.is_finite() {
            return invalid("policy offset must be finite");
        }
        if self.a_plus.iter().chain(&self.a_minus).any(|v| !v.is_finite()) {
            return invalid("outcome coefficients must be finite");
        }
        Ok(())
    }

    fn coefficients(&self, t: f64) -> &[f64; DIM] {
        if t > 0.0 {
            &self.a_plus
        } else {
            &self.a_minus
        }
    }
}

/// The 25 equally spaced policy offsets in `[0, 10]`.
pub fn policy_gap_grid() -> Vec<f64> {
    (0..GAP_GRID_POINTS)
        .map(|i| 10.0 * i as f64 / (GAP_GRID_POINTS - 1) as f64)
        .collect()
}

fn dot(a: &[f64; DIM], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Rows i.i.d. `N(0, scale·I)`.
pub fn sample_features(n: usize, config: &SyntheticConfig, rng: &mut UpliftRng) -> DMatrix<f64> {
    let normal = Normal::new(0.0, config.feature_cov_scale.sqrt()).expect("validated scale");
    let mut x = DMatrix::zeros(n, DIM);
    for i in 0..n {
        for j in 0..DIM {
            x[(i, j)] = normal.sample(rng);
        }
    }
    x
}

/// `p(y|x,t) = 1 / (1 + exp(−y a_tᵀx))` for `y ∈ {-1, 1}`.
pub fn outcome_prob(x: &[f64], t: f64, y: f64, config: &SyntheticConfig) -> f64 {
    sigmoid(y * dot(config.coefficients(t), x))
}

/// `E[y|x,t] = 2 p(y=1|x,t) − 1`
pub fn outcome_mean(x: &[f64], t: f64, config: &SyntheticConfig) -> f64 {
    2.0 * outcome_prob(x, t, 1.0, config) - 1.0
}

/// Treatment probability `p_k(t=1|x)`.
pub fn policy_prob(source: Source, x: &[f64], config: &SyntheticConfig) -> f64 {
    match source {
        Source::First => sigmoid(x[1]),
        Source::Second => sigmoid(x[1] + config.b_offset),
    }
}

/// `u(x) = 2σ(a₊ᵀx) − 2σ(a₋ᵀx)`
pub fn true_uplift(x: &[f64], config: &SyntheticConfig) -> f64 {
    outcome_mean(x, 1.0, config) - outcome_mean(x, -1.0, config)
}

fn draw_sign(p: f64, rng: &mut UpliftRng) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        -1.0
    }
}

/// Draws `(t, y)` for each row of `x` under a treatment probability function.
fn draw_labels<F>(
    x: &DMatrix<f64>,
    policy: F,
    config: &SyntheticConfig,
    rng: &mut UpliftRng,
) -> (DVector<f64>, DVector<f64>)
where
    F: Fn(&[f64]) -> f64,
{
    let mut t = DVector::zeros(x.nrows());
    let mut y = DVector::zeros(x.nrows());
    for i in 0..x.nrows() {
        let row = [x[(i, 0)], x[(i, 1)]];
        t[i] = draw_sign(policy(&row), rng);
        y[i] = draw_sign(outcome_prob(&row, t[i], 1.0, config), rng);
    }
    (t, y)
}

/// Jointly labeled draws from population `source`.
pub fn sample_joint(
    source: Source,
    n: usize,
    config: &SyntheticConfig,
    rng: &mut UpliftRng,
) -> Result<Vec<JointSample>> {
    let x = sample_features(n, config, rng);
    let (t, y) = draw_labels(&x, |r| policy_prob(source, r, config), config, rng);
    (0..n)
        .map(|i| {
            let row = vec![x[(i, 0)], x[(i, 1)]];
            let e = policy_prob(source, &row, config);
            JointSample::new(row, t[i], y[i], (e > 0.0 && e < 1.0).then_some(e))
        })
        .collect()
}

/// Training sets for both populations plus a randomized holdout.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub outcome_sets: [OutcomeSet; 2],
    pub treatment_sets: [TreatmentSet; 2],
    /// Randomized-experiment test samples (`p(t=1|x) = 0.5`).
    pub holdout: Vec<JointSample>,
    /// `u(x)` for each holdout sample.
    pub holdout_uplift: Vec<f64>,
}

impl SyntheticData {
    pub fn holdout_features(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.holdout.len(), DIM, |i, j| self.holdout[i].features()[j])
    }

    /// All training feature rows, outcome sets first.
    pub fn training_features(&self) -> DMatrix<f64> {
        let parts = [
            self.outcome_sets[0].features(),
            self.outcome_sets[1].features(),
            self.treatment_sets[0].features(),
            self.treatment_sets[1].features(),
        ];
        let rows: usize = parts.iter().map(|p| p.nrows()).sum();
        let mut out = DMatrix::zeros(rows, DIM);
        let mut at = 0;
        for p in parts {
            out.rows_mut(at, p.nrows()).copy_from(p);
            at += p.nrows();
        }
        out
    }
}

/// Draws the four separately labeled training sets and the holdout.
///
/// Outcome and treatment sets use independent feature draws; the outcome
/// sets keep only `y` and the treatment sets only `t`.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = seeded(config.seed);
    let mut outcome_sets = Vec::with_capacity(2);
    let mut treatment_sets = Vec::with_capacity(2);
    for (source, n, n_tilde) in [
        (Source::First, config.n1, config.n_tilde1),
        (Source::Second, config.n2, config.n_tilde2),
    ] {
        let policy = |r: &[f64]| policy_prob(source, r, config);
        let x = sample_features(n, config, &mut rng);
        let (_, y) = draw_labels(&x, policy, config, &mut rng);
        outcome_sets.push(OutcomeSet::new(x, y, source)?);

        let x = sample_features(n_tilde, config, &mut rng);
        let (t, _) = draw_labels(&x, policy, config, &mut rng);
        treatment_sets.push(TreatmentSet::new(x, t, source)?);
    }

    let x = sample_features(config.holdout, config, &mut rng);
    let (t, y) = draw_labels(&x, |_| 0.5, config, &mut rng);
    let mut holdout = Vec::with_capacity(config.holdout);
    let mut holdout_uplift = Vec::with_capacity(config.holdout);
    for i in 0..config.holdout {
        let row = vec![x[(i, 0)], x[(i, 1)]];
        holdout_uplift.push(true_uplift(&row, config));
        holdout.push(JointSample::new(row, t[i], y[i], Some(0.5))?);
    }

    let [o1, o2]: [OutcomeSet; 2] = outcome_sets.try_into().expect("two populations");
    let [t1, t2]: [TreatmentSet; 2] = treatment_sets.try_into().expect("two populations");
    Ok(SyntheticData {
        outcome_sets: [o1, o2],
        treatment_sets: [t1, t2],
        holdout,
        holdout_uplift,
    })
}
