//! Four-regression baselines: estimate `E_k[y|x]` and `E_k[t|x]` separately for
//! both populations and combine them through the ratio identity
//!
//! ```text
//! u(x) = 2 (E₁[y|x] − E₂[y|x]) / (E₁[t|x] − E₂[t|x])
//! ```

use nalgebra::{DMatrix, DVector};

use crate::data::{OutcomeSet, TreatmentSet};
use crate::error::{invalid, Result, UpliftError};
use crate::features::GaussianBasis;
use crate::linalg::{add_ridge, SpdFactor};

pub const DEFAULT_DENOM_EPSILON: f64 = 1e-3;

/// Ridge regression `coef = (XᵀX + λI)⁻¹Xᵀy` on a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub coef: DVector<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub lambda: f64,
    pub max_iter: usize,
    /// Exit once the gradient norm drops to this value.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iter: 100,
            tol: 1e-8,
            max_halvings: 30,
        }
    }
}

/// L2-regularized logistic regression for labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub coef: DVector<f64>,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Objective value after each accepted step, starting at the zero vector.
    pub loss_trace: Vec<f64>,
}

fn check_design(x: &DMatrix<f64>, labels: usize, context: &'static str) -> Result<()> {
    if x.nrows() != labels {
        return Err(UpliftError::DimensionMismatch {
            context,
            expected: x.nrows(),
            got: labels,
        });
    }
    if x.nrows() == 0 {
        return invalid(format!("{context}: no samples"));
    }
    Ok(())
}

pub fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeModel> {
    check_design(x, y.len(), "fit_ridge")?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return invalid(format!("ridge lambda must be strictly positive, got {lambda}"));
    }
    let gram = add_ridge(x.tr_mul(x), lambda);
    let coef = SpdFactor::new(gram, "ridge normal equations")?.solve(&x.tr_mul(y));
    Ok(RidgeModel { coef, lambda })
}

/// `log(1 + exp(-m))` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `Σ log(1 + exp(-y_i x_iᵀc)) + (λ/2)‖c‖²`
pub fn logistic_loss(x: &DMatrix<f64>, labels: &DVector<f64>, coef: &DVector<f64>, lambda: f64) -> f64 {
    let margins = x * coef;
    margins
        .iter()
        .zip(labels.iter())
        .map(|(m, y)| log1p_exp_neg(y * m))
        .sum::<f64>()
        + 0.5 * lambda * coef.norm_squared()
}

fn logistic_gradient(
    x: &DMatrix<f64>,
    labels: &DVector<f64>,
    coef: &DVector<f64>,
    lambda: f64,
) -> (DVector<f64>, DVector<f64>) {
    let margins = x * coef;
    // d/dm log(1+exp(-y m)) = -y σ(-y m)
    let resid = DVector::from_iterator(
        labels.len(),
        margins.iter().zip(labels.iter()).map(|(m, y)| -y * sigmoid(-y * m)),
    );
    let curvature = DVector::from_iterator(
        labels.len(),
        margins.iter().map(|&m| {
            let p = sigmoid(m);
            p * (1.0 - p)
        }),
    );
    (x.tr_mul(&resid) + lambda * coef, curvature)
}

/// Damped Newton iterations on the regularized negative log-likelihood.
pub fn fit_logistic(x: &DMatrix<f64>, labels: &DVector<f64>, opts: LogisticOptions) -> Result<LogisticModel> {
    check_design(x, labels.len(), "fit_logistic")?;
    if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return invalid(format!("logistic labels must be -1 or +1, got {y}"));
    }
    if !(opts.lambda.is_finite() && opts.lambda >= 0.0) {
        return invalid(format!("logistic lambda must be nonnegative, got {}", opts.lambda));
    }
    let has_pos = labels.iter().any(|&y| y > 0.0);
    let has_neg = labels.iter().any(|&y| y < 0.0);
    if opts.lambda == 0.0 && !(has_pos && has_neg) {
        return invalid("unregularized logistic fit needs both classes");
    }

    let p = x.ncols();
    let mut coef = DVector::zeros(p);
    let mut loss = logistic_loss(x, labels, &coef, opts.lambda);
    let mut loss_trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;

    while iterations < opts.max_iter {
        let (grad, curvature) = logistic_gradient(x, labels, &coef, opts.lambda);
        gradient_norm = grad.norm();
        if !gradient_norm.is_finite() {
            return Err(UpliftError::Numerical {
                context: "fit_logistic",
                detail: "non-finite gradient".into(),
                condition: f64::NAN,
            });
        }
        if gradient_norm <= opts.tol {
            converged = true;
            break;
        }
        let mut weighted = x.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= curvature[i];
        }
        let hessian = add_ridge(x.tr_mul(&weighted), opts.lambda.max(1e-12));
        let step = SpdFactor::new(hessian, "logistic Newton step")?.solve(&grad);

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = &coef - scale * &step;
            let cand_loss = logistic_loss(x, labels, &candidate, opts.lambda);
            if cand_loss.is_finite() && cand_loss <= loss {
                accepted = Some((candidate, cand_loss));
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((c, l)) => {
                let stalled = c == coef;
                coef = c;
                loss = l;
                loss_trace.push(l);
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    if !converged {
        let (grad, _) = logistic_gradient(x, labels, &coef, opts.lambda);
        gradient_norm = grad.norm();
        converged = gradient_norm <= opts.tol;
    }
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(UpliftError::Numerical {
            context: "fit_logistic",
            detail: "non-finite coefficients".into(),
            condition: f64::NAN,
        });
    }
    Ok(LogisticModel {
        coef,
        lambda: opts.lambda,
        converged,
        iterations,
        gradient_norm,
        loss_trace,
    })
}

/// Regression models that estimate a conditional mean from a design matrix.
pub trait MeanModel {
    fn predict_mean(&self, design: &DMatrix<f64>) -> Result<DVector<f64>>;
}

fn check_coef(design: &DMatrix<f64>, coef: &DVector<f64>) -> Result<()> {
    if design.ncols() != coef.len() {
        return Err(UpliftError::DimensionMismatch {
            context: "predict_mean",
            expected: coef.len(),
            got: design.ncols(),
        });
    }
    Ok(())
}

impl MeanModel for RidgeModel {
    fn predict_mean(&self, design: &DMatrix<f64>) -> Result<DVector<f64>> {
        check_coef(design, &self.coef)?;
        Ok(design * &self.coef)
    }
}

impl LogisticModel {
    pub fn predict_proba(&self, design: &DMatrix<f64>) -> Result<DVector<f64>> {
        check_coef(design, &self.coef)?;
        Ok((design * &self.coef).map(sigmoid))
    }
}

impl MeanModel for LogisticModel {
    /// `E[label|x] = 2 p(+1|x) − 1`
    fn predict_mean(&self, design: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.predict_proba(design)?.map(|p| 2.0 * p - 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeModel {
    Ridge(RidgeModel),
    Logistic(LogisticModel),
}

impl MeanModel for OutcomeModel {
    fn predict_mean(&self, design: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            OutcomeModel::Ridge(m) => m.predict_mean(design),
            OutcomeModel::Logistic(m) => m.predict_mean(design),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeRegression {
    Ridge,
    Logistic,
}

/// The four fitted conditional-mean models over a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FourModelUplift {
    pub basis: GaussianBasis,
    pub mu_y1: OutcomeModel,
    pub mu_y2: OutcomeModel,
    pub mu_t1: LogisticModel,
    pub mu_t2: LogisticModel,
    pub denom_epsilon: f64,
}

/// Per-row predictions plus how many rows needed the denominator clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Clamped<T> {
    pub values: T,
    pub clamp_count: usize,
}

/// Conditional means `E[y|x,t=+1]` and `E[y|x,t=−1]` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMeans {
    pub m_plus: DVector<f64>,
    pub m_minus: DVector<f64>,
}

/// `sign(d) · max(|d|, eps)`, with `sign(0) = +1`.
pub fn clamp_denominator(d: f64, eps: f64) -> (f64, bool) {
    if d.abs() >= eps {
        (d, false)
    } else if d < 0.0 {
        (-eps, true)
    } else {
        (eps, true)
    }
}

/// The four per-row conditional means entering the ratio identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FourMeans {
    pub y1: DVector<f64>,
    pub y2: DVector<f64>,
    pub t1: DVector<f64>,
    pub t2: DVector<f64>,
}

impl FourMeans {
    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }

    /// `2(y1 − y2) / clamp(t1 − t2)` per row.
    pub fn uplift(&self, eps: f64) -> Clamped<DVector<f64>> {
        let mut clamp_count = 0;
        let values = DVector::from_fn(self.len(), |i, _| {
            let (d, clamped) = clamp_denominator(self.t1[i] - self.t2[i], eps);
            clamp_count += usize::from(clamped);
            2.0 * (self.y1[i] - self.y2[i]) / d
        });
        Clamped { values, clamp_count }
    }

    /// Solves `E_k[y|x] = m₊ p_k + m₋ (1 − p_k)`, `k = 1, 2`, per row, with
    /// `p_k = (1 + E_k[t|x]) / 2`. The determinant `p₁ − p₂` is clamped at
    /// `eps / 2`, matching the clamp in [`FourMeans::uplift`].
    pub fn conditional_means(&self, eps: f64) -> Clamped<ConditionalMeans> {
        let n = self.len();
        let mut m_plus = DVector::zeros(n);
        let mut m_minus = DVector::zeros(n);
        let mut clamp_count = 0;
        for i in 0..n {
            let p1 = 0.5 * (1.0 + self.t1[i]);
            let p2 = 0.5 * (1.0 + self.t2[i]);
            let (det, clamped) = clamp_denominator(p1 - p2, 0.5 * eps);
            clamp_count += usize::from(clamped);
            let (e1, e2) = (self.y1[i], self.y2[i]);
            m_plus[i] = (e1 * (1.0 - p2) - e2 * (1.0 - p1)) / det;
            m_minus[i] = (p1 * e2 - p2 * e1) / det;
        }
        Clamped {
            values: ConditionalMeans { m_plus, m_minus },
            clamp_count,
        }
    }
}

impl FourModelUplift {
    pub fn means(&self, x: &DMatrix<f64>) -> Result<FourMeans> {
        let design = self.basis.transform(x)?;
        Ok(FourMeans {
            y1: self.mu_y1.predict_mean(&design)?,
            y2: self.mu_y2.predict_mean(&design)?,
            t1: self.mu_t1.predict_mean(&design)?,
            t2: self.mu_t2.predict_mean(&design)?,
        })
    }
}

/// Ratio-identity uplift estimate per row of `x`.
pub fn uplift_four(models: &FourModelUplift, x: &DMatrix<f64>) -> Result<Clamped<DVector<f64>>> {
    Ok(models.means(x)?.uplift(models.denom_epsilon))
}

/// Solves the per-row 2×2 moment system for the two arm-conditional means.
pub fn solve_conditional_means(models: &FourModelUplift, x: &DMatrix<f64>) -> Result<Clamped<ConditionalMeans>> {
    Ok(models.means(x)?.conditional_means(models.denom_epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourModelOptions {
    pub outcome: OutcomeRegression,
    pub ridge_lambda: f64,
    pub logistic: LogisticOptions,
    pub denom_epsilon: f64,
}

impl Default for FourModelOptions {
    fn default() -> Self {
        Self {
            outcome: OutcomeRegression::Ridge,
            ridge_lambda: 1e-3,
            logistic: LogisticOptions::default(),
            denom_epsilon: DEFAULT_DENOM_EPSILON,
        }
    }
}

fn fit_outcome(set: &OutcomeSet, basis: &GaussianBasis, opts: &FourModelOptions) -> Result<OutcomeModel> {
    let design = basis.transform(set.features())?;
    match opts.outcome {
        OutcomeRegression::Ridge => Ok(OutcomeModel::Ridge(fit_ridge(
            &design,
            set.outcomes(),
            opts.ridge_lambda,
        )?)),
        OutcomeRegression::Logistic => {
            if !set.is_binary() {
                return invalid("logistic outcome models need outcomes in {-1, +1}");
            }
            Ok(OutcomeModel::Logistic(fit_logistic(
                &design,
                set.outcomes(),
                opts.logistic,
            )?))
        }
    }
}

/// Fits all four conditional-mean models on a shared basis.
pub fn fit_four(
    outcomes: [&OutcomeSet; 2],
    treatments: [&TreatmentSet; 2],
    basis: &GaussianBasis,
    opts: FourModelOptions,
) -> Result<FourModelUplift> {
    if !(opts.denom_epsilon.is_finite() && opts.denom_epsilon > 0.0) {
        return invalid(format!("denom_epsilon must be positive, got {}", opts.denom_epsilon));
    }
    let fit_t = |set: &TreatmentSet| -> Result<LogisticModel> {
        let design = basis.transform(set.features())?;
        fit_logistic(&design, set.treatments(), opts.logistic)
    };
    Ok(FourModelUplift {
        basis: basis.clone(),
        mu_y1: fit_outcome(outcomes[0], basis, &opts)?,
        mu_y2: fit_outcome(outcomes[1], basis, &opts)?,
        mu_t1: fit_t(treatments[0])?,
        mu_t2: fit_t(treatments[1])?,
        denom_epsilon: opts.denom_epsilon,
    })
}
