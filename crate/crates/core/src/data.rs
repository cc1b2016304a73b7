//! Sample-set types for separately labeled data and the transforms between them.
//!
//! Each training population `k` contributes an outcome-only set `{(x, y)}` and a
//! treatment-only set `{(x, t)}`. Pooling flips the sign of the second
//! population's labels, giving the auxiliary samples `(x, z)` and `(x, w)` whose
//! conditional-mean ratio recovers the uplift.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result, UpliftError};
use crate::rng::seeded;

/// Index of the training population a sample set was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    First,
    Second,
}

impl Source {
    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Source::First),
            2 => Ok(Source::Second),
            _ => invalid(format!("source index must be 1 or 2, got {k}")),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Source::First => 1,
            Source::Second => 2,
        }
    }

    /// `(-1)^(k-1)`
    pub fn sign(self) -> f64 {
        match self {
            Source::First => 1.0,
            Source::Second => -1.0,
        }
    }
}

fn check_weights(weights: &DVector<f64>, rows: usize) -> Result<()> {
    if weights.len() != rows {
        return Err(UpliftError::DimensionMismatch {
            context: "sample weights",
            expected: rows,
            got: weights.len(),
        });
    }
    if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return invalid(format!("sample weights must be finite and nonnegative, got {bad}"));
    }
    Ok(())
}

fn check_rows(context: &'static str, features: &DMatrix<f64>, labels: usize) -> Result<()> {
    if features.nrows() != labels {
        return Err(UpliftError::DimensionMismatch {
            context,
            expected: features.nrows(),
            got: labels,
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{context}: features must be finite"));
    }
    Ok(())
}

/// Outcome-labeled samples `{(x_i, y_i)}` from one population.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet {
    features: DMatrix<f64>,
    outcomes: DVector<f64>,
    source: Source,
    weights: Option<DVector<f64>>,
}

impl OutcomeSet {
    pub fn new(features: DMatrix<f64>, outcomes: DVector<f64>, source: Source) -> Result<Self> {
        check_rows("outcome set", &features, outcomes.len())?;
        if outcomes.iter().any(|y| !y.is_finite()) {
            return invalid("outcomes must be finite");
        }
        Ok(Self {
            features,
            outcomes,
            source,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: DVector<f64>) -> Result<Self> {
        check_weights(&weights, self.len())?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn outcomes(&self) -> &DVector<f64> {
        &self.outcomes
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn weights(&self) -> Option<&DVector<f64>> {
        self.weights.as_ref()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// True when every outcome is -1 or +1.
    pub fn is_binary(&self) -> bool {
        self.outcomes.iter().all(|&y| y == 1.0 || y == -1.0)
    }
}

/// Treatment-labeled samples `{(x_i, t_i)}` from one population, `t ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentSet {
    features: DMatrix<f64>,
    treatments: DVector<f64>,
    source: Source,
    weights: Option<DVector<f64>>,
}

impl TreatmentSet {
    pub fn new(features: DMatrix<f64>, treatments: DVector<f64>, source: Source) -> Result<Self> {
        check_rows("treatment set", &features, treatments.len())?;
        if let Some(t) = treatments.iter().find(|&&t| t != 1.0 && t != -1.0) {
            return invalid(format!("treatments must be -1 or +1, got {t}"));
        }
        Ok(Self {
            features,
            treatments,
            source,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: DVector<f64>) -> Result<Self> {
        check_weights(&weights, self.len())?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn treatments(&self) -> &DVector<f64> {
        &self.treatments
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn weights(&self) -> Option<&DVector<f64>> {
        self.weights.as_ref()
    }

    pub fn len(&self) -> usize {
        self.treatments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatments.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Pooled `(x, z)` samples, `z = (-1)^(k-1) y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledZSet {
    pub features: DMatrix<f64>,
    pub z: DVector<f64>,
    pub weights: DVector<f64>,
}

/// Pooled `(x̃, w)` samples, `w = (-1)^(k-1) t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledWSet {
    pub features: DMatrix<f64>,
    pub w: DVector<f64>,
    pub weights: DVector<f64>,
}

impl PooledZSet {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

impl PooledWSet {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    // An empty set carries no dimension information worth checking.
    let d = if a.nrows() > 0 { a.ncols() } else { b.ncols() };
    if a.nrows() > 0 && b.nrows() > 0 && a.ncols() != b.ncols() {
        return Err(UpliftError::DimensionMismatch {
            context: "pooling feature dimension",
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), d);
    if a.nrows() > 0 {
        out.rows_mut(0, a.nrows()).copy_from(a);
    }
    if b.nrows() > 0 {
        out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    }
    Ok(out)
}

fn signed_labels(first: &DVector<f64>, second: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        first.len() + second.len(),
        first
            .iter()
            .map(|&v| Source::First.sign() * v)
            .chain(second.iter().map(|&v| Source::Second.sign() * v)),
    )
}

fn pooled_weights(first: (Option<&DVector<f64>>, usize), second: (Option<&DVector<f64>>, usize)) -> DVector<f64> {
    let expand = |(w, n): (Option<&DVector<f64>>, usize)| -> Vec<f64> {
        w.map(|w| w.iter().copied().collect()).unwrap_or_else(|| vec![1.0; n])
    };
    let mut all = expand(first);
    all.extend(expand(second));
    DVector::from_vec(all)
}

fn check_sources(first: Source, second: Source) -> Result<()> {
    if first != Source::First || second != Source::Second {
        return invalid(format!(
            "pooling expects sources (1, 2), got ({}, {})",
            first.index(),
            second.index()
        ));
    }
    Ok(())
}

/// Concatenates the two outcome sets, flipping the sign of the second set's outcomes.
pub fn pool_outcome_sets(s1: &OutcomeSet, s2: &OutcomeSet) -> Result<PooledZSet> {
    check_sources(s1.source, s2.source)?;
    Ok(PooledZSet {
        features: stack_rows(&s1.features, &s2.features)?,
        z: signed_labels(&s1.outcomes, &s2.outcomes),
        weights: pooled_weights((s1.weights(), s1.len()), (s2.weights(), s2.len())),
    })
}

/// Concatenates the two treatment sets, flipping the sign of the second set's treatments.
pub fn pool_treatment_sets(s1: &TreatmentSet, s2: &TreatmentSet) -> Result<PooledWSet> {
    check_sources(s1.source, s2.source)?;
    Ok(PooledWSet {
        features: stack_rows(&s1.features, &s2.features)?,
        w: signed_labels(&s1.treatments, &s2.treatments),
        weights: pooled_weights((s1.weights(), s1.len()), (s2.weights(), s2.len())),
    })
}

/// A jointly labeled sample `(x, t, y)` with an optional logged propensity `p(t=1|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    features: Vec<f64>,
    treatment: f64,
    outcome: f64,
    propensity: Option<f64>,
}

impl JointSample {
    pub fn new(features: Vec<f64>, treatment: f64, outcome: f64, propensity: Option<f64>) -> Result<Self> {
        if treatment != 1.0 && treatment != -1.0 {
            return invalid(format!("treatment must be -1 or +1, got {treatment}"));
        }
        if !outcome.is_finite() || features.iter().any(|v| !v.is_finite()) {
            return invalid("joint sample values must be finite");
        }
        if let Some(e) = propensity {
            if !(e > 0.0 && e < 1.0) {
                return invalid(format!("propensity must lie strictly inside (0, 1), got {e}"));
            }
        }
        Ok(Self {
            features,
            treatment,
            outcome,
            propensity,
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn treatment(&self) -> f64 {
        self.treatment
    }

    pub fn is_treated(&self) -> bool {
        self.treatment > 0.0
    }

    pub fn outcome(&self) -> f64 {
        self.outcome
    }

    pub fn propensity(&self) -> Option<f64> {
        self.propensity
    }
}

/// Stacks the feature vectors of joint samples into a row matrix.
pub fn feature_matrix(samples: &[JointSample]) -> Result<DMatrix<f64>> {
    let d = samples.first().map_or(0, |s| s.features.len());
    if let Some(s) = samples.iter().find(|s| s.features.len() != d) {
        return Err(UpliftError::DimensionMismatch {
            context: "joint sample features",
            expected: d,
            got: s.features.len(),
        });
    }
    Ok(DMatrix::from_fn(samples.len(), d, |i, j| samples[i].features[j]))
}

/// Probability of `t` under a policy given as `p(t=1|x)`.
fn policy_mass(p_treat: f64, t: f64) -> f64 {
    if t > 0.0 {
        p_treat
    } else {
        1.0 - p_treat
    }
}

/// Per-sample acceptance probabilities `q(x,t) / max q` with
/// `q = target(t|x) / original(t|x)`.
pub fn acceptance_probabilities<O, T>(joint: &[JointSample], original: O, target: T) -> Result<Vec<f64>>
where
    O: Fn(&[f64]) -> f64,
    T: Fn(&[f64]) -> f64,
{
    let mut ratios = Vec::with_capacity(joint.len());
    for s in joint {
        let p0 = original(s.features());
        if !(p0 > 0.0 && p0 < 1.0) {
            return invalid(format!("original policy must lie strictly inside (0, 1), got {p0}"));
        }
        let p1 = target(s.features());
        if !(0.0..=1.0).contains(&p1) {
            return invalid(format!("target policy must lie in [0, 1], got {p1}"));
        }
        ratios.push(policy_mass(p1, s.treatment) / policy_mass(p0, s.treatment));
    }
    let max = ratios.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return invalid("target policy assigns zero mass to every logged sample");
    }
    Ok(ratios.into_iter().map(|q| q / max).collect())
}

/// Resamples logged joint data so the accepted subset follows `target`.
///
/// Each sample is kept independently with probability proportional to
/// `target(t|x) / original(t|x)`, normalized by the dataset maximum. The
/// kept samples have their propensity replaced by `target(x)`.
pub fn subsample_by_policy<O, T>(joint: &[JointSample], original: O, target: T, seed: u64) -> Result<Vec<JointSample>>
where
    O: Fn(&[f64]) -> f64,
    T: Fn(&[f64]) -> f64,
{
    let accept = acceptance_probabilities(joint, &original, &target)?;
    let mut rng = seeded(seed);
    let mut kept = Vec::new();
    for (s, &a) in joint.iter().zip(&accept) {
        if rng.random::<f64>() < a {
            let e = target(s.features());
            let mut s = s.clone();
            s.propensity = (e > 0.0 && e < 1.0).then_some(e);
            kept.push(s);
        }
    }
    Ok(kept)
}

/// Randomly splits jointly labeled samples into an outcome-only half and a
/// treatment-only half. With an odd count the outcome half gets the extra sample.
pub fn split_separate_labels(joint: &[JointSample], source: Source, seed: u64) -> Result<(OutcomeSet, TreatmentSet)> {
    if joint.len() < 2 {
        return invalid(format!("splitting needs at least 2 samples, got {}", joint.len()));
    }
    let mut order: Vec<usize> = (0..joint.len()).collect();
    order.shuffle(&mut seeded(seed));
    let n_outcome = joint.len().div_ceil(2);
    let (out_idx, treat_idx) = order.split_at(n_outcome);

    let pick = |idx: &[usize]| -> Result<Vec<JointSample>> { Ok(idx.iter().map(|&i| joint[i].clone()).collect()) };
    let out = pick(out_idx)?;
    let treat = pick(treat_idx)?;

    let outcome_set = OutcomeSet::new(
        feature_matrix(&out)?,
        DVector::from_iterator(out.len(), out.iter().map(|s| s.outcome)),
        source,
    )?;
    let treatment_set = TreatmentSet::new(
        feature_matrix(&treat)?,
        DVector::from_iterator(treat.len(), treat.iter().map(|s| s.treatment)),
        source,
    )?;
    Ok((outcome_set, treatment_set))
}

/// Sets that can carry per-sample importance weights.
pub trait Reweightable: Sized {
    fn sample_count(&self) -> usize;
    fn replace_weights(self, weights: DVector<f64>) -> Result<Self>;
}

impl Reweightable for OutcomeSet {
    fn sample_count(&self) -> usize {
        self.len()
    }

    fn replace_weights(self, weights: DVector<f64>) -> Result<Self> {
        self.with_weights(weights)
    }
}

impl Reweightable for TreatmentSet {
    fn sample_count(&self) -> usize {
        self.len()
    }

    fn replace_weights(self, weights: DVector<f64>) -> Result<Self> {
        self.with_weights(weights)
    }
}

/// Attaches weights `(pooled / (2 n_k)) * ratio_i`, where `ratio_i = p(x_i)/p_k(x_i)`
/// is supplied by the caller and `pooled` is the size of both sets of the same
/// label kind combined (`n` or `ñ`).
pub fn attach_importance_weights<S: Reweightable>(set: S, pooled: usize, ratios: &[f64]) -> Result<S> {
    let n_k = set.sample_count();
    if ratios.len() != n_k {
        return Err(UpliftError::DimensionMismatch {
            context: "importance ratios",
            expected: n_k,
            got: ratios.len(),
        });
    }
    if n_k == 0 {
        return set.replace_weights(DVector::zeros(0));
    }
    if pooled < n_k {
        return invalid(format!("pooled size {pooled} is smaller than the set size {n_k}"));
    }
    if let Some(r) = ratios.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return invalid(format!("density ratios must be finite and nonnegative, got {r}"));
    }
    let scale = pooled as f64 / (2.0 * n_k as f64);
    set.replace_weights(DVector::from_iterator(n_k, ratios.iter().map(|r| scale * r)))
}
