//! Uplift curves, AUUC and the ranking objective.
//!
//! Samples are ranked by score (descending, seeded random tie-breaking). The
//! ordinate at cutoff `m` is `(m/N)(ȳ⁺_m − ȳ⁻_m)`, the difference of treated
//! and control mean outcomes among the top `m`, scaled by the treated fraction.
//! AUUC is the uniform mean of the ordinates over the cutoffs where both arms
//! are present.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::data::JointSample;
use crate::error::{invalid, Result, UpliftError};
use crate::rng::{derive_seed, seeded};

/// Tie-break seeds averaged to realize the random ranking.
pub const RANDOM_RANKING_SEEDS: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct UpliftCurve {
    /// `(fraction treated, estimated average uplift)` per cutoff.
    pub points: Vec<(f64, f64)>,
    /// Cutoffs where both arms were present in the top `m`.
    pub valid_mask: Vec<bool>,
}

impl UpliftCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.valid_mask.iter().filter(|v| !**v).count()
    }

    /// Writes `fraction_treated,avg_uplift,valid`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fraction_treated", "avg_uplift", "valid"])?;
        for (&(frac, value), &valid) in self.points.iter().zip(&self.valid_mask) {
            w.write_record([
                format!("{frac}"),
                format!("{value}"),
                if valid { "1".to_string() } else { "0".to_string() },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub auuc: f64,
    pub curve: UpliftCurve,
    pub mse: Option<f64>,
    pub clamp_count: usize,
}

/// What the curve ordinates are computed from.
#[derive(Debug, Clone, Copy)]
pub enum Evidence<'a> {
    /// Observed `(t, y)` labels, optionally inverse-propensity weighted.
    Labeled { samples: &'a [JointSample], ips: bool },
    /// Known individual uplift per sample; the ordinate at `m` is `(1/N) Σ_{top m} u`.
    Known(&'a [f64]),
}

impl Evidence<'_> {
    fn len(&self) -> usize {
        match self {
            Evidence::Labeled { samples, .. } => samples.len(),
            Evidence::Known(u) => u.len(),
        }
    }
}

/// Descending-score order with ties broken by a seeded shuffle.
pub fn rank_order(scores: &[f64], seed: u64) -> Result<Vec<usize>> {
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return invalid(format!("scores must not be NaN, got {s}"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(&mut seeded(seed));
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(order)
}

fn labeled_curve(order: &[usize], samples: &[JointSample], ips: bool) -> Result<UpliftCurve> {
    let n = samples.len();
    let (mut treated, mut control) = (0usize, 0usize);
    for s in samples {
        if s.is_treated() {
            treated += 1;
        } else {
            control += 1;
        }
    }
    if treated == 0 || control == 0 {
        return invalid("uplift curve needs at least one treated and one control sample");
    }
    let mut sums = [0.0f64; 4]; // treated y·w, treated w, control y·w, control w
    let mut points = Vec::with_capacity(n);
    let mut valid_mask = Vec::with_capacity(n);
    for (m, &i) in order.iter().enumerate() {
        let s = &samples[i];
        let weight = if ips {
            let e = s
                .propensity()
                .ok_or_else(|| UpliftError::InvalidInput("IPS curve needs a propensity on every sample".into()))?;
            if s.is_treated() {
                1.0 / e
            } else {
                1.0 / (1.0 - e)
            }
        } else {
            1.0
        };
        let slot = if s.is_treated() { 0 } else { 2 };
        sums[slot] += weight * s.outcome();
        sums[slot + 1] += weight;
        let frac = (m + 1) as f64 / n as f64;
        let valid = sums[1] > 0.0 && sums[3] > 0.0;
        let value = if valid {
            frac * (sums[0] / sums[1] - sums[2] / sums[3])
        } else {
            0.0
        };
        points.push((frac, value));
        valid_mask.push(valid);
    }
    Ok(UpliftCurve { points, valid_mask })
}

fn known_curve(order: &[usize], uplift: &[f64]) -> UpliftCurve {
    let n = uplift.len() as f64;
    let mut acc = 0.0;
    let points = order
        .iter()
        .enumerate()
        .map(|(m, &i)| {
            acc += uplift[i];
            ((m + 1) as f64 / n, acc / n)
        })
        .collect();
    UpliftCurve {
        points,
        valid_mask: vec![true; uplift.len()],
    }
}

/// Uplift curve from any evidence kind.
pub fn curve_from(scores: &[f64], evidence: Evidence<'_>, seed: u64) -> Result<UpliftCurve> {
    if scores.len() != evidence.len() {
        return Err(UpliftError::DimensionMismatch {
            context: "uplift curve scores",
            expected: evidence.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return invalid("uplift curve needs at least one sample");
    }
    let order = rank_order(scores, seed)?;
    match evidence {
        Evidence::Labeled { samples, ips } => labeled_curve(&order, samples, ips),
        Evidence::Known(u) => Ok(known_curve(&order, u)),
    }
}

/// Uplift curve from jointly labeled test samples.
pub fn uplift_curve(scores: &[f64], samples: &[JointSample], ips: bool, seed: u64) -> Result<UpliftCurve> {
    curve_from(scores, Evidence::Labeled { samples, ips }, seed)
}

/// Uplift curve from known individual uplifts.
pub fn uplift_curve_known(scores: &[f64], uplift: &[f64], seed: u64) -> Result<UpliftCurve> {
    curve_from(scores, Evidence::Known(uplift), seed)
}

/// Mean of the valid curve ordinates.
pub fn auuc(curve: &UpliftCurve) -> Result<f64> {
    let (sum, count) = curve
        .points
        .iter()
        .zip(&curve.valid_mask)
        .filter(|(_, v)| **v)
        .fold((0.0, 0usize), |(s, c), (p, _)| (s + p.1, c + 1));
    if count == 0 {
        return invalid("uplift curve has no valid cutoffs");
    }
    Ok(sum / count as f64)
}

/// `2 (AUUC(f) − AUUC(r))`, where `r` is the random ranking: constant scores
/// averaged over [`RANDOM_RANKING_SEEDS`] tie-break seeds derived from `seed`.
pub fn rank_objective(scores: &[f64], evidence: Evidence<'_>, seed: u64) -> Result<f64> {
    let model = auuc(&curve_from(scores, evidence, seed)?)?;
    let flat = vec![0.0; scores.len()];
    let mut random = 0.0;
    for k in 0..RANDOM_RANKING_SEEDS {
        random += auuc(&curve_from(&flat, evidence, derive_seed(seed, k))?)?;
    }
    Ok(2.0 * (model - random / RANDOM_RANKING_SEEDS as f64))
}

pub fn mse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(UpliftError::DimensionMismatch {
            context: "mse",
            expected: truth.len(),
            got: predictions.len(),
        });
    }
    if truth.is_empty() {
        return invalid("mse of empty vectors");
    }
    let sum: f64 = predictions.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / truth.len() as f64)
}

/// AUUC on labeled samples plus MSE against known uplift, when available.
pub fn evaluate(
    scores: &[f64],
    samples: &[JointSample],
    truth: Option<&[f64]>,
    ips: bool,
    clamp_count: usize,
    seed: u64,
) -> Result<EvalResult> {
    let curve = uplift_curve(scores, samples, ips, seed)?;
    Ok(EvalResult {
        auuc: auuc(&curve)?,
        mse: truth.map(|t| mse(scores, t)).transpose()?,
        curve,
        clamp_count,
    })
}
