//! Independent numerical oracles for the estimators and the evaluation metrics.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use uplift_core::data::{pool_outcome_sets, pool_treatment_sets, subsample_by_policy, JointSample};
use uplift_core::direct::{assemble_statistics, fit, solve_inner, HyperParams, Statistics};
use uplift_core::evaluation::{auuc, uplift_curve, uplift_curve_known};
use uplift_core::features::{fit_centers, GaussianBasis};
use uplift_core::rng::{seeded, UpliftRng};
use uplift_core::synthetic::{generate, outcome_prob, sample_features, SyntheticConfig};
use uplift_core::{PooledWSet, PooledZSet};

fn normal(rng: &mut UpliftRng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_stats(rng: &mut UpliftRng, bf: usize, bg: usize) -> Statistics {
    let a = DMatrix::from_fn(bf, bg, |_, _| normal(rng));
    let b = DVector::from_fn(bg, |_, _| normal(rng));
    let m = DMatrix::from_fn(bg + 2, bg, |_, _| normal(rng));
    Statistics::new(a, b, m.tr_mul(&m) / (bg + 2) as f64).unwrap()
}

/// Plain gradient ascent on the concave inner objective.
fn ascend(stats: &Statistics, alpha: &DVector<f64>, lambda_g: f64) -> DVector<f64> {
    let curvature = stats.c.clone().symmetric_eigenvalues().max() + lambda_g;
    let step = 0.5 / curvature;
    let mut beta = DVector::zeros(stats.g_size());
    for _ in 0..200_000 {
        let grad = 2.0 * stats.a.tr_mul(alpha) - 4.0 * &stats.b - 2.0 * (&stats.c * &beta) - 2.0 * lambda_g * &beta;
        if grad.norm() < 1e-13 {
            break;
        }
        beta += step * grad;
    }
    beta
}

#[test]
fn inner_solution_matches_gradient_ascent() {
    let mut rng = seeded(1);
    for _ in 0..5 {
        let stats = random_stats(&mut rng, 5, 5);
        let alpha = DVector::from_fn(5, |_, _| normal(&mut rng));
        let lambda_g = 0.1;
        let closed = solve_inner(&stats, &alpha, lambda_g).unwrap();
        let iterated = ascend(&stats, &alpha, lambda_g);
        assert!((&closed - &iterated).norm() <= 1e-8 * (1.0 + closed.norm()));
    }
}

#[test]
fn inner_solution_beats_random_critics() {
    let mut rng = seeded(2);
    let hyper = HyperParams {
        lambda_f: 1e-3,
        lambda_g: 1e-2,
        clip_binary: false,
    };
    for _ in 0..20 {
        let stats = random_stats(&mut rng, 6, 4);
        let alpha = DVector::from_fn(6, |_, _| normal(&mut rng));
        let beta = solve_inner(&stats, &alpha, hyper.lambda_g).unwrap();
        let best = stats.regularized_objective(&alpha, &beta, &hyper);
        for _ in 0..50 {
            let delta = DVector::from_fn(4, |_, _| normal(&mut rng));
            assert!(stats.regularized_objective(&alpha, &(&beta + delta), &hyper) <= best + 1e-12);
        }
    }
}

fn random_pooled(rng: &mut UpliftRng, n: usize, nt: usize) -> (PooledZSet, PooledWSet) {
    let sign = |rng: &mut UpliftRng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let zs = PooledZSet {
        features: DMatrix::from_fn(n, 2, |_, _| normal(rng)),
        z: DVector::from_fn(n, |_, _| sign(rng)),
        weights: DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5)),
    };
    let ws = PooledWSet {
        features: DMatrix::from_fn(nt, 2, |_, _| normal(rng)),
        w: DVector::from_fn(nt, |_, _| sign(rng)),
        weights: DVector::from_fn(nt, |_, _| rng.random_range(0.5..1.5)),
    };
    (zs, ws)
}

/// `(1/ñ)Σ r̃(2 w f g − g²/2) + (1/n)Σ r(−4 z g − g²/2)` with `f = αᵀφ`, `g = βᵀψ`.
fn term_by_term(
    zs: &PooledZSet,
    ws: &PooledWSet,
    bf: &GaussianBasis,
    bg: &GaussianBasis,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
) -> f64 {
    let eval = |basis: &GaussianBasis, coef: &DVector<f64>, x: Vec<f64>| -> f64 {
        (0..basis.size())
            .map(|l| {
                let d2: f64 = x
                    .iter()
                    .zip(basis.centers().row(l).iter())
                    .map(|(a, c)| (a - c).powi(2))
                    .sum();
                coef[l] * (-d2 / basis.bandwidth().powi(2)).exp()
            })
            .sum()
    };
    let row = |m: &DMatrix<f64>, i: usize| m.row(i).iter().copied().collect::<Vec<_>>();
    let mut treat = 0.0;
    for i in 0..ws.features.nrows() {
        let f = eval(bf, alpha, row(&ws.features, i));
        let g = eval(bg, beta, row(&ws.features, i));
        treat += ws.weights[i] * (2.0 * ws.w[i] * f * g - 0.5 * g * g);
    }
    let mut out = 0.0;
    for i in 0..zs.features.nrows() {
        let g = eval(bg, beta, row(&zs.features, i));
        out += zs.weights[i] * (-4.0 * zs.z[i] * g - 0.5 * g * g);
    }
    treat / ws.features.nrows() as f64 + out / zs.features.nrows() as f64
}

#[test]
fn quadratic_form_matches_term_by_term_sum() {
    let mut rng = seeded(3);
    for _ in 0..10 {
        let (zs, ws) = random_pooled(&mut rng, 40, 30);
        let bf = fit_centers(&ws.features, 6, 1.3, rng.random()).unwrap();
        let bg = fit_centers(&zs.features, 4, 0.9, rng.random()).unwrap();
        let stats = assemble_statistics(&zs, &ws, &bf, &bg).unwrap();
        let alpha = DVector::from_fn(6, |_, _| normal(&mut rng));
        let beta = DVector::from_fn(4, |_, _| normal(&mut rng));
        let quad = stats.objective(&alpha, &beta);
        let direct = term_by_term(&zs, &ws, &bf, &bg, &alpha, &beta);
        assert!(
            (quad - direct).abs() <= 1e-10 * (1.0 + direct.abs()),
            "{quad} vs {direct}"
        );
    }
}

#[test]
fn outer_solution_is_stationary_for_the_reduced_objective() {
    let mut rng = seeded(4);
    let (zs, ws) = random_pooled(&mut rng, 60, 60);
    let bf = fit_centers(&ws.features, 5, 1.0, 7).unwrap();
    let bg = fit_centers(&ws.features, 5, 1.0, 8).unwrap();
    let hyper = HyperParams {
        lambda_f: 1e-2,
        lambda_g: 1e-2,
        clip_binary: false,
    };
    let model = fit(&zs, &ws, &bf, &bg, hyper).unwrap();
    let stats = assemble_statistics(&zs, &ws, &bf, &bg).unwrap();
    let h = 1e-5;
    for k in 0..5 {
        let mut plus = model.alpha().clone();
        plus[k] += h;
        let mut minus = model.alpha().clone();
        minus[k] -= h;
        let slope = (stats.reduced_objective(&plus, &hyper).unwrap()
            - stats.reduced_objective(&minus, &hyper).unwrap())
            / (2.0 * h);
        assert!(slope.abs() < 1e-7, "coordinate {k}: slope {slope}");
    }
}

/// AUUC from the labeled-curve definition, recomputed from scratch at every cut.
fn brute_labeled_auuc(scores: &[f64], samples: &[JointSample]) -> f64 {
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut total = 0.0;
    let mut valid = 0;
    for m in 1..=n {
        let top = &order[..m];
        let arm = |treated: bool| {
            let ys: Vec<f64> = top
                .iter()
                .filter(|&&i| samples[i].is_treated() == treated)
                .map(|&i| samples[i].outcome())
                .collect();
            (!ys.is_empty()).then(|| ys.iter().sum::<f64>() / ys.len() as f64)
        };
        if let (Some(p), Some(q)) = (arm(true), arm(false)) {
            total += m as f64 / n as f64 * (p - q);
            valid += 1;
        }
    }
    total / valid as f64
}

#[test]
fn labeled_auuc_matches_brute_force() {
    let mut rng = seeded(5);
    for _ in 0..20 {
        let n = rng.random_range(4..40);
        let samples: Vec<JointSample> = (0..n)
            .map(|i| {
                let t = if i % 2 == 0 { 1.0 } else { -1.0 };
                JointSample::new(vec![0.0], t, rng.random_range(-1.0..1.0), None).unwrap()
            })
            .collect();
        let scores: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let lib = auuc(&uplift_curve(&scores, &samples, false, 0).unwrap()).unwrap();
        let oracle = brute_labeled_auuc(&scores, &samples);
        assert!((lib - oracle).abs() < 1e-12, "{lib} vs {oracle}");
    }
}

#[test]
fn ips_auuc_tracks_known_uplift_auuc() {
    // Non-randomized evaluation data: treatment probability depends on x.
    let config = SyntheticConfig::default();
    let mut rng = seeded(6);
    let mut gaps = Vec::new();
    for &n in &[500usize, 20_000] {
        let x = sample_features(n, &config, &mut rng);
        let mut samples = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for i in 0..n {
            let xi = vec![x[(i, 0)], x[(i, 1)]];
            let e = 0.2 + 0.6 / (1.0 + (-xi[1] / 3.0).exp());
            let t = if rng.random::<f64>() < e { 1.0 } else { -1.0 };
            let y = if rng.random::<f64>() < outcome_prob(&xi, t, 1.0, &config) {
                1.0
            } else {
                -1.0
            };
            truth.push(uplift_core::synthetic::true_uplift(&xi, &config));
            samples.push(JointSample::new(xi, t, y, Some(e)).unwrap());
        }
        let known = auuc(&uplift_curve_known(&truth, &truth, 0).unwrap()).unwrap();
        let ips = auuc(&uplift_curve(&truth, &samples, true, 0).unwrap()).unwrap();
        gaps.push((ips - known).abs());
    }
    assert!(gaps[1] < 0.02, "IPS gap at N=20000: {}", gaps[1]);
    assert!(gaps[1] < gaps[0], "IPS gap did not shrink: {gaps:?}");
}

#[test]
fn subsampling_follows_a_feature_dependent_target() {
    let mut rng = seeded(7);
    let n = 100_000;
    let joint: Vec<JointSample> = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            let t = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
            JointSample::new(vec![x], t, 0.0, Some(0.5)).unwrap()
        })
        .collect();
    let target = |x: &[f64]| if x[0] > 0.0 { 0.8 } else { 0.3 };
    let kept = subsample_by_policy(&joint, |_| 0.5, target, 11).unwrap();
    for (positive, rate) in [(true, 0.8), (false, 0.3)] {
        let side: Vec<&JointSample> = kept.iter().filter(|s| (s.features()[0] > 0.0) == positive).collect();
        let treated = side.iter().filter(|s| s.is_treated()).count() as f64 / side.len() as f64;
        let sigma = (rate * (1.0 - rate) / side.len() as f64).sqrt();
        assert!(
            (treated - rate).abs() <= 3.0 * sigma,
            "side {positive}: {treated} vs {rate}"
        );
        assert!(side.iter().all(|s| s.propensity() == Some(rate)));
    }
}

#[test]
fn pooling_generated_sets_keeps_every_row() {
    let data = generate(&SyntheticConfig::default().with_pooled_sizes(101, 99)).unwrap();
    let zs = pool_outcome_sets(&data.outcome_sets[0], &data.outcome_sets[1]).unwrap();
    let ws = pool_treatment_sets(&data.treatment_sets[0], &data.treatment_sets[1]).unwrap();
    assert_eq!(zs.features.nrows(), 101);
    assert_eq!(ws.features.nrows(), 99);
}
