//! Exit criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p uplift-core --test acceptance -- --nocapture --test-threads=1`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use uplift_core::data::{
    attach_importance_weights, pool_outcome_sets, pool_treatment_sets, subsample_by_policy, JointSample, PooledWSet,
    PooledZSet, Source,
};
use uplift_core::direct::{fit, solve_inner, HyperParams, Statistics};
use uplift_core::evaluation::{auuc, uplift_curve, uplift_curve_known};
use uplift_core::features::GaussianBasis;
use uplift_core::methods::{fit_minmax, fit_predict, Method, MethodParams, TrainingSets};
use uplift_core::rng::{derive_seed, seeded};
use uplift_core::synthetic::{
    generate, outcome_prob, policy_prob, sample_features, sample_joint, SyntheticConfig, SyntheticData,
};

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed <= limit;
    let ok = pass && in_time;
    println!(
        "[{}] criterion {id}: {name} | {detail} | {:.2}s (limit {:.0}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64(),
    );
    ok
}

fn constant_basis() -> GaussianBasis {
    GaussianBasis::new(DMatrix::zeros(1, 1), 1e150).unwrap()
}

fn sets(data: &SyntheticData) -> TrainingSets<'_> {
    TrainingSets {
        outcomes: [&data.outcome_sets[0], &data.outcome_sets[1]],
        treatments: [&data.treatment_sets[0], &data.treatment_sets[1]],
    }
}

fn synthetic(b_offset: f64, n: usize, seed: u64) -> SyntheticData {
    let config = SyntheticConfig {
        b_offset,
        seed,
        ..SyntheticConfig::default()
    }
    .with_pooled_sizes(n, n);
    generate(&config).unwrap()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (m, var.sqrt())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn criterion_01_scalar_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = seeded(101);
    let basis = constant_basis();
    let hyper = HyperParams {
        lambda_f: 1e-12,
        lambda_g: 1e-12,
        clip_binary: false,
    };
    let mut worst = 0.0f64;
    let mut datasets = 0;
    while datasets < 100 {
        let n = rng.random_range(5..60);
        let nt = rng.random_range(5..60);
        let bias: f64 = rng.random_range(-0.9..0.9);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..nt)
            .map(|_| {
                if rng.random::<f64>() < 0.5 * (1.0 + bias) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let mean_z = z.iter().sum::<f64>() / n as f64;
        let mean_w = w.iter().sum::<f64>() / nt as f64;
        if mean_w.abs() <= 0.1 {
            continue;
        }
        datasets += 1;
        let zs = PooledZSet {
            features: DMatrix::from_fn(n, 1, |i, _| i as f64),
            z: DVector::from_vec(z),
            weights: DVector::repeat(n, 1.0),
        };
        let ws = PooledWSet {
            features: DMatrix::from_fn(nt, 1, |i, _| -(i as f64)),
            w: DVector::from_vec(w),
            weights: DVector::repeat(nt, 1.0),
        };
        let model = fit(&zs, &ws, &basis, &basis, hyper).unwrap();
        let oracle = 2.0 * mean_z / mean_w;
        let rel = (model.alpha()[0] - oracle).abs() / oracle.abs().max(1e-300);
        worst = worst.max(rel);
    }
    let pass = worst <= 1e-6;
    assert!(report(
        1,
        "scalar-oracle equivalence",
        pass,
        &format!("100 datasets, max relative error {worst:.2e} (tol 1e-6)"),
        start.elapsed(),
        Duration::from_secs(1),
    ));
}

#[test]
fn criterion_02_inner_stationarity() {
    let start = Instant::now();
    let mut rng = seeded(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let bf = rng.random_range(1..=20);
        let bg = rng.random_range(1..=20);
        let k = rng.random_range(1..=30);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = DMatrix::from_fn(bf, bg, |_, _| normal());
        let b = DVector::from_fn(bg, |_, _| normal());
        let m = DMatrix::from_fn(k, bg, |_, _| normal());
        let c = m.tr_mul(&m) / k as f64;
        let alpha = DVector::from_fn(bf, |_, _| normal());
        let lambda_g = 10f64.powf(rng.random_range(-3.0..0.0));
        let stats = Statistics::new(a, b.clone(), c).unwrap();
        let beta = solve_inner(&stats, &alpha, lambda_g).unwrap();
        let grad = stats.inner_gradient(&alpha, &beta, lambda_g);
        worst = worst.max(grad.norm() / (1.0 + b.norm()));
    }
    let pass = worst <= 1e-8;
    assert!(report(
        2,
        "inner-solution stationarity",
        pass,
        &format!("100 instances, max ‖∇‖/(1+‖b‖) = {worst:.2e} (tol 1e-8)"),
        start.elapsed(),
        Duration::from_secs(1),
    ));
}

#[test]
fn criterion_03_saddle_probe() {
    let start = Instant::now();
    let params = MethodParams::default();
    let mut rng = seeded(303);
    let mut violations = 0;
    let mut probes = 0;
    let mut min_gap = f64::INFINITY;
    for seed in 0..3u64 {
        let data = synthetic(5.0, 1000, derive_seed(303, seed));
        let model = fit_minmax(&sets(&data), &params, seed).unwrap();
        let zs = pool_outcome_sets(&data.outcome_sets[0], &data.outcome_sets[1]).unwrap();
        let ws = pool_treatment_sets(&data.treatment_sets[0], &data.treatment_sets[1]).unwrap();
        let stats = uplift_core::direct::assemble_statistics(&zs, &ws, model.basis_f(), model.basis_g()).unwrap();
        let at_opt = stats.reduced_objective(model.alpha(), model.hyper()).unwrap();
        for _ in 0..100 {
            let dir = DVector::from_fn(model.alpha().len(), |_, _| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v
            });
            let radius: f64 = rng.random_range(0.0..1.0f64).max(1e-3);
            let delta = dir.normalize() * radius;
            let probe = stats
                .reduced_objective(&(model.alpha() + delta), model.hyper())
                .unwrap();
            probes += 1;
            let gap = probe - at_opt;
            min_gap = min_gap.min(gap);
            if gap < -1e-12 * (1.0 + at_opt.abs()) {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    assert!(report(
        3,
        "saddle probe",
        pass,
        &format!("{probes} probes on 3 synthetic fits, {violations} violations, min gap {min_gap:.3e}"),
        start.elapsed(),
        Duration::from_secs(10),
    ));
}

#[test]
fn criterion_04_mse_rate() {
    let start = Instant::now();
    let params = MethodParams::default();
    let grid = [250usize, 500, 1000, 2000, 4000];
    let mut medians = Vec::new();
    for &n in &grid {
        let mut mses = Vec::new();
        for s in 0..20u64 {
            let seed = derive_seed(404, (n as u64) << 8 | s);
            let data = synthetic(5.0, n, seed);
            let out = fit_predict(Method::MinMax, &sets(&data), &data.holdout_features(), &params, seed).unwrap();
            mses.push(uplift_core::evaluation::mse(out.predictions.as_slice(), &data.holdout_uplift).unwrap());
        }
        medians.push(median(&mut mses));
    }
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let pass = slope <= -0.25 && decreasing;
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.4}")).collect();
    assert!(report(
        4,
        "MSE rate on b=5",
        pass,
        &format!(
            "median MSE [{}] for n = {grid:?}; log-log slope {slope:.3} (need <= -0.25), strictly decreasing: {decreasing}",
            shown.join(", ")
        ),
        start.elapsed(),
        Duration::from_secs(300),
    ));
}

#[test]
fn criterion_05_policy_gap_sweep() {
    let start = Instant::now();
    let params = MethodParams::default();
    let gaps = [0.4, 0.8, 2.0, 4.0, 8.0];
    let seeds = 50u64;
    // auuc[gap][method][seed]
    let mut table = vec![vec![Vec::new(); Method::ALL.len()]; gaps.len()];
    for (gi, &b) in gaps.iter().enumerate() {
        for s in 0..seeds {
            let seed = derive_seed(505, (gi as u64) << 16 | s);
            let data = synthetic(b, 2000, seed);
            let test = data.holdout_features();
            for (mi, &method) in Method::ALL.iter().enumerate() {
                let out = fit_predict(method, &sets(&data), &test, &params, seed).unwrap();
                let curve = uplift_curve(out.predictions.as_slice(), &data.holdout, false, seed).unwrap();
                table[gi][mi].push(auuc(&curve).unwrap());
            }
        }
    }
    let mut lines = Vec::new();
    let summary: Vec<Vec<(f64, f64)>> = table
        .iter()
        .map(|per_method| {
            per_method
                .iter()
                .map(|v| {
                    let (m, sd) = mean_sd(v);
                    (m, sd / (v.len() as f64).sqrt())
                })
                .collect()
        })
        .collect();
    for (gi, &b) in gaps.iter().enumerate() {
        let cells: Vec<String> = Method::ALL
            .iter()
            .enumerate()
            .map(|(mi, m)| format!("{m}={:.4}±{:.4}", summary[gi][mi].0, summary[gi][mi].1))
            .collect();
        lines.push(format!("b={b}: {}", cells.join(" ")));
    }
    // (a) at b = 8 the three means agree within 10% relative.
    let at8: Vec<f64> = summary[4].iter().map(|c| c.0).collect();
    let hi = at8.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = at8.iter().cloned().fold(f64::INFINITY, f64::min);
    let part_a = hi > 0.0 && (hi - lo) / hi.abs() <= 0.10;
    // (b) at small gaps minmax beats each baseline by more than two standard errors.
    let mut part_b = true;
    for gi in [0usize, 1] {
        let (mm, mm_se) = summary[gi][0];
        for mi in 1..Method::ALL.len() {
            let (bm, b_se) = summary[gi][mi];
            let se = (mm_se * mm_se + b_se * b_se).sqrt();
            if !(mm >= bm && mm - bm > 2.0 * se) {
                part_b = false;
            }
        }
    }
    for l in &lines {
        println!("    {l}");
    }
    let ok = report(
        5,
        "policy-gap sweep shape",
        part_a && part_b,
        &format!(
            "(a) b=8 spread {:.1}% (need <= 10%): {part_a}; (b) minmax ahead by > 2 SE at b in {{0.4, 0.8}}: {part_b}",
            100.0 * (hi - lo) / hi.abs()
        ),
        start.elapsed(),
        Duration::from_secs(900),
    );
    assert!(ok, "{}", lines.join("\n"));
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Independent AUUC for known uplift: `(1/N²) Σ_i u_i (N + 1 − rank_i)` with rank 1 = top score.
fn brute_auuc(scores: &[f64], u: &[f64]) -> f64 {
    let n = u.len();
    let mut total = 0.0;
    for i in 0..n {
        let rank = 1 + (0..n).filter(|&j| scores[j] > scores[i]).count();
        total += u[i] * (n + 1 - rank) as f64;
    }
    total / (n * n) as f64
}

#[test]
fn criterion_06_auuc_permutation_oracle() {
    let start = Instant::now();
    let mut rng = seeded(606);
    let mut mismatches = 0;
    let mut instances = 0;
    let mut max_dev = 0.0f64;
    for n in 2..=8usize {
        for _ in 0..5 {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let at_truth = auuc(&uplift_curve_known(&u, &u, 1).unwrap()).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::NEG_INFINITY;
            loop {
                let scores: Vec<f64> = perm.iter().map(|&r| r as f64).collect();
                let lib = auuc(&uplift_curve_known(&scores, &u, 1).unwrap()).unwrap();
                let oracle = brute_auuc(&scores, &u);
                max_dev = max_dev.max((lib - oracle).abs());
                best = best.max(oracle);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            instances += 1;
            if (at_truth - best).abs() > 1e-12 || at_truth < best - 1e-12 {
                mismatches += 1;
            }
        }
    }
    let pass = mismatches == 0 && max_dev <= 1e-12;
    assert!(report(
        6,
        "AUUC permutation oracle",
        pass,
        &format!("{instances} instances N=2..8, {mismatches} where f=u is not the maximizer, max |library − oracle| {max_dev:.1e}"),
        start.elapsed(),
        Duration::from_secs(10),
    ));
}

#[test]
fn criterion_07_random_ranking_identity() {
    let start = Instant::now();
    let data = synthetic(5.0, 10, 707);
    let u = &data.holdout_uplift;
    let flat = vec![0.0; u.len()];
    let values: Vec<f64> = (0..500u64)
        .map(|s| auuc(&uplift_curve_known(&flat, u, derive_seed(707, s)).unwrap()).unwrap())
        .collect();
    let (m, sd) = mean_sd(&values);
    let se = sd / (values.len() as f64).sqrt();
    let target = u.iter().sum::<f64>() / u.len() as f64 / 2.0;
    let pass = (m - target).abs() <= 3.0 * se;
    assert!(report(
        7,
        "random-ranking identity",
        pass,
        &format!(
            "mean AUUC {m:.6} vs mean(u)/2 {target:.6}, |diff| {:.2e}, 3σ {:.2e}",
            (m - target).abs(),
            3.0 * se
        ),
        start.elapsed(),
        Duration::from_secs(10),
    ));
}

#[test]
fn criterion_08_weighted_average_unbiasedness() {
    let start = Instant::now();
    let config = SyntheticConfig {
        b_offset: 2.0,
        ..SyntheticConfig::default()
    };
    let f = |x: &[f64]| (x[0] / 3.0).tanh() + 0.5;
    let g = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1]) / 50.0).exp() + 0.2 * x[1].sin();
    let (n1, n2) = (300usize, 100usize);
    let n = n1 + n2;
    let mut rng = seeded(808);

    let mut reps = [Vec::new(), Vec::new(), Vec::new()];
    for _ in 0..200 {
        let o1 = sample_joint(Source::First, n1, &config, &mut rng).unwrap();
        let o2 = sample_joint(Source::Second, n2, &config, &mut rng).unwrap();
        let t1 = sample_joint(Source::First, n1, &config, &mut rng).unwrap();
        let t2 = sample_joint(Source::Second, n2, &config, &mut rng).unwrap();
        let to_outcome = |s: &[JointSample], src| {
            uplift_core::OutcomeSet::new(
                DMatrix::from_fn(s.len(), 2, |i, j| s[i].features()[j]),
                DVector::from_fn(s.len(), |i, _| s[i].outcome()),
                src,
            )
            .unwrap()
        };
        let to_treatment = |s: &[JointSample], src| {
            uplift_core::TreatmentSet::new(
                DMatrix::from_fn(s.len(), 2, |i, j| s[i].features()[j]),
                DVector::from_fn(s.len(), |i, _| s[i].treatment()),
                src,
            )
            .unwrap()
        };
        let ones = |k| vec![1.0; k];
        let zs = pool_outcome_sets(
            &attach_importance_weights(to_outcome(&o1, Source::First), n, &ones(n1)).unwrap(),
            &attach_importance_weights(to_outcome(&o2, Source::Second), n, &ones(n2)).unwrap(),
        )
        .unwrap();
        let ws = pool_treatment_sets(
            &attach_importance_weights(to_treatment(&t1, Source::First), n, &ones(n1)).unwrap(),
            &attach_importance_weights(to_treatment(&t2, Source::Second), n, &ones(n2)).unwrap(),
        )
        .unwrap();
        let row = |m: &DMatrix<f64>, i: usize| [m[(i, 0)], m[(i, 1)]];
        let (mut wfg, mut zg, mut gz2, mut gw2) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..ws.len() {
            let x = row(&ws.features, i);
            wfg += ws.weights[i] * ws.w[i] * f(&x) * g(&x);
            gw2 += ws.weights[i] * g(&x).powi(2);
        }
        for i in 0..zs.len() {
            let x = row(&zs.features, i);
            zg += zs.weights[i] * zs.z[i] * g(&x);
            gz2 += zs.weights[i] * g(&x).powi(2);
        }
        reps[0].push(wfg / ws.len() as f64);
        reps[1].push(zg / zs.len() as f64);
        reps[2].push(gz2 / (2.0 * zs.len() as f64) + gw2 / (2.0 * ws.len() as f64));
    }

    // Direct draws from p(x, z) and p(x, w): pick k uniformly, then sign-flip its label.
    let draws = 400_000;
    let x = sample_features(draws, &config, &mut rng);
    let mut direct = [
        Vec::with_capacity(draws),
        Vec::with_capacity(draws),
        Vec::with_capacity(draws),
    ];
    for i in 0..draws {
        let xi = [x[(i, 0)], x[(i, 1)]];
        let source = if rng.random::<bool>() {
            Source::First
        } else {
            Source::Second
        };
        let t = if rng.random::<f64>() < policy_prob(source, &xi, &config) {
            1.0
        } else {
            -1.0
        };
        let y = if rng.random::<f64>() < outcome_prob(&xi, t, 1.0, &config) {
            1.0
        } else {
            -1.0
        };
        let sign = source.sign();
        direct[0].push(sign * t * f(&xi) * g(&xi));
        direct[1].push(sign * y * g(&xi));
        direct[2].push(g(&xi).powi(2));
    }

    let names = ["w·f·g", "z·g", "g²"];
    let mut pass = true;
    let mut details = Vec::new();
    for k in 0..3 {
        let (rm, rsd) = mean_sd(&reps[k]);
        let (dm, dsd) = mean_sd(&direct[k]);
        let se = ((rsd * rsd) / reps[k].len() as f64 + (dsd * dsd) / draws as f64).sqrt();
        let ok = (rm - dm).abs() <= 3.0 * se;
        pass &= ok;
        details.push(format!(
            "{}: {rm:.5} vs {dm:.5} ({:.1} SE)",
            names[k],
            (rm - dm).abs() / se
        ));
    }
    assert!(report(
        8,
        "weighted-average unbiasedness (n1 = 3 n2)",
        pass,
        &details.join("; "),
        start.elapsed(),
        Duration::from_secs(30),
    ));
}

#[test]
fn criterion_09_policy_subsampling() {
    let start = Instant::now();
    let config = SyntheticConfig::default();
    let mut rng = seeded(909);
    let n = 100_000;
    let x = sample_features(n, &config, &mut rng);
    let joint: Vec<JointSample> = (0..n)
        .map(|i| {
            let xi = vec![x[(i, 0)], x[(i, 1)]];
            let t = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
            let y = if rng.random::<f64>() < outcome_prob(&xi, t, 1.0, &config) {
                1.0
            } else {
                -1.0
            };
            JointSample::new(xi, t, y, Some(0.5)).unwrap()
        })
        .collect();
    let kept = subsample_by_policy(&joint, |_| 0.5, |_| 0.75, 9090).unwrap();
    let m = kept.len() as f64;
    let treated: Vec<&JointSample> = kept.iter().filter(|s| s.is_treated()).collect();
    let control: Vec<&JointSample> = kept.iter().filter(|s| !s.is_treated()).collect();
    let rate = treated.len() as f64 / m;
    let rate_sigma = (0.75 * 0.25 / m).sqrt();
    let rate_ok = (rate - 0.75).abs() <= 3.0 * rate_sigma;

    // x is symmetric about 0, so p(y=1|t) = E[σ(a_tᵀx)] = 1/2 in both arms.
    let freq = |arm: &[&JointSample]| arm.iter().filter(|s| s.outcome() > 0.0).count() as f64 / arm.len() as f64;
    let arm_ok = |arm: &[&JointSample]| (freq(arm) - 0.5).abs() <= 3.0 * (0.25 / arm.len() as f64).sqrt();
    let pass = rate_ok && arm_ok(&treated) && arm_ok(&control);
    assert!(report(
        9,
        "policy subsampling",
        pass,
        &format!(
            "kept {} of {n}; treated rate {rate:.4} (target 0.75 ± {:.4}); p(y=1|t=+1) {:.4}, p(y=1|t=-1) {:.4} (truth 0.5)",
            kept.len(),
            3.0 * rate_sigma,
            freq(&treated),
            freq(&control)
        ),
        start.elapsed(),
        Duration::from_secs(5),
    ));
}

#[test]
fn criterion_10_binary_range_clipping() {
    let start = Instant::now();
    let mut clipped_in_range = true;
    let mut raw_escapes = 0;
    let mut raw_extreme = 0.0f64;
    for s in 0..10u64 {
        let data = synthetic(5.0, 100, derive_seed(1010, s));
        let test = data.holdout_features();
        let mut params = MethodParams::default();
        params.hyper.clip_binary = false;
        let raw = fit_predict(Method::MinMax, &sets(&data), &test, &params, s).unwrap();
        params.hyper.clip_binary = true;
        let clipped = fit_predict(Method::MinMax, &sets(&data), &test, &params, s).unwrap();
        clipped_in_range &= clipped.predictions.iter().all(|v| (-2.0..=2.0).contains(v));
        let extreme = raw.predictions.amax();
        raw_extreme = raw_extreme.max(extreme);
        if extreme > 2.0 {
            raw_escapes += 1;
        }
    }
    let pass = clipped_in_range && raw_escapes > 0;
    assert!(report(
        10,
        "binary-range clipping",
        pass,
        &format!(
            "clipped predictions within [-2, 2]: {clipped_in_range}; unclipped fits leaving the range: {raw_escapes}/10 (max |û| {raw_extreme:.2})"
        ),
        start.elapsed(),
        Duration::from_secs(30),
    ));
}
