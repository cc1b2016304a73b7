//! The policy-gap / sample-size sweep.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use uplift_core::evaluation::{evaluate, UpliftCurve};
use uplift_core::methods::fit_predict;
use uplift_core::rng::derive_seed;
use uplift_core::synthetic::generate;
use uplift_core::{FitDiagnostics, Method, SyntheticConfig, TrainingSets};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Identifies one trial: a method run on one generated instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialKey {
    pub method: Method,
    pub b_offset: f64,
    pub n: usize,
    pub n_tilde: usize,
    pub seed: u64,
}

impl TrialKey {
    fn fields(&self) -> [String; 5] {
        [
            self.method.name().to_string(),
            self.b_offset.to_string(),
            self.n.to_string(),
            self.n_tilde.to_string(),
            self.seed.to_string(),
        ]
    }

    fn file_stem(&self) -> String {
        format!(
            "{}_b{}_n{}_nt{}_s{}",
            self.method, self.b_offset, self.n, self.n_tilde, self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub key: TrialKey,
    pub auuc: f64,
    pub mse: f64,
    pub clamp_count: usize,
    pub wall_ms: u128,
    pub curve: UpliftCurve,
    pub diagnostics: Option<FitDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub key: TrialKey,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub failures: Vec<TrialFailure>,
}

/// Seed owned by one generated instance; independent of grid order and thread count.
pub fn instance_seed(base: u64, b_offset: f64, n: usize, n_tilde: usize, seed: u64) -> u64 {
    let s = derive_seed(base, seed);
    let s = derive_seed(s, b_offset.to_bits());
    let s = derive_seed(s, n as u64);
    derive_seed(s, n_tilde as u64)
}

fn run_cell(cfg: &ExperimentConfig, b_offset: f64, n: usize, n_tilde: usize, seed: u64) -> ExperimentReport {
    let mut report = ExperimentReport::default();
    let key = |method| TrialKey {
        method,
        b_offset,
        n,
        n_tilde,
        seed,
    };
    let instance = instance_seed(cfg.base_seed, b_offset, n, n_tilde, seed);
    let synthetic = SyntheticConfig {
        b_offset,
        seed: instance,
        ..cfg.synthetic.clone()
    }
    .with_pooled_sizes(n, n_tilde);
    let data = match generate(&synthetic) {
        Ok(d) => d,
        Err(e) => {
            for &m in &cfg.methods {
                report.failures.push(TrialFailure {
                    key: key(m),
                    error: format!("data generation: {e}"),
                });
            }
            return report;
        }
    };
    let sets = TrainingSets {
        outcomes: [&data.outcome_sets[0], &data.outcome_sets[1]],
        treatments: [&data.treatment_sets[0], &data.treatment_sets[1]],
    };
    let test = data.holdout_features();
    for &method in &cfg.methods {
        let start = Instant::now();
        let result = fit_predict(method, &sets, &test, &cfg.params, instance).and_then(|out| {
            let elapsed = start.elapsed().as_millis();
            let eval = evaluate(
                out.predictions.as_slice(),
                &data.holdout,
                Some(&data.holdout_uplift),
                cfg.ips,
                out.clamp_count,
                instance,
            )?;
            Ok((out, eval, elapsed))
        });
        match result {
            Ok((out, eval, elapsed)) => {
                if let Some(d) = out.diagnostics.filter(|d| d.degenerate()) {
                    log::warn!(
                        "{}: degenerate fit (inner condition {:.3e}, outer condition {:.3e}, policy contrast p = {:.3e})",
                        key(method).file_stem(),
                        d.inner_condition,
                        d.outer_condition,
                        d.contrast.p_value
                    );
                }
                report.rows.push(TrialRow {
                    key: key(method),
                    auuc: eval.auuc,
                    mse: eval.mse.unwrap_or(f64::NAN),
                    clamp_count: eval.clamp_count,
                    wall_ms: if cfg.timing { elapsed } else { 0 },
                    curve: eval.curve,
                    diagnostics: out.diagnostics,
                });
            }
            Err(e) => {
                log::error!("{}: {e}", key(method).file_stem());
                report.failures.push(TrialFailure {
                    key: key(method),
                    error: e.to_string(),
                });
            }
        }
    }
    report
}

/// Runs every `(b, n, ñ, seed)` cell in parallel; results come back in grid order.
pub fn run_trials(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", cfg.jobs)))?;
    let cells = cfg.cells();
    let parts: Vec<ExperimentReport> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(b, n, nt, s)| run_cell(cfg, b, n, nt, s))
            .collect()
    });
    let mut report = ExperimentReport::default();
    for p in parts {
        report.rows.extend(p.rows);
        report.failures.extend(p.failures);
    }
    Ok(report)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

const KEY_HEADER: [&str; 5] = ["method", "b_offset", "n", "n_tilde", "seed"];

/// Writes summary, diagnostics, failures, metadata and (optionally) curve files.
pub fn write_report(cfg: &ExperimentConfig, report: &ExperimentReport) -> CliResult<()> {
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(format!("cannot create {}", out.display()), e))?;

    let mut summary = csv::Writer::from_writer(create(&out.join("summary.csv"))?);
    let mut header = KEY_HEADER.to_vec();
    header.extend(["auuc", "mse", "clamp_count", "wall_ms"]);
    summary.write_record(&header)?;
    for row in &report.rows {
        let mut rec = row.key.fields().to_vec();
        rec.extend([
            row.auuc.to_string(),
            row.mse.to_string(),
            row.clamp_count.to_string(),
            row.wall_ms.to_string(),
        ]);
        summary.write_record(&rec)?;
    }
    summary.flush().map_err(|e| CliError::io("writing summary.csv", e))?;

    let mut diag = csv::Writer::from_writer(create(&out.join("diagnostics.csv"))?);
    let mut header = KEY_HEADER.to_vec();
    header.extend([
        "inner_condition",
        "outer_condition",
        "contrast_snr",
        "contrast_dof",
        "contrast_p_value",
        "degenerate",
    ]);
    diag.write_record(&header)?;
    for row in &report.rows {
        if let Some(d) = &row.diagnostics {
            let mut rec = row.key.fields().to_vec();
            rec.extend([
                d.inner_condition.to_string(),
                d.outer_condition.to_string(),
                d.contrast.snr.to_string(),
                d.contrast.dof.to_string(),
                d.contrast.p_value.to_string(),
                d.degenerate().to_string(),
            ]);
            diag.write_record(&rec)?;
        }
    }
    diag.flush().map_err(|e| CliError::io("writing diagnostics.csv", e))?;

    let mut fail = csv::Writer::from_writer(create(&out.join("failures.csv"))?);
    let mut header = KEY_HEADER.to_vec();
    header.push("error");
    fail.write_record(&header)?;
    for f in &report.failures {
        let mut rec = f.key.fields().to_vec();
        rec.push(f.error.clone());
        fail.write_record(&rec)?;
    }
    fail.flush().map_err(|e| CliError::io("writing failures.csv", e))?;

    write_metadata(cfg, &out.join("metadata.csv"))?;

    if cfg.curves {
        let dir = out.join("curves");
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        for row in &report.rows {
            let path = dir.join(format!("{}.csv", row.key.file_stem()));
            row.curve.write_csv(create(&path)?)?;
        }
    }
    Ok(())
}

/// Every effective setting plus the instance seed of each cell.
pub fn write_metadata(cfg: &ExperimentConfig, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["key", "value"])?;
    w.write_record(["version", env!("CARGO_PKG_VERSION")])?;
    for (k, v) in cfg.describe() {
        w.write_record([k, v])?;
    }
    if cfg.mode == crate::config::Mode::Experiment {
        for (b, n, nt, s) in cfg.cells() {
            w.write_record([
                format!("instance_seed/b={b}/n={n}/n_tilde={nt}/seed={s}"),
                instance_seed(cfg.base_seed, b, n, nt, s).to_string(),
            ])?;
        }
    }
    w.flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

/// Runs the sweep and writes its outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let report = run_trials(cfg)?;
    write_report(cfg, &report)?;
    log::info!(
        "{} trials succeeded, {} failed; outputs in {}",
        report.rows.len(),
        report.failures.len(),
        cfg.out_dir.display()
    );
    Ok(report)
}
