//! Stand-alone `generate`, `fit` and `evaluate` modes working on CSV files.
//!
//! A data directory holds `outcome_1.csv`, `outcome_2.csv`, `treatment_1.csv`,
//! `treatment_2.csv` and `holdout.csv` (joint labels, propensity, `u_true`).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use uplift_core::data::feature_matrix;
use uplift_core::evaluation::evaluate;
use uplift_core::io::{
    read_joint_csv, read_outcome_csv, read_treatment_csv, write_joint_csv, write_outcome_csv, write_treatment_csv,
};
use uplift_core::methods::{fit_minmax, fit_predict};
use uplift_core::synthetic::generate;
use uplift_core::{JointSample, Method, OutcomeSet, Source, SyntheticConfig, TrainingSets, TreatmentSet};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{instance_seed, write_metadata};

pub const HOLDOUT_FILE: &str = "holdout.csv";
pub const MODEL_FILE: &str = "minmax_model.txt";

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

fn mkdir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

fn set_file(kind: &str, source: Source) -> String {
    format!("{kind}_{}.csv", source.index())
}

fn predictions_file(method: Method) -> String {
    format!("predictions_{method}.csv")
}

fn data_dir(cfg: &ExperimentConfig) -> CliResult<&Path> {
    cfg.data_dir
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("mode `{}` needs `data_dir`", cfg.mode.name())))
}

/// Writes one data directory per `(b, n, ñ, seed)` cell under `out_dir/data`.
pub fn run_generate(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    mkdir(&cfg.out_dir)?;
    let mut dirs = Vec::new();
    for (b, n, nt, s) in cfg.cells() {
        let dir = cfg.out_dir.join("data").join(format!("b{b}_n{n}_nt{nt}_s{s}"));
        mkdir(&dir)?;
        let synthetic = SyntheticConfig {
            b_offset: b,
            seed: instance_seed(cfg.base_seed, b, n, nt, s),
            ..cfg.synthetic.clone()
        }
        .with_pooled_sizes(n, nt);
        let data = generate(&synthetic)?;
        for (k, source) in [Source::First, Source::Second].into_iter().enumerate() {
            write_outcome_csv(create(&dir.join(set_file("outcome", source)))?, &data.outcome_sets[k])?;
            write_treatment_csv(
                create(&dir.join(set_file("treatment", source)))?,
                &data.treatment_sets[k],
            )?;
        }
        write_joint_csv(
            create(&dir.join(HOLDOUT_FILE))?,
            &data.holdout,
            Some(&data.holdout_uplift),
        )?;
        dirs.push(dir);
    }
    let mut meta_cfg = cfg.clone();
    meta_cfg.mode = crate::config::Mode::Experiment;
    write_metadata(&meta_cfg, &cfg.out_dir.join("metadata.csv"))?;
    Ok(dirs)
}

fn read_sets(dir: &Path) -> CliResult<([OutcomeSet; 2], [TreatmentSet; 2])> {
    let outcome = |s| -> CliResult<OutcomeSet> { Ok(read_outcome_csv(open(&dir.join(set_file("outcome", s)))?, s)?) };
    let treatment =
        |s| -> CliResult<TreatmentSet> { Ok(read_treatment_csv(open(&dir.join(set_file("treatment", s)))?, s)?) };
    Ok((
        [outcome(Source::First)?, outcome(Source::Second)?],
        [treatment(Source::First)?, treatment(Source::Second)?],
    ))
}

fn read_holdout(dir: &Path) -> CliResult<(Vec<JointSample>, Option<Vec<f64>>)> {
    Ok(read_joint_csv(open(&dir.join(HOLDOUT_FILE))?)?)
}

fn write_predictions(path: &Path, values: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["uplift"])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

fn read_predictions(path: &Path) -> CliResult<Vec<f64>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(0).unwrap_or("");
        let v = cell.trim().parse::<f64>().map_err(|e| {
            CliError::Core(uplift_core::UpliftError::InvalidInput(format!(
                "{}: row {row}: bad number `{cell}`: {e}",
                path.display()
            )))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Fits every configured method on a data directory. Writes the direct
/// estimator's model file, and predictions at the holdout features when a
/// holdout file exists. Returns the number of failed methods.
pub fn run_fit(cfg: &ExperimentConfig) -> CliResult<usize> {
    let dir = data_dir(cfg)?;
    let (outcomes, treatments) = read_sets(dir)?;
    let sets = TrainingSets {
        outcomes: [&outcomes[0], &outcomes[1]],
        treatments: [&treatments[0], &treatments[1]],
    };
    let holdout = if dir.join(HOLDOUT_FILE).exists() {
        Some(read_holdout(dir)?.0)
    } else {
        None
    };
    let test = holdout.as_deref().map(feature_matrix).transpose()?;
    mkdir(&cfg.out_dir)?;
    let mut failures = 0;
    for &method in &cfg.methods {
        let result: CliResult<()> = (|| {
            if method == Method::MinMax {
                let model = fit_minmax(&sets, &cfg.params, cfg.base_seed)?;
                fs::write(cfg.out_dir.join(MODEL_FILE), model.to_text())
                    .map_err(|e| CliError::io("writing model file", e))?;
                if let Some(d) = model.diagnostics().filter(|d| d.degenerate()) {
                    log::warn!("degenerate fit: {d:?}");
                }
            }
            match &test {
                Some(x) => {
                    let out = fit_predict(method, &sets, x, &cfg.params, cfg.base_seed)?;
                    write_predictions(&cfg.out_dir.join(predictions_file(method)), out.predictions.as_slice())
                }
                None if method == Method::MinMax => Ok(()),
                None => {
                    log::warn!("{method}: no {HOLDOUT_FILE} in {}, nothing to predict", dir.display());
                    Ok(())
                }
            }
        })();
        if let Err(e) = result {
            log::error!("{method}: {e}");
            failures += 1;
        }
    }
    write_metadata(cfg, &cfg.out_dir.join("metadata.csv"))?;
    Ok(failures)
}

/// Scores saved predictions on the holdout file. Writes `evaluation.csv` and
/// one curve per method. Returns the number of methods that could not be scored.
pub fn run_evaluate(cfg: &ExperimentConfig) -> CliResult<usize> {
    let dir = data_dir(cfg)?;
    let (holdout, truth) = read_holdout(dir)?;
    let pred_dir = cfg.predictions_dir.as_deref().unwrap_or(&cfg.out_dir);
    mkdir(&cfg.out_dir)?;
    let curves = cfg.out_dir.join("curves");
    if cfg.curves {
        mkdir(&curves)?;
    }
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir.join("evaluation.csv"))?);
    w.write_record(["method", "auuc", "mse"])?;
    let mut failures = 0;
    for &method in &cfg.methods {
        let result: CliResult<()> = (|| {
            let scores = read_predictions(&pred_dir.join(predictions_file(method)))?;
            let eval = evaluate(&scores, &holdout, truth.as_deref(), cfg.ips, 0, cfg.base_seed)?;
            w.write_record([
                method.name().to_string(),
                eval.auuc.to_string(),
                eval.mse.map_or_else(String::new, |m| m.to_string()),
            ])?;
            if cfg.curves {
                eval.curve.write_csv(create(&curves.join(format!("{method}.csv")))?)?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            log::error!("{method}: {e}");
            failures += 1;
        }
    }
    w.flush().map_err(|e| CliError::io("writing evaluation.csv", e))?;
    Ok(failures)
}
