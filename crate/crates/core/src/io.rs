//! CSV reading and writing for sample sets.
//!
//! Joint samples use the header `x0,...,x{d-1},t,y[,propensity]`; outcome sets
//! `x0,...,y`; treatment sets `x0,...,t`. Holdout files append `u_true`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::data::{JointSample, OutcomeSet, Source, TreatmentSet};
use crate::error::{invalid, Result};

fn feature_columns(headers: &csv::StringRecord) -> usize {
    headers
        .iter()
        .take_while(|h| h.starts_with('x') && h[1..].parse::<usize>().is_ok())
        .count()
}

fn check_feature_headers(headers: &csv::StringRecord, d: usize) -> Result<()> {
    for (j, h) in headers.iter().take(d).enumerate() {
        if h != format!("x{j}") {
            return invalid(format!("expected column `x{j}`, found `{h}`"));
        }
    }
    if d == 0 {
        return invalid("CSV has no feature columns");
    }
    Ok(())
}

fn parse_cell(record: &csv::StringRecord, j: usize, row: usize) -> Result<f64> {
    let cell = record.get(j).unwrap_or("");
    cell.trim()
        .parse::<f64>()
        .or_else(|e| invalid(format!("row {row}, column {j}: bad number `{cell}`: {e}")))
}

/// Reads joint samples; an optional `u_true` column is returned separately.
pub fn read_joint_csv<R: Read>(input: R) -> Result<(Vec<JointSample>, Option<Vec<f64>>)> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let d = feature_columns(&headers);
    check_feature_headers(&headers, d)?;
    let rest: Vec<&str> = headers.iter().skip(d).collect();
    let (has_prop, has_truth) = match rest.as_slice() {
        ["t", "y"] => (false, false),
        ["t", "y", "propensity"] => (true, false),
        ["t", "y", "u_true"] => (false, true),
        ["t", "y", "propensity", "u_true"] => (true, true),
        other => {
            return invalid(format!(
                "unexpected label columns {other:?}; want t,y[,propensity][,u_true]"
            ))
        }
    };
    let mut samples = Vec::new();
    let mut truth = has_truth.then(Vec::new);
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let x = (0..d)
            .map(|j| parse_cell(&record, j, row))
            .collect::<Result<Vec<_>>>()?;
        let t = parse_cell(&record, d, row)?;
        let y = parse_cell(&record, d + 1, row)?;
        let e = if has_prop {
            Some(parse_cell(&record, d + 2, row)?)
        } else {
            None
        };
        if let Some(u) = truth.as_mut() {
            u.push(parse_cell(&record, d + 2 + usize::from(has_prop), row)?);
        }
        samples.push(JointSample::new(x, t, y, e)?);
    }
    Ok((samples, truth))
}

/// Writes joint samples; the propensity column is written when every sample has one.
pub fn write_joint_csv<W: Write>(out: W, samples: &[JointSample], truth: Option<&[f64]>) -> Result<()> {
    let d = samples.first().map_or(0, |s| s.features().len());
    let with_prop = !samples.is_empty() && samples.iter().all(|s| s.propensity().is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("t".into());
    header.push("y".into());
    if with_prop {
        header.push("propensity".into());
    }
    if truth.is_some() {
        header.push("u_true".into());
    }
    w.write_record(&header)?;
    for (i, s) in samples.iter().enumerate() {
        let mut rec: Vec<String> = s.features().iter().map(|v| format!("{v}")).collect();
        rec.push(format!("{}", s.treatment()));
        rec.push(format!("{}", s.outcome()));
        if with_prop {
            rec.push(format!("{}", s.propensity().unwrap_or(f64::NAN)));
        }
        if let Some(u) = truth {
            rec.push(format!("{}", u[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_labeled<W: Write>(out: W, features: &DMatrix<f64>, labels: &DVector<f64>, label: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..features.ncols()).map(|j| format!("x{j}")).collect();
    header.push(label.into());
    w.write_record(&header)?;
    for i in 0..features.nrows() {
        let mut rec: Vec<String> = features.row(i).iter().map(|v| format!("{v}")).collect();
        rec.push(format!("{}", labels[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn read_labeled<R: Read>(input: R, label: &str) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let d = feature_columns(&headers);
    check_feature_headers(&headers, d)?;
    if headers.len() != d + 1 || &headers[d] != label {
        return invalid(format!("expected a single `{label}` column after the features"));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for j in 0..d {
            values.push(parse_cell(&record, j, row)?);
        }
        labels.push(parse_cell(&record, d, row)?);
    }
    Ok((
        DMatrix::from_row_slice(labels.len(), d, &values),
        DVector::from_vec(labels),
    ))
}

pub fn write_outcome_csv<W: Write>(out: W, set: &OutcomeSet) -> Result<()> {
    write_labeled(out, set.features(), set.outcomes(), "y")
}

pub fn write_treatment_csv<W: Write>(out: W, set: &TreatmentSet) -> Result<()> {
    write_labeled(out, set.features(), set.treatments(), "t")
}

pub fn read_outcome_csv<R: Read>(input: R, source: Source) -> Result<OutcomeSet> {
    let (x, y) = read_labeled(input, "y")?;
    OutcomeSet::new(x, y, source)
}

pub fn read_treatment_csv<R: Read>(input: R, source: Source) -> Result<TreatmentSet> {
    let (x, t) = read_labeled(input, "t")?;
    TreatmentSet::new(x, t, source)
}
