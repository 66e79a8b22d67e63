//! CSV datasets.
//!
//! * uni: `y,V,x1..xm`
//! * multi: `y1..yp`, then the upper triangle `v11,v12,..,v1p,v22,..,vpp`, then `x1..xm`
//! * bin: `y,n`
//!
//! The design matrix is read as given; include an explicit intercept column.

use std::path::Path;

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};

use dta_core::betabin::BinData;
use dta_core::fixtures;
use dta_core::multi::MultiData;
use dta_core::stats::SymPosDef;
use dta_core::uni::UniData;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Uni,
    Multi,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Hospital,
    Baseball,
}

#[derive(Debug, Clone)]
pub enum Dataset {
    Uni(UniData),
    Multi(MultiData),
    Bin(BinData),
}

impl Dataset {
    pub fn kind(&self) -> DataKind {
        match self {
            Dataset::Uni(_) => DataKind::Uni,
            Dataset::Multi(_) => DataKind::Multi,
            Dataset::Bin(_) => DataKind::Bin,
        }
    }
}

pub fn fixture(which: Fixture) -> CliResult<Dataset> {
    Ok(match which {
        Fixture::Hospital => Dataset::Multi(fixtures::hospital()?),
        Fixture::Baseball => Dataset::Bin(fixtures::baseball()),
    })
}

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {msg}", path.display()))
}

/// Header and raw fields; row numbers count data rows from 1.
fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => invalid(path, format!("row {}: wrong number of fields", r + 1)),
            _ => CliError::csv(path, e),
        })?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(invalid(path, "no data rows"));
    }
    Ok((header, rows))
}

fn parse_f64(path: &Path, row: usize, col: &str, field: &str) -> CliResult<f64> {
    match field.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(invalid(path, format!("row {row}, column {col}: expected a finite number, got '{field}'"))),
    }
}

fn parse_count(path: &Path, row: usize, col: &str, field: &str) -> CliResult<u64> {
    field
        .parse::<u64>()
        .map_err(|_| invalid(path, format!("row {row}, column {col}: expected a nonnegative integer, got '{field}'")))
}

fn expect_columns(path: &Path, header: &[String], expected: &[String]) -> CliResult<()> {
    if header.len() != expected.len() || header.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(invalid(path, format!("expected columns {}, found {}", expected.join(","), header.join(","))));
    }
    Ok(())
}

fn x_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

fn multi_names(p: usize, m: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|j| format!("y{j}")).collect();
    for r in 1..=p {
        for c in r..=p {
            names.push(format!("v{r}{c}"));
        }
    }
    names.extend(x_names(m));
    names
}

pub fn load_dataset(path: &Path, kind: DataKind) -> CliResult<Dataset> {
    let (header, rows) = read_table(path)?;
    let wrap = |e: dta_core::DtaError| invalid(path, e);
    match kind {
        DataKind::Uni => {
            if header.len() < 3 {
                return Err(invalid(path, "uni data needs columns y,V,x1..xm with m >= 1"));
            }
            let m = header.len() - 2;
            let mut expected = vec!["y".to_string(), "V".to_string()];
            expected.extend(x_names(m));
            expect_columns(path, &header, &expected)?;
            let (mut y, mut v) = (Vec::new(), Vec::new());
            let mut x = DMatrix::zeros(rows.len(), m);
            for (i, rec) in rows.iter().enumerate() {
                let row = i + 1;
                let vals = rec
                    .iter()
                    .zip(&expected)
                    .map(|(f, c)| parse_f64(path, row, c, f))
                    .collect::<CliResult<Vec<_>>>()?;
                if !(vals[1] > 0.0) {
                    return Err(invalid(path, format!("row {row}: V must be positive, got {}", vals[1])));
                }
                y.push(vals[0]);
                v.push(vals[1]);
                for j in 0..m {
                    x[(i, j)] = vals[2 + j];
                }
            }
            Ok(Dataset::Uni(UniData::new(y, v, x).map_err(wrap)?))
        }
        DataKind::Multi => {
            let p = header.iter().take_while(|h| h.starts_with(['y', 'Y'])).count();
            let n_cov = p * (p + 1) / 2;
            if p == 0 || header.len() <= p + n_cov {
                return Err(invalid(path, "multi data needs columns y1..yp, v11..vpp, x1..xm with p, m >= 1"));
            }
            let m = header.len() - p - n_cov;
            let expected = multi_names(p, m);
            expect_columns(path, &header, &expected)?;
            let mut y = Vec::with_capacity(rows.len());
            let mut v = Vec::with_capacity(rows.len());
            let mut x = DMatrix::zeros(rows.len(), m);
            for (i, rec) in rows.iter().enumerate() {
                let row = i + 1;
                let vals = rec
                    .iter()
                    .zip(&expected)
                    .map(|(f, c)| parse_f64(path, row, c, f))
                    .collect::<CliResult<Vec<_>>>()?;
                y.push(DVector::from_column_slice(&vals[..p]));
                let mut cov = DMatrix::zeros(p, p);
                let mut idx = p;
                for r in 0..p {
                    for c in r..p {
                        cov[(r, c)] = vals[idx];
                        cov[(c, r)] = vals[idx];
                        idx += 1;
                    }
                }
                v.push(SymPosDef::new(cov).map_err(|e| invalid(path, format!("row {row}: covariance: {e}")))?);
                for j in 0..m {
                    x[(i, j)] = vals[p + n_cov + j];
                }
            }
            Ok(Dataset::Multi(MultiData::new(y, v, x).map_err(wrap)?))
        }
        DataKind::Bin => {
            expect_columns(path, &header, &["y".to_string(), "n".to_string()])?;
            let (mut y, mut n) = (Vec::new(), Vec::new());
            for (i, rec) in rows.iter().enumerate() {
                let row = i + 1;
                let yi = parse_count(path, row, "y", &rec[0])?;
                let ni = parse_count(path, row, "n", &rec[1])?;
                if ni == 0 {
                    return Err(invalid(path, format!("row {row}: n must be at least 1")));
                }
                if yi > ni {
                    return Err(invalid(path, format!("row {row}: y = {yi} exceeds n = {ni}")));
                }
                y.push(yi);
                n.push(ni);
            }
            Ok(Dataset::Bin(BinData::new(y, n).map_err(wrap)?))
        }
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes a dataset in the format [`load_dataset`] reads back exactly.
pub fn write_dataset(path: &Path, data: &Dataset) -> CliResult<()> {
    match data {
        Dataset::Uni(d) => {
            let mut header = vec!["y".to_string(), "V".to_string()];
            header.extend(x_names(d.m()));
            write_rows(
                path,
                &header,
                (0..d.k()).map(|i| {
                    let mut row = vec![d.y()[i].to_string(), d.v()[i].to_string()];
                    row.extend(d.x().row(i).iter().map(f64::to_string));
                    row
                }),
            )
        }
        Dataset::Multi(d) => {
            let p = d.p();
            write_rows(
                path,
                &multi_names(p, d.m()),
                (0..d.k()).map(|i| {
                    let mut row: Vec<String> = d.y()[i].iter().map(f64::to_string).collect();
                    let cov = d.v()[i].matrix();
                    for r in 0..p {
                        for c in r..p {
                            row.push(cov[(r, c)].to_string());
                        }
                    }
                    row.extend(d.x().row(i).iter().map(f64::to_string));
                    row
                }),
            )
        }
        Dataset::Bin(d) => write_rows(
            path,
            &["y".to_string(), "n".to_string()],
            d.y().iter().zip(d.n()).map(|(y, n)| vec![y.to_string(), n.to_string()]),
        ),
    }
}
