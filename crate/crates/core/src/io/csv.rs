//! CSV import and export. Every file has a header row; values are written
//! with 17 significant digits so they round-trip exactly.

use std::path::Path;

use super::trace::write_atomic;
use crate::analysis::DelaySweepResult;
use crate::dispersion::{FrequencyGrid, GainProfile, MediumResponse};
use crate::error::{Error, Result};
use crate::gaussian::TwoModeCovariance;

pub const PROFILE_COLUMNS: [&str; 2] = ["freq_hz", "gain"];
pub const RESPONSE_COLUMNS: [&str; 5] = ["freq_hz", "amplitude", "phase_rad", "group_delay_s", "noise_coupling"];
pub const COVARIANCE_COLUMNS: [&str; 4] = ["x_p", "y_p", "x_c", "y_c"];
pub const SWEEP_COLUMNS: [&str; 10] = [
    "delay_ns",
    "insep_mean",
    "insep_sem",
    "sqz_db_mean",
    "sqz_db_sem",
    "mi_bits_mean",
    "mi_bits_sem",
    "xcorr_mean",
    "xcorr_sem",
    "mi_flagged",
];
pub const THEORY_COLUMNS: [&str; 5] = ["r_db", "gain", "inseparability", "mi_bits", "breaking_gain"];

/// Numeric table with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str], columns: Vec<Vec<f64>>) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            columns,
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    if table.headers.len() != table.columns.len() {
        return Err(Error::invalid("table", "header and column counts differ"));
    }
    let rows = table.rows();
    if table.columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invalid("table", "columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(&table.headers).map_err(csv_err)?;
    for i in 0..rows {
        w.write_record(table.columns.iter().map(|c| format_value(c[i])))
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Reads a table and checks that `required` columns are present. Parse
/// errors name the row and column.
pub fn read_table(path: &Path, required: &[&str]) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        })?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    for name in required {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::format(
                path,
                format!("missing column `{name}` (header: {})", headers.join(",")),
            ));
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (row, record) in r.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::format(
                path,
                format!("line {line}: expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(
                    path,
                    format!(
                        "line {line}, column `{}`: cannot parse {field:?} as a number",
                        headers[j]
                    ),
                )
            })?;
            columns[j].push(v);
        }
    }
    Ok(Table { headers, columns })
}

fn required<'a>(t: &'a Table, name: &str) -> &'a [f64] {
    t.column(name).expect("column checked by read_table")
}

pub fn write_profile(path: &Path, profile: &GainProfile) -> Result<()> {
    write_table(
        path,
        &Table::new(&PROFILE_COLUMNS, vec![profile.grid().points(), profile.gain().to_vec()]),
    )
}

pub fn read_profile(path: &Path) -> Result<GainProfile> {
    let t = read_table(path, &PROFILE_COLUMNS)?;
    GainProfile::from_points(required(&t, "freq_hz"), required(&t, "gain").to_vec())
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_response(path: &Path, resp: &MediumResponse) -> Result<()> {
    write_table(
        path,
        &Table::new(
            &RESPONSE_COLUMNS,
            vec![
                resp.grid().points(),
                resp.amplitude().to_vec(),
                resp.phase().to_vec(),
                resp.group_delay().to_vec(),
                resp.noise_coupling().to_vec(),
            ],
        ),
    )
}

pub fn read_response(path: &Path) -> Result<MediumResponse> {
    let t = read_table(path, &RESPONSE_COLUMNS)?;
    let col = |n| required(&t, n).to_vec();
    let grid = FrequencyGrid::from_points(required(&t, "freq_hz")).map_err(|e| Error::format(path, e.to_string()))?;
    MediumResponse::from_columns(
        grid,
        col("amplitude"),
        col("phase_rad"),
        col("group_delay_s"),
        col("noise_coupling"),
    )
    .map_err(|e| Error::format(path, e.to_string()))
}

/// Row-major 4×4 matrix under a `x_p,y_p,x_c,y_c` header.
pub fn write_covariance(path: &Path, cov: &TwoModeCovariance) -> Result<()> {
    let e = cov.entries();
    let columns = (0..4).map(|j| (0..4).map(|i| e[i][j]).collect()).collect();
    write_table(path, &Table::new(&COVARIANCE_COLUMNS, columns))
}

pub fn read_covariance(path: &Path) -> Result<TwoModeCovariance> {
    let t = read_table(path, &COVARIANCE_COLUMNS)?;
    if t.rows() != 4 {
        return Err(Error::format(path, format!("expected 4 rows, found {}", t.rows())));
    }
    let mut m = [[0.0; 4]; 4];
    for (j, name) in COVARIANCE_COLUMNS.iter().enumerate() {
        for (i, v) in required(&t, name).iter().enumerate() {
            m[i][j] = *v;
        }
    }
    TwoModeCovariance::new(m).map_err(|e| Error::format(path, e.to_string()))
}

pub fn sweep_table(result: &DelaySweepResult) -> Table {
    let mean = |c: &[crate::stats::MeanSem]| c.iter().map(|m| m.mean).collect::<Vec<_>>();
    let sem = |c: &[crate::stats::MeanSem]| c.iter().map(|m| m.sem).collect::<Vec<_>>();
    Table::new(
        &SWEEP_COLUMNS,
        vec![
            result.delays_s().iter().map(|d| d * 1e9).collect(),
            mean(&result.inseparability),
            sem(&result.inseparability),
            mean(&result.squeezing_db),
            sem(&result.squeezing_db),
            mean(&result.mi_bits),
            sem(&result.mi_bits),
            mean(&result.xcorr),
            sem(&result.xcorr),
            result.mi_flagged.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect(),
        ],
    )
}

pub fn write_sweep(path: &Path, result: &DelaySweepResult) -> Result<()> {
    write_table(path, &sweep_table(result))
}

pub fn read_sweep(path: &Path) -> Result<Table> {
    read_table(path, &SWEEP_COLUMNS[..7])
}
