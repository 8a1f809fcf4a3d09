use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::study::{LevelReport, RunReport};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "level",
    "h",
    "tau",
    "q",
    "flux",
    "error_l2",
    "residual_l2",
    "recon_gap",
    "estimator_bound",
    "eoc_error",
    "eoc_residual",
    "in_box",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EocRow {
    pub level: usize,
    pub h: f64,
    pub value: Option<f64>,
    /// `log(v_{k-1}/v_k) / log(h_{k-1}/h_k)`; undefined on the first level
    /// and whenever a value is missing or not positive.
    pub eoc: Option<f64>,
}

pub fn eoc(hs: &[f64], values: &[Option<f64>]) -> Vec<EocRow> {
    let usable = |v: Option<f64>| v.filter(|x| x.is_finite() && *x > 0.0);
    (0..hs.len())
        .map(|k| {
            let rate = if k == 0 {
                None
            } else {
                match (usable(values[k - 1]), usable(values[k])) {
                    (Some(a), Some(b)) if hs[k - 1] != hs[k] => {
                        Some((a / b).ln() / (hs[k - 1] / hs[k]).ln())
                    }
                    _ => None,
                }
            };
            EocRow {
                level: k,
                h: hs[k],
                value: values[k],
                eoc: rate,
            }
        })
        .collect()
}

/// One line of the study CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub q: usize,
    pub flux: String,
    pub error_l2: Option<f64>,
    pub residual_l2: Option<f64>,
    pub recon_gap: Option<f64>,
    pub estimator_bound: Option<f64>,
    pub eoc_error: Option<f64>,
    pub eoc_residual: Option<f64>,
    pub in_box: Option<bool>,
}

impl From<&LevelReport> for CsvRow {
    fn from(l: &LevelReport) -> Self {
        Self {
            level: l.level,
            h: l.h,
            tau: l.tau,
            q: l.q,
            flux: l.flux.clone(),
            error_l2: l.error_l2,
            residual_l2: l.residual_l2,
            recon_gap: l.recon_gap,
            estimator_bound: l.estimator_bound,
            eoc_error: l.eoc_error,
            eoc_residual: l.eoc_residual,
            in_box: l.in_box,
        }
    }
}

impl RunReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.levels.iter().map(CsvRow::from).collect()
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

impl CsvRow {
    fn fields(&self) -> [String; 12] {
        [
            self.level.to_string(),
            float(self.h),
            float(self.tau),
            self.q.to_string(),
            self.flux.clone(),
            opt(self.error_l2),
            opt(self.residual_l2),
            opt(self.recon_gap),
            opt(self.estimator_bound),
            opt(self.eoc_error),
            opt(self.eoc_residual),
            self.in_box.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }

    fn parse(record: &csv::StringRecord, line: usize) -> Result<Self> {
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Csv(format!(
                "line {line}: expected {} fields, got {}",
                CSV_HEADER.len(),
                record.len()
            )));
        }
        let bad = |name: &str, v: &str| Error::Csv(format!("line {line}: bad {name} {v:?}"));
        let int = |i: usize| {
            record[i]
                .parse::<usize>()
                .map_err(|_| bad(CSV_HEADER[i], &record[i]))
        };
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| bad(CSV_HEADER[i], &record[i]))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        Ok(Self {
            level: int(0)?,
            h: num(1)?,
            tau: num(2)?,
            q: int(3)?,
            flux: record[4].to_string(),
            error_l2: opt(5)?,
            residual_l2: opt(6)?,
            recon_gap: opt(7)?,
            estimator_bound: opt(8)?,
            eoc_error: opt(9)?,
            eoc_residual: opt(10)?,
            in_box: match &record[11] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => return Err(bad("in_box", other)),
            },
        })
    }
}

/// Writes the header and one line per row.
pub fn write_csv(rows: &[CsvRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            CsvRow::parse(&rec, i + 2)
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Refills both EOC columns from the value columns.
pub fn recompute_eoc(rows: &mut [CsvRow]) {
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let errs: Vec<Option<f64>> = rows.iter().map(|r| r.error_l2).collect();
    let ress: Vec<Option<f64>> = rows.iter().map(|r| r.residual_l2).collect();
    for (row, (e, r)) in rows
        .iter_mut()
        .zip(eoc(&hs, &errs).into_iter().zip(eoc(&hs, &ress)))
    {
        row.eoc_error = e.eoc;
        row.eoc_residual = r.eoc;
    }
}

/// Two-column text files, one per curve: values and EOCs against `h`, and the
/// `sup ‖∂_x û^st‖` history of every level against `t`.
pub fn write_plot_data(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = &report.config.name;
    let curve = |suffix: &str, points: Vec<(f64, f64)>| -> Result<()> {
        let mut f = fs::File::create(dir.join(format!("{name}_{suffix}.dat")))?;
        for (x, y) in points {
            writeln!(f, "{} {}", float(x), float(y))?;
        }
        Ok(())
    };
    let column = |get: &dyn Fn(&LevelReport) -> Option<f64>| -> Vec<(f64, f64)> {
        report
            .levels
            .iter()
            .filter_map(|l| get(l).map(|v| (l.h, v)))
            .collect()
    };
    curve("error", column(&|l| l.error_l2))?;
    curve("residual", column(&|l| l.residual_l2))?;
    curve("recon_gap", column(&|l| l.recon_gap))?;
    curve("bound", column(&|l| l.estimator_bound))?;
    curve("eoc_error", column(&|l| l.eoc_error))?;
    curve("eoc_residual", column(&|l| l.eoc_residual))?;
    for l in &report.levels {
        curve(&format!("level{}_sup_dx", l.level), l.sup_dx.clone())?;
    }
    Ok(())
}
