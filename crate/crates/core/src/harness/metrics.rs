use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{io_err, Result};

pub const METRICS_HEADER: &str = "step,d_loss,g_loss,c_loss,class_match_rate,jsd_estimate";

/// One evaluation row. Losses are means over the steps since the previous
/// row; absent values are written as empty fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsRecord {
    pub step: u64,
    pub d_loss: Option<f64>,
    pub g_loss: Option<f64>,
    pub c_loss: Option<f64>,
    pub class_match_rate: Option<f64>,
    pub jsd_estimate: Option<f64>,
}

fn field(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        write!(out, "{v}").expect("writing to a String");
    }
}

impl MetricsRecord {
    pub fn to_csv_line(&self) -> String {
        let mut out = self.step.to_string();
        for v in [self.d_loss, self.g_loss, self.c_loss, self.class_match_rate, self.jsd_estimate] {
            field(&mut out, v);
        }
        out
    }

    pub fn parse_csv_line(line: &str) -> Option<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return None;
        }
        let opt = |s: &str| -> Option<Option<f64>> {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        };
        Some(Self {
            step: cols[0].parse().ok()?,
            d_loss: opt(cols[1])?,
            g_loss: opt(cols[2])?,
            c_loss: opt(cols[3])?,
            class_match_rate: opt(cols[4])?,
            jsd_estimate: opt(cols[5])?,
        })
    }
}

/// Parses every data row of a metrics file.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            MetricsRecord::parse_csv_line(l)
                .ok_or_else(|| super::HarnessError::Config(format!("{}: bad row {}", path.display(), i + 2)))
        })
        .collect()
}

/// Line-buffered CSV writer that flushes after every row, so an aborted
/// run keeps the rows written so far.
pub struct MetricsWriter {
    path: PathBuf,
    file: File,
}

impl MetricsWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut file = File::create(path).map_err(io_err(path))?;
        writeln!(file, "{header}").map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn write_line(&mut self, line: &str) -> Result<()> {
        writeln!(self.file, "{line}").map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))
    }
}

/// Running mean of a loss that may be absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossMean {
    sum: f64,
    count: u64,
}

impl LossMean {
    pub fn push(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.count += 1;
        }
    }

    /// The mean so far, resetting the accumulator.
    pub fn take(&mut self) -> Option<f64> {
        let out = (self.count > 0).then(|| self.sum / self.count as f64);
        *self = Self::default();
        out
    }
}
