//! Monthly CO2 concentration series loader.
//!
//! Expects a CSV with header `year,month,ppm`, one row per month with no
//! gaps. `scripts/fetch_co2.py` at the repository root builds such a file
//! from public sources.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::path::Path;

/// Univariate monthly series with its calendar index.
#[derive(Debug, Clone)]
pub struct SeriesDataset {
    /// Values in file order.
    pub values: Tensor,
    /// (year, month) per value, month in 1..=12.
    pub months: Vec<(i32, u32)>,
}

impl SeriesDataset {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Split withholding the final quarter: (train, test) slices.
    pub fn split_train_test(&self) -> (&[f64], &[f64]) {
        let test_len = self.len() / 4;
        self.values.as_slice().split_at(self.len() - test_len)
    }
}

/// Z-score normalization fitted on a training slice only.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

impl Normalization {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument(
                "cannot fit normalization to an empty slice".to_string(),
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= 0.0 {
            return Err(Error::Numeric(
                "normalization requires non-constant values (std = 0)".to_string(),
            ));
        }
        Ok(Normalization { mean, std })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// Load a `year,month,ppm` CSV, checking monthly cadence.
pub fn load_co2(path: &Path) -> Result<SeriesDataset> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_co2(&text)
}

/// Parser behind [`load_co2`], over the file contents.
pub fn parse_co2(text: &str) -> Result<SeriesDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty CO2 file".to_string()))?;
    let header_cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if header_cols != ["year", "month", "ppm"] {
        return Err(Error::Format(format!(
            "row 1: expected header 'year,month,ppm', got '{header}'"
        )));
    }

    let mut values = Vec::new();
    let mut months: Vec<(i32, u32)> = Vec::new();
    for (index, line) in lines {
        let row = index + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!(
                "row {row}: expected 3 columns, got {}",
                cols.len()
            )));
        }
        let year: i32 = cols[0]
            .parse()
            .map_err(|_| Error::Format(format!("row {row}: bad year '{}'", cols[0])))?;
        let month: u32 = cols[1]
            .parse()
            .map_err(|_| Error::Format(format!("row {row}: bad month '{}'", cols[1])))?;
        if !(1..=12).contains(&month) {
            return Err(Error::Format(format!(
                "row {row}: month {month} outside 1..=12"
            )));
        }
        let ppm: f64 = cols[2]
            .parse()
            .map_err(|_| Error::Format(format!("row {row}: non-numeric ppm '{}'", cols[2])))?;
        if !ppm.is_finite() {
            return Err(Error::Format(format!("row {row}: non-finite ppm")));
        }
        if let Some(&(py, pm)) = months.last() {
            let expected = if pm == 12 { (py + 1, 1) } else { (py, pm + 1) };
            if (year, month) != expected {
                return Err(Error::Format(format!(
                    "row {row}: gap in months ({py}-{pm:02} is followed by {year}-{month:02})"
                )));
            }
        }
        months.push((year, month));
        values.push(ppm);
    }
    if values.is_empty() {
        return Err(Error::Format("no data rows".to_string()));
    }
    Ok(SeriesDataset {
        values: Tensor::vector(values),
        months,
    })
}
