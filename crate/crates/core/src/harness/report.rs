use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CellResult;
use crate::error::{Error, Result};

/// One line of the results CSV: a (cell, test) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub distribution: String,
    pub n: usize,
    pub mechanism: String,
    /// Missingness probability of the cell, empty for mechanisms without one.
    pub param: Option<f64>,
    pub test: String,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate_count: usize,
    pub seed: u64,
}

pub fn result_rows(cells: &[CellResult]) -> Vec<ResultRow> {
    cells
        .iter()
        .flat_map(|cell| {
            let s = &cell.scenario;
            cell.tallies.iter().map(move |t| ResultRow {
                label: s.label.clone(),
                distribution: s.distribution.to_string(),
                n: s.n,
                mechanism: s.mechanism.name(),
                param: s.mechanism.prob(),
                test: t.test.to_string(),
                rate: t.rejection_rate,
                ci_low: t.ci_low,
                ci_high: t.ci_high,
                degenerate_count: t.degenerate_count,
                seed: s.master_seed,
            })
        })
        .collect()
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Csv(format!("results row {}: {e}", i + 1))))
        .collect()
}
