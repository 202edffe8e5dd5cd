use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{HarnessError, Result};

pub const SWEEP_HEADER: [&str; 15] = [
    "experiment_id",
    "d",
    "kappa",
    "alpha",
    "beta",
    "delta",
    "K0",
    "K",
    "seed",
    "grad_evals",
    "acceptance_rate",
    "ks_max",
    "energy_ks",
    "converged",
    "wall_time_seconds",
];

/// One row of sweep and chain-run output: one replica at one grid point.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepRecord {
    pub experiment_id: String,
    pub d: usize,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(rename = "K0")]
    pub k0: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub grad_evals: u64,
    /// Over the non-lazy adjusted steps; 1 when there were none.
    pub acceptance_rate: f64,
    pub ks_max: f64,
    pub energy_ks: f64,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

/// 17 significant digits, so every value round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepRecord {
    fn fields(&self) -> [String; 15] {
        [
            self.experiment_id.clone(),
            self.d.to_string(),
            fmt_f64(self.kappa),
            fmt_f64(self.alpha),
            fmt_f64(self.beta),
            fmt_f64(self.delta),
            self.k0.to_string(),
            self.k.to_string(),
            self.seed.to_string(),
            self.grad_evals.to_string(),
            fmt_f64(self.acceptance_rate),
            fmt_f64(self.ks_max),
            fmt_f64(self.energy_ks),
            self.converged.to_string(),
            fmt_f64(self.wall_time_seconds),
        ]
    }
}

/// Writes the header and all records.
pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_to(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| HarnessError::csv(path, e))
}

pub fn read_records<R: Read>(input: R) -> csv::Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        )));
    }
    r.deserialize().collect()
}

pub fn read_records_from(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_records(std::io::BufReader::new(file)).map_err(|e| HarnessError::csv(path, e))
}
