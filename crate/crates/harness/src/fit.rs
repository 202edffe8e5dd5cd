//! Log-log slope fits of median gradient cost and plot-ready summaries.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::records::{fmt_f64, SweepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Kappa,
    D,
}

impl std::str::FromStr for Axis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(Self::Kappa),
            "d" => Ok(Self::D),
            other => Err(HarnessError::usage(format!("axis must be kappa or d, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Median and quartiles of the converged gradient counts at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSummary {
    pub d: usize,
    pub kappa: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub n_converged: usize,
}

pub const PLOT_HEADER: [&str; 8] = [
    "d",
    "kappa",
    "log_d",
    "log_kappa",
    "log_median_grad_evals",
    "err_low",
    "err_high",
    "n_converged",
];

/// One plot-data row. Error bars are the distances from the log median to
/// the log quartiles; with one replica they are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub d: usize,
    pub kappa: f64,
    pub log_d: f64,
    pub log_kappa: f64,
    pub log_median: f64,
    pub err_low: f64,
    pub err_high: f64,
    pub n_converged: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups converged records by `(d, kappa)`, sorted by `d` then `kappa`.
/// Points without a converged record are left out.
pub fn summarize(records: &[SweepRecord]) -> Vec<GridSummary> {
    let mut groups: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.converged) {
        // kappa is positive, so its bit pattern orders like the value
        groups
            .entry((r.d, r.kappa.to_bits()))
            .or_default()
            .push(r.grad_evals as f64);
    }
    groups
        .into_iter()
        .map(|((d, kappa), mut g)| {
            g.sort_unstable_by(f64::total_cmp);
            GridSummary {
                d,
                kappa: f64::from_bits(kappa),
                median: quantile(&g, 0.5),
                q25: quantile(&g, 0.25),
                q75: quantile(&g, 0.75),
                n_converged: g.len(),
            }
        })
        .collect()
}

pub fn plot_rows(summaries: &[GridSummary]) -> Vec<PlotRow> {
    summaries
        .iter()
        .map(|s| {
            let log_median = s.median.ln();
            PlotRow {
                d: s.d,
                kappa: s.kappa,
                log_d: (s.d as f64).ln(),
                log_kappa: s.kappa.ln(),
                log_median,
                err_low: log_median - s.q25.ln(),
                err_high: s.q75.ln() - log_median,
                n_converged: s.n_converged,
            }
        })
        .collect()
}

/// Tab-separated plot data with a header row.
pub fn write_plot_data<W: Write>(mut out: W, rows: &[PlotRow]) -> std::io::Result<()> {
    writeln!(out, "{}", PLOT_HEADER.join("\t"))?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.d,
            fmt_f64(r.kappa),
            fmt_f64(r.log_d),
            fmt_f64(r.log_kappa),
            fmt_f64(r.log_median),
            fmt_f64(r.err_low),
            fmt_f64(r.err_high),
            r.n_converged
        )?;
    }
    Ok(())
}

pub fn read_plot_data<R: BufRead>(input: R) -> Result<Vec<PlotRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| HarnessError::usage(format!("plot data: {e}")))?
        .unwrap_or_default();
    if header.split('\t').ne(PLOT_HEADER.iter().copied()) {
        return Err(HarnessError::usage(format!("plot data: unexpected header {header:?}")));
    }
    let bad = |line: &str| HarnessError::usage(format!("plot data: malformed row {line:?}"));
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| HarnessError::usage(format!("plot data: {e}")))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != PLOT_HEADER.len() {
            return Err(bad(&line));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(&line));
        let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(&line));
        rows.push(PlotRow {
            d: int(0)?,
            kappa: num(1)?,
            log_d: num(2)?,
            log_kappa: num(3)?,
            log_median: num(4)?,
            err_low: num(5)?,
            err_high: num(6)?,
            n_converged: int(7)?,
        });
    }
    Ok(rows)
}

/// Ordinary least squares `y = a + b x`, with the standard error of `b`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(HarnessError::usage(format!(
            "a slope fit needs at least 3 grid points with converged records, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(HarnessError::usage("all grid points share one axis value"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ScalingFit {
        slope,
        stderr: (ssr / (nf - 2.0) / sxx).sqrt(),
        intercept,
        points: n,
    })
}

/// Slope of log median cost against the log of `axis` over plot rows. The
/// other axis must be constant.
pub fn fit_rows(rows: &[PlotRow], axis: Axis) -> Result<ScalingFit> {
    let mixed = match axis {
        Axis::Kappa => rows.windows(2).any(|w| w[0].d != w[1].d),
        Axis::D => rows.windows(2).any(|w| w[0].kappa != w[1].kappa),
    };
    if mixed {
        return Err(HarnessError::usage(
            "the grid varies along both axes; fit one axis at a time",
        ));
    }
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| match axis {
            Axis::Kappa => r.log_kappa,
            Axis::D => r.log_d,
        })
        .collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_median).collect();
    fit_line(&xs, &ys)
}

pub fn fit_records(records: &[SweepRecord], axis: Axis) -> Result<ScalingFit> {
    fit_rows(&plot_rows(&summarize(records)), axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(d: usize, kappa: f64, grad_evals: u64, converged: bool) -> SweepRecord {
        SweepRecord {
            experiment_id: "t".into(),
            d,
            kappa,
            alpha: 1.0,
            beta: kappa,
            delta: 0.01,
            k0: 1,
            k: 1,
            seed: 0,
            grad_evals,
            acceptance_rate: 1.0,
            ks_max: 0.0,
            energy_ks: 0.0,
            converged,
            wall_time_seconds: 0.0,
        }
    }

    #[test]
    fn exact_power_laws() {
        let recs: Vec<_> = [4.0f64, 16.0, 64.0, 256.0]
            .iter()
            .map(|&k| rec(64, k, (1000.0 * k.sqrt()) as u64, true))
            .collect();
        let fit = fit_records(&recs, Axis::Kappa).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12 && fit.stderr < 1e-12);
        let recs: Vec<_> = [16usize, 256, 4096]
            .iter()
            .map(|&d| rec(d, 16.0, (1000.0 * (d as f64).powf(0.25)) as u64, true))
            .collect();
        assert!((fit_records(&recs, Axis::D).unwrap().slope - 0.25).abs() < 1e-12);
    }

    #[test]
    fn needs_three_converged_points() {
        let recs = vec![rec(4, 4.0, 10, true), rec(4, 16.0, 20, true), rec(4, 64.0, 40, false)];
        assert!(fit_records(&recs, Axis::Kappa).is_err());
        let mixed = vec![rec(4, 4.0, 10, true), rec(8, 16.0, 20, true), rec(4, 64.0, 40, true)];
        assert!(fit_records(&mixed, Axis::Kappa).is_err());
    }

    #[test]
    fn medians_quartiles_and_single_replica() {
        let recs: Vec<_> = [10u64, 20, 30, 40, 50].iter().map(|&g| rec(2, 4.0, g, true)).collect();
        let s = summarize(&recs);
        assert_eq!((s[0].median, s[0].q25, s[0].q75), (30.0, 20.0, 40.0));
        let rows = plot_rows(&summarize(&[rec(2, 4.0, 7, true)]));
        assert_eq!((rows[0].err_low, rows[0].err_high), (0.0, 0.0));
    }

    #[test]
    fn plot_data_round_trip_keeps_the_slope() {
        let recs: Vec<_> = [4.0f64, 16.0, 64.0]
            .iter()
            .flat_map(|&k| (1..=5).map(move |i| rec(8, k, (i as f64 * 100.0 * k.powf(0.6)) as u64, true)))
            .collect();
        let direct = fit_records(&recs, Axis::Kappa).unwrap();
        let mut buf = Vec::new();
        write_plot_data(&mut buf, &plot_rows(&summarize(&recs))).unwrap();
        let rows = read_plot_data(buf.as_slice()).unwrap();
        assert_eq!(fit_rows(&rows, Axis::Kappa).unwrap(), direct);
        let mut empty = Vec::new();
        write_plot_data(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), PLOT_HEADER.join("\t") + "\n");
    }
}
