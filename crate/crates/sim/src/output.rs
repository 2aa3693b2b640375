//! CSV results, the configuration echo and gnuplot scripts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back recovers every row exactly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::SimConfig;
use crate::sweep::{BackhaulRow, ResultRow};
use crate::{Error, Result};

const FIXED_COLUMNS: [&str; 10] = [
    "strategy",
    "snr_db",
    "frames",
    "bit_errors",
    "ber",
    "ber_std_err",
    "total_backhaul_bits",
    "bits_per_symbol",
    "failed_frames",
    "low_confidence",
];

const BACKHAUL_COLUMNS: [&str; 4] = ["zeta", "scheme", "frames", "bits_per_symbol"];

fn io_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))
}

fn field<T: FromStr>(record: &csv::StringRecord, i: usize, path: &Path) -> Result<T>
where
    T::Err: fmt::Display,
{
    let raw = record.get(i).unwrap_or("");
    raw.parse()
        .map_err(|e| Error::Csv(format!("{}: column {i} '{raw}': {e}", path.display())))
}

/// Γ columns needed for `rows`.
fn gamma_width(rows: &[ResultRow]) -> usize {
    rows.iter().map(|r| r.gamma.len()).max().unwrap_or(0)
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let width = gamma_width(rows);
    let mut w = writer(path)?;
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=width).map(|i| format!("gamma_it{i}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.strategy.to_string(),
            r.snr_db.to_string(),
            r.frames.to_string(),
            r.bit_errors.to_string(),
            r.ber.to_string(),
            r.ber_std_err.to_string(),
            r.total_backhaul_bits.to_string(),
            r.bits_per_symbol.to_string(),
            r.failed_frames.to_string(),
            r.low_confidence.to_string(),
        ];
        rec.extend((0..width).map(|i| r.gamma.get(i).map(f64::to_string).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = reader.headers().map_err(|e| io_err(path, e))?.clone();
    if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::Csv(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(|e| io_err(path, e))?;
        let gamma = (FIXED_COLUMNS.len()..rec.len())
            .take_while(|&i| !rec[i].is_empty())
            .map(|i| field(&rec, i, path))
            .collect::<Result<_>>()?;
        rows.push(ResultRow {
            strategy: field(&rec, 0, path)?,
            snr_db: field(&rec, 1, path)?,
            frames: field(&rec, 2, path)?,
            bit_errors: field(&rec, 3, path)?,
            ber: field(&rec, 4, path)?,
            ber_std_err: field(&rec, 5, path)?,
            total_backhaul_bits: field(&rec, 6, path)?,
            bits_per_symbol: field(&rec, 7, path)?,
            failed_frames: field(&rec, 8, path)?,
            low_confidence: field(&rec, 9, path)?,
            gamma,
        });
    }
    Ok(rows)
}

pub fn emit_backhaul_csv(rows: &[BackhaulRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(BACKHAUL_COLUMNS)
        .map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([
            r.zeta.to_string(),
            r.scheme.clone(),
            r.frames.to_string(),
            r.bits_per_symbol.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_backhaul_csv(path: &Path) -> Result<Vec<BackhaulRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(|e| io_err(path, e))?;
        rows.push(BackhaulRow {
            zeta: field(&rec, 0, path)?,
            scheme: field(&rec, 1, path)?,
            frames: field(&rec, 2, path)?,
            bits_per_symbol: field(&rec, 3, path)?,
        });
    }
    Ok(rows)
}

/// Sidecar path holding the configuration a result file was produced with.
pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".config");
    PathBuf::from(name)
}

/// Echo every configuration field next to `csv`; the sidecar is itself a
/// valid configuration file.
pub fn emit_metadata(config: &SimConfig, csv: &Path) -> Result<PathBuf> {
    let path = metadata_path(csv);
    std::fs::write(&path, config.to_text()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Ber,
    Backhaul,
    Gamma,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ber" => Ok(PlotKind::Ber),
            "backhaul" => Ok(PlotKind::Backhaul),
            "gamma" => Ok(PlotKind::Gamma),
            _ => Err(Error::Config(format!("unknown plot kind '{s}'"))),
        }
    }
}

fn gnuplot_string(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Standalone gnuplot script drawing `data` (a CSV produced by this tool).
/// `labels` are the curves to draw: strategies for BER, schemes for
/// backhaul, network iterations for Γ.
pub fn plot_script(kind: PlotKind, data: &Path, labels: &[String]) -> String {
    let file = gnuplot_string(&data.display().to_string());
    let stem = data.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let mut s = String::from("set datafile separator ','\nset key top right\nset grid\n");
    s += &format!("set terminal pngcairo size 800,600\nset output '{stem}.png'\n");
    let curves: Vec<String> = match kind {
        PlotKind::Ber => {
            s += "set logscale y\nset format y '10^{%L}'\nset xlabel 'SNR [dB]'\nset ylabel 'Average BER'\n";
            labels
                .iter()
                .map(|l| {
                    format!(
                        "{file} using (strcol(1) eq {q} ? $2 : 1/0):5 with linespoints title {q}",
                        q = gnuplot_string(l)
                    )
                })
                .collect()
        }
        PlotKind::Backhaul => {
            s += "set xlabel 'Number of strong interferers'\nset ylabel 'Bits exchanged per symbol'\nset xtics 1\n";
            labels
                .iter()
                .map(|l| {
                    format!(
                        "{file} using (strcol(2) eq {q} ? $1 : 1/0):4 with linespoints title {q}",
                        q = gnuplot_string(l)
                    )
                })
                .collect()
        }
        PlotKind::Gamma => {
            s += "set xlabel 'SNR [dB]'\nset ylabel 'Average number of tentative decisions'\n";
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    format!(
                        "{file} using (strcol(1) eq 'rmp' ? $2 : 1/0):{} with linespoints title {}",
                        FIXED_COLUMNS.len() + i + 1,
                        gnuplot_string(l)
                    )
                })
                .collect()
        }
    };
    if curves.is_empty() {
        s += "# no curves in the data file\n";
    } else {
        s += &format!("plot {}\n", curves.join(", \\\n     "));
    }
    s
}

/// Plot script for the CSV at `data`; curve labels are taken from its rows.
pub fn emit_plot_script(kind: PlotKind, data: &Path, out: &Path) -> Result<()> {
    let labels: Vec<String> = match kind {
        PlotKind::Ber => unique(read_csv(data)?.iter().map(|r| r.strategy.to_string())),
        PlotKind::Backhaul => unique(read_backhaul_csv(data)?.into_iter().map(|r| r.scheme)),
        PlotKind::Gamma => {
            let width = gamma_width(&read_csv(data)?);
            (1..=width).map(|i| format!("iteration {i}")).collect()
        }
    };
    std::fs::write(out, plot_script(kind, data, &labels)).map_err(|e| io_err(out, e))
}

fn unique(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}
