use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A command result that can be written in every output format.
pub trait Render: Serialize {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
    fn text(&self) -> String;
}

pub fn emit<R: Render>(out: &mut impl Write, report: &R, format: Format) -> std::io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(report.csv_header())?;
            for row in report.csv_rows() {
                w.write_record(row)?;
            }
            w.flush()
        }
        Format::Text => out.write_all(report.text().as_bytes()),
    }
}

/// Shortest round-trip form in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn bits(nats: f64) -> f64 {
    nats * std::f64::consts::LOG2_E
}

pub fn pairs_one_based(pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|(i, j)| format!("({},{})", i + 1, j + 1))
        .collect::<Vec<_>>()
        .join(" ")
}
