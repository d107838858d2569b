//! CSV input and output.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{usage, CliError, CliResult};

pub const CURVE_HEADER: &[&str] = &[
    "dist", "params", "cost", "p", "a", "N", "trials", "mean", "stderr", "seed",
];
pub const TAIL_HEADER: &[&str] = &[
    "dist", "params", "cost", "p", "a", "N", "x", "phat", "ci_lo", "ci_hi", "trials", "seed",
];
pub const SELFNORM_HEADER: &[&str] = &[
    "dist",
    "params",
    "alpha",
    "delta",
    "direction",
    "N",
    "x",
    "phat",
    "ci_lo",
    "ci_hi",
    "envelope",
    "trials",
    "seed",
];
pub const SLOPE_HEADER: &[&str] = &[
    "dist",
    "params",
    "cost",
    "p",
    "a",
    "slope",
    "intercept",
    "r2",
    "rows",
];

/// 17 significant digits, enough to recover every f64 exactly.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A CSV sink on stdout or a file.
pub struct Sink {
    writer: csv::Writer<Box<dyn Write>>,
}

impl Sink {
    pub fn open(out: Option<&Path>, header: &[&str]) -> CliResult<Self> {
        let target: Box<dyn Write> = match out {
            Some(path) => Box::new(io::BufWriter::new(
                File::create(path).map_err(io_err(path))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(target);
        writer.write_record(header)?;
        Ok(Sink { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.writer.write_record(fields)?)
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|source| CliError::Io {
            path: "output".into(),
            source,
        })
    }
}

/// A CSV file held in memory with its header checked against `expected`.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path, expected: &[&str]) -> CliResult<Self> {
        let file = File::open(path).map_err(io_err(path))?;
        let mut reader = csv::Reader::from_reader(io::BufReader::new(file));
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(usage(format!(
                "{}: header must start with {}",
                path.display(),
                expected.join(",")
            )));
        }
        let rows = reader.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| usage(format!("missing column '{name}'")))
    }
}

pub fn field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> CliResult<T> {
    let raw = row.get(idx).unwrap_or("");
    raw.parse()
        .map_err(|_| usage(format!("column {name}: cannot parse '{raw}'")))
}
