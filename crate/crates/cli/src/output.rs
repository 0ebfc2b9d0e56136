//! Output files. Tables are CSV and summaries are `key: value` lines; both
//! start with a `#` block recording the version, command, seed and the full
//! resolved configuration. Nothing time-dependent is written, so reruns with
//! the same inputs are byte-identical.

use crate::config::Settings;
use anyhow::{bail, Context, Result};
use ionprobe::SensitivityPoint;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub struct Output {
    dir: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, command: &str, settings: &Settings) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut header = String::new();
        writeln!(header, "# ionprobe {}", ionprobe::VERSION).unwrap();
        writeln!(header, "# command: {command}").unwrap();
        writeln!(header, "# seed: {}", settings.seed).unwrap();
        writeln!(header, "# config:").unwrap();
        for line in settings.to_toml().lines() {
            writeln!(header, "#   {line}").unwrap();
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    /// Adds a line to the header of every file written afterwards.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.header, "# {key}: {value}").unwrap();
    }

    pub fn table<R, I>(&mut self, name: &str, columns: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        file.write_all(self.header.as_bytes())?;
        let mut csv = csv::Writer::from_writer(file);
        csv.write_record(columns)?;
        for row in rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        self.finish(path);
        Ok(())
    }

    pub fn summary(&mut self, name: &str, entries: &[(String, String)]) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = self.header.clone();
        for (key, value) in entries {
            writeln!(text, "{key}: {value}").unwrap();
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.finish(path);
        Ok(())
    }

    fn finish(&mut self, path: PathBuf) {
        log::info!("wrote {}", path.display());
        self.written.push(path);
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Collects `key: value` summary entries.
#[derive(Default)]
pub struct Entries(pub Vec<(String, String)>);

impl Entries {
    pub fn add(&mut self, key: impl Into<String>, value: impl std::fmt::Display) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }
}

/// Shortest representation that parses back to `v` exactly, in exponent form
/// outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub const SENSITIVITY_COLUMNS: [&str; 6] = [
    "observation_time_s",
    "inverse_sensitivity",
    "std_error",
    "slope",
    "replicates_used",
    "controlled",
];

pub fn sensitivity_row(p: &SensitivityPoint) -> Vec<String> {
    vec![
        num(p.observation_time),
        num(p.inverse_sensitivity),
        num(p.std_error),
        num(p.slope),
        p.replicates_used.to_string(),
        p.controlled.to_string(),
    ]
}

/// Reads a table written by the `sensitivity` command.
pub fn read_sensitivity(path: &Path) -> Result<Vec<SensitivityPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no '{name}' column", path.display()))
    };
    let (t, v, se) = (
        column("observation_time_s")?,
        column("inverse_sensitivity")?,
        column("std_error")?,
    );
    let slope = column("slope").ok();
    let used = column("replicates_used").ok();
    let controlled = column("controlled").ok();
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.trim()
                .parse()
                .with_context(|| format!("row {}: invalid number '{raw}'", line + 1))
        };
        let inverse_sensitivity = field(v)?;
        points.push(SensitivityPoint {
            observation_time: field(t)?,
            inverse_sensitivity,
            std_error: field(se)?,
            controlled: controlled.and_then(|i| record.get(i)).is_some_and(|s| s.trim() == "true"),
            slope: slope.map(field).transpose()?.unwrap_or(1.0 / inverse_sensitivity),
            replicates_used: used.and_then(|i| record.get(i)?.trim().parse().ok()).unwrap_or(0),
        });
    }
    if points.is_empty() {
        bail!("{} contains no data rows", path.display());
    }
    Ok(points)
}
