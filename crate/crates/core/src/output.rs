//! Trajectory and report serialization.
//!
//! Columns: `t_over_omegaR, N_1..N_n, theta_1..theta_n, J_1..J_n, energy,
//! winding`. Times are in `1/omega_R`, currents in atoms per `1/omega_R`,
//! energy in units of `hbar omega_R`, phases unwrapped. Floats are printed
//! with 17 significant digits. Files are written to a temporary sibling
//! and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::{Error, Result};
use crate::integrator::{Sample, Trajectory};

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io {
            path: path.display().to_string(),
            message: "not a file path".into(),
        })?
        .to_string_lossy();
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn column_names(n: usize) -> Vec<String> {
    let mut cols = vec!["t_over_omegaR".to_owned()];
    cols.extend((1..=n).map(|i| format!("N_{i}")));
    cols.extend((1..=n).map(|i| format!("theta_{i}")));
    cols.extend((1..=n).map(|i| format!("J_{i}")));
    cols.push("energy".into());
    cols.push("winding".into());
    cols
}

fn fmt_f64(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

/// `# ringbec <version> config_sha256=<hash> ...` metadata line.
pub fn metadata_line(traj: &Trajectory, config_hash: &str) -> String {
    let p = &traj.metadata.params;
    format!(
        "# {} config_sha256={} n_wells={} total_atoms={} k_tilde={} lambda={} samples={}",
        traj.metadata.software,
        config_hash,
        p.n_wells(),
        p.total_atoms(),
        p.k_tilde(),
        p.lambda(),
        traj.len()
    )
}

struct Scaled<'a> {
    sample: &'a Sample,
    inv_omega: f64,
}

impl Scaled<'_> {
    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let o = &self.sample.observables;
        std::iter::once(self.sample.time)
            .chain(o.populations.iter().copied())
            .chain(self.sample.unwrapped_phases.iter().copied())
            .chain(o.currents.iter().map(move |j| j * self.inv_omega))
            .chain(std::iter::once(o.energy * self.inv_omega))
    }
}

pub fn trajectory_csv(traj: &Trajectory, config_hash: &str) -> String {
    let n = traj.n_wells();
    let inv_omega = 1.0 / traj.metadata.params.omega_r();
    let mut out = String::new();
    out.push_str(&metadata_line(traj, config_hash));
    out.push('\n');
    out.push_str(&column_names(n).join(","));
    out.push('\n');
    for sample in &traj.samples {
        let row = Scaled { sample, inv_omega };
        for (k, v) in row.values().enumerate() {
            if k > 0 {
                out.push(',');
            }
            fmt_f64(&mut out, v);
        }
        out.push(',');
        if let Some(w) = sample.observables.winding {
            let _ = write!(out, "{w}");
        }
        out.push('\n');
    }
    out
}

/// One JSON object per sample with the CSV column names as keys.
pub fn trajectory_jsonl(traj: &Trajectory) -> String {
    let n = traj.n_wells();
    let names = column_names(n);
    let inv_omega = 1.0 / traj.metadata.params.omega_r();
    let mut out = String::new();
    for sample in &traj.samples {
        let row = Scaled { sample, inv_omega };
        out.push('{');
        for (k, v) in row.values().enumerate() {
            let _ = write!(out, "\"{}\":", names[k]);
            if v.is_finite() {
                fmt_f64(&mut out, v);
            } else {
                out.push_str("null");
            }
            out.push(',');
        }
        match sample.observables.winding {
            Some(w) => {
                let _ = write!(out, "\"winding\":{w}");
            }
            None => out.push_str("\"winding\":null"),
        }
        out.push_str("}\n");
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, path: &Path, format: Format, config_hash: &str) -> Result<()> {
    let text = match format {
        Format::Csv => trajectory_csv(traj, config_hash),
        Format::Jsonl => trajectory_jsonl(traj),
    };
    write_atomic(path, text.as_bytes())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Parsed trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: String,
    pub columns: Vec<String>,
    /// Numeric cells; an empty winding cell reads as NaN.
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Value of `key=` in the metadata line.
    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }
}

pub fn parse_trajectory_csv(text: &str) -> Result<CsvTable> {
    let bad = |line: usize, msg: String| Error::Io {
        path: format!("csv line {line}"),
        message: msg,
    };
    let mut lines = text.lines();
    let metadata = lines
        .next()
        .filter(|l| l.starts_with('#'))
        .ok_or_else(|| bad(1, "missing metadata comment".into()))?
        .to_owned();
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| bad(2, "missing header".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(bad(
                k + 3,
                format!("expected {} cells, got {}", columns.len(), cells.len()),
            ));
        }
        let row = cells
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>().map_err(|e| bad(k + 3, format!("`{c}`: {e}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable {
        metadata,
        columns,
        rows,
    })
}

pub fn read_trajectory_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_csv(&text)
}
