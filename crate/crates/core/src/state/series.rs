use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csv_io::fmt_f64;
use super::{read_snapshot_csv, write_snapshot_csv, Grid1D, StrandState};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianParams;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
const FORMAT_VERSION: u32 = 1;

/// One line of the diagnostics table. Non-finite values are stored as JSON
/// `null` and read back as NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    #[serde(with = "nullable")]
    pub energy: f64,
    /// `|E(t) − E(0)| / |E(0)|`, or the absolute drift when `E(0) = 0`.
    #[serde(with = "nullable")]
    pub energy_drift: f64,
    /// `max |δh/δπ^s − ∂_s ρ|`.
    #[serde(with = "nullable")]
    pub legendre_pi_s: f64,
    /// `max |δh/δμ^s − ω_s|`.
    #[serde(with = "nullable")]
    pub legendre_mu_s: f64,
    #[serde(with = "nullable")]
    pub reconstruction_defect: f64,
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        x.is_finite().then_some(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Space-time block of snapshots with uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    pub grid: Grid1D,
    pub params: HamiltonianParams,
    pub dt_snapshot: f64,
    pub snapshots: Vec<StrandState>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesManifest {
    pub format_version: u32,
    pub grid: Grid1D,
    pub params: HamiltonianParams,
    pub dt_snapshot: f64,
    pub snapshots: Vec<SnapshotEntry>,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Every file written next to the manifest.
    pub files: Vec<String>,
    /// Scenario configuration, verbatim, when the series came from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

impl SolutionSeries {
    pub fn new(grid: Grid1D, params: HamiltonianParams, dt_snapshot: f64) -> Self {
        Self {
            grid,
            params,
            dt_snapshot,
            snapshots: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.snapshots.iter().map(|s| s.t)
    }

    /// Snapshots must be strictly increasing with spacing `dt_snapshot`
    /// (absolute tolerance `1e-12 · max(1, |t|)`).
    pub fn check_uniform(&self) -> Result<()> {
        for (i, w) in self.snapshots.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            let tol = 1e-12 * w[1].t.abs().max(1.0);
            if !(dt > 0.0) || (dt - self.dt_snapshot).abs() > tol {
                return Err(Error::NonUniformSnapshots {
                    index: i + 1,
                    dt,
                    expected: self.dt_snapshot,
                });
            }
        }
        Ok(())
    }

    pub fn require_snapshots(&self, need: usize) -> Result<()> {
        if self.snapshots.len() < need {
            return Err(Error::TooFewSnapshots {
                need,
                got: self.snapshots.len(),
            });
        }
        Ok(())
    }

    pub fn snapshot_file_name(index: usize) -> String {
        format!("snapshot_{index:05}.csv")
    }

    /// Writes snapshot CSVs, the diagnostics CSV, `extra` files and the
    /// manifest into `dir` (created if missing).
    pub fn save(
        &self,
        dir: &Path,
        config: Option<String>,
        extra: &[(String, String)],
    ) -> Result<SeriesManifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        let mut entries = Vec::with_capacity(self.snapshots.len());
        for (i, snap) in self.snapshots.iter().enumerate() {
            let name = Self::snapshot_file_name(i);
            let path = dir.join(&name);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_snapshot_csv(snap, &self.grid, BufWriter::new(f))?;
            entries.push(SnapshotEntry {
                t: snap.t,
                file: name.clone(),
            });
            files.push(name);
        }

        let diag_path = dir.join(DIAGNOSTICS_FILE);
        fs::write(&diag_path, diagnostics_csv(&self.diagnostics)).map_err(|e| Error::io(&diag_path, e))?;
        files.push(DIAGNOSTICS_FILE.to_string());

        for (name, contents) in extra {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
            files.push(name.clone());
        }
        files.push(MANIFEST_FILE.to_string());

        let manifest = SeriesManifest {
            format_version: FORMAT_VERSION,
            grid: self.grid,
            params: self.params.clone(),
            dt_snapshot: self.dt_snapshot,
            snapshots: entries,
            diagnostics: self.diagnostics.clone(),
            files,
            config,
        };
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    /// Loads a series written by [`SolutionSeries::save`].
    pub fn load(dir: &Path) -> Result<(Self, SeriesManifest)> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: SeriesManifest =
            serde_json::from_str(&text).map_err(|e| Error::malformed(&path, e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::malformed(
                &path,
                format!("unsupported format_version {}", manifest.format_version),
            ));
        }
        let mut series = SolutionSeries::new(manifest.grid, manifest.params.clone(), manifest.dt_snapshot);
        for entry in &manifest.snapshots {
            let p = dir.join(&entry.file);
            let f = fs::File::open(&p).map_err(|e| Error::io(&p, e))?;
            series
                .snapshots
                .push(read_snapshot_csv(std::io::BufReader::new(f), &manifest.grid, entry.t, &p)?);
        }
        series.diagnostics = manifest.diagnostics.clone();
        series
            .check_uniform()
            .map_err(|e| Error::malformed(&path, e.to_string()))?;
        Ok((series, manifest))
    }
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,energy,energy_drift,legendre_pi_s,legendre_mu_s,reconstruction_defect\n");
    for r in rows {
        let cols = [
            r.t,
            r.energy,
            r.energy_drift,
            r.legendre_pi_s,
            r.legendre_mu_s,
            r.reconstruction_defect,
        ];
        out.push_str(&cols.map(fmt_f64).join(","));
        out.push('\n');
    }
    out
}
