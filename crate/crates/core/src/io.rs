//! Artifact writers: CSV tables, flat little-endian binaries with JSON
//! headers, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{HistoryEntry, PiecewiseConstantControl};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::measure::{EmpiricalMeasure, GridDensity, Rect};
use crate::micro::TrajectoryBundle;

/// A written file with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Collects artifacts written below one output directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    records: Vec<ArtifactRecord>,
}

impl ArtifactWriter {
    pub fn new(root: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(Self {
            root: root.as_ref().to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[ArtifactRecord] {
        &self.records
    }

    pub fn write_bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), data)?;
        self.records.push(ArtifactRecord {
            path: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

fn f64_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

/// Bundle as `t,entity_class,index,x,y` rows.
pub fn bundle_csv(bundle: &TrajectoryBundle) -> String {
    let mut out = String::from("t,entity_class,index,x,y\n");
    for s in &bundle.states {
        for (class, pts) in [("commercial", &s.x), ("pirate", &s.y), ("guard", &s.z)] {
            for (i, p) in pts.iter().enumerate() {
                let _ = writeln!(out, "{},{class},{i},{},{}", s.t, p.x, p.y);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format: String,
    pub layout: String,
    pub states: usize,
    pub n_commercial: usize,
    pub n_pirates: usize,
    pub n_guards: usize,
    pub dt: f64,
    pub master_seed: u64,
    pub replication: u64,
    pub stream_algorithm: String,
}

/// Bundle as flat little-endian `f64`s plus its header.
pub fn bundle_binary(bundle: &TrajectoryBundle) -> (Vec<u8>, BundleHeader) {
    let first = &bundle.states[0];
    let header = BundleHeader {
        format: "f64-le".into(),
        layout: "per state: t, X[N][2], Y[M][2], Z[L][2]".into(),
        states: bundle.states.len(),
        n_commercial: first.x.len(),
        n_pirates: first.y.len(),
        n_guards: first.z.len(),
        dt: bundle.dt,
        master_seed: bundle.master_seed,
        replication: bundle.replication,
        stream_algorithm: bundle.stream_algorithm.clone(),
    };
    let data = f64_bytes(bundle.states.iter().flat_map(|s| {
        std::iter::once(s.t).chain(s.x.iter().chain(&s.y).chain(&s.z).flat_map(|p| [p.x, p.y]))
    }));
    (data, header)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub layout: String,
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub times: Vec<f64>,
}

/// Grid slices as flat little-endian `f64`s (`values[j·nx + i]` per slice).
pub fn grid_binary(times: &[f64], slices: &[GridDensity]) -> (Vec<u8>, GridHeader) {
    let g = &slices[0];
    let header = GridHeader {
        format: "f64-le".into(),
        layout: "per slice: values[j*nx + i], cell (i, j) centred at domain min + (i+1/2, j+1/2)*cell size".into(),
        domain: g.domain,
        nx: g.nx,
        ny: g.ny,
        times: times.to_vec(),
    };
    (f64_bytes(slices.iter().flat_map(|s| s.values.iter().copied())), header)
}

pub fn grid_from_binary(data: &[u8], header: &GridHeader) -> Vec<GridDensity> {
    let cells = header.nx * header.ny;
    data.chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect::<Vec<_>>()
        .chunks_exact(cells)
        .map(|v| GridDensity {
            domain: header.domain,
            nx: header.nx,
            ny: header.ny,
            values: v.to_vec(),
        })
        .collect()
}

pub fn empirical_csv(m: &EmpiricalMeasure) -> String {
    let mut out = String::from("x,y\n");
    for p in &m.points {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

/// Point series as `t,index,x,y` rows.
pub fn series_csv(times: &[f64], points: &[Vec<Vec2>]) -> String {
    let mut out = String::from("t,index,x,y\n");
    for (t, pts) in times.iter().zip(points) {
        for (i, p) in pts.iter().enumerate() {
            let _ = writeln!(out, "{t},{i},{},{}", p.x, p.y);
        }
    }
    out
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iter,value,energy,contact,ci,step\n");
    for h in history {
        let r = &h.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            h.iter, r.value, r.control_energy, r.contact_term, r.ci_halfwidth, h.step
        );
    }
    out
}

pub fn control_json(u: &PiecewiseConstantControl) -> Result<String> {
    Ok(serde_json::to_string_pretty(u)? + "\n")
}
