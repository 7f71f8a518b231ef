//! On-disk formats.
//!
//! **Sample batches** are a pair `<stem>.json` + `<stem>.bin`. The binary
//! file is
//!
//! ```text
//! offset 0   b"OCPBATCH"              8 bytes
//!        8   format version (u32 LE)  = 1
//!        12  N (u32 LE)
//!        16  frames, each N × (x, y) as f64 LE, frames consecutive
//!        …   footer: b"OCPFOOT\0" + frame count (u64 LE)
//! ```
//!
//! Frames are appended in place of the footer, which is rewritten after
//! every frame, so an interrupted run leaves a file whose footer (if
//! present) counts only complete frames. Without a footer the reader
//! recovers the frames that certainly completed. The JSON sidecar holds the
//! gas parameters, chain schedule, random-stream path and, once the run
//! finishes, energies and the acceptance rate.
//!
//! **Equilibrium grids** are `<stem>.json` (grid spec, `F`, diagnostics)
//! plus `<stem>.bin`: `b"OCPGRID\0"`, `n` (u32 LE), 4 padding bytes, then
//! `u` and the density as `n²` f64 LE each, row-major (row `j` holds
//! `y_j`, columns run over `x_i`), then the support mask as `n²` bytes.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{EquilibriumResult, GridField, GridMeasure, GridSpec, SolverDiagnostics};
use crate::kernel::PlanePoint;
use crate::sampler::{total_energy, ChainConfig, ChainSummary, Configuration, GasParams, SampleBatch};

const BATCH_MAGIC: &[u8; 8] = b"OCPBATCH";
const FOOTER_MAGIC: &[u8; 8] = b"OCPFOOT\0";
const GRID_MAGIC: &[u8; 8] = b"OCPGRID\0";
const VERSION: u32 = 1;
const HEADER: u64 = 16;
const FOOTER: u64 = 16;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(file_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}

/// JSON sidecar of a sample batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchMeta {
    pub format: String,
    pub params: GasParams,
    pub chain: ChainConfig,
    /// Derivation path of the chain's random stream under `chain.seed`.
    pub rng_path: String,
    pub complete: bool,
    pub frames: usize,
    pub acceptance_rate: Option<f64>,
    pub step_size: Option<f64>,
    pub warning: Option<String>,
    pub energies: Option<Vec<f64>>,
}

impl BatchMeta {
    fn start(params: &GasParams, chain: &ChainConfig) -> Self {
        Self {
            format: "ocp-batch/1".into(),
            params: params.clone(),
            chain: chain.clone(),
            rng_path: format!("chain/{}", chain.stream),
            complete: false,
            frames: 0,
            acceptance_rate: None,
            step_size: None,
            warning: None,
            energies: None,
        }
    }
}

/// Appends frames to a batch file pair as a chain runs.
pub struct BatchWriter {
    bin: File,
    bin_path: PathBuf,
    json_path: PathBuf,
    meta: BatchMeta,
    energies: Vec<f64>,
    buf: Vec<u8>,
}

impl BatchWriter {
    pub fn create(stem: &Path, params: &GasParams, chain: &ChainConfig) -> Result<Self, IoError> {
        let bin_path = with_ext(stem, "bin");
        let json_path = with_ext(stem, "json");
        let meta = BatchMeta::start(params, chain);
        write_json(&json_path, &meta)?;
        let mut bin = File::create(&bin_path).map_err(file_err(&bin_path))?;
        let n = u32::try_from(params.n)
            .map_err(|_| IoError::Format { path: bin_path.clone(), reason: "N exceeds u32".into() })?;
        let mut head = Vec::with_capacity(32);
        head.extend_from_slice(BATCH_MAGIC);
        head.extend_from_slice(&VERSION.to_le_bytes());
        head.extend_from_slice(&n.to_le_bytes());
        head.extend_from_slice(FOOTER_MAGIC);
        head.extend_from_slice(&0u64.to_le_bytes());
        bin.write_all(&head).map_err(file_err(&bin_path))?;
        Ok(Self { bin, bin_path, json_path, meta, energies: Vec::new(), buf: Vec::new() })
    }

    /// Writes one frame over the footer, then a fresh footer after it.
    pub fn push(&mut self, c: &Configuration, energy: f64) -> Result<(), IoError> {
        if c.len() != self.meta.params.n {
            return Err(IoError::Format {
                path: self.bin_path.clone(),
                reason: format!("frame has {} points, batch has N = {}", c.len(), self.meta.params.n),
            });
        }
        self.buf.clear();
        for z in &c.points {
            self.buf.extend_from_slice(&z.x.to_le_bytes());
            self.buf.extend_from_slice(&z.y.to_le_bytes());
        }
        let frames = self.energies.len() as u64 + 1;
        self.buf.extend_from_slice(FOOTER_MAGIC);
        self.buf.extend_from_slice(&frames.to_le_bytes());
        let at = HEADER + (frames - 1) * 16 * c.len() as u64;
        let path = &self.bin_path;
        self.bin.seek(SeekFrom::Start(at)).map_err(file_err(path))?;
        self.bin.write_all(&self.buf).map_err(file_err(path))?;
        self.energies.push(energy);
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.energies.len()
    }

    /// Flushes the binary file and completes the JSON sidecar.
    pub fn finish(mut self, summary: &ChainSummary) -> Result<BatchMeta, IoError> {
        self.bin.sync_all().map_err(file_err(&self.bin_path))?;
        self.meta.complete = true;
        self.meta.frames = self.energies.len();
        self.meta.acceptance_rate = Some(summary.acceptance_rate);
        self.meta.step_size = Some(summary.step_size);
        self.meta.warning = summary.warning.clone();
        self.meta.energies = Some(std::mem::take(&mut self.energies));
        write_json(&self.json_path, &self.meta)?;
        Ok(self.meta)
    }
}

/// Writes a finished batch in one go (same bytes as streaming it).
pub fn write_batch(stem: &Path, batch: &SampleBatch) -> Result<(), IoError> {
    let mut w = BatchWriter::create(stem, &batch.params, &batch.chain)?;
    for (c, e) in batch.configs.iter().zip(&batch.energies) {
        w.push(c, *e)?;
    }
    let summary = ChainSummary {
        frames: batch.configs.len(),
        acceptance_rate: batch.acceptance_rate,
        step_size: batch.step_size,
        warning: batch.warning.clone(),
    };
    w.finish(&summary)?;
    Ok(())
}

/// How a batch was read back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchStatus {
    Complete,
    /// The run was interrupted; the frames that certainly completed were
    /// recovered and energies recomputed.
    Recovered { frames: usize },
}

/// Reads a batch file pair; interrupted runs are recovered.
pub fn read_batch(stem: &Path) -> Result<(SampleBatch, BatchStatus), IoError> {
    let json_path = with_ext(stem, "json");
    let bin_path = with_ext(stem, "bin");
    let meta: BatchMeta = read_json(&json_path)?;
    let mut bytes = Vec::new();
    File::open(&bin_path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(file_err(&bin_path))?;
    let bad = |reason: String| IoError::Format { path: bin_path.clone(), reason };
    if bytes.len() < HEADER as usize || &bytes[..8] != BATCH_MAGIC {
        return Err(bad("not a batch file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if n != meta.params.n {
        return Err(bad(format!("header N = {n} but metadata N = {}", meta.params.n)));
    }
    let frame = 16 * n as u64;
    let len = bytes.len() as u64;
    let footer_count = (len >= HEADER + FOOTER && &bytes[(len - FOOTER) as usize..(len - 8) as usize] == FOOTER_MAGIC)
        .then(|| u64::from_le_bytes(bytes[(len - 8) as usize..].try_into().unwrap()))
        .filter(|&k| HEADER + k * frame + FOOTER == len);
    let frames = match footer_count {
        Some(k) => k as usize,
        // a frame may have been written without its footer, or partially
        None => (len.saturating_sub(HEADER + FOOTER) / frame) as usize,
    };
    let configs: Vec<Configuration> = (0..frames)
        .map(|k| {
            let base = (HEADER + k as u64 * frame) as usize;
            let f = |o: usize| f64::from_le_bytes(bytes[base + 8 * o..base + 8 * o + 8].try_into().unwrap());
            Configuration::new((0..n).map(|j| PlanePoint::new(f(2 * j), f(2 * j + 1))).collect())
        })
        .collect();
    let complete = meta.complete && footer_count.is_some() && meta.frames == frames;
    let energies = match (&meta.energies, complete) {
        (Some(e), true) if e.len() == frames => e.clone(),
        _ => configs.iter().map(|c| total_energy(c, &meta.params.potential, n)).collect(),
    };
    let batch = SampleBatch {
        params: meta.params,
        chain: meta.chain,
        configs,
        energies,
        acceptance_rate: meta.acceptance_rate.unwrap_or(f64::NAN),
        step_size: meta.step_size.unwrap_or(f64::NAN),
        warning: meta.warning,
    };
    let status = if complete { BatchStatus::Complete } else { BatchStatus::Recovered { frames } };
    Ok((batch, status))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridHeader {
    format: String,
    grid: GridSpec,
    f_constant: f64,
    mass: f64,
    diagnostics: SolverDiagnostics,
    layout: String,
}

/// Writes an equilibrium solve as `<stem>.json` + `<stem>.bin`.
pub fn write_equilibrium(stem: &Path, eq: &EquilibriumResult) -> Result<(), IoError> {
    let json_path = with_ext(stem, "json");
    let bin_path = with_ext(stem, "bin");
    let grid = eq.grid();
    write_json(
        &json_path,
        &GridHeader {
            format: "ocp-grid/1".into(),
            grid,
            f_constant: eq.f_constant,
            mass: eq.measure.mass(),
            diagnostics: eq.diagnostics.clone(),
            layout: "magic[8] n:u32 pad[4] | u: n*n f64 | density: n*n f64 | mask: n*n u8; little-endian, row-major".into(),
        },
    )?;
    let f = File::create(&bin_path).map_err(file_err(&bin_path))?;
    let mut w = BufWriter::new(f);
    let mut out = || -> std::io::Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(grid.n as u32).to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for v in eq.u.values.iter().chain(eq.measure.density()) {
            w.write_all(&v.to_le_bytes())?;
        }
        let mask: Vec<u8> = eq.support_mask.iter().map(|&b| b as u8).collect();
        w.write_all(&mask)?;
        w.flush()
    };
    out().map_err(file_err(&bin_path))
}

/// Reads back `(u, measure, support mask, F)` from an equilibrium export.
pub fn read_equilibrium(stem: &Path) -> Result<(GridField, GridMeasure, Vec<bool>, f64), IoError> {
    let json_path = with_ext(stem, "json");
    let bin_path = with_ext(stem, "bin");
    let head: GridHeader = read_json(&json_path)?;
    let bytes = std::fs::read(&bin_path).map_err(file_err(&bin_path))?;
    let bad = |reason: &str| IoError::Format { path: bin_path.clone(), reason: reason.into() };
    let n = head.grid.n;
    let cells = n * n;
    if bytes.len() != 16 + 17 * cells || &bytes[..8] != GRID_MAGIC {
        return Err(bad("size or magic mismatch"));
    }
    if u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize != n {
        return Err(bad("grid size differs from header"));
    }
    let block = |k: usize| -> Vec<f64> {
        (0..cells)
            .map(|c| {
                let o = 16 + 8 * (k * cells + c);
                f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
            })
            .collect()
    };
    let u = GridField::new(head.grid, block(0)).map_err(|e| bad(&e.to_string()))?;
    let mu = GridMeasure::new(head.grid, block(1)).map_err(|e| bad(&e.to_string()))?;
    let mask = bytes[16 + 16 * cells..].iter().map(|&b| b != 0).collect();
    Ok((u, mu, mask, head.f_constant))
}

/// Opens `path` for appending a line-oriented log.
pub fn append_log(path: &Path, line: &str) -> Result<(), IoError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(file_err(path))?;
    writeln!(f, "{line}").map_err(file_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve_equilibrium_radial, solve_obstacle, ObstacleOptions};
    use crate::potential::make_quadratic;
    use crate::sampler::{run_chain, run_chain_streaming, Algorithm, Init, SamplerError};

    fn small_batch() -> SampleBatch {
        let q = make_quadratic();
        let eq = solve_equilibrium_radial(&q).unwrap();
        let params = GasParams::new(5, 1.0, q).unwrap();
        run_chain(&params, &ChainConfig::new(Algorithm::RandomWalk, 60, 10, 5, 3), Init::EquilibriumIid(&eq)).unwrap()
    }

    #[test]
    fn batch_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("b");
        let b = small_batch();
        write_batch(&stem, &b).unwrap();
        let (r, status) = read_batch(&stem).unwrap();
        assert_eq!(status, BatchStatus::Complete);
        assert_eq!(r.configs, b.configs);
        assert_eq!(r.energies, b.energies);
        assert_eq!(r.acceptance_rate, b.acceptance_rate);
        let len = std::fs::metadata(with_ext(&stem, "bin")).unwrap().len();
        assert_eq!(len, HEADER + 10 * 16 * 5 + FOOTER);
    }

    #[test]
    fn streaming_matches_one_shot_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let b = small_batch();
        write_batch(&dir.path().join("a"), &b).unwrap();
        let q = make_quadratic();
        let eq = solve_equilibrium_radial(&q).unwrap();
        let mut w = BatchWriter::create(&dir.path().join("s"), &b.params, &b.chain).unwrap();
        let summary = run_chain_streaming(&b.params, &b.chain, Init::EquilibriumIid(&eq), &mut |c, e| {
            w.push(c, e).map_err(|e| SamplerError::Sink(e.to_string()))
        })
        .unwrap();
        w.finish(&summary).unwrap();
        for ext in ["bin", "json"] {
            let x = std::fs::read(with_ext(&dir.path().join("a"), ext)).unwrap();
            let y = std::fs::read(with_ext(&dir.path().join("s"), ext)).unwrap();
            assert_eq!(x, y, "{ext}");
        }
    }

    #[test]
    fn interrupted_runs_are_recovered() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("t");
        let b = small_batch();
        let mut w = BatchWriter::create(&stem, &b.params, &b.chain).unwrap();
        for (c, e) in b.configs.iter().zip(&b.energies).take(4) {
            w.push(c, *e).unwrap();
        }
        drop(w);
        // killed between frames: footer intact
        let (r, status) = read_batch(&stem).unwrap();
        assert_eq!(status, BatchStatus::Recovered { frames: 4 });
        assert_eq!(r.configs[..], b.configs[..4]);
        for (x, y) in r.energies.iter().zip(&b.energies) {
            assert!((x - y).abs() <= 1e-8 * y.abs());
        }
        // killed mid-frame: footer overwritten, the partial fifth frame is dropped
        let bin = with_ext(&stem, "bin");
        let full = std::fs::read(&bin).unwrap();
        let cut = (HEADER + 4 * 80 + 30) as usize;
        let mut bytes = full[..(HEADER + 4 * 80) as usize].to_vec();
        bytes.extend_from_slice(&[7u8; 30]);
        assert_eq!(bytes.len(), cut);
        std::fs::write(&bin, &bytes).unwrap();
        let (r, status) = read_batch(&stem).unwrap();
        assert_eq!(status, BatchStatus::Recovered { frames: 4 });
        assert_eq!(r.configs[..], b.configs[..4]);
    }

    #[test]
    fn equilibrium_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("eq");
        let grid = GridSpec::square(2.0, 64).unwrap();
        let eq = solve_obstacle(&make_quadratic(), grid, &ObstacleOptions::default()).unwrap();
        write_equilibrium(&stem, &eq).unwrap();
        let (u, mu, mask, f) = read_equilibrium(&stem).unwrap();
        assert_eq!(u, eq.u);
        assert_eq!(mu, eq.measure);
        assert_eq!(mask, eq.support_mask);
        assert_eq!(f, eq.f_constant);
        assert_eq!(std::fs::metadata(with_ext(&stem, "bin")).unwrap().len(), 16 + 17 * 64 * 64);
    }
}
