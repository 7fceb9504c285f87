//! Binary checkpoint sequences.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RNAC"
//! 4       2     version (u16, = 1)
//! 6       1     precision (0 = f32, 1 = f64)
//! 7       8     dim (u64)
//! 15      8     count (u64)
//! 23      ...   count * dim scalars, iterate-major
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RnaError};
use crate::extrapolation::IterateSequence;

pub const MAGIC: [u8; 4] = *b"RNAC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 23;
/// File in a checkpoint directory that lists member files in load order.
pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    fn tag(self) -> u8 {
        match self {
            Precision::F32 => 0,
            Precision::F64 => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Precision::F32),
            1 => Some(Precision::F64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?}, expected f32 or f64")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub precision: Precision,
    pub dim: u64,
    pub count: u64,
}

pub fn encode_header(header: &CheckpointHeader) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[0..4].copy_from_slice(&MAGIC);
    out[4..6].copy_from_slice(&VERSION.to_le_bytes());
    out[6] = header.precision.tag();
    out[7..15].copy_from_slice(&header.dim.to_le_bytes());
    out[15..23].copy_from_slice(&header.count.to_le_bytes());
    out
}

fn decode_header(path: &Path, bytes: &[u8]) -> Result<CheckpointHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(RnaError::format(path, "file shorter than header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(RnaError::format(path, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(RnaError::format(path, format!("unsupported version {version}")));
    }
    let precision = Precision::from_tag(bytes[6])
        .ok_or_else(|| RnaError::format(path, format!("unknown precision tag {}", bytes[6])))?;
    let dim = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[15..23].try_into().unwrap());
    Ok(CheckpointHeader {
        precision,
        dim,
        count,
    })
}

/// Serializes a sequence into checkpoint bytes.
pub fn encode_checkpoints(seq: &IterateSequence, precision: Precision) -> Vec<u8> {
    let header = CheckpointHeader {
        precision,
        dim: seq.dim() as u64,
        count: seq.len() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + seq.len() * seq.dim() * precision.width());
    out.extend_from_slice(&encode_header(&header));
    for theta in seq.iterates() {
        for &v in theta {
            match precision {
                Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}

pub fn write_checkpoints(path: impl AsRef<Path>, seq: &IterateSequence, precision: Precision) -> Result<()> {
    let path = path.as_ref();
    if precision == Precision::F32 {
        let overflow = seq
            .iterates()
            .iter()
            .flatten()
            .any(|v| !(*v as f32).is_finite());
        if overflow {
            return Err(RnaError::NumericalFailure(
                "value out of f32 range for f32 checkpoint".into(),
            ));
        }
    }
    let file = File::create(path).map_err(|e| RnaError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_checkpoints(seq, precision))
        .and_then(|_| w.flush())
        .map_err(|e| RnaError::io(path, e))
}

/// Parses checkpoint bytes; `path` is only used for error messages.
pub fn decode_checkpoints(path: &Path, bytes: &[u8]) -> Result<(Precision, IterateSequence)> {
    let header = decode_header(path, bytes)?;
    let width = header.precision.width() as u64;
    let expected = header
        .count
        .checked_mul(header.dim)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| RnaError::format(path, "header size overflows"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(RnaError::format(
            path,
            format!(
                "payload is {} bytes, header declares {} x {} scalars ({} bytes)",
                payload.len(),
                header.count,
                header.dim,
                expected
            ),
        ));
    }
    if header.dim == 0 || header.count == 0 {
        return Err(RnaError::format(path, "empty checkpoint sequence"));
    }
    let dim = header.dim as usize;
    let values: Vec<f64> = match header.precision {
        Precision::F64 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        Precision::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(RnaError::NumericalFailure(format!(
            "{}: non-finite scalar at iterate {}, index {}",
            path.display(),
            i / dim,
            i % dim
        )));
    }
    let iterates = values.chunks_exact(dim).map(<[f64]>::to_vec).collect();
    Ok((header.precision, IterateSequence::new(iterates)?))
}

pub fn read_checkpoints(path: impl AsRef<Path>) -> Result<IterateSequence> {
    read_checkpoints_with_precision(path).map(|(_, seq)| seq)
}

pub fn read_checkpoints_with_precision(path: impl AsRef<Path>) -> Result<(Precision, IterateSequence)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_end(&mut bytes))
        .map_err(|e| RnaError::io(path, e))?;
    decode_checkpoints(path, &bytes)
}

/// Loads every checkpoint file in a directory and concatenates them.
///
/// Files are taken in lexicographic order of their names unless the directory
/// holds a `manifest.txt`, whose non-empty, non-`#` lines name the files in order.
pub fn read_checkpoint_dir(dir: impl AsRef<Path>) -> Result<IterateSequence> {
    let dir = dir.as_ref();
    let files = checkpoint_files(dir)?;
    if files.is_empty() {
        return Err(RnaError::format(dir, "directory holds no checkpoint files"));
    }
    let mut iterates = Vec::new();
    for file in files {
        let seq = read_checkpoints(&file)?;
        iterates.extend(seq.into_inner());
    }
    IterateSequence::new(iterates)
}

fn checkpoint_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = dir.join(MANIFEST_NAME);
    if manifest.is_file() {
        let text = fs::read_to_string(&manifest).map_err(|e| RnaError::io(&manifest, e))?;
        return Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| dir.join(l))
            .collect());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| RnaError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Reads either a single checkpoint file or a directory of them.
pub fn read_checkpoint_path(path: impl AsRef<Path>) -> Result<IterateSequence> {
    let path = path.as_ref();
    if path.is_dir() {
        read_checkpoint_dir(path)
    } else {
        read_checkpoints(path)
    }
}
