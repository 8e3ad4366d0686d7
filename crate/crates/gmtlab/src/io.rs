//! Measure file formats.
//!
//! Two interchangeable encodings:
//!  * JSON: `{"dim": d, "points": [[...], ...], "weights": [...]}`
//!  * binary columnar (`.gmtm`): magic `GMTM`, little-endian `u32` dim,
//!    `u64` count, then `dim` coordinate columns of `count` f64 values
//!    each, then `count` f64 weights. All floats little-endian.

use crate::error::{Error, Result};
use crate::measure::{CoincidentPolicy, DiscreteMeasure};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GMTM";

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

pub fn to_json_string(mu: &DiscreteMeasure) -> Result<String> {
    let doc = MeasureJson {
        dim: mu.dim(),
        points: mu.points_iter().map(|p| p.to_vec()).collect(),
        weights: mu.weights().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json_str(text: &str) -> Result<DiscreteMeasure> {
    let doc: MeasureJson = serde_json::from_str(text)?;
    DiscreteMeasure::new(doc.dim, doc.points, doc.weights)
}

pub fn to_binary(mu: &DiscreteMeasure) -> Vec<u8> {
    let n = mu.len();
    let dim = mu.dim();
    let mut buf = Vec::with_capacity(16 + 8 * n * (dim + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for axis in 0..dim {
        for i in 0..n {
            buf.extend_from_slice(&mu.point(i)[axis].to_le_bytes());
        }
    }
    for i in 0..n {
        buf.extend_from_slice(&mu.weight(i).to_le_bytes());
    }
    buf
}

pub fn from_binary(buf: &[u8]) -> Result<DiscreteMeasure> {
    if buf.len() < 16 || &buf[0..4] != MAGIC {
        return Err(Error::Format("missing GMTM magic".into()));
    }
    let dim = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let expected = 16 + 8 * n * (dim + 1);
    if dim == 0 || buf.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for dim {dim}, count {n}; got {}",
            buf.len()
        )));
    }
    let f64_at = |k: usize| f64::from_le_bytes(buf[16 + 8 * k..24 + 8 * k].try_into().unwrap());
    let mut coords = vec![0.0; n * dim];
    for axis in 0..dim {
        for i in 0..n {
            coords[i * dim + axis] = f64_at(axis * n + i);
        }
    }
    let weights: Vec<f64> = (0..n).map(|i| f64_at(dim * n + i)).collect();
    DiscreteMeasure::from_flat(dim, coords, weights, CoincidentPolicy::Reject)
}

/// Reads either format, keyed on the magic / leading brace.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.starts_with(MAGIC) {
        from_binary(&buf)
    } else {
        from_json_str(std::str::from_utf8(&buf).map_err(|e| Error::Format(e.to_string()))?)
    }
}

/// Writes a measure; `.json` extension selects JSON, anything else the
/// binary format. Write is atomic (temp file + rename).
pub fn write_measure(mu: &DiscreteMeasure, path: &Path) -> Result<()> {
    let bytes = if path.extension().is_some_and(|e| e == "json") {
        to_json_string(mu)?.into_bytes()
    } else {
        to_binary(mu)
    };
    write_atomic(path, &bytes)
}

/// Temp-file-then-rename write in the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().unwrap_or_default().to_string_lossy(),
            std::process::id()
        )),
        None => Path::new(&format!(
            ".{}.tmp{}",
            path.display(),
            std::process::id()
        ))
        .to_path_buf(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
