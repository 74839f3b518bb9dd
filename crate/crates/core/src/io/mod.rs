//! Interchange formats: PFM dense fields, MVSNet-style `cam.txt` and
//! `pair.txt`, and binary PLY point clouds.

mod cam;
mod pair;
mod pfm;
mod ply;

pub use cam::{read_cam, write_cam};
pub use pair::{read_pair, write_pair, PairEntry, PairList};
pub use pfm::{read_depth_pfm, read_pfm, write_depth_pfm, write_grid_pfm, write_pfm, PfmImage};
pub use ply::{read_ply, write_ply};

use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};

/// Parse failures, each carrying the position it was detected at.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("pfm: {msg} (byte {offset})")]
    Pfm { offset: usize, msg: String },
    #[error("pfm: colour images (PF) are not supported")]
    ColorUnsupported,
    #[error("cam: {msg} (line {line})")]
    Cam { line: usize, msg: String },
    #[error("pair: {msg} (line {line})")]
    Pair { line: usize, msg: String },
    #[error("ply: {msg} (line {line})")]
    PlyHeader { line: usize, msg: String },
    #[error("ply: {msg} (byte {offset})")]
    PlyBody { offset: usize, msg: String },
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
