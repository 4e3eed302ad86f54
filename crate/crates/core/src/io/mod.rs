//! On-disk formats shared with the CLI: the binary event container, 16-bit
//! PNG depth, pose text files, a minimal OBJ mesh subset, JSON manifests and
//! calibration observations, tracking CSV, and raw grid dumps.

mod depth;
mod events;
mod manifest;
mod mesh_obj;
mod poses;
mod track;

pub use depth::{read_depth, write_depth, DEPTH_MAX_METERS};
pub use events::{
    read_events, write_events, EVENT_FILE_VERSION, EVENT_HEADER_BYTES, EVENT_RECORD_BYTES,
};
pub use manifest::{
    read_calib_observations, read_intrinsics, read_symmetries, write_calib_result,
    write_intrinsics, SequenceManifest, SequencePaths,
};
pub use mesh_obj::{read_mesh_obj, write_mesh_obj};
pub use poses::{format_pose_line, read_poses, write_poses};
pub use track::{
    read_flow, read_track_csv, read_voxel_grid, write_flow, write_track_csv, write_voxel_grid,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic at byte 0: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported version {0}")]
    BadVersion(u16),
    #[error("file truncated at byte offset {0}")]
    Truncated(u64),
    #[error("header count {header} but {actual} records present")]
    CountMismatch { header: u64, actual: u64 },
    #[error("invalid record at byte offset {offset}: {reason}")]
    BadRecord { offset: u64, reason: String },
    #[error("malformed line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("depth {0} m exceeds the 65.535 m PNG16 range")]
    DepthOutOfRange(f32),
    #[error("image decode: {0}")]
    Image(String),
    #[error("not a 16-bit grayscale image")]
    NotDepthPng,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest references missing file {0}")]
    MissingFile(std::path::PathBuf),
    #[error("invalid data: {0}")]
    Invalid(String),
}
