//! JSON side files: the sequence manifest binding a dataset together,
//! intrinsics, symmetry sets, calibration observations, and calibration
//! results.

use super::IoError;
use crate::calibration::{CalibCorner, CalibObservation, CalibResult};
use crate::geometry::{Intrinsics, Pose, TimingModel};
use crate::registration::Pixel;
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// File locations of one recorded or simulated sequence, relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequencePaths {
    pub events: PathBuf,
    pub depth_dir: PathBuf,
    pub poses: PathBuf,
    pub mesh: PathBuf,
    pub intrinsics: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub paths: SequencePaths,
    pub timing: TimingModel,
    pub width: u16,
    pub height: u16,
    pub object: String,
    pub seed: u64,
    pub depth_frames: usize,
}

impl SequenceManifest {
    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads and verifies that every referenced file exists relative to the
    /// manifest's directory.
    pub fn load(path: &Path) -> Result<SequenceManifest, IoError> {
        let text = std::fs::read_to_string(path)?;
        let manifest: SequenceManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for rel in [
            &manifest.paths.events,
            &manifest.paths.depth_dir,
            &manifest.paths.poses,
            &manifest.paths.mesh,
            &manifest.paths.intrinsics,
        ] {
            let full = base.join(rel);
            if !full.exists() {
                return Err(IoError::MissingFile(full));
            }
        }
        Ok(manifest)
    }

    pub fn resolve(&self, manifest_path: &Path, rel: &Path) -> PathBuf {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(rel)
    }

    /// Conventional name of depth frame `i` inside `depth_dir`.
    pub fn depth_frame_name(i: usize) -> String {
        format!("{i:06}.png")
    }
}

pub fn write_intrinsics(path: &Path, k: &Intrinsics) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(k)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_intrinsics(path: &Path) -> Result<Intrinsics, IoError> {
    let text = std::fs::read_to_string(path)?;
    let k: Intrinsics = serde_json::from_str(&text)?;
    Intrinsics::new(k.fx, k.fy, k.cx, k.cy, k.width, k.height)
        .map_err(|e| IoError::Invalid(e.to_string()))
}

/// Symmetry JSON: an array of 12-number arrays (row-major rotation then
/// translation). The identity is implied and added by the caller.
pub fn read_symmetries(path: &Path) -> Result<Vec<Pose>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<[f64; 12]> = serde_json::from_str(&text)?;
    rows.iter()
        .map(|row| Pose::from_fields(row).map_err(|e| IoError::Invalid(e.to_string())))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CornerJson {
    id: u32,
    #[serde(rename = "P")]
    p: [f64; 3],
    x: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationJson {
    t_us: i64,
    corners: Vec<CornerJson>,
}

/// Calibration observations: `[{t_us, corners: [{id, P: [x,y,z], x: [u,v]}]}]`.
pub fn read_calib_observations(path: &Path) -> Result<Vec<CalibObservation>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<ObservationJson> = serde_json::from_str(&text)?;
    Ok(rows
        .into_iter()
        .map(|o| CalibObservation {
            t_us: o.t_us,
            corners: o
                .corners
                .into_iter()
                .map(|c| CalibCorner {
                    id: c.id,
                    point_world: Vec3::new(c.p[0], c.p[1], c.p[2]),
                    pixel: Pixel::new(c.x[0], c.x[1]),
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct CalibResultJson<'a> {
    pose: [f64; 12],
    inlier_mask: &'a [bool],
    rms_reprojection: f64,
    coplanar_warning: bool,
}

/// Calibration result JSON: pose as 12 fields, pooled inlier mask, inlier
/// RMS in pixels.
pub fn write_calib_result(path: &Path, result: &CalibResult) -> Result<(), IoError> {
    let json = CalibResultJson {
        pose: result.t_co.to_fields(),
        inlier_mask: &result.inlier_mask,
        rms_reprojection: result.rms_reprojection,
        coplanar_warning: result.coplanar_warning,
    };
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_load_save_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["ev.evt", "poses.txt", "mesh.obj", "k.json"] {
            std::fs::write(dir.path().join(name), "x").unwrap();
        }
        std::fs::create_dir(dir.path().join("depth")).unwrap();
        let manifest = SequenceManifest {
            paths: SequencePaths {
                events: "ev.evt".into(),
                depth_dir: "depth".into(),
                poses: "poses.txt".into(),
                mesh: "mesh.obj".into(),
                intrinsics: "k.json".into(),
            },
            timing: TimingModel::new(33_333, 4, 0).unwrap(),
            width: 640,
            height: 480,
            object: "cuboid".into(),
            seed: 7,
            depth_frames: 30,
        };
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let loaded = SequenceManifest::load(&path).unwrap();
        assert_eq!(loaded, manifest);
        let path2 = dir.path().join("manifest2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn manifest_rejects_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = SequenceManifest {
            paths: SequencePaths {
                events: "missing.evt".into(),
                depth_dir: "depth".into(),
                poses: "poses.txt".into(),
                mesh: "mesh.obj".into(),
                intrinsics: "k.json".into(),
            },
            timing: TimingModel::new(33_333, 4, 0).unwrap(),
            width: 640,
            height: 480,
            object: "cuboid".into(),
            seed: 7,
            depth_frames: 30,
        };
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        assert!(matches!(
            SequenceManifest::load(&path),
            Err(IoError::MissingFile(_))
        ));
    }

    #[test]
    fn calib_observation_json_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.json");
        std::fs::write(
            &path,
            r#"[{"t_us": 100, "corners": [{"id": 3, "P": [0.1, 0.2, 0.3], "x": [320.5, 240.25]}]}]"#,
        )
        .unwrap();
        let obs = read_calib_observations(&path).unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].t_us, 100);
        assert_eq!(obs[0].corners[0].id, 3);
        assert_eq!(obs[0].corners[0].point_world, Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(obs[0].corners[0].pixel.x, 320.5);
    }

    #[test]
    fn symmetry_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sym.json");
        let pose = Pose::from_axis_angle(&Vec3::z(), std::f64::consts::PI, Vec3::zeros());
        let rows = vec![pose.to_fields()];
        std::fs::write(&path, serde_json::to_string(&rows).unwrap()).unwrap();
        let syms = read_symmetries(&path).unwrap();
        assert_eq!(syms.len(), 1);
        assert!((syms[0].rotation() - pose.rotation()).norm() < 1e-12);
    }
}
