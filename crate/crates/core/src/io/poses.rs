//! Pose text files: one line per pose, `t_us` followed by 12 decimal fields
//! (row-major rotation, then translation), single-space separated. The
//! loader re-orthonormalizes rotations and rejects reflections. Field
//! formatting uses the shortest representation that round-trips, so
//! write-read-write is exact.

use super::IoError;
use crate::geometry::Pose;
use std::fmt::Write as _;
use std::path::Path;

pub fn format_pose_line(t_us: i64, pose: &Pose) -> String {
    let mut line = String::with_capacity(128);
    write!(line, "{t_us}").unwrap();
    for v in pose.to_fields() {
        write!(line, " {v}").unwrap();
    }
    line
}

pub fn write_poses(path: &Path, poses: &[(i64, Pose)]) -> Result<(), IoError> {
    let mut out = String::new();
    for (t, p) in poses {
        out.push_str(&format_pose_line(*t, p));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_poses(path: &Path) -> Result<Vec<(i64, Pose)>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut poses = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |reason: String| IoError::BadLine {
            line: line_no,
            reason,
        };
        if line.is_empty() {
            return Err(bad("empty line".into()));
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 13 {
            return Err(bad(format!("expected 13 fields, got {}", fields.len())));
        }
        let t_us: i64 = fields[0]
            .parse()
            .map_err(|e| bad(format!("timestamp: {e}")))?;
        let mut values = [0.0f64; 12];
        for (i, f) in fields[1..].iter().enumerate() {
            if f.is_empty() {
                return Err(bad("empty field".into()));
            }
            values[i] = f.parse().map_err(|e| bad(format!("field {}: {e}", i + 1)))?;
        }
        let pose = Pose::from_fields(&values).map_err(|e| bad(e.to_string()))?;
        poses.push((t_us, pose));
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Mat3, Vec3};
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_line_format() {
        let line = format_pose_line(7, &Pose::identity());
        assert_eq!(line, "7 1 0 0 0 1 0 0 0 1 0 0 0");
    }

    #[test]
    fn roundtrip_is_tight() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let poses: Vec<(i64, Pose)> = (0..50)
            .map(|i| (i * 8333, crate::geometry::tests::random_pose(&mut rng)))
            .collect();
        write_poses(&path, &poses).unwrap();
        let back = read_poses(&path).unwrap();
        assert_eq!(back.len(), poses.len());
        for ((ta, pa), (tb, pb)) in poses.iter().zip(&back) {
            assert_eq!(ta, tb);
            assert!((pa.rotation() - pb.rotation()).norm() < 1e-12);
            assert!(pa.translation_distance_to(pb) < 1e-12);
        }
        // Re-write equals the first write byte for byte.
        let path2 = dir.path().join("p2.txt");
        write_poses(&path2, &back).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn rejects_reflection_and_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "0 -1 0 0 0 1 0 0 0 1 0 0 0\n").unwrap();
        assert!(matches!(
            read_poses(&path),
            Err(IoError::BadLine { line: 1, .. })
        ));

        std::fs::write(&path, "0 1 0 0\n").unwrap();
        match read_poses(&path) {
            Err(IoError::BadLine { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }

        let good = format_pose_line(0, &Pose::identity());
        std::fs::write(&path, format!("{good}\n1 x 0 0 0 1 0 0 0 1 0 0 0\n")).unwrap();
        match read_poses(&path) {
            Err(IoError::BadLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loader_reorthonormalizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("drift.txt");
        // Slightly drifted rotation entries.
        std::fs::write(
            &path,
            "0 1.0000001 0 0 0 0.9999999 0 0 0 1 0.1 0.2 0.3\n",
        )
        .unwrap();
        let poses = read_poses(&path).unwrap();
        let p = &poses[0].1;
        let e = p.rotation().transpose() * p.rotation() - Mat3::identity();
        assert!(e.iter().all(|v| v.abs() < 1e-12));
        assert!(p.translation_distance_to(&Pose::new(Mat3::identity(), Vec3::new(0.1, 0.2, 0.3)).unwrap()) < 1e-12);
    }
}
