//! Tracking results as CSV plus raw binary dumps of motion fields and voxel
//! grids for debugging.

use super::IoError;
use crate::event::TimeWindow;
use crate::grid::Grid2;
use crate::recon::MotionField;
use crate::tracker::{TrackEntry, UpdateKind};
use crate::Pose;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const TRACK_CSV_HEADER: &str =
    "t_us,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,kind,residual,inliers";

pub fn write_track_csv(path: &Path, entries: &[TrackEntry]) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(TRACK_CSV_HEADER);
    out.push('\n');
    for e in entries {
        write!(out, "{}", e.t_us).unwrap();
        for v in e.pose.to_fields() {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{},{},{}", e.kind.as_str(), e.residual, e.inliers).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_track_csv(path: &Path) -> Result<Vec<TrackEntry>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 {
            if line != TRACK_CSV_HEADER {
                return Err(IoError::BadLine {
                    line: 1,
                    reason: "unexpected CSV header".into(),
                });
            }
            continue;
        }
        let bad = |reason: String| IoError::BadLine {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(bad(format!("expected 16 columns, got {}", fields.len())));
        }
        let t_us: i64 = fields[0].parse().map_err(|e| bad(format!("t_us: {e}")))?;
        let mut pose_fields = [0.0f64; 12];
        for (i, f) in fields[1..13].iter().enumerate() {
            pose_fields[i] = f.parse().map_err(|e| bad(format!("pose field {i}: {e}")))?;
        }
        let pose = Pose::from_fields(&pose_fields).map_err(|e| bad(e.to_string()))?;
        let kind = UpdateKind::parse(fields[13])
            .ok_or_else(|| bad(format!("unknown update kind {:?}", fields[13])))?;
        let residual: f64 = fields[14]
            .parse()
            .map_err(|e| bad(format!("residual: {e}")))?;
        let inliers: usize = fields[15]
            .parse()
            .map_err(|e| bad(format!("inliers: {e}")))?;
        entries.push(TrackEntry {
            t_us,
            pose,
            kind,
            residual,
            inliers,
        });
    }
    Ok(entries)
}

const FLOW_MAGIC: &[u8; 4] = b"FLW1";

/// Motion field dump: magic, u32 width, u32 height, then per pixel two f32
/// flow components (NaN marks invalid pixels), little-endian, row-major.
pub fn write_flow(path: &Path, field: &MotionField) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FLOW_MAGIC)?;
    w.write_all(&(field.width() as u32).to_le_bytes())?;
    w.write_all(&(field.height() as u32).to_le_bytes())?;
    for y in 0..field.height() {
        for x in 0..field.width() {
            let [fx, fy] = if field.is_valid(x, y) {
                field.flow_at(x, y)
            } else {
                [f32::NAN, f32::NAN]
            };
            w.write_all(&fx.to_le_bytes())?;
            w.write_all(&fy.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a flow dump back as `(width, height, data)` with NaN for invalid.
pub fn read_flow(path: &Path) -> Result<(usize, usize, Vec<[f32; 2]>), IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 12];
    r.read_exact(&mut header).map_err(|_| IoError::Truncated(0))?;
    if &header[0..4] != FLOW_MAGIC {
        return Err(IoError::BadMagic { expected: "FLW1" });
    }
    let w = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut data = Vec::with_capacity(w * h);
    let mut buf = [0u8; 8];
    for i in 0..w * h {
        r.read_exact(&mut buf)
            .map_err(|_| IoError::Truncated(12 + i as u64 * 8))?;
        data.push([
            f32::from_le_bytes(buf[0..4].try_into().unwrap()),
            f32::from_le_bytes(buf[4..8].try_into().unwrap()),
        ]);
    }
    Ok((w, h, data))
}

const VOXEL_MAGIC: &[u8; 4] = b"VOX1";

/// Voxel grid dump: magic, u32 bins, u32 width, u32 height, i64 window start
/// and end, then f32 cells bin-major row-major, little-endian.
pub fn write_voxel_grid(
    path: &Path,
    bins: &[Grid2],
    window: TimeWindow,
) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(VOXEL_MAGIC)?;
    w.write_all(&(bins.len() as u32).to_le_bytes())?;
    w.write_all(&(bins[0].width() as u32).to_le_bytes())?;
    w.write_all(&(bins[0].height() as u32).to_le_bytes())?;
    w.write_all(&window.start_us.to_le_bytes())?;
    w.write_all(&window.end_us.to_le_bytes())?;
    for bin in bins {
        for v in bin.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_voxel_grid(path: &Path) -> Result<(Vec<Grid2>, TimeWindow), IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    r.read_exact(&mut header).map_err(|_| IoError::Truncated(0))?;
    if &header[0..4] != VOXEL_MAGIC {
        return Err(IoError::BadMagic { expected: "VOX1" });
    }
    let bins = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let start = i64::from_le_bytes(header[16..24].try_into().unwrap());
    let end = i64::from_le_bytes(header[24..32].try_into().unwrap());
    let window = TimeWindow::new(start, end).map_err(|e| IoError::Invalid(e.to_string()))?;
    let mut grids = Vec::with_capacity(bins);
    let mut buf = [0u8; 4];
    for b in 0..bins {
        let mut data = Vec::with_capacity(w * h);
        for i in 0..w * h {
            r.read_exact(&mut buf)
                .map_err(|_| IoError::Truncated(32 + (b * w * h + i) as u64 * 4))?;
            data.push(f32::from_le_bytes(buf));
        }
        grids.push(Grid2::from_vec(w, h, data));
    }
    Ok((grids, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn track_csv_roundtrip_and_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.csv");
        let entries = vec![
            TrackEntry {
                t_us: 0,
                pose: Pose::identity(),
                kind: UpdateKind::Init,
                residual: 0.0,
                inliers: 256,
            },
            TrackEntry {
                t_us: 8333,
                pose: Pose::from_axis_angle(&Vec3::z(), 0.01, Vec3::new(0.0, 0.0, 1.0)),
                kind: UpdateKind::IcpRecon,
                residual: 0.0012,
                inliers: 200,
            },
            TrackEntry {
                t_us: 16_666,
                pose: Pose::identity(),
                kind: UpdateKind::Lost,
                residual: 0.0,
                inliers: 0,
            },
        ];
        write_track_csv(&path, &entries).unwrap();
        let back = read_track_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].kind, UpdateKind::Init);
        assert_eq!(back[1].kind, UpdateKind::IcpRecon);
        assert_eq!(back[2].kind, UpdateKind::Lost);
        assert_eq!(back[1].t_us, 8333);
        assert!((back[1].pose.translation().z - 1.0).abs() < 1e-12);
        assert_eq!(back[1].inliers, 200);
    }

    #[test]
    fn flow_and_voxel_dumps_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let flow_path = dir.path().join("f.flw");
        let field = MotionField::constant(4, 3, [1.5, -2.0]);
        write_flow(&flow_path, &field).unwrap();
        let (w, h, data) = read_flow(&flow_path).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(data[5], [1.5, -2.0]);

        let vox_path = dir.path().join("v.vox");
        let bins = vec![Grid2::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]); 3];
        write_voxel_grid(&vox_path, &bins, TimeWindow::new(10, 20).unwrap()).unwrap();
        let (back, window) = read_voxel_grid(&vox_path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2].data(), bins[2].data());
        assert_eq!(window.start_us, 10);
    }
}
