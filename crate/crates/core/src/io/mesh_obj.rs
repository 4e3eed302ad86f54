//! Minimal Wavefront OBJ subset: `v x y z` and triangular `f` lines
//! (1-based indices, `f v`, `f v/vt` and `f v/vt/vn` forms accepted).

use super::IoError;
use crate::geometry::Vec3;
use crate::mesh::TriMesh;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh_obj(path: &Path, mesh: &TriMesh) -> Result<(), IoError> {
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_mesh_obj(path: &Path) -> Result<TriMesh, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |reason: String| IoError::BadLine {
            line: line_no,
            reason,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = parts
                        .next()
                        .ok_or_else(|| bad("vertex needs 3 coordinates".into()))?
                        .parse()
                        .map_err(|e| bad(format!("vertex coordinate: {e}")))?;
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idxs = Vec::new();
                for p in parts {
                    let vi = p.split('/').next().unwrap_or(p);
                    let one_based: i64 =
                        vi.parse().map_err(|e| bad(format!("face index: {e}")))?;
                    if one_based < 1 {
                        return Err(bad(format!("face index {one_based} below 1")));
                    }
                    idxs.push((one_based - 1) as u32);
                }
                if idxs.len() != 3 {
                    return Err(bad(format!(
                        "only triangular faces supported, got {} vertices",
                        idxs.len()
                    )));
                }
                triangles.push([idxs[0], idxs[1], idxs[2]]);
            }
            // vt / vn / usemtl and friends are ignored.
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| IoError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn obj_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        let mesh = shapes::cuboid(Vec3::new(0.1, 0.2, 0.3));
        write_mesh_obj(&path, &mesh).unwrap();
        let back = read_mesh_obj(&path).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert!((back.diameter() - mesh.diameter()).abs() < 1e-12);
    }

    #[test]
    fn rejects_quads_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        match read_mesh_obj(&path) {
            Err(IoError::BadLine { line: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
