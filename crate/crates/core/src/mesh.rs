//! Triangle meshes: the CAD object model, area-weighted surface sampling,
//! and procedural shapes used by the simulator and tests.

use crate::geometry::Vec3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least one triangle")]
    Empty,
    #[error("triangle {tri} references vertex {index} of {count}")]
    IndexOutOfRange { tri: usize, index: u32, count: usize },
    #[error("mesh has zero diameter")]
    ZeroDiameter,
    #[error("mesh has zero surface area")]
    ZeroArea,
    #[error("need at least {0} samples")]
    TooFewSamples(usize),
}

/// Rigid object model: vertices in the object frame (meters) plus the
/// max pairwise vertex distance used by ROI sizing and metric thresholds.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    diameter: f64,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (tri, t) in triangles.iter().enumerate() {
            for &index in t {
                if index as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        tri,
                        index,
                        count: vertices.len(),
                    });
                }
            }
        }
        let mut diameter: f64 = 0.0;
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                diameter = diameter.max((vertices[i] - vertices[j]).norm());
            }
        }
        if diameter <= 0.0 {
            return Err(MeshError::ZeroDiameter);
        }
        Ok(Self {
            vertices,
            triangles,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn triangle_vertices(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(tri);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Uniform surface sampling: area-weighted triangle selection followed
    /// by uniform barycentric placement. Deterministic under `seed`.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Result<Vec<Vec3>, MeshError> {
        if n < 3 {
            return Err(MeshError::TooFewSamples(3));
        }
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(MeshError::ZeroArea);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let target = rng.gen_range(0.0..total);
            let tri = cumulative.partition_point(|&c| c <= target);
            let [a, b, c] = self.triangle_vertices(tri.min(self.triangles.len() - 1));
            let mut u: f64 = rng.gen();
            let mut v: f64 = rng.gen();
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            points.push(a + u * (b - a) + v * (c - a));
        }
        Ok(points)
    }
}

/// Procedural meshes for synthetic sequences and tests.
pub mod shapes {
    use super::*;

    /// Axis-aligned cuboid centered at the origin, 12 triangles.
    pub fn cuboid(extents: Vec3) -> TriMesh {
        let h = extents / 2.0;
        let corners = [
            Vec3::new(-h.x, -h.y, -h.z),
            Vec3::new(h.x, -h.y, -h.z),
            Vec3::new(h.x, h.y, -h.z),
            Vec3::new(-h.x, h.y, -h.z),
            Vec3::new(-h.x, -h.y, h.z),
            Vec3::new(h.x, -h.y, h.z),
            Vec3::new(h.x, h.y, h.z),
            Vec3::new(-h.x, h.y, h.z),
        ];
        let quads: [[u32; 4]; 6] = [
            [0, 1, 2, 3],
            [5, 4, 7, 6],
            [4, 5, 1, 0],
            [3, 2, 6, 7],
            [1, 5, 6, 2],
            [4, 0, 3, 7],
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriMesh::new(corners.to_vec(), triangles).unwrap()
    }

    /// Cuboid whose faces are subdivided into a grid of facets with small
    /// outward bumps. Facet normals vary, so headlight shading produces the
    /// surface texture that event synthesis and block matching rely on.
    pub fn textured_cuboid(extents: Vec3, cells: usize, bump: f64, seed: u64) -> TriMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = extents / 2.0;
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();

        // Each face: +-x, +-y, +-z with its own (u, v) axes.
        let faces: [(Vec3, Vec3, Vec3); 6] = [
            (Vec3::new(h.x, 0.0, 0.0), Vec3::new(0.0, h.y, 0.0), Vec3::new(0.0, 0.0, h.z)),
            (Vec3::new(-h.x, 0.0, 0.0), Vec3::new(0.0, 0.0, h.z), Vec3::new(0.0, h.y, 0.0)),
            (Vec3::new(0.0, h.y, 0.0), Vec3::new(0.0, 0.0, h.z), Vec3::new(h.x, 0.0, 0.0)),
            (Vec3::new(0.0, -h.y, 0.0), Vec3::new(h.x, 0.0, 0.0), Vec3::new(0.0, 0.0, h.z)),
            (Vec3::new(0.0, 0.0, h.z), Vec3::new(h.x, 0.0, 0.0), Vec3::new(0.0, h.y, 0.0)),
            (Vec3::new(0.0, 0.0, -h.z), Vec3::new(0.0, h.y, 0.0), Vec3::new(h.x, 0.0, 0.0)),
        ];
        for (center, u_axis, v_axis) in faces {
            let normal = center.normalize();
            let base = vertices.len() as u32;
            for vi in 0..=cells {
                for ui in 0..=cells {
                    let u = ui as f64 / cells as f64 * 2.0 - 1.0;
                    let v = vi as f64 / cells as f64 * 2.0 - 1.0;
                    let interior = ui > 0 && ui < cells && vi > 0 && vi < cells;
                    let offset = if interior {
                        rng.gen_range(-bump..bump)
                    } else {
                        // Keep shared edges flat so faces stay stitched.
                        0.0
                    };
                    vertices.push(center + u * u_axis + v * v_axis + offset * normal);
                }
            }
            let stride = (cells + 1) as u32;
            for vi in 0..cells as u32 {
                for ui in 0..cells as u32 {
                    let i0 = base + vi * stride + ui;
                    triangles.push([i0, i0 + 1, i0 + stride]);
                    triangles.push([i0 + 1, i0 + stride + 1, i0 + stride]);
                }
            }
        }
        TriMesh::new(vertices, triangles).unwrap()
    }

    /// Fronto-parallel relief plane in the xy-plane with randomized cell
    /// heights; gives dense shading texture for motion-estimation tests.
    pub fn relief_plane(width: f64, height: f64, cells: usize, bump: f64, seed: u64) -> TriMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for vi in 0..=cells {
            for ui in 0..=cells {
                let x = (ui as f64 / cells as f64 - 0.5) * width;
                let y = (vi as f64 / cells as f64 - 0.5) * height;
                let z = rng.gen_range(-bump..bump);
                vertices.push(Vec3::new(x, y, z));
            }
        }
        let stride = (cells + 1) as u32;
        for vi in 0..cells as u32 {
            for ui in 0..cells as u32 {
                let i0 = vi * stride + ui;
                triangles.push([i0, i0 + 1, i0 + stride]);
                triangles.push([i0 + 1, i0 + stride + 1, i0 + stride]);
            }
        }
        TriMesh::new(vertices, triangles).unwrap()
    }

    /// Flat disk in the xy-plane, subdivided into sectors and rings.
    pub fn disk(radius: f64, rings: usize, sectors: usize) -> TriMesh {
        let mut vertices = vec![Vec3::zeros()];
        let mut triangles = Vec::new();
        for ring in 1..=rings {
            let r = radius * ring as f64 / rings as f64;
            for s in 0..sectors {
                let a = std::f64::consts::TAU * s as f64 / sectors as f64;
                vertices.push(Vec3::new(r * a.cos(), r * a.sin(), 0.0));
            }
        }
        let idx = |ring: usize, s: usize| -> u32 {
            if ring == 0 {
                0
            } else {
                (1 + (ring - 1) * sectors + (s % sectors)) as u32
            }
        };
        for s in 0..sectors {
            triangles.push([idx(0, 0), idx(1, s), idx(1, s + 1)]);
        }
        for ring in 1..rings {
            for s in 0..sectors {
                let (a, b) = (idx(ring, s), idx(ring, s + 1));
                let (c, d) = (idx(ring + 1, s), idx(ring + 1, s + 1));
                triangles.push([a, c, d]);
                triangles.push([a, d, b]);
            }
        }
        TriMesh::new(vertices, triangles).unwrap()
    }

    /// UV sphere centered at the origin.
    pub fn uv_sphere(radius: f64, rings: usize, sectors: usize) -> TriMesh {
        let mut vertices = Vec::new();
        for ring in 0..=rings {
            let phi = std::f64::consts::PI * ring as f64 / rings as f64;
            for s in 0..sectors {
                let theta = std::f64::consts::TAU * s as f64 / sectors as f64;
                vertices.push(Vec3::new(
                    radius * phi.sin() * theta.cos(),
                    radius * phi.sin() * theta.sin(),
                    radius * phi.cos(),
                ));
            }
        }
        let idx = |ring: usize, s: usize| (ring * sectors + s % sectors) as u32;
        let mut triangles = Vec::new();
        for ring in 0..rings {
            for s in 0..sectors {
                triangles.push([idx(ring, s), idx(ring + 1, s), idx(ring + 1, s + 1)]);
                triangles.push([idx(ring, s), idx(ring + 1, s + 1), idx(ring, s + 1)]);
            }
        }
        TriMesh::new(vertices, triangles).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_out_of_range() {
        assert!(matches!(TriMesh::new(vec![], vec![]), Err(MeshError::Empty)));
        let verts = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(matches!(
            TriMesh::new(verts, vec![[0, 1, 3]]),
            Err(MeshError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cuboid_diameter_is_diagonal() {
        let m = shapes::cuboid(Vec3::new(0.1, 0.2, 0.2));
        let want = (0.1f64 * 0.1 + 0.2 * 0.2 + 0.2 * 0.2).sqrt();
        assert!((m.diameter() - want).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_inside_single_triangle() {
        let verts = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let m = TriMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let pts = m.sample_surface(500, 42).unwrap();
        for p in pts {
            // Barycentric coordinates of the unit right triangle.
            assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 + 1e-12);
            assert!(p.z.abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_follows_area_ratio() {
        // Two triangles with area ratio 1:3 (0.5 vs 1.5).
        let verts = vec![
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Vec3::new(10.0, 0.0, 0.0),
            Vec3::new(13.0, 0.0, 0.0),
            Vec3::new(10.0, 1.0, 0.0),
        ];
        let m = TriMesh::new(verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let n = 10_000;
        let pts = m.sample_surface(n, 9).unwrap();
        let in_small = pts.iter().filter(|p| p.x < 5.0).count();
        // Binomial(n, 0.25): 3 sigma around the mean.
        let mean = n as f64 * 0.25;
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        assert!(
            (in_small as f64 - mean).abs() < 3.0 * sigma,
            "{in_small} outside 3 sigma of {mean}"
        );
    }

    #[test]
    fn sphere_samples_center_on_origin() {
        let m = shapes::uv_sphere(1.0, 24, 32);
        let pts = m.sample_surface(10_000, 5).unwrap();
        let centroid = pts.iter().fold(Vec3::zeros(), |acc, p| acc + p) / pts.len() as f64;
        assert!(centroid.norm() < 0.05, "centroid {centroid:?}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = shapes::cuboid(Vec3::new(0.1, 0.1, 0.1));
        let a = m.sample_surface(100, 7).unwrap();
        let b = m.sample_surface(100, 7).unwrap();
        assert_eq!(a, b);
        let c = m.sample_surface(100, 8).unwrap();
        assert_ne!(a, c);
    }
}
