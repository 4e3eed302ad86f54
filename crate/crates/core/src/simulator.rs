//! Synthetic ground truth: a z-buffer triangle rasterizer, rigid keypose
//! trajectories, and contrast-threshold event synthesis against linearly
//! interpolated log intensity.

use crate::event::{Event, EventStream};
use crate::geometry::{GeometryError, Intrinsics, Pose, TimingModel, Vec3};
use crate::grid::{DepthMap, Grid2};
use crate::mesh::TriMesh;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Offset added to intensity before the logarithm so background pixels do
/// not hit log(0).
pub const LOG_INTENSITY_EPS: f64 = 1e-3;

/// Contrast-threshold range reported for the adapted event simulation.
pub const DEFAULT_CONTRAST_RANGE: (f64, f64) = (0.16, 0.34);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("need at least two frames for event synthesis, got {0}")]
    TooFewFrames(usize),
    #[error("frame timestamps must increase strictly (frame {0})")]
    NonMonotonicFrames(usize),
    #[error("contrast thresholds must satisfy 0 < low <= high, got ({0}, {1})")]
    BadContrast(f64, f64),
    #[error("trajectory needs at least two keyposes with strictly increasing timestamps")]
    BadTrajectory,
    #[error("timestamp {0} outside trajectory span [{1}, {2}]")]
    OutOfSpan(i64, i64, i64),
    #[error("intensity rate {0} Hz below the depth frame rate {1} Hz")]
    FpsBelowDepthRate(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Time-ordered keyposes; poses between keyposes come from screw
/// interpolation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    keyposes: Vec<(i64, Pose)>,
}

impl Trajectory {
    pub fn new(keyposes: Vec<(i64, Pose)>) -> Result<Self, SimError> {
        if keyposes.len() < 2 || keyposes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(SimError::BadTrajectory);
        }
        Ok(Self { keyposes })
    }

    pub fn keyposes(&self) -> &[(i64, Pose)] {
        &self.keyposes
    }

    pub fn span(&self) -> (i64, i64) {
        (
            self.keyposes.first().unwrap().0,
            self.keyposes.last().unwrap().0,
        )
    }

    /// Pose at `t_us` by interpolating the bracketing keyposes.
    pub fn sample(&self, t_us: i64) -> Result<Pose, SimError> {
        let (t0, t1) = self.span();
        if t_us < t0 || t_us > t1 {
            return Err(SimError::OutOfSpan(t_us, t0, t1));
        }
        let hi = self
            .keyposes
            .partition_point(|(t, _)| *t <= t_us)
            .min(self.keyposes.len() - 1);
        let (tb, pb) = self.keyposes[hi];
        let (ta, pa) = self.keyposes[hi - 1];
        if t_us == tb {
            return Ok(pb);
        }
        let s = (t_us - ta) as f64 / (tb - ta) as f64;
        Ok(pa.interpolate(&pb, s)?)
    }
}

/// Screw motion: constant spin about `spin_axis` through the object origin
/// combined with a circular orbit of `orbit_center` in the plane normal to
/// `orbit_axis`, sampled densely into keyposes.
#[allow(clippy::too_many_arguments)]
pub fn screw_trajectory(
    initial: Pose,
    spin_axis: Vec3,
    spin_rad_s: f64,
    orbit_center: Vec3,
    orbit_axis: Vec3,
    tangential_m_s: f64,
    duration_us: i64,
    keypose_step_us: i64,
) -> Trajectory {
    let radius_vec = initial.translation() - orbit_center;
    let radius = radius_vec.norm();
    let orbit_rad_s = if radius > 1e-12 {
        tangential_m_s / radius
    } else {
        0.0
    };
    let mut keyposes = Vec::new();
    let mut t = 0i64;
    while t <= duration_us {
        let secs = t as f64 * 1e-6;
        let orbit_rot = Pose::from_axis_angle(&orbit_axis, orbit_rad_s * secs, Vec3::zeros());
        let spin_rot = Pose::from_axis_angle(&spin_axis, spin_rad_s * secs, Vec3::zeros());
        let translation = orbit_center + orbit_rot.rotation() * radius_vec;
        let rotation = spin_rot.rotation() * initial.rotation();
        keyposes.push((t, Pose::orthonormalize(rotation, translation).unwrap()));
        if t == duration_us {
            break;
        }
        t = (t + keypose_step_us).min(duration_us);
    }
    Trajectory::new(keyposes).unwrap()
}

/// Event sensor model: intrinsics, contrast-threshold range, shared timing,
/// and the RNG seed for per-pixel threshold draws.
#[derive(Debug, Clone)]
pub struct SensorConfig {
    pub intrinsics: Intrinsics,
    pub contrast_low: f64,
    pub contrast_high: f64,
    pub timing: TimingModel,
    pub seed: u64,
}

impl SensorConfig {
    pub fn new(
        intrinsics: Intrinsics,
        contrast_low: f64,
        contrast_high: f64,
        timing: TimingModel,
        seed: u64,
    ) -> Result<Self, SimError> {
        if !(contrast_low > 0.0 && contrast_low <= contrast_high) {
            return Err(SimError::BadContrast(contrast_low, contrast_high));
        }
        Ok(Self {
            intrinsics,
            contrast_low,
            contrast_high,
            timing,
            seed,
        })
    }
}

/// Depth plus headlight-shaded intensity at one timestamp. `coverage` counts
/// pixels hit by the mesh; zero flags an empty render.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub depth: Grid2,
    pub intensity: Grid2,
    pub timestamp_us: i64,
    pub coverage: usize,
}

/// Z-buffered perspective rasterization with Lambertian headlight shading
/// (light co-located with the camera). Triangles are double-sided; normals
/// are flipped toward the viewer so thin sheets stay visible. Triangles with
/// any vertex at or behind the camera plane are skipped rather than clipped.
pub fn rasterize(mesh: &TriMesh, pose: &Pose, k: &Intrinsics) -> RenderedFrame {
    let w = k.width as usize;
    let h = k.height as usize;
    let mut depth = Grid2::zeros(w, h);
    let mut intensity = Grid2::zeros(w, h);
    let mut coverage = 0usize;

    let cam_verts: Vec<Vec3> = mesh.vertices().iter().map(|v| pose.apply(v)).collect();
    let z_near = 1e-6;

    for tri in mesh.triangles() {
        let a = cam_verts[tri[0] as usize];
        let b = cam_verts[tri[1] as usize];
        let c = cam_verts[tri[2] as usize];
        if a.z <= z_near || b.z <= z_near || c.z <= z_near {
            continue;
        }
        let pa = (k.fx * a.x / a.z + k.cx, k.fy * a.y / a.z + k.cy);
        let pb = (k.fx * b.x / b.z + k.cx, k.fy * b.y / b.z + k.cy);
        let pc = (k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy);

        let area = (pb.0 - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (pb.1 - pa.1);
        if area.abs() < 1e-12 {
            continue;
        }

        let normal = (b - a).cross(&(c - a));
        let n_norm = normal.norm();
        if n_norm < 1e-15 {
            continue;
        }
        // Headlight along the optical axis; double-sided.
        let shade = (normal.z / n_norm).abs() as f32;

        let x_min = pa.0.min(pb.0).min(pc.0).ceil().max(0.0) as usize;
        let x_max = pa.0.max(pb.0).max(pc.0).floor().min((w - 1) as f64) as usize;
        let y_min = pa.1.min(pb.1).min(pc.1).ceil().max(0.0) as usize;
        let y_max = pa.1.max(pb.1).max(pc.1).floor().min((h - 1) as f64) as usize;
        if x_min > x_max || y_min > y_max {
            continue;
        }

        let inv_area = 1.0 / area;
        let (iza, izb, izc) = (1.0 / a.z, 1.0 / b.z, 1.0 / c.z);
        for y in y_min..=y_max {
            for x in x_min..=x_max {
                let px = x as f64;
                let py = y as f64;
                let w0 = ((pb.0 - pa.0) * (py - pa.1) - (px - pa.0) * (pb.1 - pa.1)) * inv_area;
                let w1 = ((px - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (py - pa.1)) * inv_area;
                let w2 = 1.0 - w0 - w1;
                if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
                    continue;
                }
                // Perspective-correct depth from interpolated 1/z.
                let inv_z = w2 * iza + w1 * izb + w0 * izc;
                if inv_z <= 0.0 {
                    continue;
                }
                let z = (1.0 / inv_z) as f32;
                let current = depth.at(x, y);
                if current == 0.0 || z < current {
                    if current == 0.0 {
                        coverage += 1;
                    }
                    depth.set(x, y, z);
                    intensity.set(x, y, shade);
                }
            }
        }
    }

    RenderedFrame {
        depth,
        intensity,
        timestamp_us: 0,
        coverage,
    }
}

/// Per-pixel contrast thresholds drawn from `U(contrast_low, contrast_high)`
/// with the config seed, row-major. Exposed so oracles can reproduce the
/// exact draw.
pub fn contrast_map(cfg: &SensorConfig, width: usize, height: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..width * height)
        .map(|_| rng.gen_range(cfg.contrast_low..cfg.contrast_high))
        .collect()
}

/// Contrast-threshold event synthesis over rendered frames.
///
/// Per pixel, log intensity `L = ln(I + eps)` is interpolated linearly
/// between consecutive frames; every time it reaches the reference level
/// plus or minus the pixel's threshold `C`, one event is emitted at the
/// interpolated crossing time and the reference advances by `C`. The
/// reference is tracked as `base + n * C` so long ramps cannot drift.
pub fn simulate_events(
    frames: &[RenderedFrame],
    cfg: &SensorConfig,
) -> Result<EventStream, SimError> {
    if frames.len() < 2 {
        return Err(SimError::TooFewFrames(frames.len()));
    }
    for (i, pair) in frames.windows(2).enumerate() {
        if pair[0].timestamp_us >= pair[1].timestamp_us {
            return Err(SimError::NonMonotonicFrames(i + 1));
        }
    }
    if !(cfg.contrast_low > 0.0 && cfg.contrast_low <= cfg.contrast_high) {
        return Err(SimError::BadContrast(cfg.contrast_low, cfg.contrast_high));
    }

    let w = frames[0].intensity.width();
    let h = frames[0].intensity.height();
    let contrast = contrast_map(cfg, w, h);

    let log_grid = |frame: &RenderedFrame| -> Vec<f64> {
        frame
            .intensity
            .data()
            .iter()
            .map(|&v| (v as f64 + LOG_INTENSITY_EPS).ln())
            .collect()
    };

    // Reference level per pixel is base + steps * C; anchoring at the first
    // frame keeps long ramps free of accumulation drift.
    let base = log_grid(&frames[0]);
    let mut steps = vec![0i64; w * h];
    let mut prev = base.clone();
    let mut events: Vec<Event> = Vec::new();

    for pair in frames.windows(2) {
        let cur = log_grid(&pair[1]);
        let t0 = pair[0].timestamp_us;
        let t1 = pair[1].timestamp_us;
        let dt = (t1 - t0) as f64;
        for i in 0..w * h {
            let l0 = prev[i];
            let l1 = cur[i];
            if l1 == l0 {
                continue;
            }
            let c = contrast[i];
            let x = (i % w) as u16;
            let y = (i / w) as u16;
            if l1 > l0 {
                loop {
                    let th = base[i] + (steps[i] + 1) as f64 * c;
                    if l1 < th {
                        break;
                    }
                    let frac = (th - l0) / (l1 - l0);
                    let t = t0 + (frac * dt) as i64;
                    events.push(Event::new(x, y, t, 1));
                    steps[i] += 1;
                }
            } else {
                loop {
                    let th = base[i] + (steps[i] - 1) as f64 * c;
                    if l1 > th {
                        break;
                    }
                    let frac = (th - l0) / (l1 - l0);
                    let t = t0 + (frac * dt) as i64;
                    events.push(Event::new(x, y, t, -1));
                    steps[i] -= 1;
                }
            }
        }
        prev = cur;
    }

    events.sort_by_key(|e| (e.t_us, e.y, e.x));
    Ok(EventStream::from_sorted(events, w as u16, h as u16).expect("synthesized events are valid"))
}

/// Everything a synthetic sequence provides: the event stream, depth frames
/// at the depth period, and ground-truth poses at every subdivision.
#[derive(Debug, Clone)]
pub struct SequenceData {
    pub events: EventStream,
    pub depth_frames: Vec<DepthMap>,
    /// `(timestamp_us, pose)` at `subdivisions` per depth interval.
    pub gt_poses: Vec<(i64, Pose)>,
}

/// Renders intensity at `intensity_fps` for event synthesis, emits depth
/// frames at the timing model's depth period and ground-truth poses at every
/// subdivision, all on the shared clock starting at the timing epoch.
pub fn generate_sequence(
    mesh: &TriMesh,
    traj: &Trajectory,
    cfg: &SensorConfig,
    intensity_fps: f64,
) -> Result<SequenceData, SimError> {
    let timing = cfg.timing;
    let depth_rate = 1e6 / timing.depth_period_us as f64;
    if intensity_fps < depth_rate {
        return Err(SimError::FpsBelowDepthRate(intensity_fps, depth_rate));
    }
    let (span_start, span_end) = traj.span();
    let epoch = timing.epoch_us;
    if epoch < span_start {
        return Err(SimError::OutOfSpan(epoch, span_start, span_end));
    }
    let duration = span_end - epoch;
    let n_frames = (duration / timing.depth_period_us).max(0);
    if n_frames == 0 {
        return Err(SimError::TooFewFrames(0));
    }

    // Intensity render schedule covering the full span.
    let mut render_times = Vec::new();
    let mut j = 0i64;
    loop {
        let t = epoch + (j as f64 * 1e6 / intensity_fps).round() as i64;
        if t > span_end {
            break;
        }
        render_times.push(t);
        j += 1;
    }
    if *render_times.last().unwrap() < span_end {
        render_times.push(span_end);
    }

    let mut intensity_frames: Vec<RenderedFrame> = render_times
        .par_iter()
        .map(|&t| -> Result<RenderedFrame, SimError> {
            let pose = traj.sample(t)?;
            let mut frame = rasterize(mesh, &pose, &cfg.intrinsics);
            frame.timestamp_us = t;
            Ok(frame)
        })
        .collect::<Result<Vec<_>, _>>()?;
    intensity_frames.sort_by_key(|f| f.timestamp_us);

    let events = simulate_events(&intensity_frames, cfg)?;

    let depth_frames: Vec<DepthMap> = (0..n_frames)
        .into_par_iter()
        .map(|i| -> Result<DepthMap, SimError> {
            let t = timing.depth_timestamp(i);
            let pose = traj.sample(t)?;
            let frame = rasterize(mesh, &pose, &cfg.intrinsics);
            Ok(DepthMap::new(frame.depth, t))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut gt_poses = Vec::with_capacity((n_frames as usize) * timing.subdivisions as usize);
    for i in 0..n_frames {
        for k in 0..timing.subdivisions {
            let t = timing.timestamp(i, k).expect("k < subdivisions");
            gt_poses.push((t, traj.sample(t)?));
        }
    }

    Ok(SequenceData {
        events,
        depth_frames,
        gt_poses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat3;
    use crate::mesh::shapes;

    fn test_intrinsics() -> Intrinsics {
        Intrinsics::new(600.0, 600.0, 160.0, 120.0, 320, 240).unwrap()
    }

    fn fronto_pose(z: f64) -> Pose {
        Pose::new(Mat3::identity(), Vec3::new(0.0, 0.0, z)).unwrap()
    }

    #[test]
    fn single_triangle_footprint_matches_point_in_triangle_oracle() {
        let verts = vec![
            Vec3::new(-0.05, -0.05, 0.0),
            Vec3::new(0.05, -0.05, 0.0),
            Vec3::new(0.0, 0.06, 0.0),
        ];
        let mesh = TriMesh::new(verts.clone(), vec![[0, 1, 2]]).unwrap();
        let k = test_intrinsics();
        let pose = fronto_pose(1.0);
        let frame = rasterize(&mesh, &pose, &k);

        let proj: Vec<(f64, f64)> = verts
            .iter()
            .map(|v| k.project(&pose.apply(v)).unwrap())
            .collect();
        let inside = |px: f64, py: f64| {
            let sign = |a: (f64, f64), b: (f64, f64)| {
                (b.0 - a.0) * (py - a.1) - (px - a.0) * (b.1 - a.1)
            };
            let d0 = sign(proj[0], proj[1]);
            let d1 = sign(proj[1], proj[2]);
            let d2 = sign(proj[2], proj[0]);
            (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
        };
        let mut mismatches = 0;
        for y in 0..240 {
            for x in 0..320 {
                let rasterized = frame.depth.at(x, y) > 0.0;
                let oracle = inside(x as f64, y as f64);
                if rasterized != oracle {
                    mismatches += 1;
                }
            }
        }
        // Boundary pixels may disagree by epsilon ordering; interior must not.
        assert!(mismatches < 60, "footprint mismatches: {mismatches}");
        assert!(frame.coverage > 500);
    }

    #[test]
    fn z_buffer_keeps_nearest_surface() {
        let verts = vec![
            Vec3::new(-0.1, -0.1, 0.0),
            Vec3::new(0.1, -0.1, 0.0),
            Vec3::new(0.0, 0.1, 0.0),
            Vec3::new(-0.1, -0.1, 1.0),
            Vec3::new(0.1, -0.1, 1.0),
            Vec3::new(0.0, 0.1, 1.0),
        ];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let k = test_intrinsics();
        let frame = rasterize(&mesh, &fronto_pose(1.0), &k);
        let center = frame.depth.at(160, 115);
        assert!((center - 1.0).abs() < 1e-5, "got {center}");
    }

    #[test]
    fn translating_along_z_shifts_depth() {
        let mesh = shapes::cuboid(Vec3::new(0.1, 0.1, 0.05));
        let k = test_intrinsics();
        let f1 = rasterize(&mesh, &fronto_pose(1.0), &k);
        let f2 = rasterize(&mesh, &fronto_pose(1.25), &k);
        let mut checked = 0;
        for y in 0..240 {
            for x in 0..320 {
                let (d1, d2) = (f1.depth.at(x, y), f2.depth.at(x, y));
                if d1 > 0.0 && d2 > 0.0 {
                    assert!((d2 - d1 - 0.25).abs() < 1e-4, "at ({x},{y}): {d1} {d2}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
        assert!(f2.coverage < f1.coverage);
    }

    #[test]
    fn mesh_behind_camera_gives_flagged_empty_frame() {
        let mesh = shapes::cuboid(Vec3::new(0.1, 0.1, 0.1));
        let frame = rasterize(&mesh, &fronto_pose(-1.0), &test_intrinsics());
        assert_eq!(frame.coverage, 0);
        assert!(frame.depth.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_depth_invariant_under_optical_axis_rotation() {
        let mesh = shapes::disk(0.08, 8, 48);
        let k = test_intrinsics();
        let p0 = fronto_pose(0.8);
        let p1 = Pose::new(
            Pose::from_axis_angle(&Vec3::z(), 0.7, Vec3::zeros())
                .rotation()
                .to_owned(),
            Vec3::new(0.0, 0.0, 0.8),
        )
        .unwrap();
        let f0 = rasterize(&mesh, &p0, &k);
        let f1 = rasterize(&mesh, &p1, &k);
        // Compare away from the rim: every pixel whose 8-neighborhood is
        // fully valid in both renders must agree.
        for y in 1..239 {
            for x in 1..319 {
                let interior = |f: &RenderedFrame| {
                    (-1i64..=1).all(|dy| {
                        (-1i64..=1).all(|dx| {
                            f.depth.at((x as i64 + dx) as usize, (y as i64 + dy) as usize) > 0.0
                        })
                    })
                };
                if interior(&f0) && interior(&f1) {
                    assert!(
                        (f0.depth.at(x, y) - f1.depth.at(x, y)).abs() < 1e-5,
                        "depth differs at ({x},{y})"
                    );
                }
            }
        }
    }

    fn uniform_frames(levels: &[(i64, f32)], w: usize, h: usize) -> Vec<RenderedFrame> {
        levels
            .iter()
            .map(|&(t, v)| RenderedFrame {
                depth: Grid2::zeros(w, h),
                intensity: Grid2::from_vec(w, h, vec![v; w * h]),
                timestamp_us: t,
                coverage: w * h,
            })
            .collect()
    }

    fn fixed_contrast_cfg(c: f64) -> SensorConfig {
        SensorConfig::new(
            test_intrinsics(),
            c,
            // gen_range needs a non-empty range; keep it one ulp wide.
            c * (1.0 + 1e-15),
            TimingModel::new(33_333, 4, 0).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_intensity_emits_no_events() {
        let frames = uniform_frames(&[(0, 0.5), (1000, 0.5), (2000, 0.5)], 4, 4);
        let cfg = fixed_contrast_cfg(0.2);
        assert!(simulate_events(&frames, &cfg).unwrap().is_empty());
    }

    #[test]
    fn unit_log_ramp_with_c02_gives_five_equally_spaced_events() {
        // One pixel ramps by 1.0 in log space over 1 s. Intensities are
        // stored as f32, so the ramp overshoots by 1e-3 to keep the final
        // threshold crossing on the reached side of the quantization.
        let w = 1;
        let h = 1;
        let l0 = (0.1f64 + LOG_INTENSITY_EPS).ln();
        let ramp = 1.0 + 1e-3;
        let mut frames = Vec::new();
        let n = 10;
        for j in 0..=n {
            let l = l0 + ramp * j as f64 / n as f64;
            let i = (l.exp() - LOG_INTENSITY_EPS) as f32;
            frames.push(RenderedFrame {
                depth: Grid2::zeros(w, h),
                intensity: Grid2::from_vec(w, h, vec![i]),
                timestamp_us: j * 100_000,
                coverage: 1,
            });
        }
        let cfg = fixed_contrast_cfg(0.2);
        let events = simulate_events(&frames, &cfg).unwrap();
        assert_eq!(events.len(), 5, "events: {:?}", events.events());
        assert!(events.events().iter().all(|e| e.p == 1));
        let times: Vec<i64> = events.events().iter().map(|e| e.t_us).collect();
        for (i, &t) in times.iter().enumerate() {
            let expected = (i as i64 + 1) * 200_000;
            assert!(
                (t - expected).abs() <= 2000,
                "event {i} at {t}, expected near {expected}"
            );
        }
    }

    #[test]
    fn polarity_matches_ramp_direction() {
        let frames = uniform_frames(&[(0, 0.9), (1000, 0.05)], 2, 2);
        let cfg = fixed_contrast_cfg(0.3);
        let events = simulate_events(&frames, &cfg).unwrap();
        assert!(!events.is_empty());
        assert!(events.events().iter().all(|e| e.p == -1));
    }

    #[test]
    fn synthesis_is_deterministic_under_seed() {
        let mesh = shapes::textured_cuboid(Vec3::new(0.12, 0.12, 0.12), 8, 0.004, 3);
        let k = test_intrinsics();
        let cfg = SensorConfig::new(
            k,
            DEFAULT_CONTRAST_RANGE.0,
            DEFAULT_CONTRAST_RANGE.1,
            TimingModel::new(33_333, 4, 0).unwrap(),
            17,
        )
        .unwrap();
        let traj = Trajectory::new(vec![
            (0, fronto_pose(0.9)),
            (
                200_000,
                Pose::new(Mat3::identity(), Vec3::new(0.05, 0.0, 0.9)).unwrap(),
            ),
        ])
        .unwrap();
        let a = generate_sequence(&mesh, &traj, &cfg, 240.0).unwrap();
        let b = generate_sequence(&mesh, &traj, &cfg, 240.0).unwrap();
        assert_eq!(a.events, b.events);
        assert!(!a.events.is_empty());
    }

    #[test]
    fn static_trajectory_gives_no_events_and_constant_outputs() {
        let mesh = shapes::cuboid(Vec3::new(0.1, 0.1, 0.1));
        let cfg = SensorConfig::new(
            test_intrinsics(),
            0.16,
            0.34,
            TimingModel::new(33_333, 4, 0).unwrap(),
            1,
        )
        .unwrap();
        let pose = fronto_pose(1.0);
        let traj = Trajectory::new(vec![(0, pose), (200_000, pose)]).unwrap();
        let seq = generate_sequence(&mesh, &traj, &cfg, 120.0).unwrap();
        assert!(seq.events.is_empty());
        assert!(seq
            .depth_frames
            .windows(2)
            .all(|w| w[0].values() == w[1].values()));
        assert!(seq
            .gt_poses
            .iter()
            .all(|(_, p)| p.rotation_angle_to(&pose) < 1e-12
                && p.translation_distance_to(&pose) < 1e-12));
    }

    #[test]
    fn one_second_at_30hz_yields_30_frames_120_poses() {
        let mesh = shapes::cuboid(Vec3::new(0.1, 0.1, 0.1));
        let cfg = SensorConfig::new(
            test_intrinsics(),
            0.16,
            0.34,
            TimingModel::new(33_333, 4, 0).unwrap(),
            1,
        )
        .unwrap();
        let pose = fronto_pose(1.0);
        let traj = Trajectory::new(vec![(0, pose), (1_000_000, pose)]).unwrap();
        let seq = generate_sequence(&mesh, &traj, &cfg, 60.0).unwrap();
        assert_eq!(seq.depth_frames.len(), 30);
        assert_eq!(seq.gt_poses.len(), 120);
    }
}
