//! The high-rate tracking loop: hold the object pose at N subdivisions per
//! depth interval by sampling mesh surface points, advecting their
//! projections with the event-derived motion field, and updating the pose
//! geometrically (paired rigid fit against sensor or reconstructed depth)
//! or via PnP when no depth is available.

use crate::event::{EventStream, TimeWindow};
use crate::geometry::{compute_roi, GeometryError, Intrinsics, Pose, TimingModel, Vec3};
use crate::grid::DepthMap;
use crate::mesh::{MeshError, TriMesh};
use crate::recon::{estimate_motion, reconstruct_depth, MotionField, ReconConfig, ReconError};
use crate::registration::{
    fit_rigid, pnp, reprojection_error, Pixel, RansacConfig, RegError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("tracking lost at {at_us} us ({live} live points)")]
    TrackingLost { at_us: i64, live: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Registration(#[from] RegError),
}

/// What drives pose updates between depth frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    /// 2D-3D PnP updates when depth is missing.
    PnpOnly,
    /// Depth reconstructed from events, then the geometric update.
    ReconDepth,
    /// Ablation: hold the pose between depth frames.
    DepthHold,
}

impl TrackerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerMode::PnpOnly => "pnp",
            TrackerMode::ReconDepth => "recon",
            TrackerMode::DepthHold => "hold",
        }
    }
}

/// How one result entry was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    /// Provided first-frame pose.
    Init,
    /// Geometric update against sensor depth.
    IcpSensor,
    /// Geometric update against reconstructed depth.
    IcpRecon,
    /// 2D-3D update without depth.
    Pnp,
    /// Pose held (ablation mode between depth frames).
    Hold,
    /// Pose frozen after tracking was lost.
    Lost,
}

impl UpdateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateKind::Init => "init",
            UpdateKind::IcpSensor => "icp-sensor",
            UpdateKind::IcpRecon => "icp-recon",
            UpdateKind::Pnp => "pnp",
            UpdateKind::Hold => "hold",
            UpdateKind::Lost => "lost",
        }
    }

    pub fn parse(s: &str) -> Option<UpdateKind> {
        Some(match s {
            "init" => UpdateKind::Init,
            "icp-sensor" => UpdateKind::IcpSensor,
            "icp-recon" => UpdateKind::IcpRecon,
            "pnp" => UpdateKind::Pnp,
            "hold" => UpdateKind::Hold,
            "lost" => UpdateKind::Lost,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerConfig {
    /// Surface samples drawn from the mesh.
    pub surface_samples: usize,
    pub sample_seed: u64,
    pub roi_padding: f64,
    pub recon: ReconConfig,
    pub ransac: RansacConfig,
    /// Relative depth-agreement band; larger mismatches drop the point.
    pub depth_agreement: f64,
    /// Tight relative band for the self-occlusion cull at sampling time.
    pub visibility_band: f64,
    /// Resample when live points fall below this fraction of the target.
    pub resample_fraction: f64,
    /// Tracking is lost below this many live points.
    pub min_live_points: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            surface_samples: 256,
            sample_seed: 0,
            roi_padding: crate::geometry::DEFAULT_ROI_PADDING,
            recon: ReconConfig::default(),
            ransac: RansacConfig::default(),
            depth_agreement: 0.10,
            visibility_band: 0.01,
            resample_fraction: 0.5,
            min_live_points: 4,
        }
    }
}

/// Mutable loop state carried across steps of one sequence.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub current_pose: Pose,
    pub current_time_us: i64,
    pub current_tau_index: u32,
    pub mode: TrackerMode,
    /// Object-frame surface samples.
    samples: Vec<Vec3>,
    live: Vec<bool>,
    resample_generation: u64,
    /// Pose and time at the most recent sensor depth frame.
    anchor_pose: Pose,
    anchor_time_us: i64,
    /// Most recent sensor depth frame.
    last_depth: DepthMap,
    pub last_motion: Option<MotionField>,
}

/// Surface samples culled for self-occlusion: candidates whose predicted
/// depth disagrees with the depth frame at their projection are on hidden
/// faces (or in depth holes) and never trackable from this viewpoint. Falls
/// back to raw sampling when the depth map is too sparse to cull against.
fn sample_visible(
    mesh: &TriMesh,
    pose: &Pose,
    depth: &DepthMap,
    k: &Intrinsics,
    cfg: &TrackerConfig,
    seed: u64,
) -> Result<Vec<Vec3>, TrackError> {
    let target = cfg.surface_samples;
    let band = cfg.visibility_band;
    let mut kept = Vec::with_capacity(target);
    for round in 0u64..4 {
        let batch = mesh.sample_surface(target * 2, seed.wrapping_add(round * 7919))?;
        for p in batch {
            let cam = pose.apply(&p);
            let Ok((u, v)) = k.project(&cam) else {
                continue;
            };
            let (ix, iy) = (u.round(), v.round());
            if ix < 0.0 || iy < 0.0 || ix >= depth.width() as f64 || iy >= depth.height() as f64 {
                continue;
            }
            let d = depth.at(ix as usize, iy as usize) as f64;
            if d <= 0.0 {
                continue;
            }
            if (cam.z - d).abs() <= band * cam.z {
                kept.push(p);
                if kept.len() == target {
                    return Ok(kept);
                }
            }
        }
    }
    if kept.len() >= cfg.min_live_points.max(8) {
        Ok(kept)
    } else {
        Ok(mesh.sample_surface(target, seed)?)
    }
}

impl TrackerState {
    pub fn new(
        mesh: &TriMesh,
        init_pose: Pose,
        init_time_us: i64,
        first_depth: DepthMap,
        k: &Intrinsics,
        mode: TrackerMode,
        cfg: &TrackerConfig,
    ) -> Result<Self, TrackError> {
        let samples = sample_visible(mesh, &init_pose, &first_depth, k, cfg, cfg.sample_seed)?;
        let live = vec![true; samples.len()];
        Ok(Self {
            current_pose: init_pose,
            current_time_us: init_time_us,
            current_tau_index: 0,
            mode,
            samples,
            live,
            resample_generation: 0,
            anchor_pose: init_pose,
            anchor_time_us: init_time_us,
            last_depth: first_depth,
            last_motion: None,
        })
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    pub fn surface_samples(&self) -> &[Vec3] {
        &self.samples
    }
}

/// One row of the tracked trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEntry {
    pub t_us: i64,
    pub pose: Pose,
    pub kind: UpdateKind,
    /// RMS 3D residual (meters) for geometric updates, mean inlier
    /// reprojection error (pixels) for PnP, 0 otherwise.
    pub residual: f64,
    pub inliers: usize,
}

/// Tracked trajectory plus wall-clock time per step (excluded from
/// equality so determinism checks compare payload only).
#[derive(Debug, Clone, Default)]
pub struct TrackResult {
    pub entries: Vec<TrackEntry>,
    pub step_wall_us: Vec<u64>,
}

impl TrackResult {
    pub fn poses(&self) -> Vec<(i64, Pose)> {
        self.entries.iter().map(|e| (e.t_us, e.pose)).collect()
    }
}

/// A 2D point advected by the motion field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectedPoint {
    pub position: [f64; 2],
    pub lost: bool,
}

/// Moves each point by the bilinearly sampled flow at its location; points
/// on invalid flow are marked lost.
pub fn advect_points(points: &[[f64; 2]], field: &MotionField) -> Vec<AdvectedPoint> {
    points
        .iter()
        .map(|&[x, y]| match field.sample(x, y) {
            Some([fx, fy]) => AdvectedPoint {
                position: [x + fx, y + fy],
                lost: false,
            },
            None => AdvectedPoint {
                position: [x, y],
                lost: true,
            },
        })
        .collect()
}

/// Events inside the rect and window, shifted to rect-local coordinates.
fn crop_events(
    stream: &EventStream,
    window: TimeWindow,
    rx: usize,
    ry: usize,
    rw: usize,
    rh: usize,
) -> EventStream {
    let windowed = stream
        .window(window.start_us, window.end_us)
        .unwrap_or_else(|_| EventStream::empty(rw as u16, rh as u16));
    let cropped: Vec<crate::event::Event> = windowed
        .events()
        .iter()
        .filter(|e| {
            (e.x as usize) >= rx
                && (e.x as usize) < rx + rw
                && (e.y as usize) >= ry
                && (e.y as usize) < ry + rh
        })
        .map(|e| crate::event::Event::new((e.x as usize - rx) as u16, (e.y as usize - ry) as u16, e.t_us, e.p))
        .collect();
    EventStream::from_sorted(cropped, rw as u16, rh as u16).expect("cropped events stay valid")
}

struct GeometricUpdate {
    pose: Pose,
    residual: f64,
    pairs: usize,
}

/// Median of the valid depth values in the 3x3 neighborhood of a fractional
/// pixel; `None` when every neighbor is invalid or out of bounds.
fn sample_depth_median3(depth: &DepthMap, x: f64, y: f64) -> Option<f64> {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    let mut values: [f32; 9] = [0.0; 9];
    let mut n = 0;
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx < 0 || ny < 0 || nx >= depth.width() as i64 || ny >= depth.height() as i64 {
                continue;
            }
            let v = depth.at(nx as usize, ny as usize);
            if v > 0.0 {
                values[n] = v;
                n += 1;
            }
        }
    }
    if n == 0 {
        return None;
    }
    values[..n].sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[n / 2] as f64)
}

/// The inner closed-form update of the hybrid tracker: a paired rigid fit
/// with one residual-trimmed refit. Pairs whose residual sits far above the
/// median stem from silhouette-rim depth or advection slips. Returns
/// `(delta, rms, pairs_used)`.
pub fn trimmed_rigid_fit(src: &[Vec3], dst: &[Vec3], min_pairs: usize) -> Option<(Pose, f64, usize)> {
    if src.len() < min_pairs.max(3) {
        return None;
    }
    let first = fit_rigid(src, dst).ok()?;
    let residuals: Vec<f64> = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (first.apply(s) - d).norm())
        .collect();
    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gate = (3.0 * sorted[sorted.len() / 2]).max(1e-3);
    let keep: Vec<usize> = (0..src.len()).filter(|&i| residuals[i] <= gate).collect();
    let (delta, kept_src, kept_dst) = if keep.len() >= min_pairs.max(3) && keep.len() < src.len() {
        let s2: Vec<Vec3> = keep.iter().map(|&i| src[i]).collect();
        let d2: Vec<Vec3> = keep.iter().map(|&i| dst[i]).collect();
        match fit_rigid(&s2, &d2) {
            Ok(refit) => (refit, s2, d2),
            Err(_) => (first, src.to_vec(), dst.to_vec()),
        }
    } else {
        (first, src.to_vec(), dst.to_vec())
    };
    let rms = (kept_src
        .iter()
        .zip(&kept_dst)
        .map(|(s, d)| (delta.apply(s) - d).norm_squared())
        .sum::<f64>()
        / kept_src.len() as f64)
        .sqrt();
    Some((delta, rms, kept_src.len()))
}

/// Advances the tracker to `t_now`. `sensor_depth` carries the fresh depth
/// frame at subdivision 0 and is `None` in between.
pub fn step(
    state: &mut TrackerState,
    events: &EventStream,
    t_now: i64,
    sensor_depth: Option<&DepthMap>,
    k: &Intrinsics,
    mesh: &TriMesh,
    cfg: &TrackerConfig,
) -> Result<TrackEntry, TrackError> {
    let roi = compute_roi(k, &state.current_pose, mesh.diameter(), cfg.roi_padding)
        .map_err(|_| TrackError::TrackingLost {
            at_us: t_now,
            live: 0,
        })?;
    let (rx, ry, rw, rh) = roi.rect(k.width, k.height);
    let long_window = TimeWindow::new(state.anchor_time_us, t_now)
        .map_err(|e| TrackError::Config(format!("bad step window: {e}")))?;
    let short_window = TimeWindow::new(state.current_time_us, t_now)
        .map_err(|e| TrackError::Config(format!("bad step window: {e}")))?;
    let roi_events = crop_events(events, long_window, rx, ry, rw, rh);

    // Motion field over the ROI, plus reconstructed depth when needed.
    let needs_recon = sensor_depth.is_none() && state.mode == TrackerMode::ReconDepth;
    let (field, recon_depth) = if needs_recon {
        let d0_roi = state.last_depth.crop(rx, ry, rw, rh);
        let recon = reconstruct_depth(&d0_roi, &roi_events, long_window, short_window, &cfg.recon)?;
        (recon.motion.clone(), Some(recon.depth))
    } else {
        (estimate_motion(&roi_events, long_window, &cfg.recon), None)
    };

    // Project live samples at the anchor pose and advect them to t_now.
    // With no usable flow (static scene) the projections stand as-is.
    let static_scene = field.valid_count() == 0;
    let mut tracked: Vec<(usize, Pixel, bool)> = Vec::with_capacity(state.samples.len());
    for i in 0..state.samples.len() {
        if !state.live[i] {
            continue;
        }
        let cam = state.anchor_pose.apply(&state.samples[i]);
        let (u, v) = match k.project(&cam) {
            Ok(uv) => uv,
            Err(_) => {
                state.live[i] = false;
                continue;
            }
        };
        let local = [u - rx as f64, v - ry as f64];
        let (advected, confident) = if static_scene {
            ([u, v], true)
        } else {
            match field.sample(local[0], local[1]) {
                Some([fx, fy]) => {
                    let nu = u + fx;
                    let nv = v + fy;
                    let in_roi = nu >= rx as f64
                        && nv >= ry as f64
                        && nu < (rx + rw) as f64
                        && nv < (ry + rh) as f64;
                    if !in_roi {
                        state.live[i] = false;
                        continue;
                    }
                    let cx = (local[0].round() as usize).min(rw - 1);
                    let cy = (local[1].round() as usize).min(rh - 1);
                    ([nu, nv], field.confidence_at(cx, cy) > 0.0)
                }
                None => {
                    state.live[i] = false;
                    continue;
                }
            }
        };
        tracked.push((i, Pixel::new(advected[0], advected[1]), confident));
    }

    // Geometric branch: back-project tracked points through the available
    // depth, gate on depth agreement, and fit the incremental transform.
    let mut geometric: Option<(GeometricUpdate, UpdateKind)> = None;
    let depth_source: Option<(&DepthMap, bool)> = match (sensor_depth, recon_depth.as_ref()) {
        (Some(d), _) => Some((d, false)),
        (None, Some(d)) => Some((d, true)),
        (None, None) => None,
    };
    if let Some((depth, roi_local)) = depth_source {
        let mut src = Vec::new();
        let mut dst = Vec::new();
        for &(i, px, _confident) in &tracked {
            let (sx, sy) = if roi_local {
                (px.x - rx as f64, px.y - ry as f64)
            } else {
                (px.x, px.y)
            };
            // Median over the valid 3x3 neighborhood: robust against splat
            // scatter and facet-scale surface roughness.
            let Some(d) = sample_depth_median3(depth, sx, sy) else {
                continue;
            };
            let z_pred = state.current_pose.apply(&state.samples[i]).z;
            if z_pred <= 0.0 || (d - z_pred).abs() > cfg.depth_agreement * z_pred {
                state.live[i] = false;
                continue;
            }
            let x_now = k
                .backproject(px.x, px.y, d)
                .map_err(TrackError::Geometry)?;
            src.push(state.anchor_pose.apply(&state.samples[i]));
            dst.push(x_now);
        }
        if let Some(update) = trimmed_rigid_fit(&src, &dst, cfg.min_live_points) {
            let kind = if roi_local {
                UpdateKind::IcpRecon
            } else {
                UpdateKind::IcpSensor
            };
            geometric = Some((
                GeometricUpdate {
                    pose: update.0.compose(&state.anchor_pose).renormalized(),
                    residual: update.1,
                    pairs: update.2,
                },
                kind,
            ));
        }
    }

    // PnP fallback: 2D-3D matching of the advected points against the
    // object-frame samples.
    let entry = if let Some((update, kind)) = geometric {
        TrackEntry {
            t_us: t_now,
            pose: update.pose,
            kind,
            residual: update.residual,
            inliers: update.pairs,
        }
    } else {
        if tracked.len() < cfg.min_live_points.max(4) {
            return Err(TrackError::TrackingLost {
                at_us: t_now,
                live: tracked.len(),
            });
        }
        let model: Vec<Vec3> = tracked.iter().map(|&(i, _, _)| state.samples[i]).collect();
        let pixels: Vec<Pixel> = tracked.iter().map(|&(_, p, _)| p).collect();
        let result = pnp(&model, &pixels, k, &cfg.ransac).map_err(|_| TrackError::TrackingLost {
            at_us: t_now,
            live: tracked.len(),
        })?;
        let inliers = result.inliers.iter().filter(|&&b| b).count();
        let mean_err = tracked
            .iter()
            .zip(&result.inliers)
            .filter(|(_, &inl)| inl)
            .map(|(&(i, ref px, _), _)| reprojection_error(&result.pose, &state.samples[i], px, k))
            .sum::<f64>()
            / inliers.max(1) as f64;
        TrackEntry {
            t_us: t_now,
            pose: result.pose.renormalized(),
            kind: UpdateKind::Pnp,
            residual: mean_err,
            inliers,
        }
    };

    // Advance state; resample at the current pose when attrition bites.
    state.current_pose = entry.pose;
    state.current_time_us = t_now;
    state.last_motion = Some(field);
    if let Some(d) = sensor_depth {
        state.anchor_pose = entry.pose;
        state.anchor_time_us = t_now;
        state.last_depth = d.clone();
    }
    if state.live_count() < (cfg.surface_samples as f64 * cfg.resample_fraction) as usize {
        state.resample_generation += 1;
        state.samples = sample_visible(
            mesh,
            &state.current_pose,
            &state.last_depth,
            k,
            cfg,
            cfg.sample_seed.wrapping_add(state.resample_generation * 104_729),
        )?;
        state.live = vec![true; state.samples.len()];
    }
    Ok(entry)
}

/// Tracks a full sequence: one entry per subdivision timestamp, starting
/// from the provided first-frame pose; never re-initializes. After a
/// tracking loss the pose freezes and subsequent entries are flagged.
#[allow(clippy::too_many_arguments)]
pub fn track_sequence(
    mesh: &TriMesh,
    init_pose: Pose,
    events: &EventStream,
    depth_frames: &[DepthMap],
    timing: &TimingModel,
    k: &Intrinsics,
    cfg: &TrackerConfig,
    mode: TrackerMode,
) -> Result<TrackResult, TrackError> {
    if depth_frames.is_empty() {
        return Err(TrackError::Config("no depth frames".into()));
    }
    for (i, d) in depth_frames.iter().enumerate() {
        let expected = timing.depth_timestamp(i as i64);
        if d.timestamp_us != expected {
            return Err(TrackError::Config(format!(
                "depth frame {i} at {} us, timing model expects {expected} us",
                d.timestamp_us
            )));
        }
        if d.width() != k.width as usize || d.height() != k.height as usize {
            return Err(TrackError::Config(format!(
                "depth frame {i} resolution {}x{} mismatches intrinsics {}x{}",
                d.width(),
                d.height(),
                k.width,
                k.height
            )));
        }
    }

    let t0 = timing.timestamp(0, 0).expect("subdivision 0");
    let mut state = TrackerState::new(
        mesh,
        init_pose,
        t0,
        depth_frames[0].clone(),
        k,
        mode,
        cfg,
    )?;
    let mut result = TrackResult::default();
    result.entries.push(TrackEntry {
        t_us: t0,
        pose: init_pose,
        kind: UpdateKind::Init,
        residual: 0.0,
        inliers: state.live_count(),
    });
    result.step_wall_us.push(0);

    let mut lost = false;
    for frame in 0..depth_frames.len() as i64 {
        for sub in 0..timing.subdivisions {
            if frame == 0 && sub == 0 {
                continue;
            }
            let t = timing.timestamp(frame, sub).expect("sub < N");
            state.current_tau_index = sub;
            if lost {
                result.entries.push(TrackEntry {
                    t_us: t,
                    pose: state.current_pose,
                    kind: UpdateKind::Lost,
                    residual: 0.0,
                    inliers: 0,
                });
                result.step_wall_us.push(0);
                continue;
            }
            if mode == TrackerMode::DepthHold && sub != 0 {
                state.current_time_us = t;
                result.entries.push(TrackEntry {
                    t_us: t,
                    pose: state.current_pose,
                    kind: UpdateKind::Hold,
                    residual: 0.0,
                    inliers: 0,
                });
                result.step_wall_us.push(0);
                continue;
            }
            let sensor = if sub == 0 {
                Some(&depth_frames[frame as usize])
            } else {
                None
            };
            let started = std::time::Instant::now();
            match step(&mut state, events, t, sensor, k, mesh, cfg) {
                Ok(entry) => {
                    result.entries.push(entry);
                    result.step_wall_us.push(started.elapsed().as_micros() as u64);
                }
                Err(TrackError::TrackingLost { .. }) => {
                    lost = true;
                    result.entries.push(TrackEntry {
                        t_us: t,
                        pose: state.current_pose,
                        kind: UpdateKind::Lost,
                        residual: 0.0,
                        inliers: 0,
                    });
                    result.step_wall_us.push(started.elapsed().as_micros() as u64);
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(result)
}
