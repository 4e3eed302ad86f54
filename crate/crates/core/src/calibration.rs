//! Hand-eye calibration: the transform from a motion-capture world frame to
//! the camera frame, solved as a direct 2D-3D registration over pooled
//! corner observations with RANSAC outlier rejection and LM refinement.

use crate::geometry::{Intrinsics, Pose, Vec3};
use crate::registration::{
    lm_refine_reprojection, pnp, reprojection_error, Pixel, RansacConfig, RegError,
};
use nalgebra::SymmetricEigen;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("no calibration observations")]
    NoObservations,
    #[error(transparent)]
    Registration(#[from] RegError),
}

/// One synchronized capture: mocap 3D corner positions plus their 2D camera
/// detections.
#[derive(Debug, Clone)]
pub struct CalibObservation {
    pub t_us: i64,
    pub corners: Vec<CalibCorner>,
}

/// A single corner: stable id across time, 3D position in the mocap world
/// frame (meters), 2D detection in pixels.
#[derive(Debug, Clone, Copy)]
pub struct CalibCorner {
    pub id: u32,
    pub point_world: Vec3,
    pub pixel: Pixel,
}

/// Calibration output: world-to-camera transform, pooled inlier mask, and
/// the inlier RMS reprojection error in pixels.
#[derive(Debug, Clone)]
pub struct CalibResult {
    pub t_co: Pose,
    /// One entry per pooled correspondence, in observation order.
    pub inlier_mask: Vec<bool>,
    pub rms_reprojection: f64,
    /// Smallest-eigenvalue test flagged an (almost) coplanar 3D set.
    pub coplanar_warning: bool,
}

fn pool(obs: &[CalibObservation]) -> (Vec<Vec3>, Vec<Pixel>) {
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for o in obs {
        for c in &o.corners {
            points.push(c.point_world);
            pixels.push(c.pixel);
        }
    }
    (points, pixels)
}

/// Eigenvalue threshold below which the pooled 3D set counts as coplanar.
pub const COPLANARITY_EIGENVALUE_TOL: f64 = 1e-8;

fn is_coplanar(points: &[Vec3]) -> bool {
    if points.len() < 4 {
        return true;
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = crate::geometry::Mat3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;
    let eig = SymmetricEigen::new(cov);
    eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v)) < COPLANARITY_EIGENVALUE_TOL
}

/// Estimates `T_CO` by pooling all (3D, 2D) pairs across timestamps,
/// running the RANSAC PnP engine with the reprojection inlier test, and
/// refining on the consensus set with Levenberg-Marquardt.
pub fn calibrate_hand_eye(
    obs: &[CalibObservation],
    k: &Intrinsics,
    cfg: &RansacConfig,
) -> Result<CalibResult, CalibError> {
    let (points, pixels) = pool(obs);
    if points.is_empty() {
        return Err(CalibError::NoObservations);
    }
    let coplanar_warning = is_coplanar(&points);
    if coplanar_warning {
        log::warn!(
            "hand-eye: pooled 3D corners are (near-)coplanar; conditioning may be poor"
        );
    }

    let ransac = pnp(&points, &pixels, k, cfg)?;
    let in_pts: Vec<Vec3> = points
        .iter()
        .zip(&ransac.inliers)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect();
    let in_px: Vec<Pixel> = pixels
        .iter()
        .zip(&ransac.inliers)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect();
    let refined = lm_refine_reprojection(&ransac.pose, &in_pts, &in_px, k)?;

    let rms = rms_over(&refined.pose, &in_pts, &in_px, k);
    Ok(CalibResult {
        t_co: refined.pose,
        inlier_mask: ransac.inliers,
        rms_reprojection: rms,
        coplanar_warning,
    })
}

fn rms_over(pose: &Pose, points: &[Vec3], pixels: &[Pixel], k: &Intrinsics) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sq: f64 = points
        .iter()
        .zip(pixels)
        .map(|(p, x)| reprojection_error(pose, p, x, k).powi(2))
        .sum();
    (sq / points.len() as f64).sqrt()
}

/// Per-timestamp residual statistics for a calibration result.
#[derive(Debug, Clone)]
pub struct ReprojectionReport {
    pub frames: Vec<FrameResidual>,
    /// RMS over inliers; must equal the result's stored value.
    pub overall_inlier_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FrameResidual {
    pub t_us: i64,
    pub mean: f64,
    pub max: f64,
    pub corners: usize,
}

/// Recomputes residuals per frame and overall; the overall inlier RMS must
/// match `result.rms_reprojection` to machine precision.
pub fn reprojection_report(
    result: &CalibResult,
    obs: &[CalibObservation],
    k: &Intrinsics,
) -> ReprojectionReport {
    let mut frames = Vec::with_capacity(obs.len());
    let mut pooled_index = 0usize;
    let mut inlier_sq = 0.0;
    let mut inlier_count = 0usize;
    for o in obs {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for c in &o.corners {
            let e = reprojection_error(&result.t_co, &c.point_world, &c.pixel, k);
            sum += e;
            max = max.max(e);
            if result.inlier_mask.get(pooled_index).copied().unwrap_or(false) {
                inlier_sq += e * e;
                inlier_count += 1;
            }
            pooled_index += 1;
        }
        frames.push(FrameResidual {
            t_us: o.t_us,
            mean: if o.corners.is_empty() {
                0.0
            } else {
                sum / o.corners.len() as f64
            },
            max,
            corners: o.corners.len(),
        });
    }
    let overall = if inlier_count == 0 {
        0.0
    } else {
        (inlier_sq / inlier_count as f64).sqrt()
    };
    ReprojectionReport {
        frames,
        overall_inlier_rms: overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat3;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn test_k() -> Intrinsics {
        Intrinsics::new(615.0, 612.0, 322.0, 238.0, 640, 480).unwrap()
    }

    /// Checkerboard corners observed at several board placements; the board
    /// moves through space so the pooled set is non-coplanar.
    fn synthetic_observations(
        t_co: &Pose,
        k: &Intrinsics,
        frames: usize,
        noise_px: f64,
        seed: u64,
    ) -> Vec<CalibObservation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_px.max(1e-12)).unwrap();
        let mut obs = Vec::new();
        for m in 0..frames {
            let spin = Pose::from_axis_angle(
                &Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
                rng.gen_range(-0.7..0.7),
                Vec3::new(
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.4),
                ),
            );
            let mut corners = Vec::new();
            for i in 0..5u32 {
                for j in 0..4u32 {
                    let board_pt = Vec3::new(i as f64 * 0.05, j as f64 * 0.05, 0.0);
                    // World-frame position: board pose in the mocap frame.
                    let world = spin.apply(&board_pt) + Vec3::new(0.0, 0.0, 0.3);
                    let cam = t_co.apply(&world);
                    if cam.z < 0.2 {
                        continue;
                    }
                    let (u, v) = k.project(&cam).unwrap();
                    if !k.contains(u, v) {
                        continue;
                    }
                    let (nu, nv) = if noise_px > 0.0 {
                        (noise.sample(&mut rng), noise.sample(&mut rng))
                    } else {
                        (0.0, 0.0)
                    };
                    corners.push(CalibCorner {
                        id: i * 4 + j,
                        point_world: world,
                        pixel: Pixel::new(u + nu, v + nv),
                    });
                }
            }
            obs.push(CalibObservation {
                t_us: m as i64 * 33_333,
                corners,
            });
        }
        obs
    }

    fn planted_t_co() -> Pose {
        Pose::from_axis_angle(
            &Vec3::new(0.2, -0.9, 0.4),
            0.35,
            Vec3::new(0.08, -0.03, 1.1),
        )
    }

    #[test]
    fn identity_when_world_equals_camera_frame() {
        let k = test_k();
        let identity = Pose::new(Mat3::identity(), Vec3::zeros()).unwrap();
        // World frame = camera frame, so P^O = P^C directly.
        let obs = synthetic_observations(&identity, &k, 6, 0.0, 1);
        let res = calibrate_hand_eye(&obs, &k, &RansacConfig::default()).unwrap();
        assert!(res.t_co.rotation_angle_to(&Pose::identity()) < 1e-7);
        assert!(res.t_co.translation().norm() < 1e-7);
        assert!(res.rms_reprojection < 1e-7);
        assert!(res.inlier_mask.iter().all(|&b| b));
    }

    #[test]
    fn recovers_planted_transform_under_pixel_noise() {
        let k = test_k();
        let planted = planted_t_co();
        let mut rot_errs = Vec::new();
        let mut trans_errs = Vec::new();
        for seed in 0..10 {
            let obs = synthetic_observations(&planted, &k, 12, 0.5, seed);
            let total: usize = obs.iter().map(|o| o.corners.len()).sum();
            assert!(total >= 200, "need enough correspondences, got {total}");
            let cfg = RansacConfig {
                threshold: 2.0,
                max_iterations: 200,
                min_sample_size: 4,
                seed,
            };
            let res = calibrate_hand_eye(&obs, &k, &cfg).unwrap();
            rot_errs.push(res.t_co.rotation_angle_to(&planted).to_degrees());
            trans_errs.push(res.t_co.translation_distance_to(&planted));
        }
        let mean_rot = rot_errs.iter().sum::<f64>() / rot_errs.len() as f64;
        let mean_trans = trans_errs.iter().sum::<f64>() / trans_errs.len() as f64;
        assert!(mean_rot < 0.1, "mean rotation error {mean_rot} deg");
        assert!(mean_trans < 1e-3, "mean translation error {mean_trans} m");
    }

    #[test]
    fn labels_outliers_exactly() {
        let k = test_k();
        let planted = planted_t_co();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut obs = synthetic_observations(&planted, &k, 10, 0.0, 3);
        let mut expected = Vec::new();
        for o in &mut obs {
            for c in &mut o.corners {
                // Corrupt roughly 30% with uniform pixel noise.
                if rng.gen_bool(0.3) {
                    c.pixel.x += rng.gen_range(15.0..80.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    c.pixel.y += rng.gen_range(15.0..80.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    expected.push(false);
                } else {
                    expected.push(true);
                }
            }
        }
        let cfg = RansacConfig {
            threshold: 2.0,
            max_iterations: 400,
            min_sample_size: 4,
            seed: 5,
        };
        let res = calibrate_hand_eye(&obs, &k, &cfg).unwrap();
        assert_eq!(res.inlier_mask, expected);
        assert!(res.t_co.rotation_angle_to(&planted).to_degrees() < 0.2);
        assert!(res.t_co.translation_distance_to(&planted) < 2e-3);
    }

    #[test]
    fn equivariant_under_world_frame_change() {
        let k = test_k();
        let planted = planted_t_co();
        let obs = synthetic_observations(&planted, &k, 8, 0.0, 11);
        let g = Pose::from_axis_angle(&Vec3::new(0.5, 0.5, -0.3), 0.4, Vec3::new(0.2, -0.1, 0.05));
        let g_inv = g.inverse();
        let moved: Vec<CalibObservation> = obs
            .iter()
            .map(|o| CalibObservation {
                t_us: o.t_us,
                corners: o
                    .corners
                    .iter()
                    .map(|c| CalibCorner {
                        id: c.id,
                        point_world: g.apply(&c.point_world),
                        pixel: c.pixel,
                    })
                    .collect(),
            })
            .collect();
        let cfg = RansacConfig::default();
        let a = calibrate_hand_eye(&obs, &k, &cfg).unwrap();
        let b = calibrate_hand_eye(&moved, &k, &cfg).unwrap();
        let expected = a.t_co.compose(&g_inv);
        let dr = (b.t_co.rotation() - expected.rotation()).norm();
        assert!(dr < 1e-7, "rotation equivariance residual {dr}");
        assert!(b.t_co.translation_distance_to(&expected) < 1e-7);
    }

    #[test]
    fn coplanar_pool_sets_warning() {
        let k = test_k();
        // A single static board: all corners share one plane.
        let mut corners = Vec::new();
        let t_co = Pose::new(Mat3::identity(), Vec3::new(0.0, 0.0, 0.0)).unwrap();
        for i in 0..6u32 {
            for j in 0..5u32 {
                let world = Vec3::new(i as f64 * 0.04 - 0.1, j as f64 * 0.04 - 0.08, 0.8);
                let (u, v) = k.project(&t_co.apply(&world)).unwrap();
                corners.push(CalibCorner {
                    id: i * 5 + j,
                    point_world: world,
                    pixel: Pixel::new(u, v),
                });
            }
        }
        let obs = vec![CalibObservation { t_us: 0, corners }];
        let res = calibrate_hand_eye(&obs, &k, &RansacConfig::default()).unwrap();
        assert!(res.coplanar_warning);
        assert!(res.rms_reprojection < 1e-6);
    }

    #[test]
    fn report_matches_stored_rms_and_flags_outlier_frame() {
        let k = test_k();
        let planted = planted_t_co();
        let mut obs = synthetic_observations(&planted, &k, 8, 0.3, 21);
        // One gross outlier in frame 5.
        obs[5].corners[0].pixel.x += 50.0;
        let res = calibrate_hand_eye(&obs, &k, &RansacConfig::default()).unwrap();
        let report = reprojection_report(&res, &obs, &k);
        assert!(
            (report.overall_inlier_rms - res.rms_reprojection).abs() < 1e-12,
            "report rms {} vs stored {}",
            report.overall_inlier_rms,
            res.rms_reprojection
        );
        let worst = report
            .frames
            .iter()
            .max_by(|a, b| a.max.partial_cmp(&b.max).unwrap())
            .unwrap();
        assert_eq!(worst.t_us, obs[5].t_us);
        assert!(worst.max > 40.0);
    }

    #[test]
    fn identity_case_report_is_all_zero() {
        let k = test_k();
        let identity = Pose::new(Mat3::identity(), Vec3::zeros()).unwrap();
        let obs = synthetic_observations(&identity, &k, 4, 0.0, 2);
        let res = calibrate_hand_eye(&obs, &k, &RansacConfig::default()).unwrap();
        let report = reprojection_report(&res, &obs, &k);
        for f in &report.frames {
            assert!(f.mean < 1e-7 && f.max < 1e-7);
        }
    }

    #[test]
    fn seed_determinism() {
        let k = test_k();
        let planted = planted_t_co();
        let obs = synthetic_observations(&planted, &k, 10, 0.5, 4);
        let cfg = RansacConfig {
            seed: 1234,
            ..RansacConfig::default()
        };
        let a = calibrate_hand_eye(&obs, &k, &cfg).unwrap();
        let b = calibrate_hand_eye(&obs, &k, &cfg).unwrap();
        assert_eq!(a.t_co, b.t_co);
        assert_eq!(a.inlier_mask, b.inlier_mask);
        assert_eq!(a.rms_reprojection, b.rms_reprojection);
    }
}
