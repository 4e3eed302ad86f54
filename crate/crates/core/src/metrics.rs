//! Pose-error metrics and aggregation: ADD, ADD-S, exact AUC integration,
//! MSSD/MSPD recalls and their Average Recall, plus throughput statistics.

use crate::geometry::{Intrinsics, Pose, Vec3};
use crate::registration::KdTree3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric undefined on an empty input")]
    Empty,
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("point behind camera during projection metric")]
    BehindCamera,
    #[error("estimate/ground-truth timestamps do not align at {0}")]
    TimestampMismatch(i64),
}

/// Object-frame symmetry transforms; always contains the identity.
#[derive(Debug, Clone)]
pub struct SymmetrySet {
    poses: Vec<Pose>,
}

impl SymmetrySet {
    /// Identity only (asymmetric object).
    pub fn trivial() -> Self {
        Self {
            poses: vec![Pose::identity()],
        }
    }

    /// Ensures the identity is present at index 0.
    pub fn new(mut extra: Vec<Pose>) -> Self {
        let mut poses = vec![Pose::identity()];
        poses.append(&mut extra);
        Self { poses }
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }
}

/// Mean distance between model points under the two poses.
pub fn add_error(points: &[Vec3], t_est: &Pose, t_gt: &Pose) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = points
        .iter()
        .map(|p| (t_est.apply(p) - t_gt.apply(p)).norm())
        .sum();
    Ok(sum / points.len() as f64)
}

/// Symmetric variant: mean nearest-neighbor distance from estimated points
/// to the ground-truth point set.
pub fn adds_error(points: &[Vec3], t_est: &Pose, t_gt: &Pose) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let gt: Vec<Vec3> = points.iter().map(|p| t_gt.apply(p)).collect();
    let tree = KdTree3::build(&gt);
    let sum: f64 = points
        .iter()
        .map(|p| tree.nearest(&t_est.apply(p)).1.sqrt())
        .sum();
    Ok(sum / points.len() as f64)
}

/// Exact area under the recall-vs-threshold curve from 0 to `max_threshold`,
/// normalized to [0, 1]. Recall counts errors strictly below the threshold;
/// the piecewise integral is `sum_i max(0, T - e_i) / (n T)`.
pub fn auc(errors: &[f64], max_threshold: f64) -> Result<f64, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::Empty);
    }
    if max_threshold <= 0.0 {
        return Err(MetricsError::BadThreshold(max_threshold));
    }
    let sum: f64 = errors
        .iter()
        .map(|&e| (max_threshold - e.max(0.0)).max(0.0))
        .sum();
    Ok(sum / (errors.len() as f64 * max_threshold))
}

/// Fraction of errors strictly below `factor * diameter`.
pub fn recall_at(errors: &[f64], diameter: f64, factor: f64) -> Result<f64, MetricsError> {
    if diameter <= 0.0 {
        return Err(MetricsError::BadThreshold(diameter));
    }
    if errors.is_empty() {
        return Err(MetricsError::Empty);
    }
    let threshold = factor * diameter;
    let hits = errors.iter().filter(|&&e| e < threshold).count();
    Ok(hits as f64 / errors.len() as f64)
}

/// Maximum symmetry-aware surface distance: min over symmetries of the max
/// point distance.
pub fn mssd(
    points: &[Vec3],
    t_est: &Pose,
    t_gt: &Pose,
    sym: &SymmetrySet,
) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut best = f64::INFINITY;
    for s in sym.poses() {
        let gt_s = t_gt.compose(s);
        let worst = points
            .iter()
            .map(|p| (t_est.apply(p) - gt_s.apply(p)).norm())
            .fold(0.0f64, f64::max);
        best = best.min(worst);
    }
    Ok(best)
}

/// Maximum symmetry-aware projection distance in pixels.
pub fn mspd(
    points: &[Vec3],
    t_est: &Pose,
    t_gt: &Pose,
    sym: &SymmetrySet,
    k: &Intrinsics,
) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let project = |pose: &Pose, p: &Vec3| -> Result<(f64, f64), MetricsError> {
        k.project(&pose.apply(p))
            .map_err(|_| MetricsError::BehindCamera)
    };
    let mut best = f64::INFINITY;
    for s in sym.poses() {
        let gt_s = t_gt.compose(s);
        let mut worst = 0.0f64;
        for p in points {
            let (ue, ve) = project(t_est, p)?;
            let (ug, vg) = project(&gt_s, p)?;
            worst = worst.max(((ue - ug).powi(2) + (ve - vg).powi(2)).sqrt());
        }
        best = best.min(worst);
    }
    Ok(best)
}

/// MSSD recall thresholds: `{0.05 d, 0.10 d, ..., 0.50 d}`.
pub fn mssd_thresholds(diameter: f64) -> Vec<f64> {
    (1..=10).map(|i| 0.05 * i as f64 * diameter).collect()
}

/// MSPD recall thresholds: `{5 r, 10 r, ..., 50 r}` with `r = width / 640`.
pub fn mspd_thresholds(image_width: u32) -> Vec<f64> {
    let r = image_width as f64 / 640.0;
    (1..=10).map(|i| 5.0 * i as f64 * r).collect()
}

fn mean_recall(errors: &[f64], thresholds: &[f64]) -> f64 {
    let n = errors.len() as f64;
    thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e < t).count() as f64 / n)
        .sum::<f64>()
        / thresholds.len() as f64
}

/// Average recall over the MSSD/MSPD threshold grids. VSD is out of scope,
/// so the mean covers the two available components.
pub fn average_recall(
    mssd_errors: &[f64],
    mspd_errors: &[f64],
    diameter: f64,
    image_width: u32,
) -> Result<(f64, f64, f64), MetricsError> {
    if mssd_errors.is_empty() || mspd_errors.is_empty() {
        return Err(MetricsError::Empty);
    }
    let ar_mssd = mean_recall(mssd_errors, &mssd_thresholds(diameter));
    let ar_mspd = mean_recall(mspd_errors, &mspd_thresholds(image_width));
    Ok((ar_mssd, ar_mspd, 0.5 * (ar_mssd + ar_mspd)))
}

/// Wall-clock statistics of tracker steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct FpsStats {
    pub mean_hz: f64,
    pub median_hz: f64,
    pub mean_step_ms: f64,
    pub median_step_ms: f64,
}

impl FpsStats {
    pub fn from_step_times_us(times: &[u64]) -> Option<FpsStats> {
        if times.is_empty() {
            return None;
        }
        let mut sorted = times.to_vec();
        sorted.sort_unstable();
        let median_us = sorted[sorted.len() / 2] as f64;
        let mean_us = times.iter().sum::<u64>() as f64 / times.len() as f64;
        Some(FpsStats {
            mean_hz: 1e6 / mean_us.max(1e-9),
            median_hz: 1e6 / median_us.max(1e-9),
            mean_step_ms: mean_us / 1e3,
            median_step_ms: median_us / 1e3,
        })
    }
}

/// Evaluation summary over one sequence. AUC integrates to `0.1 * diameter`;
/// recall counts errors strictly below the same bound. The `ar_mean` column
/// averages MSSD and MSPD only (no VSD).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub frames: usize,
    pub model_points: usize,
    pub diameter_m: f64,
    pub add_auc: f64,
    pub adds_auc: f64,
    pub add_recall_0p1d: f64,
    pub adds_recall_0p1d: f64,
    pub mssd_ar: f64,
    pub mspd_ar: f64,
    /// "AR (no VSD)": mean of the MSSD and MSPD average recalls.
    pub ar_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps: Option<FpsStats>,
}

/// Joins estimated and ground-truth trajectories on exact timestamps and
/// computes the full report. `model_points` are object-frame points (mesh
/// vertices by default; resampled sets are fine — the count is recorded).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_poses(
    estimates: &[(i64, Pose)],
    ground_truth: &[(i64, Pose)],
    model_points: &[Vec3],
    diameter: f64,
    sym: &SymmetrySet,
    k: &Intrinsics,
    step_times_us: Option<&[u64]>,
) -> Result<MetricReport, MetricsError> {
    if estimates.is_empty() || model_points.is_empty() {
        return Err(MetricsError::Empty);
    }
    let gt_by_time: std::collections::BTreeMap<i64, Pose> =
        ground_truth.iter().copied().collect();

    let mut add_errs = Vec::with_capacity(estimates.len());
    let mut adds_errs = Vec::with_capacity(estimates.len());
    let mut mssd_errs = Vec::with_capacity(estimates.len());
    let mut mspd_errs = Vec::with_capacity(estimates.len());
    for &(t, est) in estimates {
        let gt = gt_by_time
            .get(&t)
            .ok_or(MetricsError::TimestampMismatch(t))?;
        add_errs.push(add_error(model_points, &est, gt)?);
        adds_errs.push(adds_error(model_points, &est, gt)?);
        mssd_errs.push(mssd(model_points, &est, gt, sym)?);
        mspd_errs.push(mspd(model_points, &est, gt, sym, k)?);
    }

    let threshold = 0.1 * diameter;
    let (ar_mssd, ar_mspd, ar_mean) =
        average_recall(&mssd_errs, &mspd_errs, diameter, k.width)?;
    Ok(MetricReport {
        frames: estimates.len(),
        model_points: model_points.len(),
        diameter_m: diameter,
        add_auc: auc(&add_errs, threshold)?,
        adds_auc: auc(&adds_errs, threshold)?,
        add_recall_0p1d: recall_at(&add_errs, diameter, 0.1)?,
        adds_recall_0p1d: recall_at(&adds_errs, diameter, 0.1)?,
        mssd_ar: ar_mssd,
        mspd_ar: ar_mspd,
        ar_mean,
        fps: step_times_us.and_then(FpsStats::from_step_times_us),
    })
}

/// Per-frame error rows backing the report; written out as CSV by the CLI.
#[derive(Debug, Clone)]
pub struct FrameErrors {
    pub rows: Vec<(i64, f64, f64, f64, f64)>,
}

/// Per-frame `(t_us, add, adds, mssd, mspd)` rows.
pub fn per_frame_errors(
    estimates: &[(i64, Pose)],
    ground_truth: &[(i64, Pose)],
    model_points: &[Vec3],
    sym: &SymmetrySet,
    k: &Intrinsics,
) -> Result<FrameErrors, MetricsError> {
    let gt_by_time: std::collections::BTreeMap<i64, Pose> =
        ground_truth.iter().copied().collect();
    let mut rows = Vec::with_capacity(estimates.len());
    for &(t, est) in estimates {
        let gt = gt_by_time
            .get(&t)
            .ok_or(MetricsError::TimestampMismatch(t))?;
        rows.push((
            t,
            add_error(model_points, &est, gt)?,
            adds_error(model_points, &est, gt)?,
            mssd(model_points, &est, gt, sym)?,
            mspd(model_points, &est, gt, sym, k)?,
        ));
    }
    Ok(FrameErrors { rows })
}
