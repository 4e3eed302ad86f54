//! Rigid alignment primitives: closed-form correspondence fitting, ICP with
//! spatial-index association, EPnP inside a RANSAC loop, and
//! Levenberg-Marquardt reprojection refinement.

use crate::geometry::{Intrinsics, Mat3, Pose, Vec3};
use nalgebra::{DMatrix, DVector, Matrix6, SymmetricEigen, Vector2, Vector6};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Pixel = Vector2<f64>;

#[derive(Debug, Error)]
pub enum RegError {
    #[error("need at least {need} correspondences, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("source and destination lengths differ ({0} vs {1})")]
    MismatchedLengths(usize, usize),
    #[error("degenerate point configuration (collinear or coincident)")]
    DegenerateConfiguration,
    #[error("degenerate association: fewer than 3 distinct targets")]
    DegenerateAssociation,
    #[error("no RANSAC hypothesis reached {0} inliers")]
    NoConsensus(usize),
    #[error("non-finite residual at the initial pose")]
    InvalidStart,
    #[error("ransac config invalid: {0}")]
    BadConfig(&'static str),
    #[error("singular value decomposition failed")]
    SvdFailed,
}

/// RANSAC parameters shared by PnP and calibration.
#[derive(Debug, Clone, Copy)]
pub struct RansacConfig {
    /// Inlier residual bound: pixels for reprojection, meters for 3D.
    pub threshold: f64,
    pub max_iterations: usize,
    pub min_sample_size: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold: 2.0,
            max_iterations: 200,
            min_sample_size: 4,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), RegError> {
        if self.threshold <= 0.0 {
            return Err(RegError::BadConfig("threshold must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(RegError::BadConfig("max_iterations must be at least 1"));
        }
        if self.min_sample_size < 4 {
            return Err(RegError::BadConfig("min_sample_size must be at least 4"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Closed-form rigid fit (Kabsch / Umeyama without scale)
// ---------------------------------------------------------------------------

/// Least-squares rigid transform mapping `src` onto `dst` with known 1:1
/// pairing: `argmin sum ||T src_i - dst_i||^2`. `det(R) = +1` is enforced by
/// SVD sign correction.
pub fn fit_rigid(src: &[Vec3], dst: &[Vec3]) -> Result<Pose, RegError> {
    if src.len() != dst.len() {
        return Err(RegError::MismatchedLengths(src.len(), dst.len()));
    }
    if src.len() < 3 {
        return Err(RegError::TooFewPoints {
            need: 3,
            got: src.len(),
        });
    }
    let n = src.len() as f64;
    let mu_s = src.iter().sum::<Vec3>() / n;
    let mu_d = dst.iter().sum::<Vec3>() / n;

    let mut h = Mat3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d - mu_d) * (s - mu_s).transpose();
    }

    // Collinear sources leave a rotation degree of freedom unconstrained.
    let mut src_cov = Mat3::zeros();
    for s in src {
        let c = s - mu_s;
        src_cov += c * c.transpose();
    }
    let eig = SymmetricEigen::new(src_cov);
    let mut evals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    evals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if evals[1] <= 1e-12 * evals[0].max(1e-30) {
        return Err(RegError::DegenerateConfiguration);
    }

    let svd = h.svd(true, true);
    let u = svd.u.ok_or(RegError::SvdFailed)?;
    let v_t = svd.v_t.ok_or(RegError::SvdFailed)?;
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u_fix = u;
        u_fix.column_mut(2).neg_mut();
        r = u_fix * v_t;
    }
    let t = mu_d - r * mu_s;
    Pose::orthonormalize(r, t).map_err(|_| RegError::SvdFailed)
}

// ---------------------------------------------------------------------------
// k-d tree nearest neighbor
// ---------------------------------------------------------------------------

/// Point count below which exact linear search beats the tree.
const KDTREE_MIN_POINTS: usize = 64;

struct KdNode {
    point: Vec3,
    index: usize,
    axis: usize,
    left: Option<Box<KdNode>>,
    right: Option<Box<KdNode>>,
}

/// Static 3D nearest-neighbor index over a point list.
pub struct KdTree3 {
    root: Option<Box<KdNode>>,
    points: Vec<Vec3>,
}

impl KdTree3 {
    pub fn build(points: &[Vec3]) -> Self {
        let mut items: Vec<(Vec3, usize)> = points.iter().copied().zip(0..points.len()).collect();
        let root = if points.len() >= KDTREE_MIN_POINTS {
            Self::build_node(&mut items, 0)
        } else {
            None
        };
        Self {
            root,
            points: points.to_vec(),
        }
    }

    fn build_node(items: &mut [(Vec3, usize)], depth: usize) -> Option<Box<KdNode>> {
        if items.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| a.0[axis].partial_cmp(&b.0[axis]).unwrap());
        let (point, index) = items[mid];
        let (left, rest) = items.split_at_mut(mid);
        let right = &mut rest[1..];
        Some(Box::new(KdNode {
            point,
            index,
            axis,
            left: Self::build_node(left, depth + 1),
            right: Self::build_node(right, depth + 1),
        }))
    }

    /// Index and squared distance of the nearest stored point.
    pub fn nearest(&self, query: &Vec3) -> (usize, f64) {
        match &self.root {
            Some(root) => {
                let mut best = (root.index, f64::INFINITY);
                Self::search(root, query, &mut best);
                best
            }
            None => {
                let mut best = (0, f64::INFINITY);
                for (i, p) in self.points.iter().enumerate() {
                    let d = (p - query).norm_squared();
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                best
            }
        }
    }

    fn search(node: &KdNode, query: &Vec3, best: &mut (usize, f64)) {
        let d = (node.point - query).norm_squared();
        if d < best.1 {
            *best = (node.index, d);
        }
        let delta = query[node.axis] - node.point[node.axis];
        let (near, far) = if delta < 0.0 {
            (&node.left, &node.right)
        } else {
            (&node.right, &node.left)
        };
        if let Some(n) = near {
            Self::search(n, query, best);
        }
        if delta * delta < best.1 {
            if let Some(f) = far {
                Self::search(f, query, best);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// ICP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Convergence tolerance on the RMS residual change, meters.
    pub tolerance: f64,
    /// Fraction of worst pairs dropped per iteration; 0 disables trimming.
    pub trim_fraction: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-8,
            trim_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IcpResult {
    pub pose: Pose,
    /// Root-mean-square point distance under the final association.
    pub residual: f64,
    pub iterations: usize,
}

/// Iterative closest point: alternates nearest-neighbor association against
/// `dst` with the closed-form fit, starting from `init`.
pub fn icp(src: &[Vec3], dst: &[Vec3], init: &Pose, cfg: &IcpConfig) -> Result<IcpResult, RegError> {
    if src.is_empty() || dst.is_empty() {
        return Err(RegError::TooFewPoints {
            need: 3,
            got: src.len().min(dst.len()),
        });
    }
    let tree = KdTree3::build(dst);
    let mut pose = *init;
    let mut prev_rms = f64::INFINITY;
    let mut result_rms = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let transformed: Vec<Vec3> = src.iter().map(|p| pose.apply(p)).collect();
        let mut pairs: Vec<(usize, usize, f64)> = transformed
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (j, d2) = tree.nearest(p);
                (i, j, d2)
            })
            .collect();
        if cfg.trim_fraction > 0.0 {
            pairs.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
            let keep = ((pairs.len() as f64) * (1.0 - cfg.trim_fraction)).ceil() as usize;
            pairs.truncate(keep.max(3));
        }
        let mut distinct: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(RegError::DegenerateAssociation);
        }

        let fit_src: Vec<Vec3> = pairs.iter().map(|&(i, _, _)| src[i]).collect();
        let fit_dst: Vec<Vec3> = pairs.iter().map(|&(_, j, _)| dst[j]).collect();
        pose = fit_rigid(&fit_src, &fit_dst)?;

        let sq_sum: f64 = fit_src
            .iter()
            .zip(&fit_dst)
            .map(|(s, d)| (pose.apply(s) - d).norm_squared())
            .sum();
        result_rms = (sq_sum / fit_src.len() as f64).sqrt();
        if (prev_rms - result_rms).abs() < cfg.tolerance {
            break;
        }
        prev_rms = result_rms;
    }

    Ok(IcpResult {
        pose,
        residual: result_rms,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// EPnP
// ---------------------------------------------------------------------------

/// EPnP pose from 2D-3D correspondences given camera-normalized image
/// points.
///
/// Control points come from the centroid plus PCA axes; the camera-frame
/// solution is a combination of null-space vectors of the 2n x 12 system,
/// with betas solved for the N = 1, 2, 3 cases and polished by Gauss-Newton
/// on the control-point distance constraints. Near-planar sets fall back to
/// a 3-control-point formulation.
fn epnp(world: &[Vec3], norm_img: &[Pixel]) -> Result<Pose, RegError> {
    let n = world.len();
    if n < 4 {
        return Err(RegError::TooFewPoints { need: 4, got: n });
    }

    let centroid = world.iter().sum::<Vec3>() / n as f64;
    let mut cov = Mat3::zeros();
    for p in world {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    if evals[0] <= 1e-14 {
        return Err(RegError::DegenerateConfiguration);
    }
    let planar = evals[2] < 1e-8 * evals[0];
    let n_control = if planar { 3 } else { 4 };

    let mut control_w = vec![centroid];
    for i in 0..(n_control - 1) {
        let axis: Vec3 = eig.eigenvectors.column(order[i]).into();
        control_w.push(centroid + axis * evals[i].sqrt());
    }

    // Barycentric coordinates of each world point in the control frame.
    let alphas: Vec<Vec<f64>> = if planar {
        let b1 = control_w[1] - control_w[0];
        let b2 = control_w[2] - control_w[0];
        let gram = nalgebra::Matrix2::new(b1.dot(&b1), b1.dot(&b2), b1.dot(&b2), b2.dot(&b2));
        let gram_inv = gram
            .try_inverse()
            .ok_or(RegError::DegenerateConfiguration)?;
        world
            .iter()
            .map(|p| {
                let d = p - control_w[0];
                let rhs = nalgebra::Vector2::new(b1.dot(&d), b2.dot(&d));
                let c = gram_inv * rhs;
                vec![1.0 - c.x - c.y, c.x, c.y]
            })
            .collect()
    } else {
        let basis = Mat3::from_columns(&[
            control_w[1] - control_w[0],
            control_w[2] - control_w[0],
            control_w[3] - control_w[0],
        ]);
        let inv = basis
            .try_inverse()
            .ok_or(RegError::DegenerateConfiguration)?;
        world
            .iter()
            .map(|p| {
                let c = inv * (p - control_w[0]);
                vec![1.0 - c.x - c.y - c.z, c.x, c.y, c.z]
            })
            .collect()
    };

    let cols = 3 * n_control;
    let mut m = DMatrix::<f64>::zeros(2 * n, cols);
    for (i, (a, uv)) in alphas.iter().zip(norm_img).enumerate() {
        for (j, &alpha) in a.iter().enumerate() {
            m[(2 * i, 3 * j)] = alpha;
            m[(2 * i, 3 * j + 2)] = -alpha * uv.x;
            m[(2 * i + 1, 3 * j + 1)] = alpha;
            m[(2 * i + 1, 3 * j + 2)] = -alpha * uv.y;
        }
    }

    // Null-space candidates from the normal matrix: a compact SVD of the
    // 2n x 12 system omits the null space entirely for minimal samples,
    // while the eigenvectors of M^T M always include it.
    let mtm = m.transpose() * &m;
    let eig_m = SymmetricEigen::new(mtm);
    let mut asc: Vec<usize> = (0..cols).collect();
    asc.sort_by(|&a, &b| eig_m.eigenvalues[a].partial_cmp(&eig_m.eigenvalues[b]).unwrap());
    let n_basis = 4.min(cols);
    let basis_vecs: Vec<Vec<Vec3>> = (0..n_basis)
        .map(|k| {
            let col = eig_m.eigenvectors.column(asc[k]);
            (0..n_control)
                .map(|j| Vec3::new(col[3 * j], col[3 * j + 1], col[3 * j + 2]))
                .collect()
        })
        .collect();

    let mut pair_idx = Vec::new();
    for i in 0..n_control {
        for j in (i + 1)..n_control {
            pair_idx.push((i, j));
        }
    }
    let dist_w: Vec<f64> = pair_idx
        .iter()
        .map(|&(i, j)| (control_w[i] - control_w[j]).norm_squared())
        .collect();

    let control_from_betas = |betas: &[f64]| -> Vec<Vec3> {
        (0..n_control)
            .map(|j| {
                let mut c = Vec3::zeros();
                for (k, &b) in betas.iter().enumerate() {
                    c += basis_vecs[k][j] * b;
                }
                c
            })
            .collect()
    };

    // Gauss-Newton on the control-point distance constraints.
    let refine_betas = |mut betas: Vec<f64>| -> Vec<f64> {
        let nb = betas.len();
        for _ in 0..12 {
            let cc = control_from_betas(&betas);
            let mut jac = DMatrix::<f64>::zeros(pair_idx.len(), nb);
            let mut res = DVector::<f64>::zeros(pair_idx.len());
            for (r, (&(i, j), &dw)) in pair_idx.iter().zip(&dist_w).enumerate() {
                let diff = cc[i] - cc[j];
                res[r] = diff.norm_squared() - dw;
                for k in 0..nb {
                    let dk = basis_vecs[k][i] - basis_vecs[k][j];
                    jac[(r, k)] = 2.0 * diff.dot(&dk);
                }
            }
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * res;
            let damped = jtj + DMatrix::identity(nb, nb) * 1e-12;
            match damped.lu().solve(&jtr) {
                Some(step) => {
                    for k in 0..nb {
                        betas[k] -= step[k];
                    }
                }
                None => break,
            }
        }
        betas
    };

    let beta_case1 = || -> Vec<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&(i, j), &dw) in pair_idx.iter().zip(&dist_w) {
            let dv = (basis_vecs[0][i] - basis_vecs[0][j]).norm_squared();
            num += (dv * dw).sqrt();
            den += dv;
        }
        vec![if den > 0.0 { num / den } else { 0.0 }]
    };

    let beta_case2 = || -> Option<Vec<f64>> {
        let mut l = DMatrix::<f64>::zeros(pair_idx.len(), 3);
        let mut rhs = DVector::<f64>::zeros(pair_idx.len());
        for (r, (&(i, j), &dw)) in pair_idx.iter().zip(&dist_w).enumerate() {
            let d1 = basis_vecs[0][i] - basis_vecs[0][j];
            let d2 = basis_vecs[1][i] - basis_vecs[1][j];
            l[(r, 0)] = d1.norm_squared();
            l[(r, 1)] = 2.0 * d1.dot(&d2);
            l[(r, 2)] = d2.norm_squared();
            rhs[r] = dw;
        }
        let sol = l.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let b1 = sol[0].abs().sqrt();
        let b2 = sol[2].abs().sqrt() * if sol[1] < 0.0 { -1.0 } else { 1.0 };
        Some(vec![b1, b2])
    };

    let beta_case3 = || -> Option<Vec<f64>> {
        if pair_idx.len() < 6 {
            return None;
        }
        let mut l = DMatrix::<f64>::zeros(pair_idx.len(), 6);
        let mut rhs = DVector::<f64>::zeros(pair_idx.len());
        for (r, (&(i, j), &dw)) in pair_idx.iter().zip(&dist_w).enumerate() {
            let d1 = basis_vecs[0][i] - basis_vecs[0][j];
            let d2 = basis_vecs[1][i] - basis_vecs[1][j];
            let d3 = basis_vecs[2][i] - basis_vecs[2][j];
            l[(r, 0)] = d1.norm_squared();
            l[(r, 1)] = 2.0 * d1.dot(&d2);
            l[(r, 2)] = d2.norm_squared();
            l[(r, 3)] = 2.0 * d1.dot(&d3);
            l[(r, 4)] = 2.0 * d2.dot(&d3);
            l[(r, 5)] = d3.norm_squared();
            rhs[r] = dw;
        }
        let sol = l.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let b1 = sol[0].abs().sqrt();
        let b2 = sol[2].abs().sqrt() * if sol[1] < 0.0 { -1.0 } else { 1.0 };
        let b3 = sol[5].abs().sqrt() * if sol[3] < 0.0 { -1.0 } else { 1.0 };
        Some(vec![b1, b2, b3])
    };

    let mut candidates: Vec<Vec<f64>> = vec![beta_case1()];
    if let Some(b) = beta_case2() {
        candidates.push(b);
    }
    if !planar {
        if let Some(b) = beta_case3() {
            candidates.push(b);
        }
    }

    let mut best: Option<(f64, Pose)> = None;
    for betas in candidates {
        let betas = refine_betas(betas);
        if betas.iter().any(|b| !b.is_finite()) {
            continue;
        }
        let mut control_c = control_from_betas(&betas);
        // Fix the global sign so points sit in front of the camera.
        let mut depth_sum = 0.0;
        for a in &alphas {
            let mut z = 0.0;
            for (j, &alpha) in a.iter().enumerate() {
                z += alpha * control_c[j].z;
            }
            depth_sum += z;
        }
        if depth_sum < 0.0 {
            for c in &mut control_c {
                *c = -*c;
            }
        }
        let cam_pts: Vec<Vec3> = alphas
            .iter()
            .map(|a| {
                let mut p = Vec3::zeros();
                for (j, &alpha) in a.iter().enumerate() {
                    p += control_c[j] * alpha;
                }
                p
            })
            .collect();
        let Ok(pose) = fit_rigid(world, &cam_pts) else {
            continue;
        };
        // Score by reprojection error in normalized coordinates.
        let mut err = 0.0;
        let mut behind = false;
        for (p, uv) in world.iter().zip(norm_img) {
            let c = pose.apply(p);
            if c.z <= 0.0 {
                behind = true;
                break;
            }
            err += (c.x / c.z - uv.x).powi(2) + (c.y / c.z - uv.y).powi(2);
        }
        if behind || !err.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |(e, _)| err < *e) {
            best = Some((err, pose));
        }
    }

    best.map(|(_, p)| p).ok_or(RegError::DegenerateConfiguration)
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt reprojection refinement
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmTermination {
    GradientBelowTol,
    StepBelowTol,
    IterationCap,
}

#[derive(Debug, Clone, Copy)]
pub struct LmResult {
    pub pose: Pose,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub termination: LmTermination,
}

pub const LM_GRADIENT_TOL: f64 = 1e-10;
pub const LM_STEP_TOL: f64 = 1e-12;
pub const LM_MAX_ITERATIONS: usize = 100;

/// Left-multiplied twist increment `(wx, wy, wz, ux, uy, uz)` applied to a
/// pose: `R+ = exp(w^) R`, `t+ = exp(w^) t + u`.
fn apply_twist(pose: &Pose, delta: &Vector6<f64>) -> Pose {
    let w = Vec3::new(delta[0], delta[1], delta[2]);
    let u = Vec3::new(delta[3], delta[4], delta[5]);
    let incr = if w.norm() > 0.0 {
        Pose::from_axis_angle(&w, w.norm(), u)
    } else {
        Pose::new(Mat3::identity(), u).expect("identity rotation")
    };
    incr.compose(pose)
}

/// Stacked reprojection residuals `observed - projected` and the analytic
/// Jacobian with respect to the twist, evaluated at zero increment.
pub fn reprojection_residual_jacobian(
    pose: &Pose,
    points: &[Vec3],
    pixels: &[Pixel],
    k: &Intrinsics,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = points.len();
    let mut residuals = DVector::zeros(2 * n);
    let mut jac = DMatrix::zeros(2 * n, 6);
    for (i, (x, obs)) in points.iter().zip(pixels).enumerate() {
        let p = pose.apply(x);
        let (px, py, pz) = (p.x, p.y, p.z);
        if pz <= 0.0 {
            residuals[2 * i] = f64::INFINITY;
            residuals[2 * i + 1] = f64::INFINITY;
            continue;
        }
        let u = k.fx * px / pz + k.cx;
        let v = k.fy * py / pz + k.cy;
        residuals[2 * i] = obs.x - u;
        residuals[2 * i + 1] = obs.y - v;

        // d(projection)/d(camera point).
        let du = Vec3::new(k.fx / pz, 0.0, -k.fx * px / (pz * pz));
        let dv = Vec3::new(0.0, k.fy / pz, -k.fy * py / (pz * pz));
        // d(camera point)/d(twist): rotation block -[p]x, translation block I.
        let cols: [Vec3; 6] = [
            Vec3::new(0.0, -pz, py),
            Vec3::new(pz, 0.0, -px),
            Vec3::new(-py, px, 0.0),
            Vec3::x(),
            Vec3::y(),
            Vec3::z(),
        ];
        for (c, col) in cols.iter().enumerate() {
            // residual = observed - projected carries a minus sign.
            jac[(2 * i, c)] = -du.dot(col);
            jac[(2 * i + 1, c)] = -dv.dot(col);
        }
    }
    (residuals, jac)
}

/// Minimizes total squared reprojection error over the 6-parameter twist
/// with multiplicative damping adaptation; the cost of accepted steps never
/// increases.
pub fn lm_refine_reprojection(
    init: &Pose,
    points: &[Vec3],
    pixels: &[Pixel],
    k: &Intrinsics,
) -> Result<LmResult, RegError> {
    if points.len() != pixels.len() {
        return Err(RegError::MismatchedLengths(points.len(), pixels.len()));
    }
    if points.len() < 4 {
        return Err(RegError::TooFewPoints {
            need: 4,
            got: points.len(),
        });
    }

    let mut pose = *init;
    let (res0, jac0) = reprojection_residual_jacobian(&pose, points, pixels, k);
    let mut cost = res0.norm_squared();
    if !cost.is_finite() {
        return Err(RegError::InvalidStart);
    }
    let initial_cost = cost;
    let mut residuals = res0;
    let mut jac = jac0;
    let mut lambda = 1e-3;
    let mut accepted_steps = 0;
    let mut termination = LmTermination::IterationCap;
    let mut iterations = 0;

    'outer: while iterations < LM_MAX_ITERATIONS {
        iterations += 1;
        let jtj_dyn = jac.transpose() * &jac;
        let g_dyn = jac.transpose() * &residuals;
        let mut jtj = Matrix6::<f64>::zeros();
        let mut gradient = Vector6::<f64>::zeros();
        for r in 0..6 {
            gradient[r] = g_dyn[r];
            for c in 0..6 {
                jtj[(r, c)] = jtj_dyn[(r, c)];
            }
        }
        if gradient.amax() < LM_GRADIENT_TOL {
            termination = LmTermination::GradientBelowTol;
            break;
        }

        let mut stepped = false;
        for _ in 0..32 {
            let damped = jtj + Matrix6::identity() * lambda;
            let Some(delta) = damped.lu().solve(&(-gradient)) else {
                lambda *= 10.0;
                continue;
            };
            if delta.norm() < LM_STEP_TOL {
                termination = LmTermination::StepBelowTol;
                break 'outer;
            }
            let candidate = apply_twist(&pose, &delta);
            let (new_res, new_jac) = reprojection_residual_jacobian(&candidate, points, pixels, k);
            let new_cost = new_res.norm_squared();
            if new_cost.is_finite() && new_cost < cost {
                pose = candidate;
                cost = new_cost;
                residuals = new_res;
                jac = new_jac;
                lambda = (lambda / 3.0).max(1e-12);
                accepted_steps += 1;
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            termination = LmTermination::StepBelowTol;
            break;
        }
    }

    Ok(LmResult {
        pose,
        initial_cost,
        final_cost: cost,
        iterations,
        accepted_steps,
        termination,
    })
}

// ---------------------------------------------------------------------------
// PnP: EPnP hypotheses in a RANSAC loop with LM refinement
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PnpResult {
    pub pose: Pose,
    pub inliers: Vec<bool>,
    pub hypotheses: usize,
}

fn normalize_pixels(image: &[Pixel], k: &Intrinsics) -> Vec<Pixel> {
    image
        .iter()
        .map(|p| Pixel::new((p.x - k.cx) / k.fx, (p.y - k.cy) / k.fy))
        .collect()
}

/// Pixel reprojection error; infinite behind the camera.
pub fn reprojection_error(pose: &Pose, point: &Vec3, pixel: &Pixel, k: &Intrinsics) -> f64 {
    let c = pose.apply(point);
    if c.z <= 0.0 {
        return f64::INFINITY;
    }
    let u = k.fx * c.x / c.z + k.cx;
    let v = k.fy * c.y / c.z + k.cy;
    ((u - pixel.x).powi(2) + (v - pixel.y).powi(2)).sqrt()
}

/// All k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break true;
            }
        };
        if !advanced {
            return out;
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn count_combinations(n: usize, k: usize) -> usize {
    let mut c = 1usize;
    for i in 0..k {
        c = c.saturating_mul(n - i) / (i + 1);
    }
    c
}

/// Robust camera pose from 2D-3D correspondences: EPnP on minimal samples
/// inside RANSAC (exhaustive over all minimal subsets when that is cheaper
/// than `max_iterations` random draws), each hypothesis polished on its own
/// sample, scored by the reprojection threshold (strict `<`), and the best
/// inlier set refined with full LM. Ties in inlier count go to the lower
/// total inlier residual, then to the earlier hypothesis.
pub fn pnp(
    model_points: &[Vec3],
    image_points: &[Pixel],
    k: &Intrinsics,
    cfg: &RansacConfig,
) -> Result<PnpResult, RegError> {
    cfg.validate()?;
    let n = model_points.len();
    if n < 4 || image_points.len() != n {
        return Err(RegError::TooFewPoints {
            need: 4,
            got: n.min(image_points.len()),
        });
    }
    let sample_size = cfg.min_sample_size.min(n);
    let norm = normalize_pixels(image_points, k);

    let samples: Vec<Vec<usize>> = if count_combinations(n, sample_size) <= cfg.max_iterations {
        combinations(n, sample_size)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let indices: Vec<usize> = (0..n).collect();
        (0..cfg.max_iterations)
            .map(|_| {
                indices
                    .choose_multiple(&mut rng, sample_size)
                    .copied()
                    .collect()
            })
            .collect()
    };

    let mut best: Option<(usize, f64, Pose, Vec<bool>)> = None;
    for sample in &samples {
        let sw: Vec<Vec3> = sample.iter().map(|&i| model_points[i]).collect();
        let sn: Vec<Pixel> = sample.iter().map(|&i| norm[i]).collect();
        let Ok(mut hyp) = epnp(&sw, &sn) else {
            continue;
        };
        // Polish the minimal solve on its own sample before scoring.
        let sp: Vec<Pixel> = sample.iter().map(|&i| image_points[i]).collect();
        if let Ok(lm) = lm_refine_reprojection(&hyp, &sw, &sp, k) {
            hyp = lm.pose;
        }

        let mut inliers = vec![false; n];
        let mut count = 0;
        let mut score = 0.0;
        for i in 0..n {
            let e = reprojection_error(&hyp, &model_points[i], &image_points[i], k);
            if e < cfg.threshold {
                inliers[i] = true;
                count += 1;
                score += e;
            }
        }
        let better = match &best {
            None => count >= sample_size,
            Some((bc, bs, _, _)) => count > *bc || (count == *bc && score < *bs),
        };
        if better {
            best = Some((count, score, hyp, inliers));
        }
    }

    let (count, _, pose, inliers) = best.ok_or(RegError::NoConsensus(4))?;
    if count < 4 {
        return Err(RegError::NoConsensus(4));
    }

    let in_pts: Vec<Vec3> = (0..n)
        .filter(|&i| inliers[i])
        .map(|i| model_points[i])
        .collect();
    let in_px: Vec<Pixel> = (0..n)
        .filter(|&i| inliers[i])
        .map(|i| image_points[i])
        .collect();
    let refined = lm_refine_reprojection(&pose, &in_pts, &in_px, k)?;

    Ok(PnpResult {
        pose: refined.pose,
        inliers,
        hypotheses: samples.len(),
    })
}

/// Mean pixel reprojection error over a correspondence set.
pub fn mean_reprojection_error(
    pose: &Pose,
    points: &[Vec3],
    pixels: &[Pixel],
    k: &Intrinsics,
) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points
        .iter()
        .zip(pixels)
        .map(|(p, x)| reprojection_error(pose, p, x, k))
        .sum::<f64>()
        / points.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng as _;
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut impl rand::Rng) -> Pose {
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let axis = if axis.norm() < 1e-6 { Vec3::x() } else { axis };
        Pose::from_axis_angle(
            &axis,
            rng.gen_range(-2.5..2.5),
            Vec3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ),
        )
    }

    fn random_cloud(rng: &mut impl rand::Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                )
            })
            .collect()
    }

    #[test]
    fn fit_rigid_identity_on_equal_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = random_cloud(&mut rng, 20);
        let pose = fit_rigid(&src, &src).unwrap();
        assert!(pose.rotation_angle_to(&Pose::identity()) < 1e-10);
        assert!(pose.translation().norm() < 1e-12);
    }

    #[test]
    fn fit_rigid_recovers_planted_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let src = random_cloud(&mut rng, 30);
            let planted = random_pose(&mut rng);
            let dst: Vec<Vec3> = src.iter().map(|p| planted.apply(p)).collect();
            let fit = fit_rigid(&src, &dst).unwrap();
            let dr = fit.rotation() - planted.rotation();
            assert!(dr.norm() < 1e-9, "rotation error {}", dr.norm());
            assert!(fit.translation_distance_to(&planted) < 1e-9);
        }
    }

    #[test]
    fn fit_rigid_rejects_collinear_and_small_inputs() {
        let line: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            fit_rigid(&line, &line),
            Err(RegError::DegenerateConfiguration)
        ));
        let two = vec![Vec3::zeros(), Vec3::x()];
        assert!(matches!(
            fit_rigid(&two, &two),
            Err(RegError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn fit_rigid_keeps_proper_rotation_on_mirrored_planar_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src: Vec<Vec3> = (0..40)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-1e-4..1e-4),
                )
            })
            .collect();
        let dst: Vec<Vec3> = src.iter().map(|p| Vec3::new(p.x, p.y, -p.z)).collect();
        let fit = fit_rigid(&src, &dst).unwrap();
        assert!((fit.rotation().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rigid_is_left_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let src = random_cloud(&mut rng, 25);
            let base = random_pose(&mut rng);
            let dst: Vec<Vec3> = src.iter().map(|p| base.apply(p)).collect();
            let g = random_pose(&mut rng);
            let moved: Vec<Vec3> = dst.iter().map(|p| g.apply(p)).collect();
            let left = fit_rigid(&src, &moved).unwrap();
            let right = g.compose(&fit_rigid(&src, &dst).unwrap());
            let dr = left.rotation() - right.rotation();
            assert!(dr.norm() < 1e-9);
            assert!(left.translation_distance_to(&right) < 1e-9);
        }
    }

    #[test]
    fn kdtree_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_cloud(&mut rng, 500);
        let tree = KdTree3::build(&pts);
        for _ in 0..200 {
            let q = Vec3::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            );
            let (ti, td) = tree.nearest(&q);
            let (li, ld) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - q).norm_squared()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert_eq!(ti, li);
            assert_relative_eq!(td, ld, epsilon = 1e-15);
        }
    }

    #[test]
    fn icp_fixed_point_on_identical_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = random_cloud(&mut rng, 100);
        let res = icp(&pts, &pts, &Pose::identity(), &IcpConfig::default()).unwrap();
        assert!(res.pose.rotation_angle_to(&Pose::identity()) < 1e-10);
        assert!(res.residual < 1e-12);
        assert!(res.iterations <= 2);
    }

    #[test]
    fn icp_recovers_small_planted_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let src = random_cloud(&mut rng, 500);
        let planted = Pose::from_axis_angle(
            &Vec3::new(0.3, -0.5, 0.8),
            5f64.to_radians(),
            Vec3::new(0.02, -0.01, 0.005),
        );
        let dst: Vec<Vec3> = src.iter().map(|p| planted.apply(p)).collect();
        let res = icp(&src, &dst, &Pose::identity(), &IcpConfig::default()).unwrap();
        assert!(res.pose.rotation_angle_to(&planted) < 1e-6, "rotation off");
        assert!(res.pose.translation_distance_to(&planted) < 1e-6);
    }

    #[test]
    fn trimmed_icp_shrugs_off_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let src = random_cloud(&mut rng, 500);
        let planted = Pose::from_axis_angle(
            &Vec3::new(0.1, 0.9, -0.2),
            4f64.to_radians(),
            Vec3::new(0.015, 0.02, -0.01),
        );
        let mut dst: Vec<Vec3> = src.iter().map(|p| planted.apply(p)).collect();
        for i in 0..50 {
            dst[i * 10] += Vec3::new(
                rng.gen_range(0.3..0.6),
                rng.gen_range(0.3..0.6),
                rng.gen_range(0.3..0.6),
            );
        }
        let cfg = IcpConfig {
            trim_fraction: 0.2,
            ..IcpConfig::default()
        };
        let res = icp(&src, &dst, &Pose::identity(), &cfg).unwrap();
        assert!(res.pose.rotation_angle_to(&planted) < 1e-4);
        assert!(res.pose.translation_distance_to(&planted) < 1e-4);
    }

    #[test]
    fn icp_residual_never_rises_with_more_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = random_cloud(&mut rng, 300);
        let planted = Pose::from_axis_angle(
            &Vec3::new(0.5, 0.5, -0.7),
            8f64.to_radians(),
            Vec3::new(0.03, 0.0, -0.02),
        );
        let dst: Vec<Vec3> = src.iter().map(|p| planted.apply(p)).collect();
        let mut prev = f64::INFINITY;
        for cap in 1..12 {
            let cfg = IcpConfig {
                max_iterations: cap,
                tolerance: 0.0,
                trim_fraction: 0.0,
            };
            let res = icp(&src, &dst, &Pose::identity(), &cfg).unwrap();
            assert!(
                res.residual <= prev + 1e-12,
                "residual rose at cap {cap}: {} > {prev}",
                res.residual
            );
            prev = res.residual;
        }
    }

    fn test_k() -> Intrinsics {
        Intrinsics::new(600.0, 590.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn project_all(pose: &Pose, pts: &[Vec3], k: &Intrinsics) -> Vec<Pixel> {
        pts.iter()
            .map(|p| {
                let c = pose.apply(p);
                Pixel::new(k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy)
            })
            .collect()
    }

    fn visible_pose(rng: &mut impl rand::Rng) -> Pose {
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        Pose::from_axis_angle(
            &(axis + Vec3::new(0.0, 0.0, 1e-3)),
            rng.gen_range(-0.5..0.5),
            Vec3::new(
                rng.gen_range(-0.1..0.1),
                rng.gen_range(-0.1..0.1),
                rng.gen_range(0.8..1.5),
            ),
        )
    }

    #[test]
    fn pnp_recovers_planted_pose_noiselessly() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for trial in 0..20 {
            let pts = random_cloud(&mut rng, 24);
            let planted = visible_pose(&mut rng);
            let px = project_all(&planted, &pts, &k);
            let cfg = RansacConfig {
                seed: trial,
                ..RansacConfig::default()
            };
            let res = pnp(&pts, &px, &k, &cfg).unwrap();
            let worst = pts
                .iter()
                .zip(&px)
                .map(|(p, x)| reprojection_error(&res.pose, p, x, &k))
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-6, "trial {trial}: worst reprojection {worst}");
            assert!(res.inliers.iter().all(|&b| b));
        }
    }

    #[test]
    fn pnp_on_axis_points_recovers_depth() {
        let k = test_k();
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.05, 0.0, 0.0),
            Vec3::new(0.0, 0.05, 0.0),
            Vec3::new(0.05, 0.05, 0.01),
            Vec3::new(-0.05, 0.02, -0.01),
        ];
        let planted = Pose::new(Mat3::identity(), Vec3::new(0.0, 0.0, 1.2)).unwrap();
        let px = project_all(&planted, &pts, &k);
        assert_relative_eq!(px[0].x, k.cx);
        assert_relative_eq!(px[0].y, k.cy);
        let res = pnp(&pts, &px, &k, &RansacConfig::default()).unwrap();
        assert!((res.pose.translation().z - 1.2).abs() < 1e-6);
    }

    #[test]
    fn pnp_identifies_planted_outliers() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_cloud(&mut rng, 40);
        let planted = visible_pose(&mut rng);
        let mut px = project_all(&planted, &pts, &k);
        let mut expected = vec![true; pts.len()];
        for i in 0..12 {
            let idx = i * 3;
            px[idx].x += rng.gen_range(20.0..120.0);
            px[idx].y -= rng.gen_range(20.0..120.0);
            expected[idx] = false;
        }
        let cfg = RansacConfig {
            threshold: 2.0,
            max_iterations: 300,
            min_sample_size: 4,
            seed: 99,
        };
        let res = pnp(&pts, &px, &k, &cfg).unwrap();
        assert_eq!(res.inliers, expected);
        assert!(res.pose.rotation_angle_to(&planted) < 1e-3);
        assert!(res.pose.translation_distance_to(&planted) < 1e-3);
    }

    #[test]
    fn pnp_exhaustive_is_permutation_invariant() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = random_cloud(&mut rng, 7);
        let planted = visible_pose(&mut rng);
        let px = project_all(&planted, &pts, &k);
        let cfg = RansacConfig {
            max_iterations: 100, // C(7,4) = 35 -> exhaustive enumeration
            ..RansacConfig::default()
        };
        let a = pnp(&pts, &px, &k, &cfg).unwrap();

        let perm: Vec<usize> = vec![3, 0, 6, 1, 5, 2, 4];
        let pts_p: Vec<Vec3> = perm.iter().map(|&i| pts[i]).collect();
        let px_p: Vec<Pixel> = perm.iter().map(|&i| px[i]).collect();
        let b = pnp(&pts_p, &px_p, &k, &cfg).unwrap();
        assert!(a.pose.rotation_angle_to(&b.pose) < 1e-9);
        assert!(a.pose.translation_distance_to(&b.pose) < 1e-9);
    }

    #[test]
    fn pnp_reports_missing_consensus() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts = random_cloud(&mut rng, 8);
        let px: Vec<Pixel> = (0..8)
            .map(|_| Pixel::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let cfg = RansacConfig {
            threshold: 0.25,
            max_iterations: 40,
            min_sample_size: 4,
            seed: 5,
        };
        match pnp(&pts, &px, &k, &cfg) {
            Err(RegError::NoConsensus(_)) => {}
            Ok(res) => {
                // Random geometry can admit the 4-point sample itself plus a
                // chance alignment; anything larger means scoring is broken.
                assert!(res.inliers.iter().filter(|&&b| b).count() <= 5);
            }
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lm_stays_at_planted_optimum() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pts = random_cloud(&mut rng, 12);
        let planted = visible_pose(&mut rng);
        let px = project_all(&planted, &pts, &k);
        let res = lm_refine_reprojection(&planted, &pts, &px, &k).unwrap();
        assert_eq!(res.accepted_steps, 0);
        assert_eq!(res.termination, LmTermination::GradientBelowTol);
        assert_eq!(res.pose, planted);
    }

    #[test]
    fn lm_converges_from_perturbed_start() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let pts = random_cloud(&mut rng, 16);
            let planted = visible_pose(&mut rng);
            let px = project_all(&planted, &pts, &k);
            let nudge = Pose::from_axis_angle(
                &Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0),
                3f64.to_radians(),
                Vec3::new(0.02, -0.015, 0.01),
            );
            let init = nudge.compose(&planted);
            let res = lm_refine_reprojection(&init, &pts, &px, &k).unwrap();
            let dr = (res.pose.rotation() - planted.rotation()).norm();
            assert!(dr < 1e-8, "rotation Frobenius residual {dr}");
            assert!(res.pose.translation_distance_to(&planted) < 1e-8);
            assert!(res.final_cost <= res.initial_cost);
        }
    }

    #[test]
    fn analytic_jacobian_matches_central_differences() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..25 {
            let pts = random_cloud(&mut rng, 6);
            let pose = visible_pose(&mut rng);
            let px = project_all(&visible_pose(&mut rng), &pts, &k);
            let (_, jac) = reprojection_residual_jacobian(&pose, &pts, &px, &k);

            let h = 1e-6;
            for c in 0..6 {
                let mut step = Vector6::<f64>::zeros();
                step[c] = h;
                let plus = reprojection_residual_jacobian(&apply_twist(&pose, &step), &pts, &px, &k).0;
                step[c] = -h;
                let minus =
                    reprojection_residual_jacobian(&apply_twist(&pose, &step), &pts, &px, &k).0;
                let fd = (plus - minus) / (2.0 * h);
                for r in 0..fd.len() {
                    let a = jac[(r, c)];
                    let d = fd[r];
                    let scale = a.abs().max(d.abs()).max(1.0);
                    assert!(
                        (a - d).abs() / scale < 1e-5,
                        "J[{r},{c}] analytic {a} vs fd {d}"
                    );
                }
            }
        }
    }

    #[test]
    fn lm_cost_is_monotone_over_accepted_steps() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let pts = random_cloud(&mut rng, 10);
            let planted = visible_pose(&mut rng);
            let px = project_all(&planted, &pts, &k);
            let start = visible_pose(&mut rng);
            if let Ok(res) = lm_refine_reprojection(&start, &pts, &px, &k) {
                assert!(res.final_cost <= res.initial_cost + 1e-12);
                if res.termination == LmTermination::GradientBelowTol {
                    let (r, j) = reprojection_residual_jacobian(&res.pose, &pts, &px, &k);
                    let g = j.transpose() * r;
                    assert!(g.amax() < LM_GRADIENT_TOL);
                }
            }
        }
    }

    #[test]
    fn pnp_handles_coplanar_points() {
        let k = test_k();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        // Checkerboard-like planar grid.
        let pts: Vec<Vec3> = (0..6)
            .flat_map(|i| (0..5).map(move |j| Vec3::new(i as f64 * 0.04, j as f64 * 0.04, 0.0)))
            .collect();
        let planted = visible_pose(&mut rng);
        let px = project_all(&planted, &pts, &k);
        let res = pnp(&pts, &px, &k, &RansacConfig::default()).unwrap();
        assert!(res.pose.rotation_angle_to(&planted) < 1e-4);
        assert!(res.pose.translation_distance_to(&planted) < 1e-4);
    }
}
