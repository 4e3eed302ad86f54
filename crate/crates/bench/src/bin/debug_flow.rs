//! Compare the estimated motion field against ground-truth projections
//! over one depth interval.

use evpose_core::event::TimeWindow;
use evpose_core::geometry::{Intrinsics, Mat3, Pose, TimingModel, Vec3};
use evpose_core::mesh::shapes;
use evpose_core::recon::{estimate_motion, ReconConfig};
use evpose_core::simulator::{generate_sequence, screw_trajectory, SensorConfig};

fn main() {
    let mesh = shapes::textured_cuboid(Vec3::new(0.14, 0.14, 0.14), 10, 0.004, 42);
    let k = Intrinsics::new(600.0, 600.0, 319.5, 239.5, 640, 480).unwrap();
    let distance = 1.4;
    let tilt = Pose::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 0.65, Vec3::zeros());
    let init = Pose::new(*tilt.rotation(), Vec3::new(0.35, 0.0, distance)).unwrap();
    let timing = TimingModel::new(33_333, 4, 0).unwrap();
    let sensor = SensorConfig::new(k, 0.16, 0.34, timing, 11).unwrap();
    let traj = screw_trajectory(
        init, Vec3::z(), 90f64.to_radians(),
        Vec3::new(0.0, 0.0, distance), Vec3::z(), 1.0, 200_000, 2_000,
    );
    let seq = generate_sequence(&mesh, &traj, &sensor, 960.0).unwrap();
    let cfg = ReconConfig::default();

    for (t0, t1) in [(0i64, 33_333i64), (0, 8_333), (33_333, 66_666)] {
        let p0 = traj.sample(t0).unwrap();
        let p1 = traj.sample(t1).unwrap();
        // ROI around the object at t0 (like the tracker).
        let roi = evpose_core::compute_roi(&k, &p0, mesh.diameter(), 1.5).unwrap();
        let (rx, ry, rw, rh) = roi.rect(k.width, k.height);
        let events: Vec<evpose_core::event::Event> = seq.events.window(t0, t1).unwrap()
            .events().iter()
            .filter(|e| (e.x as usize) >= rx && (e.x as usize) < rx + rw && (e.y as usize) >= ry && (e.y as usize) < ry + rh)
            .map(|e| evpose_core::event::Event::new(e.x - rx as u16, e.y - ry as u16, e.t_us, e.p))
            .collect();
        let stream = evpose_core::EventStream::from_sorted(events, rw as u16, rh as u16).unwrap();
        let field = estimate_motion(&stream, TimeWindow::new(t0, t1).unwrap(), &cfg);

        // Ground-truth displacements of surface samples (visible front side).
        let samples = mesh.sample_surface(2000, 1).unwrap();
        let mut errs = Vec::new();
        let mut gt_mags = Vec::new();
        let mut sum_err = [0.0f64; 2];
        let mut cross_acc = 0.0; // rotational residual estimate
        let mut r2_acc = 0.0;
        let (mut cx_acc, mut cy_acc, mut n_acc) = (0.0, 0.0, 0.0);
        let mut pts = Vec::new();
        let mut gt_flows: Vec<[f64; 2]> = Vec::new();
        for s in &samples {
            let c0 = p0.apply(s);
            let c1 = p1.apply(s);
            // crude visibility: only take points on the near side
            if c0.z > distance { continue; }
            let (u0, v0) = k.project(&c0).unwrap();
            let (u1, v1) = k.project(&c1).unwrap();
            let l = [u0 - rx as f64, v0 - ry as f64];
            if let Some([fx, fy]) = field.sample(l[0], l[1]) {
                let gt = [u1 - u0, v1 - v0];
                let err = [fx - gt[0], fy - gt[1]];
                errs.push((err[0]*err[0] + err[1]*err[1]).sqrt());
                gt_mags.push((gt[0]*gt[0]+gt[1]*gt[1]).sqrt());
                sum_err[0] += err[0]; sum_err[1] += err[1];
                pts.push((l[0], l[1], err[0], err[1]));
                gt_flows.push([gt[0], gt[1]]);
                cx_acc += l[0]; cy_acc += l[1]; n_acc += 1.0;
            }
        }
        if n_acc == 0.0 { println!("no valid flow"); continue; }
        let (cx, cy) = (cx_acc / n_acc, cy_acc / n_acc);
        for &(x, y, ex, ey) in &pts {
            let (dx, dy) = (x - cx, y - cy);
            cross_acc += dx * ey - dy * ex;
            r2_acc += dx * dx + dy * dy;
        }
        // Affine fits of est and gt flow over probe points.
        let fit_affine = |take_est: bool| -> [f64; 6] {
            let mut m = [[0.0f64; 3]; 3];
            let mut rx = [0.0f64; 3];
            let mut ry = [0.0f64; 3];
            for (j, &(x, y, ex, ey)) in pts.iter().enumerate() {
                let (gx, gy) = (gt_flows[j][0], gt_flows[j][1]);
                let (fx, fy) = if take_est { (ex + gx, ey + gy) } else { (gx, gy) };
                let basis = [1.0, x - cx, y - cy];
                for r in 0..3 {
                    for c in 0..3 { m[r][c] += basis[r] * basis[c]; }
                    rx[r] += basis[r] * fx;
                    ry[r] += basis[r] * fy;
                }
            }
            let mat = nalgebra::Matrix3::new(m[0][0],m[0][1],m[0][2],m[1][0],m[1][1],m[1][2],m[2][0],m[2][1],m[2][2]);
            let inv = mat.try_inverse().unwrap();
            let a = inv * nalgebra::Vector3::new(rx[0], rx[1], rx[2]);
            let b = inv * nalgebra::Vector3::new(ry[0], ry[1], ry[2]);
            [a.x, a.y, a.z, b.x, b.y, b.z]
        };
        let ea = fit_affine(true);
        let ga = fit_affine(false);
        println!("  est affine t=({:+.2},{:+.2}) J=[{:+.4} {:+.4}; {:+.4} {:+.4}] curl {:+.3}deg",
            ea[0], ea[3], ea[1], ea[2], ea[4], ea[5], (0.5*(ea[4]-ea[2])).to_degrees());
        println!("  gt  affine t=({:+.2},{:+.2}) J=[{:+.4} {:+.4}; {:+.4} {:+.4}] curl {:+.3}deg",
            ga[0], ga[3], ga[1], ga[2], ga[4], ga[5], (0.5*(ga[4]-ga[2])).to_degrees());
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean_gt = gt_mags.iter().sum::<f64>() / gt_mags.len() as f64;
        println!(
            "window [{t0},{t1}]: n={} gt_mag~{:.2}px | mean err vec ({:+.3},{:+.3})px, median |err| {:.3}px, p90 {:.3}px | rot residual {:.4} deg",
            pts.len(), mean_gt,
            sum_err[0]/n_acc, sum_err[1]/n_acc,
            errs[errs.len()/2], errs[errs.len()*9/10],
            (cross_acc / r2_acc).to_degrees(),
        );
    }
}
