//! Decompose per-step fitted rotations into in-plane and tilt components.

use evpose_core::event::TimeWindow;
use evpose_core::geometry::{Intrinsics, Mat3, Pose, TimingModel, Vec3};
use evpose_core::mesh::shapes;
use evpose_core::simulator::{generate_sequence, screw_trajectory, SensorConfig};
use evpose_core::tracker::{step, TrackerConfig, TrackerMode, TrackerState};

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
        Vec3::new(0.0, 0.0, distance), Vec3::z(), 1.0, 1_000_000, 2_000,
    );
    let seq = generate_sequence(&mesh, &traj, &sensor, 960.0).unwrap();
    let cfg = TrackerConfig::default();
    let mut state = TrackerState::new(&mesh, init, 0, seq.depth_frames[0].clone(), &k, TrackerMode::ReconDepth, &cfg).unwrap();

    let mut prev_pose = init;
    for frame in 0..8i64 {
        for sub in 0..4u32 {
            if frame == 0 && sub == 0 { continue; }
            let t = timing.timestamp(frame, sub).unwrap();
            let sensor_d = if sub == 0 { Some(&seq.depth_frames[frame as usize]) } else { None };
            let gt_now = traj.sample(t).unwrap();
            let before = state.current_pose.rotation_angle_to(&gt_now).to_degrees();
            let entry = step(&mut state, &seq.events, t, sensor_d, &k, &mesh, &cfg).unwrap();
            let _ = prev_pose;
            let err_r = entry.pose.rotation().transpose() * gt_now.rotation();
            let (eaxis, eang) = nalgebra_axis(err_r);
            let terr = entry.pose.translation() - gt_now.translation();
            println!(
                "t={:>7} {:?} pairs={} err_axis=({:+.2},{:+.2},{:+.2}) rot_err {:.2} -> {:.2} deg terr=({:+.1},{:+.1},{:+.1})mm",
                t, entry.kind, entry.inliers, eaxis.x, eaxis.y, eaxis.z,
                before, eang.to_degrees(), terr.x*1e3, terr.y*1e3, terr.z*1e3,
            );
            prev_pose = entry.pose;
        }
    }
}

fn nalgebra_axis(r: Mat3) -> (Vec3, f64) {
    let q = nalgebra::UnitQuaternion::from_matrix(&r);
    match q.axis_angle() {
        Some((axis, angle)) => (axis.into_inner(), angle),
        None => (Vec3::z(), 0.0),
    }
}
