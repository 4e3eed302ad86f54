//! Quick wall-clock breakdown of one recon tracker step.

use evpose_bench::step_scenario;
use evpose_core::event::TimeWindow;
use evpose_core::recon::{estimate_motion, reconstruct_depth, ReconConfig};
use evpose_core::tracker::step;
use std::time::Instant;

fn main() {
    let scenario = step_scenario();
    let cfg = ReconConfig::default();

    // Stage timings on the cropped ROI.
    let roi = evpose_core::compute_roi(
        &scenario.k,
        &scenario.state.current_pose,
        scenario.mesh.diameter(),
        1.5,
    )
    .unwrap();
    let (rx, ry, rw, rh) = roi.rect(scenario.k.width, scenario.k.height);
    println!("roi {rw}x{rh} at ({rx},{ry})");

    let window = TimeWindow::new(0, 8333).unwrap();
    let events: Vec<evpose_core::event::Event> = scenario
        .seq
        .events
        .window(0, 8333)
        .unwrap()
        .events()
        .iter()
        .filter(|e| {
            (e.x as usize) >= rx
                && (e.x as usize) < rx + rw
                && (e.y as usize) >= ry
                && (e.y as usize) < ry + rh
        })
        .map(|e| evpose_core::event::Event::new(e.x - rx as u16, e.y - ry as u16, e.t_us, e.p))
        .collect();
    println!("roi events: {}", events.len());
    let roi_stream =
        evpose_core::EventStream::from_sorted(events, rw as u16, rh as u16).unwrap();

    for _ in 0..3 {
        let t = Instant::now();
        let f = estimate_motion(&roi_stream, window, &cfg);
        println!("estimate_motion: {:?} (valid {})", t.elapsed(), f.valid_count());
    }

    let d0 = scenario.seq.depth_frames[0].crop(rx, ry, rw, rh);
    for _ in 0..3 {
        let t = Instant::now();
        let r = reconstruct_depth(&d0, &roi_stream, window, TimeWindow::new(6000, 8333).unwrap(), &cfg).unwrap();
        println!("reconstruct_depth: {:?} (depth valid {})", t.elapsed(), r.depth.valid_count());
    }

    for _ in 0..3 {
        let mut state = scenario.state.clone();
        let t = Instant::now();
        let _ = step(
            &mut state,
            &scenario.seq.events,
            8333,
            None,
            &scenario.k,
            &scenario.mesh,
            &scenario.cfg,
        )
        .unwrap();
        println!("full step: {:?}", t.elapsed());
    }
}
