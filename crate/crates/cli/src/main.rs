//! Command-line surface for the event-driven 6D pose tracking toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod config;
mod svg;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use config::Config;
use evpose_core::event::TimeWindow;
use evpose_core::geometry::{Intrinsics, Pose, TimingModel, Vec3};
use evpose_core::grid::DepthMap;
use evpose_core::io;
use evpose_core::mesh::{shapes, TriMesh};
use evpose_core::metrics::{evaluate_poses, per_frame_errors, FpsStats, SymmetrySet};
use evpose_core::recon::reconstruct_depth;
use evpose_core::registration::RansacConfig;
use evpose_core::simulator::{generate_sequence, screw_trajectory, SensorConfig};
use evpose_core::tracker::{track_sequence, TrackerMode, UpdateKind};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "evpose",
    about = "Event-driven 6D object pose tracking toolkit",
    version
)]
struct Cli {
    /// Seed for every random stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Parallelism budget for data-parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// JSON file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence: events, depth frames, poses, manifest.
    Simulate(SimulateArgs),
    /// Encode an event file window into a voxel grid dump.
    Voxelize(VoxelizeArgs),
    /// Reconstruct depth at a subdivision timestamp and dump debug files.
    Reconstruct(ReconstructArgs),
    /// Track an object through a sequence.
    Track(TrackArgs),
    /// Hand-eye calibration from 2D-3D observations.
    Calibrate(CalibrateArgs),
    /// Compare a tracked trajectory against ground truth.
    Evaluate(EvaluateArgs),
    /// Render recall and error-over-time charts from per-frame errors.
    Plot(PlotArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Mesh OBJ; omit for the built-in textured cuboid.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Sequence length in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 30.0)]
    depth_fps: f64,
    #[arg(long, default_value_t = 4)]
    subdivisions: u32,
    /// Intensity render rate driving event synthesis.
    #[arg(long, default_value_t = 960.0)]
    intensity_fps: f64,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
    #[arg(long, default_value_t = 600.0)]
    fx: f64,
    #[arg(long, default_value_t = 600.0)]
    fy: f64,
    /// Object distance from the camera in meters.
    #[arg(long, default_value_t = 1.5)]
    distance: f64,
    /// Tangential speed of the screw orbit, m/s.
    #[arg(long, default_value_t = 1.0)]
    tangential: f64,
    /// Spin rate about the object axis, deg/s.
    #[arg(long, default_value_t = 90.0)]
    spin_deg: f64,
    /// Orbit radius in meters.
    #[arg(long, default_value_t = 0.35)]
    orbit_radius: f64,
    /// Object name recorded in the manifest.
    #[arg(long, default_value = "textured-cuboid")]
    object: String,
}

#[derive(clap::Args)]
struct VoxelizeArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long, default_value_t = evpose_core::event::DEFAULT_VOXEL_BINS)]
    bins: usize,
    /// Window start in microseconds; defaults to the first event.
    #[arg(long)]
    t0_us: Option<i64>,
    /// Window end (exclusive); defaults to the last event + 1.
    #[arg(long)]
    t1_us: Option<i64>,
    /// Separate positive and negative polarities into two files.
    #[arg(long)]
    per_polarity: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ReconstructArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Depth frame index supplying D_0.
    #[arg(long)]
    frame: usize,
    /// Subdivision index within the following interval (1..N).
    #[arg(long)]
    sub: u32,
    #[arg(long)]
    out_depth: PathBuf,
    #[arg(long)]
    out_flow: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TrackArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    depth_dir: PathBuf,
    /// Pose file whose first line initializes the tracker.
    #[arg(long)]
    init_pose: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    /// pnp, recon, or hold (ablation).
    #[arg(long, default_value = "recon")]
    mode: String,
    #[arg(long, default_value_t = 4)]
    subdivisions: u32,
    #[arg(long)]
    depth_period_us: i64,
    #[arg(long, default_value_t = 0)]
    epoch_us: i64,
    #[arg(long)]
    out: PathBuf,
    /// Optional wall-clock statistics JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CalibrateArgs {
    /// Observation JSON: [{t_us, corners: [{id, P: [x,y,z], x: [u,v]}]}].
    #[arg(long)]
    observations: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    /// RANSAC inlier threshold in pixels.
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
    /// Print per-frame residual statistics.
    #[arg(long)]
    report: bool,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Tracking result CSV.
    #[arg(long)]
    result: PathBuf,
    /// Ground-truth pose file.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    /// Optional symmetry JSON (array of 12-field poses).
    #[arg(long)]
    symmetries: Option<PathBuf>,
    /// Optional tracking stats JSON produced by `track --stats`.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-frame error CSV.
    #[arg(long)]
    frame_errors: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Per-frame error CSV from `evaluate --frame-errors`.
    #[arg(long)]
    frame_errors: PathBuf,
    /// Object diameter in meters (threshold axis scale).
    #[arg(long)]
    diameter: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("warning: thread pool already initialized: {e}");
        }
    }

    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if cli.dump_config {
        println!("{}", serde_json::to_string_pretty(&config).unwrap());
        return ExitCode::SUCCESS;
    }

    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(1);
    };

    let outcome = match command {
        Command::Simulate(args) => cmd_simulate(&args, &config, cli.seed),
        Command::Voxelize(args) => cmd_voxelize(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args, &config),
        Command::Track(args) => cmd_track(&args, &config, cli.seed),
        Command::Calibrate(args) => cmd_calibrate(&args, cli.seed),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Plot(args) => cmd_plot(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Bumpy cuboid with shading texture; the bundled demo object.
fn builtin_mesh(seed: u64) -> TriMesh {
    shapes::textured_cuboid(Vec3::new(0.14, 0.14, 0.14), 10, 0.004, seed)
}

fn cmd_simulate(args: &SimulateArgs, config: &Config, seed: u64) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let depth_dir = args.out.join("depth");
    std::fs::create_dir_all(&depth_dir)?;

    let mesh = match &args.mesh {
        Some(path) => io::read_mesh_obj(path).context("reading mesh")?,
        None => builtin_mesh(seed),
    };
    let cx = (args.width as f64 - 1.0) / 2.0;
    let cy = (args.height as f64 - 1.0) / 2.0;
    let k = Intrinsics::new(args.fx, args.fy, cx, cy, args.width, args.height)
        .map_err(|e| anyhow::anyhow!("intrinsics: {e}"))?;
    let period_us = (1e6 / args.depth_fps).round() as i64;
    let timing = TimingModel::new(period_us, args.subdivisions, 0)
        .map_err(|e| anyhow::anyhow!("timing: {e}"))?;
    let sensor = SensorConfig::new(
        k,
        config.simulate.contrast_low,
        config.simulate.contrast_high,
        timing,
        seed,
    )
    .map_err(|e| anyhow::anyhow!("sensor config: {e}"))?;

    let duration_us = (args.duration_s * 1e6).round() as i64;
    let start = Pose::new(
        evpose_core::geometry::Mat3::identity(),
        Vec3::new(args.orbit_radius, 0.0, args.distance),
    )
    .unwrap();
    let traj = screw_trajectory(
        start,
        Vec3::z(),
        args.spin_deg.to_radians(),
        Vec3::new(0.0, 0.0, args.distance),
        Vec3::z(),
        args.tangential,
        duration_us,
        2_000,
    );

    log::info!("rendering and synthesizing events...");
    let seq = generate_sequence(&mesh, &traj, &sensor, args.intensity_fps)
        .map_err(|e| anyhow::anyhow!("simulation: {e}"))?;

    io::write_events(&args.out.join("events.evt"), &seq.events)?;
    for (i, frame) in seq.depth_frames.iter().enumerate() {
        io::write_depth(
            &depth_dir.join(io::SequenceManifest::depth_frame_name(i)),
            frame,
        )?;
    }
    io::write_poses(&args.out.join("poses.txt"), &seq.gt_poses)?;
    io::write_mesh_obj(&args.out.join("mesh.obj"), &mesh)?;
    io::write_intrinsics(&args.out.join("intrinsics.json"), &k)?;
    let manifest = io::SequenceManifest {
        paths: io::SequencePaths {
            events: "events.evt".into(),
            depth_dir: "depth".into(),
            poses: "poses.txt".into(),
            mesh: "mesh.obj".into(),
            intrinsics: "intrinsics.json".into(),
        },
        timing,
        width: args.width as u16,
        height: args.height as u16,
        object: args.object.clone(),
        seed,
        depth_frames: seq.depth_frames.len(),
    };
    manifest.save(&args.out.join("manifest.json"))?;

    println!(
        "simulated {} events, {} depth frames, {} poses -> {}",
        seq.events.len(),
        seq.depth_frames.len(),
        seq.gt_poses.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_voxelize(args: &VoxelizeArgs) -> Result<()> {
    let stream = io::read_events(&args.events)?;
    let (first, last) = stream.time_span().unwrap_or((0, 0));
    let t0 = args.t0_us.unwrap_or(first);
    let t1 = args.t1_us.unwrap_or(last + 1);
    let window =
        TimeWindow::new(t0, t1).map_err(|e| anyhow::anyhow!("window: {e}"))?;
    if args.per_polarity {
        let (pos, neg) = stream
            .voxelize_split(window, args.bins)
            .map_err(|e| anyhow::anyhow!("voxelize: {e}"))?;
        let collect =
            |v: &evpose_core::VoxelGrid| (0..v.bins()).map(|k| v.bin(k).clone()).collect::<Vec<_>>();
        io::write_voxel_grid(&args.out.with_extension("pos.vox"), &collect(&pos), window)?;
        io::write_voxel_grid(&args.out.with_extension("neg.vox"), &collect(&neg), window)?;
        println!(
            "voxelized {} events into 2x{} bins (per polarity)",
            stream.len(),
            args.bins
        );
    } else {
        let grid = stream
            .voxelize(window, args.bins)
            .map_err(|e| anyhow::anyhow!("voxelize: {e}"))?;
        let bins: Vec<_> = (0..grid.bins()).map(|k| grid.bin(k).clone()).collect();
        io::write_voxel_grid(&args.out, &bins, window)?;
        println!(
            "voxelized {} events into {} bins, total mass {:.1}",
            stream.len(),
            args.bins,
            grid.total_mass()
        );
    }
    Ok(())
}

fn load_depth_frames(
    dir: &Path,
    count: usize,
    timing: &TimingModel,
) -> Result<Vec<DepthMap>> {
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let path = dir.join(io::SequenceManifest::depth_frame_name(i));
        let frame = io::read_depth(&path, timing.depth_timestamp(i as i64))
            .with_context(|| format!("depth frame {}", path.display()))?;
        frames.push(frame);
    }
    Ok(frames)
}

fn cmd_reconstruct(args: &ReconstructArgs, config: &Config) -> Result<()> {
    let manifest = io::SequenceManifest::load(&args.manifest)?;
    let base = &args.manifest;
    let events = io::read_events(&manifest.resolve(base, &manifest.paths.events))?;
    let timing = manifest.timing;
    if args.sub == 0 || args.sub >= timing.subdivisions {
        bail!(
            "--sub must be in 1..{} (subdivision 0 is the depth frame itself)",
            timing.subdivisions
        );
    }
    let d0_path = manifest
        .resolve(base, &manifest.paths.depth_dir)
        .join(io::SequenceManifest::depth_frame_name(args.frame));
    let d0 = io::read_depth(&d0_path, timing.depth_timestamp(args.frame as i64))?;

    let t0 = timing.depth_timestamp(args.frame as i64);
    let t = timing
        .timestamp(args.frame as i64, args.sub)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let prev = timing
        .timestamp(args.frame as i64, args.sub - 1)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let long = TimeWindow::new(t0, t).unwrap();
    let short = TimeWindow::new(prev, t).unwrap();

    let recon = reconstruct_depth(&d0, &events, long, short, &config.recon.to_core()?)
        .map_err(|e| anyhow::anyhow!("reconstruction: {e}"))?;
    io::write_depth(&args.out_depth, &recon.depth)?;
    if let Some(flow_path) = &args.out_flow {
        io::write_flow(flow_path, &recon.motion)?;
    }
    println!(
        "reconstructed depth at {} us: {} valid pixels{}",
        t,
        recon.depth.valid_count(),
        if recon.degenerate { " (degenerate input)" } else { "" }
    );
    Ok(())
}

fn parse_mode(s: &str) -> Result<TrackerMode> {
    Ok(match s {
        "pnp" => TrackerMode::PnpOnly,
        "recon" => TrackerMode::ReconDepth,
        "hold" => TrackerMode::DepthHold,
        other => bail!("unknown mode {other:?}; expected pnp, recon, or hold"),
    })
}

fn cmd_track(args: &TrackArgs, config: &Config, seed: u64) -> Result<()> {
    let mesh = io::read_mesh_obj(&args.mesh)?;
    let events = io::read_events(&args.events)?;
    let k = io::read_intrinsics(&args.intrinsics)?;
    let init_poses = io::read_poses(&args.init_pose)?;
    let Some(&(_, init_pose)) = init_poses.first() else {
        bail!("--init-pose file {} is empty", args.init_pose.display());
    };
    let timing = TimingModel::new(args.depth_period_us, args.subdivisions, args.epoch_us)
        .map_err(|e| anyhow::anyhow!("timing: {e}"))?;
    let mode = parse_mode(&args.mode)?;

    // Depth frames: every 000000.png-style file until a gap.
    let mut count = 0;
    while args
        .depth_dir
        .join(io::SequenceManifest::depth_frame_name(count))
        .exists()
    {
        count += 1;
    }
    if count == 0 {
        bail!("no depth frames found in {}", args.depth_dir.display());
    }
    let depth_frames = load_depth_frames(&args.depth_dir, count, &timing)?;

    let tracker_cfg = config.tracker_config(seed)?;
    let result = track_sequence(
        &mesh,
        init_pose,
        &events,
        &depth_frames,
        &timing,
        &k,
        &tracker_cfg,
        mode,
    )
    .map_err(|e| anyhow::anyhow!("tracking: {e}"))?;

    io::write_track_csv(&args.out, &result.entries)?;
    let lost = result
        .entries
        .iter()
        .filter(|e| e.kind == UpdateKind::Lost)
        .count();
    if let Some(stats_path) = &args.stats {
        let real_steps: Vec<u64> = result
            .step_wall_us
            .iter()
            .copied()
            .filter(|&t| t > 0)
            .collect();
        if let Some(stats) = FpsStats::from_step_times_us(&real_steps) {
            let mut text = serde_json::to_string_pretty(&stats)?;
            text.push('\n');
            std::fs::write(stats_path, text)?;
        }
    }
    println!(
        "tracked {} entries ({} lost) -> {}",
        result.entries.len(),
        lost,
        args.out.display()
    );
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs, seed: u64) -> Result<()> {
    let obs = io::read_calib_observations(&args.observations)?;
    let k = io::read_intrinsics(&args.intrinsics)?;
    let cfg = RansacConfig {
        threshold: args.threshold,
        max_iterations: args.iterations,
        min_sample_size: 4,
        seed,
    };
    let result = evpose_core::calibration::calibrate_hand_eye(&obs, &k, &cfg)
        .map_err(|e| anyhow::anyhow!("calibration: {e}"))?;
    io::write_calib_result(&args.out, &result)?;
    println!(
        "T_CO solved: {} / {} inliers, RMS {:.4} px{}",
        result.inlier_mask.iter().filter(|&&b| b).count(),
        result.inlier_mask.len(),
        result.rms_reprojection,
        if result.coplanar_warning {
            " (coplanar 3D set: conditioning may be poor)"
        } else {
            ""
        }
    );
    if args.report {
        let report = evpose_core::calibration::reprojection_report(&result, &obs, &k);
        println!("per-frame residuals (t_us, mean px, max px, corners):");
        for f in &report.frames {
            println!("  {:>12}  {:>8.4}  {:>8.4}  {}", f.t_us, f.mean, f.max, f.corners);
        }
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let entries = io::read_track_csv(&args.result)?;
    let gt = io::read_poses(&args.gt)?;
    let mesh = io::read_mesh_obj(&args.mesh)?;
    let k = io::read_intrinsics(&args.intrinsics)?;
    let sym = match &args.symmetries {
        Some(path) => SymmetrySet::new(io::read_symmetries(path)?),
        None => SymmetrySet::trivial(),
    };
    let step_times: Option<Vec<u64>> = match &args.stats {
        Some(path) => {
            let stats: FpsStats = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            // Reconstitute a single representative time so the report
            // carries the stats through.
            Some(vec![(stats.median_step_ms * 1e3) as u64])
        }
        None => None,
    };

    let estimates: Vec<(i64, Pose)> = entries.iter().map(|e| (e.t_us, e.pose)).collect();
    let mut report = evaluate_poses(
        &estimates,
        &gt,
        mesh.vertices(),
        mesh.diameter(),
        &sym,
        &k,
        step_times.as_deref(),
    )
    .map_err(|e| anyhow::anyhow!("evaluation: {e}"))?;
    if let Some(path) = &args.stats {
        let stats: FpsStats = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        report.fps = Some(stats);
    }

    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&args.out, text)?;

    if let Some(err_path) = &args.frame_errors {
        let frame_errs = per_frame_errors(&estimates, &gt, mesh.vertices(), &sym, &k)
            .map_err(|e| anyhow::anyhow!("per-frame errors: {e}"))?;
        let mut csv = String::from("t_us,add_m,adds_m,mssd_m,mspd_px\n");
        for (t, add, adds, mssd, mspd) in &frame_errs.rows {
            csv.push_str(&format!("{t},{add},{adds},{mssd},{mspd}\n"));
        }
        std::fs::write(err_path, csv)?;
    }

    println!(
        "ADD AUC(0.1d) {:.4}  ADD-S AUC(0.1d) {:.4}  recall@0.1d add {:.4} adds {:.4}  AR(no VSD) {:.4}",
        report.add_auc, report.adds_auc, report.add_recall_0p1d, report.adds_recall_0p1d, report.ar_mean
    );
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.frame_errors)?;
    let mut rows: Vec<(i64, f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 3 {
            bail!("frame-errors line {} malformed", i + 1);
        }
        rows.push((f[0].parse()?, f[1].parse()?, f[2].parse()?));
    }
    if rows.is_empty() {
        bail!("no error rows in {}", args.frame_errors.display());
    }
    std::fs::create_dir_all(&args.out_dir)?;

    // Recall-vs-threshold curves up to 0.1 * diameter.
    let max_th = 0.1 * args.diameter;
    let curve = |select: fn(&(i64, f64, f64)) -> f64| -> Vec<(f64, f64)> {
        (0..=100)
            .map(|i| {
                let th = max_th * i as f64 / 100.0;
                let recall = rows.iter().filter(|r| select(r) < th).count() as f64
                    / rows.len() as f64;
                (th, recall)
            })
            .collect()
    };
    let recall_svg = svg::line_chart(
        "Recall vs threshold",
        "threshold (m)",
        "recall",
        &[
            svg::Series {
                label: "ADD",
                color: "#c0392b",
                points: curve(|r| r.1),
            },
            svg::Series {
                label: "ADD-S",
                color: "#2980b9",
                points: curve(|r| r.2),
            },
        ],
        Some((0.0, 1.0)),
    );
    std::fs::write(args.out_dir.join("recall_curve.svg"), recall_svg)?;

    let t0 = rows[0].0;
    let error_svg = svg::line_chart(
        "Pose error over time",
        "time (s)",
        "error (m)",
        &[
            svg::Series {
                label: "ADD",
                color: "#c0392b",
                points: rows
                    .iter()
                    .map(|r| ((r.0 - t0) as f64 * 1e-6, r.1))
                    .collect(),
            },
            svg::Series {
                label: "ADD-S",
                color: "#2980b9",
                points: rows
                    .iter()
                    .map(|r| ((r.0 - t0) as f64 * 1e-6, r.2))
                    .collect(),
            },
        ],
        None,
    );
    std::fs::write(args.out_dir.join("error_over_time.svg"), error_svg)?;
    println!("wrote {}", args.out_dir.join("recall_curve.svg").display());
    println!("wrote {}", args.out_dir.join("error_over_time.svg").display());
    Ok(())
}
