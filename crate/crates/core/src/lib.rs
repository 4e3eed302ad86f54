//! Event-driven 6D object pose tracking toolkit.
//!
//! The crate covers the full pipeline around an asynchronous event sensor
//! paired with a low-rate depth camera: event stream processing and voxel
//! encodings ([`event`]), pose algebra and the pinhole model ([`geometry`]),
//! synthetic sequence generation ([`simulator`]), event-driven depth
//! extrapolation between depth frames ([`recon`]), rigid registration
//! primitives ([`registration`]), hand-eye calibration ([`calibration`]),
//! the high-rate tracking loop itself ([`tracker`]), pose-error metrics
//! ([`metrics`]), and the on-disk formats shared with the CLI ([`io`]).

pub mod calibration;
pub mod event;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod recon;
pub mod registration;
pub mod simulator;
pub mod tracker;

pub use event::{Event, EventStream, PolarityImage, TimeWindow, VoxelGrid};
pub use geometry::{compute_roi, Intrinsics, Pose, Roi, TimingModel};
pub use grid::{DepthMap, Grid2};
pub use mesh::TriMesh;
