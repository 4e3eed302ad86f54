//! Event data model: time-windowed stream access, polarity-image
//! accumulation, and voxel-grid encoding.
//!
//! Streams are immutable after construction and all operations are pure, so
//! values can be shared freely across threads.

use crate::grid::Grid2;
use thiserror::Error;

/// Default temporal bin count for voxel grids.
pub const DEFAULT_VOXEL_BINS: usize = 5;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("voxel grid needs at least one temporal bin")]
    ZeroBins,
    #[error("window [{0}, {1}) is empty")]
    EmptyWindow(i64, i64),
    #[error("window start {0} exceeds end {1}")]
    BadWindow(i64, i64),
    #[error("event {index} at ({x}, {y}) outside {width}x{height} sensor")]
    OutOfResolution {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("event timestamps decrease at index {0}")]
    NonMonotonic(usize),
    #[error("negative timestamp at event {0}")]
    NegativeTimestamp(usize),
    #[error("invalid polarity {p} at event {index}; expected -1 or +1")]
    BadPolarity { index: usize, p: i8 },
}

/// A single sensor event: pixel location, microsecond timestamp, polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t_us: i64,
    /// Sign of the brightness change, -1 or +1.
    pub p: i8,
}

impl Event {
    pub fn new(x: u16, y: u16, t_us: i64, p: i8) -> Self {
        Self { x, y, t_us, p }
    }
}

/// Half-open time interval `[start_us, end_us)` in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start_us: i64,
    pub end_us: i64,
}

impl TimeWindow {
    pub fn new(start_us: i64, end_us: i64) -> Result<Self, EventError> {
        if start_us > end_us {
            return Err(EventError::BadWindow(start_us, end_us));
        }
        Ok(Self { start_us, end_us })
    }

    #[inline]
    pub fn contains(&self, t_us: i64) -> bool {
        self.start_us <= t_us && t_us < self.end_us
    }

    pub fn span_us(&self) -> i64 {
        self.end_us - self.start_us
    }
}

/// Time-ordered event container bound to a sensor resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    width: u16,
    height: u16,
}

impl EventStream {
    pub fn empty(width: u16, height: u16) -> Self {
        Self {
            events: Vec::new(),
            width,
            height,
        }
    }

    /// Validates ordering, bounds and polarity of an already-sorted batch.
    pub fn from_sorted(events: Vec<Event>, width: u16, height: u16) -> Result<Self, EventError> {
        let mut prev = i64::MIN;
        for (index, e) in events.iter().enumerate() {
            if e.t_us < 0 {
                return Err(EventError::NegativeTimestamp(index));
            }
            if e.t_us < prev {
                return Err(EventError::NonMonotonic(index));
            }
            if e.x >= width || e.y >= height {
                return Err(EventError::OutOfResolution {
                    index,
                    x: e.x,
                    y: e.y,
                    width,
                    height,
                });
            }
            if e.p != -1 && e.p != 1 {
                return Err(EventError::BadPolarity { index, p: e.p });
            }
            prev = e.t_us;
        }
        Ok(Self {
            events,
            width,
            height,
        })
    }

    /// Sorts by timestamp and drops records violating the event invariants,
    /// returning the stream together with the dropped-record count.
    pub fn ingest(events: Vec<Event>, width: u16, height: u16) -> (Self, usize) {
        let before = events.len();
        let mut kept: Vec<Event> = events
            .into_iter()
            .filter(|e| {
                e.t_us >= 0 && e.x < width && e.y < height && (e.p == -1 || e.p == 1)
            })
            .collect();
        let dropped = before - kept.len();
        kept.sort_by_key(|e| e.t_us);
        (
            Self {
                events: kept,
                width,
                height,
            },
            dropped,
        )
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    /// First and last timestamps, if any.
    pub fn time_span(&self) -> Option<(i64, i64)> {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => Some((a.t_us, b.t_us)),
            _ => None,
        }
    }

    /// Events with `t0_us <= t_us < t1_us`, order preserved.
    pub fn window(&self, t0_us: i64, t1_us: i64) -> Result<EventStream, EventError> {
        if t0_us > t1_us {
            return Err(EventError::BadWindow(t0_us, t1_us));
        }
        let lo = self.events.partition_point(|e| e.t_us < t0_us);
        let hi = self.events.partition_point(|e| e.t_us < t1_us);
        Ok(EventStream {
            events: self.events[lo..hi].to_vec(),
            width: self.width,
            height: self.height,
        })
    }

    /// Signed polarity sum per pixel over the window.
    pub fn accumulate_polarity(&self, window: TimeWindow) -> PolarityImage {
        let mut grid = Grid2::zeros(self.width as usize, self.height as usize);
        let lo = self.events.partition_point(|e| e.t_us < window.start_us);
        let hi = self.events.partition_point(|e| e.t_us < window.end_us);
        for e in &self.events[lo..hi] {
            grid.add(e.x as usize, e.y as usize, e.p as f32);
        }
        PolarityImage { grid, window }
    }

    /// Distributes each windowed event's polarity over the two temporally
    /// adjacent bins by linear interpolation of its normalized time. Bin
    /// centers sit at normalized times `k / (bins - 1)`.
    pub fn voxelize(&self, window: TimeWindow, bins: usize) -> Result<VoxelGrid, EventError> {
        self.voxelize_weighted(window, bins, |p| p as f32)
    }

    /// Per-polarity variant: positive and negative events land in separate
    /// grids, each accumulating unsigned kernel weights.
    pub fn voxelize_split(
        &self,
        window: TimeWindow,
        bins: usize,
    ) -> Result<(VoxelGrid, VoxelGrid), EventError> {
        let pos = self.voxelize_weighted(window, bins, |p| if p > 0 { 1.0 } else { 0.0 })?;
        let neg = self.voxelize_weighted(window, bins, |p| if p < 0 { 1.0 } else { 0.0 })?;
        Ok((pos, neg))
    }

    fn voxelize_weighted(
        &self,
        window: TimeWindow,
        bins: usize,
        weight: impl Fn(i8) -> f32,
    ) -> Result<VoxelGrid, EventError> {
        if bins == 0 {
            return Err(EventError::ZeroBins);
        }
        if window.span_us() <= 0 {
            return Err(EventError::EmptyWindow(window.start_us, window.end_us));
        }
        let w = self.width as usize;
        let h = self.height as usize;
        let mut grids = vec![Grid2::zeros(w, h); bins];
        let span = window.span_us() as f64;
        let lo = self.events.partition_point(|e| e.t_us < window.start_us);
        let hi = self.events.partition_point(|e| e.t_us < window.end_us);
        for e in &self.events[lo..hi] {
            let wv = weight(e.p);
            if wv == 0.0 {
                continue;
            }
            let (x, y) = (e.x as usize, e.y as usize);
            if bins == 1 {
                grids[0].add(x, y, wv);
                continue;
            }
            let t_norm = (e.t_us - window.start_us) as f64 / span;
            let u = t_norm * (bins - 1) as f64;
            let k0 = (u.floor() as usize).min(bins - 2);
            let w1 = (u - k0 as f64) as f32;
            grids[k0].add(x, y, wv * (1.0 - w1));
            if w1 > 0.0 {
                grids[k0 + 1].add(x, y, wv * w1);
            }
        }
        Ok(VoxelGrid { grids, window })
    }
}

/// Signed per-pixel polarity accumulation over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityImage {
    pub grid: Grid2,
    pub window: TimeWindow,
}

/// Spatio-temporal event tensor with linear temporal weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    grids: Vec<Grid2>,
    pub window: TimeWindow,
}

impl VoxelGrid {
    pub fn bins(&self) -> usize {
        self.grids.len()
    }

    pub fn bin(&self, k: usize) -> &Grid2 {
        &self.grids[k]
    }

    pub fn width(&self) -> usize {
        self.grids[0].width()
    }

    pub fn height(&self) -> usize {
        self.grids[0].height()
    }

    /// Sum of absolute cell values across all bins.
    pub fn total_mass(&self) -> f64 {
        self.grids
            .iter()
            .flat_map(|g| g.data().iter())
            .map(|&v| v.abs() as f64)
            .sum()
    }
}
