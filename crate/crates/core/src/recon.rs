//! Classical dual reconstruction at arbitrary timestamps: block-matching
//! motion estimation over event images (correlation cost volume plus
//! residual refinement), dense backward warping and forward splatting, and
//! extrapolation of the last depth frame to the current time.

use crate::event::{EventStream, PolarityImage, TimeWindow};
use crate::grid::{DepthMap, Grid2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("grid shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("search radius must be at least 1")]
    ZeroRadius,
    #[error("window [{0}, {1}) cannot drive reconstruction")]
    BadWindow(i64, i64),
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
}

/// Patch-matching cost flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchCost {
    /// Sum of absolute differences (default).
    Sad,
    /// Negative normalized cross-correlation.
    Ncc,
}

/// Block-matching and pyramid parameters.
#[derive(Debug, Clone, Copy)]
pub struct ReconConfig {
    /// Square patch side, odd.
    pub patch: usize,
    /// Full search radius at the coarsest level.
    pub coarse_radius: usize,
    /// Residual search radius at finer levels.
    pub fine_radius: usize,
    /// Pyramid levels.
    pub levels: usize,
    pub cost: MatchCost,
    /// A pixel is textured when its patch holds at least this many events.
    pub min_patch_events: usize,
    /// Below this many windowed events the field is all-invalid.
    pub min_total_events: usize,
    /// Ratio-test margin: matches not this much better than the runner-up
    /// outside the argmin neighborhood count as ambiguous.
    pub distinct_margin: f32,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            patch: 7,
            coarse_radius: 8,
            fine_radius: 2,
            levels: 3,
            cost: MatchCost::Sad,
            min_patch_events: 4,
            min_total_events: 20,
            distinct_margin: 0.1,
        }
    }
}

/// Dense displacement field from the reference time to the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    width: usize,
    height: usize,
    flow: Vec<[f32; 2]>,
    valid: Vec<bool>,
    /// 1 for matched pixels, 0 for values filled from coarser estimates.
    confidence: Vec<f32>,
}

impl MotionField {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            flow: vec![[0.0, 0.0]; width * height],
            valid: vec![false; width * height],
            confidence: vec![0.0; width * height],
        }
    }

    /// Constant flow, valid everywhere.
    pub fn constant(width: usize, height: usize, flow: [f32; 2]) -> Self {
        Self {
            width,
            height,
            flow: vec![flow; width * height],
            valid: vec![true; width * height],
            confidence: vec![1.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn flow_at(&self, x: usize, y: usize) -> [f32; 2] {
        self.flow[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn confidence_at(&self, x: usize, y: usize) -> f32 {
        self.confidence[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Bilinear flow sample; `None` when any touched pixel is invalid or out
    /// of bounds.
    pub fn sample(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let exact = (x - x0 as f64 == 0.0, y - y0 as f64 == 0.0);
        let x1 = if exact.0 { x0 } else { x0 + 1 };
        let y1 = if exact.1 { y0 } else { y0 + 1 };
        if x1 >= self.width || y1 >= self.height {
            return None;
        }
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let mut acc = [0.0f64; 2];
        for (cx, cy, w) in [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x1, y0, fx * (1.0 - fy)),
            (x0, y1, (1.0 - fx) * fy),
            (x1, y1, fx * fy),
        ] {
            if w == 0.0 {
                continue;
            }
            if !self.is_valid(cx, cy) {
                return None;
            }
            let f = self.flow_at(cx, cy);
            acc[0] += f[0] as f64 * w;
            acc[1] += f[1] as f64 * w;
        }
        Some(acc)
    }

    /// Median of valid flow components, or `None` without valid pixels.
    pub fn median_valid_flow(&self) -> Option<[f32; 2]> {
        let mut xs: Vec<f32> = Vec::new();
        let mut ys: Vec<f32> = Vec::new();
        for i in 0..self.flow.len() {
            if self.valid[i] {
                xs.push(self.flow[i][0]);
                ys.push(self.flow[i][1]);
            }
        }
        if xs.is_empty() {
            return None;
        }
        let med = |v: &mut Vec<f32>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        Some([med(&mut xs), med(&mut ys)])
    }

    fn scale_flow(&mut self, s: f32) {
        for f in &mut self.flow {
            f[0] *= s;
            f[1] *= s;
        }
    }
}

// ---------------------------------------------------------------------------
// Cost volume
// ---------------------------------------------------------------------------

/// Per-pixel matching costs over displacement hypotheses in a
/// `(2r+1) x (2r+1)` window centered at zero displacement.
#[derive(Debug, Clone)]
pub struct CostVolume {
    width: usize,
    height: usize,
    radius: usize,
    /// Pixel-major, hypothesis-minor; `INFINITY` marks masked hypotheses.
    costs: Vec<f32>,
    /// Texture gate per pixel.
    valid: Vec<bool>,
}

impl CostVolume {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn hyp_count(&self) -> usize {
        let side = 2 * self.radius + 1;
        side * side
    }

    #[inline]
    fn hyp_index(&self, dx: i32, dy: i32) -> usize {
        let side = (2 * self.radius + 1) as i32;
        ((dy + self.radius as i32) * side + (dx + self.radius as i32)) as usize
    }

    pub fn cost(&self, x: usize, y: usize, dx: i32, dy: i32) -> f32 {
        self.costs[(y * self.width + x) * self.hyp_count() + self.hyp_index(dx, dy)]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    /// Integer displacement with minimal cost; scan order breaks ties.
    pub fn argmin(&self, x: usize, y: usize) -> Option<(i32, i32)> {
        if !self.is_valid(x, y) {
            return None;
        }
        let r = self.radius as i32;
        let base = (y * self.width + x) * self.hyp_count();
        let mut best = f32::INFINITY;
        let mut best_d = None;
        let side = 2 * r + 1;
        for h in 0..self.hyp_count() {
            let c = self.costs[base + h];
            if c < best {
                best = c;
                let dy = h as i32 / side - r;
                let dx = h as i32 % side - r;
                best_d = Some((dx, dy));
            }
        }
        best_d
    }

    /// Integer argmin refined per axis by a parabola through the two cost
    /// neighbors; offsets clamp to half a pixel.
    pub fn subpixel_argmin(&self, x: usize, y: usize) -> Option<(f32, f32)> {
        let (dx, dy) = self.argmin(x, y)?;
        let r = self.radius as i32;
        let refine = |c_minus: f32, c0: f32, c_plus: f32| -> f32 {
            if !(c_minus.is_finite() && c_plus.is_finite()) {
                return 0.0;
            }
            let denom = c_minus - 2.0 * c0 + c_plus;
            if denom <= 0.0 {
                return 0.0;
            }
            (0.5 * (c_minus - c_plus) / denom).clamp(-0.5, 0.5)
        };
        let c0 = self.cost(x, y, dx, dy);
        let off_x = if dx > -r && dx < r {
            refine(self.cost(x, y, dx - 1, dy), c0, self.cost(x, y, dx + 1, dy))
        } else {
            0.0
        };
        let off_y = if dy > -r && dy < r {
            refine(self.cost(x, y, dx, dy - 1), c0, self.cost(x, y, dx, dy + 1))
        } else {
            0.0
        };
        Some((dx as f32 + off_x, dy as f32 + off_y))
    }
}

/// Reference cost volume: direct patch comparison at every pixel and
/// displacement. `cost(p, d)` compares the `patch x patch` window at `p` in
/// `reference` against `p + d` in `current`; hypotheses whose windows leave
/// either image are masked. Matches a brute-force oracle term for term.
pub fn build_cost_volume(
    reference: &Grid2,
    current: &Grid2,
    radius: usize,
    patch: usize,
    cost: MatchCost,
    min_patch_events: usize,
) -> Result<CostVolume, ReconError> {
    if reference.width() != current.width() || reference.height() != current.height() {
        return Err(ReconError::ShapeMismatch(
            reference.width(),
            reference.height(),
            current.width(),
            current.height(),
        ));
    }
    if radius == 0 {
        return Err(ReconError::ZeroRadius);
    }
    let w = reference.width();
    let h = reference.height();
    let half = (patch / 2) as i32;
    let side = 2 * radius + 1;
    let hyp = side * side;
    let mut costs = vec![f32::INFINITY; w * h * hyp];
    let mut valid = vec![false; w * h];

    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if x < half || y < half || x + half >= w as i32 || y + half >= h as i32 {
                continue;
            }
            let mut events = 0usize;
            for py in (y - half)..=(y + half) {
                for px in (x - half)..=(x + half) {
                    if reference.at(px as usize, py as usize) != 0.0 {
                        events += 1;
                    }
                }
            }
            if events < min_patch_events {
                continue;
            }
            valid[y as usize * w + x as usize] = true;
            let base = (y as usize * w + x as usize) * hyp;
            for dy in -(radius as i32)..=(radius as i32) {
                for dx in -(radius as i32)..=(radius as i32) {
                    let (cx, cy) = (x + dx, y + dy);
                    if cx < half || cy < half || cx + half >= w as i32 || cy + half >= h as i32 {
                        continue;
                    }
                    let value = patch_cost(reference, current, x, y, cx, cy, half, cost);
                    let hidx = ((dy + radius as i32) * side as i32 + dx + radius as i32) as usize;
                    costs[base + hidx] = value;
                }
            }
        }
    }

    Ok(CostVolume {
        width: w,
        height: h,
        radius,
        costs,
        valid,
    })
}

fn patch_cost(
    reference: &Grid2,
    current: &Grid2,
    rx: i32,
    ry: i32,
    cx: i32,
    cy: i32,
    half: i32,
    cost: MatchCost,
) -> f32 {
    match cost {
        MatchCost::Sad => {
            let mut acc = 0.0f32;
            for oy in -half..=half {
                for ox in -half..=half {
                    let a = reference.at((rx + ox) as usize, (ry + oy) as usize);
                    let b = current.at((cx + ox) as usize, (cy + oy) as usize);
                    acc += (a - b).abs();
                }
            }
            acc
        }
        MatchCost::Ncc => {
            let n = ((2 * half + 1) * (2 * half + 1)) as f32;
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0f32, 0.0, 0.0, 0.0, 0.0);
            for oy in -half..=half {
                for ox in -half..=half {
                    let a = reference.at((rx + ox) as usize, (ry + oy) as usize);
                    let b = current.at((cx + ox) as usize, (cy + oy) as usize);
                    sa += a;
                    sb += b;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
            }
            let var_a = saa - sa * sa / n;
            let var_b = sbb - sb * sb / n;
            if var_a <= 1e-12 || var_b <= 1e-12 {
                return f32::INFINITY;
            }
            let ncc = (sab - sa * sb / n) / (var_a * var_b).sqrt();
            -ncc
        }
    }
}

// ---------------------------------------------------------------------------
// Fast SAD matching used inside the pyramid
// ---------------------------------------------------------------------------

/// Per-pixel best displacement via per-displacement absolute-difference
/// planes and f64 integral images; costs agree with the direct path up to
/// summation order. Cost planes cover only the work rect around the
/// textured bounding box, which is where all matching happens.
struct FastMatch {
    width: usize,
    radius: i32,
    /// Work rect (x0, y0, w, h) holding the cost planes.
    rect: (usize, usize, usize, usize),
    /// (dx, dy, cost) per pixel; cost INFINITY where unmatched.
    best: Vec<(i32, i32, f32)>,
    /// Cost planes local to the work rect, hypothesis-major.
    planes: Vec<Vec<f32>>,
}

impl FastMatch {
    fn cost_at(&self, x: usize, y: usize, dx: i32, dy: i32) -> f32 {
        if dx.abs() > self.radius || dy.abs() > self.radius {
            return f32::INFINITY;
        }
        let (rx, ry, rw, rh) = self.rect;
        if x < rx || y < ry || x >= rx + rw || y >= ry + rh {
            return f32::INFINITY;
        }
        let side = 2 * self.radius + 1;
        let plane = ((dy + self.radius) * side + dx + self.radius) as usize;
        self.planes[plane][(y - ry) * rw + (x - rx)]
    }

    /// Ratio test: the best cost must clearly beat the best cost found
    /// outside the 3x3 neighborhood of the argmin, otherwise the match sits
    /// in a valley (aperture or repetitive texture) and is unreliable.
    fn is_distinct(&self, x: usize, y: usize, margin: f32) -> bool {
        let (bx, by, best) = self.best[y * self.width + x];
        if !best.is_finite() {
            return false;
        }
        let mut second = f32::INFINITY;
        for dy in -self.radius..=self.radius {
            for dx in -self.radius..=self.radius {
                if (dx - bx).abs() <= 1 && (dy - by).abs() <= 1 {
                    continue;
                }
                let c = self.cost_at(x, y, dx, dy);
                if c < second {
                    second = c;
                }
            }
        }
        if !second.is_finite() {
            // No alternative hypothesis in range; trust the match.
            return true;
        }
        second - best > margin * (second + 1e-3)
    }

    fn subpixel(&self, x: usize, y: usize) -> Option<(f32, f32)> {
        let (dx, dy, c0) = self.best[y * self.width + x];
        if !c0.is_finite() {
            return None;
        }
        let refine = |cm: f32, c0: f32, cp: f32| -> f32 {
            if !(cm.is_finite() && cp.is_finite()) {
                return 0.0;
            }
            let denom = cm - 2.0 * c0 + cp;
            if denom <= 0.0 {
                return 0.0;
            }
            (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5)
        };
        let ox = refine(self.cost_at(x, y, dx - 1, dy), c0, self.cost_at(x, y, dx + 1, dy));
        let oy = refine(self.cost_at(x, y, dx, dy - 1), c0, self.cost_at(x, y, dx, dy + 1));
        Some((dx as f32 + ox, dy as f32 + oy))
    }
}

/// SAD cost planes over all displacements within `radius`, box-filtered by
/// the patch via integral images. All work is clamped to the bounding box
/// of textured pixels (plus the patch margin), since matching only happens
/// there.
fn fast_sad_match(
    reference: &Grid2,
    current: &Grid2,
    textured: &[bool],
    radius: usize,
    patch: usize,
) -> FastMatch {
    let w = reference.width();
    let h = reference.height();
    let half = (patch / 2) as i32;
    let r = radius as i32;
    let side = (2 * r + 1) as usize;

    // Bounding box of textured pixels, expanded by the patch margin.
    let mut bx0 = w;
    let mut bx1 = 0usize;
    let mut by0 = h;
    let mut by1 = 0usize;
    for y in 0..h {
        let row = &textured[y * w..(y + 1) * w];
        if let Some(first) = row.iter().position(|&t| t) {
            let last = w - 1 - row.iter().rev().position(|&t| t).unwrap();
            bx0 = bx0.min(first);
            bx1 = bx1.max(last + 1);
            by0 = by0.min(y);
            by1 = by1.max(y + 1);
        }
    }
    if bx0 >= bx1 {
        return FastMatch {
            width: w,
            radius: r,
            rect: (0, 0, 0, 0),
            best: vec![(0, 0, f32::INFINITY); w * h],
            planes: Vec::new(),
        };
    }
    let wx0 = bx0.saturating_sub(half as usize);
    let wy0 = by0.saturating_sub(half as usize);
    let wx1 = (bx1 + half as usize).min(w);
    let wy1 = (by1 + half as usize).min(h);
    let (ww, wh) = (wx1 - wx0, wy1 - wy0);

    let mut planes = vec![vec![f32::INFINITY; ww * wh]; side * side];
    let mut best = vec![(0i32, 0i32, f32::INFINITY); w * h];

    // Local integral workspace anchored at the work rect.
    let iw = ww + 1;
    let mut integral = vec![0.0f64; iw * (wh + 1)];

    for dy in -r..=r {
        for dx in -r..=r {
            let plane_idx = ((dy + r) * (side as i32) + dx + r) as usize;
            // Reference pixels whose displaced partner stays in the image,
            // intersected with the work rect.
            let gx_lo = (-dx).max(wx0 as i32);
            let gx_hi = (w as i32 - dx).min(wx1 as i32);
            let gy_lo = (-dy).max(wy0 as i32);
            let gy_hi = (h as i32 - dy).min(wy1 as i32);
            if gx_lo >= gx_hi || gy_lo >= gy_hi {
                continue;
            }
            // Absolute-difference plane, integrated on the fly over the
            // work rect. Cells outside the overlap integrate as zero but
            // are never queried.
            for ly in 0..wh {
                let gy = (wy0 + ly) as i32;
                let row_in = gy >= gy_lo && gy < gy_hi;
                let base = (ly + 1) * iw;
                for lx in 0..ww {
                    let gx = (wx0 + lx) as i32;
                    let d = if row_in && gx >= gx_lo && gx < gx_hi {
                        (reference.at(gx as usize, gy as usize)
                            - current.at((gx + dx) as usize, (gy + dy) as usize))
                        .abs() as f64
                    } else {
                        0.0
                    };
                    let i = base + lx + 1;
                    integral[i] = d + integral[i - 1] + integral[i - iw] - integral[i - iw - 1];
                }
            }
            // Valid patch centers: textured, patch fully inside the usable
            // diff region.
            let cx_lo = gx_lo + half;
            let cx_hi = gx_hi - half;
            let cy_lo = gy_lo + half;
            let cy_hi = gy_hi - half;
            let plane = &mut planes[plane_idx];
            for y in cy_lo..cy_hi {
                let row = y as usize * w;
                for x in cx_lo..cx_hi {
                    let pi = row + x as usize;
                    if !textured[pi] {
                        continue;
                    }
                    let lx = x as usize - wx0;
                    let ly = y as usize - wy0;
                    let x0 = lx - half as usize;
                    let y0 = ly - half as usize;
                    let x1 = lx + half as usize + 1;
                    let y1 = ly + half as usize + 1;
                    let sum = integral[y1 * iw + x1] - integral[y0 * iw + x1]
                        - integral[y1 * iw + x0]
                        + integral[y0 * iw + x0];
                    let c = sum as f32;
                    plane[ly * ww + lx] = c;
                    let b = &mut best[pi];
                    if c < b.2 {
                        *b = (dx, dy, c);
                    }
                }
            }
        }
    }

    FastMatch {
        width: w,
        radius: r,
        rect: (wx0, wy0, ww, wh),
        best,
        planes,
    }
}

/// Per-pixel texture gate: at least `min_events` nonzero cells in the patch.
fn texture_mask(reference: &Grid2, patch: usize, min_events: usize) -> Vec<bool> {
    let w = reference.width();
    let h = reference.height();
    let half = (patch / 2) as i32;
    let iw = w + 1;
    let mut integral = vec![0.0f64; iw * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            let v = if reference.at(x, y) != 0.0 { 1.0 } else { 0.0 };
            let i = (y + 1) * iw + x + 1;
            integral[i] = v + integral[i - 1] + integral[i - iw] - integral[i - iw - 1];
        }
    }
    let mut mask = vec![false; w * h];
    for y in half..(h as i32 - half) {
        for x in half..(w as i32 - half) {
            let x0 = (x - half) as usize;
            let y0 = (y - half) as usize;
            let x1 = (x + half + 1) as usize;
            let y1 = (y + half + 1) as usize;
            let count = integral[y1 * iw + x1] - integral[y0 * iw + x1] - integral[y1 * iw + x0]
                + integral[y0 * iw + x0];
            mask[y as usize * w + x as usize] = count >= min_events as f64;
        }
    }
    mask
}

/// Component-wise 3x3 median over valid flow; isolated mismatches (aliased
/// block matches on repetitive texture) get replaced by their neighborhood
/// consensus.
fn median_filter_flow(field: &MotionField) -> MotionField {
    let w = field.width;
    let h = field.height;
    let mut out = field.clone();
    let mut xs: Vec<f32> = Vec::with_capacity(9);
    let mut ys: Vec<f32> = Vec::with_capacity(9);
    for y in 0..h {
        for x in 0..w {
            if !field.valid[y * w + x] {
                continue;
            }
            xs.clear();
            ys.clear();
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if field.valid[ni] {
                        xs.push(field.flow[ni][0]);
                        ys.push(field.flow[ni][1]);
                    }
                }
            }
            let med = |v: &mut Vec<f32>| {
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v[v.len() / 2]
            };
            out.flow[y * w + x] = [med(&mut xs), med(&mut ys)];
        }
    }
    out
}

/// Fills invalid pixels with the flow of their nearest valid pixel
/// (multi-source BFS in scan order); filled pixels get confidence 0.
fn fill_from_nearest(field: &mut MotionField) {
    let w = field.width;
    let h = field.height;
    let mut queue: std::collections::VecDeque<usize> = (0..w * h).filter(|&i| field.valid[i]).collect();
    if queue.is_empty() {
        return;
    }
    let mut assigned: Vec<bool> = field.valid.clone();
    while let Some(i) = queue.pop_front() {
        let x = i % w;
        let y = i / w;
        let flow = field.flow[i];
        let mut push = |nx: usize, ny: usize, queue: &mut std::collections::VecDeque<usize>| {
            let ni = ny * w + nx;
            if !assigned[ni] {
                assigned[ni] = true;
                field.flow[ni] = flow;
                field.valid[ni] = true;
                field.confidence[ni] = 0.0;
                queue.push_back(ni);
            }
        };
        if x > 0 {
            push(x - 1, y, &mut queue);
        }
        if x + 1 < w {
            push(x + 1, y, &mut queue);
        }
        if y > 0 {
            push(x, y - 1, &mut queue);
        }
        if y + 1 < h {
            push(x, y + 1, &mut queue);
        }
    }
}

/// One matching pass between `reference` and `current` with an initial
/// field: the reference is backward-warped by the initial flow, a local cost
/// volume of `radius` is built against `current`, and the sub-pixel argmin
/// residual is added. The initial field's flow is taken as-is on pixels it
/// marks valid; unmatched pixels keep the initial value with confidence 0.
pub fn refine_with_initial(
    reference: &Grid2,
    current: &Grid2,
    initial: &MotionField,
    radius: usize,
    cfg: &ReconConfig,
) -> MotionField {
    let w = reference.width();
    let h = reference.height();
    let mut warped = Grid2::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if !initial.is_valid(x, y) {
                continue;
            }
            let f = initial.flow_at(x, y);
            if let Some(v) = reference.sample_bilinear(x as f32 - f[0], y as f32 - f[1]) {
                warped.set(x, y, v);
            }
        }
    }
    let textured = texture_mask(&warped, cfg.patch, cfg.min_patch_events);
    let matcher = fast_sad_match(&warped, current, &textured, radius, cfg.patch);

    let mut out = MotionField::invalid(w, h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !initial.valid[i] {
                continue;
            }
            let base = initial.flow[i];
            match matcher.subpixel(x, y) {
                Some((rx, ry)) if matcher.is_distinct(x, y, cfg.distinct_margin) => {
                    out.flow[i] = [base[0] + rx, base[1] + ry];
                    out.valid[i] = true;
                    out.confidence[i] = 1.0;
                }
                _ => {
                    out.flow[i] = base;
                    out.valid[i] = true;
                    out.confidence[i] = 0.0;
                }
            }
        }
    }
    out
}

/// Coarse-to-fine block matching between two event images. Returns flow in
/// `reference` pixels toward `current`.
///
/// Matching runs on event magnitudes: signed polarity bands (leading +,
/// trailing -) cancel under the 2x2 sum pooling of the pyramid, while
/// magnitudes keep the edge geometry at every level.
fn match_pyramid(reference: &Grid2, current: &Grid2, cfg: &ReconConfig) -> MotionField {
    let to_abs = |g: &Grid2| {
        Grid2::from_vec(
            g.width(),
            g.height(),
            g.data().iter().map(|v| v.abs()).collect(),
        )
    };
    let reference = &to_abs(reference);
    let current = &to_abs(current);
    let mut ref_pyr = vec![reference.clone()];
    let mut cur_pyr = vec![current.clone()];
    for _ in 1..cfg.levels.max(1) {
        let r = ref_pyr.last().unwrap();
        let c = cur_pyr.last().unwrap();
        if r.width() < 2 * cfg.patch || r.height() < 2 * cfg.patch {
            break;
        }
        ref_pyr.push(r.downsample2());
        cur_pyr.push(c.downsample2());
    }

    // Coarsest level: full search.
    let top = ref_pyr.len() - 1;
    let textured = texture_mask(&ref_pyr[top], cfg.patch, cfg.min_patch_events);
    let matcher = fast_sad_match(
        &ref_pyr[top],
        &cur_pyr[top],
        &textured,
        cfg.coarse_radius,
        cfg.patch,
    );
    let (tw, th) = (ref_pyr[top].width(), ref_pyr[top].height());
    let mut field = MotionField::invalid(tw, th);
    for y in 0..th {
        for x in 0..tw {
            if let Some((fx, fy)) = matcher.subpixel(x, y) {
                if !matcher.is_distinct(x, y, cfg.distinct_margin) {
                    continue;
                }
                let i = y * tw + x;
                field.flow[i] = [fx, fy];
                field.valid[i] = true;
                field.confidence[i] = 1.0;
            }
        }
    }
    field = median_filter_flow(&field);
    fill_from_nearest(&mut field);

    // Finer levels: upsample and refine residually.
    for level in (0..top).rev() {
        let (lw, lh) = (ref_pyr[level].width(), ref_pyr[level].height());
        let mut up = MotionField::invalid(lw, lh);
        for y in 0..lh {
            for x in 0..lw {
                let sx = (x / 2).min(field.width - 1);
                let sy = (y / 2).min(field.height - 1);
                let i = y * lw + x;
                let si = sy * field.width + sx;
                if field.valid[si] {
                    up.flow[i] = [field.flow[si][0] * 2.0, field.flow[si][1] * 2.0];
                    up.valid[i] = true;
                    up.confidence[i] = field.confidence[si];
                }
            }
        }
        field = refine_with_initial(
            &ref_pyr[level],
            &cur_pyr[level],
            &up,
            cfg.fine_radius,
            cfg,
        );
        field = median_filter_flow(&field);
        fill_from_nearest(&mut field);
    }
    field
}

/// Motion field for the window `[start, end)` of `stream`, mirroring the
/// two-stage residual scheme: a coarse field between the polarity images of
/// the window's first and last thirds at reduced resolution, then residual
/// refinement at finer levels, with the temporal gap between the two image
/// centroids rescaled to the full window span.
pub fn estimate_motion(stream: &EventStream, window: TimeWindow, cfg: &ReconConfig) -> MotionField {
    let w = stream.width() as usize;
    let h = stream.height() as usize;
    let span = window.span_us();
    if span <= 0 {
        return MotionField::invalid(w, h);
    }
    let windowed = match stream.window(window.start_us, window.end_us) {
        Ok(s) => s,
        Err(_) => return MotionField::invalid(w, h),
    };
    if windowed.len() < cfg.min_total_events {
        return MotionField::invalid(w, h);
    }
    let third = span / 3;
    let ref_win = TimeWindow::new(window.start_us, window.start_us + third).unwrap();
    let cur_win = TimeWindow::new(window.end_us - third, window.end_us).unwrap();
    let reference = windowed.accumulate_polarity(ref_win);
    let current = windowed.accumulate_polarity(cur_win);
    let ref_centroid = window.start_us + third / 2;
    let cur_centroid = window.end_us - third / 2;
    estimate_motion_between(
        &reference.grid,
        &current.grid,
        ref_centroid,
        cur_centroid,
        window,
        cfg,
    )
}

/// Shared core: matches `reference` (events centered at `ref_centroid_us`)
/// against `current` (centered at `cur_centroid_us`) and rescales the
/// displacement onto the full window span.
///
/// The ROI holds a single rigid object, so flow deviating from its local
/// neighborhood consensus is a mismatch and gets snapped to it.
pub fn estimate_motion_between(
    reference: &Grid2,
    current: &Grid2,
    ref_centroid_us: i64,
    cur_centroid_us: i64,
    window: TimeWindow,
    cfg: &ReconConfig,
) -> MotionField {
    let gap = cur_centroid_us - ref_centroid_us;
    if gap <= 0 {
        return MotionField::invalid(reference.width(), reference.height());
    }
    let mut field = match_pyramid(reference, current, cfg);
    let scale = window.span_us() as f32 / gap as f32;
    field.scale_flow(scale);

    snap_to_local_consensus(&mut field);
    affine_regularize(&mut field);
    field
}

/// Robust affine motion model over the confidently matched flow vectors.
///
/// A rigid object in the ROI produces flow that is affine to first order
/// (translation, in-plane rotation, scale from z motion, shear from tilt).
/// Untextured pixels are filled from nearest neighbors during matching and
/// would otherwise carry translation-only flow that dilutes the rotational
/// component downstream, so every pixel that is not a trusted match is
/// replaced by the model prediction, and matches far from the model are
/// snapped to it.
fn affine_regularize(field: &mut MotionField) {
    let w = field.width;
    let h = field.height;
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let rows: Vec<(f64, f64, f64, f64)> = (0..w * h)
        .filter(|&i| field.valid[i] && field.confidence[i] > 0.0)
        .map(|i| {
            let x = (i % w) as f64 - cx;
            let y = (i / w) as f64 - cy;
            (x, y, field.flow[i][0] as f64, field.flow[i][1] as f64)
        })
        .collect();
    if rows.len() < 12 {
        return;
    }

    // params: fx = a0 + a1 x + a2 y, fy = b0 + b1 x + b2 y; the two
    // components share the same 3x3 normal matrix.
    let solve = |pts: &[(f64, f64, f64, f64)]| -> Option<[f64; 6]> {
        let mut m = [[0.0f64; 3]; 3];
        let mut rx = [0.0f64; 3];
        let mut ry = [0.0f64; 3];
        for &(x, y, fx, fy) in pts {
            let basis = [1.0, x, y];
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] += basis[r] * basis[c];
                }
                rx[r] += basis[r] * fx;
                ry[r] += basis[r] * fy;
            }
        }
        let mat = crate::geometry::Mat3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        let inv = mat.try_inverse()?;
        let a = inv * crate::geometry::Vec3::new(rx[0], rx[1], rx[2]);
        let b = inv * crate::geometry::Vec3::new(ry[0], ry[1], ry[2]);
        Some([a.x, a.y, a.z, b.x, b.y, b.z])
    };

    let Some(mut params) = solve(&rows) else {
        return;
    };
    // One trimming round against the first fit.
    let residual = |p: &[f64; 6], r: &(f64, f64, f64, f64)| -> f64 {
        let fx = p[0] + p[1] * r.0 + p[2] * r.1;
        let fy = p[3] + p[4] * r.0 + p[5] * r.1;
        ((r.2 - fx).powi(2) + (r.3 - fy).powi(2)).sqrt()
    };
    let mut res: Vec<f64> = rows.iter().map(|r| residual(&params, r)).collect();
    let mut sorted = res.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gate = (3.0 * sorted[sorted.len() / 2]).max(1.0);
    let kept: Vec<(f64, f64, f64, f64)> = rows
        .iter()
        .zip(&res)
        .filter(|(_, &e)| e <= gate)
        .map(|(r, _)| *r)
        .collect();
    if kept.len() >= 12 {
        if let Some(refit) = solve(&kept) {
            params = refit;
            res = rows.iter().map(|r| residual(&params, r)).collect();
        }
    }
    let mut sorted2 = res;
    sorted2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keep_gate = (3.0 * sorted2[sorted2.len() / 2]).max(2.0) as f32;

    for i in 0..w * h {
        let x = (i % w) as f64 - cx;
        let y = (i / w) as f64 - cy;
        let mx = (params[0] + params[1] * x + params[2] * y) as f32;
        let my = (params[3] + params[4] * x + params[5] * y) as f32;
        let trusted = field.valid[i] && field.confidence[i] > 0.0;
        if trusted {
            let f = field.flow[i];
            let dev = ((f[0] - mx).powi(2) + (f[1] - my).powi(2)).sqrt();
            if dev <= keep_gate {
                continue;
            }
        }
        field.flow[i] = [mx, my];
        field.valid[i] = true;
        field.confidence[i] = if trusted { 0.0 } else { field.confidence[i].min(0.0) };
    }
}

/// Replaces flow values that disagree with their 5x5 valid-neighborhood
/// median by that median. Rigid motion keeps flow locally smooth, so large
/// local deviations are mismatches; unlike a global gate this keeps the
/// spatially varying (rotational) component intact.
fn snap_to_local_consensus(field: &mut MotionField) {
    let w = field.width;
    let h = field.height;
    let r = 2i64;
    let mut xs: Vec<f32> = Vec::with_capacity(25);
    let mut ys: Vec<f32> = Vec::with_capacity(25);
    let reference = field.flow.clone();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !field.valid[i] {
                continue;
            }
            xs.clear();
            ys.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if field.valid[ni] {
                        xs.push(reference[ni][0]);
                        ys.push(reference[ni][1]);
                    }
                }
            }
            let m = xs.len();
            let mid = m / 2;
            let med = |v: &mut Vec<f32>| {
                *v.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap()).1
            };
            let local = [med(&mut xs), med(&mut ys)];
            let f = reference[i];
            let dev = ((f[0] - local[0]).powi(2) + (f[1] - local[1]).powi(2)).sqrt();
            let mag = (local[0] * local[0] + local[1] * local[1]).sqrt();
            if dev > (0.3 * mag).max(2.0) {
                field.flow[i] = local;
                field.confidence[i] = 0.0;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Warping and splatting
// ---------------------------------------------------------------------------

/// Backward warp: `out(p) = input(p - flow(p))` by bilinear sampling.
/// Returns the warped grid and a mask; samples touching out-of-bounds
/// pixels or invalid flow are masked out.
pub fn warp_backward(input: &Grid2, field: &MotionField) -> (Grid2, Vec<bool>) {
    let w = input.width();
    let h = input.height();
    let mut out = Grid2::zeros(w, h);
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !field.is_valid(x, y) {
                continue;
            }
            let f = field.flow_at(x, y);
            if let Some(v) = input.sample_bilinear(x as f32 - f[0], y as f32 - f[1]) {
                out.set(x, y, v);
                mask[y * w + x] = true;
            }
        }
    }
    (out, mask)
}

/// Backward warp of a depth map; samples touching invalid (zero) depth are
/// invalid in the output.
pub fn warp_backward_depth(input: &DepthMap, field: &MotionField, timestamp_us: i64) -> DepthMap {
    let w = input.width();
    let h = input.height();
    let mut out = Grid2::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if !field.is_valid(x, y) {
                continue;
            }
            let f = field.flow_at(x, y);
            let sx = x as f32 - f[0];
            let sy = y as f32 - f[1];
            // All four touched source cells must hold valid depth.
            let x0 = sx.floor();
            let y0 = sy.floor();
            if x0 < 0.0 || y0 < 0.0 {
                continue;
            }
            let (x0u, y0u) = (x0 as usize, y0 as usize);
            let x1u = if sx == x0 { x0u } else { x0u + 1 };
            let y1u = if sy == y0 { y0u } else { y0u + 1 };
            if x1u >= w || y1u >= h {
                continue;
            }
            let corners = [(x0u, y0u), (x1u, y0u), (x0u, y1u), (x1u, y1u)];
            if corners.iter().any(|&(cx, cy)| !input.is_valid(cx, cy)) {
                continue;
            }
            if let Some(v) = input.values().sample_bilinear(sx, sy) {
                out.set(x, y, v);
            }
        }
    }
    DepthMap::new(out, timestamp_us)
}

/// Forward splat: each valid source depth lands on `round(p + flow(p))`;
/// collisions keep the smaller depth.
pub fn splat_forward(depth: &DepthMap, field: &MotionField, timestamp_us: i64) -> DepthMap {
    let w = depth.width();
    let h = depth.height();
    let mut out = Grid2::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let d = depth.at(x, y);
            if d <= 0.0 || !field.is_valid(x, y) {
                continue;
            }
            let f = field.flow_at(x, y);
            let tx = (x as f32 + f[0]).round();
            let ty = (y as f32 + f[1]).round();
            if tx < 0.0 || ty < 0.0 || tx >= w as f32 || ty >= h as f32 {
                continue;
            }
            let (txu, tyu) = (tx as usize, ty as usize);
            let cur = out.at(txu, tyu);
            if cur == 0.0 || d < cur {
                out.set(txu, tyu, d);
            }
        }
    }
    DepthMap::new(out, timestamp_us)
}

/// Single-pass 3x3 median fill: invalid pixels with at least `min_neighbors`
/// valid neighbors take the median of those neighbors.
pub fn median_fill_holes(depth: &DepthMap, min_neighbors: usize) -> DepthMap {
    let w = depth.width();
    let h = depth.height();
    let mut out = depth.values().clone();
    let mut neighbors: Vec<f32> = Vec::with_capacity(8);
    for y in 0..h {
        for x in 0..w {
            if depth.is_valid(x, y) {
                continue;
            }
            neighbors.clear();
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let v = depth.at(nx as usize, ny as usize);
                    if v > 0.0 {
                        neighbors.push(v);
                    }
                }
            }
            if neighbors.len() >= min_neighbors {
                neighbors.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = neighbors.len();
                let median = if m % 2 == 1 {
                    neighbors[m / 2]
                } else {
                    0.5 * (neighbors[m / 2 - 1] + neighbors[m / 2])
                };
                out.set(x, y, median);
            }
        }
    }
    DepthMap::new(out, depth.timestamp_us)
}

// ---------------------------------------------------------------------------
// Depth reconstruction
// ---------------------------------------------------------------------------

/// Output of [`reconstruct_depth`]: the extrapolated depth, the motion field
/// that produced it, and a degenerate flag for all-invalid input depth.
#[derive(Debug, Clone)]
pub struct DepthReconstruction {
    pub depth: DepthMap,
    pub motion: MotionField,
    pub degenerate: bool,
}

/// Extrapolates `d0` to the end of `long_window` using event-derived motion:
/// motion estimation (long-window reference against the short-window
/// polarity image), forward splatting, then one median hole-fill pass. With
/// too few events the depth is carried over unchanged.
pub fn reconstruct_depth(
    d0: &DepthMap,
    stream: &EventStream,
    long_window: TimeWindow,
    short_window: TimeWindow,
    cfg: &ReconConfig,
) -> Result<DepthReconstruction, ReconError> {
    let w = d0.width();
    let h = d0.height();
    let t_out = long_window.end_us;
    if long_window.span_us() <= 0 {
        return Err(ReconError::BadWindow(long_window.start_us, long_window.end_us));
    }
    if d0.valid_count() == 0 {
        return Ok(DepthReconstruction {
            depth: DepthMap::invalid(w, h, t_out),
            motion: MotionField::invalid(w, h),
            degenerate: true,
        });
    }

    let windowed = stream.window(long_window.start_us, long_window.end_us)?;
    if windowed.len() < cfg.min_total_events {
        // Static-scene assumption: carry the depth forward.
        let mut carried = d0.clone();
        carried.timestamp_us = t_out;
        return Ok(DepthReconstruction {
            depth: carried,
            motion: MotionField::invalid(w, h),
            degenerate: false,
        });
    }

    let third = long_window.span_us() / 3;
    let ref_win = TimeWindow::new(long_window.start_us, long_window.start_us + third).unwrap();
    let reference = windowed.accumulate_polarity(ref_win);
    let ref_centroid = long_window.start_us + third / 2;

    // The short window supplies the current-time matching target when it is
    // genuinely short (a smeared near-full-window accumulation would contain
    // the reference edges and pin the match to zero); otherwise fall back to
    // the long window's last third.
    let short = stream.window(short_window.start_us, short_window.end_us)?;
    let short_usable = short.len() >= cfg.min_total_events / 2
        && 2 * short_window.span_us() <= long_window.span_us();
    let (current, cur_centroid) = if short_usable {
        (
            short.accumulate_polarity(short_window).grid,
            short_window.start_us + short_window.span_us() / 2,
        )
    } else {
        let cur_win = TimeWindow::new(long_window.end_us - third, long_window.end_us).unwrap();
        (
            windowed.accumulate_polarity(cur_win).grid,
            long_window.end_us - third / 2,
        )
    };

    let motion = estimate_motion_between(
        &reference.grid,
        &current,
        ref_centroid,
        cur_centroid,
        long_window,
        cfg,
    );
    if motion.valid_count() == 0 {
        let mut carried = d0.clone();
        carried.timestamp_us = t_out;
        return Ok(DepthReconstruction {
            depth: carried,
            motion,
            degenerate: false,
        });
    }

    let splatted = splat_forward(d0, &motion, t_out);
    let filled = median_fill_holes(&splatted, 3);
    Ok(DepthReconstruction {
        depth: filled,
        motion,
        degenerate: false,
    })
}

/// Intensity proxy at the current time: signed polarity accumulation over
/// the short window.
pub fn reconstruct_intensity_proxy(stream: &EventStream, window: TimeWindow) -> PolarityImage {
    stream.accumulate_polarity(window)
}
