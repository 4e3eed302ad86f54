//! Dense row-major 2D grids shared by the event, reconstruction and
//! simulation stages.

/// Row-major `height x width` grid of `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Grid2 {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Wraps an existing buffer; `data.len()` must equal `width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "grid buffer size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn add(&mut self, x: usize, y: usize, v: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] += v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// 2x2 sum pooling; odd trailing rows/columns are dropped.
    pub fn downsample2(&self) -> Grid2 {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut out = Grid2::zeros(w.max(1), h.max(1));
        if w == 0 || h == 0 {
            return out;
        }
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                out.set(x, y, s);
            }
        }
        out
    }

    /// Bilinear sample at fractional coordinates; `None` outside the grid.
    pub fn sample_bilinear(&self, x: f32, y: f32) -> Option<f32> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        if x0 + 1 >= self.width || y0 + 1 >= self.height {
            // Exact right/bottom border still samples the last cell.
            if x0 < self.width && y0 < self.height && x == x0 as f32 && y == y0 as f32 {
                return Some(self.at(x0, y0));
            }
            return None;
        }
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let v00 = self.at(x0, y0);
        let v10 = self.at(x0 + 1, y0);
        let v01 = self.at(x0, y0 + 1);
        let v11 = self.at(x0 + 1, y0 + 1);
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Crops the rectangle `[x0, x0+w) x [y0, y0+h)`; must be in bounds.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Grid2 {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop out of bounds");
        let mut out = Grid2::zeros(w, h);
        for y in 0..h {
            let src = &self.data[(y0 + y) * self.width + x0..(y0 + y) * self.width + x0 + w];
            out.data[y * w..(y + 1) * w].copy_from_slice(src);
        }
        out
    }
}

/// Dense depth map in meters; 0 marks pixels with no measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    values: Grid2,
    pub timestamp_us: i64,
}

impl DepthMap {
    pub fn new(values: Grid2, timestamp_us: i64) -> Self {
        debug_assert!(values.data().iter().all(|&v| v >= 0.0));
        Self {
            values,
            timestamp_us,
        }
    }

    pub fn invalid(width: usize, height: usize, timestamp_us: i64) -> Self {
        Self {
            values: Grid2::zeros(width, height),
            timestamp_us,
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn values(&self) -> &Grid2 {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Grid2 {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values.at(x, y)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.values.at(x, y) > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.values.data().iter().filter(|&&v| v > 0.0).count()
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> DepthMap {
        DepthMap {
            values: self.values.crop(x0, y0, w, h),
            timestamp_us: self.timestamp_us,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_sums_quads() {
        let g = Grid2::from_vec(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let d = g.downsample2();
        assert_eq!(d.width(), 2);
        assert_eq!(d.height(), 1);
        assert_eq!(d.at(0, 0), 1.0 + 2.0 + 5.0 + 6.0);
        assert_eq!(d.at(1, 0), 3.0 + 4.0 + 7.0 + 8.0);
    }

    #[test]
    fn bilinear_interpolates_and_rejects_outside() {
        let g = Grid2::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.sample_bilinear(0.0, 0.0), Some(0.0));
        assert_eq!(g.sample_bilinear(0.5, 0.5), Some(1.5));
        assert_eq!(g.sample_bilinear(-0.1, 0.0), None);
        assert_eq!(g.sample_bilinear(1.5, 0.0), None);
        assert_eq!(g.sample_bilinear(1.0, 1.0), Some(3.0));
    }

    #[test]
    fn crop_copies_subrect() {
        let g = Grid2::from_vec(3, 3, (0..9).map(|v| v as f32).collect());
        let c = g.crop(1, 1, 2, 2);
        assert_eq!(c.data(), &[4.0, 5.0, 7.0, 8.0]);
    }
}
