//! Depth as 16-bit grayscale PNG: pixel value = millimeters, 0 = invalid.
//! Lossless for depths below 65.535 m at millimeter resolution.

use super::IoError;
use crate::grid::{DepthMap, Grid2};
use std::path::Path;

pub const DEPTH_MAX_METERS: f32 = 65.535;

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<(), IoError> {
    let w = depth.width();
    let h = depth.height();
    let mut pixels: Vec<u16> = Vec::with_capacity(w * h);
    for &v in depth.values().data() {
        if v > DEPTH_MAX_METERS {
            return Err(IoError::DepthOutOfRange(v));
        }
        pixels.push((v * 1000.0).round() as u16);
    }
    let img: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::from_raw(w as u32, h as u32, pixels)
            .expect("buffer sized from the grid");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::Image(e.to_string()))
}

pub fn read_depth(path: &Path, timestamp_us: i64) -> Result<DepthMap, IoError> {
    let dynamic = image::open(path).map_err(|e| IoError::Image(e.to_string()))?;
    let img = match dynamic {
        image::DynamicImage::ImageLuma16(img) => img,
        _ => return Err(IoError::NotDepthPng),
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f32> = img.into_raw().iter().map(|&mm| mm as f32 / 1000.0).collect();
    Ok(DepthMap::new(Grid2::from_vec(w, h, values), timestamp_us))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn millimeter_quantization_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let mut g = Grid2::zeros(8, 4);
        g.set(2, 1, 1.234);
        g.set(5, 3, 0.0005); // rounds to 1 mm
        let d = DepthMap::new(g, 42);
        write_depth(&path, &d).unwrap();
        let back = read_depth(&path, 42).unwrap();
        assert_eq!(back.at(2, 1), 1.234);
        assert_eq!(back.at(5, 3), 0.001);
        assert_eq!(back.at(0, 0), 0.0); // invalid preserved
        assert_eq!(back.timestamp_us, 42);
    }

    #[test]
    fn random_map_within_half_millimeter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.png");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = Grid2::zeros(32, 32);
        for y in 0..32 {
            for x in 0..32 {
                if rng.gen_bool(0.8) {
                    g.set(x, y, rng.gen_range(0.1f32..10.0));
                }
            }
        }
        let d = DepthMap::new(g.clone(), 0);
        write_depth(&path, &d).unwrap();
        let back = read_depth(&path, 0).unwrap();
        for i in 0..g.data().len() {
            let (a, b) = (g.data()[i], back.values().data()[i]);
            assert!((a - b).abs() <= 0.0005 + 1e-6, "{a} vs {b}");
            assert_eq!(a == 0.0, b == 0.0);
        }
    }

    #[test]
    fn out_of_range_depth_fails_at_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("far.png");
        let mut g = Grid2::zeros(2, 2);
        g.set(0, 0, 70.0);
        let d = DepthMap::new(g, 0);
        assert!(matches!(
            write_depth(&path, &d),
            Err(IoError::DepthOutOfRange(_))
        ));
    }
}
