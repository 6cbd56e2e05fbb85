use image::RgbImage;

use super::{FrameFeature, SegmentError};
use crate::scalar::Scalar;

/// Converts one RGB pixel to HSV with every channel scaled to `[0, 255]`
/// (hue degrees are mapped linearly from `[0, 360)`).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max == 0.0 { 0.0 } else { delta / max * 255.0 };
    let h_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    [h_deg * 255.0 / 360.0, s, v]
}

/// Computes the mean HSV value of each frame. Frames must share dimensions
/// and have strictly increasing times.
pub fn frame_features<T: Scalar>(frames: &[(T, RgbImage)]) -> Result<Vec<FrameFeature<T>>, SegmentError> {
    let Some((_, first)) = frames.first() else {
        return Ok(Vec::new());
    };
    let dims = first.dimensions();
    let mut out = Vec::with_capacity(frames.len());
    for (i, (time_s, img)) in frames.iter().enumerate() {
        if img.dimensions() != dims {
            return Err(SegmentError::Argument(format!(
                "frame {i} is {:?}, expected {:?}",
                img.dimensions(),
                dims
            )));
        }
        if i > 0 && *time_s <= frames[i - 1].0 {
            return Err(SegmentError::Argument(format!(
                "frame times must be strictly increasing (frame {i} at {time_s})"
            )));
        }
        let n = f64::from(dims.0) * f64::from(dims.1);
        if n == 0.0 {
            return Err(SegmentError::Argument("empty frame".into()));
        }
        let mut sum = [0.0f64; 3];
        for px in img.pixels() {
            let hsv = rgb_to_hsv(px.0);
            for c in 0..3 {
                sum[c] += hsv[c];
            }
        }
        out.push(FrameFeature {
            time_s: *time_s,
            hsv_mean: sum.map(|s| T::lit(s / n)),
        });
    }
    Ok(out)
}
