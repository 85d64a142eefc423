//! Spatial and temporal information features of a luma sequence.
//!
//! SI is the standard deviation of the Sobel gradient magnitude within a
//! frame (edge rows/columns excluded); TI is the standard deviation of the
//! luma difference between consecutive frames. Per-clip pooling is the max
//! over frames, with mean pooling available.

use serde::{Deserialize, Serialize};

use crate::y4m::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

/// Per-clip complexity features; `ti` is 0 for single-frame sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub si: f64,
    pub ti: f64,
}

/// Population standard deviation.
fn stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Sobel gradient magnitudes of the frame interior (edge rows and columns
/// carry no full 3x3 neighborhood and are excluded from the statistic).
fn sobel_magnitudes(frame: &[u8], width: usize, height: usize) -> Vec<f64> {
    if width < 3 || height < 3 {
        return Vec::new();
    }
    let px = |x: usize, y: usize| frame[y * width + x] as f64;
    let mut mags = Vec::with_capacity((width - 2) * (height - 2));
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let gx = -px(x - 1, y - 1) + px(x + 1, y - 1) - 2.0 * px(x - 1, y)
                + 2.0 * px(x + 1, y)
                - px(x - 1, y + 1)
                + px(x + 1, y + 1);
            let gy = -px(x - 1, y - 1) - 2.0 * px(x, y - 1) - px(x + 1, y - 1)
                + px(x - 1, y + 1)
                + 2.0 * px(x, y + 1)
                + px(x + 1, y + 1);
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    mags
}

pub fn compute_si_ti(fs: &FrameSequence) -> FeatureVector {
    compute_si_ti_pooled(fs, Pooling::Max)
}

pub fn compute_si_ti_pooled(fs: &FrameSequence, pooling: Pooling) -> FeatureVector {
    let si_per_frame: Vec<f64> = fs
        .frames
        .iter()
        .map(|f| stddev(&sobel_magnitudes(f, fs.width, fs.height)))
        .collect();
    let ti_per_pair: Vec<f64> = fs
        .frames
        .windows(2)
        .map(|pair| {
            let diffs: Vec<f64> = pair[1]
                .iter()
                .zip(pair[0].iter())
                .map(|(&a, &b)| a as f64 - b as f64)
                .collect();
            stddev(&diffs)
        })
        .collect();

    let pool = |values: &[f64]| -> f64 {
        if values.is_empty() {
            return 0.0;
        }
        match pooling {
            Pooling::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Pooling::Mean => values.iter().sum::<f64>() / values.len() as f64,
        }
    };
    FeatureVector {
        si: pool(&si_per_frame),
        ti: pool(&ti_per_pair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(width: usize, height: usize, frames: Vec<Vec<u8>>) -> FrameSequence {
        FrameSequence {
            width,
            height,
            frames,
        }
    }

    #[test]
    fn constant_luma_is_zero_complexity() {
        let fs = seq(8, 8, vec![vec![77; 64], vec![77; 64]]);
        let f = compute_si_ti(&fs);
        assert_eq!(f.si, 0.0);
        assert_eq!(f.ti, 0.0);
    }

    #[test]
    fn identical_frames_have_zero_ti() {
        let frame: Vec<u8> = (0..64).map(|i| (i * 3) as u8).collect();
        let fs = seq(8, 8, vec![frame.clone(), frame]);
        assert_eq!(compute_si_ti(&fs).ti, 0.0);
    }

    #[test]
    fn single_frame_has_zero_ti() {
        let frame: Vec<u8> = (0..64).map(|i| (i * 3) as u8).collect();
        assert_eq!(compute_si_ti(&seq(8, 8, vec![frame])).ti, 0.0);
    }

    #[test]
    fn duplicate_last_frame_keeps_max_pooled_features() {
        let f1: Vec<u8> = (0..64).map(|i| if i % 8 < 4 { 0 } else { 200 }).collect();
        let f2: Vec<u8> = (0..64).map(|i| (i * 2) as u8).collect();
        let base = seq(8, 8, vec![f1.clone(), f2.clone()]);
        let appended = seq(8, 8, vec![f1, f2.clone(), f2]);
        let a = compute_si_ti(&base);
        let b = compute_si_ti(&appended);
        // The duplicate adds SI equal to f2's (not the maximizer) and a zero
        // TI pair, so max pooling is unchanged.
        assert_eq!(a.si, b.si);
        assert_eq!(a.ti, b.ti);
    }

    #[test]
    fn step_edge_matches_naive_convolution_oracle() {
        let width = 12;
        let height = 10;
        let frame: Vec<u8> = (0..width * height)
            .map(|i| if i % width < width / 2 { 30 } else { 190 })
            .collect();

        // Direct pixelwise oracle with explicit kernels.
        let kx: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        let ky: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
        let mut mags = Vec::new();
        for y in 1..height - 1 {
            for x in 1..width - 1 {
                let mut gx = 0.0;
                let mut gy = 0.0;
                for (dy, (rx, ry)) in kx.iter().zip(ky.iter()).enumerate() {
                    for dx in 0..3 {
                        let v = frame[(y + dy - 1) * width + (x + dx - 1)] as f64;
                        gx += rx[dx] * v;
                        gy += ry[dx] * v;
                    }
                }
                mags.push((gx * gx + gy * gy).sqrt());
            }
        }
        let n = mags.len() as f64;
        let mean = mags.iter().sum::<f64>() / n;
        let expected = (mags.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();

        let got = compute_si_ti(&seq(width, height, vec![frame])).si;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
        assert!(got > 0.0);
    }

    #[test]
    fn mean_pooling_differs_when_frames_differ() {
        let flat = vec![50u8; 64];
        let busy: Vec<u8> = (0..64).map(|i| if i % 8 < 4 { 0 } else { 255 }).collect();
        let fs = seq(8, 8, vec![flat, busy]);
        let max = compute_si_ti_pooled(&fs, Pooling::Max);
        let mean = compute_si_ti_pooled(&fs, Pooling::Mean);
        assert!(max.si > mean.si);
    }
}
