//! Grayscale images and the classical preprocessing applied before
//! quantisation: min-max scaling, box-filter downscaling and luma conversion.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major grayscale image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Data(format!(
                "image {height}x{width} needs {} pixels, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Image { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Image {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn in_unit_range(&self) -> bool {
        self.data.iter().all(|x| (0.0..=1.0).contains(x))
    }
}

/// Interleaved RGB image with channels in [0,1].
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

/// Per-image min-max scaling to [0,1]; constant images become all zeros.
pub fn minmax_normalize(image: &Image) -> Image {
    let (lo, hi) = image
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    let data = if range > 0.0 {
        image.data.iter().map(|&x| ((x - lo) / range).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; image.data.len()]
    };
    Image { data, ..*image }
}

/// Weights of source cells `[i, i+1)` overlapping target cell `t` of a
/// `src → dst` box downscale, normalised to sum to 1.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|t| {
            let lo = t as f64 * scale;
            let hi = (t + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Area-average downscale with fractional edge weights.
pub fn resize(image: &Image, height: usize, width: usize) -> Result<Image> {
    if height == 0 || width == 0 {
        return Err(Error::arg("resize target must be non-empty"));
    }
    if height > image.height || width > image.width {
        return Err(Error::arg(format!(
            "upscaling {}x{} to {height}x{width} is not supported",
            image.height, image.width
        )));
    }
    let wx = box_weights(image.width, width);
    let wy = box_weights(image.height, height);
    let mut rows = vec![0.0; image.height * width];
    for r in 0..image.height {
        let src = &image.data[r * image.width..(r + 1) * image.width];
        for (c, ws) in wx.iter().enumerate() {
            rows[r * width + c] = ws.iter().map(|&(i, w)| src[i] * w).sum();
        }
    }
    let mut out = vec![0.0; height * width];
    for (r, ws) in wy.iter().enumerate() {
        for c in 0..width {
            out[r * width + c] = ws.iter().map(|&(i, w)| rows[i * width + c] * w).sum();
        }
    }
    Image::new(height, width, out)
}

/// Luma conversion with weights 0.299 / 0.587 / 0.114.
pub fn grayscale(rgb: &RgbImage) -> Result<Image> {
    if rgb.channels != 3 {
        return Err(Error::arg(format!("grayscale needs 3 channels, got {}", rgb.channels)));
    }
    let data = rgb
        .data
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect();
    Image::new(rgb.height, rgb.width, data)
}
