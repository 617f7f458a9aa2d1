//! Image similarity.

use crate::error::{Error, Result};

/// Stabilizing constants of [`ssim`].
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Row-major `width × height` image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageView<'a> {
    data: &'a [f64],
    width: usize,
    height: usize,
}

impl<'a> ImageView<'a> {
    pub fn new(data: &'a [f64], width: usize, height: usize) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::ImageShape {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            data,
            width,
            height,
        })
    }

    pub fn data(&self) -> &'a [f64] {
        self.data
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Structural similarity over the whole image (a single window), with
/// population statistics. 1 means identical; lower is less similar.
pub fn ssim(x: &ImageView<'_>, y: &ImageView<'_>) -> Result<f64> {
    if (x.width, x.height) != (y.width, y.height) {
        return Err(Error::ImageShape {
            width: y.width,
            height: y.height,
            len: x.data.len(),
        });
    }
    let n = x.data.len() as f64;
    if x.data.is_empty() {
        return Ok(1.0);
    }
    let mx = x.data.iter().sum::<f64>() / n;
    let my = y.data.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.data.iter().zip(y.data) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cxy += da * db;
    }
    let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
    let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2);
    let den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2);
    Ok(num / den)
}
