//! Sobel gradients and the Canny edge operator used ahead of Hough voting.

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, BinaryImage, GrayImage};

/// Per-pixel signed gradients plus their magnitude.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

impl GradientField {
    /// Builds a field from explicit components; the magnitude plane is
    /// derived so it always stays consistent with `gx`/`gy`.
    pub fn from_components(width: usize, height: usize, gx: Vec<f64>, gy: Vec<f64>) -> Self {
        assert_eq!(gx.len(), width * height);
        assert_eq!(gy.len(), width * height);
        let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
        Self {
            width,
            height,
            gx,
            gy,
            magnitude,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64, f64) {
        let i = y * self.width + x;
        (self.gx[i], self.gy[i], self.magnitude[i])
    }
}

/// 3x3 Sobel gradients with edge-clamp borders.
///
/// `gx` responds to intensity increasing with x, `gy` to intensity
/// increasing with y (downward).
pub fn sobel_gradients(image: &GrayImage) -> Result<GradientField> {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut magnitude = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| image.get_clamped(x + dx, y + dy) as f64;
            let dx = (p(1, -1) - p(-1, -1)) + 2.0 * (p(1, 0) - p(-1, 0)) + (p(1, 1) - p(-1, 1));
            let dy = (p(-1, 1) - p(-1, -1)) + 2.0 * (p(0, 1) - p(0, -1)) + (p(1, 1) - p(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = dx.hypot(dy);
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}

/// Gradient direction quantized to four bins; boundary angles resolve to the
/// lower bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DirectionBin {
    Horizontal,   // 0 degrees: gradient along x
    Diagonal,     // 45 degrees
    Vertical,     // 90 degrees
    AntiDiagonal, // 135 degrees
}

fn quantize_direction(gx: f64, gy: f64) -> DirectionBin {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if angle <= 22.5 || angle > 157.5 {
        DirectionBin::Horizontal
    } else if angle <= 67.5 {
        DirectionBin::Diagonal
    } else if angle <= 112.5 {
        DirectionBin::Vertical
    } else {
        DirectionBin::AntiDiagonal
    }
}

/// Keeps only pixels whose magnitude is a local maximum along the quantized
/// gradient direction. The outermost ring is always suppressed.
fn non_maximum_suppression(grad: &GradientField) -> Vec<f64> {
    let (w, h) = (grad.width, grad.height);
    let mut out = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy, mag) = grad.at(x, y);
            if mag == 0.0 {
                continue;
            }
            let (a, b) = match quantize_direction(gx, gy) {
                DirectionBin::Horizontal => (grad.at(x - 1, y).2, grad.at(x + 1, y).2),
                DirectionBin::Diagonal => (grad.at(x - 1, y - 1).2, grad.at(x + 1, y + 1).2),
                DirectionBin::Vertical => (grad.at(x, y - 1).2, grad.at(x, y + 1).2),
                DirectionBin::AntiDiagonal => (grad.at(x + 1, y - 1).2, grad.at(x - 1, y + 1).2),
            };
            if mag >= a && mag >= b {
                out[y * w + x] = mag;
            }
        }
    }
    out
}

/// Double threshold plus 8-connected hysteresis linking.
fn hysteresis(thinned: &[f64], w: usize, h: usize, low: f64, high: f64) -> BinaryImage {
    let mut out = BinaryImage::new(w, h);
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if thinned[y * w + x] < high || out.get(x, y) {
                continue;
            }
            out.set(x, y, true);
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = cx as isize + dx;
                        let ny = cy as isize + dy;
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if thinned[ny * w + nx] >= low && !out.get(nx, ny) {
                            out.set(nx, ny, true);
                            stack.push((nx, ny));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Canny edge detection; thresholds are fractions of the maximum gradient
/// magnitude so they adapt across illumination.
pub fn canny(
    image: &GrayImage,
    low_ratio: f64,
    high_ratio: f64,
    sigma: f64,
) -> Result<BinaryImage> {
    canny_with_gradients(image, low_ratio, high_ratio, sigma).map(|(edges, _)| edges)
}

/// Like [`canny`], but also returns the gradient field of the pre-smoothed
/// image so Hough voting can reuse the exact directions the edge map was
/// built from.
pub fn canny_with_gradients(
    image: &GrayImage,
    low_ratio: f64,
    high_ratio: f64,
    sigma: f64,
) -> Result<(BinaryImage, GradientField)> {
    if !(0.0 < low_ratio && low_ratio < high_ratio && high_ratio <= 1.0) {
        return Err(Error::BadThresholds {
            low: low_ratio,
            high: high_ratio,
        });
    }
    let kernel = 2 * (3.0 * sigma).ceil() as usize + 1;
    let smoothed = gaussian_blur(image, sigma, kernel)?;
    let grad = sobel_gradients(&smoothed)?;

    let max_mag = grad.magnitude.iter().cloned().fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Ok((BinaryImage::new(image.width(), image.height()), grad));
    }
    let thinned = non_maximum_suppression(&grad);
    let edges = hysteresis(
        &thinned,
        grad.width,
        grad.height,
        low_ratio * max_mag,
        high_ratio * max_mag,
    );
    Ok((edges, grad))
}
