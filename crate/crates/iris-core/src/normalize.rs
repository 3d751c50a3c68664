//! Rubber-sheet unwrapping of the iris annulus into a fixed-size polar strip,
//! noise masking, and contrast enhancement over the valid region.

use crate::edges::canny;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Histogram};
use crate::localize::Boundaries;

/// Fixed-size polar unwrapping of the iris annulus.
///
/// Row 0 lies on the pupillary boundary and the last row on the limbic
/// boundary; column `j` corresponds to angle `2*pi*j / angular_res`, measured
/// from the positive x axis toward positive y. The mask marks pixels that
/// sampled real iris data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedIris {
    radial_res: usize,
    angular_res: usize,
    strip: Vec<u8>,
    mask: Vec<bool>,
}

impl NormalizedIris {
    pub fn new(radial_res: usize, angular_res: usize) -> Self {
        assert!(radial_res >= 2 && angular_res >= 2);
        Self {
            radial_res,
            angular_res,
            strip: vec![0; radial_res * angular_res],
            mask: vec![true; radial_res * angular_res],
        }
    }

    pub fn from_parts(
        radial_res: usize,
        angular_res: usize,
        strip: Vec<u8>,
        mask: Vec<bool>,
    ) -> Self {
        assert_eq!(strip.len(), radial_res * angular_res);
        assert_eq!(mask.len(), radial_res * angular_res);
        Self {
            radial_res,
            angular_res,
            strip,
            mask,
        }
    }

    pub fn radial_res(&self) -> usize {
        self.radial_res
    }

    pub fn angular_res(&self) -> usize {
        self.angular_res
    }

    pub fn strip(&self) -> &[u8] {
        &self.strip
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> u8 {
        self.strip[row * self.angular_res + col]
    }

    #[inline]
    pub fn valid(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.angular_res + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8, valid: bool) {
        let i = row * self.angular_res + col;
        self.strip[i] = value;
        self.mask[i] = valid;
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Circularly shifts content right by `shift` columns (negative shifts
    /// move content left). Strip and mask move together.
    pub fn shifted_columns(&self, shift: i32) -> Self {
        let a = self.angular_res as i64;
        let mut out = Self::new(self.radial_res, self.angular_res);
        for row in 0..self.radial_res {
            for col in 0..self.angular_res {
                let src = (col as i64 - shift as i64).rem_euclid(a) as usize;
                let i = row * self.angular_res + src;
                out.set(row, col, self.strip[i], self.mask[i]);
            }
        }
        out
    }

    /// The strip as a plain grayscale image (ignores the mask).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_pixels(self.angular_res, self.radial_res, self.strip.clone())
            .expect("strip dims are positive")
    }

    /// The mask as a 0/255 grayscale image.
    pub fn mask_to_gray(&self) -> GrayImage {
        let pixels = self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        GrayImage::from_pixels(self.angular_res, self.radial_res, pixels)
            .expect("mask dims are positive")
    }
}

/// Unwraps the annulus between the two boundaries into a
/// `radial_res` x `angular_res` strip.
///
/// Each sample interpolates linearly between the pupil boundary point and the
/// limbic boundary point at the same angle, so non-concentric circles work
/// unchanged. Samples that fall outside the image are masked invalid.
pub fn rubber_sheet(
    image: &GrayImage,
    b: &Boundaries,
    radial_res: usize,
    angular_res: usize,
) -> Result<NormalizedIris> {
    if b.limbic.r <= b.pupil.r {
        return Err(Error::DegenerateAnnulus {
            pupil: b.pupil.r,
            limbic: b.limbic.r,
        });
    }
    let mut out = NormalizedIris::new(radial_res, angular_res);
    for col in 0..angular_res {
        let theta = std::f64::consts::TAU * col as f64 / angular_res as f64;
        let (sin, cos) = theta.sin_cos();
        let px = b.pupil.cx + b.pupil.r * cos;
        let py = b.pupil.cy + b.pupil.r * sin;
        let lx = b.limbic.cx + b.limbic.r * cos;
        let ly = b.limbic.cy + b.limbic.r * sin;
        for row in 0..radial_res {
            let rho = row as f64 / (radial_res - 1) as f64;
            let x = px + rho * (lx - px);
            let y = py + rho * (ly - py);
            match image.sample_bilinear(x, y) {
                Some(v) => out.set(row, col, v.round().clamp(0.0, 255.0) as u8, true),
                None => out.set(row, col, 0, false),
            }
        }
    }
    Ok(out)
}

/// Masks eyelash-dark and specular-bright pixels plus strong clutter edges
/// (high-threshold Canny, dilated by one pixel). Never marks an invalid
/// pixel valid.
pub fn build_noise_mask(
    strip: &NormalizedIris,
    dark_t: u8,
    bright_t: u8,
    edge_high_ratio: f64,
) -> NormalizedIris {
    assert!(dark_t < bright_t, "dark threshold must be below bright");
    let mut out = strip.clone();
    for i in 0..out.strip.len() {
        let v = out.strip[i];
        if v < dark_t || v > bright_t {
            out.mask[i] = false;
        }
    }

    // Strong clutter edges on the raw strip, dilated by one pixel. The low
    // threshold sits just under the high one: hysteresis may close small
    // gaps along a strong edge but must not flood along texture ridges.
    let strip_img = strip.to_gray();
    if let Ok(edge_map) = canny(&strip_img, edge_high_ratio * 0.9, edge_high_ratio, 1.4) {
        let (w, h) = (strip.angular_res, strip.radial_res);
        for row in 0..h {
            for col in 0..w {
                if !edge_map.get(col, row) {
                    continue;
                }
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let r = row as i64 + dy;
                        let c = col as i64 + dx;
                        if r >= 0 && c >= 0 && r < h as i64 && c < w as i64 {
                            out.mask[r as usize * w + c as usize] = false;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Histogram equalization computed over valid pixels only; invalid pixels and
/// the mask itself are untouched. A strip whose valid region is a single
/// level comes back unchanged.
pub fn enhance_strip(strip: &NormalizedIris) -> Result<NormalizedIris> {
    let mut counts = [0u64; 256];
    let mut total = 0u64;
    for (i, &m) in strip.mask.iter().enumerate() {
        if m {
            counts[strip.strip[i] as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::AllMasked);
    }
    let hist = Histogram::from_counts(counts);
    let cdf = hist.cdf();
    let cdf_min = cdf
        .iter()
        .find(|&&c| c > 0.0)
        .copied()
        .expect("total > 0 implies an occupied level");
    if cdf_min >= 1.0 {
        // Single occupied level; equalization is undefined, leave as is.
        return Ok(strip.clone());
    }

    let mut map = [0u8; 256];
    for g in 0..256 {
        let v = 255.0 * (cdf[g] - cdf_min) / (1.0 - cdf_min);
        map[g] = v.round().clamp(0.0, 255.0) as u8;
    }
    let mut out = strip.clone();
    for i in 0..out.strip.len() {
        if out.mask[i] {
            out.strip[i] = map[out.strip[i] as usize];
        }
    }
    Ok(out)
}
