//! Grayscale raster type, binary PGM I/O, histogram statistics, and the
//! intensity-domain pre-processing primitives: histogram matching, Gaussian
//! smoothing, and dark-region thresholding.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit single-channel raster, row-major. The currency of the whole pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Creates a `width` x `height` image filled with `fill`.
    ///
    /// Panics if either dimension is zero.
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    /// Wraps an existing row-major pixel buffer.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::MalformedHeader(format!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Value at (x, y) with coordinates clamped into the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    /// Bilinear sample at fractional coordinates, or `None` when the sample
    /// point falls outside the pixel grid `[0, w-1] x [0, h-1]`.
    ///
    /// Uses the incremental lerp form, which reproduces constant regions
    /// exactly.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64 - 1.0, self.height as f64 - 1.0);
        if !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0) as f64;
        let v10 = self.get(x1, y0) as f64;
        let v01 = self.get(x0, y1) as f64;
        let v11 = self.get(x1, y1) as f64;
        let top = v00 + fx * (v10 - v00);
        let bottom = v01 + fx * (v11 - v01);
        Some(top + fy * (bottom - top))
    }
}

/// Row-major boolean raster; carrier for threshold masks and edge maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    /// Number of set bits.
    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Renders the mask as a grayscale image (`set_value` where set, else
    /// `clear_value`).
    pub fn to_gray(&self, clear_value: u8, set_value: u8) -> GrayImage {
        let pixels = self
            .bits
            .iter()
            .map(|&b| if b { set_value } else { clear_value })
            .collect();
        GrayImage::from_pixels(self.width, self.height, pixels).expect("dims match by construction")
    }
}

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn count(&self, level: u8) -> u64 {
        self.counts[level as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized cumulative distribution; `cdf[g]` is the fraction of mass
    /// at levels `<= g`. All zeros for an empty histogram.
    pub fn cdf(&self) -> [f64; 256] {
        let mut out = [0.0; 256];
        if self.total == 0 {
            return out;
        }
        let mut cum = 0u64;
        for (g, &c) in self.counts.iter().enumerate() {
            cum += c;
            out[g] = cum as f64 / self.total as f64;
        }
        out
    }
}

/// Counts pixels per intensity level.
pub fn compute_histogram(image: &GrayImage) -> Histogram {
    let mut counts = [0u64; 256];
    for &p in image.pixels() {
        counts[p as usize] += 1;
    }
    Histogram::from_counts(counts)
}

/// Remaps intensities so the output histogram approximates `reference`.
///
/// Level `g` maps to the smallest level `g'` whose reference CDF reaches the
/// source CDF at `g`. Matching an image against its own histogram is the
/// identity on every occupied level.
pub fn match_histogram(image: &GrayImage, reference: &Histogram) -> Result<GrayImage> {
    if reference.total() == 0 {
        return Err(Error::EmptyReference);
    }
    let src_cdf = compute_histogram(image).cdf();
    let ref_cdf = reference.cdf();

    let mut map = [0u8; 256];
    let mut g_ref = 0usize;
    for g in 0..256 {
        // src_cdf is non-decreasing, so the inversion pointer only moves forward.
        while g_ref < 255 && ref_cdf[g_ref] < src_cdf[g] {
            g_ref += 1;
        }
        map[g] = g_ref as u8;
    }

    let pixels = image.pixels().iter().map(|&p| map[p as usize]).collect();
    GrayImage::from_pixels(image.width(), image.height(), pixels)
}

/// Normalized 1-D Gaussian taps for an odd `size`-tap kernel.
fn gaussian_kernel(sigma: f64, size: usize) -> Result<Vec<f64>> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(Error::BadKernel(format!(
            "kernel size {size} must be odd and >= 3"
        )));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::BadKernel(format!("sigma {sigma} must be positive")));
    }
    let half = (size / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(taps)
}

/// Separable Gaussian smoothing with edge-clamp borders.
///
/// Both passes run in f64; the result is rounded once (ties away from zero)
/// and clamped to `[0, 255]`, so constant images pass through unchanged.
pub fn gaussian_blur(image: &GrayImage, sigma: f64, kernel_size: usize) -> Result<GrayImage> {
    let taps = gaussian_kernel(sigma, kernel_size)?;
    let half = (kernel_size / 2) as isize;
    let (w, h) = (image.width(), image.height());

    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let xs = x as isize + k as isize - half;
                acc += t * image.get_clamped(xs, y as isize) as f64;
            }
            horiz[y * w + x] = acc;
        }
    }

    let mut pixels = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let ys = (y as isize + k as isize - half).clamp(0, h as isize - 1) as usize;
                acc += t * horiz[ys * w + x];
            }
            pixels[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::from_pixels(w, h, pixels)
}

/// Marks every pixel with intensity `<= t` (dark-region selection).
pub fn threshold_binary(image: &GrayImage, t: u8) -> BinaryImage {
    let mut out = BinaryImage::new(image.width(), image.height());
    for (i, &p) in image.pixels().iter().enumerate() {
        out.bits[i] = p <= t;
    }
    out
}

/// Reads a binary (P5) PGM file with maxval <= 255.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

/// Parses binary PGM bytes. Comment lines (`#` to end of line) are allowed
/// anywhere in the header.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in &mut fields {
        *field = next_header_int(bytes, &mut pos)?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions {width}x{height} must be positive"
        )));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval as u32));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be >= 1".into()));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing whitespace before pixel data".into(),
            ))
        }
    }
    let expected = (width * height) as usize;
    let found = bytes.len() - pos;
    if found < expected {
        return Err(Error::TruncatedData { expected, found });
    }
    GrayImage::from_pixels(
        width as usize,
        height as usize,
        bytes[pos..pos + expected].to_vec(),
    )
}

fn next_header_int(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    // Skip whitespace and comments.
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while matches!(bytes.get(*pos), Some(b) if b.is_ascii_digit()) {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::MalformedHeader(
            "expected decimal integer in header".into(),
        ));
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).expect("digits are ascii");
    text.parse::<u64>()
        .map_err(|e| Error::MalformedHeader(format!("bad integer '{text}': {e}")))
}

/// Writes `image` as binary PGM: `P5\n<w> <h>\n255\n` followed by the
/// row-major pixel bytes.
pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(image.pixels().len() + 32);
    write_pgm(&mut out, image)?;
    fs::write(path, out)?;
    Ok(())
}

/// Serializes `image` in PGM format to an arbitrary writer.
pub fn write_pgm(w: &mut impl Write, image: &GrayImage) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", image.width(), image.height())?;
    w.write_all(image.pixels())?;
    Ok(())
}
