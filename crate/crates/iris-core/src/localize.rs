//! Boundary localization: circular Hough transform for the pupillary
//! boundary, concentric-circle intensity differencing for the limbic
//! boundary, and a radial-derivative operator as an alternative localizer.

use crate::config::PipelineConfig;
use crate::edges::{canny_with_gradients, GradientField};
use crate::error::{Error, Result};
use crate::image::{gaussian_blur, match_histogram, threshold_binary, BinaryImage, GrayImage};

/// Center and radius of a detected circular boundary, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleParams {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl CircleParams {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }
}

/// The two iris boundaries. `new` rejects a limbic circle that does not
/// enclose the pupil radius; coincident centers are the common case but are
/// not required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries {
    pub pupil: CircleParams,
    pub limbic: CircleParams,
}

impl Boundaries {
    pub fn new(pupil: CircleParams, limbic: CircleParams) -> Result<Self> {
        if limbic.r <= pupil.r {
            return Err(Error::DegenerateAnnulus {
                pupil: pupil.r,
                limbic: limbic.r,
            });
        }
        Ok(Self { pupil, limbic })
    }
}

/// Vote array over (cx, cy, r) with 1-pixel bins.
///
/// Center bins span the image; radius bins span `[r_min, r_max]` inclusive.
pub struct HoughAccumulator {
    cx_bins: usize,
    cy_bins: usize,
    r_min: u32,
    r_bins: usize,
    votes: Vec<u32>,
}

impl HoughAccumulator {
    pub fn new(width: usize, height: usize, r_min: u32, r_max: u32) -> Result<Self> {
        if r_min == 0 || r_min >= r_max {
            return Err(Error::EmptyRadiusRange { r_min, r_max });
        }
        let r_bins = (r_max - r_min + 1) as usize;
        Ok(Self {
            cx_bins: width,
            cy_bins: height,
            r_min,
            r_bins,
            votes: vec![0; width * height * r_bins],
        })
    }

    pub fn r_min(&self) -> u32 {
        self.r_min
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.cx_bins, self.cy_bins, self.r_bins)
    }

    pub fn votes(&self) -> &[u32] {
        &self.votes
    }

    #[inline]
    pub fn vote_at(&self, cx: usize, cy: usize, r_index: usize) -> u32 {
        self.votes[(r_index * self.cy_bins + cy) * self.cx_bins + cx]
    }

    /// Casts one vote; silently drops candidates outside the bin grid.
    #[inline]
    pub fn cast(&mut self, cx: i64, cy: i64, r_index: usize) {
        if cx < 0 || cy < 0 || cx >= self.cx_bins as i64 || cy >= self.cy_bins as i64 {
            return;
        }
        self.votes[(r_index * self.cy_bins + cy as usize) * self.cx_bins + cx as usize] += 1;
    }

    /// Global maximum bin. Ties resolve to the smallest radius, then the
    /// smallest (cy, cx), which the scan order below yields directly.
    pub fn peak(&self) -> (usize, usize, u32, u32) {
        let mut best = (0usize, 0usize, self.r_min, 0u32);
        let mut idx = 0;
        for ri in 0..self.r_bins {
            for cy in 0..self.cy_bins {
                for cx in 0..self.cx_bins {
                    let v = self.votes[idx];
                    idx += 1;
                    if v > best.3 {
                        best = (cx, cy, self.r_min + ri as u32, v);
                    }
                }
            }
        }
        best
    }
}

/// Circular Hough transform with gradient-directed voting: each edge pixel
/// casts, for every candidate radius, one vote at each of the two centers
/// along the positive and negative gradient direction.
///
/// Returns the peak circle and its vote count.
pub fn hough_circle(
    edges: &BinaryImage,
    gradients: &GradientField,
    r_min: u32,
    r_max: u32,
) -> Result<(CircleParams, u32)> {
    let mut acc = HoughAccumulator::new(edges.width(), edges.height(), r_min, r_max)?;
    vote_directed(&mut acc, edges, gradients)?;
    let (cx, cy, r, score) = acc.peak();
    Ok((CircleParams::new(cx as f64, cy as f64, r as f64), score))
}

fn vote_directed(
    acc: &mut HoughAccumulator,
    edges: &BinaryImage,
    gradients: &GradientField,
) -> Result<()> {
    let mut any = false;
    let r_min = acc.r_min;
    let r_bins = acc.r_bins;
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if !edges.get(x, y) {
                continue;
            }
            any = true;
            let (gx, gy, mag) = gradients.at(x, y);
            if mag == 0.0 {
                continue;
            }
            let (ux, uy) = (gx / mag, gy / mag);
            for ri in 0..r_bins {
                let r = (r_min + ri as u32) as f64;
                for sign in [-1.0, 1.0] {
                    let cx = (x as f64 + sign * r * ux).round() as i64;
                    let cy = (y as f64 + sign * r * uy).round() as i64;
                    acc.cast(cx, cy, ri);
                }
            }
        }
    }
    if !any {
        return Err(Error::NoEdges);
    }
    Ok(())
}

/// Localizes the pupillary boundary: histogram matching, Gaussian smoothing,
/// dark thresholding, Canny on the binary mask, then Hough voting over the
/// configured pupil radius range.
pub fn localize_pupil(image: &GrayImage, cfg: &PipelineConfig) -> Result<CircleParams> {
    if image.width() < 64 || image.height() < 64 {
        return Err(Error::TooSmall {
            width: image.width(),
            height: image.height(),
            min: 64,
        });
    }
    let matched = match_histogram(image, &cfg.reference)?;
    let blurred = gaussian_blur(&matched, cfg.blur_sigma, cfg.blur_kernel)?;
    let mask = threshold_binary(&blurred, cfg.pupil_threshold);
    let mask_img = mask.to_gray(0, 255);
    let (edge_map, grads) =
        canny_with_gradients(&mask_img, cfg.canny_low, cfg.canny_high, cfg.canny_sigma)?;
    match hough_circle(&edge_map, &grads, cfg.pupil_r_min, cfg.pupil_r_max) {
        Ok((circle, _score)) => Ok(circle),
        Err(Error::NoEdges) => Err(Error::PupilNotFound(
            "no boundary edges survive thresholding".into(),
        )),
        Err(e) => Err(e),
    }
}

/// Mean intensity over `n_theta` equally spaced bilinear samples on the
/// circle. `None` when fewer than half of the samples land inside the image.
fn circular_mean(
    image: &GrayImage,
    cx: f64,
    cy: f64,
    r: f64,
    n_theta: u32,
    lateral_only: bool,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0u32;
    let mut attempted = 0u32;
    for k in 0..n_theta {
        let theta = std::f64::consts::TAU * k as f64 / n_theta as f64;
        if lateral_only && !in_lateral_sectors(theta) {
            continue;
        }
        attempted += 1;
        if let Some(v) = image.sample_bilinear(cx + r * theta.cos(), cy + r * theta.sin()) {
            sum += v;
            n += 1;
        }
    }
    if attempted == 0 || n * 2 < attempted {
        None
    } else {
        Some(sum / n as f64)
    }
}

/// Sectors away from the eyelids: theta in [-45, 45] or [135, 225] degrees,
/// boundaries included.
fn in_lateral_sectors(theta: f64) -> bool {
    let deg = theta.to_degrees().rem_euclid(360.0);
    !(deg > 45.0 && deg < 135.0) && !(deg > 225.0 && deg < 315.0)
}

/// Localizes the limbic boundary by scanning concentric circles outward from
/// the pupil and returning the radius with the largest outward intensity
/// step `S(r + step) - S(r)`.
pub fn localize_limbic(
    image: &GrayImage,
    pupil: CircleParams,
    cfg: &PipelineConfig,
) -> Result<CircleParams> {
    let margin = [
        pupil.cx,
        pupil.cy,
        image.width() as f64 - 1.0 - pupil.cx,
        image.height() as f64 - 1.0 - pupil.cy,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    let r_start = pupil.r + cfg.limbic_r_gap as f64;
    let r_limit = margin.min(pupil.r + cfg.limbic_r_extent as f64);
    let step = cfg.limbic_step as f64;
    if r_start + step > r_limit {
        return Err(Error::SearchRangeOutOfImage(format!(
            "scan start {r_start:.1} + step {step} exceeds limit {r_limit:.1}"
        )));
    }

    let mut best: Option<(f64, f64)> = None; // (score, radius)
    let mut r = r_start;
    while r + step <= r_limit {
        let s0 = circular_mean(
            image,
            pupil.cx,
            pupil.cy,
            r,
            cfg.limbic_samples,
            cfg.limbic_lateral_only,
        );
        let s1 = circular_mean(
            image,
            pupil.cx,
            pupil.cy,
            r + step,
            cfg.limbic_samples,
            cfg.limbic_lateral_only,
        );
        if let (Some(s0), Some(s1)) = (s0, s1) {
            let d = s1 - s0;
            if best.is_none_or(|(bs, _)| d > bs) {
                best = Some((d, r));
            }
        }
        r += step;
    }
    match best {
        Some((_, r)) => Ok(CircleParams::new(pupil.cx, pupil.cy, r)),
        None => Err(Error::SearchRangeOutOfImage(
            "no circle in the scan range fits the image".into(),
        )),
    }
}

/// Rectangular center window and inclusive radius range for
/// [`idop_localize`].
#[derive(Debug, Clone, Copy)]
pub struct SearchSpace {
    pub cx_min: i64,
    pub cx_max: i64,
    pub cy_min: i64,
    pub cy_max: i64,
    pub r_min: u32,
    pub r_max: u32,
}

/// Boundary localization by the maximum Gaussian-smoothed radial derivative
/// of circular intensity means.
///
/// Centers are scanned coarsely on a 4-pixel grid and then refined at
/// 1-pixel resolution around the coarse maximum.
pub fn idop_localize(
    image: &GrayImage,
    search: &SearchSpace,
    sigma_r: f64,
    n_theta: u32,
) -> Result<CircleParams> {
    if search.r_min == 0 || search.r_min >= search.r_max {
        return Err(Error::EmptySearchSpace(format!(
            "radius range [{}, {}]",
            search.r_min, search.r_max
        )));
    }
    if search.cx_min > search.cx_max || search.cy_min > search.cy_max {
        return Err(Error::EmptySearchSpace("empty center window".into()));
    }
    if search.cx_min < 0
        || search.cy_min < 0
        || search.cx_max >= image.width() as i64
        || search.cy_max >= image.height() as i64
    {
        return Err(Error::EmptySearchSpace(
            "center window exceeds image bounds".into(),
        ));
    }

    let taps = radial_smoothing_taps(sigma_r);

    let mut best: Option<(f64, i64, i64, u32)> = None;
    let consider = |img: &GrayImage, cx: i64, cy: i64, best: &mut Option<(f64, i64, i64, u32)>| {
        if let Some((score, r)) =
            idop_objective(img, cx, cy, search.r_min, search.r_max, &taps, n_theta)
        {
            let better = match best {
                None => true,
                Some((bs, bx, by, br)) => {
                    score > *bs || (score == *bs && (r, cy, cx) < (*br, *by, *bx))
                }
            };
            if better {
                *best = Some((score, cx, cy, r));
            }
        }
    };

    let mut cy = search.cy_min;
    while cy <= search.cy_max {
        let mut cx = search.cx_min;
        while cx <= search.cx_max {
            consider(image, cx, cy, &mut best);
            cx += 4;
        }
        cy += 4;
    }
    let coarse = best.ok_or(Error::DegenerateMaximum)?;
    if coarse.0 == 0.0 {
        return Err(Error::DegenerateMaximum);
    }

    for cy in (coarse.2 - 4).max(search.cy_min)..=(coarse.2 + 4).min(search.cy_max) {
        for cx in (coarse.1 - 4).max(search.cx_min)..=(coarse.1 + 4).min(search.cx_max) {
            consider(image, cx, cy, &mut best);
        }
    }
    let (score, cx, cy, r) = best.expect("coarse pass already produced a candidate");
    if score == 0.0 {
        return Err(Error::DegenerateMaximum);
    }
    Ok(CircleParams::new(cx as f64, cy as f64, r as f64))
}

fn radial_smoothing_taps(sigma_r: f64) -> Vec<f64> {
    let half = (3.0 * sigma_r).ceil() as usize;
    let mut taps: Vec<f64> = (-(half as isize)..=half as isize)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma_r * sigma_r)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Maximum |smoothed radial derivative| over the radius range for one
/// candidate center, with the radius achieving it.
fn idop_objective(
    image: &GrayImage,
    cx: i64,
    cy: i64,
    r_min: u32,
    r_max: u32,
    taps: &[f64],
    n_theta: u32,
) -> Option<(f64, u32)> {
    let means: Vec<Option<f64>> = (r_min..=r_max)
        .map(|r| circular_mean(image, cx as f64, cy as f64, r as f64, n_theta, false))
        .collect();
    // Radial derivative between consecutive radii; undefined where either
    // mean is unavailable.
    let derivs: Vec<Option<f64>> = means
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect();

    let half = taps.len() / 2;
    let mut best: Option<(f64, u32)> = None;
    for i in 0..derivs.len() {
        derivs[i]?; // stop at the first hole: outer radii only get worse
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            let j = (i as isize + k as isize - half as isize).clamp(0, derivs.len() as isize - 1);
            match derivs[j as usize] {
                Some(d) => acc += t * d,
                None => acc += t * derivs[i].unwrap(),
            }
        }
        let score = acc.abs();
        let r = r_min + i as u32;
        if best.is_none_or(|(bs, _)| score > bs) {
            best = Some((score, r));
        }
    }
    best
}

/// Diagnostic for the detected boundary: the radial intensity step at the
/// detected radius relative to the strongest step in a window around it.
/// Near 1.0 means the detected circle sits on the dominant local gradient.
pub fn boundary_contrast(
    image: &GrayImage,
    circle: &CircleParams,
    half_window: u32,
    n_theta: u32,
) -> f64 {
    let r0 = circle.r.round() as i64;
    let lo = (r0 - half_window as i64).max(2);
    let hi = r0 + half_window as i64;
    let mut deriv_at = 0.0f64;
    let mut deriv_max = 0.0f64;
    for r in lo..hi {
        let a = circular_mean(image, circle.cx, circle.cy, r as f64, n_theta, false);
        let b = circular_mean(image, circle.cx, circle.cy, (r + 1) as f64, n_theta, false);
        if let (Some(a), Some(b)) = (a, b) {
            let d = (b - a).abs();
            deriv_max = deriv_max.max(d);
            if r == r0 - 1 || r == r0 {
                deriv_at = deriv_at.max(d);
            }
        }
    }
    if deriv_max == 0.0 {
        0.0
    } else {
        deriv_at / deriv_max
    }
}
