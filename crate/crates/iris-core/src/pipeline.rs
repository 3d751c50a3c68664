//! End-to-end composition of the pipeline stages, with optional access to
//! every intermediate image for stage dumps.

use crate::config::PipelineConfig;
use crate::edges::canny_with_gradients;
use crate::encode::{encode_iris, IrisCode};
use crate::error::{Error, Result};
use crate::image::{gaussian_blur, match_histogram, threshold_binary, GrayImage};
use crate::localize::{
    boundary_contrast, hough_circle, idop_localize, localize_limbic, Boundaries, CircleParams,
};
use crate::normalize::{build_noise_mask, enhance_strip, rubber_sheet, NormalizedIris};

/// Which boundary localizer drives segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizeMethod {
    /// Circular Hough transform on the thresholded edge map (the default).
    Hough,
    /// Radial-derivative operator scanned over a center window.
    Idop,
}

/// Detected boundaries plus the pupil boundary-contrast diagnostic
/// (see [`boundary_contrast`]; values below 0.8 suggest a weak localization).
#[derive(Debug, Clone, Copy)]
pub struct Segmentation {
    pub boundaries: Boundaries,
    pub pupil_contrast: f64,
}

/// Every intermediate raster the segmentation stage produces.
#[derive(Debug, Clone)]
pub struct StageImages {
    pub matched: GrayImage,
    pub blurred: GrayImage,
    pub threshold_mask: GrayImage,
    pub edge_map: GrayImage,
    pub overlay: GrayImage,
}

/// Runs pre-processing and both boundary localizers on one image.
pub fn segment(
    image: &GrayImage,
    cfg: &PipelineConfig,
    method: LocalizeMethod,
) -> Result<Segmentation> {
    segment_impl(image, cfg, method, false).map(|(seg, _)| seg)
}

/// Like [`segment`], also returning the numbered stage images.
pub fn segment_with_stages(
    image: &GrayImage,
    cfg: &PipelineConfig,
    method: LocalizeMethod,
) -> Result<(Segmentation, StageImages)> {
    segment_impl(image, cfg, method, true)
        .map(|(seg, stages)| (seg, stages.expect("stages requested")))
}

fn segment_impl(
    image: &GrayImage,
    cfg: &PipelineConfig,
    method: LocalizeMethod,
    want_stages: bool,
) -> Result<(Segmentation, Option<StageImages>)> {
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

    let pupil = match method {
        LocalizeMethod::Hough => {
            match hough_circle(&edge_map, &grads, cfg.pupil_r_min, cfg.pupil_r_max) {
                Ok((circle, _)) => circle,
                Err(Error::NoEdges) => {
                    return Err(Error::PupilNotFound(
                        "no boundary edges survive thresholding".into(),
                    ))
                }
                Err(e) => return Err(e),
            }
        }
        LocalizeMethod::Idop => {
            let search = cfg.idop_search_space(image.width(), image.height());
            idop_localize(image, &search, cfg.idop_sigma_r, cfg.limbic_samples)?
        }
    };
    let limbic = localize_limbic(image, pupil, cfg)?;
    let boundaries = Boundaries::new(pupil, limbic)?;
    let pupil_contrast = boundary_contrast(image, &pupil, 10, cfg.limbic_samples);

    let stages = want_stages.then(|| {
        let overlay = draw_boundaries(image, &boundaries);
        StageImages {
            matched,
            blurred,
            threshold_mask: mask.to_gray(0, 255),
            edge_map: edge_map.to_gray(0, 255),
            overlay,
        }
    });
    Ok((
        Segmentation {
            boundaries,
            pupil_contrast,
        },
        stages,
    ))
}

/// Unwraps, noise-masks, and contrast-enhances the iris annulus.
pub fn normalize_iris(
    image: &GrayImage,
    boundaries: &Boundaries,
    cfg: &PipelineConfig,
) -> Result<NormalizedIris> {
    let strip = rubber_sheet(image, boundaries, cfg.strip_rows, cfg.strip_cols)?;
    let masked = build_noise_mask(&strip, cfg.mask_dark, cfg.mask_bright, cfg.mask_edge_high);
    enhance_strip(&masked)
}

/// Full template extraction: segmentation, normalization, encoding.
pub fn extract_template(
    image: &GrayImage,
    cfg: &PipelineConfig,
    method: LocalizeMethod,
) -> Result<(Segmentation, NormalizedIris, IrisCode)> {
    let seg = segment(image, cfg, method)?;
    let strip = normalize_iris(image, &seg.boundaries, cfg)?;
    let code = encode_iris(&strip)?;
    Ok((seg, strip, code))
}

/// Source image with both boundary circles traced at full intensity.
pub fn draw_boundaries(image: &GrayImage, boundaries: &Boundaries) -> GrayImage {
    let mut out = image.clone();
    for circle in [&boundaries.pupil, &boundaries.limbic] {
        draw_circle(&mut out, circle, 255);
    }
    out
}

fn draw_circle(image: &mut GrayImage, circle: &CircleParams, value: u8) {
    let steps = (circle.r * std::f64::consts::TAU).ceil().max(16.0) as usize;
    for k in 0..steps {
        let theta = std::f64::consts::TAU * k as f64 / steps as f64;
        let x = (circle.cx + circle.r * theta.cos()).round();
        let y = (circle.cy + circle.r * theta.sin()).round();
        if x >= 0.0 && y >= 0.0 && (x as usize) < image.width() && (y as usize) < image.height() {
            image.set(x as usize, y as usize, value);
        }
    }
}
