//! Pipeline configuration: every tunable default in one place, plain-text
//! `key = value` overrides, and the built-in bimodal reference histogram.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{compute_histogram, GrayImage, Histogram};
use crate::localize::SearchSpace;
use crate::matching::MatchParams;

/// Where the reference histogram for histogram matching came from; the
/// histogram itself rides along.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    Builtin,
    Image(String),
}

/// All pipeline parameters with their defaults. Field names double as the
/// config-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Pre-processing blur.
    pub blur_sigma: f64,
    pub blur_kernel: usize,
    /// Dark threshold isolating the pupil after histogram matching.
    pub pupil_threshold: u8,
    /// Canny ratios and smoothing for the pupil edge map.
    pub canny_low: f64,
    pub canny_high: f64,
    pub canny_sigma: f64,
    /// Pupil radius search range (pixels).
    pub pupil_r_min: u32,
    pub pupil_r_max: u32,
    /// Limbic scan: start gap beyond the pupil radius, radial step, maximum
    /// extent beyond the pupil radius, samples per circle, and optional
    /// restriction to the lateral sectors.
    pub limbic_r_gap: u32,
    pub limbic_step: u32,
    pub limbic_r_extent: u32,
    pub limbic_samples: u32,
    pub limbic_lateral_only: bool,
    /// Normalized strip dimensions.
    pub strip_rows: usize,
    pub strip_cols: usize,
    /// Noise-mask thresholds.
    pub mask_dark: u8,
    pub mask_bright: u8,
    pub mask_edge_high: f64,
    /// Rotation-compensation shift set (strip columns, multiples of 4).
    pub shift_set: Vec<i32>,
    /// Accept threshold and minimum mask overlap for matching.
    pub match_threshold: f64,
    pub min_overlap: u32,
    /// Alternative localizer: radial smoothing sigma and half-width of the
    /// center search window around the image center.
    pub idop_sigma_r: f64,
    pub idop_window: u32,
    /// Reference histogram for histogram matching.
    pub reference: Histogram,
    pub reference_source: ReferenceSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 2.0,
            blur_kernel: 5,
            pupil_threshold: 70,
            canny_low: 0.05,
            canny_high: 0.15,
            canny_sigma: 1.4,
            pupil_r_min: 20,
            pupil_r_max: 90,
            limbic_r_gap: 10,
            limbic_step: 2,
            limbic_r_extent: 130,
            limbic_samples: 360,
            limbic_lateral_only: false,
            strip_rows: 64,
            strip_cols: 512,
            mask_dark: 50,
            mask_bright: 245,
            mask_edge_high: 0.35,
            shift_set: (-4..=4).map(|k| 4 * k).collect(),
            match_threshold: 0.35,
            min_overlap: 512,
            idop_sigma_r: 1.5,
            idop_window: 32,
            reference: bimodal_reference(),
            reference_source: ReferenceSource::Builtin,
        }
    }
}

/// The canonical synthetic bi-modal reference histogram: a small dark bump
/// (weight 0.15, mean 30, sigma 10) for the pupil mass and a broad bright
/// bump (weight 0.85, mean 170, sigma 30), discretized to 256 bins and
/// scaled to one million counts.
pub fn bimodal_reference() -> Histogram {
    let density = |g: f64| -> f64 {
        let bump = |mean: f64, sigma: f64| {
            (-((g - mean) * (g - mean)) / (2.0 * sigma * sigma)).exp() / sigma
        };
        0.15 * bump(30.0, 10.0) + 0.85 * bump(170.0, 30.0)
    };
    let raw: Vec<f64> = (0..256).map(|g| density(g as f64)).collect();
    let norm: f64 = raw.iter().sum();
    let mut counts = [0u64; 256];
    for (g, &p) in raw.iter().enumerate() {
        counts[g] = (1_000_000.0 * p / norm).round() as u64;
    }
    Histogram::from_counts(counts)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.blur_sigma.is_finite() || self.blur_sigma <= 0.0 {
            return fail(format!("blur_sigma {} must be positive", self.blur_sigma));
        }
        if self.blur_kernel < 3 || self.blur_kernel.is_multiple_of(2) {
            return fail(format!(
                "blur_kernel {} must be odd and >= 3",
                self.blur_kernel
            ));
        }
        if !(0.0 < self.canny_low && self.canny_low < self.canny_high && self.canny_high <= 1.0) {
            return fail(format!(
                "canny ratios ({}, {}) must satisfy 0 < low < high <= 1",
                self.canny_low, self.canny_high
            ));
        }
        if !self.canny_sigma.is_finite() || self.canny_sigma <= 0.0 {
            return fail(format!("canny_sigma {} must be positive", self.canny_sigma));
        }
        if self.pupil_r_min == 0 || self.pupil_r_min >= self.pupil_r_max {
            return fail(format!(
                "pupil radius range [{}, {}] is empty",
                self.pupil_r_min, self.pupil_r_max
            ));
        }
        if self.limbic_step == 0 || self.limbic_samples < 8 {
            return fail("limbic_step must be > 0 and limbic_samples >= 8".into());
        }
        if self.limbic_r_gap == 0 || self.limbic_r_extent <= self.limbic_r_gap {
            return fail(format!(
                "limbic scan range [{}, {}] is empty",
                self.limbic_r_gap, self.limbic_r_extent
            ));
        }
        if !self.strip_rows.is_multiple_of(8) || !self.strip_cols.is_multiple_of(8) {
            return fail(format!(
                "strip dims {}x{} must be divisible by 8",
                self.strip_rows, self.strip_cols
            ));
        }
        if (self.strip_rows / 8) * (self.strip_cols / 8) * 4 != crate::encode::CODE_BITS {
            return fail(format!(
                "strip dims {}x{} do not produce a 2048-bit code",
                self.strip_rows, self.strip_cols
            ));
        }
        if self.mask_dark >= self.mask_bright {
            return fail(format!(
                "mask_dark {} must be below mask_bright {}",
                self.mask_dark, self.mask_bright
            ));
        }
        if !(0.0 < self.mask_edge_high && self.mask_edge_high <= 1.0) {
            return fail(format!(
                "mask_edge_high {} must be in (0, 1]",
                self.mask_edge_high
            ));
        }
        if self.shift_set.is_empty()
            || self
                .shift_set
                .iter()
                .any(|&s| s % 4 != 0 || s.unsigned_abs() as usize >= self.strip_cols)
        {
            return fail("shift_set must be non-empty multiples of 4 within the strip".into());
        }
        if !(0.0 < self.match_threshold && self.match_threshold <= 1.0) {
            return fail(format!(
                "match_threshold {} must be in (0, 1]",
                self.match_threshold
            ));
        }
        if self.min_overlap == 0 || self.min_overlap as usize > crate::encode::CODE_BITS {
            return fail(format!("min_overlap {} out of range", self.min_overlap));
        }
        if !self.idop_sigma_r.is_finite() || self.idop_sigma_r <= 0.0 || self.idop_window == 0 {
            return fail("idop_sigma_r must be positive and idop_window non-zero".into());
        }
        if self.reference.total() == 0 {
            return fail("reference histogram is empty".into());
        }
        Ok(())
    }

    /// Loads `key = value` overrides from a config file. `#` starts a
    /// comment; unknown keys are rejected.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(&path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 1)))?;
        }
        self.validate()
    }

    /// Applies a single override.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| Error::InvalidConfig(format!("{key}: bad value '{value}': {e}")))
        }
        match key {
            "blur_sigma" => self.blur_sigma = parse(key, value)?,
            "blur_kernel" => self.blur_kernel = parse(key, value)?,
            "pupil_threshold" => self.pupil_threshold = parse(key, value)?,
            "canny_low" => self.canny_low = parse(key, value)?,
            "canny_high" => self.canny_high = parse(key, value)?,
            "canny_sigma" => self.canny_sigma = parse(key, value)?,
            "pupil_r_min" => self.pupil_r_min = parse(key, value)?,
            "pupil_r_max" => self.pupil_r_max = parse(key, value)?,
            "limbic_r_gap" => self.limbic_r_gap = parse(key, value)?,
            "limbic_step" => self.limbic_step = parse(key, value)?,
            "limbic_r_extent" => self.limbic_r_extent = parse(key, value)?,
            "limbic_samples" => self.limbic_samples = parse(key, value)?,
            "limbic_lateral_only" => self.limbic_lateral_only = parse(key, value)?,
            "strip_rows" => self.strip_rows = parse(key, value)?,
            "strip_cols" => self.strip_cols = parse(key, value)?,
            "mask_dark" => self.mask_dark = parse(key, value)?,
            "mask_bright" => self.mask_bright = parse(key, value)?,
            "mask_edge_high" => self.mask_edge_high = parse(key, value)?,
            "match_threshold" => self.match_threshold = parse(key, value)?,
            "min_overlap" => self.min_overlap = parse(key, value)?,
            "idop_sigma_r" => self.idop_sigma_r = parse(key, value)?,
            "idop_window" => self.idop_window = parse(key, value)?,
            "shift_set" => {
                let mut shifts = Vec::new();
                for part in value.split(',') {
                    shifts.push(parse::<i32>(key, part.trim())?);
                }
                self.shift_set = shifts;
            }
            "reference_image" => self.set_reference_image(value)?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Replaces the built-in reference histogram with the histogram of a
    /// PGM image.
    pub fn set_reference_image(&mut self, path: &str) -> Result<()> {
        let img = crate::image::load_pgm(path)?;
        self.set_reference(
            compute_histogram(&img),
            ReferenceSource::Image(path.to_string()),
        );
        Ok(())
    }

    pub fn set_reference(&mut self, histogram: Histogram, source: ReferenceSource) {
        self.reference = histogram;
        self.reference_source = source;
    }

    /// Every effective value, one `key = value` line per setting.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let shift_set = self
            .shift_set
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let reference = match &self.reference_source {
            ReferenceSource::Builtin => "builtin-bimodal".to_string(),
            ReferenceSource::Image(path) => path.clone(),
        };
        let _ = writeln!(out, "blur_sigma = {}", self.blur_sigma);
        let _ = writeln!(out, "blur_kernel = {}", self.blur_kernel);
        let _ = writeln!(out, "pupil_threshold = {}", self.pupil_threshold);
        let _ = writeln!(out, "canny_low = {}", self.canny_low);
        let _ = writeln!(out, "canny_high = {}", self.canny_high);
        let _ = writeln!(out, "canny_sigma = {}", self.canny_sigma);
        let _ = writeln!(out, "pupil_r_min = {}", self.pupil_r_min);
        let _ = writeln!(out, "pupil_r_max = {}", self.pupil_r_max);
        let _ = writeln!(out, "limbic_r_gap = {}", self.limbic_r_gap);
        let _ = writeln!(out, "limbic_step = {}", self.limbic_step);
        let _ = writeln!(out, "limbic_r_extent = {}", self.limbic_r_extent);
        let _ = writeln!(out, "limbic_samples = {}", self.limbic_samples);
        let _ = writeln!(out, "limbic_lateral_only = {}", self.limbic_lateral_only);
        let _ = writeln!(out, "strip_rows = {}", self.strip_rows);
        let _ = writeln!(out, "strip_cols = {}", self.strip_cols);
        let _ = writeln!(out, "mask_dark = {}", self.mask_dark);
        let _ = writeln!(out, "mask_bright = {}", self.mask_bright);
        let _ = writeln!(out, "mask_edge_high = {}", self.mask_edge_high);
        let _ = writeln!(out, "shift_set = {shift_set}");
        let _ = writeln!(out, "match_threshold = {}", self.match_threshold);
        let _ = writeln!(out, "min_overlap = {}", self.min_overlap);
        let _ = writeln!(out, "idop_sigma_r = {}", self.idop_sigma_r);
        let _ = writeln!(out, "idop_window = {}", self.idop_window);
        let _ = writeln!(out, "reference_image = {reference}");
        out
    }

    /// Matching parameters bundled for the matching module.
    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            shifts: self.shift_set.clone(),
            threshold: self.match_threshold,
            min_overlap: self.min_overlap,
        }
    }

    /// Center window around the image center for the alternative localizer.
    pub fn idop_search_space(&self, width: usize, height: usize) -> SearchSpace {
        let (cx, cy) = (width as i64 / 2, height as i64 / 2);
        let w = self.idop_window as i64;
        SearchSpace {
            cx_min: (cx - w).max(0),
            cx_max: (cx + w).min(width as i64 - 1),
            cy_min: (cy - w).max(0),
            cy_max: (cy + w).min(height as i64 - 1),
            r_min: self.pupil_r_min,
            r_max: self.pupil_r_max,
        }
    }
}

/// Computes the histogram of an arbitrary image as a reference.
pub fn reference_from_image(image: &GrayImage) -> Histogram {
    compute_histogram(image)
}
