//! Deterministic synthetic-eye renderer with exact ground truth, plus small
//! geometric calibration fixtures. This is the verification oracle the test
//! suites measure the pipeline against.

use crate::edges::GradientField;
use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};
use crate::localize::CircleParams;

/// Full description of a rendered eye. Rendering is a pure function of this
/// struct: same spec, same bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeSpec {
    pub width: usize,
    pub height: usize,
    pub pupil: CircleParams,
    pub limbic_r: f64,
    /// Seed selecting the iris texture; two specs with the same seed are the
    /// same identity.
    pub identity_seed: u64,
    pub sclera_intensity: u8,
    pub iris_intensity: u8,
    pub pupil_intensity: u8,
    /// Texture rotation in radians; after unwrapping this is a pure column
    /// shift.
    pub rotation: f64,
    pub noise_sigma: f64,
    pub eyelash_count: u32,
    pub specular: Option<Specular>,
}

/// Optional specular highlight blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Specular {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub intensity: u8,
}

impl EyeSpec {
    /// Canonical eye at the default geometry and palette.
    pub fn with_seed(identity_seed: u64) -> Self {
        Self {
            width: 320,
            height: 280,
            pupil: CircleParams::new(160.0, 140.0, 45.0),
            limbic_r: 110.0,
            identity_seed,
            sclera_intensity: 200,
            iris_intensity: 120,
            pupil_intensity: 30,
            rotation: 0.0,
            noise_sigma: 0.0,
            eyelash_count: 0,
            specular: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::SpecInvalid(format!(
                "image {}x{} too small",
                self.width, self.height
            )));
        }
        if !self.pupil.r.is_finite() || self.pupil.r <= 0.0 {
            return Err(Error::SpecInvalid("pupil radius must be positive".into()));
        }
        if self.pupil.r >= self.limbic_r {
            return Err(Error::SpecInvalid(format!(
                "pupil radius {} must be smaller than limbic radius {}",
                self.pupil.r, self.limbic_r
            )));
        }
        if self.limbic_r >= self.width.min(self.height) as f64 / 2.0 {
            return Err(Error::SpecInvalid(format!(
                "limbic radius {} exceeds half the smaller image dimension",
                self.limbic_r
            )));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::SpecInvalid("noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// What was actually rendered: true circles, identity, rotation, and the
/// per-pixel clutter (eyelash/specular) mask.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub pupil: CircleParams,
    pub limbic: CircleParams,
    pub identity_seed: u64,
    pub rotation: f64,
    pub clutter: BinaryImage,
}

/// Single-field perturbation of a spec; the identity seed is always kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Adds to the pupil radius (pixels).
    Dilation(f64),
    /// Adds to the texture rotation (radians).
    Rotation(f64),
    /// Sets the noise sigma.
    Noise(f64),
    /// Sets the eyelash count.
    Clutter(u32),
}

/// Returns a copy of `spec` with one field perturbed, validating the result.
pub fn perturb(spec: &EyeSpec, p: Perturbation) -> Result<EyeSpec> {
    let mut out = spec.clone();
    match p {
        Perturbation::Dilation(dr) => out.pupil.r += dr,
        Perturbation::Rotation(dtheta) => out.rotation += dtheta,
        Perturbation::Noise(sigma) => out.noise_sigma = sigma,
        Perturbation::Clutter(count) => out.eyelash_count = count,
    }
    out.validate()?;
    Ok(out)
}

// --- counter-based generator -------------------------------------------------
//
// value(seed, counter) is a pure function, so sampling order never affects
// the output. Counters are namespaced to keep texture parameters, pixel
// noise, and lash geometry independent streams.

const NS_TEXTURE: u64 = 1;
const NS_NOISE: u64 = 2;
const NS_LASH: u64 = 3;

fn mix(seed: u64, namespace: u64, counter: u64) -> u64 {
    let mut z = seed
        ^ namespace.wrapping_mul(0xA24B_AED4_963E_E407)
        ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(seed: u64, namespace: u64, counter: u64) -> f64 {
    (mix(seed, namespace, counter) >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal via Box-Muller on two counter-derived uniforms.
fn normal(seed: u64, namespace: u64, counter: u64) -> f64 {
    let u1 = uniform(seed, namespace, counter.wrapping_mul(2)).max(f64::MIN_POSITIVE);
    let u2 = uniform(seed, namespace, counter.wrapping_mul(2).wrapping_add(1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// One band-limited iris texture harmonic.
struct Harmonic {
    amplitude: f64,
    f_theta: f64,
    phase_theta: f64,
    f_rho: f64,
    phase_rho: f64,
}

const HARMONICS: usize = 8;

fn texture_harmonics(seed: u64) -> Vec<Harmonic> {
    (0..HARMONICS as u64)
        .map(|k| Harmonic {
            amplitude: 5.0 + 8.0 * uniform(seed, NS_TEXTURE, 5 * k),
            // Integer angular frequency keeps the texture continuous across
            // the theta wrap.
            f_theta: (2.0 + (uniform(seed, NS_TEXTURE, 5 * k + 1) * 23.0).floor()).min(24.0),
            phase_theta: std::f64::consts::TAU * uniform(seed, NS_TEXTURE, 5 * k + 2),
            f_rho: 1.0
                + (uniform(seed, NS_TEXTURE, 5 * k + 3) * 6.0)
                    .floor()
                    .min(5.0),
            phase_rho: std::f64::consts::TAU * uniform(seed, NS_TEXTURE, 5 * k + 4),
        })
        .collect()
}

/// Texture fades out near both annulus boundaries so the pupil and limbic
/// transitions stay clean; the fade lives in normalized coordinates and so
/// survives dilation.
fn boundary_taper(rho: f64) -> f64 {
    let edge = |t: f64| {
        let t = (t / 0.15).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    edge(rho) * edge(1.0 - rho)
}

fn texture_value(harmonics: &[Harmonic], theta: f64, rho: f64) -> f64 {
    boundary_taper(rho)
        * harmonics
            .iter()
            .map(|h| {
                h.amplitude
                    * (h.f_theta * theta + h.phase_theta).sin()
                    * (h.f_rho * std::f64::consts::PI * rho + h.phase_rho).sin()
            })
            .sum::<f64>()
}

/// Renders the eye described by `spec` together with its ground truth.
///
/// The iris texture is a function of the normalized radial coordinate, so a
/// dilated pupil leaves the unwrapped strip (sampled with true circles)
/// nearly unchanged, and `rotation` turns into a pure column shift.
pub fn render_eye(spec: &EyeSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let harmonics = texture_harmonics(spec.identity_seed);
    let (w, h) = (spec.width, spec.height);
    let mut img = GrayImage::new(w, h, spec.sclera_intensity);
    let mut clutter = BinaryImage::new(w, h);

    let band = spec.limbic_r - spec.pupil.r;
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - spec.pupil.cx;
            let dy = y as f64 - spec.pupil.cy;
            let d = dx.hypot(dy);
            let base = if d <= spec.pupil.r {
                spec.pupil_intensity as f64
            } else if d <= spec.limbic_r {
                let theta = dy.atan2(dx);
                let rho = (d - spec.pupil.r) / band;
                spec.iris_intensity as f64 + texture_value(&harmonics, theta - spec.rotation, rho)
            } else {
                spec.sclera_intensity as f64
            };
            let noisy = if spec.noise_sigma > 0.0 {
                base + spec.noise_sigma * normal(spec.identity_seed, NS_NOISE, (y * w + x) as u64)
            } else {
                base
            };
            img.set(x, y, noisy.round().clamp(0.0, 255.0) as u8);
        }
    }

    for lash in 0..spec.eyelash_count {
        draw_eyelash(&mut img, &mut clutter, spec, lash);
    }
    if let Some(s) = spec.specular {
        stamp_blob(&mut img, &mut clutter, s.cx, s.cy, s.r, s.intensity);
    }

    let truth = GroundTruth {
        pupil: spec.pupil,
        limbic: CircleParams::new(spec.pupil.cx, spec.pupil.cy, spec.limbic_r),
        identity_seed: spec.identity_seed,
        rotation: spec.rotation,
        clutter,
    };
    Ok((img, truth))
}

/// Dark anti-aliased curve descending from the top of the image into the
/// upper iris region. Curvature is kept gentle so lash arcs never mimic
/// pupil-scale circles.
fn draw_eyelash(img: &mut GrayImage, clutter: &mut BinaryImage, spec: &EyeSpec, index: u32) {
    let seed = spec.identity_seed;
    let ctr = 16 * index as u64;
    let x0 = spec.pupil.cx + (uniform(seed, NS_LASH, ctr) - 0.5) * 1.8 * spec.limbic_r;
    let bend = (uniform(seed, NS_LASH, ctr + 1) - 0.5) * 50.0;
    let drift = (uniform(seed, NS_LASH, ctr + 2) - 0.5) * 24.0;
    let y_end = spec.pupil.cy - spec.pupil.r * 0.3;
    let thickness = 2.6;
    let darkness = 12u8;

    let steps = (y_end * 2.0) as usize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let y = t * y_end;
        let x = x0 + drift * t + bend * t * t;
        stamp_blob(img, clutter, x, y, thickness / 2.0, darkness);
    }
}

/// Anti-aliased disk stamped toward `value`; coverage above one half is
/// recorded in the clutter mask.
fn stamp_blob(img: &mut GrayImage, clutter: &mut BinaryImage, cx: f64, cy: f64, r: f64, value: u8) {
    let x_lo = (cx - r - 1.0).floor().max(0.0) as usize;
    let x_hi = (cx + r + 1.0).ceil().min(img.width() as f64 - 1.0) as usize;
    let y_lo = (cy - r - 1.0).floor().max(0.0) as usize;
    let y_hi = (cy + r + 1.0).ceil().min(img.height() as f64 - 1.0) as usize;
    if x_lo > x_hi || y_lo > y_hi {
        return;
    }
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let d = (x as f64 - cx).hypot(y as f64 - cy);
            let coverage = (r + 0.5 - d).clamp(0.0, 1.0);
            if coverage == 0.0 {
                continue;
            }
            let old = img.get(x, y) as f64;
            let blended = old + coverage * (value as f64 - old);
            img.set(x, y, blended.round().clamp(0.0, 255.0) as u8);
            // Only mostly-covered pixels count as clutter; the thin
            // anti-aliased fringe keeps most of its background value.
            if coverage >= 0.85 {
                clutter.set(x, y, true);
            }
        }
    }
}

// --- geometric calibration fixtures ------------------------------------------

/// Filled disk of `inner` intensity on a `background` field.
pub fn render_disk(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    r: f64,
    inner: u8,
    background: u8,
) -> GrayImage {
    let mut img = GrayImage::new(width, height, background);
    for y in 0..height {
        for x in 0..width {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                img.set(x, y, inner);
            }
        }
    }
    img
}

/// Two-tone bullseye: `inner` disk to `r_inner`, `mid` ring to `r_outer`,
/// `outer` field beyond.
#[allow(clippy::too_many_arguments)]
pub fn render_bullseye(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    r_inner: f64,
    r_outer: f64,
    inner: u8,
    mid: u8,
    outer: u8,
) -> GrayImage {
    let mut img = GrayImage::new(width, height, outer);
    for y in 0..height {
        for x in 0..width {
            let d = (x as f64 - cx).hypot(y as f64 - cy);
            if d <= r_inner {
                img.set(x, y, inner);
            } else if d <= r_outer {
                img.set(x, y, mid);
            }
        }
    }
    img
}

/// Annulus whose intensity rises linearly with distance from the inner
/// radius: `base + slope * (d - r_inner)` inside the band.
#[allow(clippy::too_many_arguments)]
pub fn render_annulus_ramp(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    r_inner: f64,
    r_outer: f64,
    base: f64,
    slope: f64,
) -> GrayImage {
    let mut img = GrayImage::new(width, height, 0);
    for y in 0..height {
        for x in 0..width {
            let d = (x as f64 - cx).hypot(y as f64 - cy);
            if d > r_inner && d <= r_outer {
                let v = base + slope * (d - r_inner);
                img.set(x, y, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    img
}

/// Mid-gray annulus with one bright radial spoke centered on `spoke_theta`
/// (radians, measured toward positive y).
#[allow(clippy::too_many_arguments)]
pub fn render_annulus_spoke(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    r_inner: f64,
    r_outer: f64,
    spoke_theta: f64,
    spoke_half_width: f64,
) -> GrayImage {
    let mut img = GrayImage::new(width, height, 0);
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let d = dx.hypot(dy);
            if d > r_inner && d <= r_outer {
                let theta = dy.atan2(dx);
                let mut delta = (theta - spoke_theta).rem_euclid(std::f64::consts::TAU);
                if delta > std::f64::consts::PI {
                    delta -= std::f64::consts::TAU;
                }
                img.set(
                    x,
                    y,
                    if delta.abs() <= spoke_half_width {
                        240
                    } else {
                        100
                    },
                );
            }
        }
    }
    img
}

/// One-pixel-thick rasterized circle edge map plus the exact radial gradient
/// field, for exercising Hough voting without detector noise.
pub fn ring_edge_fixture(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    r: f64,
) -> (BinaryImage, GradientField) {
    let mut edges = BinaryImage::new(width, height);
    let mut gx = vec![0.0; width * height];
    let mut gy = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let d = dx.hypot(dy);
            if (d - r).abs() <= 0.5 && d > 0.0 {
                edges.set(x, y, true);
                gx[y * width + x] = dx / d;
                gy[y * width + x] = dy / d;
            }
        }
    }
    let grads = GradientField::from_components(width, height, gx, gy);
    (edges, grads)
}
