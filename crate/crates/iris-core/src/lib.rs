//! Iris recognition pipeline built from classical image-processing stages:
//!
//! 1. **image** – PGM I/O, histogram statistics and matching, Gaussian
//!    smoothing, dark-region thresholding.
//! 2. **edges** – Sobel gradients and the Canny operator.
//! 3. **localize** – pupillary boundary via circular Hough voting, limbic
//!    boundary via concentric-circle intensity differencing, plus a
//!    radial-derivative operator as an alternative localizer.
//! 4. **normalize** – rubber-sheet unwrapping to a fixed polar strip, noise
//!    masking, contrast enhancement.
//! 5. **encode** – 3-level 2-D Haar decomposition and the 2048-bit
//!    sign-based iris code.
//! 6. **matching** – masked fractional Hamming distance with rotation
//!    compensation, template storage, verification/identification, and
//!    FAR/FRR evaluation.
//! 7. **synth** – deterministic synthetic-eye renderer with exact ground
//!    truth, the oracle the test suites measure against.
//!
//! `pipeline` wires the stages together and `config` holds every tunable
//! default.

pub mod config;
pub mod edges;
pub mod encode;
pub mod error;
pub mod image;
pub mod localize;
pub mod matching;
pub mod normalize;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use encode::IrisCode;
pub use error::{Error, Result};
pub use image::{BinaryImage, GrayImage, Histogram};
pub use localize::{Boundaries, CircleParams};
pub use matching::{MatchParams, MatchResult, TemplateRecord};
pub use normalize::NormalizedIris;
pub use pipeline::{extract_template, segment, LocalizeMethod};
