//! Command-line front end for the iris pipeline.
//!
//! Exit codes: 0 on success (or an accept decision), 1 on a reject
//! decision, 2 or higher on any error.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use iris_core::config::PipelineConfig;
use iris_core::error::{Error, Result};
use iris_core::image::{load_pgm, save_pgm, GrayImage};
use iris_core::localize::CircleParams;
use iris_core::matching::{self, Decision, MatchResult, TemplateRecord};
use iris_core::pipeline::{self, LocalizeMethod};
use iris_core::synth::{perturb, render_eye, EyeSpec, Perturbation, Specular};

#[derive(Parser)]
#[command(
    name = "iris",
    version,
    about = "Iris recognition pipeline: segmentation, encoding, matching",
    after_help = "Exit codes: 0 success/accept, 1 reject, 2+ error."
)]
struct Cli {
    /// Plain-text `key = value` config file overriding built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// PGM image whose histogram replaces the built-in reference.
    #[arg(long, global = true, value_name = "PGM")]
    reference: Option<PathBuf>,

    /// Print every effective config value and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Circular Hough transform on the thresholded edge map.
    Cht,
    /// Radial-derivative operator over a center search window.
    Idop,
}

impl From<Method> for LocalizeMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Cht => LocalizeMethod::Hough,
            Method::Idop => LocalizeMethod::Idop,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Localize the pupillary and limbic boundaries of one image.
    Segment {
        /// Input PGM image.
        input: PathBuf,
        /// Directory for stage dumps.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Write numbered PGMs for every pipeline stage.
        #[arg(long)]
        emit_stages: bool,
        #[arg(long, value_enum, default_value_t = Method::Cht)]
        method: Method,
    },
    /// Extract a template and store it under a subject id.
    Enroll {
        input: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        db: PathBuf,
        /// Replace an existing record with the same id.
        #[arg(long)]
        overwrite: bool,
        #[arg(long, value_enum, default_value_t = Method::Cht)]
        method: Method,
    },
    /// Match an image against one enrolled subject.
    Verify {
        input: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        db: PathBuf,
        /// Accept threshold (overrides config).
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Method::Cht)]
        method: Method,
    },
    /// Rank every enrolled subject against an image.
    Identify {
        input: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Method::Cht)]
        method: Method,
    },
    /// Score genuine and imposter image-pair lists and emit a FAR/FRR CSV.
    Eval {
        /// File of genuine pairs, one `probe gallery` path pair per line.
        #[arg(long)]
        genuine: PathBuf,
        /// File of imposter pairs, same format.
        #[arg(long)]
        imposter: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write raw genuine scores, one per line.
        #[arg(long, value_name = "FILE")]
        genuine_scores_out: Option<PathBuf>,
        /// Also write raw imposter scores, one per line.
        #[arg(long, value_name = "FILE")]
        imposter_scores_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Cht)]
        method: Method,
    },
    /// Render a synthetic eye with ground truth.
    Synth {
        #[arg(long)]
        seed: u64,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth sidecar text file.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 280)]
        height: usize,
        /// Added to the default pupil radius (pixels).
        #[arg(long, default_value_t = 0.0)]
        dilation: f64,
        /// Texture rotation (radians).
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
        /// Gaussian pixel noise sigma.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Number of eyelash streaks.
        #[arg(long, default_value_t = 0)]
        eyelashes: u32,
        /// Add a specular highlight blob.
        #[arg(long)]
        specular: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(reference) = &cli.reference {
        cfg.set_reference_image(&reference.to_string_lossy())?;
    }
    cfg.validate()?;

    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(0);
    }

    let Some(command) = cli.command else {
        eprintln!("error: missing command (see --help)");
        return Ok(2);
    };

    match command {
        Command::Segment {
            input,
            out_dir,
            emit_stages,
            method,
        } => cmd_segment(&cfg, &input, &out_dir, emit_stages, method.into()),
        Command::Enroll {
            input,
            id,
            db,
            overwrite,
            method,
        } => cmd_enroll(&cfg, &input, &id, &db, overwrite, method.into()),
        Command::Verify {
            input,
            id,
            db,
            threshold,
            method,
        } => cmd_verify(&cfg, &input, &id, &db, threshold, method.into()),
        Command::Identify {
            input,
            db,
            threshold,
            method,
        } => cmd_identify(&cfg, &input, &db, threshold, method.into()),
        Command::Eval {
            genuine,
            imposter,
            out,
            genuine_scores_out,
            imposter_scores_out,
            method,
        } => cmd_eval(
            &cfg,
            &genuine,
            &imposter,
            &out,
            genuine_scores_out.as_deref(),
            imposter_scores_out.as_deref(),
            method.into(),
        ),
        Command::Synth {
            seed,
            out,
            truth,
            width,
            height,
            dilation,
            rotation,
            noise,
            eyelashes,
            specular,
        } => cmd_synth(
            seed,
            &out,
            truth.as_deref(),
            width,
            height,
            dilation,
            rotation,
            noise,
            eyelashes,
            specular,
        ),
    }
}

fn print_circle(name: &str, c: &CircleParams) {
    println!("{name} {:.4} {:.4} {:.4}", c.cx, c.cy, c.r);
}

fn cmd_segment(
    cfg: &PipelineConfig,
    input: &Path,
    out_dir: &Path,
    emit_stages: bool,
    method: LocalizeMethod,
) -> Result<i32> {
    let start = Instant::now();
    let image = load_pgm(input)?;
    let (seg, strip, _code) = pipeline::extract_template(&image, cfg, method)?;
    let elapsed = start.elapsed().as_secs_f64();

    print_circle("pupil", &seg.boundaries.pupil);
    print_circle("limbic", &seg.boundaries.limbic);
    println!("pupil_boundary_contrast {:.4}", seg.pupil_contrast);
    println!("elapsed_seconds {elapsed:.4}");
    if seg.pupil_contrast < 0.8 {
        eprintln!(
            "warning: pupil boundary contrast {:.4} is below 0.8",
            seg.pupil_contrast
        );
    }

    if emit_stages {
        std::fs::create_dir_all(out_dir)?;
        let (_, stages) = pipeline::segment_with_stages(&image, cfg, method)?;
        let dump =
            |name: &str, img: &GrayImage| -> Result<()> { save_pgm(img, out_dir.join(name)) };
        dump("01_matched.pgm", &stages.matched)?;
        dump("02_blur.pgm", &stages.blurred)?;
        dump("03_thresh.pgm", &stages.threshold_mask)?;
        dump("04_edges.pgm", &stages.edge_map)?;
        dump("05_boundaries_overlay.pgm", &stages.overlay)?;
        dump("06_strip.pgm", &strip.to_gray())?;
        dump("07_mask.pgm", &strip.mask_to_gray())?;
    }
    Ok(0)
}

fn cmd_enroll(
    cfg: &PipelineConfig,
    input: &Path,
    id: &str,
    db: &Path,
    overwrite: bool,
    method: LocalizeMethod,
) -> Result<i32> {
    let image = load_pgm(input)?;
    let (seg, _strip, code) = pipeline::extract_template(&image, cfg, method)?;
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let record = TemplateRecord {
        subject_id: id.to_string(),
        code,
        boundaries: seg.boundaries,
        created_at,
    };
    matching::enroll(db, &record, overwrite)?;
    println!("enrolled {id} (usable_bits={})", record.code.usable_bits());
    Ok(0)
}

fn print_match(result: &MatchResult) {
    println!(
        "hd={:.4} shift={} decision={}",
        result.hd,
        result.best_shift,
        match result.decision {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    );
}

fn cmd_verify(
    cfg: &PipelineConfig,
    input: &Path,
    id: &str,
    db: &Path,
    threshold: Option<f64>,
    method: LocalizeMethod,
) -> Result<i32> {
    let mut params = cfg.match_params();
    if let Some(t) = threshold {
        params.threshold = t;
    }
    let image = load_pgm(input)?;
    let (_, strip, _) = pipeline::extract_template(&image, cfg, method)?;
    let result = matching::verify(db, id, &strip, &params)?;
    print_match(&result);
    Ok(match result.decision {
        Decision::Accept => 0,
        Decision::Reject => 1,
    })
}

fn cmd_identify(
    cfg: &PipelineConfig,
    input: &Path,
    db: &Path,
    threshold: Option<f64>,
    method: LocalizeMethod,
) -> Result<i32> {
    let mut params = cfg.match_params();
    if let Some(t) = threshold {
        params.threshold = t;
    }
    let image = load_pgm(input)?;
    let (_, strip, _) = pipeline::extract_template(&image, cfg, method)?;
    let ranked = matching::identify(db, &strip, &params)?;
    for (id, result) in &ranked {
        println!("{id} {:.4}", result.hd);
    }
    let any_accept = ranked.iter().any(|(_, r)| r.decision == Decision::Accept);
    Ok(if any_accept { 0 } else { 1 })
}

/// One `probe gallery` path pair per line; `#` comments and blank lines are
/// skipped.
fn read_pair_list(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => pairs.push((PathBuf::from(a), PathBuf::from(b))),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: expected two paths per line",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(pairs)
}

fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    let text: String = scores.iter().map(|s| format!("{s:.6}\n")).collect();
    std::fs::write(path, text)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    cfg: &PipelineConfig,
    genuine: &Path,
    imposter: &Path,
    out: &Path,
    genuine_scores_out: Option<&Path>,
    imposter_scores_out: Option<&Path>,
    method: LocalizeMethod,
) -> Result<i32> {
    let params = cfg.match_params();
    let score_list = |list_path: &Path, label: &str| -> Result<Vec<f64>> {
        let pairs = read_pair_list(list_path)?;
        let mut scores = Vec::new();
        for (probe_path, gallery_path) in &pairs {
            let result = (|| -> Result<f64> {
                let probe_img = load_pgm(probe_path)?;
                let gallery_img = load_pgm(gallery_path)?;
                let (_, probe_strip, _) = pipeline::extract_template(&probe_img, cfg, method)?;
                let (_, _, gallery_code) = pipeline::extract_template(&gallery_img, cfg, method)?;
                Ok(matching::match_with_shifts(&probe_strip, &gallery_code, &params)?.hd)
            })();
            match result {
                Ok(hd) => scores.push(hd),
                Err(e) => eprintln!(
                    "warning: skipping {label} pair {} / {}: {e}",
                    probe_path.display(),
                    gallery_path.display()
                ),
            }
        }
        Ok(scores)
    };

    let genuine_scores = score_list(genuine, "genuine")?;
    let imposter_scores = score_list(imposter, "imposter")?;
    let dist = matching::evaluate(genuine_scores, imposter_scores)?;

    let mut csv = Vec::new();
    dist.write_csv(&mut csv)?;
    std::fs::write(out, csv)?;
    if let Some(path) = genuine_scores_out {
        write_scores(path, &dist.genuine)?;
    }
    if let Some(path) = imposter_scores_out {
        write_scores(path, &dist.imposter)?;
    }
    println!(
        "wrote {} (genuine={} imposter={} dprime={:.4})",
        out.display(),
        dist.genuine.len(),
        dist.imposter.len(),
        dist.dprime
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    seed: u64,
    out: &Path,
    truth_out: Option<&Path>,
    width: usize,
    height: usize,
    dilation: f64,
    rotation: f64,
    noise: f64,
    eyelashes: u32,
    specular: bool,
) -> Result<i32> {
    let mut spec = EyeSpec::with_seed(seed);
    spec.width = width;
    spec.height = height;
    spec.pupil = CircleParams::new(width as f64 / 2.0, height as f64 / 2.0, spec.pupil.r);
    if dilation != 0.0 {
        spec = perturb(&spec, Perturbation::Dilation(dilation))?;
    }
    if rotation != 0.0 {
        spec = perturb(&spec, Perturbation::Rotation(rotation))?;
    }
    spec = perturb(&spec, Perturbation::Noise(noise))?;
    spec = perturb(&spec, Perturbation::Clutter(eyelashes))?;
    if specular {
        spec.specular = Some(Specular {
            cx: spec.pupil.cx + 0.45 * spec.limbic_r,
            cy: spec.pupil.cy - 0.35 * spec.limbic_r,
            r: 6.0,
            intensity: 252,
        });
    }

    let (image, truth) = render_eye(&spec)?;
    save_pgm(&image, out)?;
    if let Some(truth_path) = truth_out {
        let text = format!(
            "pupil {:.4} {:.4} {:.4}\nlimbic {:.4} {:.4} {:.4}\nseed {}\nrotation {:.6}\n",
            truth.pupil.cx,
            truth.pupil.cy,
            truth.pupil.r,
            truth.limbic.cx,
            truth.limbic.cy,
            truth.limbic.r,
            truth.identity_seed,
            truth.rotation,
        );
        std::fs::write(truth_path, text)?;
    }
    println!("wrote {}", out.display());
    Ok(0)
}
