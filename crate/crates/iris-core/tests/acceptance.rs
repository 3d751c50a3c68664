//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N: PASS` line with its measured numbers (run with
//! `--nocapture` to see them). Thresholds are fixed here, not tuned at run
//! time.

use std::time::Instant;

use iris_core::config::PipelineConfig;
use iris_core::encode::{encode_iris, haar_dwt2, haar_idwt2, CoefficientMatrix, CODE_BYTES};
use iris_core::encode::{CodeMeta, IrisCode};
use iris_core::image::{load_pgm, save_pgm};
use iris_core::localize::{hough_circle, Boundaries};
use iris_core::matching::{decidability, hamming_distance, match_with_shifts};
use iris_core::normalize::{rubber_sheet, NormalizedIris};
use iris_core::pipeline::{extract_template, segment, LocalizeMethod};
use iris_core::synth::{perturb, render_eye, ring_edge_fixture, EyeSpec, Perturbation};

/// Counter-based pseudo-random stream for harness parameters.
fn mix(seed: u64, k: u64) -> f64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Criterion 1: segmentation accuracy on 200 synthetic eyes (seeds 0..=199,
/// noise sigma 8, dilation within +/-10 px, 30% with eyelashes). Pupil
/// center and radius within 2 px in at least 95% of cases, limbic radius
/// within 4 px in at least 90%, whole sweep under five minutes.
#[test]
fn criterion_1_segmentation_success() {
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let n = 200u64;
    let mut pupil_ok = 0u32;
    let mut limbic_ok = 0u32;
    for seed in 0..n {
        let mut spec = EyeSpec::with_seed(seed);
        spec.noise_sigma = 8.0;
        spec.pupil.r += (mix(seed, 1) - 0.5) * 20.0;
        if seed % 10 < 3 {
            spec.eyelash_count = 6;
        }
        let (img, truth) = render_eye(&spec).expect("criterion 1: render");
        if let Ok(seg) = segment(&img, &cfg, LocalizeMethod::Hough) {
            let p = seg.boundaries.pupil;
            if (p.cx - truth.pupil.cx).abs() <= 2.0
                && (p.cy - truth.pupil.cy).abs() <= 2.0
                && (p.r - truth.pupil.r).abs() <= 2.0
            {
                pupil_ok += 1;
            }
            if (seg.boundaries.limbic.r - truth.limbic.r).abs() <= 4.0 {
                limbic_ok += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pupil_rate = pupil_ok as f64 / n as f64;
    let limbic_rate = limbic_ok as f64 / n as f64;
    assert!(
        pupil_rate >= 0.95,
        "criterion 1 FAIL: pupil rate {pupil_rate:.3} < 0.95"
    );
    assert!(
        limbic_rate >= 0.90,
        "criterion 1 FAIL: limbic rate {limbic_rate:.3} < 0.90"
    );
    assert!(
        elapsed.as_secs() < 300,
        "criterion 1 FAIL: sweep took {elapsed:?}"
    );
    println!(
        "criterion 1 (segmentation success): PASS — pupil {pupil_ok}/{n}, limbic {limbic_ok}/{n}, {elapsed:?}"
    );
}

/// Optional companion to criterion 1, exercised only when a real capture is
/// available locally: point `IRIS_REGRESSION_IMAGE` at the PGM whose known
/// segmentation is `IRIS_REGRESSION_CIRCLE=cx,cy,r` (for example
/// `162.5236,135.7025,56.2638`) and the detected pupil must land within 3 px
/// of it. Without the environment variables the test reports a skip.
#[test]
fn criterion_1_optional_dataset_regression() {
    let (Ok(image_path), Ok(circle)) = (
        std::env::var("IRIS_REGRESSION_IMAGE"),
        std::env::var("IRIS_REGRESSION_CIRCLE"),
    ) else {
        println!(
            "criterion 1 (optional dataset regression): SKIPPED — IRIS_REGRESSION_IMAGE not set"
        );
        return;
    };
    let want: Vec<f64> = circle
        .split(',')
        .map(|v| v.trim().parse().expect("IRIS_REGRESSION_CIRCLE is cx,cy,r"))
        .collect();
    assert_eq!(want.len(), 3, "IRIS_REGRESSION_CIRCLE must be cx,cy,r");

    let cfg = PipelineConfig::default();
    let img = load_pgm(&image_path).expect("regression image loads");
    let seg = segment(&img, &cfg, LocalizeMethod::Hough).expect("regression image segments");
    let p = seg.boundaries.pupil;
    assert!(
        (p.cx - want[0]).abs() <= 3.0
            && (p.cy - want[1]).abs() <= 3.0
            && (p.r - want[2]).abs() <= 3.0,
        "criterion 1 FAIL: detected ({:.4}, {:.4}, {:.4}) vs expected ({}, {}, {})",
        p.cx,
        p.cy,
        p.r,
        want[0],
        want[1],
        want[2]
    );
    println!(
        "criterion 1 (optional dataset regression): PASS — ({:.4}, {:.4}, {:.4})",
        p.cx, p.cy, p.r
    );
}

/// Criterion 2: full pipeline (file load through code emission) at or under
/// one second per 320x280 image, median over 20 images.
#[test]
fn criterion_2_throughput() {
    let cfg = PipelineConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for seed in 0..20u64 {
        let mut spec = EyeSpec::with_seed(3000 + seed);
        spec.noise_sigma = 6.0;
        let (img, _) = render_eye(&spec).unwrap();
        assert_eq!((img.width(), img.height()), (320, 280));
        let path = dir.path().join(format!("eye{seed}.pgm"));
        save_pgm(&img, &path).unwrap();
        paths.push(path);
    }
    let mut times: Vec<f64> = paths
        .iter()
        .map(|p| {
            let t = Instant::now();
            let img = load_pgm(p).unwrap();
            extract_template(&img, &cfg, LocalizeMethod::Hough).unwrap();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    assert!(
        median <= 1.0,
        "criterion 2 FAIL: median {median:.3}s > 1.0s"
    );
    println!("criterion 2 (throughput): PASS — median {median:.4}s per image");
}

/// Independent matrix-product oracle for the multilevel transform.
fn haar_matrix(n: usize) -> Vec<Vec<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n / 2 {
        m[i][2 * i] = s;
        m[i][2 * i + 1] = s;
        m[n / 2 + i][2 * i] = s;
        m[n / 2 + i][2 * i + 1] = -s;
    }
    m
}

fn oracle_dwt(m: &CoefficientMatrix, levels: usize) -> Vec<Vec<f64>> {
    let mut grid: Vec<Vec<f64>> = (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
        .collect();
    let (mut rows, mut cols) = (m.rows(), m.cols());
    for _ in 0..levels {
        let hr = haar_matrix(rows);
        let hc = haar_matrix(cols);
        // tmp = M * Hc^T over the active top-left block
        let mut tmp = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                tmp[i][j] = (0..cols).map(|k| grid[i][k] * hc[j][k]).sum();
            }
        }
        for i in 0..rows {
            for j in 0..cols {
                grid[i][j] = (0..rows).map(|k| hr[i][k] * tmp[k][j]).sum();
            }
        }
        rows /= 2;
        cols /= 2;
    }
    grid
}

fn random_matrix(rows: usize, cols: usize, state: &mut u64) -> CoefficientMatrix {
    let values = (0..rows * cols)
        .map(|_| (splitmix(state) >> 11) as f64 / (1u64 << 53) as f64 * 255.0)
        .collect();
    CoefficientMatrix::from_values(rows, cols, values)
}

/// Criterion 3: exact analysis/synthesis over 100 random 64x512 matrices —
/// round trip within 1e-9 absolute, Parseval within 1e-6 relative, forward
/// transform within 1e-9 of the explicit matrix-product oracle.
#[test]
fn criterion_3_haar_correctness() {
    let mut state = 0x5EEDu64;
    let mut max_round_trip = 0.0f64;
    let mut max_parseval = 0.0f64;
    let mut max_oracle = 0.0f64;
    for _ in 0..100 {
        let m = random_matrix(64, 512, &mut state);
        let s = haar_dwt2(&m, 3).unwrap();

        let back = haar_idwt2(&s).unwrap();
        let rt = back
            .values()
            .iter()
            .zip(m.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_round_trip = max_round_trip.max(rt);

        let parseval = (s.energy() - m.energy()).abs() / m.energy();
        max_parseval = max_parseval.max(parseval);

        let grid = oracle_dwt(&m, 3);
        let mut check = |band: &CoefficientMatrix, row0: usize, col0: usize| {
            for r in 0..band.rows() {
                for c in 0..band.cols() {
                    let diff = (band.get(r, c) - grid[row0 + r][col0 + c]).abs();
                    max_oracle = max_oracle.max(diff);
                }
            }
        };
        check(&s.approx, 0, 0);
        for (k, bands) in s.details.iter().enumerate() {
            let (hr, hc) = (64 >> (k + 1), 512 >> (k + 1));
            check(&bands.detail_x, 0, hc);
            check(&bands.detail_y, hr, 0);
            check(&bands.detail_xy, hr, hc);
        }
    }
    assert!(
        max_round_trip <= 1e-9,
        "criterion 3 FAIL: round trip {max_round_trip:e}"
    );
    assert!(
        max_parseval <= 1e-6,
        "criterion 3 FAIL: Parseval {max_parseval:e}"
    );
    assert!(
        max_oracle <= 1e-9,
        "criterion 3 FAIL: oracle mismatch {max_oracle:e}"
    );
    println!(
        "criterion 3 (Haar correctness): PASS — round trip {max_round_trip:.2e}, Parseval {max_parseval:.2e}, oracle {max_oracle:.2e}"
    );
}

/// Criterion 4: coefficients that are exactly 0.0 encode as bit 1, with no
/// tolerance. The strip repeats every 16 columns with equal halves, which
/// cancels every level-3 detail coefficient exactly.
#[test]
fn criterion_4_zero_bit_rule() {
    let mut values = vec![0u8; 64 * 512];
    for row in 0..64 {
        for col in 0..512 {
            values[row * 512 + col] = 100 + 50 * ((col / 16 % 2) as u8);
        }
    }
    let strip = NormalizedIris::from_parts(64, 512, values.clone(), vec![true; 64 * 512]);

    // The engineered coefficients really are exact zeros.
    let m = CoefficientMatrix::from_values(64, 512, values.iter().map(|&v| v as f64).collect());
    let s = haar_dwt2(&m, 3).unwrap();
    let bands = &s.details[2];
    let mut zero_count = 0;
    for band in [&bands.detail_x, &bands.detail_y, &bands.detail_xy] {
        for &v in band.values() {
            assert_eq!(v, 0.0, "criterion 4 FAIL: engineered coefficient not 0.0");
            zero_count += 1;
        }
    }
    assert_eq!(zero_count, 3 * 512);

    let code = encode_iris(&strip).unwrap();
    for i in 512..2048 {
        assert!(
            code.bit(i),
            "criterion 4 FAIL: zero coefficient bit {i} is 0"
        );
    }
    // Constant strip: every coefficient (details and centered approximation)
    // is exactly zero, so all 2048 bits must be 1.
    let constant = NormalizedIris::from_parts(64, 512, vec![77; 64 * 512], vec![true; 64 * 512]);
    let code = encode_iris(&constant).unwrap();
    assert!(
        code.bit_bytes().iter().all(|&b| b == 0xFF),
        "criterion 4 FAIL: constant strip code has zero bits"
    );
    println!("criterion 4 (zero-is-one bit rule): PASS — {zero_count} exact-zero detail coefficients all encoded 1");
}

/// Criterion 5: separation on 300 genuine and 300 imposter pairs through
/// the full pipeline: mean genuine min-shift HD below 0.20, mean imposter
/// above 0.40, decidability at least 3.0, FAR at threshold 0.35 at most 1%,
/// FRR at most 5%. Genuine pairs that cannot be scored count as rejections.
#[test]
fn criterion_5_matching_statistics() {
    let cfg = PipelineConfig::default();
    let params = cfg.match_params();

    let mut genuine = Vec::new();
    let mut genuine_rejects = 0u32;
    let total_genuine = 300u32;
    for i in 0..total_genuine as u64 {
        let seed = 5000 + i;
        let mut base = EyeSpec::with_seed(seed);
        base.noise_sigma = 6.0;
        let mut alt = base.clone();
        alt = perturb(&alt, Perturbation::Noise(2.0 + 5.0 * mix(seed, 2))).unwrap();
        alt = perturb(&alt, Perturbation::Dilation((mix(seed, 3) - 0.5) * 16.0)).unwrap();
        let cols = ((mix(seed, 4) - 0.5) * 16.0).round(); // at most 8 columns
        alt = perturb(
            &alt,
            Perturbation::Rotation(std::f64::consts::TAU * cols / 512.0),
        )
        .unwrap();

        let (img_a, _) = render_eye(&base).unwrap();
        let (img_b, _) = render_eye(&alt).unwrap();
        let scored =
            extract_template(&img_a, &cfg, LocalizeMethod::Hough).and_then(|(_, _, code_a)| {
                extract_template(&img_b, &cfg, LocalizeMethod::Hough)
                    .and_then(|(_, strip_b, _)| match_with_shifts(&strip_b, &code_a, &params))
            });
        match scored {
            Ok(result) => genuine.push(result.hd),
            Err(_) => genuine_rejects += 1,
        }
    }

    let pool: Vec<_> = (0..100u64)
        .map(|i| {
            let mut spec = EyeSpec::with_seed(9000 + i);
            spec.noise_sigma = 6.0;
            let (img, _) = render_eye(&spec).unwrap();
            extract_template(&img, &cfg, LocalizeMethod::Hough).unwrap()
        })
        .collect();
    let mut imposter = Vec::new();
    let mut k = 0u64;
    'outer: for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            k += 1;
            if !k.is_multiple_of(16) {
                continue;
            }
            if let Ok(result) = match_with_shifts(&pool[j].1, &pool[i].2, &params) {
                imposter.push(result.hd);
            }
            if imposter.len() == 300 {
                break 'outer;
            }
        }
    }
    assert_eq!(
        imposter.len(),
        300,
        "criterion 5 FAIL: imposter pool shortfall"
    );

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let genuine_mean = mean(&genuine);
    let imposter_mean = mean(&imposter);
    let dprime = decidability(&genuine, &imposter);
    let far = imposter.iter().filter(|&&s| s <= 0.35).count() as f64 / imposter.len() as f64;
    let frr = (genuine.iter().filter(|&&s| s > 0.35).count() as u32 + genuine_rejects) as f64
        / total_genuine as f64;

    assert!(
        genuine_mean < 0.20,
        "criterion 5 FAIL: mean genuine HD {genuine_mean:.4}"
    );
    assert!(
        imposter_mean > 0.40,
        "criterion 5 FAIL: mean imposter HD {imposter_mean:.4}"
    );
    assert!(dprime >= 3.0, "criterion 5 FAIL: dprime {dprime:.3}");
    assert!(far <= 0.01, "criterion 5 FAIL: FAR(0.35) {far:.4}");
    assert!(frr <= 0.05, "criterion 5 FAIL: FRR(0.35) {frr:.4}");
    println!(
        "criterion 5 (matching statistics): PASS — genuine {genuine_mean:.4}, imposter {imposter_mean:.4}, dprime {dprime:.2}, FAR {far:.4}, FRR {frr:.4}"
    );
}

/// Criterion 6: 1000 independent uniform-random full-mask code pairs score
/// a mean HD of 0.5 within 0.02, and every single pair stays within 0.07 of
/// 0.5.
#[test]
fn criterion_6_random_code_baseline() {
    let mut state = 0xBA5Eu64;
    let mut random_code = || {
        let mut bits = [0u8; CODE_BYTES];
        for b in &mut bits {
            *b = splitmix(&mut state) as u8;
        }
        IrisCode::from_planes(bits, [0xFF; CODE_BYTES], CodeMeta::default())
    };
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    let n = 1000;
    for _ in 0..n {
        let a = random_code();
        let b = random_code();
        let (hd, usable) = hamming_distance(&a, &b, 512).unwrap();
        assert_eq!(usable, 2048);
        sum += hd;
        worst = worst.max((hd - 0.5).abs());
        assert!(
            (hd - 0.5).abs() <= 0.07,
            "criterion 6 FAIL: pair HD {hd:.4} outside 0.5 +/- 0.07"
        );
    }
    let mean = sum / n as f64;
    assert!(
        (mean - 0.5).abs() <= 0.02,
        "criterion 6 FAIL: mean {mean:.4} outside 0.5 +/- 0.02"
    );
    println!(
        "criterion 6 (random-code baseline): PASS — mean {mean:.4}, worst deviation {worst:.4}"
    );
}

/// Criterion 7 (pipeline half): rendering and the full template extraction
/// are byte-reproducible run to run, including PGM serialization. The
/// command-line half lives in the CLI crate's acceptance suite.
#[test]
fn criterion_7_pipeline_determinism() {
    let cfg = PipelineConfig::default();
    let mut spec = EyeSpec::with_seed(77);
    spec.noise_sigma = 7.0;
    spec.eyelash_count = 5;

    let dir = tempfile::tempdir().unwrap();
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let (img, _) = render_eye(&spec).unwrap();
        let path = dir.path().join(format!("run{run}.pgm"));
        save_pgm(&img, &path).unwrap();
        let loaded = load_pgm(&path).unwrap();
        let (seg, strip, code) = extract_template(&loaded, &cfg, LocalizeMethod::Hough).unwrap();
        artifacts.push((
            std::fs::read(&path).unwrap(),
            seg.boundaries,
            strip,
            *code.bit_bytes(),
            *code.mask_bytes(),
        ));
    }
    assert_eq!(
        artifacts[0].0, artifacts[1].0,
        "criterion 7 FAIL: image bytes differ"
    );
    assert_eq!(
        artifacts[0].1, artifacts[1].1,
        "criterion 7 FAIL: boundaries differ"
    );
    assert_eq!(
        artifacts[0].2, artifacts[1].2,
        "criterion 7 FAIL: strips differ"
    );
    assert_eq!(
        artifacts[0].3, artifacts[1].3,
        "criterion 7 FAIL: code bits differ"
    );
    assert_eq!(
        artifacts[0].4, artifacts[1].4,
        "criterion 7 FAIL: code masks differ"
    );
    println!("criterion 7 (pipeline determinism): PASS — render, strip, and code bytes identical across runs");
}

/// Criterion 8a: positive-gain affine intensity changes leave every code
/// bit unchanged, over 20 randomized strips.
#[test]
fn criterion_8a_affine_gain_invariance() {
    let mut state = 0xAFF1u64;
    for instance in 0..20 {
        let mut values = vec![0u8; 64 * 512];
        let mut mask = vec![true; 64 * 512];
        for i in 0..values.len() {
            let r = splitmix(&mut state);
            values[i] = (r % 81) as u8;
            mask[i] = !r.is_multiple_of(13);
        }
        let gain = 2 + (splitmix(&mut state) % 2) as u8; // 2 or 3
        let offset = (splitmix(&mut state) % 10) as u8;
        let strip = NormalizedIris::from_parts(64, 512, values.clone(), mask.clone());
        let rescaled = NormalizedIris::from_parts(
            64,
            512,
            values.iter().map(|&v| gain * v + offset).collect(),
            mask,
        );
        let a = encode_iris(&strip).unwrap();
        let b = encode_iris(&rescaled).unwrap();
        assert_eq!(
            a.bit_bytes(),
            b.bit_bytes(),
            "criterion 8a FAIL: instance {instance}, gain {gain}, offset {offset}"
        );
        assert_eq!(a.mask_bytes(), b.mask_bytes());
    }
    println!("criterion 8a (affine-gain code invariance): PASS — 20 randomized strips");
}

/// Criterion 8b: integer translations of the edge content move the detected
/// Hough circle by exactly the same offset, over 20 randomized instances.
#[test]
fn criterion_8b_hough_translation_equivariance() {
    let mut state = 0x80B5u64;
    for instance in 0..20 {
        let r = 8.0 + (splitmix(&mut state) % 9) as f64; // 8..=16
        let cx = 24.0 + (splitmix(&mut state) % 8) as f64;
        let cy = 24.0 + (splitmix(&mut state) % 8) as f64;
        let dx = (splitmix(&mut state) % 12) as f64;
        let dy = (splitmix(&mut state) % 10) as f64;

        let (edges, grads) = ring_edge_fixture(80, 80, cx, cy, r);
        let (base, _) = hough_circle(&edges, &grads, 5, 20).unwrap();
        let (shifted_edges, shifted_grads) = ring_edge_fixture(80, 80, cx + dx, cy + dy, r);
        let (moved, _) = hough_circle(&shifted_edges, &shifted_grads, 5, 20).unwrap();

        assert_eq!(
            (moved.cx - base.cx, moved.cy - base.cy, moved.r),
            (dx, dy, base.r),
            "criterion 8b FAIL: instance {instance}"
        );
    }
    println!("criterion 8b (Hough translation equivariance): PASS — 20 randomized instances");
}

/// Criterion 8c: rotating the rendered iris by whole-column angles turns
/// into a circular column shift of the unwrapped strip, within 2 intensity
/// levels on interior rows, over 20 randomized instances.
#[test]
fn criterion_8c_rotation_shift_theorem() {
    let mut state = 0x5817u64;
    for instance in 0..20 {
        let seed = 40_000 + instance as u64;
        let k = (splitmix(&mut state) % 101) as i64 - 50; // -50..=50 columns
        let delta = std::f64::consts::TAU * k as f64 / 512.0;

        let base_spec = EyeSpec::with_seed(seed);
        let mut rot_spec = base_spec.clone();
        rot_spec.rotation = delta;
        let (img_a, ta) = render_eye(&base_spec).unwrap();
        let (img_b, tb) = render_eye(&rot_spec).unwrap();
        let ba = Boundaries::new(ta.pupil, ta.limbic).unwrap();
        let bb = Boundaries::new(tb.pupil, tb.limbic).unwrap();
        let strip_a = rubber_sheet(&img_a, &ba, 64, 512).unwrap();
        let strip_b = rubber_sheet(&img_b, &bb, 64, 512).unwrap();
        let shifted = strip_a.shifted_columns(k as i32);

        for row in 2..62 {
            for col in 0..512 {
                let a = shifted.value(row, col) as i32;
                let b = strip_b.value(row, col) as i32;
                assert!(
                    (a - b).abs() <= 2,
                    "criterion 8c FAIL: instance {instance}, k {k}, row {row}, col {col}: {a} vs {b}"
                );
            }
        }
    }
    println!("criterion 8c (rotation shift theorem): PASS — 20 randomized instances");
}
