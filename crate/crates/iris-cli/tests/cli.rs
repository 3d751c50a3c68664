//! Binary-level tests: flag surface, output formats, and the exit-code
//! contract (0 success/accept, 1 reject, 2+ error).

use std::path::Path;
use std::process::{Command, Output};

fn iris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iris"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> (String, String) {
    let img = dir.join(name).to_string_lossy().into_owned();
    let truth = dir
        .join(format!("{name}.txt"))
        .to_string_lossy()
        .into_owned();
    let mut args = vec!["synth", "--out", &img, "--truth", &truth];
    args.extend_from_slice(extra);
    let out = iris(&args);
    assert!(out.status.success(), "synth failed: {out:?}");
    (img, truth)
}

/// `pupil cx cy r` / `limbic cx cy r` lines as (cx, cy, r) triples.
fn parse_circles(text: &str) -> (Vec<f64>, Vec<f64>) {
    let grab = |name: &str| -> Vec<f64> {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap_or_else(|| panic!("missing {name} line in: {text}"))
            .split_whitespace()
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect()
    };
    (grab("pupil"), grab("limbic"))
}

#[test]
fn segment_matches_sidecar_truth() {
    let dir = tempfile::tempdir().unwrap();
    let (img, truth) = synth(dir.path(), "eye.pgm", &["--seed", "11", "--noise", "6"]);

    let out = iris(&["segment", &img]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let (pupil, limbic) = parse_circles(&text);
    let truth_text = std::fs::read_to_string(&truth).unwrap();
    let (tp, tl) = parse_circles(&truth_text);

    for (got, want) in pupil.iter().zip(&tp) {
        assert!((got - want).abs() <= 2.0, "pupil {pupil:?} vs {tp:?}");
    }
    assert!(
        (limbic[2] - tl[2]).abs() <= 4.0,
        "limbic {limbic:?} vs {tl:?}"
    );
    assert!(text
        .lines()
        .any(|l| l.starts_with("pupil_boundary_contrast ")));
    let elapsed: f64 = text
        .lines()
        .find(|l| l.starts_with("elapsed_seconds "))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(elapsed > 0.0);
}

#[test]
fn segment_idop_same_output_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = synth(dir.path(), "eye.pgm", &["--seed", "12"]);
    let out = iris(&["segment", &img, "--method", "idop"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    parse_circles(&text);
    assert!(text.lines().any(|l| l.starts_with("elapsed_seconds ")));
}

#[test]
fn segment_emits_numbered_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = synth(dir.path(), "eye.pgm", &["--seed", "13"]);
    let stages = dir.path().join("stages");
    let out = iris(&[
        "segment",
        &img,
        "--emit-stages",
        "--out-dir",
        &stages.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for name in [
        "01_matched.pgm",
        "02_blur.pgm",
        "03_thresh.pgm",
        "04_edges.pgm",
        "05_boundaries_overlay.pgm",
        "06_strip.pgm",
        "07_mask.pgm",
    ] {
        let path = stages.join(name);
        assert!(path.exists(), "missing stage {name}");
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], b"P5", "{name} is not binary PGM");
    }
}

#[test]
fn segment_missing_file_is_exit_2() {
    let out = iris(&["segment", "/nonexistent/eye.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn enroll_verify_identify_flow() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("store.irdb").to_string_lossy().into_owned();
    let (a0, _) = synth(dir.path(), "a0.pgm", &["--seed", "70", "--noise", "5"]);
    let (a1, _) = synth(
        dir.path(),
        "a1.pgm",
        &[
            "--seed",
            "70",
            "--noise",
            "6",
            "--dilation",
            "5",
            "--rotation",
            "0.06",
        ],
    );
    let (b0, _) = synth(dir.path(), "b0.pgm", &["--seed", "71", "--noise", "5"]);

    let out = iris(&["enroll", &a0, "--id", "alice", "--db", &db]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out = iris(&["enroll", &b0, "--id", "bob", "--db", &db]);
    assert_eq!(out.status.code(), Some(0));

    // Re-enrolling without --overwrite is an error; with it, success.
    let out = iris(&["enroll", &a0, "--id", "alice", "--db", &db]);
    assert_eq!(out.status.code(), Some(2));
    let out = iris(&["enroll", &a0, "--id", "alice", "--db", &db, "--overwrite"]);
    assert_eq!(out.status.code(), Some(0));

    // Genuine probe accepts with exit 0.
    let out = iris(&["verify", &a1, "--id", "alice", "--db", &db]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.starts_with("hd="), "got: {text}");
    assert!(text.contains("decision=accept"));

    // Imposter probe rejects with exit 1.
    let out = iris(&["verify", &b0, "--id", "alice", "--db", &db]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("decision=reject"));

    // Unknown subject is an error.
    let out = iris(&["verify", &a1, "--id", "carol", "--db", &db]);
    assert_eq!(out.status.code(), Some(2));

    // Identification ranks the true identity first.
    let out = iris(&["identify", &a1, "--db", &db]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("alice "), "rank-1: {first}");
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn identify_closed_set_rank1() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("store.irdb").to_string_lossy().into_owned();
    for i in 0..10 {
        let (img, _) = synth(
            dir.path(),
            &format!("s{i}.pgm"),
            &["--seed", &(200 + i).to_string(), "--noise", "4"],
        );
        let out = iris(&["enroll", &img, "--id", &format!("subject-{i}"), "--db", &db]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (probe, _) = synth(
        dir.path(),
        "probe.pgm",
        &["--seed", "203", "--noise", "6", "--rotation=-0.04"],
    );
    let out = iris(&["identify", &probe, "--db", &db]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("subject-3 "));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn eval_writes_roc_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut genuine_lines = String::new();
    let mut imposter_lines = String::new();
    for i in 0..4u32 {
        let (a, _) = synth(
            dir.path(),
            &format!("g{i}a.pgm"),
            &["--seed", &(400 + i).to_string(), "--noise", "4"],
        );
        let (b, _) = synth(
            dir.path(),
            &format!("g{i}b.pgm"),
            &[
                "--seed",
                &(400 + i).to_string(),
                "--noise",
                "6",
                "--dilation",
                "4",
            ],
        );
        genuine_lines.push_str(&format!("{a} {b}\n"));
        let (c, _) = synth(
            dir.path(),
            &format!("i{i}.pgm"),
            &["--seed", &(500 + i).to_string(), "--noise", "4"],
        );
        imposter_lines.push_str(&format!("{c} {a}\n"));
    }
    let gen_list = dir.path().join("genuine.lst");
    let imp_list = dir.path().join("imposter.lst");
    std::fs::write(&gen_list, format!("# genuine pairs\n{genuine_lines}")).unwrap();
    std::fs::write(&imp_list, &imposter_lines).unwrap();
    let csv = dir.path().join("roc.csv");
    let gen_scores = dir.path().join("genuine_scores.txt");
    let imp_scores = dir.path().join("imposter_scores.txt");

    let out = iris(&[
        "eval",
        "--genuine",
        &gen_list.to_string_lossy(),
        "--imposter",
        &imp_list.to_string_lossy(),
        "--out",
        &csv.to_string_lossy(),
        "--genuine-scores-out",
        &gen_scores.to_string_lossy(),
        "--imposter-scores-out",
        &imp_scores.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "threshold,far,frr");
    assert_eq!(lines.len(), 52, "50 threshold rows + header + dprime");
    let dprime_line = lines[51];
    assert!(dprime_line.starts_with("# dprime="));
    let dprime: f64 = dprime_line.trim_start_matches("# dprime=").parse().unwrap();
    assert!(dprime > 0.0, "separable data should give positive dprime");

    // Raw score lists: one parseable score per line, genuine below imposter.
    let parse_scores = |path: &std::path::Path| -> Vec<f64> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect()
    };
    let genuine_scores = parse_scores(&gen_scores);
    let imposter_scores = parse_scores(&imp_scores);
    assert_eq!(genuine_scores.len(), 4);
    assert_eq!(imposter_scores.len(), 4);
    let max_gen = genuine_scores.iter().cloned().fold(0.0f64, f64::max);
    let min_imp = imposter_scores.iter().cloned().fold(1.0f64, f64::min);
    assert!(
        max_gen < min_imp,
        "genuine {max_gen} should score below imposter {min_imp}"
    );
}

#[test]
fn eval_empty_lists_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.lst");
    std::fs::write(&empty, "# nothing\n").unwrap();
    let csv = dir.path().join("roc.csv");
    let out = iris(&[
        "eval",
        "--genuine",
        &empty.to_string_lossy(),
        "--imposter",
        &empty.to_string_lossy(),
        "--out",
        &csv.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_invalid_radii_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("bad.pgm").to_string_lossy().into_owned();
    let out = iris(&["synth", "--seed", "1", "--out", &img, "--dilation", "200"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_truth_records_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let (_, truth) = synth(
        dir.path(),
        "rot.pgm",
        &["--seed", "5", "--rotation", "0.098175"],
    );
    let text = std::fs::read_to_string(&truth).unwrap();
    assert!(text.lines().any(|l| l == "rotation 0.098175"), "{text}");
    assert!(text.lines().any(|l| l == "seed 5"));
}

#[test]
fn print_config_lists_effective_values() {
    let out = iris(&["--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("match_threshold = 0.35"));
    assert!(text.contains("shift_set = -16,-12,-8,-4,0,4,8,12,16"));
    assert!(text.contains("reference_image = builtin-bimodal"));

    // A config file override shows up in the effective values.
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("pipeline.conf");
    std::fs::write(&conf, "match_threshold = 0.3\n").unwrap();
    let out = iris(&["--config", &conf.to_string_lossy(), "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("match_threshold = 0.3"));

    // Unknown keys are rejected.
    std::fs::write(&conf, "bogus_key = 1\n").unwrap();
    let out = iris(&["--config", &conf.to_string_lossy(), "--print-config"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_command_is_error() {
    let out = iris(&[]);
    assert_eq!(out.status.code(), Some(2));
}
