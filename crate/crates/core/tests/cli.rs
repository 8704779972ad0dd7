use std::path::Path;
use std::process::{Command, Output};

use kurtdecon::io::dump::{parse_kernel, parse_taps};
use kurtdecon::io::{read_pgm, read_wav};
use kurtdecon::metrics::normalize_taps;

fn kurtdecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kurtdecon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(kurtdecon(&[]).status.code(), Some(1));
    assert_eq!(kurtdecon(&["deconv", "--bogus"]).status.code(), Some(1));
    assert_eq!(kurtdecon(&["--help"]).status.code(), Some(0));
    assert_eq!(kurtdecon(&["--version"]).status.code(), Some(0));
}

#[test]
fn malformed_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.wav");
    std::fs::write(&bad, b"RIFF\0\0\0\0WAVEjunk").unwrap();
    let out = dir.path().join("o.wav");
    let o = kurtdecon(&["deconv", "-i", p(&bad), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let ascii = dir.path().join("a.pgm");
    std::fs::write(&ascii, b"P2\n1 1\n255\n0\n").unwrap();
    assert_eq!(kurtdecon(&["whiten", "-i", p(&ascii), "-o", p(&dir.path().join("b.pgm"))]).status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("div.cfg");
    std::fs::write(
        &cfg,
        "id = div\nsource.length = 5000\nsource.seed = 2\nadapt.mu = 1e30\nadapt.normalize = false\nadapt.passes = 3\n",
    )
    .unwrap();
    let o = kurtdecon(&["experiment", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("adapt: adaptation diverged"));
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("x.cfg");
    std::fs::write(&cfg, "id = x\nsource.length = 100\n").unwrap();
    let o = kurtdecon(&["experiment", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("source.seed"));
}

#[test]
fn degrade_then_deconv_recovers_ar2_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, dirty, restored, filt) =
        (dir.path().join("s.wav"), dir.path().join("x.wav"), dir.path().join("r.wav"), dir.path().join("h.txt"));
    let o = kurtdecon(&[
        "degrade",
        "--length",
        "100000",
        "--seed",
        "4",
        "--kind",
        "ar2_iir",
        "--a1",
        "0.6",
        "--a2",
        "-0.3",
        "-o",
        p(&dirty),
        "--source-out",
        p(&clean),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("seed 4"));
    let x = read_wav(&dirty).unwrap();
    let peak = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 0.99).abs() < 1e-3, "peak {peak}");

    let o = kurtdecon(&["deconv", "-i", p(&dirty), "-o", p(&restored), "--filter", p(&filt), "--passes", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("seed = none"));
    let h = parse_taps(&std::fs::read_to_string(&filt).unwrap()).unwrap();
    let t = normalize_taps(h.taps()).unwrap();
    assert!((t[1] + 0.6).abs() < 0.1 && (t[2] - 0.3).abs() < 0.1, "{t:?}");

    let o = kurtdecon(&["metrics", p(&clean), p(&restored), "--max-lag", "3"]);
    assert!(o.status.success());
    let line = stdout(&o).lines().find(|l| l.starts_with("rho_aligned")).unwrap().to_string();
    let rho: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(rho > 0.95, "{line}");
}

#[test]
fn image_pipeline_writes_kernel_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let (dirty, restored, kern, white) =
        (dir.path().join("g.pgm"), dir.path().join("r.pgm"), dir.path().join("k.txt"), dir.path().join("w.pgm"));
    let o = kurtdecon(&[
        "degrade",
        "--dist",
        "uniform",
        "--size",
        "96",
        "80",
        "--color",
        "1",
        "--seed",
        "3",
        "--kind",
        "image_iir2",
        "--a1",
        "0.5",
        "--a2",
        "0.4",
        "-o",
        p(&dirty),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = read_pgm(&dirty).unwrap();
    assert_eq!((g.height(), g.width()), (96, 80));
    let o = kurtdecon(&["whiten", "-i", p(&dirty), "-o", p(&white)]);
    assert!(o.status.success());
    let o = kurtdecon(&[
        "deconv",
        "-i",
        p(&dirty),
        "-o",
        p(&restored),
        "--filter",
        p(&kern),
        "--whiten",
        "highpass",
        "--margin",
        "8",
        "--passes",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let k = parse_kernel(&std::fs::read_to_string(&kern).unwrap()).unwrap();
    assert_eq!((k.rows(), k.cols()), (3, 3));
    assert_eq!(read_pgm(&restored).unwrap().height(), 96);
}

#[test]
fn sweep_writes_surface() {
    let dir = tempfile::tempdir().unwrap();
    let (x, csv) = (dir.path().join("x.wav"), dir.path().join("s.csv"));
    kurtdecon(&["degrade", "--length", "20000", "--kind", "ar2_iir", "--a1", "0.5", "--a2", "0.4", "-o", p(&x)]);
    let o = kurtdecon(&["sweep", "-i", p(&x), "--points", "21", "-o", p(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 21 * 21);
    assert!(stdout(&o).contains("argmax"));
}

#[test]
fn experiment_prints_resolved_config_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.cfg");
    std::fs::write(&cfg, "id = n\nsource.length = 4000\nsource.seed = 8\n").unwrap();
    let o = kurtdecon(&["experiment", p(&cfg), "--set", "adapt.passes=2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("source.seed = 8"));
    assert!(out.contains("adapt.passes = 2"));
    assert!(out.contains(kurtdecon::experiment::CSV_HEADER));
}
