use std::path::{Path, PathBuf};
use std::process::Command;

use imgorder::cli::{run, EXIT_BATCH_FAILURES, EXIT_CONTRACT, EXIT_DECODE, EXIT_IO, EXIT_OK};
use imgorder::ingest::{decode_grayscale, encode_pgm, ImageFormat, PixelGrid};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn imgorder(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("imgorder").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_pgm(dir: &Path, name: &str, grid: &PixelGrid) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, encode_pgm(grid)).unwrap();
    p
}

fn gradient(w: usize, h: usize) -> PixelGrid {
    PixelGrid::new(w, h, (0..w * h).map(|i| (i * 37 % 251) as u8).collect()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compare_self_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(8, 8));
    let o = imgorder(&["compare", s(&a), s(&a)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(o.stdout, "OCY(headline, gray/mass/first): 0.0\n");
}

#[test]
fn compare_strict_size_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(10, 10));
    let b = write_pgm(dir.path(), "b.pgm", &gradient(12, 12));
    let o = imgorder(&["compare", s(&a), s(&b)]);
    assert_eq!(o.code, EXIT_CONTRACT);
    assert!(o.stderr.contains("10x10") && o.stderr.contains("12x12"), "{}", o.stderr);

    let o = imgorder(&["compare", s(&a), s(&b), "--lenient"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
}

#[test]
fn compare_mode_filter() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(6, 6));
    let b = write_pgm(dir.path(), "b.pgm", &PixelGrid::filled(6, 6, 90).unwrap());
    let o = imgorder(&[
        "compare",
        s(&a),
        s(&b),
        "--modes",
        "gray:mass:first,gray:mass:second",
        "--format",
        "json",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 32);
    assert_eq!(entries.iter().filter(|e| e["skipped"] == false).count(), 2);
    assert_eq!(v["image_a"]["path"], s(&a));
    assert_eq!(v["strict"], true);
}

#[test]
fn compare_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(6, 6));
    let b = write_pgm(dir.path(), "b.pgm", &PixelGrid::filled(6, 6, 90).unwrap());
    let out = dir.path().join("r.csv");
    let o = imgorder(&["compare", s(&a), s(&b), "--format", "csv", "--out", s(&out), "--epsilon", "1e-6"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.starts_with("OCY(headline, gray/mass/first): "));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(!csv.contains("inf"), "smoothing keeps every KL finite");
}

#[test]
fn compare_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(4, 4));
    assert_eq!(imgorder(&["compare", s(&a), s(&a), "--epsilon", "-1"]).code, EXIT_CONTRACT);
    assert_eq!(imgorder(&["compare", s(&a), s(&a), "--modes", "gray:mass:third"]).code, EXIT_CONTRACT);
    assert_eq!(imgorder(&["compare", s(&a), s(&a), "--strict", "--lenient"]).code, EXIT_CONTRACT);
    assert_eq!(imgorder(&["frobnicate"]).code, EXIT_CONTRACT);
    assert_eq!(imgorder(&["--help"]).code, EXIT_OK);
}

#[test]
fn compare_io_and_decode_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(4, 4));
    let missing = dir.path().join("nope.pgm");
    assert_eq!(imgorder(&["compare", s(&a), s(&missing)]).code, EXIT_IO);

    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"\x89PNG\r\n\x1a\nnot really").unwrap();
    assert_eq!(imgorder(&["compare", s(&a), s(&junk)]).code, EXIT_DECODE);

    let deep = dir.path().join("deep.pgm");
    std::fs::write(&deep, b"P5\n1 1\n65535\n\x00\x00").unwrap();
    let o = imgorder(&["compare", s(&a), s(&deep)]);
    assert_eq!(o.code, EXIT_DECODE);
    assert!(o.stderr.contains("bit depth"));
}

fn manifest(dir: &Path, rows: &[(&str, &str)]) -> PathBuf {
    let mut text = String::from("path_a,path_b\n");
    for (a, b) in rows {
        text.push_str(&format!("{a},{b}\n"));
    }
    let p = dir.join("manifest.csv");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn batch_self_pairs() {
    let dir = tempfile::tempdir().unwrap();
    for (i, n) in [4, 5, 6].iter().enumerate() {
        write_pgm(dir.path(), &format!("g{i}.pgm"), &gradient(*n, *n));
    }
    let m = manifest(dir.path(), &[("g0.pgm", "g0.pgm"), ("g1.pgm", "g1.pgm"), ("g2.pgm", "g2.pgm")]);
    let reports = dir.path().join("reports");
    let o = imgorder(&["batch", s(&m), "--report-dir", s(&reports)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(&r[0], (i + 1).to_string());
        assert_eq!(&r[3], "ok");
        assert_eq!(&r[4], "0.0");
    }
    for i in 1..=3 {
        assert!(reports.join(format!("pair_{i:04}.json")).exists());
    }
}

#[test]
fn batch_records_failures() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(dir.path(), "g.pgm", &gradient(4, 4));
    let m = manifest(dir.path(), &[("g.pgm", "g.pgm"), ("g.pgm", "missing.pgm"), ("g.pgm", "g.pgm")]);
    let out = dir.path().join("agg.csv");
    let o = imgorder(&["batch", s(&m), "--out", s(&out)]);
    assert_eq!(o.code, EXIT_BATCH_FAILURES);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains(",ok,"));
    assert!(rows[1].contains(",error,") && rows[1].contains("missing.pgm"));
    assert!(rows[2].contains(",ok,"));
}

#[test]
fn batch_empty_and_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), &[]);
    let o = imgorder(&["batch", s(&m)]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.stdout.lines().count(), 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "left,right\na,b\n").unwrap();
    assert_eq!(imgorder(&["batch", s(&bad)]).code, EXIT_DECODE);
    std::fs::write(&bad, "path_a,path_b\nonly-one\n").unwrap();
    assert_eq!(imgorder(&["batch", s(&bad)]).code, EXIT_DECODE);
    assert_eq!(imgorder(&["batch", s(&dir.path().join("absent.csv"))]).code, EXIT_IO);
}

#[test]
fn hist_dump() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_pgm(dir.path(), "a.pgm", &PixelGrid::from_rows(&[[0u8, 0], [255, 255]]).unwrap());
    let out = dir.path().join("h.csv");
    let o = imgorder(&["hist", s(&img), "--feature", "gray", "--out", s(&out)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin_index,bin_level,mass");
    assert_eq!(lines.len(), 257);
    assert_eq!(lines[1], "0,0.000000,0.5");
    assert_eq!(lines[256], "255,255.000000,0.5");

    // boustrophedon: 0,0,255,255 -> diffs 0,255,0; row-major: 0,0,255,255 as well here
    let o = imgorder(&["hist", s(&img), "--feature", "diff", "--traversal", "rowmajor"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.stdout.lines().count(), 512);
    assert!(o.stdout.contains("\n255,0.000000,0.666666667\n"));

    assert_eq!(imgorder(&["hist", s(&img), "--feature", "hue"]).code, EXIT_CONTRACT);
    let one = write_pgm(dir.path(), "one.pgm", &PixelGrid::filled(1, 1, 3).unwrap());
    assert_eq!(imgorder(&["hist", s(&one), "--feature", "ratio"]).code, EXIT_CONTRACT);
}

#[test]
fn baseline_writes_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("noise.pgm");
    let args = ["baseline", "--kind", "noise", "--width", "16", "--height", "8", "--seed", "42", "--out", s(&out)];
    assert_eq!(imgorder(&args).code, EXIT_OK);
    let first = std::fs::read(&out).unwrap();
    assert_eq!(imgorder(&args).code, EXIT_OK);
    assert_eq!(first, std::fs::read(&out).unwrap());
    let g = decode_grayscale(&first, ImageFormat::Pgm).unwrap();
    assert_eq!((g.width(), g.height()), (16, 8));

    let black = dir.path().join("black.pgm");
    let o = imgorder(&["baseline", "--kind", "black", "--width", "3", "--height", "2", "--out", s(&black)]);
    assert_eq!(o.code, EXIT_OK);
    let g = decode_grayscale(&std::fs::read(&black).unwrap(), ImageFormat::Pgm).unwrap();
    assert!(g.values().iter().all(|&v| v == 0));

    let o = imgorder(&["baseline", "--kind", "black", "--width", "3", "--height", "2", "--level", "300", "--out", s(&black)]);
    assert_eq!(o.code, EXIT_CONTRACT);
}

#[test]
fn absolute_against_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let checker = PixelGrid::new(16, 16, (0..256).map(|i| if (i / 16 + i % 16) % 2 == 0 { 0 } else { 255 }).collect()).unwrap();
    let img = write_pgm(dir.path(), "c.pgm", &checker);
    let o = imgorder(&["absolute", s(&img), "--kind", "black"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.starts_with("absolute(constant 0, gray/mass/first): -0.693147181\n"), "{}", o.stdout);

    let o = imgorder(&["absolute", s(&img), "--ideal-noise"]);
    assert_eq!(o.code, EXIT_OK);
    // ln 256 - ln 2
    assert!(o.stdout.starts_with("absolute(ideal-noise, gray/mass/first): 4.85203026\n"), "{}", o.stdout);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a.pgm", &gradient(10, 10));
    let b = write_pgm(dir.path(), "b.pgm", &gradient(12, 12));
    let bin = env!("CARGO_BIN_EXE_imgorder");
    let ok = Command::new(bin).args(["compare", s(&a), s(&a)]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "OCY(headline, gray/mass/first): 0.0\n");
    let bad = Command::new(bin).args(["compare", s(&a), s(&b)]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONTRACT));
}
