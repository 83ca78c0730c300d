mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sdnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdnn"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SDNN_WORKERS")
        .env_remove("SDNN_MODE")
        .output()
        .expect("run sdnn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_idx(path: &Path, count: u32, fill: u8) {
    let mut b = Vec::new();
    for w in [0x803u32, count, 28, 28] {
        b.extend_from_slice(&w.to_be_bytes());
    }
    b.extend(std::iter::repeat_n(fill, (count * 784) as usize));
    fs::write(path, b).unwrap();
}

#[test]
fn generate_rejects_bad_depth_and_width() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdnn(
        &[
            "generate",
            "--neurons",
            "1024",
            "--layers",
            "121",
            "--out",
            "m",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = sdnn(
        &[
            "generate",
            "--neurons",
            "1000",
            "--layers",
            "120",
            "--out",
            "m",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = sdnn(&["generate", "--neurons", "1024"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn generate_custom_radix_and_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdnn(
        &[
            "generate",
            "--neurons",
            "16",
            "--layers",
            "4",
            "--radix",
            "2,2",
            "--kron",
            "4",
            "--bias",
            "-0.5",
            "--weight",
            "0.5",
            "--out",
            "m",
            "--binary",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("connections\t512"));
    let model = sdnn::ingest::load_model(&dir.path().join("m"), None, Some(-0.5)).unwrap();
    assert_eq!(
        (model.neurons(), model.depth(), model.connections()),
        (16, 4, 512)
    );
    assert!(dir.path().join("m/neuron16/n16-l4.bin").exists());
    assert!(dir.path().join("m/neuron16/manifest.json").exists());
}

#[test]
fn preprocess_sizes() {
    let dir = tempfile::tempdir().unwrap();
    write_idx(&dir.path().join("one.idx"), 1, 200);
    let out = sdnn(
        &[
            "preprocess",
            "--mnist",
            "one.idx",
            "--side",
            "64",
            "--out",
            "one.bin",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let m = sdnn::ingest::read_matrix_file(&dir.path().join("one.bin"), None).unwrap();
    assert_eq!((m.n_rows(), m.n_cols(), m.nnz()), (1, 4096, 4096));

    let out = sdnn(
        &[
            "preprocess",
            "--mnist",
            "one.idx",
            "--side",
            "100",
            "--out",
            "x.tsv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);

    fs::write(dir.path().join("bad.idx"), [0u8; 20]).unwrap();
    let out = sdnn(
        &[
            "preprocess",
            "--mnist",
            "bad.idx",
            "--side",
            "32",
            "--out",
            "x.tsv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.idx"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a"), "1\n2\n").unwrap();
    fs::write(p.join("b"), "1\n2\n").unwrap();
    fs::write(p.join("c"), "1\n2\n7\n").unwrap();
    fs::write(p.join("e1"), "").unwrap();
    fs::write(p.join("e2"), "").unwrap();
    fs::write(p.join("bad"), "2\n1\n").unwrap();
    assert_eq!(
        code(&sdnn(&["verify", "--computed", "a", "--truth", "b"], p)),
        0
    );
    let out = sdnn(&["verify", "--computed", "c", "--truth", "a"], p);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("1 false positive"));
    assert_eq!(
        code(&sdnn(&["verify", "--computed", "e1", "--truth", "e2"], p)),
        0
    );
    assert_eq!(
        code(&sdnn(&["verify", "--computed", "bad", "--truth", "a"], p)),
        3
    );
    assert_eq!(
        code(&sdnn(
            &["verify", "--computed", "missing", "--truth", "a"],
            p
        )),
        3
    );
}

#[test]
fn infer_dimension_and_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&sdnn(
            &[
                "generate",
                "--neurons",
                "1024",
                "--layers",
                "6",
                "--out",
                "m"
            ],
            p
        )),
        0
    );
    write_idx(&p.join("imgs.idx"), 2, 255);
    assert_eq!(
        code(&sdnn(
            &[
                "preprocess",
                "--mnist",
                "imgs.idx",
                "--side",
                "64",
                "--out",
                "wide.tsv"
            ],
            p
        )),
        0
    );
    assert_eq!(
        code(&sdnn(
            &[
                "preprocess",
                "--mnist",
                "imgs.idx",
                "--side",
                "64",
                "--out",
                "wide.bin"
            ],
            p
        )),
        0
    );
    for input in ["wide.tsv", "wide.bin"] {
        let out = sdnn(
            &[
                "infer",
                "--model",
                "m",
                "--input",
                input,
                "--categories",
                "c.txt",
            ],
            p,
        );
        assert_eq!(
            code(&out),
            4,
            "{input}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = sdnn(
        &[
            "infer",
            "--model",
            "m",
            "--input",
            "nope.tsv",
            "--categories",
            "c.txt",
        ],
        p,
    );
    assert_eq!(code(&out), 3);
    let out = sdnn(
        &[
            "infer",
            "--model",
            "nope",
            "--input",
            "wide.tsv",
            "--categories",
            "c.txt",
        ],
        p,
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn infer_report_and_env_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&sdnn(
            &[
                "generate",
                "--neurons",
                "1024",
                "--layers",
                "12",
                "--seed",
                "4",
                "--out",
                "m"
            ],
            p
        )),
        0
    );
    assert_eq!(
        code(&sdnn(
            &[
                "preprocess",
                "--mnist",
                common::mnist_path().to_str().unwrap(),
                "--side",
                "32",
                "--out",
                "in.bin",
                "--limit",
                "40"
            ],
            p
        )),
        0
    );
    let out = Command::new(env!("CARGO_BIN_EXE_sdnn"))
        .args([
            "infer",
            "--model",
            "m",
            "--input",
            "in.bin",
            "--categories",
            "c.txt",
            "--report",
            "r.json",
            "--report-format",
            "json",
            "--workers",
            "3",
        ])
        .current_dir(p)
        .env("SDNN_MODE", "pipeline")
        .env("SDNN_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(report[0]["mode"], "pipeline");
    assert_eq!(report[0]["workers"], 3);
    assert_eq!(report[0]["inputs"], 40);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("c.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["mode"], "pipeline");
    assert_eq!(manifest["bias"], -0.3);
    assert_eq!(manifest["seed"], 4);

    // bias override changes the outcome relative to the table value
    let out = sdnn(
        &[
            "infer",
            "--model",
            "m",
            "--input",
            "in.bin",
            "--categories",
            "c2.txt",
            "--bias-override",
            "-5",
        ],
        p,
    );
    assert_eq!(code(&out), 0);
    assert!(fs::read(p.join("c2.txt")).unwrap().is_empty());
}

#[test]
fn convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a.tsv"), "1\t2\t0.5\n3\t1\t-2\n").unwrap();
    assert_eq!(
        code(&sdnn(
            &["convert", "--input", "a.tsv", "--output", "a.bin", "--rows", "4", "--cols", "3"],
            p
        )),
        0
    );
    assert_eq!(
        code(&sdnn(
            &["convert", "--input", "a.bin", "--output", "b.tsv"],
            p
        )),
        0
    );
    assert_eq!(
        fs::read(p.join("a.tsv")).unwrap(),
        fs::read(p.join("b.tsv")).unwrap()
    );
    let m = sdnn::ingest::read_matrix_file(&p.join("a.bin"), None).unwrap();
    assert_eq!((m.n_rows(), m.n_cols()), (4, 3));
    assert_eq!(
        code(&sdnn(
            &["convert", "--input", "a.tsv", "--output", "x.bin", "--rows", "4"],
            p
        )),
        2
    );
}

#[test]
fn bench_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = sdnn(
        &[
            "bench",
            "--neurons",
            "1024",
            "--layers",
            "12",
            "--modes",
            "serial,data_parallel",
            "--workers",
            "1,2,4",
            "--images",
            "30",
            "--out",
            "bench.tsv",
            "--machine",
            "test box",
        ],
        p,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(p.join("bench.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[2], "393216");
        assert_eq!(r[8], "test box");
        assert_eq!(r[9], "ok");
    }
    assert_eq!(
        rows.iter().map(|r| r[7]).collect::<Vec<_>>(),
        ["1", "1", "2", "4"]
    );

    // failing cells are recorded and the run continues
    let out = sdnn(
        &[
            "bench",
            "--neurons",
            "1000,1024",
            "--layers",
            "6",
            "--images",
            "5",
            "--out",
            "b2.tsv",
        ],
        p,
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(p.join("b2.tsv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1000\t6\t0") && !lines[1].ends_with("\tok"));
    assert!(lines[2].ends_with("\tok"));
}
