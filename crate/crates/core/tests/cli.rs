//! Drives the `tour` binary end to end.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tour(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tour"))
        .args(args)
        .current_dir(dir)
        .env_remove("DTOUR_PORT")
        .env_remove("DTOUR_UI_DIR")
        .env_remove("DISPLAY")
        .env_remove("WAYLAND_DISPLAY")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Anisotropic 8-column data with a label column, written as CSV.
fn write_data(dir: &Path) -> PathBuf {
    let mut s = String::from("a,b,c,d,e,f,g,h,kind\n");
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for i in 0..400 {
        let row: Vec<String> = [40.0, 12.0, 6.0, 3.0, 1.5, 0.8, 0.4, 0.2]
            .iter()
            .map(|sd| format!("{}", sd * next() + 1.0))
            .collect();
        s += &format!("{},{}\n", row.join(","), ["x", "y"][i % 2]);
    }
    let path = dir.join("data.csv");
    fs::write(&path, s).unwrap();
    path
}

fn read_tour(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_xy(path: &Path) -> Vec<[f64; 2]> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            [rec[0].parse().unwrap(), rec[1].parse().unwrap()]
        })
        .collect()
}

fn build_little(dir: &Path) -> PathBuf {
    write_data(dir);
    let out = tour(
        dir,
        &["build", "--input", "data.csv", "--strategy", "little", "--components", "8", "--labels", "kind", "--output", "little.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("little.json")
}

#[test]
fn little_tour_has_one_keyframe_per_component() {
    let dir = TempDir::new().unwrap();
    let path = build_little(dir.path());
    let tf = read_tour(&path);
    assert_eq!(tf["keyframes"].as_array().unwrap().len(), 8);
    assert_eq!(tf["dims"], 8);
    assert_eq!(tf["keyframes"][0]["label"], "PC1-PC2");
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    write_data(dir.path());
    let out = tour(dir.path(), &["build", "--input", "data.csv", "--strategy", "spiral", "--output", "x.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_reports_violations_and_repairs() {
    let dir = TempDir::new().unwrap();
    let path = build_little(dir.path());
    let out = tour(dir.path(), &["validate", "little.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let mut tf = read_tour(&path);
    let x = tf["keyframes"][3]["basis"][2][0].as_f64().unwrap();
    tf["keyframes"][3]["basis"][2][0] = (x * 1.05 + 0.01).into();
    fs::write(dir.path().join("bad.json"), tf.to_string()).unwrap();
    let out = tour(dir.path(), &["validate", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("keyframe   3"));
    assert!(stderr(&out).contains('3'), "{}", stderr(&out));

    let mut tf = read_tour(&path);
    let x = tf["keyframes"][1]["basis"][0][0].as_f64().unwrap();
    tf["keyframes"][1]["basis"][0][0] = (x + 1e-8).into();
    fs::write(dir.path().join("drift.json"), tf.to_string()).unwrap();
    let out = tour(dir.path(), &["validate", "drift.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("note: keyframes [1]"));
}

#[test]
fn project_at_the_ends_of_a_cyclic_tour_agree() {
    let dir = TempDir::new().unwrap();
    build_little(dir.path());
    for (t, name) in [("0", "p0.csv"), ("1", "p1.csv")] {
        let out = tour(
            dir.path(),
            &["project", "--input", "data.csv", "--labels", "kind", "--tour", "little.json", "--t", t, "--output", name],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let a = read_xy(&dir.path().join("p0.csv"));
    assert_eq!(a, read_xy(&dir.path().join("p1.csv")));

    // The first column dominates the variance, so PC1 scores track its centered values.
    let mut r = csv::Reader::from_path(dir.path().join("data.csv")).unwrap();
    let col: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    let scale = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(&col).map(|(p, v)| p[0] * (v - mean)).sum();
    let norm = a.iter().map(|p| p[0] * p[0]).sum::<f64>().sqrt();
    assert!((dot.abs() / (norm * scale)) > 0.99);
    let x_mean = a.iter().map(|p| p[0]).sum::<f64>() / a.len() as f64;
    assert!(x_mean.abs() < 1e-3);
}

#[test]
fn sequential_tour_from_embedding_directory() {
    let dir = TempDir::new().unwrap();
    let emb = dir.path().join("emb");
    fs::create_dir(&emb).unwrap();
    for k in 0..3 {
        let (s, c) = (0.5 * k as f64).sin_cos();
        let mut text = String::from("u,v\n");
        for i in 0..50 {
            let (x, y) = ((i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.11).cos());
            text += &format!("{},{}\n", c * x - s * y, s * x + c * y);
        }
        fs::write(emb.join(format!("step{k}.csv")), text).unwrap();
    }
    let out = tour(dir.path(), &["build", "--strategy", "sequential", "--embeddings", "emb", "--output", "seq.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let tf = read_tour(&dir.path().join("seq.json"));
    assert_eq!(tf["dims"], 6);
    assert_eq!(tf["keyframes"].as_array().unwrap().len(), 3);
    assert!(dir.path().join(tf["dataset"].as_str().unwrap()).exists());
    let out = tour(dir.path(), &["project", "--tour", "seq.json", "--t", "0.5", "--output", "mid.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_xy(&dir.path().join("mid.csv")).len(), 50);
}

#[test]
fn bench_prints_a_json_report() {
    let dir = TempDir::new().unwrap();
    let out = tour(
        dir.path(),
        &["bench", "--n", "2000", "--p", "5", "--iterations", "3", "--keyframes", "10", "--basis-dims", "8"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["n"], 2000);
    assert!(report["projections_per_second"].as_f64().unwrap() > 0.0);
    assert_eq!(report["basis_at"]["latency_us"]["samples"], 2000);

    let out = tour(dir.path(), &["bench", "--n", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    write_data(dir.path());
    fs::write(
        dir.path().join("dtour.toml"),
        "[build]\ninput = \"data.csv\"\nstrategy = \"grand\"\nlabels = [\"kind\"]\nframes = 5\nseed = 3\noutput = \"g.json\"\n",
    )
    .unwrap();
    let out = tour(dir.path(), &["build"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_tour(&dir.path().join("g.json"))["keyframes"].as_array().unwrap().len(), 5);

    let out = tour(dir.path(), &["build", "--frames", "4", "--output", "h.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_tour(&dir.path().join("h.json"))["keyframes"].as_array().unwrap().len(), 4);
}

#[test]
fn serve_on_a_busy_port_is_an_environment_error() {
    let dir = TempDir::new().unwrap();
    build_little(dir.path());
    let busy = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = busy.local_addr().unwrap().port().to_string();
    let out = tour(
        dir.path(),
        &["serve", "--input", "data.csv", "--labels", "kind", "--tour", "little.json", "--port", &port, "--open"],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn missing_input_file_is_an_environment_error() {
    let dir = TempDir::new().unwrap();
    let out = tour(dir.path(), &["build", "--input", "nope.csv", "--strategy", "little", "--output", "x.json"]);
    assert_eq!(code(&out), 3);
}
