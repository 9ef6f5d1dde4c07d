use std::path::Path;
use std::process::Command;

use qrnn_cli::runner::{evaluate, result_rows, task_series};
use qrnn_cli::svg::{emit_svg_plot, render_svg, Mark, PlotStyle, Series, PALETTE};
use qrnn_cli::table::{emit_csv, read_csv, Schema, Value};
use qrnn_cli::Task;
use qrnn_core::{QrnnArchitecture, QrnnParameters};

fn qrnn(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qrnn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SMALL: &str = "n_a = 1\nn_b = 1\ndepth = 1\nmax_iterations = 8\nn_seeds = 2\n";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn svg_with_three_points_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.svg");
    let series = [Series {
        label: "x".into(),
        points: vec![(0.0, 0.1), (1.0, 0.4), (2.0, -0.2)],
        color: PALETTE[0],
        mark: Mark::Line,
    }];
    let style = PlotStyle {
        marker_x: Some(1.5),
        ..PlotStyle::default()
    };
    emit_svg_plot(&series, &style, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let boundary = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("boundary"))
        .expect("train/test marker");
    assert_eq!(boundary.attribute("data-x"), Some("1.5"));
    assert!(doc.descendants().any(|n| n.tag_name().name() == "polyline"));
}

#[test]
fn log_axis_has_a_tick_per_decade() {
    let series = [Series {
        label: "mse".into(),
        points: vec![(0.0, 2e-4), (1.0, 3e-2), (2.0, 0.4)],
        color: PALETTE[1],
        mark: Mark::Points,
    }];
    let style = PlotStyle {
        log_y: true,
        ..PlotStyle::default()
    };
    let text = render_svg(&series, &style).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let ticks = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("y-ticks"))
        .unwrap();
    let labels: Vec<String> = ticks
        .descendants()
        .filter(|n| n.tag_name().name() == "text")
        .map(|n| n.text().unwrap_or("").to_string())
        .collect();
    assert_eq!(labels, ["1e-4", "0.001", "0.01", "0.1", "1"]);
}

#[test]
fn result_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let series = task_series(Task::Triangle).unwrap();
    let arch = QrnnArchitecture::uncoupled(1, 1, 1, 0.3).unwrap();
    let init = evaluate(&arch, &QrnnParameters::initial(&arch), &series, 25).unwrap();
    let rows = result_rows(&series, &init, &init);
    let path = dir.path().join("r.csv");
    emit_csv(&rows, &Schema::result(), &path).unwrap();
    let (header, records) = read_csv(&path).unwrap();
    assert_eq!(header, Schema::result().header());
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(&rows) {
        for (field, value) in rec.iter().zip(row) {
            match value {
                Value::Float(v) => assert_eq!(field.parse::<f64>().unwrap().to_bits(), v.to_bits()),
                Value::Int(v) => assert_eq!(field.parse::<u64>().unwrap(), *v),
                Value::Text(s) => assert_eq!(field, s),
                Value::Missing => assert!(field.is_empty()),
            }
        }
    }
    let raw = std::fs::read_to_string(&path).unwrap();
    assert!(!raw.contains('\r'));
}

#[test]
fn demo_is_deterministic_and_reports_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    for out in ["a", "b"] {
        let (code, _, err) = qrnn(&["demo", "--config", &cfg, "--out", out], dir.path());
        assert_eq!(code, 0, "{err}");
    }
    for file in ["result.csv", "seeds.csv", "params.txt", "plot.svg"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let (_, seeds) = read_csv(&dir.path().join("a/seeds.csv")).unwrap();
    assert_eq!(seeds.len(), 2);

    // predict on the saved parameters reproduces the demo output
    let (code, _, err) = qrnn(
        &[
            "predict",
            "--config",
            &cfg,
            "--params",
            "a/params.txt",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        std::fs::read(dir.path().join("a/result.csv")).unwrap(),
        std::fs::read(dir.path().join("p/result.csv")).unwrap()
    );
}

#[test]
fn single_seed_summary_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_seeds = 1\n");
    let (code, _, err) = qrnn(&["demo", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&dir.path().join("o/seeds.csv")).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn spin_result_has_train_and_test_phases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "task = spin\nn_seeds = 1\nmax_iterations = 2\n");
    let (code, _, err) = qrnn(&["demo", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&dir.path().join("o/result.csv")).unwrap();
    assert_eq!(rows.len(), 500);
    assert_eq!(rows.iter().filter(|r| r[4] == "train").count(), 200);
    assert_eq!(rows.iter().filter(|r| r[4] == "test").count(), 300);
}

#[test]
fn initial_output_passes_inputs_through_at_zero_tau() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tau = 0\nn_seeds = 1\nmax_iterations = 1\n");
    let (code, _, err) = qrnn(&["train", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&dir.path().join("o/result.csv")).unwrap();
    for r in rows.iter().filter(|r| r[4] == "train") {
        let (x, y): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn sweep_writes_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "max_iterations = 3\n");
    let (code, out, err) = qrnn(
        &[
            "tau-sweep",
            "--config",
            &cfg,
            "--grid",
            "0,0.2,1",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 3);
    let (header, rows) = read_csv(&dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(header, ["tau", "seed", "mse", "status"]);
    assert_eq!(rows.len(), 3 * 2);
    let taus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[0] <= w[1]));
    let svg = std::fs::read_to_string(dir.path().join("s/sweep.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
}

#[test]
fn grad_check_and_gen_data() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = qrnn(&["grad-check", "--out", "g"], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("single_param_d1_evaluations = 10"));
    assert!(dir.path().join("g/grad_check.txt").exists());

    let (code, _, _) = qrnn(&["gen-data", "--task", "cosine", "--out", "d"], dir.path());
    assert_eq!(code, 0);
    let (_, rows) = read_csv(&dir.path().join("d/data.csv")).unwrap();
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][1], "0.5");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qrnn(&["no-such-command"], dir.path()).0, 2);
    assert_eq!(qrnn(&["demo", "--config", "missing.cfg"], dir.path()).0, 3);
    std::fs::write(dir.path().join("bad.cfg"), "depth = 0\n").unwrap();
    assert_eq!(qrnn(&["demo", "--config", "bad.cfg"], dir.path()).0, 2);
    std::fs::write(dir.path().join("typo.cfg"), "dpeth = 2\n").unwrap();
    let (code, _, err) = qrnn(&["demo", "--config", "typo.cfg"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("dpeth"));
}
