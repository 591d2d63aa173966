use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use belief::simharness::rng_from_seed;
use belief::{generate, Scenario};
use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

fn belief(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belief"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

/// Cell means 1, 0.5, -0.5, -1 in mask order, hence slopes (0, 1/4, 3/4, 0).
const WORKED: &str = "x1,x2,y
1,1,1
1,1,1
0,1,1
0,1,1
0,1,1
0,1,0
1,0,1
1,0,0
1,0,0
1,0,0
0,0,0
0,0,0
";

const BINARY: &str = "x1=binary:1,x2=binary:1";

#[test]
fn fit_worked_fixture_gives_expected_slopes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "w.csv", WORKED);
    let model = dir.path().join("m.json");
    let out = belief(&[
        "fit",
        "--input",
        s(&input),
        "--response",
        "y",
        "--depth",
        BINARY,
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&model);
    assert_eq!(m["P"], 2);
    assert_eq!(m["estimator_kind"], "lse");
    let beta = floats(&m["beta"]);
    for (b, e) in beta.iter().zip([0.0, 0.25, 0.75, 0.0]) {
        assert!((b - e).abs() < 1e-12, "{beta:?}");
    }
    let report = stdout(&out);
    assert!(report.contains("empty cells: none"));
    assert!(report.contains("separation: none"));
    assert!(report.contains("A_{1,1}A_{2,1}"));
}

#[test]
fn fit_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "w.csv", WORKED);
    let run = |name: &str| {
        let model = dir.path().join(name);
        let out = belief(&[
            "fit",
            "--input",
            s(&input),
            "--response",
            "y",
            "--depth",
            "x1=1,x2=1",
            "--output",
            s(&model),
        ]);
        assert_eq!(code(&out), 0);
        (stdout(&out), fs::read_to_string(model).unwrap())
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn separated_fixture_reports_the_event() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "sep.csv",
        "x1,x2,y\n0.1,0.5,1\n0.2,-0.3,1\n-0.4,0.2,0\n-0.8,0.9,0\n0.6,0.1,1\n-0.2,-0.7,0\n",
    );
    let model = dir.path().join("m.json");
    let out = belief(&[
        "fit",
        "--input",
        s(&input),
        "--response",
        "y",
        "--depth",
        "x1=1,x2=1",
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout(&out);
    assert!(report.contains("perfect separation"), "{report}");
    assert!(report.contains("event A_{1,1} = +1"), "{report}");
    assert!(report.contains("degeneracy: case 2"));
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "w.csv", WORKED);
    let model = dir.path().join("m.json");
    let base = ["fit", "--input", s(&input), "--output", s(&model)];

    let missing_response =
        belief(&[&base[..], &["--response", "nope", "--depth", BINARY]].concat());
    assert_eq!(code(&missing_response), 2);
    assert!(String::from_utf8_lossy(&missing_response.stderr).contains("nope"));

    let unknown_predictor = belief(&[&base[..], &["--response", "y", "--depth", "zz=2"]].concat());
    assert_eq!(code(&unknown_predictor), 2);

    let no_expansion = belief(&[&base[..], &["--response", "y"]].concat());
    assert_eq!(code(&no_expansion), 2);

    let ridge_without_lambda = belief(
        &[
            &base[..],
            &["--response", "y", "--depth", BINARY, "--estimator", "ridge"],
        ]
        .concat(),
    );
    assert_eq!(code(&ridge_without_lambda), 2);

    let lambda_without_ridge = belief(
        &[
            &base[..],
            &["--response", "y", "--depth", BINARY, "--lambda", "1"],
        ]
        .concat(),
    );
    assert_eq!(code(&lambda_without_ridge), 2);

    let response_as_predictor =
        belief(&[&base[..], &["--response", "y", "--depth", "y=1,x1=1"]].concat());
    assert_eq!(code(&response_as_predictor), 2);

    let bad_estimator = belief(
        &[
            &base[..],
            &["--response", "y", "--depth", BINARY, "--estimator", "svm"],
        ]
        .concat(),
    );
    assert_eq!(code(&bad_estimator), 2);
    assert!(!model.exists());
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m.json");
    let text = write(&dir, "t.csv", "x1,y\n0.5,1\nabc,0\n");
    let out = belief(&[
        "fit",
        "--input",
        s(&text),
        "--response",
        "y",
        "--depth",
        "x1=1",
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&out), 3);

    let three_levels = write(&dir, "l.csv", "x1,y\n0.5,a\n0.1,b\n0.3,c\n");
    let out = belief(&[
        "fit",
        "--input",
        s(&three_levels),
        "--response",
        "y",
        "--positive-level",
        "a",
        "--depth",
        "x1=1",
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&out), 3);

    let missing = dir.path().join("absent.csv");
    let out = belief(&[
        "fit",
        "--input",
        s(&missing),
        "--response",
        "y",
        "--depth",
        "x1=1",
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn empty_cells_refuse_least_squares_but_not_moore_penrose() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.csv", "x1,x2,y\n1,1,1\n1,0,0\n0,1,1\n1,1,0\n");
    let model = dir.path().join("m.json");
    let args = [
        "fit",
        "--input",
        s(&input),
        "--response",
        "y",
        "--depth",
        BINARY,
        "--output",
        s(&model),
    ];
    let lse = belief(&args);
    assert_eq!(code(&lse), 4);
    assert!(String::from_utf8_lossy(&lse.stderr).contains("--estimator mp"));

    let mp = belief(&[&args[..], &["--estimator", "mp"]].concat());
    assert_eq!(code(&mp), 0);
    let report = stdout(&mp);
    assert!(report.contains("empty cells: 3"), "{report}");
    assert!(report.contains("degeneracy: case 3"));
    assert_eq!(json(&model)["empty_cells"], serde_json::json!([3]));

    let ridge = belief(&[&args[..], &["--estimator", "ridge", "--lambda", "0.5"]].concat());
    assert_eq!(code(&ridge), 0);
    assert_eq!(json(&model)["estimator_kind"], "ridge");

    let infer = belief(&["infer", "--model", s(&model)]);
    assert_eq!(code(&infer), 0);
    assert!(stdout(&infer).contains("partial"));
}

#[test]
fn predict_returns_fitted_cell_expectations() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "w.csv", WORKED);
    let model = dir.path().join("m.json");
    let fit = belief(&[
        "fit",
        "--input",
        s(&input),
        "--response",
        "y",
        "--depth",
        BINARY,
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&fit), 0);
    let newdata = write(&dir, "n.csv", "x2,x1\n1,1\n1,0\n0,1\n0,0\n");
    let pred = dir.path().join("p.csv");
    let out = belief(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&newdata),
        "--output",
        s(&pred),
    ]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_path(&pred).unwrap();
    let rows: Vec<(usize, f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
                r[3].parse().unwrap(),
            )
        })
        .collect();
    let expected = [(0, 1.0), (1, 0.5), (2, -0.5), (3, -1.0)];
    assert_eq!(rows.len(), 4);
    for ((cell, e, p), (ec, ee)) in rows.into_iter().zip(expected) {
        assert_eq!(cell, ec);
        assert!((e - ee).abs() < 1e-12);
        assert!((p - (1.0 + ee) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn expand_writes_sign_bits() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", "x,y\n0.1,1\n0.4,0\n0.2,1\n0.3,0\n");
    let out = belief(&[
        "expand",
        "--input",
        s(&input),
        "--depth",
        "x=2",
        "--response",
        "y",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_1,x_2,cell,y"));
    // Midranks 1..4 of 4 rescale to -0.75, 0.75, -0.25, 0.25.
    assert_eq!(lines.next(), Some("-1,-1,3,1"));
    assert_eq!(lines.next(), Some("1,1,0,-1"));
    assert_eq!(lines.next(), Some("-1,1,1,1"));
    assert_eq!(lines.next(), Some("1,-1,2,-1"));
}

fn sim_csv(dir: &TempDir, scenario: Scenario, n: usize, seed: u64) -> PathBuf {
    let d = generate(scenario, n, seed).unwrap();
    let mut text = String::from("x1,x2,y\n");
    for i in 0..d.len() {
        text.push_str(&format!("{},{},{}\n", d.x1[i], d.x2[i], d.b[i]));
    }
    write(dir, "sim.csv", &text)
}

fn fit_and_infer(dir: &TempDir, input: &Path, depth: &str) -> (Output, Value) {
    let model = dir.path().join("m.json");
    let report = dir.path().join("infer.json");
    let fit = belief(&[
        "fit",
        "--input",
        s(input),
        "--response",
        "y",
        "--depth",
        depth,
        "--output",
        s(&model),
    ]);
    assert_eq!(code(&fit), 0, "{}", String::from_utf8_lossy(&fit.stderr));
    let out = belief(&["infer", "--model", s(&model), "--output", s(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (out, json(&report))
}

fn significant_masks(report: &Value) -> Vec<u64> {
    report["tests"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["significant"] == true)
        .map(|t| t["mask"].as_u64().unwrap())
        .collect()
}

#[test]
fn infer_recovers_the_quadratic_scenario_pattern() {
    let dir = TempDir::new().unwrap();
    let input = sim_csv(&dir, Scenario::Quadratic, 12288, 1000);
    let (out, report) = fit_and_infer(&dir, &input, "x1=2,x2=2");
    assert_eq!(report["status"], "complete");
    assert_eq!(significant_masks(&report), vec![0, 3, 12, 15]);
    assert_eq!(
        report["independence"]["statement"],
        "B ⫫ (A_{1,1},A_{1,2},A_{2,1},A_{2,2}) | (A_{1,1}A_{1,2}, A_{2,1}A_{2,2})"
    );
    assert_eq!(report["independence"]["k"], 2);
    assert!(stdout(&out).contains("independence: B ⫫"));
}

#[test]
fn infer_on_null_data_finds_no_slopes() {
    let dir = TempDir::new().unwrap();
    let mut rng = rng_from_seed(17);
    let mut text = String::from("x1,x2,y\n");
    for _ in 0..4000 {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let y = u8::from(rng.random_bool(0.5));
        text.push_str(&format!("{a},{b},{y}\n"));
    }
    let input = write(&dir, "null.csv", &text);
    let (_, report) = fit_and_infer(&dir, &input, "x1=2,x2=2");
    assert_eq!(report["status"], "complete");
    assert!(significant_masks(&report).iter().all(|&m| m == 0));
    assert_eq!(
        report["independence"]["statement"],
        "B ⫫ (A_{1,1},A_{1,2},A_{2,1},A_{2,2})"
    );
}

#[test]
fn infer_prints_the_single_interaction_statement() {
    let dir = TempDir::new().unwrap();
    // E[B | cell] = 0.5 A1 A2: cells 0 and 3 have mean 0.5, cells 1 and 2 mean -0.5.
    let mut text = String::from("x1,x2,y\n");
    for (x1, x2, ones) in [(1, 1, 150), (0, 1, 50), (1, 0, 50), (0, 0, 150)] {
        for i in 0..200 {
            text.push_str(&format!("{x1},{x2},{}\n", u8::from(i < ones)));
        }
    }
    let input = write(&dir, "ab.csv", &text);
    let (out, report) = fit_and_infer(&dir, &input, BINARY);
    assert_eq!(significant_masks(&report), vec![3]);
    assert_eq!(
        report["independence"]["statement"],
        "B ⫫ (A_{1,1},A_{2,1}) | A_{1,1}A_{2,1}"
    );
    assert!(stdout(&out).contains("independence: B ⫫ (A_{1,1},A_{2,1}) | A_{1,1}A_{2,1}"));
}

#[test]
fn infer_rejects_bad_alpha_and_missing_model() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("none.json");
    assert_eq!(code(&belief(&["infer", "--model", s(&missing)])), 3);
    let input = write(&dir, "w.csv", WORKED);
    let model = dir.path().join("m.json");
    belief(&[
        "fit",
        "--input",
        s(&input),
        "--response",
        "y",
        "--depth",
        BINARY,
        "--output",
        s(&model),
    ]);
    assert_eq!(
        code(&belief(&["infer", "--model", s(&model), "--alpha", "1.5"])),
        2
    );
    let broken = write(&dir, "b.json", "{\"P\": 2}");
    assert_eq!(code(&belief(&["infer", "--model", s(&broken)])), 3);
}

#[test]
fn glm_compare_reports_the_hidden_interaction() {
    let out = belief(&[
        "glm-compare",
        "--link",
        "logit",
        "--intercept",
        "5",
        "--coef",
        "3,3",
        "--depth",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["scale"], "expectation");
    assert_eq!(v["masks"], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(floats(&v["gamma"]), vec![5.0, 1.5, 1.5, 0.0]);
    assert!((floats(&v["beta"])[3] + 0.053_076_5).abs() < 1e-6);

    let unit = belief(&[
        "glm-compare",
        "--intercept",
        "5",
        "--coef",
        "3,3",
        "--weights",
        "unit",
        "--scale",
        "probability",
    ]);
    let v: Value = serde_json::from_str(&stdout(&unit)).unwrap();
    assert_eq!(v["scale"], "probability");
    assert!((floats(&v["beta"])[3] + 0.179_422_4).abs() < 1e-6);
}

#[test]
fn glm_compare_round_trips_between_gamma_and_beta() {
    let out = belief(&[
        "glm-compare",
        "--link",
        "probit",
        "--gamma",
        "0.4,-0.3,0.2,0.1",
    ]);
    assert_eq!(code(&out), 0);
    let beta = floats(&serde_json::from_str::<Value>(&stdout(&out)).unwrap()["beta"]);
    let joined = beta
        .iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let back = belief(&["glm-compare", "--link", "probit", "--beta", &joined]);
    assert_eq!(code(&back), 0);
    let gamma = floats(&serde_json::from_str::<Value>(&stdout(&back)).unwrap()["gamma"]);
    for (g, e) in gamma.iter().zip([0.4, -0.3, 0.2, 0.1]) {
        assert!((g - e).abs() < 1e-9, "{gamma:?}");
    }
}

#[test]
fn glm_compare_errors() {
    let separated = belief(&["glm-compare", "--beta", "0,0.25,0.75,0"]);
    assert_eq!(code(&separated), 4);
    let both = belief(&["glm-compare", "--gamma", "0,0", "--beta", "0,0"]);
    assert_eq!(code(&both), 2);
    let neither = belief(&["glm-compare"]);
    assert_eq!(code(&neither), 2);
    let length = belief(&["glm-compare", "--gamma", "0,0,0"]);
    assert_eq!(code(&length), 2);
    let link = belief(&["glm-compare", "--link", "cauchit", "--gamma", "0,0"]);
    assert_eq!(code(&link), 2);
}

#[test]
fn simulate_is_reproducible_and_writes_roc() {
    let dir = TempDir::new().unwrap();
    let run = |json: &str, roc: &str| {
        let (j, r) = (dir.path().join(json), dir.path().join(roc));
        let out = belief(&[
            "simulate",
            "--scenario",
            "1",
            "--seed",
            "7",
            "--n-train",
            "2000",
            "--n-test",
            "1000",
            "--output",
            s(&j),
            "--roc",
            s(&r),
        ]);
        assert_eq!(code(&out), 0);
        (
            fs::read_to_string(j).unwrap(),
            fs::read_to_string(r).unwrap(),
        )
    };
    let a = run("a.json", "a.csv");
    assert_eq!(a, run("b.json", "b.csv"));
    let v: Value = serde_json::from_str(&a.0).unwrap();
    let methods: Vec<&str> = v["auc"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["belief-d1", "belief-d2", "belief-d3", "logistic"]);
    assert!(a.1.starts_with("method,fpr,tpr\n"));
    assert!(a.1.contains("logistic,1,1"));
}

#[test]
fn simulate_quadratic_scenario_beats_logistic() {
    let out = belief(&[
        "simulate",
        "--scenario",
        "2",
        "--seed",
        "7",
        "--depths",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let auc = |name: &str| {
        v["auc"]
            .as_array()
            .unwrap()
            .iter()
            .find(|m| m["method"] == name)
            .unwrap()["auc"]
            .as_f64()
            .unwrap()
    };
    assert!(auc("belief-d2") > auc("logistic") + 0.1);
}

#[test]
fn simulate_rejects_unknown_scenario() {
    let out = belief(&["simulate", "--scenario", "9"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));
}
