use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn ma(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ma")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, value.to_string()).unwrap();
    p
}

fn square() -> Value {
    json!({"type": "square", "min": -1.0, "max": 1.0})
}

fn quadratic_problem(extra: Value) -> Value {
    let mut v = json!({
        "domain": square(),
        "N": 8,
        "measure": {"density": {"name": "constant", "value": 1.0}},
        "boundary": {"name": "quadratic"},
        "solver": {"sweep": "gauss_seidel"}
    });
    for (k, x) in extra.as_object().unwrap() {
        v[k] = x.clone();
    }
    v
}

fn cone_problem() -> Value {
    json!({
        "domain": square(),
        "measure": {"diracs": [{"location": [0.0, 0.0], "mass": std::f64::consts::PI}]},
        "boundary": {"name": "cone"},
        "solver": {"sweep": "gauss_seidel"}
    })
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "q.json", &quadratic_problem(json!({})));
    let out = dir.path().join("out");
    let (code, _, err) = ma(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    let (header, rows) = read_csv(&out.join("solution.csv"));
    assert_eq!(header, ["x", "y", "u"]);
    assert_eq!(rows.len(), 81);
    for r in &rows {
        let (x, y, u) = (num(&r[0]), num(&r[1]), num(&r[2]));
        assert!((u - 0.5 * (x * x + y * y)).abs() < 1e-6);
        // 17 significant digits
        assert_eq!(r[2].split('e').next().unwrap().trim_start_matches('-').len(), 18);
    }
    let (header, rows) = read_csv(&out.join("measures.csv"));
    assert_eq!(header, ["x", "y", "m"]);
    assert_eq!(rows.len(), 49);
    assert!(rows.iter().all(|r| (num(&r[2]) - 1.0 / 16.0).abs() < 1e-8));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], true);
    assert_eq!(report["report"]["stability"]["satisfied"], true);
    // defaulted fields are echoed
    assert_eq!(report["config"]["solver"]["max_iter"], 200000);
    assert_eq!(report["config"]["solver"]["operator"], "ma2");
    assert!(report["config"]["solver"]["tol"].is_f64());
    assert_eq!(report["config"]["h"], 0.25);
    assert!(report["versions"]["ma-core"].is_string());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cases = [
        (quadratic_problem(json!({"N": null, "h": -0.5})), "h must be positive"),
        (quadratic_problem(json!({"h": 0.5})), "exactly one of h and N"),
        (quadratic_problem(json!({"solvr": {}})), "solvr"),
        (quadratic_problem(json!({"solver": {"nu": 0.1, "sweeep": 1}})), "sweeep"),
        (quadratic_problem(json!({"boundary": {"name": "paraboloid"}})), "paraboloid"),
    ];
    for (cfg, needle) in cases {
        let path = write(dir.path(), "bad.json", &cfg);
        let (code, _, err) = ma(&["solve", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 1, "{cfg}");
        assert!(err.contains(needle), "{err} lacks {needle}");
    }
    let (code, _, _) = ma(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 1);
}

#[test]
fn non_convergence_exits_with_two_and_still_reports() {
    let dir = TempDir::new().unwrap();
    let mut cfg = cone_problem();
    cfg["h"] = json!(0.125);
    cfg["solver"] = json!({"max_iter": 1});
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let (code, _, _) = ma(&["solve", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], false);
    assert_eq!(report["report"]["iterations"], 1);
}

#[test]
fn study_of_the_quadratic_is_exact() {
    let dir = TempDir::new().unwrap();
    let mut base = quadratic_problem(json!({}));
    base.as_object_mut().unwrap().remove("N");
    let study = json!({
        "base": base,
        "h_list": [0.5, 0.25, 0.125],
        "compact_subset": {"min": [-0.5, -0.5], "max": [0.5, 0.5]},
        "reference": {"name": "quadratic"}
    });
    let path = write(dir.path(), "s.json", &study);
    let out = dir.path().join("out");
    let (code, _, err) = ma(&["study", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out.join("convergence.csv"));
    assert_eq!(header, ["h", "max_err_K", "measure_gap", "iters", "runtime_s"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| num(&r[1]) <= 1e-5));
}

#[test]
fn study_config_errors() {
    let dir = TempDir::new().unwrap();
    let mut base = quadratic_problem(json!({}));
    base.as_object_mut().unwrap().remove("N");
    let k = json!({"min": [-0.5, -0.5], "max": [0.5, 0.5]});
    let cases = [
        json!({"base": base, "h_list": [], "compact_subset": k, "reference": {"name": "quadratic"}}),
        json!({"base": base, "h_list": [0.25, 0.5], "compact_subset": k, "reference": {"name": "quadratic"}}),
        json!({"base": base, "h_list": [0.25], "compact_subset": {"min": [-1.0, -1.0], "max": [0.0, 0.0]}, "reference": {"name": "quadratic"}}),
        json!({"base": quadratic_problem(json!({})), "h_list": [0.25], "compact_subset": k, "reference": {"name": "quadratic"}}),
    ];
    for cfg in cases {
        let path = write(dir.path(), "s.json", &cfg);
        let (code, _, _) = ma(&["study", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 1, "{cfg}");
    }
}

fn operator(cfg: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec!["operator", "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, stdout, _) = ma(&args);
    (code, serde_json::from_str(&stdout).unwrap_or(Value::Null))
}

#[test]
fn operator_records() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "o.json", &json!({"domain": square(), "h": 1.0, "boundary": {"name": "cone"}}));
    let (code, rec) = operator(&cfg, &["--point", "0,0"]);
    assert_eq!(code, 0);
    let octagon = 8.0 * (2f64.sqrt() - 1.0);
    assert!((rec["ma0"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!((rec["ma1"].as_f64().unwrap() - octagon).abs() < 1e-12);
    assert!((rec["ma2"].as_f64().unwrap() - octagon).abs() < 1e-12);
    assert!((rec["nine_point_product"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    let (_, rec) = operator(&cfg, &["--point", "0,0", "--function", "quadratic"]);
    assert!((rec["ma1"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((rec["ma2"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let fine = write(dir.path(), "f.json", &json!({"domain": square(), "h": 0.25, "boundary": {"name": "cone"}}));
    let (_, rec) = operator(&fine, &["--point=-2,1", "--function", r#"{"name": "affine", "b": [0.3, -2.0], "c": 1.0}"#]);
    for key in ["ma0", "ma1", "ma2", "ma3", "nine_point_product", "lambda1"] {
        assert!(rec[key].as_f64().unwrap().abs() < 1e-12, "{key}: {}", rec[key]);
    }

    let (_, rec) = operator(&fine, &["--point", "0,0", "--operator", "ma1"]);
    assert!(rec["ma1"].is_f64() && rec["ma2"].is_null());

    let (code, _) = operator(&fine, &["--point", "4,0"]);
    assert_eq!(code, 1);
}

#[test]
fn measure_checks() {
    let dir = TempDir::new().unwrap();
    let around = json!([{"min": [-0.3, -0.3], "max": [0.3, 0.3]}, {"min": [2.0, 2.0], "max": [3.0, 3.0]}]);
    let mut base = cone_problem();
    base["boxes"] = around;
    // the gaps are residual-sized, so the tolerance must shrink with h
    base["solver"] = json!({"sweep": "gauss_seidel", "epsilon": 0.0, "tol": 1e-7});
    let study = json!({
        "base": base,
        "h_list": [0.25, 0.125, 0.0625],
        "compact_subset": {"min": [-0.5, -0.5], "max": [0.5, 0.5]},
        "reference": {"name": "cone"},
        "tol_exponent": 2.0
    });
    let path = write(dir.path(), "m.json", &study);
    let out = dir.path().join("out");
    let (code, _, err) = ma(&["measure-check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out.join("weak_convergence.csv"));
    assert_eq!(header, ["h", "box", "measured", "expected", "gap"]);
    let origin: Vec<f64> = rows.iter().filter(|r| r[1].starts_with("[-0.3")).map(|r| num(&r[4])).collect();
    assert_eq!(origin.len(), 3);
    assert!(origin.windows(2).all(|w| w[1] < w[0]), "{origin:?}");
    for r in rows.iter().filter(|r| r[1].starts_with("[2")) {
        assert_eq!((num(&r[2]), num(&r[3])), (0.0, 0.0));
    }

    // zero data with affine boundary values
    let zero = json!({
        "domain": square(), "h": 0.25,
        "boundary": {"name": "affine", "b": [1.0, 2.0]},
        "boxes": [{"min": [-1.0, -1.0], "max": [1.0, 1.0]}]
    });
    let path = write(dir.path(), "z.json", &zero);
    let (code, _, _) = ma(&["measure-check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (_, rows) = read_csv(&out.join("weak_convergence.csv"));
    assert!(rows.iter().all(|r| num(&r[2]) <= 1e-8));

    // a box whose edge passes through the point mass
    let mut cut = cone_problem();
    cut["h"] = json!(0.25);
    cut["boxes"] = json!([{"min": [0.0, -0.5], "max": [0.5, 0.5]}]);
    let path = write(dir.path(), "cut.json", &cut);
    let (code, _, err) = ma(&["measure-check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("Dirac"), "{err}");

    // no boxes at all
    let mut none = cone_problem();
    none["h"] = json!(0.25);
    let path = write(dir.path(), "none.json", &none);
    let (code, _, _) = ma(&["measure-check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn oracle_area_of_the_octagon() {
    let dir = TempDir::new().unwrap();
    let s = 2f64.sqrt();
    let slabs = json!([
        {"e": [1.0, 0.0], "lower": -1.0, "upper": 1.0},
        {"e": [0.0, 1.0], "lower": -1.0, "upper": 1.0},
        {"e": [1.0, 1.0], "lower": -s, "upper": s},
        {"e": [1.0, -1.0], "lower": -s, "upper": s}
    ]);
    let path = write(dir.path(), "slabs.json", &slabs);
    let (code, stdout, _) = ma(&["oracle-area", "--constraints", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let rec: Value = serde_json::from_str(&stdout).unwrap();
    let exact = 8.0 * (s - 1.0);
    assert!((rec["exact"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert!((rec["oracle"].as_f64().unwrap() - exact).abs() < 1e-3);

    let path = write(dir.path(), "diag.json", &json!([{"e": [1.0, 1.0], "lower": 0.0, "upper": 1.0}]));
    let (code, _, _) = ma(&["oracle-area", "--constraints", path.to_str().unwrap()]);
    assert_eq!(code, 1);
}
