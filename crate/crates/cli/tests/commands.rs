use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn hcsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcsos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("hcsos-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, content: &str) -> String {
        let p = self.0.join(name);
        fs::write(&p, content).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> String {
        self.0.join(name).to_str().unwrap().to_string()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

const MOTZKIN: &str = "x1^4*x2^2 + x1^2*x2^4 - x1^2*x2^2 + 1/27";

fn csv_cells(text: &str) -> Vec<(u32, u32, String)> {
    let mut lines = text.lines();
    let header: Vec<u32> = lines
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|h| h.trim_start_matches("d=").parse().unwrap())
        .collect();
    let mut out = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        let r: u32 = fields.next().unwrap().parse().unwrap();
        for (d, f) in header.iter().zip(fields) {
            if !f.is_empty() {
                out.push((r, *d, f.to_string()));
            }
        }
    }
    out
}

#[test]
fn theta_table_univariate() {
    let o = hcsos(&["theta-table", "--n", "1", "--d", "1..3", "--r", "1..5"]);
    assert!(o.status.success());
    let cells = csv_cells(&stdout(&o));
    // upper-triangular: 1 + 2 + 3 + 3 + 3
    assert_eq!(cells.len(), 12);
    let reference = [
        (1, 1, 0.5000),
        (2, 1, 0.2929),
        (2, 2, 0.5556),
        (3, 1, 0.1910),
        (3, 2, 0.5001),
        (3, 3, 0.6001),
        (4, 1, 0.1340),
        (4, 2, 0.3320),
        (4, 3, 0.5284),
        (5, 1, 0.0991),
        (5, 2, 0.2929),
        (5, 3, 0.5001),
    ];
    for ((r, d, text), (pr, pd, want)) in cells.iter().zip(reference) {
        assert_eq!((*r, *d), (pr, pd));
        assert_eq!(
            text.split('.').nth(1).unwrap().len(),
            4,
            "4 decimals: {text}"
        );
        let v: f64 = text.parse().unwrap();
        assert!((v - want).abs() <= 1e-3, "(r={r},d={d}) {v} vs {want}");
    }
    let exact = cells.iter().find(|(r, d, _)| (*r, *d) == (2, 2)).unwrap();
    assert_eq!(exact.2, "0.5556");
}

#[test]
fn theta_table_bivariate_cell_and_absent_cells() {
    let o = hcsos(&["theta-table", "--n", "2", "--d", "1", "--r", "2"]);
    assert!(o.status.success());
    let cells = csv_cells(&stdout(&o));
    assert_eq!(cells.len(), 1);
    let v: f64 = cells[0].2.parse().unwrap();
    assert!((v - 0.5001).abs() <= 2e-3);

    let o = hcsos(&["theta-table", "--n", "1", "--d", "5", "--r", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "r,d=5\n3,\n");
}

#[test]
fn theta_table_is_deterministic() {
    let args = ["theta-table", "--n", "2", "--d", "1..3", "--r", "1..3"];
    let one = hcsos(&[&args[..], &["--jobs", "1"]].concat());
    let again = hcsos(&[&args[..], &["--jobs", "1"]].concat());
    let four = hcsos(&[&args[..], &["--jobs", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn theta_table_json_and_out_file() {
    let dir = Scratch::new("table");
    let out = dir.path("t.json");
    let o = hcsos(&[
        "theta-table",
        "--n",
        "1",
        "--d",
        "1..2",
        "--r",
        "2",
        "--format",
        "json",
        "--out",
        &out,
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["d"], 2);
    assert_eq!(rows[1]["status"], "ok");
    assert!((rows[1]["bound"].as_f64().unwrap() - 0.5556).abs() < 1e-3);
}

#[test]
fn theta_table_timeouts_are_marked() {
    let o = hcsos(&[
        "theta-table",
        "--n",
        "2",
        "--d",
        "1",
        "--r",
        "1..2",
        "--time-budget",
        "1e-9",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "r,d=1\n1,—\n2,—\n");
}

#[test]
fn theta_table_dimension_guard() {
    let o = hcsos(&["theta-table", "--n", "4", "--d", "1", "--r", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hcsos(&[
        "theta-table",
        "--n",
        "5",
        "--d",
        "1",
        "--r",
        "1",
        "--allow-large-n",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = hcsos(&[
        "theta-table",
        "--n",
        "4",
        "--d",
        "1",
        "--r",
        "1",
        "--allow-large-n",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let v: f64 = csv_cells(&stdout(&o))[0].2.parse().unwrap();
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn lower_bound_outputs() {
    let dir = Scratch::new("lb");
    let x = dir.file("x.txt", "x1\n");
    let o = hcsos(&["lower-bound", &x, "--r", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("-1.000000"), "{text}");
    assert!(text.contains("Optimal"));
    assert!(text.contains("a-priori Jackson bound"));

    let o = hcsos(&["lower-bound", &x, "--r", "0"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.file("bad.txt", "x1 +* 2");
    assert_eq!(
        hcsos(&["lower-bound", &bad, "--r", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        hcsos(&["lower-bound", &dir.path("missing"), "--r", "2"])
            .status
            .code(),
        Some(1)
    );

    let m = dir.file("m.txt", MOTZKIN);
    let gram = dir.path("gram.json");
    let o = hcsos(&[
        "lower-bound",
        &m,
        "--r",
        "6",
        "--scheme",
        "plusminus",
        "--out",
        &gram,
    ]);
    assert!(o.status.success());
    let line = stdout(&o).lines().next().unwrap().to_string();
    let v: f64 = line.trim_start_matches("lower bound: ").parse().unwrap();
    assert!(v.abs() < 1e-5, "{line}");
    let dump: Value = serde_json::from_str(&fs::read_to_string(&gram).unwrap()).unwrap();
    assert_eq!(dump["blocks"].as_array().unwrap().len(), 16);
}

#[test]
fn certify_and_verify() {
    let dir = Scratch::new("cert");
    let p = dir.file(
        "p.json",
        r#"{"nvars":2,"basis":"chebyshev","terms":[{"alpha":[1,1],"c":1.0}]}"#,
    );
    let cert = dir.path("c.json");
    let o = hcsos(&["certify-norm", &p, "--out", &cert]);
    assert!(o.status.success());
    let residual: f64 = stdout(&o)
        .trim()
        .trim_start_matches("residual: ")
        .parse()
        .unwrap();
    assert!(residual < 1e-10);
    assert!(hcsos(&["verify-certificate", &cert]).status.success());

    // corrupt one weight
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    v["summands"][0]["sos"][0]["w"] = Value::from(0.75);
    let bad = dir.file("bad.json", &v.to_string());
    let o = hcsos(&["verify-certificate", &bad]);
    assert_eq!(o.status.code(), Some(3));
    let residual: f64 = stdout(&o)
        .trim()
        .trim_start_matches("residual: ")
        .parse()
        .unwrap();
    assert!(residual > 0.1);

    let garbage = dir.file("g.json", "{\"target\": 3}");
    assert_eq!(
        hcsos(&["verify-certificate", &garbage]).status.code(),
        Some(1)
    );

    let c = dir.file("const.txt", "3");
    let o = hcsos(&["certify-norm", &c]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["summands"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual: 0.000e0"));
}

#[test]
fn jackson_smooth_scales_coefficients() {
    let dir = Scratch::new("smooth");
    // x = T_1; the degree-1 kernel has λ_1 = cos(π/3) = 1/2
    let x = dir.file("x.txt", "x1");
    let o = hcsos(&["jackson-smooth", &x, "--r", "1", "--format", "json"]);
    assert!(o.status.success());
    let p: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let terms = p["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[0]["alpha"], serde_json::json!([1]));
    assert!((terms[0]["c"].as_f64().unwrap() - 0.5).abs() < 1e-15);

    // T_2 lies outside the degree-1 kernel
    let q = dir.file("q.txt", "x1^2");
    assert_eq!(
        hcsos(&["jackson-smooth", &q, "--r", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn rho_values() {
    let dir = Scratch::new("rho");
    let m = dir.file("m.txt", MOTZKIN);
    let read = |o: &Output| -> f64 {
        let text = stdout(o);
        text.lines()
            .next()
            .unwrap()
            .trim_start_matches("rho: ")
            .parse()
            .unwrap()
    };
    let o = hcsos(&["rho", &m, "--d", "3"]);
    assert!(o.status.success());
    let r = read(&o);
    assert!((1.4e-2..=1.8e-2).contains(&r), "{r}");
    let o = hcsos(&["rho", &m, "--d", "5"]);
    let r = read(&o);
    assert!((6e-5..=1e-4).contains(&r), "{r}");

    // (x1 - x2)² + x1²
    let s = dir.file("s.txt", "2*x1^2 - 2*x1*x2 + x2^2");
    for d in ["1", "2"] {
        let o = hcsos(&["rho", &s, "--d", d]);
        assert!(o.status.success());
        assert!(read(&o).abs() < 1e-7);
    }
    assert_eq!(hcsos(&["rho", &m, "--d", "2"]).status.code(), Some(1));
}
